#include "heavytail/learning_problem.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "heavytail/errors.hpp"
#include "heavytail/format.hpp"

namespace heavytail {

namespace {

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::Absolute: return "absolute";
        case LossKind::Squared: return "squared";
        case LossKind::ZeroOne: return "zero_one";
    }
    return "?";
}

int sign_of(double t) { return t > 0.0 ? 1 : -1; }

// Folded normal moments E[|W|^k] for W ~ N(m, s^2), k = 1 and 3.
double folded_abs1(double m, double s) {
    return s * std::sqrt(2.0 / M_PI) * std::exp(-m * m / (2.0 * s * s)) +
           m * std::erf(m / (s * std::sqrt(2.0)));
}
double folded_abs3(double m, double s) {
    return (m * m * m + 3.0 * m * s * s) * std::erf(m / (s * std::sqrt(2.0))) +
           std::sqrt(2.0 / M_PI) * s * (m * m + 2.0 * s * s) *
               std::exp(-m * m / (2.0 * s * s));
}

// Highest power of |z| whose expectation the loss moments need: the third
// loss moment of |theta - z| touches E|z|^3, of (theta - z)^2 touches
// E[z^6], and the 0/1 loss is bounded.
int required_data_power(LossKind loss) {
    switch (loss) {
        case LossKind::Absolute: return 3;
        case LossKind::Squared: return 6;
        case LossKind::ZeroOne: return 0;
    }
    return 0;
}

// Throws CapabilityError if E|z|^power is infinite for the family.
void require_finite_data_moment(const DistributionSpec& d, LossKind loss) {
    const int p = required_data_power(loss);
    if (p == 0) return;
    const char* fix = nullptr;
    if (d.family == Family::Pareto && d.b <= p) fix = "alpha";
    if (d.family == Family::StudentT && d.a <= p) fix = "nu";
    if (fix)
        throw CapabilityError(std::string("loss moments for ") + loss_name(loss) +
                              " loss require E|z|^" + std::to_string(p) +
                              " < inf, which fails for " + d.describe() +
                              " (needs " + fix + " > " + std::to_string(p) + ")");
}

} // namespace

double loss_value(LossKind kind, double theta, double z) {
    switch (kind) {
        case LossKind::Absolute: return std::abs(theta - z);
        case LossKind::Squared: return (theta - z) * (theta - z);
        case LossKind::ZeroOne: return sign_of(z - theta) != sign_of(z) ? 1.0 : 0.0;
    }
    return 0.0;
}

void LearningProblem::validate() const {
    data.validate();
    if (grid.empty()) throw ConfigError("LearningProblem: hypothesis grid is empty");
    for (double t : grid)
        if (!std::isfinite(t))
            throw ConfigError("LearningProblem: grid entries must be finite");
}

std::string LearningProblem::describe() const {
    return std::string(loss_name(loss)) + "|" + data.describe();
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count == 0) throw std::invalid_argument("linspace: count must be positive");
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
        throw std::invalid_argument("linspace: need finite lo <= hi");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
}

std::optional<LossMoments> closed_form_moments(const LearningProblem& p, double theta) {
    p.data.validate();
    if (!std::isfinite(theta))
        throw std::invalid_argument("closed_form_moments: theta must be finite");
    require_finite_data_moment(p.data, p.loss);

    const DistributionSpec& d = p.data;

    // Finitely supported data: enumerate atoms, exact for every loss.
    if (auto at = d.atoms()) {
        LossMoments m;
        for (const Atom& a : *at) {
            const double l = loss_value(p.loss, theta, a.value);
            m.risk += a.mass * l;
            m.m2 += a.mass * l * l;
            m.m3 += a.mass * l * l * l;
        }
        m.variance = m.m2 - m.risk * m.risk;
        return m;
    }

    switch (p.loss) {
        case LossKind::ZeroOne: {
            auto f_theta = d.cdf(theta);
            auto f_zero = d.cdf(0.0);
            if (!f_theta || !f_zero) return std::nullopt;
            LossMoments m;
            m.risk = std::abs(*f_theta - *f_zero);
            m.m2 = m.risk;  // the loss is its own square
            m.m3 = m.risk;
            m.variance = m.risk * (1.0 - m.risk);
            return m;
        }
        case LossKind::Squared: {
            // E[(theta - z)^k] by binomial expansion; requirements above
            // guarantee the raw moments exist.
            auto central = [&](int k) {
                double acc = 0.0, sign = 1.0, choose = 1.0;
                for (int j = 0; j <= k; ++j) {
                    auto mj = d.raw_moment(j);
                    if (!mj) return std::optional<double>{};
                    acc += choose * sign * std::pow(theta, k - j) * *mj;
                    choose = choose * (k - j) / (j + 1);
                    sign = -sign;
                }
                return std::optional<double>{acc};
            };
            auto r = central(2), m2 = central(4), m3 = central(6);
            if (!r || !m2 || !m3) return std::nullopt;
            return LossMoments{*r, *m2, *m3, *m2 - *r * *r};
        }
        case LossKind::Absolute: {
            if (d.family == Family::Normal) {
                const double m = theta - (d.a + d.shift), s = d.b;
                LossMoments out;
                out.risk = folded_abs1(m, s);
                out.m2 = m * m + s * s;
                out.m3 = folded_abs3(m, s);
                out.variance = out.m2 - out.risk * out.risk;
                return out;
            }
            // Split E|theta - z|^k at z = theta using partial moments:
            //   E|theta - z|   = 2 theta F - 2 P1 + M1 - theta
            //   E(theta - z)^2 = theta^2 - 2 theta M1 + M2
            //   E|theta - z|^3 = 2 (theta^3 F - 3 theta^2 P1 + 3 theta P2 - P3)
            //                    - (theta^3 - 3 theta^2 M1 + 3 theta M2 - M3)
            auto F = d.cdf(theta);
            auto M1 = d.raw_moment(1), M2 = d.raw_moment(2), M3 = d.raw_moment(3);
            auto P1 = d.partial_raw_moment(1, theta);
            auto P2 = d.partial_raw_moment(2, theta);
            auto P3 = d.partial_raw_moment(3, theta);
            if (!F || !M1 || !M2 || !M3 || !P1 || !P2 || !P3) return std::nullopt;
            LossMoments out;
            out.risk = 2.0 * theta * *F - 2.0 * *P1 + *M1 - theta;
            out.m2 = theta * theta - 2.0 * theta * *M1 + *M2;
            out.m3 = 2.0 * (theta * theta * theta * *F - 3.0 * theta * theta * *P1 +
                            3.0 * theta * *P2 - *P3) -
                     (theta * theta * theta - 3.0 * theta * theta * *M1 +
                      3.0 * theta * *M2 - *M3);
            out.variance = out.m2 - out.risk * out.risk;
            return out;
        }
    }
    return std::nullopt;
}

MomentProvider::MomentProvider(LearningProblem problem)
    : MomentProvider(std::move(problem), Options()) {}

MomentProvider::MomentProvider(LearningProblem problem, Options opt)
    : problem_(std::move(problem)), opt_(std::move(opt)) {
    problem_.validate();
    if (opt_.samples == 0)
        throw ConfigError("MomentProvider: samples must be positive");

    const std::size_t H = problem_.grid.size();
    table_.resize(H);

    // Closed-form path: availability is a property of (loss, family), so
    // probing the first hypothesis decides for the whole grid.
    if (auto first = closed_form_moments(problem_, problem_.grid[0])) {
        closed_form_ = true;
        table_[0] = *first;
        for (std::size_t h = 1; h < H; ++h)
            table_[h] = *closed_form_moments(problem_, problem_.grid[h]);
        return;
    }

    // Monte Carlo path with a disk cache.
    mc_.resize(H);
    nlohmann::json cache;
    if (!opt_.cache_path.empty()) {
        std::ifstream in(opt_.cache_path);
        if (in) {
            try {
                in >> cache;
            } catch (const nlohmann::json::exception&) {
                cache = nlohmann::json::object();  // corrupt cache: recompute
            }
        }
    }
    if (!cache.contains("entries") || cache.value("version", "") != kGeneratorVersion)
        cache = {{"version", std::string(kGeneratorVersion)}, {"entries", nlohmann::json::object()}};

    auto key_of = [&](double theta) {
        return fnv1a64_hex(problem_.describe() + "|theta=" + format_double(theta) +
                           "|seed=" + std::to_string(opt_.seed) +
                           "|n=" + std::to_string(opt_.samples));
    };

    std::vector<std::size_t> missing;
    for (std::size_t h = 0; h < H; ++h) {
        const auto key = key_of(problem_.grid[h]);
        if (cache["entries"].contains(key)) {
            const auto& e = cache["entries"][key];
            mc_[h].moments = {e["risk"], e["m2"], e["m3"], e["variance"]};
            mc_[h].se_risk = e["se_risk"];
            mc_[h].se_m2 = e["se_m2"];
            mc_[h].se_m3 = e["se_m3"];
            mc_[h].samples = e["samples"];
            mc_[h].from_cache = true;
            table_[h] = mc_[h].moments;
        } else {
            missing.push_back(h);
        }
    }

    if (!missing.empty()) {
        // One streaming pass over the draws, all missing hypotheses at
        // once.  Long-double accumulators keep 10^7-term sums honest.
        struct Acc {
            long double l = 0, l2 = 0, l3 = 0, l4 = 0, l6 = 0;
        };
        std::vector<Acc> acc(missing.size());
        Sampler draw(problem_.data, Xoshiro256pp(opt_.seed, 0));
        for (std::size_t i = 0; i < opt_.samples; ++i) {
            const double z = draw();
            for (std::size_t j = 0; j < missing.size(); ++j) {
                const double l = loss_value(problem_.loss, problem_.grid[missing[j]], z);
                const double l2 = l * l, l3 = l2 * l;
                acc[j].l += l;
                acc[j].l2 += l2;
                acc[j].l3 += l3;
                acc[j].l4 += l2 * l2;
                acc[j].l6 += l3 * l3;
            }
        }
        const double N = static_cast<double>(opt_.samples);
        for (std::size_t j = 0; j < missing.size(); ++j) {
            const std::size_t h = missing[j];
            const double e1 = static_cast<double>(acc[j].l / N);
            const double e2 = static_cast<double>(acc[j].l2 / N);
            const double e3 = static_cast<double>(acc[j].l3 / N);
            const double e4 = static_cast<double>(acc[j].l4 / N);
            const double e6 = static_cast<double>(acc[j].l6 / N);
            mc_[h].moments = {e1, e2, e3, e2 - e1 * e1};
            mc_[h].se_risk = std::sqrt(std::max(0.0, e2 - e1 * e1) / N);
            mc_[h].se_m2 = std::sqrt(std::max(0.0, e4 - e2 * e2) / N);
            mc_[h].se_m3 = std::sqrt(std::max(0.0, e6 - e3 * e3) / N);
            mc_[h].samples = opt_.samples;
            table_[h] = mc_[h].moments;

            cache["entries"][key_of(problem_.grid[h])] = {
                {"problem", problem_.describe()},
                {"theta", problem_.grid[h]},
                {"seed", opt_.seed},
                {"samples", opt_.samples},
                {"risk", e1},
                {"m2", e2},
                {"m3", e3},
                {"variance", e2 - e1 * e1},
                {"se_risk", mc_[h].se_risk},
                {"se_m2", mc_[h].se_m2},
                {"se_m3", mc_[h].se_m3},
            };
        }
        if (!opt_.cache_path.empty()) {
            // Temp-file-then-rename keeps concurrent readers away from
            // half-written JSON.
            auto tmp = opt_.cache_path;
            tmp += ".tmp";
            {
                std::ofstream out(tmp);
                if (!out)
                    throw ConfigError("MomentProvider: cannot write cache file " +
                                      tmp.string());
                out << cache.dump(1) << '\n';
            }
            std::filesystem::rename(tmp, opt_.cache_path);
        }
    }
}

const LossMoments& MomentProvider::moments(std::size_t h) const {
    if (h >= table_.size())
        throw std::out_of_range("MomentProvider::moments: hypothesis index out of range");
    return table_[h];
}

std::optional<McMoments> MomentProvider::mc_info(std::size_t h) const {
    if (h >= table_.size())
        throw std::out_of_range("MomentProvider::mc_info: hypothesis index out of range");
    if (closed_form_) return std::nullopt;
    return mc_[h];
}

std::vector<double> MomentProvider::risks() const {
    std::vector<double> out(table_.size());
    for (std::size_t h = 0; h < table_.size(); ++h) out[h] = table_[h].risk;
    return out;
}

double MomentProvider::m2_cap() const {
    double cap = 0.0;
    for (const auto& m : table_) cap = std::max(cap, m.m2);
    return cap;
}

double MomentProvider::m3_cap() const {
    double cap = 0.0;
    for (const auto& m : table_) cap = std::max(cap, m.m3);
    return cap;
}

double MomentProvider::var_cap() const {
    double cap = 0.0;
    for (const auto& m : table_) cap = std::max(cap, m.variance);
    return cap;
}

} // namespace heavytail
