#include "heavytail/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "heavytail/discrete_info.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/format.hpp"
#include "heavytail/lemma31.hpp"

namespace heavytail {

namespace {

using nlohmann::json;

// ---- JSON field helpers -----------------------------------------------

double as_num(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

std::uint64_t as_uint(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                   !v.is_number_unsigned()))
        throw ConfigError(where + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& where) {
    if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    return v.get<std::string>();
}

const json& member(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing \"" + key + "\"");
    return *it;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
}

std::vector<double> num_array(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(as_num(e, where));
    return out;
}

// JSON has no +-inf; a KL term can be legitimately infinite, so such
// values are emitted as strings ("inf") instead of silently becoming null.
json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

// ---- CSV rendering ----------------------------------------------------

std::string cell(double v) { return format_double(v); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

template <class T>
void put_cells(std::string& out, const T& v) {
    out += cell(v);
}
template <class T, class... Rest>
void put_cells(std::string& out, const T& v, const Rest&... rest) {
    out += cell(v);
    out += ',';
    put_cells(out, rest...);
}
// Appends one CSV line; every double goes through format_double, which is
// what keeps re-runs byte-identical.
template <class... Ts>
void csv_line(std::string& out, const Ts&... vs) {
    put_cells(out, vs...);
    out += '\n';
}

// ---- deterministic trial scheduling -----------------------------------

// Runs body(0..count-1) on `threads` workers (0 = hardware count).  Each
// index owns its slot in a pre-sized result buffer and derives its own RNG
// stream, so the output is identical no matter how indices land on
// threads.  The first exception wins and is rethrown on the caller.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
    unsigned workers = threads != 0 ? threads : std::thread::hardware_concurrency();
    workers = std::max(1u, workers);
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mu;
    std::exception_ptr error;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---- shared aggregation -----------------------------------------------

struct Freq {
    double f = 0.0;
    double se = 0.0;
};

Freq frequency(std::size_t hits, std::size_t trials) {
    Freq out;
    out.f = static_cast<double>(hits) / static_cast<double>(trials);
    out.se = std::sqrt(out.f * (1.0 - out.f) / static_cast<double>(trials));
    return out;
}

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::Absolute: return "absolute";
        case LossKind::Squared: return "squared";
        case LossKind::ZeroOne: return "zero_one";
    }
    return "?";
}

LossKind loss_from_name(const std::string& name) {
    if (name == "absolute") return LossKind::Absolute;
    if (name == "squared") return LossKind::Squared;
    if (name == "zero_one") return LossKind::ZeroOne;
    throw ConfigError("problem.loss: unknown loss \"" + name + "\"");
}

double require_mean(const DistributionSpec& d, const char* who) {
    const auto mu = d.mean();
    if (!mu)
        throw CapabilityError(std::string(who) + ": " + d.describe() +
                              " has no finite closed-form mean to compare against");
    return *mu;
}

MomentProvider::Options moment_options(const ExperimentConfig& cfg) {
    MomentProvider::Options opt;
    if (cfg.moment_cache && !cfg.moment_cache->empty())
        opt.cache_path = *cfg.moment_cache;
    return opt;
}

// ---- experiment bodies -------------------------------------------------

RunResult run_coverage(const ExperimentConfig& cfg) {
    const DistributionSpec& dist = *cfg.dist;
    const double mu = require_mean(dist, "coverage");
    RobustMeanConfig rm;
    rm.delta = cfg.delta;
    rm.m2_bound = *cfg.m2_bound;
    rm.validate();

    struct Row {
        double est, radius, err;
        bool hit;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        const std::vector<double> data = sample(dist, cfg.n, cfg.seed, t);
        const EstimateReport rep = estimate(data, rm);
        const double err = std::abs(rep.estimate - mu);
        rows[t] = {rep.estimate, rep.radius, err, err <= rep.radius};
    });

    RunResult res;
    res.trials_csv = "trial,estimate,radius,abs_error,hit\n";
    std::size_t hits = 0;
    double radius_sum = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const Row& r = rows[t];
        csv_line(res.trials_csv, t, r.est, r.radius, r.err, r.hit);
        hits += r.hit ? 1 : 0;
        radius_sum += r.radius;
    }
    const Freq fr = frequency(hits, cfg.trials);
    const double threshold = 1.0 - 2.0 * cfg.delta;
    res.pass = fr.f >= threshold - 3.0 * fr.se;
    res.summary = {{"trials", cfg.trials},
                   {"n", cfg.n},
                   {"delta", cfg.delta},
                   {"hit_frequency", fr.f},
                   {"std_error", fr.se},
                   {"threshold", threshold},
                   {"mean_radius", radius_sum / static_cast<double>(cfg.trials)}};
    return res;
}

RunResult run_centered_coverage(const ExperimentConfig& cfg) {
    const DistributionSpec& dist = *cfg.dist;
    const double mu = require_mean(dist, "centered_coverage");
    RobustMeanConfig rm;
    rm.delta = cfg.delta;
    rm.m2_bound = *cfg.m2_bound;
    rm.validate();

    struct Row {
        double est, radius, err, center, eps_k;
        bool hit;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        const std::vector<double> data = sample(dist, cfg.n, cfg.seed, t);
        const EstimateReport rep = estimate_centered(data, rm, *cfg.var_bound, cfg.k);
        const double err = std::abs(rep.estimate - mu);
        rows[t] = {rep.estimate, rep.radius, err, *rep.center, *rep.epsilon_k,
                   err <= rep.radius};
    });

    RunResult res;
    res.trials_csv = "trial,estimate,radius,abs_error,hit,center,epsilon_k\n";
    std::size_t misses = 0;
    double radius_sum = 0.0;
    std::vector<double> errs(cfg.trials);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const Row& r = rows[t];
        csv_line(res.trials_csv, t, r.est, r.radius, r.err, r.hit, r.center, r.eps_k);
        misses += r.hit ? 0 : 1;
        radius_sum += r.radius;
        errs[t] = r.err;
    }
    // The certified miss probability, recomputed from the run's actual
    // radius and first-stage error rather than taken on faith.
    const double nk = static_cast<double>(cfg.n - *cfg.k);
    const double denom = 2.0 * (*cfg.var_bound + rows[0].eps_k * rows[0].eps_k);
    const double miss_bound = 4.0 * std::exp(-nk * rows[0].radius * rows[0].radius / denom);
    const Freq fr = frequency(misses, cfg.trials);
    res.pass = fr.f <= miss_bound + 3.0 * fr.se;
    res.summary = {{"trials", cfg.trials},
                   {"n", cfg.n},
                   {"k", *cfg.k},
                   {"delta", cfg.delta},
                   {"miss_frequency", fr.f},
                   {"std_error", fr.se},
                   {"miss_bound", miss_bound},
                   {"hit_frequency", 1.0 - fr.f},
                   {"mean_radius", radius_sum / static_cast<double>(cfg.trials)},
                   {"q99_abs_error", empirical_quantile(errs, 0.99)}};
    return res;
}

RunResult run_lemma31(const ExperimentConfig& cfg) {
    Lemma31Config lc;
    lc.dist = *cfg.dist;
    lc.n = cfg.n;
    lc.s = cfg.scale.value_or(0.0);
    lc.theta_panel = cfg.theta_panel;
    lc.delta = cfg.delta;
    lc.trials = cfg.trials;
    lc.seed = cfg.seed;
    lc.validate();

    std::vector<Lemma31Trial> rows(cfg.trials);
    parallel_for(cfg.trials, cfg.threads,
                 [&](std::size_t t) { rows[t] = lemma31_trial(lc, t); });

    RunResult res;
    res.trials_csv = "trial,theta,lhs,rhs,holds\n";
    const std::size_t panel = lc.theta_panel.size();
    std::vector<std::size_t> per_theta(panel, 0);
    std::size_t joint = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        for (std::size_t j = 0; j < panel; ++j) {
            const bool holds = rows[t].lhs[j] <= rows[t].rhs[j];
            csv_line(res.trials_csv, t, lc.theta_panel[j], rows[t].lhs[j], rows[t].rhs[j],
                     holds);
            per_theta[j] += holds ? 1 : 0;
        }
        joint += rows[t].joint_holds ? 1 : 0;
    }
    const Freq fr = frequency(joint, cfg.trials);
    const double threshold = 1.0 - cfg.delta;
    res.pass = fr.f >= threshold - 3.0 * fr.se;

    json per_theta_freq = json::array();
    for (std::size_t j = 0; j < panel; ++j)
        per_theta_freq.push_back(static_cast<double>(per_theta[j]) /
                                 static_cast<double>(cfg.trials));
    const double s_used = lc.s > 0.0 ? lc.s
                                     : select_scale(lc.n, RobustMeanConfig{
                                                              lc.delta,
                                                              *lc.dist.second_moment()});
    res.summary = {{"trials", cfg.trials},
                   {"n", cfg.n},
                   {"delta", cfg.delta},
                   {"scale", s_used},
                   {"theta_panel", lc.theta_panel},
                   {"per_theta_frequency", per_theta_freq},
                   {"joint_frequency", fr.f},
                   {"std_error", fr.se},
                   {"threshold", threshold}};
    return res;
}

RunResult run_chernoff_check(const ExperimentConfig& cfg) {
    struct Cell {
        double theta, eps;
        std::size_t n;
        Freq fr;
        double bound;
        bool pass;
    };
    std::vector<Cell> cells;
    std::size_t cell_index = 0;

    RunResult res;
    res.trials_csv = "theta,n,eps,trials,exceed_frequency,bound,std_error,cell_pass\n";
    res.pass = true;

    for (double theta : cfg.theta_list)
        for (std::size_t n : cfg.n_list)
            for (double eps : cfg.eps_list) {
                const DistributionSpec coin = DistributionSpec::bernoulli(theta);
                // Exceedance means count/n - theta >= eps; resolve the
                // threshold in integers so ties at the atom are kept.
                const std::size_t need = static_cast<std::size_t>(
                    std::ceil(static_cast<double>(n) * (theta + eps) - 1e-9));
                std::vector<char> exceed(cfg.trials, 0);
                const std::size_t base = cell_index * cfg.trials;
                parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
                    Sampler draw(coin, Xoshiro256pp(cfg.seed, base + t));
                    std::size_t count = 0;
                    for (std::size_t i = 0; i < n; ++i) count += draw() == 1.0 ? 1 : 0;
                    exceed[t] = count >= need ? 1 : 0;
                });
                std::size_t hits = 0;
                for (char e : exceed) hits += e;
                Cell c;
                c.theta = theta;
                c.eps = eps;
                c.n = n;
                c.fr = frequency(hits, cfg.trials);
                c.bound = chernoff_bernoulli_tail(n, eps);
                c.pass = c.fr.f <= c.bound + 3.0 * c.fr.se;
                csv_line(res.trials_csv, c.theta, c.n, c.eps, cfg.trials, c.fr.f, c.bound,
                         c.fr.se, c.pass);
                cells.push_back(c);
                res.pass = res.pass && c.pass;
                ++cell_index;
            }

    json cell_json = json::array();
    for (const Cell& c : cells)
        cell_json.push_back({{"theta", c.theta},
                             {"n", c.n},
                             {"eps", c.eps},
                             {"exceed_frequency", c.fr.f},
                             {"bound", c.bound},
                             {"std_error", c.fr.se},
                             {"cell_pass", c.pass}});
    res.summary = {{"trials", cfg.trials}, {"cells", cell_json}};
    return res;
}

RunResult run_countable_bound(const ExperimentConfig& cfg) {
    const LearningProblem& prob = *cfg.problem;
    MomentProvider mp(prob, moment_options(cfg));
    const std::size_t H = prob.grid.size();
    std::vector<double> risks = mp.risks();
    std::vector<double> m2s(H);
    for (std::size_t h = 0; h < H; ++h) m2s[h] = mp.moments(h).m2;
    const WeightVector prior = WeightVector::uniform(H);

    struct Row {
        bool covered;
        double worst_margin;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        const std::vector<double> data = sample(prob.data, cfg.n, cfg.seed, t);
        const FiniteHypothesisClass cls = FiniteHypothesisClass::from_sample(prob, data);
        const auto bound = countable_bound(cls, prior, cfg.delta, m2s);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t h = 0; h < H; ++h)
            worst = std::min(worst, bound[h].upper - risks[h]);
        rows[t] = {worst >= 0.0, worst};
    });

    RunResult res;
    res.trials_csv = "trial,all_covered,worst_margin\n";
    std::size_t hits = 0;
    double margin_sum = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        csv_line(res.trials_csv, t, rows[t].covered, rows[t].worst_margin);
        hits += rows[t].covered ? 1 : 0;
        margin_sum += rows[t].worst_margin;
    }
    const Freq fr = frequency(hits, cfg.trials);
    const double threshold = 1.0 - 2.0 * cfg.delta;
    res.pass = fr.f >= threshold - 3.0 * fr.se;
    res.summary = {{"trials", cfg.trials},
                   {"n", cfg.n},
                   {"delta", cfg.delta},
                   {"grid_size", H},
                   {"coverage_frequency", fr.f},
                   {"std_error", fr.se},
                   {"threshold", threshold},
                   {"mean_worst_margin", margin_sum / static_cast<double>(cfg.trials)}};
    return res;
}

RunResult run_uncountable_bound(const ExperimentConfig& cfg) {
    const LearningProblem& prob = *cfg.problem;
    MomentProvider mp(prob, moment_options(cfg));
    const std::size_t H = prob.grid.size();
    std::vector<LossMoments> table(H);
    for (std::size_t h = 0; h < H; ++h) table[h] = mp.moments(h);
    const WeightVector prior = WeightVector::uniform(H);

    // Assumption caps are sample-independent; fail before simulating.
    BoundAssumptions assume;
    assume.delta = cfg.delta;
    assume.m2_cap = mp.m2_cap();
    assume.m3_cap = mp.m3_cap();
    assume.var_cap = mp.var_cap();
    assume.validate();
    const double ld = std::log(1.0 / cfg.delta);
    const double s = std::sqrt(static_cast<double>(cfg.n) * assume.m2_cap / (2.0 * ld));

    struct Row {
        double gibbs, kl, quality, total, r_true;
        bool hit;
    };
    std::vector<Row> rows(cfg.trials);
    std::optional<bool> risk_cap_ok;
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        const std::vector<double> data = sample(prob.data, cfg.n, cfg.seed, t);
        FiniteHypothesisClass cls = FiniteHypothesisClass::from_sample(prob, data);
        cls.attach_analytic(table);
        const WeightVector post = robust_gibbs_posterior(cls, prior, s, cfg.n);
        const BoundReport rep = uncountable_bound(cls, prior, post, assume);
        rows[t] = {rep.gibbs_empirical, rep.kl_term,     rep.prior_quality_term,
                   rep.total,           *rep.true_gibbs_risk, *rep.valid};
        if (t == 0) risk_cap_ok = rep.risk_cap_ok;
    });

    RunResult res;
    res.trials_csv = "trial,gibbs_empirical,kl_term,prior_quality,bound_total,R_true,hit\n";
    std::size_t hits = 0;
    double total_sum = 0.0, rtrue_sum = 0.0, quality_sum = 0.0, quality_max = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const Row& r = rows[t];
        csv_line(res.trials_csv, t, r.gibbs, r.kl, r.quality, r.total, r.r_true, r.hit);
        hits += r.hit ? 1 : 0;
        total_sum += r.total;
        rtrue_sum += r.r_true;
        quality_sum += r.quality;
        quality_max = std::max(quality_max, r.quality);
    }
    const Freq fr = frequency(hits, cfg.trials);
    const double threshold = 1.0 - cfg.delta;
    res.pass = fr.f >= threshold - 3.0 * fr.se;
    const double tn = static_cast<double>(cfg.trials);
    res.summary = {{"trials", cfg.trials},
                   {"n", cfg.n},
                   {"delta", cfg.delta},
                   {"grid_size", H},
                   {"scale", s},
                   {"coverage_frequency", fr.f},
                   {"std_error", fr.se},
                   {"threshold", threshold},
                   {"mean_bound_total", total_sum / tn},
                   {"mean_true_gibbs_risk", rtrue_sum / tn},
                   {"mean_prior_quality", quality_sum / tn},
                   {"max_prior_quality", quality_max}};
    if (risk_cap_ok) res.summary["risk_cap_ok"] = *risk_cap_ok;
    return res;
}

RunResult run_gibbs_compare(const ExperimentConfig& cfg) {
    const LearningProblem& prob = *cfg.problem;
    MomentProvider mp(prob, moment_options(cfg));
    const std::size_t H = prob.grid.size();
    const std::vector<double> risks = mp.risks();
    const WeightVector prior = WeightVector::uniform(H);
    const double ld = std::log(1.0 / cfg.delta);
    const double s = std::sqrt(static_cast<double>(cfg.n) * mp.m2_cap() / (2.0 * ld));

    struct Row {
        double robust, traditional;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        std::vector<double> data = sample(prob.data, cfg.n, cfg.seed, t);
        if (cfg.contaminate) data[0] = cfg.outlier;
        const FiniteHypothesisClass cls = FiniteHypothesisClass::from_sample(prob, data);
        const WeightVector q_rob = robust_gibbs_posterior(cls, prior, s, cfg.n);
        const WeightVector q_trad = traditional_gibbs_posterior(cls, prior, cfg.n);
        double r_rob = 0.0, r_trad = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            r_rob += q_rob[h] * risks[h];
            r_trad += q_trad[h] * risks[h];
        }
        rows[t] = {r_rob, r_trad};
    });

    RunResult res;
    res.trials_csv = "trial,risk_robust,risk_traditional,diff\n";
    double sum_rob = 0.0, sum_trad = 0.0, sum_diff = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const double diff = rows[t].robust - rows[t].traditional;
        csv_line(res.trials_csv, t, rows[t].robust, rows[t].traditional, diff);
        sum_rob += rows[t].robust;
        sum_trad += rows[t].traditional;
        sum_diff += diff;
    }
    const double tn = static_cast<double>(cfg.trials);
    const double mean_diff = sum_diff / tn;
    double ss = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const double d = rows[t].robust - rows[t].traditional - mean_diff;
        ss += d * d;
    }
    const double se_diff =
        cfg.trials > 1 ? std::sqrt(ss / (tn - 1.0) / tn) : 0.0;
    res.pass = mean_diff <= 3.0 * se_diff;
    res.summary = {{"trials", cfg.trials},
                   {"n", cfg.n},
                   {"delta", cfg.delta},
                   {"contaminate", cfg.contaminate},
                   {"outlier", cfg.outlier},
                   {"scale", s},
                   {"mean_risk_robust", sum_rob / tn},
                   {"mean_risk_traditional", sum_trad / tn},
                   {"mean_diff", mean_diff},
                   {"se_diff", se_diff}};
    return res;
}

RunResult run_identity_check(const ExperimentConfig& cfg) {
    constexpr double kTol = 1e-10;

    struct Row {
        std::size_t size;
        double gap_max, excess_min;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        Xoshiro256pp rng(cfg.seed, t);
        const std::size_t H = 2 + rng.next() % 15;
        // Amplitudes up to a few hundred drive the tilt deep into
        // log-space territory, where a naive implementation underflows.
        const double amps[4] = {1.0, 5.0, 50.0, 400.0};
        const double amp = amps[rng.next() % 4];

        std::vector<double> pw(H);
        for (double& w : pw) w = std::exp(-10.0 * rng.uniform());
        const WeightVector prior{std::vector<double>(pw)};
        std::vector<double> x(H);
        for (double& v : x) v = amp * (2.0 * rng.uniform() - 1.0);

        const WeightVector tilted = exponential_tilt(prior, x);
        const double lse = log_partition(prior, x);

        double gap_max = 0.0;
        double excess_min = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 4; ++rep) {
            std::vector<double> rw(H);
            for (double& w : rw) w = std::exp(-3.0 * rng.uniform());
            const WeightVector rho{std::move(rw)};
            double ex = 0.0;
            for (std::size_t h = 0; h < H; ++h) ex += rho[h] * x[h];
            const double lhs = kl_divergence(rho, tilted);
            const double rhs = kl_divergence(rho, prior) + lse - ex;
            gap_max = std::max(gap_max, std::abs(lhs - rhs));
            excess_min = std::min(excess_min, lse - (ex - kl_divergence(rho, prior)));
        }
        // Point masses probe the variational bound where it is tight.
        for (std::size_t h = 0; h < H; ++h)
            excess_min = std::min(excess_min, lse - (x[h] + prior.log_weight(h)));
        rows[t] = {H, gap_max, excess_min};
    });

    RunResult res;
    res.trials_csv = "trial,size,identity_gap,variational_excess\n";
    double gap_max = 0.0;
    double excess_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        csv_line(res.trials_csv, t, rows[t].size, rows[t].gap_max, rows[t].excess_min);
        gap_max = std::max(gap_max, rows[t].gap_max);
        excess_min = std::min(excess_min, rows[t].excess_min);
    }
    res.pass = gap_max <= kTol && excess_min >= -kTol;
    res.summary = {{"trials", cfg.trials},
                   {"tolerance", kTol},
                   {"max_abs_identity_gap", gap_max},
                   {"min_variational_excess", excess_min}};
    return res;
}

RunResult run_compare_estimators(const ExperimentConfig& cfg) {
    const DistributionSpec& dist = *cfg.dist;
    const double mu = require_mean(dist, "compare_estimators");
    RobustMeanConfig rm;
    rm.delta = cfg.delta;
    rm.m2_bound = *cfg.m2_bound;
    rm.validate();

    struct Row {
        double emp, trunc, cent;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        const std::vector<double> data = sample(dist, cfg.n, cfg.seed, t);
        double acc = 0.0;
        for (double v : data) acc += v;
        const double emp = acc / static_cast<double>(cfg.n);
        const EstimateReport one = estimate(data, rm);
        const EstimateReport two = estimate_centered(data, rm, *cfg.var_bound, cfg.k);
        rows[t] = {std::abs(emp - mu), std::abs(one.estimate - mu),
                   std::abs(two.estimate - mu)};
    });

    RunResult res;
    res.trials_csv = "trial,dev_empirical,dev_truncated,dev_centered\n";
    std::vector<double> de(cfg.trials), dt(cfg.trials), dc(cfg.trials);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        csv_line(res.trials_csv, t, rows[t].emp, rows[t].trunc, rows[t].cent);
        de[t] = rows[t].emp;
        dt[t] = rows[t].trunc;
        dc[t] = rows[t].cent;
    }
    json quantiles = json::array();
    for (double q : {0.9, 0.95, 0.99})
        quantiles.push_back({{"q", q},
                             {"empirical", empirical_quantile(de, q)},
                             {"truncated", empirical_quantile(dt, q)},
                             {"centered", empirical_quantile(dc, q)}});
    res.pass = true;  // informational: claims about the table live in tests
    res.summary = {{"trials", cfg.trials},
                   {"n", cfg.n},
                   {"delta", cfg.delta},
                   {"k", *cfg.k},
                   {"quantiles", quantiles}};
    return res;
}

// ---- default resolution ------------------------------------------------

double resolved_m2(const ExperimentConfig& cfg) {
    if (cfg.m2_bound) return *cfg.m2_bound;
    const auto m2 = cfg.dist->second_moment();
    if (!m2)
        throw CapabilityError("m2_bound not given and " + cfg.dist->describe() +
                              " has no finite closed-form second moment");
    return *m2;
}

double resolved_var(const ExperimentConfig& cfg) {
    if (cfg.var_bound) return *cfg.var_bound;
    const auto v = cfg.dist->variance();
    if (!v)
        throw CapabilityError("var_bound not given and " + cfg.dist->describe() +
                              " has no finite closed-form variance");
    return *v;
}

void resolve_defaults(ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::Coverage:
            cfg.m2_bound = resolved_m2(cfg);
            break;
        case ExperimentKind::CenteredCoverage:
        case ExperimentKind::CompareEstimators:
            cfg.m2_bound = resolved_m2(cfg);
            cfg.var_bound = resolved_var(cfg);
            if (!cfg.k) {
                if (cfg.n < 2)
                    throw ConfigError("the two-stage estimator needs n >= 2");
                cfg.k = cfg.n / 2;
            }
            break;
        default:
            break;
    }
}

} // namespace

// ---- names and JSON forms ----------------------------------------------

std::string experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Coverage: return "coverage";
        case ExperimentKind::CenteredCoverage: return "centered_coverage";
        case ExperimentKind::Lemma31: return "lemma31";
        case ExperimentKind::ChernoffCheck: return "chernoff_check";
        case ExperimentKind::CountableBound: return "countable_bound";
        case ExperimentKind::UncountableBound: return "uncountable_bound";
        case ExperimentKind::GibbsCompare: return "gibbs_compare";
        case ExperimentKind::IdentityCheck: return "identity_check";
        case ExperimentKind::CompareEstimators: return "compare_estimators";
    }
    return "?";
}

ExperimentKind experiment_from_name(const std::string& name) {
    for (ExperimentKind k :
         {ExperimentKind::Coverage, ExperimentKind::CenteredCoverage,
          ExperimentKind::Lemma31, ExperimentKind::ChernoffCheck,
          ExperimentKind::CountableBound, ExperimentKind::UncountableBound,
          ExperimentKind::GibbsCompare, ExperimentKind::IdentityCheck,
          ExperimentKind::CompareEstimators})
        if (experiment_name(k) == name) return k;
    throw ConfigError("unknown experiment \"" + name + "\"");
}

json to_json(const DistributionSpec& spec) {
    json j;
    switch (spec.family) {
        case Family::Normal:
            j = {{"family", "normal"}, {"mean", spec.a}, {"stddev", spec.b}};
            break;
        case Family::LogNormal:
            j = {{"family", "log_normal"}, {"mu", spec.a}, {"sigma", spec.b}};
            break;
        case Family::Pareto:
            j = {{"family", "pareto"}, {"x_m", spec.a}, {"alpha", spec.b}};
            break;
        case Family::StudentT:
            j = {{"family", "student_t"}, {"nu", spec.a}, {"scale", spec.b}};
            break;
        case Family::Bernoulli:
            j = {{"family", "bernoulli"}, {"p", spec.a}};
            break;
        case Family::PointMass:
            j = {{"family", "point_mass"}, {"value", spec.a}};
            break;
    }
    j["shift"] = spec.shift;
    return j;
}

DistributionSpec dist_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("dist: expected a JSON object");
    const std::string fam = as_string(member(j, "family", "dist"), "dist.family");
    DistributionSpec d;
    std::set<std::string> allowed{"family", "shift"};
    if (fam == "normal") {
        d = DistributionSpec::normal(as_num(member(j, "mean", "dist"), "dist.mean"),
                                     as_num(member(j, "stddev", "dist"), "dist.stddev"));
        allowed.insert({"mean", "stddev"});
    } else if (fam == "log_normal") {
        d = DistributionSpec::log_normal(as_num(member(j, "mu", "dist"), "dist.mu"),
                                         as_num(member(j, "sigma", "dist"), "dist.sigma"));
        allowed.insert({"mu", "sigma"});
    } else if (fam == "pareto") {
        d = DistributionSpec::pareto(as_num(member(j, "x_m", "dist"), "dist.x_m"),
                                     as_num(member(j, "alpha", "dist"), "dist.alpha"));
        allowed.insert({"x_m", "alpha"});
    } else if (fam == "student_t") {
        const double nu = as_num(member(j, "nu", "dist"), "dist.nu");
        const double sc = j.contains("scale") ? as_num(j.at("scale"), "dist.scale") : 1.0;
        d = DistributionSpec::student_t(nu, sc);
        allowed.insert({"nu", "scale"});
    } else if (fam == "bernoulli") {
        d = DistributionSpec::bernoulli(as_num(member(j, "p", "dist"), "dist.p"));
        allowed.insert("p");
    } else if (fam == "point_mass") {
        d = DistributionSpec::point_mass(as_num(member(j, "value", "dist"), "dist.value"));
        allowed.insert("value");
    } else {
        throw ConfigError("dist: unknown family \"" + fam + "\"");
    }
    reject_unknown_keys(j, allowed, "dist");
    if (j.contains("shift")) d.shift = as_num(j.at("shift"), "dist.shift");
    d.validate();
    return d;
}

json to_json(const LearningProblem& problem) {
    return {{"dist", to_json(problem.data)},
            {"loss", loss_name(problem.loss)},
            {"grid", problem.grid}};
}

LearningProblem problem_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("problem: expected a JSON object");
    reject_unknown_keys(j, {"dist", "loss", "grid"}, "problem");
    LearningProblem p;
    p.data = dist_from_json(member(j, "dist", "problem"));
    p.loss = loss_from_name(as_string(member(j, "loss", "problem"), "problem.loss"));
    const json& g = member(j, "grid", "problem");
    if (g.is_array()) {
        p.grid = num_array(g, "problem.grid");
    } else if (g.is_object()) {
        reject_unknown_keys(g, {"min", "max", "count"}, "problem.grid");
        p.grid = linspace(as_num(member(g, "min", "problem.grid"), "problem.grid.min"),
                          as_num(member(g, "max", "problem.grid"), "problem.grid.max"),
                          as_uint(member(g, "count", "problem.grid"), "problem.grid.count"));
    } else {
        throw ConfigError("problem.grid: expected an array or {min, max, count}");
    }
    p.validate();
    return p;
}

json to_json(const EstimateReport& rep) {
    json j{{"estimate", rep.estimate},
           {"scale_s", rep.scale},
           {"radius", rep.radius},
           {"confidence_level", rep.confidence_level},
           {"n_used", rep.n},
           {"centered", rep.centered},
           {"m2_is_heuristic", rep.m2_is_heuristic}};
    if (rep.center) j["shift"] = *rep.center;
    if (rep.epsilon_k) j["epsilon_k"] = *rep.epsilon_k;
    if (rep.k) j["k"] = *rep.k;
    return j;
}

json to_json(const BoundReport& rep) {
    json j{{"n", rep.n},
           {"delta", rep.delta},
           {"scale", rep.scale},
           {"gibbs_empirical", rep.gibbs_empirical},
           {"kl_term", finite_or_string(rep.kl_term)},
           {"log_const_term", rep.log_const_term},
           {"m2_term", rep.m2_term},
           {"prior_quality_term", rep.prior_quality_term},
           {"o1n_term", rep.o1n_term},
           {"total", finite_or_string(rep.total)},
           {"delta_ok", rep.delta_ok},
           {"prior_quality_certified", rep.prior_quality_certified}};
    if (rep.risk_cap_ok) j["risk_cap_ok"] = *rep.risk_cap_ok;
    if (rep.true_gibbs_risk) j["true_gibbs_risk"] = *rep.true_gibbs_risk;
    if (rep.valid) j["valid"] = *rep.valid;
    return j;
}

// ---- config ------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown_keys(j,
                        {"experiment", "trials", "n", "delta", "seed", "threads", "dist",
                         "problem", "m2_bound", "var_bound", "k", "theta_panel", "scale",
                         "theta_list", "n_list", "eps_list", "contaminate", "outlier",
                         "out", "moment_cache"},
                        "config");
    ExperimentConfig c;
    c.kind = experiment_from_name(
        as_string(member(j, "experiment", "config"), "config.experiment"));
    if (j.contains("trials")) c.trials = as_uint(j.at("trials"), "config.trials");
    if (j.contains("n")) c.n = as_uint(j.at("n"), "config.n");
    if (j.contains("delta")) c.delta = as_num(j.at("delta"), "config.delta");
    if (j.contains("seed")) c.seed = as_uint(j.at("seed"), "config.seed");
    if (j.contains("threads"))
        c.threads = static_cast<unsigned>(as_uint(j.at("threads"), "config.threads"));
    if (j.contains("dist")) c.dist = dist_from_json(j.at("dist"));
    if (j.contains("problem")) c.problem = problem_from_json(j.at("problem"));
    if (j.contains("m2_bound")) c.m2_bound = as_num(j.at("m2_bound"), "config.m2_bound");
    if (j.contains("var_bound")) c.var_bound = as_num(j.at("var_bound"), "config.var_bound");
    if (j.contains("k")) c.k = as_uint(j.at("k"), "config.k");
    if (j.contains("theta_panel"))
        c.theta_panel = num_array(j.at("theta_panel"), "config.theta_panel");
    if (j.contains("scale")) c.scale = as_num(j.at("scale"), "config.scale");
    if (j.contains("theta_list"))
        c.theta_list = num_array(j.at("theta_list"), "config.theta_list");
    if (j.contains("n_list")) {
        const json& arr = j.at("n_list");
        if (!arr.is_array()) throw ConfigError("config.n_list: expected an array");
        c.n_list.clear();
        for (const auto& e : arr) c.n_list.push_back(as_uint(e, "config.n_list"));
    }
    if (j.contains("eps_list")) c.eps_list = num_array(j.at("eps_list"), "config.eps_list");
    if (j.contains("contaminate"))
        c.contaminate = as_bool(j.at("contaminate"), "config.contaminate");
    if (j.contains("outlier")) c.outlier = as_num(j.at("outlier"), "config.outlier");
    if (j.contains("out")) c.out = as_string(j.at("out"), "config.out");
    if (j.contains("moment_cache"))
        c.moment_cache = as_string(j.at("moment_cache"), "config.moment_cache");
    return c;
}

void ExperimentConfig::validate() const {
    if (trials == 0) throw ConfigError("config: trials must be >= 1");
    if (n == 0) throw ConfigError("config: n must be >= 1");
    if (!std::isfinite(delta) || delta <= 0.0 || delta >= 1.0)
        throw ConfigError("config: delta must lie in (0, 1)");

    const bool needs_dist = kind == ExperimentKind::Coverage ||
                            kind == ExperimentKind::CenteredCoverage ||
                            kind == ExperimentKind::Lemma31 ||
                            kind == ExperimentKind::CompareEstimators;
    const bool needs_problem = kind == ExperimentKind::CountableBound ||
                               kind == ExperimentKind::UncountableBound ||
                               kind == ExperimentKind::GibbsCompare;
    if (needs_dist && !dist)
        throw ConfigError("config: experiment \"" + experiment_name(kind) +
                          "\" needs a \"dist\"");
    if (needs_problem && !problem)
        throw ConfigError("config: experiment \"" + experiment_name(kind) +
                          "\" needs a \"problem\"");
    if (dist) dist->validate();
    if (problem) problem->validate();

    if (m2_bound && (!std::isfinite(*m2_bound) || *m2_bound <= 0.0))
        throw ConfigError("config: m2_bound must be positive and finite");
    if (var_bound && (!std::isfinite(*var_bound) || *var_bound < 0.0))
        throw ConfigError("config: var_bound must be non-negative and finite");
    if (k && (*k == 0 || *k >= n))
        throw ConfigError("config: k must satisfy 0 < k < n");
    if (scale && (!std::isfinite(*scale) || *scale <= 0.0))
        throw ConfigError("config: scale must be positive and finite");
    if (!std::isfinite(outlier)) throw ConfigError("config: outlier must be finite");

    if (kind == ExperimentKind::ChernoffCheck) {
        if (theta_list.empty() || n_list.empty() || eps_list.empty())
            throw ConfigError("config: chernoff_check needs non-empty theta/n/eps lists");
        for (double t : theta_list)
            if (!(t > 0.0 && t < 1.0))
                throw ConfigError("config: theta_list entries must lie in (0, 1)");
        for (std::size_t m : n_list)
            if (m == 0) throw ConfigError("config: n_list entries must be >= 1");
        for (double e : eps_list)
            if (!(e > 0.0 && e < 1.0))
                throw ConfigError("config: eps_list entries must lie in (0, 1)");
    }
    if (kind == ExperimentKind::Lemma31 && theta_panel.empty())
        throw ConfigError("config: lemma31 needs a non-empty theta_panel");
}

json ExperimentConfig::to_effective_json() const {
    json j{{"experiment", experiment_name(kind)}, {"trials", trials}, {"seed", seed}};
    const auto add_nd = [&] {
        j["n"] = n;
        j["delta"] = delta;
    };
    // threads / out / moment_cache are deliberately absent: they cannot
    // change a single output byte, so they stay out of the config hash.
    switch (kind) {
        case ExperimentKind::Coverage:
            add_nd();
            j["dist"] = to_json(*dist);
            if (m2_bound) j["m2_bound"] = *m2_bound;
            break;
        case ExperimentKind::CenteredCoverage:
        case ExperimentKind::CompareEstimators:
            add_nd();
            j["dist"] = to_json(*dist);
            if (m2_bound) j["m2_bound"] = *m2_bound;
            if (var_bound) j["var_bound"] = *var_bound;
            if (k) j["k"] = *k;
            break;
        case ExperimentKind::Lemma31:
            add_nd();
            j["dist"] = to_json(*dist);
            j["theta_panel"] = theta_panel;
            if (scale) j["scale"] = *scale;
            break;
        case ExperimentKind::ChernoffCheck:
            j["theta_list"] = theta_list;
            j["n_list"] = n_list;
            j["eps_list"] = eps_list;
            break;
        case ExperimentKind::CountableBound:
        case ExperimentKind::UncountableBound:
            add_nd();
            j["problem"] = to_json(*problem);
            break;
        case ExperimentKind::GibbsCompare:
            add_nd();
            j["problem"] = to_json(*problem);
            j["contaminate"] = contaminate;
            if (contaminate) j["outlier"] = outlier;
            break;
        case ExperimentKind::IdentityCheck:
            break;
    }
    return j;
}

// ---- runner -------------------------------------------------------------

RunResult run(const ExperimentConfig& raw) {
    ExperimentConfig cfg = raw;
    cfg.validate();
    resolve_defaults(cfg);
    cfg.validate();  // re-check resolved values (k bounds in particular)

    RunResult res;
    switch (cfg.kind) {
        case ExperimentKind::Coverage: res = run_coverage(cfg); break;
        case ExperimentKind::CenteredCoverage: res = run_centered_coverage(cfg); break;
        case ExperimentKind::Lemma31: res = run_lemma31(cfg); break;
        case ExperimentKind::ChernoffCheck: res = run_chernoff_check(cfg); break;
        case ExperimentKind::CountableBound: res = run_countable_bound(cfg); break;
        case ExperimentKind::UncountableBound: res = run_uncountable_bound(cfg); break;
        case ExperimentKind::GibbsCompare: res = run_gibbs_compare(cfg); break;
        case ExperimentKind::IdentityCheck: res = run_identity_check(cfg); break;
        case ExperimentKind::CompareEstimators: res = run_compare_estimators(cfg); break;
    }

    const json effective = cfg.to_effective_json();
    res.summary["experiment"] = experiment_name(cfg.kind);
    res.summary["effective_config"] = effective;
    res.summary["config_hash"] = fnv1a64_hex(effective.dump());
    res.summary["generator_version"] = std::string(kGeneratorVersion);
    res.summary["pass"] = res.pass;
    if (cfg.out && !cfg.out->empty()) write_outputs(res, *cfg.out);
    return res;
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / "trials.csv", std::ios::binary);
        csv << result.trials_csv;
        if (!csv) throw std::runtime_error("cannot write " + (dir / "trials.csv").string());
    }
    {
        std::ofstream js(dir / "summary.json", std::ios::binary);
        js << result.summary.dump(2) << '\n';
        if (!js)
            throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    }
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile: empty input");
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("empirical_quantile: q must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = std::ceil(q * static_cast<double>(values.size()));
    std::size_t idx = static_cast<std::size_t>(pos);
    idx = idx == 0 ? 0 : idx - 1;
    idx = std::min(idx, values.size() - 1);
    return values[idx];
}

} // namespace heavytail
