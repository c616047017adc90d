#include "heavytail/distributions.hpp"

#include <cmath>
#include <stdexcept>

#include "heavytail/errors.hpp"
#include "heavytail/format.hpp"

namespace heavytail {

namespace {

constexpr int kMaxRawMoment = 6;

// C(k, j) for k <= 6.
constexpr double kChoose[7][7] = {
    {1, 0, 0, 0, 0, 0, 0},  {1, 1, 0, 0, 0, 0, 0},   {1, 2, 1, 0, 0, 0, 0},
    {1, 3, 3, 1, 0, 0, 0},  {1, 4, 6, 4, 1, 0, 0},   {1, 5, 10, 10, 5, 1, 0},
    {1, 6, 15, 20, 15, 6, 1}};

// E[Z^k] for Z standard normal: 0 for odd k, (k-1)!! for even k.
constexpr double kNormalStdMoment[7] = {1, 0, 1, 0, 3, 0, 15};

double pow_int(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

// E[|T|^k] for T ~ student t(nu), finite iff k < nu:
//   nu^{k/2} Gamma((k+1)/2) Gamma((nu-k)/2) / (sqrt(pi) Gamma(nu/2)).
double student_abs_moment(double nu, int k) {
    return std::exp(0.5 * k * std::log(nu) + std::lgamma(0.5 * (k + 1)) +
                    std::lgamma(0.5 * (nu - k)) - 0.5 * std::log(M_PI) -
                    std::lgamma(0.5 * nu));
}

} // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

DistributionSpec DistributionSpec::normal(double mean, double stddev) {
    DistributionSpec d{Family::Normal, mean, stddev, 0.0};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::log_normal(double mu, double sigma) {
    DistributionSpec d{Family::LogNormal, mu, sigma, 0.0};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::pareto(double x_m, double alpha) {
    DistributionSpec d{Family::Pareto, x_m, alpha, 0.0};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::student_t(double nu, double scale) {
    DistributionSpec d{Family::StudentT, nu, scale, 0.0};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::bernoulli(double p) {
    DistributionSpec d{Family::Bernoulli, p, 0.0, 0.0};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::point_mass(double value) {
    DistributionSpec d{Family::PointMass, value, 0.0, 0.0};
    d.validate();
    return d;
}

DistributionSpec DistributionSpec::shifted(double t) const {
    if (!std::isfinite(t)) throw ConfigError("DistributionSpec: shift must be finite");
    DistributionSpec d = *this;
    d.shift += t;
    return d;
}

void DistributionSpec::validate() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(shift))
        throw ConfigError("DistributionSpec: parameters must be finite");
    switch (family) {
        case Family::Normal:
            if (b <= 0.0) throw ConfigError("normal: stddev must be > 0");
            break;
        case Family::LogNormal:
            if (b <= 0.0) throw ConfigError("log_normal: sigma must be > 0");
            break;
        case Family::Pareto:
            if (a <= 0.0) throw ConfigError("pareto: x_m must be > 0");
            if (b <= 0.0) throw ConfigError("pareto: alpha must be > 0");
            break;
        case Family::StudentT:
            if (a <= 0.0) throw ConfigError("student_t: nu must be > 0");
            if (b <= 0.0) throw ConfigError("student_t: scale must be > 0");
            break;
        case Family::Bernoulli:
            if (a < 0.0 || a > 1.0) throw ConfigError("bernoulli: p must lie in [0, 1]");
            break;
        case Family::PointMass:
            break;
    }
}

std::string DistributionSpec::describe() const {
    std::string s;
    switch (family) {
        case Family::Normal:
            s = "normal(mean=" + format_double(a) + ",stddev=" + format_double(b) + ")";
            break;
        case Family::LogNormal:
            s = "log_normal(mu=" + format_double(a) + ",sigma=" + format_double(b) + ")";
            break;
        case Family::Pareto:
            s = "pareto(x_m=" + format_double(a) + ",alpha=" + format_double(b) + ")";
            break;
        case Family::StudentT:
            s = "student_t(nu=" + format_double(a) + ",scale=" + format_double(b) + ")";
            break;
        case Family::Bernoulli:
            s = "bernoulli(p=" + format_double(a) + ")";
            break;
        case Family::PointMass:
            s = "point_mass(value=" + format_double(a) + ")";
            break;
    }
    if (shift != 0.0) s += "+shift(" + format_double(shift) + ")";
    return s;
}

std::optional<std::vector<Atom>> DistributionSpec::atoms() const {
    switch (family) {
        case Family::Bernoulli:
            return std::vector<Atom>{{shift, 1.0 - a}, {1.0 + shift, a}};
        case Family::PointMass:
            return std::vector<Atom>{{a + shift, 1.0}};
        default:
            return std::nullopt;
    }
}

// Raw moment of the *unshifted* base variable; nullopt if infinite or
// not implemented.
static std::optional<double> base_raw_moment(const DistributionSpec& d, int k) {
    if (k == 0) return 1.0;
    switch (d.family) {
        case Family::Normal: {
            // E[(mean + sd Z)^k] by binomial expansion.
            double acc = 0.0;
            for (int j = 0; j <= k; ++j)
                acc += kChoose[k][j] * pow_int(d.a, k - j) * pow_int(d.b, j) *
                       kNormalStdMoment[j];
            return acc;
        }
        case Family::LogNormal:
            return std::exp(k * d.a + 0.5 * k * k * d.b * d.b);
        case Family::Pareto:
            if (d.b <= k) return std::nullopt;  // E[x^k] infinite for alpha <= k
            return d.b * pow_int(d.a, k) / (d.b - k);
        case Family::StudentT:
            if (d.a <= k) return std::nullopt;  // nu <= k
            if (k % 2 == 1) return 0.0;         // symmetric
            return pow_int(d.b, k) * student_abs_moment(d.a, k);
        case Family::Bernoulli:
            return d.a;  // 0^k*(1-p) + 1^k*p
        case Family::PointMass:
            return pow_int(d.a, k);
    }
    return std::nullopt;
}

std::optional<double> DistributionSpec::raw_moment(int k) const {
    if (k < 0 || k > kMaxRawMoment)
        throw std::invalid_argument("raw_moment: k must lie in [0, 6]");
    if (shift == 0.0) return base_raw_moment(*this, k);
    // E[(x0 + t)^k] = sum_j C(k,j) t^{k-j} E[x0^j]; finite iff all base
    // moments up to k are.
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) {
        auto mj = base_raw_moment(*this, j);
        if (!mj) return std::nullopt;
        acc += kChoose[k][j] * pow_int(shift, k - j) * *mj;
    }
    return acc;
}

std::optional<double> DistributionSpec::mean() const { return raw_moment(1); }

std::optional<double> DistributionSpec::second_moment() const { return raw_moment(2); }

std::optional<double> DistributionSpec::variance() const {
    // Shift-invariant, so compute from base moments.
    auto m1 = base_raw_moment(*this, 1);
    auto m2 = base_raw_moment(*this, 2);
    if (!m1 || !m2) return std::nullopt;
    return *m2 - *m1 * *m1;
}

// Partial moment of the unshifted base variable, E[x0^k 1{x0 <= t}].
static std::optional<double> base_partial_raw_moment(const DistributionSpec& d,
                                                     int k, double t) {
    switch (d.family) {
        case Family::LogNormal: {
            if (t <= 0.0) return 0.0;
            const double z = (std::log(t) - d.a) / d.b;
            return std::exp(k * d.a + 0.5 * k * k * d.b * d.b) *
                   normal_cdf(z - k * d.b);
        }
        case Family::Pareto: {
            if (t <= d.a) return 0.0;
            const double xm = d.a, alpha = d.b;
            // integral of alpha xm^alpha x^{k - alpha - 1} over [xm, t]
            if (alpha == static_cast<double>(k))
                return alpha * pow_int(xm, k) * std::log(t / xm);
            return alpha * std::pow(xm, alpha) *
                   (std::pow(t, k - alpha) - std::pow(xm, k - alpha)) / (k - alpha);
        }
        case Family::Bernoulli: {
            double acc = 0.0;
            if (0.0 <= t) acc += (1.0 - d.a) * (k == 0 ? 1.0 : 0.0);
            if (1.0 <= t) acc += d.a;
            return acc;
        }
        case Family::PointMass:
            return d.a <= t ? pow_int(d.a, k) : 0.0;
        default:
            return std::nullopt;
    }
}

std::optional<double> DistributionSpec::partial_raw_moment(int k, double t) const {
    if (k < 0 || k > kMaxRawMoment)
        throw std::invalid_argument("partial_raw_moment: k must lie in [0, 6]");
    if (!std::isfinite(t))
        throw std::invalid_argument("partial_raw_moment: threshold must be finite");
    if (shift == 0.0) return base_partial_raw_moment(*this, k, t);
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) {
        auto pj = base_partial_raw_moment(*this, j, t - shift);
        if (!pj) return std::nullopt;
        acc += kChoose[k][j] * pow_int(shift, k - j) * *pj;
    }
    return acc;
}

std::optional<double> DistributionSpec::third_abs_moment() const {
    switch (family) {
        case Family::Normal: {
            // Folded normal third moment, m = mean + shift:
            //   (m^3 + 3 m s^2) erf(m / (s sqrt(2)))
            // + sqrt(2/pi) s (m^2 + 2 s^2) exp(-m^2 / (2 s^2)).
            const double m = a + shift, s = b;
            return (m * m * m + 3.0 * m * s * s) * std::erf(m / (s * std::sqrt(2.0))) +
                   std::sqrt(2.0 / M_PI) * s * (m * m + 2.0 * s * s) *
                       std::exp(-m * m / (2.0 * s * s));
        }
        case Family::StudentT:
            if (a <= 3.0) return std::nullopt;  // E|T|^3 infinite for nu <= 3
            if (shift != 0.0) return std::nullopt;
            return pow_int(b, 3) * student_abs_moment(a, 3);
        case Family::Bernoulli:
        case Family::PointMass: {
            double acc = 0.0;
            for (const Atom& at : *atoms()) acc += at.mass * std::abs(pow_int(at.value, 3));
            return acc;
        }
        case Family::LogNormal:
        case Family::Pareto: {
            // Support is [lo, inf).  If the shifted support stays
            // non-negative, E|x|^3 = E[x^3]; otherwise split at zero with
            // partial moments: E|x|^3 = E[x^3] - 2 E[x^3 1{x <= 0}].
            auto m3 = raw_moment(3);
            if (!m3) return std::nullopt;
            const double lo = (family == Family::Pareto ? a : 0.0) + shift;
            if (lo >= 0.0) return *m3;
            auto p3 = partial_raw_moment(3, 0.0);
            if (!p3) return std::nullopt;
            return *m3 - 2.0 * *p3;
        }
    }
    return std::nullopt;
}

std::optional<double> DistributionSpec::cdf(double x) const {
    const double y = x - shift;
    switch (family) {
        case Family::Normal:
            return normal_cdf((y - a) / b);
        case Family::LogNormal:
            if (y <= 0.0) return 0.0;
            return normal_cdf((std::log(y) - a) / b);
        case Family::Pareto:
            if (y <= a) return 0.0;
            return 1.0 - std::pow(a / y, b);
        case Family::StudentT:
            return std::nullopt;  // no closed form kept here; use MC paths
        case Family::Bernoulli: {
            double acc = 0.0;
            if (0.0 <= y) acc += 1.0 - a;
            if (1.0 <= y) acc += a;
            return acc;
        }
        case Family::PointMass:
            return a <= y ? 1.0 : 0.0;
    }
    return std::nullopt;
}

Sampler::Sampler(const DistributionSpec& spec, Xoshiro256pp rng)
    : spec_(spec), rng_(rng) {
    spec_.validate();
}

namespace {

// Marsaglia polar method, spare discarded so that draw count per call is
// data-independent only in distribution, never reused across calls.
double draw_standard_normal(Xoshiro256pp& g) {
    for (;;) {
        const double u = 2.0 * g.uniform() - 1.0;
        const double v = 2.0 * g.uniform() - 1.0;
        const double w = u * u + v * v;
        if (w > 0.0 && w < 1.0) return u * std::sqrt(-2.0 * std::log(w) / w);
    }
}

// Bailey's polar method for the t distribution.
double draw_standard_student_t(Xoshiro256pp& g, double nu) {
    for (;;) {
        const double u = 2.0 * g.uniform() - 1.0;
        const double v = 2.0 * g.uniform() - 1.0;
        const double w = u * u + v * v;
        if (w > 0.0 && w < 1.0)
            return u * std::sqrt(nu * (std::pow(w, -2.0 / nu) - 1.0) / w);
    }
}

} // namespace

double Sampler::operator()() {
    double x = 0.0;
    switch (spec_.family) {
        case Family::Normal:
            x = spec_.a + spec_.b * draw_standard_normal(rng_);
            break;
        case Family::LogNormal:
            x = std::exp(spec_.a + spec_.b * draw_standard_normal(rng_));
            break;
        case Family::Pareto:
            // 1 - U lies in (0, 1], so the power is finite.
            x = spec_.a * std::pow(1.0 - rng_.uniform(), -1.0 / spec_.b);
            break;
        case Family::StudentT:
            x = spec_.b * draw_standard_student_t(rng_, spec_.a);
            break;
        case Family::Bernoulli:
            x = rng_.uniform() < spec_.a ? 1.0 : 0.0;
            break;
        case Family::PointMass:
            x = spec_.a;
            break;
    }
    return x + spec_.shift;
}

std::vector<double> sample(const DistributionSpec& spec, std::size_t n,
                           std::uint64_t seed, std::uint64_t stream) {
    Sampler s(spec, Xoshiro256pp(seed, stream));
    std::vector<double> out(n);
    for (double& x : out) x = s();
    return out;
}

} // namespace heavytail
