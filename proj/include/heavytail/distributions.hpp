#ifndef HEAVYTAIL_DISTRIBUTIONS_HPP
#define HEAVYTAIL_DISTRIBUTIONS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heavytail/rng.hpp"

namespace heavytail {

enum class Family { Normal, LogNormal, Pareto, StudentT, Bernoulli, PointMass };

// A point mass in a finitely supported distribution.
struct Atom {
    double value;
    double mass;
};

// A sampling distribution together with whatever moments admit closed
// forms.  Moment accessors return nullopt when the quantity is infinite or
// has no implemented closed form; callers that need a value either fail
// loudly (CapabilityError) or fall back to Monte Carlo, never silently.
//
// `a` and `b` are family parameters: Normal(mean=a, stddev=b),
// LogNormal(mu=a, sigma=b), Pareto(x_m=a, alpha=b), StudentT(nu=a,
// scale=b), Bernoulli(p=a), PointMass(value=a).  `shift` translates the
// variable after sampling: x = x0 + shift.
struct DistributionSpec {
    Family family = Family::Normal;
    double a = 0.0;
    double b = 1.0;
    double shift = 0.0;

    static DistributionSpec normal(double mean, double stddev);
    static DistributionSpec log_normal(double mu, double sigma);
    static DistributionSpec pareto(double x_m, double alpha);
    static DistributionSpec student_t(double nu, double scale = 1.0);
    static DistributionSpec bernoulli(double p);
    static DistributionSpec point_mass(double value);

    DistributionSpec shifted(double t) const;  // adds t to the current shift

    void validate() const;      // throws ConfigError on bad parameters
    std::string describe() const;

    std::optional<double> mean() const;
    std::optional<double> second_moment() const;     // E[x^2]
    std::optional<double> variance() const;
    std::optional<double> third_abs_moment() const;  // E[|x|^3]

    // E[x^k] for k in [0, 6]; nullopt when infinite or not implemented.
    std::optional<double> raw_moment(int k) const;

    // E[x^k 1{x <= t}]; implemented for LogNormal, Pareto and the atomic
    // families.  Finite even when the full moment diverges.
    std::optional<double> partial_raw_moment(int k, double t) const;

    std::optional<double> cdf(double x) const;

    // The support as point masses, for Bernoulli / PointMass.
    std::optional<std::vector<Atom>> atoms() const;
};

// Streaming sampler bound to one generator stream.  Consumption of the
// underlying uniforms is strictly sequential, so a (seed, stream) pair
// pins down every draw regardless of scheduling.
class Sampler {
public:
    Sampler(const DistributionSpec& spec, Xoshiro256pp rng);
    double operator()();

private:
    DistributionSpec spec_;
    Xoshiro256pp rng_;
};

// n draws from stream (seed, stream).
std::vector<double> sample(const DistributionSpec& spec, std::size_t n,
                           std::uint64_t seed, std::uint64_t stream = 0);

// Standard normal CDF.
double normal_cdf(double z);

} // namespace heavytail

#endif
