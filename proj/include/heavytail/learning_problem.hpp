#ifndef HEAVYTAIL_LEARNING_PROBLEM_HPP
#define HEAVYTAIL_LEARNING_PROBLEM_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "heavytail/distributions.hpp"

namespace heavytail {

// Loss families over scalar hypotheses theta and scalar observations z.
//   Absolute: |theta - z|
//   Squared:  (theta - z)^2
//   ZeroOne:  1{sign(z - theta) != sign(z)}, sign(t) = +1 if t > 0 else -1
enum class LossKind { Absolute, Squared, ZeroOne };

double loss_value(LossKind kind, double theta, double z);

// Ground-truth loss moments of one hypothesis: risk R = E[l], the raw
// second and third moments m2 = E[l^2], m3 = E[l^3] (losses are
// non-negative, so these equal the absolute moments), and the variance.
struct LossMoments {
    double risk = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double variance = 0.0;
};

// A scalar prediction task: data distribution, loss, finite hypothesis
// grid.  This is the unit the experiment harness simulates.
struct LearningProblem {
    DistributionSpec data;
    LossKind loss = LossKind::Absolute;
    std::vector<double> grid;

    void validate() const;  // throws ConfigError
    std::string describe() const;
};

std::vector<double> linspace(double lo, double hi, std::size_t count);

// Closed-form moments for (loss, family) pairs that admit them, nullopt
// otherwise.  Throws CapabilityError, naming the violated requirement,
// when a needed moment is infinite for the family — there is no point in
// falling back to Monte Carlo for a diverging integral.
std::optional<LossMoments> closed_form_moments(const LearningProblem& p, double theta);

// Result of a Monte Carlo moment evaluation: point estimates plus the
// standard errors of the three raw moments.
struct McMoments {
    LossMoments moments;
    double se_risk = 0.0;
    double se_m2 = 0.0;
    double se_m3 = 0.0;
    std::size_t samples = 0;
    bool from_cache = false;
};

// Serves ground-truth moments for a problem's whole grid: the closed form
// when one exists, otherwise a high-precision Monte Carlo evaluation
// (defaults to 10^7 draws) cached on disk.  The cache is a JSON map keyed
// by a fingerprint of (distribution, loss, theta, seed, sample count) and
// stamped with the generator version; entries from other versions are
// ignored.  Writes go through a temp file + rename, so concurrent readers
// only ever see complete files.
class MomentProvider {
public:
    struct Options {
        std::filesystem::path cache_path{};  // empty: in-memory only
        std::uint64_t seed = 971;
        std::size_t samples = 10'000'000;
    };

    explicit MomentProvider(LearningProblem problem);
    MomentProvider(LearningProblem problem, Options opt);

    const LearningProblem& problem() const { return problem_; }
    bool closed_form() const { return closed_form_; }

    // Moments of grid hypothesis h (index into problem.grid).
    const LossMoments& moments(std::size_t h) const;

    // Monte Carlo diagnostics for grid hypothesis h; nullopt on the
    // closed-form path.
    std::optional<McMoments> mc_info(std::size_t h) const;

    // Grid-wide caps consumed by the class-level bounds.
    double risk(std::size_t h) const { return moments(h).risk; }
    std::vector<double> risks() const;
    double m2_cap() const;
    double m3_cap() const;
    double var_cap() const;

private:
    LearningProblem problem_;
    Options opt_;
    bool closed_form_ = false;
    std::vector<LossMoments> table_;
    std::vector<McMoments> mc_;
};

} // namespace heavytail

#endif
