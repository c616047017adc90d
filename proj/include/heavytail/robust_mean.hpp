#ifndef HEAVYTAIL_ROBUST_MEAN_HPP
#define HEAVYTAIL_ROBUST_MEAN_HPP

#include <cstddef>
#include <optional>
#include <span>

#include "heavytail/truncation.hpp"

namespace heavytail {

// Inputs shared by the truncated-mean estimators.  m2_bound is an upper
// bound on the raw second moment E[x^2]; it must be supplied explicitly
// (see empirical_m2_bound for the heuristic, which is clearly flagged).
struct RobustMeanConfig {
    double delta = 0.05;      // per-tail failure probability
    double m2_bound = 1.0;    // bound on E[x^2], must be > 0
    TruncationFn trunc{};
    bool m2_is_heuristic = false;  // provenance marker, carried into reports

    void validate() const;    // throws ConfigError
};

// What an estimation run certifies.  `confidence_level` already accounts
// for every union bound spent internally: 1 - 2*delta for the one-stage
// estimator, 1 - 4*delta for the centered two-stage one.
struct EstimateReport {
    double estimate = 0.0;
    double scale = 0.0;               // truncation scale s of the main stage
    double radius = 0.0;              // certified deviation |est - mean|
    double confidence_level = 0.0;
    std::size_t n = 0;                // total points consumed
    bool centered = false;
    bool m2_is_heuristic = false;
    // Two-stage fields; empty for the one-stage estimator.
    std::optional<double> center;     // first-stage location estimate
    std::optional<double> epsilon_k;  // first-stage deviation radius
    std::optional<std::size_t> k;     // first-stage sample size
};

// (s/n) * sum_i psi(x_i / s), summed left to right in data order.
double truncated_mean(std::span<const double> data, double s,
                      const TruncationFn& trunc = {});

// s = sqrt(n * m2_bound / (2 log(1/delta))): the scale that balances the
// truncation bias against the concentration term.
double select_scale(std::size_t n, const RobustMeanConfig& cfg);

// sqrt(2 * m2_bound * log(1/delta) / n); the deviation certified at the
// scale above, holding with probability >= 1 - 2*delta.
double deviation_radius(std::size_t n, const RobustMeanConfig& cfg);

// One-stage estimator at the selected scale.
EstimateReport estimate(std::span<const double> data, const RobustMeanConfig& cfg);

// Two-stage estimator: locate with the first k points (scale from
// cfg.m2_bound on raw values), recenter the remaining n-k points, then
// estimate the recentered mean with a scale built from var_bound plus the
// first stage's own error radius.  Certified at level 1 - 4*delta, with a
// radius that depends on the variance rather than the raw second moment —
// this is what makes the estimator insensitive to large location shifts.
// k defaults to floor(n/2) when not given.
EstimateReport estimate_centered(std::span<const double> data,
                                 const RobustMeanConfig& cfg,
                                 double var_bound,
                                 std::optional<std::size_t> k = std::nullopt);

// (inflation / n) * sum x_i^2.  A plug-in stand-in for a real moment bound;
// anything built on it inherits `m2_is_heuristic = true` and loses the
// formal guarantee.
double empirical_m2_bound(std::span<const double> data, double inflation = 1.5);

} // namespace heavytail

#endif
