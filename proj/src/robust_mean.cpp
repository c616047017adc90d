#include "heavytail/robust_mean.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "heavytail/errors.hpp"

namespace heavytail {

void RobustMeanConfig::validate() const {
    if (!std::isfinite(delta) || delta <= 0.0 || delta >= 1.0)
        throw ConfigError("RobustMeanConfig: delta must lie in (0, 1), got " +
                          std::to_string(delta));
    if (!std::isfinite(m2_bound) || m2_bound <= 0.0)
        throw ConfigError("RobustMeanConfig: m2_bound must be positive and finite");
}

double truncated_mean(std::span<const double> data, double s,
                      const TruncationFn& trunc) {
    if (data.empty())
        throw std::invalid_argument("truncated_mean: data must be non-empty");
    if (!std::isfinite(s) || s <= 0.0)
        throw std::invalid_argument("truncated_mean: scale must be positive and finite");
    double acc = 0.0;
    for (double x : data) acc += trunc(x / s);  // psi rejects non-finite x/s
    return s / static_cast<double>(data.size()) * acc;
}

double select_scale(std::size_t n, const RobustMeanConfig& cfg) {
    cfg.validate();
    if (n == 0)
        throw std::invalid_argument("select_scale: n must be positive");
    return std::sqrt(static_cast<double>(n) * cfg.m2_bound /
                     (2.0 * std::log(1.0 / cfg.delta)));
}

double deviation_radius(std::size_t n, const RobustMeanConfig& cfg) {
    cfg.validate();
    if (n == 0)
        throw std::invalid_argument("deviation_radius: n must be positive");
    return std::sqrt(2.0 * cfg.m2_bound * std::log(1.0 / cfg.delta) /
                     static_cast<double>(n));
}

EstimateReport estimate(std::span<const double> data, const RobustMeanConfig& cfg) {
    cfg.validate();
    if (cfg.delta >= 0.5)
        throw ConfigError("estimate: delta >= 0.5 leaves no confidence (level 1 - 2*delta)");
    if (data.empty())
        throw std::invalid_argument("estimate: data must be non-empty");

    EstimateReport rep;
    rep.n = data.size();
    rep.scale = select_scale(data.size(), cfg);
    rep.estimate = truncated_mean(data, rep.scale, cfg.trunc);
    rep.radius = deviation_radius(data.size(), cfg);
    rep.confidence_level = 1.0 - 2.0 * cfg.delta;
    rep.m2_is_heuristic = cfg.m2_is_heuristic;
    return rep;
}

EstimateReport estimate_centered(std::span<const double> data,
                                 const RobustMeanConfig& cfg,
                                 double var_bound,
                                 std::optional<std::size_t> k_opt) {
    cfg.validate();
    if (cfg.delta >= 0.25)
        throw ConfigError("estimate_centered: delta >= 0.25 leaves no confidence "
                          "(level 1 - 4*delta)");
    if (!std::isfinite(var_bound) || var_bound <= 0.0)
        throw ConfigError("estimate_centered: var_bound must be positive and finite");
    const std::size_t n = data.size();
    if (n < 2)
        throw std::invalid_argument("estimate_centered: need at least 2 points");
    const std::size_t k = k_opt.value_or(n / 2);
    if (k == 0 || k >= n)
        throw std::invalid_argument("estimate_centered: k must satisfy 0 < k < n, got k=" +
                                    std::to_string(k) + " with n=" + std::to_string(n));

    const double log_inv_delta = std::log(1.0 / cfg.delta);

    // Stage one: crude location from the first k points, raw-moment scale.
    // Its own radius eps_k enters the second-stage moment bound, because the
    // recentered values have second moment <= Var + eps_k^2 on the event
    // that stage one succeeded.
    const double s1 = std::sqrt(static_cast<double>(k) * cfg.m2_bound /
                                (2.0 * log_inv_delta));
    const double center = truncated_mean(data.first(k), s1, cfg.trunc);
    const double eps_k = std::sqrt(2.0 * cfg.m2_bound * log_inv_delta /
                                   static_cast<double>(k));

    // Stage two: truncated mean of the recentered remainder.
    const std::size_t m = n - k;
    const double m2_shift = var_bound + eps_k * eps_k;
    const double s2 = std::sqrt(static_cast<double>(m) * m2_shift /
                                (2.0 * log_inv_delta));
    double acc = 0.0;
    for (std::size_t i = k; i < n; ++i) acc += cfg.trunc((data[i] - center) / s2);
    const double shifted_mean = s2 / static_cast<double>(m) * acc;

    EstimateReport rep;
    rep.estimate = shifted_mean + center;
    rep.scale = s2;
    rep.radius = std::sqrt(2.0 * m2_shift * log_inv_delta / static_cast<double>(m));
    rep.confidence_level = 1.0 - 4.0 * cfg.delta;
    rep.n = n;
    rep.centered = true;
    rep.m2_is_heuristic = cfg.m2_is_heuristic;
    rep.center = center;
    rep.epsilon_k = eps_k;
    rep.k = k;
    return rep;
}

double empirical_m2_bound(std::span<const double> data, double inflation) {
    if (data.empty())
        throw std::invalid_argument("empirical_m2_bound: data must be non-empty");
    if (!std::isfinite(inflation) || inflation < 1.0)
        throw std::invalid_argument("empirical_m2_bound: inflation must be >= 1");
    double acc = 0.0;
    for (double x : data) {
        if (!std::isfinite(x))
            throw std::domain_error("empirical_m2_bound: data must be finite");
        acc += x * x;
    }
    return inflation * acc / static_cast<double>(data.size());
}

} // namespace heavytail
