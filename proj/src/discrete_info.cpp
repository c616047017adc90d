#include "heavytail/discrete_info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace heavytail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

WeightVector::WeightVector(std::vector<double> weights) {
    if (weights.empty())
        throw std::invalid_argument("WeightVector: need at least one entry");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("WeightVector: entries must be finite and >= 0");
        sum += w;
    }
    if (sum <= 0.0)
        throw std::invalid_argument("WeightVector: total mass must be positive");
    w_ = std::move(weights);
    logw_.resize(w_.size());
    for (std::size_t i = 0; i < w_.size(); ++i) {
        w_[i] /= sum;
        logw_[i] = w_[i] > 0.0 ? std::log(w_[i]) : -kInf;
    }
}

WeightVector WeightVector::uniform(std::size_t n) {
    if (n == 0)
        throw std::invalid_argument("WeightVector::uniform: n must be positive");
    return WeightVector(std::vector<double>(n, 1.0));
}

WeightVector WeightVector::from_log_weights(std::vector<double> log_weights) {
    if (log_weights.empty())
        throw std::invalid_argument("WeightVector::from_log_weights: need at least one entry");
    double max_lw = -kInf;
    for (double lw : log_weights) {
        if (std::isnan(lw) || lw == kInf)
            throw std::invalid_argument(
                "WeightVector::from_log_weights: entries must be < +inf and not NaN");
        max_lw = std::max(max_lw, lw);
    }
    if (max_lw == -kInf)
        throw std::invalid_argument("WeightVector::from_log_weights: all entries are -inf");
    double z = 0.0;
    for (double lw : log_weights) z += std::exp(lw - max_lw);
    const double log_z = max_lw + std::log(z);

    WeightVector out;
    out.logw_.reserve(log_weights.size());
    out.w_.reserve(log_weights.size());
    for (double lw : log_weights) out.logw_.push_back(lw - log_z);
    // exp of normalized logs sums to 1 up to rounding; renormalize the
    // linear weights only, keeping the (exact) logs as the source of truth.
    double sum = 0.0;
    for (double lw : out.logw_) sum += std::exp(lw);
    for (double lw : out.logw_) out.w_.push_back(std::exp(lw) / sum);
    return out;
}

double kl_divergence(const WeightVector& p, const WeightVector& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("kl_divergence: p and q must share an index set");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p.in_support(i)) continue;       // 0 log 0 = 0
        if (!q.in_support(i)) return kInf;    // support failure
        acc += p[i] * (p.log_weight(i) - q.log_weight(i));
    }
    // Rounding can push a tiny negative; KL is non-negative by definition.
    return acc < 0.0 ? 0.0 : acc;
}

double kl_bernoulli(double p, double q) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("kl_bernoulli: p must lie in [0, 1]");
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("kl_bernoulli: q must lie in [0, 1]");
    double acc = 0.0;
    if (p > 0.0) {
        if (q == 0.0) return kInf;
        acc += p * std::log(p / q);
    }
    if (p < 1.0) {
        if (q == 1.0) return kInf;
        acc += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    }
    return acc < 0.0 ? 0.0 : acc;
}

double chernoff_bernoulli_tail(std::size_t n, double eps) {
    if (n == 0)
        throw std::invalid_argument("chernoff_bernoulli_tail: n must be positive");
    if (!std::isfinite(eps) || eps <= 0.0 || eps >= 1.0)
        throw std::invalid_argument("chernoff_bernoulli_tail: eps must lie in (0, 1)");
    return std::exp(-2.0 * static_cast<double>(n) * eps * eps);
}

double log_partition(const WeightVector& prior, std::span<const double> values) {
    if (prior.size() != values.size())
        throw std::invalid_argument("log_partition: prior and values must share an index set");
    double max_v = -kInf;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        if (!prior.in_support(i)) continue;
        if (!std::isfinite(values[i]))
            throw std::domain_error("log_partition: values must be finite on the support");
        max_v = std::max(max_v, values[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        if (!prior.in_support(i)) continue;
        z += std::exp(prior.log_weight(i) + (values[i] - max_v));
    }
    return max_v + std::log(z);
}

WeightVector exponential_tilt(const WeightVector& prior, std::span<const double> values) {
    const double log_z = log_partition(prior, values);  // validates args
    std::vector<double> lw(prior.size());
    for (std::size_t i = 0; i < prior.size(); ++i)
        lw[i] = prior.in_support(i)
                    ? prior.log_weight(i) + values[i] - log_z
                    : -kInf;
    return WeightVector::from_log_weights(std::move(lw));
}

} // namespace heavytail
