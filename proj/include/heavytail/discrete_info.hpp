#ifndef HEAVYTAIL_DISCRETE_INFO_HPP
#define HEAVYTAIL_DISCRETE_INFO_HPP

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace heavytail {

// Probability vector over a finite index set.  Construction normalizes, so
// the mass always sums to one (within 1e-12; checked).  Log-weights are
// kept alongside the weights: exponential tilts can concentrate so hard
// that most weights underflow to zero, and KL terms must then be computed
// from the logs, not from log(weight).
class WeightVector {
public:
    // Non-negative finite entries with a positive sum; normalized on entry.
    explicit WeightVector(std::vector<double> weights);

    static WeightVector uniform(std::size_t n);

    // Entries are log-masses up to a common additive constant; -inf allowed
    // (empty support entry).  Normalized via log-sum-exp.
    static WeightVector from_log_weights(std::vector<double> log_weights);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& weights() const { return w_; }
    double log_weight(std::size_t i) const { return logw_[i]; }
    bool in_support(std::size_t i) const { return logw_[i] > -kInf; }

private:
    WeightVector() = default;
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> w_;
    std::vector<double> logw_;
};

// Extended-real KL(p ; q) = sum_i p_i log(p_i / q_i): finite when
// support(p) is contained in support(q), +infinity otherwise, never NaN.
// The 0 log 0 terms contribute zero.
double kl_divergence(const WeightVector& p, const WeightVector& q);

// KL between Bernoulli(p) and Bernoulli(q), same extended-real convention.
double kl_bernoulli(double p, double q);

// exp(-2 n eps^2): the additive Chernoff bound on P(mean of n coin flips
// exceeds its mean by eps).
double chernoff_bernoulli_tail(std::size_t n, double eps);

// log E_{h ~ prior} exp(values[h]), computed by log-sum-exp so that the
// result is finite and accurate even when values reaches +-700 and beyond.
double log_partition(const WeightVector& prior, std::span<const double> values);

// The Gibbs measure prior * exp(values) / normalizer.  Masses outside the
// prior's support stay at zero.
WeightVector exponential_tilt(const WeightVector& prior, std::span<const double> values);

} // namespace heavytail

#endif
