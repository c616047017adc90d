#ifndef HEAVYTAIL_PAC_BAYES_HPP
#define HEAVYTAIL_PAC_BAYES_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "heavytail/discrete_info.hpp"
#include "heavytail/hypothesis_class.hpp"
#include "heavytail/truncation.hpp"

namespace heavytail {

// Truncated empirical risk of hypothesis h: (s/n) sum_i psi(l(h; z_i)/s).
double robust_risk_estimate(const FiniteHypothesisClass& cls, std::size_t h,
                            double s, const TruncationFn& trunc = {});

// ---- per-hypothesis (countable) bounds -------------------------------

// One row per hypothesis: estimate and certified one-sided deviation at
// joint level 1 - 2*delta.  Each hypothesis gets its own truncation scale
//   s_h = sqrt(n m2(h) / (2 log(1/delta)))
// and radius
//   eps(h) = sqrt(2 m2(h) (log(1/prior(h)) + log(1/delta)) / n).
struct CountableBoundRow {
    double theta = 0.0;
    double prior_mass = 0.0;
    double scale = 0.0;
    double estimate = 0.0;
    double epsilon = 0.0;
    double upper = 0.0;
};

// m2_per_h overrides the per-hypothesis second-moment bounds; when empty,
// attached analytic moments are used (CapabilityError if absent too).
std::vector<CountableBoundRow> countable_bound(const FiniteHypothesisClass& cls,
                                               const WeightVector& prior, double delta,
                                               std::span<const double> m2_per_h = {});

// Bounded-loss (0/1) analogue at joint level 1 - delta: plain empirical
// risk plus sqrt((log(1/prior(h)) + log(1/delta)) / (2n)).  Rejects loss
// matrices with entries outside {0, 1}.
struct BoundedLossRow {
    double theta = 0.0;
    double prior_mass = 0.0;
    double estimate = 0.0;
    double epsilon = 0.0;
    double upper = 0.0;
};

std::vector<BoundedLossRow> bounded_loss_bound(const FiniteHypothesisClass& cls,
                                               const WeightVector& prior, double delta);

// ---- class-level (uncountable-style) bound ---------------------------

// Preconditions and caps for the class-level bound.  m2/m3/var are caps
// over the class of E[l^2], E[l^3], Var[l]; delta must not exceed
// exp(-1/9) or the bound's constants break down (AssumptionError).
struct BoundAssumptions {
    double delta = 0.05;
    double m2_cap = 1.0;
    double m3_cap = 1.0;
    double var_cap = 1.0;
    // Cap on the prior-quality ratio for runs without ground truth; when
    // analytic risks are attached the term is computed, not capped.
    std::optional<double> prior_quality_cap{};

    void validate() const;  // ConfigError / AssumptionError
};

BoundAssumptions assumptions_from_analytic(const FiniteHypothesisClass& cls, double delta);

// Itemized class-level bound.  Fields mirror the summands:
//   total = gibbs_empirical
//         + (kl_term + log_const_term + m2_term + prior_quality_term - 1)/sqrt(n)
//         + o1n_term
// holding with probability >= 1 - delta simultaneously over all posteriors.
struct BoundReport {
    std::size_t n = 0;
    double delta = 0.0;
    double scale = 0.0;               // class-wide truncation scale
    double gibbs_empirical = 0.0;     // E_{h~rho} robust risk estimate
    double kl_term = 0.0;             // KL(rho ; prior), may be +inf
    double log_const_term = 0.0;      // log(8 pi m2 / delta^2) / 2
    double m2_term = 0.0;             // m2 cap
    double prior_quality_term = 0.0;  // ratio of prior partition functions
    double o1n_term = 0.0;
    double total = 0.0;
    bool delta_ok = true;
    std::optional<bool> risk_cap_ok{};          // R(h) <= sqrt(n m2 / (4 log(1/delta)))
    bool prior_quality_certified = false;       // computed from ground truth?
    std::optional<double> true_gibbs_risk{};    // E_{h~rho} R(h), if ground truth
    std::optional<bool> valid{};                // true_gibbs_risk <= total
};

// The bound at an arbitrary posterior.
BoundReport uncountable_bound(const FiniteHypothesisClass& cls, const WeightVector& prior,
                              const WeightVector& posterior, const BoundAssumptions& assume,
                              const TruncationFn& trunc = {});

// Diagnostic ratio E_prior[exp(sqrt(n) X)] / E_prior[exp(X)] with
// X(h) = R(h) - robust risk estimate of h; requires analytic risks.
double prior_quality_term(const FiniteHypothesisClass& cls, const WeightVector& prior,
                          double s, std::size_t n, const TruncationFn& trunc = {});

// Posterior proportional to prior * exp(-sqrt(n) * robust risk estimate):
// the minimizer of gibbs_empirical + kl_term / sqrt(n).
WeightVector robust_gibbs_posterior(const FiniteHypothesisClass& cls,
                                    const WeightVector& prior, double s, std::size_t n,
                                    const TruncationFn& trunc = {});

// Classical Gibbs posterior prior * exp(-n * plain empirical risk).
WeightVector traditional_gibbs_posterior(const FiniteHypothesisClass& cls,
                                         const WeightVector& prior, std::size_t n);

// The class-level bound specialized to the robust Gibbs posterior.  The
// posterior-dependent terms collapse into a prior partition function:
//   gibbs_empirical + kl_term/sqrt(n) = -(1/sqrt(n)) log E_prior exp(-sqrt(n) rhat),
// and the report's total is computed through that route (the equality with
// uncountable_bound at the Gibbs posterior is a cross-check, not a tautology).
BoundReport gibbs_bound(const FiniteHypothesisClass& cls, const WeightVector& prior,
                        const BoundAssumptions& assume, const TruncationFn& trunc = {});

} // namespace heavytail

#endif
