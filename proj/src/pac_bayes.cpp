#include "heavytail/pac_bayes.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "heavytail/errors.hpp"
#include "heavytail/robust_mean.hpp"

namespace heavytail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1/delta), shared validation.
double log_inv(double delta, const char* who) {
    if (!std::isfinite(delta) || delta <= 0.0 || delta >= 1.0)
        throw ConfigError(std::string(who) + ": delta must lie in (0, 1)");
    return std::log(1.0 / delta);
}

void check_index_sets(const FiniteHypothesisClass& cls, const WeightVector& prior,
                      const char* who) {
    if (prior.size() != cls.size())
        throw std::invalid_argument(std::string(who) +
                                    ": prior size must match the hypothesis class");
}

std::vector<double> robust_estimates(const FiniteHypothesisClass& cls, double s,
                                     const TruncationFn& trunc) {
    std::vector<double> rhat(cls.size());
    for (std::size_t h = 0; h < cls.size(); ++h)
        rhat[h] = truncated_mean(cls.losses(h), s, trunc);
    return rhat;
}

} // namespace

double robust_risk_estimate(const FiniteHypothesisClass& cls, std::size_t h, double s,
                            const TruncationFn& trunc) {
    if (h >= cls.size())
        throw std::out_of_range("robust_risk_estimate: hypothesis index out of range");
    return truncated_mean(cls.losses(h), s, trunc);
}

std::vector<CountableBoundRow> countable_bound(const FiniteHypothesisClass& cls,
                                               const WeightVector& prior, double delta,
                                               std::span<const double> m2_per_h) {
    const double ld = log_inv(delta, "countable_bound");
    check_index_sets(cls, prior, "countable_bound");
    if (!m2_per_h.empty() && m2_per_h.size() != cls.size())
        throw std::invalid_argument("countable_bound: m2_per_h size must match the class");
    const double n = static_cast<double>(cls.sample_size());

    std::vector<CountableBoundRow> rows(cls.size());
    for (std::size_t h = 0; h < cls.size(); ++h) {
        if (!prior.in_support(h))
            throw std::invalid_argument(
                "countable_bound: prior gives zero mass to hypothesis " +
                std::to_string(h) + "; its union-bound slot is empty");
        const double m2 = m2_per_h.empty() ? cls.analytic(h).m2 : m2_per_h[h];
        if (!std::isfinite(m2) || m2 <= 0.0)
            throw std::invalid_argument("countable_bound: m2 bounds must be positive");
        CountableBoundRow& r = rows[h];
        r.theta = cls.thetas()[h];
        r.prior_mass = prior[h];
        r.scale = std::sqrt(n * m2 / (2.0 * ld));
        r.estimate = robust_risk_estimate(cls, h, r.scale);
        r.epsilon = std::sqrt(2.0 * m2 * (-prior.log_weight(h) + ld) / n);
        r.upper = r.estimate + r.epsilon;
    }
    return rows;
}

std::vector<BoundedLossRow> bounded_loss_bound(const FiniteHypothesisClass& cls,
                                               const WeightVector& prior, double delta) {
    const double ld = log_inv(delta, "bounded_loss_bound");
    check_index_sets(cls, prior, "bounded_loss_bound");
    const double n = static_cast<double>(cls.sample_size());

    std::vector<BoundedLossRow> rows(cls.size());
    for (std::size_t h = 0; h < cls.size(); ++h) {
        if (!prior.in_support(h))
            throw std::invalid_argument(
                "bounded_loss_bound: prior gives zero mass to hypothesis " +
                std::to_string(h));
        double acc = 0.0;
        for (double l : cls.losses(h)) {
            if (l != 0.0 && l != 1.0)
                throw std::invalid_argument(
                    "bounded_loss_bound: requires a 0/1 loss matrix");
            acc += l;
        }
        BoundedLossRow& r = rows[h];
        r.theta = cls.thetas()[h];
        r.prior_mass = prior[h];
        r.estimate = acc / n;
        r.epsilon = std::sqrt((-prior.log_weight(h) + ld) / (2.0 * n));
        r.upper = r.estimate + r.epsilon;
    }
    return rows;
}

void BoundAssumptions::validate() const {
    if (!std::isfinite(delta) || delta <= 0.0 || delta >= 1.0)
        throw ConfigError("BoundAssumptions: delta must lie in (0, 1)");
    // The bound's constant bookkeeping spends exp(-1/9) of slack; larger
    // delta makes log(1/delta) too small to absorb it.
    const double cap = std::exp(-1.0 / 9.0);
    if (delta > cap)
        throw AssumptionError("BoundAssumptions: delta must satisfy delta <= exp(-1/9) ~ " +
                              std::to_string(cap) + ", got " + std::to_string(delta));
    if (!std::isfinite(m2_cap) || m2_cap <= 0.0)
        throw ConfigError("BoundAssumptions: m2_cap must be positive and finite");
    if (!std::isfinite(m3_cap) || m3_cap < 0.0)
        throw ConfigError("BoundAssumptions: m3_cap must be non-negative and finite");
    if (!std::isfinite(var_cap) || var_cap < 0.0)
        throw ConfigError("BoundAssumptions: var_cap must be non-negative and finite");
    if (prior_quality_cap && (!std::isfinite(*prior_quality_cap) || *prior_quality_cap < 1.0))
        throw ConfigError("BoundAssumptions: prior_quality_cap must be >= 1");
}

BoundAssumptions assumptions_from_analytic(const FiniteHypothesisClass& cls, double delta) {
    BoundAssumptions a;
    a.delta = delta;
    a.m2_cap = cls.m2_cap();  // throws CapabilityError if nothing attached
    a.m3_cap = cls.m3_cap();
    a.var_cap = cls.var_cap();
    a.validate();
    return a;
}

namespace {

// Shared tail of the two class-level bounds: everything but the
// rho-dependent leading part.
struct BoundPieces {
    double n = 0.0;
    double scale = 0.0;
    double log_const = 0.0;
    double o1n = 0.0;
    double prior_quality = 0.0;
    bool certified = false;
    std::optional<bool> risk_cap_ok{};
    std::vector<double> rhat;
};

BoundPieces common_pieces(const FiniteHypothesisClass& cls, const WeightVector& prior,
                          const BoundAssumptions& assume, const TruncationFn& trunc,
                          const char* who) {
    assume.validate();
    check_index_sets(cls, prior, who);

    BoundPieces p;
    p.n = static_cast<double>(cls.sample_size());
    const double ld = std::log(1.0 / assume.delta);
    p.scale = std::sqrt(p.n * assume.m2_cap / (2.0 * ld));
    p.rhat = robust_estimates(cls, p.scale, trunc);
    p.log_const = 0.5 * (std::log(8.0 * M_PI * assume.m2_cap) + 2.0 * ld);
    p.o1n = (2.0 * std::sqrt(assume.var_cap * ld) +
             assume.m3_cap * ld / (3.0 * assume.m2_cap * std::sqrt(p.n))) / p.n;

    if (cls.has_analytic()) {
        std::vector<double> x(cls.size());
        for (std::size_t h = 0; h < cls.size(); ++h)
            x[h] = cls.analytic(h).risk - p.rhat[h];
        std::vector<double> xs(x);
        for (double& v : xs) v *= std::sqrt(p.n);
        p.prior_quality = std::exp(log_partition(prior, xs) - log_partition(prior, x));
        p.certified = true;

        // Risk-cap assumption: flagged, never fatal, since it is about the
        // unknown truth rather than the run configuration.
        const double cap = std::sqrt(p.n * assume.m2_cap / (4.0 * ld));
        bool ok = true;
        for (std::size_t h = 0; h < cls.size(); ++h)
            ok = ok && cls.analytic(h).risk <= cap;
        p.risk_cap_ok = ok;
    } else if (assume.prior_quality_cap) {
        p.prior_quality = *assume.prior_quality_cap;
        p.certified = false;
    } else {
        throw CapabilityError(std::string(who) +
                              ": prior-quality term needs analytic risks or an explicit "
                              "prior_quality_cap");
    }
    return p;
}

BoundReport assemble(const FiniteHypothesisClass& cls, const BoundAssumptions& assume,
                     const BoundPieces& p, const WeightVector& rho, double gibbs,
                     double kl, double total) {
    BoundReport rep;
    rep.n = cls.sample_size();
    rep.delta = assume.delta;
    rep.scale = p.scale;
    rep.gibbs_empirical = gibbs;
    rep.kl_term = kl;
    rep.log_const_term = p.log_const;
    rep.m2_term = assume.m2_cap;
    rep.prior_quality_term = p.prior_quality;
    rep.o1n_term = p.o1n;
    rep.total = total;
    rep.delta_ok = true;  // validate() already gated on it
    rep.risk_cap_ok = p.risk_cap_ok;
    rep.prior_quality_certified = p.certified;
    if (cls.has_analytic()) {
        double g = 0.0;
        for (std::size_t h = 0; h < cls.size(); ++h)
            g += rho[h] * cls.analytic(h).risk;
        rep.true_gibbs_risk = g;
        rep.valid = g <= rep.total;
    }
    return rep;
}

} // namespace

BoundReport uncountable_bound(const FiniteHypothesisClass& cls, const WeightVector& prior,
                              const WeightVector& posterior, const BoundAssumptions& assume,
                              const TruncationFn& trunc) {
    if (posterior.size() != cls.size())
        throw std::invalid_argument("uncountable_bound: posterior size must match the class");
    const BoundPieces p = common_pieces(cls, prior, assume, trunc, "uncountable_bound");

    double gibbs = 0.0;
    for (std::size_t h = 0; h < cls.size(); ++h) gibbs += posterior[h] * p.rhat[h];
    const double kl = kl_divergence(posterior, prior);

    const double sqrt_n = std::sqrt(p.n);
    const double total =
        kl == kInf
            ? kInf
            : gibbs + (kl + p.log_const + assume.m2_cap + p.prior_quality - 1.0) / sqrt_n +
                  p.o1n;
    return assemble(cls, assume, p, posterior, gibbs, kl, total);
}

double prior_quality_term(const FiniteHypothesisClass& cls, const WeightVector& prior,
                          double s, std::size_t n, const TruncationFn& trunc) {
    check_index_sets(cls, prior, "prior_quality_term");
    if (!std::isfinite(s) || s <= 0.0)
        throw std::invalid_argument("prior_quality_term: scale must be positive");
    if (n == 0) throw std::invalid_argument("prior_quality_term: n must be positive");
    if (!cls.has_analytic())
        throw CapabilityError("prior_quality_term: needs analytic risks");
    std::vector<double> x(cls.size()), xs(cls.size());
    for (std::size_t h = 0; h < cls.size(); ++h) {
        x[h] = cls.analytic(h).risk - robust_risk_estimate(cls, h, s, trunc);
        xs[h] = std::sqrt(static_cast<double>(n)) * x[h];
    }
    return std::exp(log_partition(prior, xs) - log_partition(prior, x));
}

WeightVector robust_gibbs_posterior(const FiniteHypothesisClass& cls,
                                    const WeightVector& prior, double s, std::size_t n,
                                    const TruncationFn& trunc) {
    check_index_sets(cls, prior, "robust_gibbs_posterior");
    if (!std::isfinite(s) || s <= 0.0)
        throw std::invalid_argument("robust_gibbs_posterior: scale must be positive");
    if (n == 0) throw std::invalid_argument("robust_gibbs_posterior: n must be positive");
    std::vector<double> v(cls.size());
    for (std::size_t h = 0; h < cls.size(); ++h)
        v[h] = -std::sqrt(static_cast<double>(n)) * truncated_mean(cls.losses(h), s, trunc);
    return exponential_tilt(prior, v);
}

WeightVector traditional_gibbs_posterior(const FiniteHypothesisClass& cls,
                                         const WeightVector& prior, std::size_t n) {
    check_index_sets(cls, prior, "traditional_gibbs_posterior");
    if (n == 0) throw std::invalid_argument("traditional_gibbs_posterior: n must be positive");
    std::vector<double> v(cls.size());
    for (std::size_t h = 0; h < cls.size(); ++h) {
        double acc = 0.0;
        for (double l : cls.losses(h)) acc += l;
        v[h] = -static_cast<double>(n) * (acc / static_cast<double>(cls.sample_size()));
    }
    return exponential_tilt(prior, v);
}

BoundReport gibbs_bound(const FiniteHypothesisClass& cls, const WeightVector& prior,
                        const BoundAssumptions& assume, const TruncationFn& trunc) {
    const BoundPieces p = common_pieces(cls, prior, assume, trunc, "gibbs_bound");
    const double sqrt_n = std::sqrt(p.n);

    // Leading term via the prior partition function.
    std::vector<double> v(cls.size());
    for (std::size_t h = 0; h < cls.size(); ++h) v[h] = -sqrt_n * p.rhat[h];
    const double leading = -log_partition(prior, v) / sqrt_n;
    const double total =
        leading + (p.log_const + assume.m2_cap + p.prior_quality - 1.0) / sqrt_n + p.o1n;

    // Itemization for the report: realize the posterior the cancellation
    // is about, so gibbs_empirical and kl_term stay meaningful.
    const WeightVector q = exponential_tilt(prior, v);
    double gibbs = 0.0;
    for (std::size_t h = 0; h < cls.size(); ++h) gibbs += q[h] * p.rhat[h];
    const double kl = kl_divergence(q, prior);
    return assemble(cls, assume, p, q, gibbs, kl, total);
}

} // namespace heavytail
