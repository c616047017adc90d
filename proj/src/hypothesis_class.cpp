#include "heavytail/hypothesis_class.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "heavytail/errors.hpp"

namespace heavytail {

FiniteHypothesisClass::FiniteHypothesisClass(std::vector<double> thetas,
                                             std::vector<double> losses,
                                             std::size_t n)
    : thetas_(std::move(thetas)), losses_(std::move(losses)), n_(n) {
    if (thetas_.empty())
        throw std::invalid_argument("FiniteHypothesisClass: need at least one hypothesis");
    if (n_ == 0)
        throw std::invalid_argument("FiniteHypothesisClass: need at least one data point");
    if (losses_.size() != thetas_.size() * n_)
        throw std::invalid_argument(
            "FiniteHypothesisClass: loss matrix must have n * |H| entries");
    for (double l : losses_)
        if (!std::isfinite(l))
            throw std::domain_error("FiniteHypothesisClass: loss entries must be finite");
}

FiniteHypothesisClass FiniteHypothesisClass::from_sample(const LearningProblem& problem,
                                                         std::span<const double> data) {
    problem.validate();
    if (data.empty())
        throw std::invalid_argument("FiniteHypothesisClass::from_sample: empty sample");
    const std::size_t n = data.size(), H = problem.grid.size();
    std::vector<double> losses(n * H);
    for (std::size_t h = 0; h < H; ++h) {
        const double theta = problem.grid[h];
        double* col = losses.data() + h * n;
        for (std::size_t i = 0; i < n; ++i)
            col[i] = loss_value(problem.loss, theta, data[i]);
    }
    return FiniteHypothesisClass(problem.grid, std::move(losses), n);
}

void FiniteHypothesisClass::attach_analytic(std::vector<LossMoments> moments) {
    if (moments.size() != thetas_.size())
        throw std::invalid_argument(
            "attach_analytic: need exactly one moment record per hypothesis");
    for (std::size_t h = 0; h < moments.size(); ++h) {
        const auto& m = moments[h];
        if (!std::isfinite(m.risk) || !std::isfinite(m.m2) || !std::isfinite(m.m3) ||
            !std::isfinite(m.variance))
            throw std::invalid_argument("attach_analytic: moments must be finite");
        const double expect = m.m2 - m.risk * m.risk;
        if (std::abs(m.variance - expect) > 1e-9 * std::max(1.0, std::abs(m.m2)))
            throw std::invalid_argument(
                "attach_analytic: variance inconsistent with m2 - risk^2 at hypothesis " +
                std::to_string(h));
    }
    analytic_ = std::move(moments);
}

void FiniteHypothesisClass::set_loss(std::size_t i, std::size_t h, double value) {
    if (i >= n_ || h >= thetas_.size())
        throw std::out_of_range("set_loss: index out of range");
    if (!std::isfinite(value))
        throw std::domain_error("set_loss: loss entries must be finite");
    losses_[h * n_ + i] = value;
}

const LossMoments& FiniteHypothesisClass::analytic(std::size_t h) const {
    if (analytic_.empty())
        throw CapabilityError("FiniteHypothesisClass: no analytic moments attached");
    if (h >= analytic_.size())
        throw std::out_of_range("analytic: hypothesis index out of range");
    return analytic_[h];
}

double FiniteHypothesisClass::m2_cap() const {
    double cap = 0.0;
    for (std::size_t h = 0; h < size(); ++h) cap = std::max(cap, analytic(h).m2);
    return cap;
}

double FiniteHypothesisClass::m3_cap() const {
    double cap = 0.0;
    for (std::size_t h = 0; h < size(); ++h) cap = std::max(cap, analytic(h).m3);
    return cap;
}

double FiniteHypothesisClass::var_cap() const {
    double cap = 0.0;
    for (std::size_t h = 0; h < size(); ++h) cap = std::max(cap, analytic(h).variance);
    return cap;
}

} // namespace heavytail
