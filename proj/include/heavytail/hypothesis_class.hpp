#ifndef HEAVYTAIL_HYPOTHESIS_CLASS_HPP
#define HEAVYTAIL_HYPOTHESIS_CLASS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "heavytail/learning_problem.hpp"

namespace heavytail {

// A finite hypothesis grid evaluated on one sample: the n x H loss matrix,
// stored per-hypothesis (column-contiguous), plus optional ground-truth
// moments for experiments that can certify their own bounds.
class FiniteHypothesisClass {
public:
    // losses is column-major: losses[h * n + i] = l(theta_h; z_i).
    FiniteHypothesisClass(std::vector<double> thetas, std::vector<double> losses,
                          std::size_t n);

    // Evaluates problem.loss on the data for every grid hypothesis.
    static FiniteHypothesisClass from_sample(const LearningProblem& problem,
                                             std::span<const double> data);

    // Attaches ground-truth moments (one per hypothesis).  Rejects tables
    // that are not internally consistent: variance must equal m2 - risk^2
    // to within 1e-9 (relative to m2).
    void attach_analytic(std::vector<LossMoments> moments);

    std::size_t sample_size() const { return n_; }
    std::size_t size() const { return thetas_.size(); }
    const std::vector<double>& thetas() const { return thetas_; }

    double loss(std::size_t i, std::size_t h) const { return losses_[h * n_ + i]; }
    std::span<const double> losses(std::size_t h) const {
        return {losses_.data() + h * n_, n_};
    }
    // Mutable access for robustness experiments that corrupt entries.
    void set_loss(std::size_t i, std::size_t h, double value);

    bool has_analytic() const { return !analytic_.empty(); }
    const LossMoments& analytic(std::size_t h) const;

    // Maxima over the class; require attached analytic moments.
    double m2_cap() const;
    double m3_cap() const;
    double var_cap() const;

private:
    std::vector<double> thetas_;
    std::vector<double> losses_;
    std::size_t n_ = 0;
    std::vector<LossMoments> analytic_;
};

} // namespace heavytail

#endif
