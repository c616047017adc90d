#ifndef HEAVYTAIL_LEMMA31_HPP
#define HEAVYTAIL_LEMMA31_HPP

#include <cstdint>
#include <vector>

#include "heavytail/distributions.hpp"

namespace heavytail {

// Empirical check of the smoothed-estimator inequality: for every
// Bernoulli parameter theta simultaneously, with probability >= 1 - delta
// over the sample,
//
//   (theta / s) * xhat  <=  theta E[x]/s + theta E[x^2]/(2 s^2)
//                         + (KL(Bern(theta); Bern(1/2)) + log(1/delta)) / n,
//
// where xhat is the truncated mean at scale s.  The guarantee is uniform
// in theta, so one sample is tested against the whole panel jointly.
struct Lemma31Config {
    DistributionSpec dist;
    std::size_t n = 100;
    double s = 0.0;                  // <= 0: use the coverage scale rule
    std::vector<double> theta_panel = {0.5, 0.9};
    double delta = 0.05;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;

    void validate() const;  // ConfigError; also requires finite E[x^2]
};

// Both sides for one simulated sample (stream (seed, stream) of the run).
struct Lemma31Trial {
    std::vector<double> lhs;
    std::vector<double> rhs;
    bool joint_holds = true;
};

Lemma31Trial lemma31_trial(const Lemma31Config& cfg, std::uint64_t stream);

struct Lemma31Report {
    std::size_t trials = 0;
    std::vector<double> theta_panel;
    std::vector<double> per_theta_frequency;
    double joint_frequency = 0.0;
    double std_error = 0.0;     // binomial SE of the joint frequency
    double threshold = 0.0;     // 1 - delta
    bool pass = false;          // joint_frequency >= threshold - 3 * std_error
    double scale = 0.0;         // the scale actually used
};

Lemma31Report check_lemma31_empirical(const Lemma31Config& cfg);

} // namespace heavytail

#endif
