#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "heavytail/discrete_info.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/lemma31.hpp"
#include "heavytail/robust_mean.hpp"

using namespace heavytail;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE("discrete_info") {

TEST_CASE("weight vector normalizes and keeps exact logs") {
    WeightVector w(std::vector<double>{2.0, 6.0});
    CHECK(w.size() == 2);
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(w.log_weight(0) == doctest::Approx(std::log(0.25)).epsilon(1e-14));
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) total += w[i];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));

    const WeightVector u = WeightVector::uniform(7);
    for (std::size_t i = 0; i < 7; ++i)
        CHECK(u[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));

    WeightVector zero(std::vector<double>{0.0, 1.0});
    CHECK(zero[0] == 0.0);
    CHECK(zero.log_weight(0) == -kInf);
    CHECK(!zero.in_support(0));
    CHECK(zero.in_support(1));
}

TEST_CASE("log-weight construction survives extreme underflow") {
    // Shift invariance: adding a constant to all log-weights is a no-op.
    WeightVector a = WeightVector::from_log_weights({0.0, std::log(3.0)});
    WeightVector b = WeightVector::from_log_weights({500.0, 500.0 + std::log(3.0)});
    CHECK(a[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(b[0] == doctest::Approx(a[0]).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(a[1]).epsilon(1e-14));

    // One entry 2000 nats below the lead: its weight underflows to zero,
    // but its log-mass must remain exact for downstream KL terms.
    WeightVector tiny = WeightVector::from_log_weights({0.0, -2000.0});
    CHECK(tiny[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tiny[1] == 0.0);
    CHECK(tiny.in_support(1));
    CHECK(tiny.log_weight(1) == doctest::Approx(-2000.0).epsilon(1e-12));

    WeightVector gone = WeightVector::from_log_weights({0.0, -kInf});
    CHECK(!gone.in_support(1));
    CHECK(gone[0] == 1.0);
}

TEST_CASE("degenerate weight inputs are rejected") {
    CHECK_THROWS_AS(WeightVector(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(WeightVector(std::vector<double>{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(WeightVector(std::vector<double>{1.0, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(WeightVector(std::vector<double>{1.0, kInf}), std::invalid_argument);
    CHECK_THROWS_AS(WeightVector::from_log_weights({-kInf, -kInf}), std::invalid_argument);
    CHECK_THROWS_AS((void)WeightVector::uniform(0), std::invalid_argument);
}

TEST_CASE("KL divergence: frozen values, zero at equality, +inf off support") {
    WeightVector p(std::vector<double>{0.5, 0.5});
    WeightVector q(std::vector<double>{0.75, 0.25});
    CHECK(kl_divergence(p, q) == doctest::Approx(0.14384103622589046).epsilon(1e-15));
    CHECK(kl_divergence(p, p) == 0.0);
    CHECK(kl_divergence(q, q) == 0.0);

    WeightVector point(std::vector<double>{1.0, 0.0});
    CHECK(kl_divergence(point, q) == doctest::Approx(std::log(1.0 / 0.75)).epsilon(1e-14));
    // Mass where q has none: infinite, not NaN.
    CHECK(kl_divergence(q, point) == kInf);
    CHECK(!std::isnan(kl_divergence(q, point)));

    // Deep-underflow support still yields a finite, correct KL via logs.
    WeightVector tilted = WeightVector::from_log_weights({0.0, -1500.0});
    CHECK(std::isfinite(kl_divergence(tilted, q)));
    CHECK(kl_divergence(tilted, q) == doctest::Approx(std::log(1.0 / 0.75)).epsilon(1e-12));
}

TEST_CASE("Bernoulli KL: frozen values and the quadratic lower bound") {
    CHECK(kl_bernoulli(0.75, 0.5) == doctest::Approx(0.13081203594113696).epsilon(1e-15));
    CHECK(kl_bernoulli(0.9, 0.5) == doctest::Approx(0.36806420716849707).epsilon(1e-15));
    CHECK(kl_bernoulli(0.5, 0.5) == 0.0);
    CHECK(kl_bernoulli(0.0, 0.3) == doctest::Approx(std::log(1.0 / 0.7)).epsilon(1e-14));
    CHECK(kl_bernoulli(1.0, 0.3) == doctest::Approx(std::log(1.0 / 0.3)).epsilon(1e-14));
    CHECK(kl_bernoulli(0.4, 0.0) == kInf);
    CHECK(kl_bernoulli(0.4, 1.0) == kInf);
    // Pinsker in scalar form: KL >= 2 (p - q)^2.
    for (int i = 0; i <= 100; ++i)
        for (int j = 1; j < 100; ++j) {
            const double p = i / 100.0, q = j / 100.0;
            CHECK(kl_bernoulli(p, q) >= 2.0 * (p - q) * (p - q) - 1e-12);
        }
}

TEST_CASE("Chernoff tail bound") {
    CHECK(chernoff_bernoulli_tail(100, 0.1) ==
          doctest::Approx(0.13533528323661269).epsilon(1e-15));
    CHECK(chernoff_bernoulli_tail(100, 0.3) < chernoff_bernoulli_tail(100, 0.1));
    CHECK_THROWS_AS((void)chernoff_bernoulli_tail(0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS((void)chernoff_bernoulli_tail(100, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)chernoff_bernoulli_tail(100, 1.0), std::invalid_argument);
}

TEST_CASE("log partition: frozen value and overflow-proof evaluation") {
    const WeightVector half = WeightVector::uniform(2);
    const std::vector<double> vals{0.0, 1.0};
    CHECK(log_partition(half, vals) ==
          doctest::Approx(0.62011450695827752).epsilon(1e-15));

    // Values at +-700 would overflow exp directly; log-sum-exp must not.
    const std::vector<double> big{700.0, 710.0};
    const double lp = log_partition(half, big);
    CHECK(std::isfinite(lp));
    CHECK(lp == doctest::Approx(std::log(0.5) + 710.0 + std::log1p(std::exp(-10.0)))
                    .epsilon(1e-14));
    const std::vector<double> low{-700.0, -705.0};
    CHECK(log_partition(half, low) ==
          doctest::Approx(std::log(0.5) - 700.0 + std::log1p(std::exp(-5.0)))
              .epsilon(1e-14));

    // Constant values: log E exp(c) = c regardless of the prior.
    WeightVector skew(std::vector<double>{0.2, 0.5, 0.3});
    const std::vector<double> c{3.25, 3.25, 3.25};
    CHECK(log_partition(skew, c) == doctest::Approx(3.25).epsilon(1e-14));

    CHECK_THROWS_AS((void)log_partition(half, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("exponential tilt: frozen two-point case and support handling") {
    const WeightVector half = WeightVector::uniform(2);
    const WeightVector t = exponential_tilt(half, std::vector<double>{1.0, 0.0});
    CHECK(t[0] == doctest::Approx(0.73105857863000488).epsilon(1e-15));
    CHECK(t[1] == doctest::Approx(0.26894142136999512).epsilon(1e-15));

    // Tilting never invents support, even under huge values there.
    WeightVector hole(std::vector<double>{0.5, 0.0, 0.5});
    const WeightVector th = exponential_tilt(hole, std::vector<double>{0.0, 900.0, 0.0});
    CHECK(th[1] == 0.0);
    CHECK(!th.in_support(1));
    CHECK(th[0] == doctest::Approx(0.5).epsilon(1e-14));

    // Extreme tilts concentrate but stay normalized, and the loser keeps a
    // finite log-mass suitable for KL(tilt; prior).
    const WeightVector sharp = exponential_tilt(half, std::vector<double>{0.0, -1200.0});
    CHECK(sharp[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sharp.in_support(1));
    CHECK(std::isfinite(kl_divergence(sharp, half)));
}

TEST_CASE("tilt identity: KL(tilt; prior) = E_tilt[v] - log E_prior[exp v]") {
    const std::vector<double> v{0.4, -2.0, 1.3, 0.0, -0.7};
    WeightVector prior(std::vector<double>{0.1, 0.3, 0.2, 0.25, 0.15});
    const WeightVector t = exponential_tilt(prior, v);
    double ev = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) ev += t[i] * v[i];
    CHECK(kl_divergence(t, prior) ==
          doctest::Approx(ev - log_partition(prior, v)).epsilon(1e-12));
}

TEST_CASE("smoothed-estimator inequality: frozen right side and joint frequency") {
    Lemma31Config cfg;
    cfg.dist = DistributionSpec::log_normal(0.0, 1.0);
    cfg.n = 200;
    cfg.theta_panel = {0.5, 0.9};
    cfg.delta = 0.05;
    cfg.trials = 400;
    cfg.seed = 21;

    // The deterministic side at theta = 0.9 with the coverage scale rule.
    const double m2 = cfg.dist.second_moment().value();
    const double s = select_scale(cfg.n, RobustMeanConfig{cfg.delta, m2});
    const double mean = cfg.dist.mean().value();
    const double theta = 0.9;
    const double rhs = theta * mean / s + theta * m2 / (2.0 * s * s) +
                       (kl_bernoulli(theta, 0.5) + std::log(1.0 / cfg.delta)) /
                           static_cast<double>(cfg.n);
    CHECK(rhs == doctest::Approx(0.12478127502443196).epsilon(1e-14));

    const Lemma31Trial one = lemma31_trial(cfg, 0);
    REQUIRE(one.lhs.size() == 2);
    REQUIRE(one.rhs.size() == 2);
    CHECK(one.rhs[1] == doctest::Approx(rhs).epsilon(1e-14));

    const Lemma31Report rep = check_lemma31_empirical(cfg);
    CHECK(rep.trials == 400);
    CHECK(rep.threshold == doctest::Approx(0.95));
    CHECK(rep.scale == doctest::Approx(s).epsilon(1e-15));
    CHECK(rep.joint_frequency >= rep.threshold - 3.0 * rep.std_error);
    CHECK(rep.pass);
    for (double f : rep.per_theta_frequency) CHECK(f >= rep.joint_frequency);
}

TEST_CASE("smoothed-estimator config validation") {
    Lemma31Config cfg;
    cfg.dist = DistributionSpec::log_normal(0.0, 1.0);
    // Endpoints are legitimate: both Bernoulli KL terms stay finite there.
    cfg.theta_panel = {0.0, 0.5, 1.0};
    CHECK_NOTHROW(cfg.validate());
    cfg.theta_panel = {-0.1, 0.5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.theta_panel = {0.5, 1.5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.theta_panel = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.theta_panel = {0.5};
    cfg.delta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.delta = 0.05;
    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

} // TEST_SUITE
