#include "heavytail/lemma31.hpp"

#include <cmath>

#include "heavytail/discrete_info.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/robust_mean.hpp"

namespace heavytail {

void Lemma31Config::validate() const {
    dist.validate();
    if (n == 0) throw ConfigError("lemma31: n must be positive");
    if (trials == 0) throw ConfigError("lemma31: trials must be positive");
    if (!std::isfinite(delta) || delta <= 0.0 || delta >= 1.0)
        throw ConfigError("lemma31: delta must lie in (0, 1)");
    if (theta_panel.empty()) throw ConfigError("lemma31: theta panel is empty");
    for (double t : theta_panel)
        if (!(t >= 0.0 && t <= 1.0))
            throw ConfigError("lemma31: panel entries must lie in [0, 1]");
    if (!dist.mean() || !dist.second_moment())
        throw ConfigError("lemma31: distribution needs finite E[x] and E[x^2], got " +
                          dist.describe());
}

namespace {

double effective_scale(const Lemma31Config& cfg) {
    if (cfg.s > 0.0) return cfg.s;
    RobustMeanConfig rm{cfg.delta, *cfg.dist.second_moment()};
    return select_scale(cfg.n, rm);
}

} // namespace

Lemma31Trial lemma31_trial(const Lemma31Config& cfg, std::uint64_t stream) {
    cfg.validate();
    const double s = effective_scale(cfg);
    const double ex = *cfg.dist.mean();
    const double ex2 = *cfg.dist.second_moment();
    const double ld = std::log(1.0 / cfg.delta);
    const double n = static_cast<double>(cfg.n);

    Sampler draw(cfg.dist, Xoshiro256pp(cfg.seed, stream));
    double psi_sum = 0.0;
    TruncationFn trunc;
    for (std::size_t i = 0; i < cfg.n; ++i) psi_sum += trunc(draw() / s);

    Lemma31Trial out;
    out.lhs.reserve(cfg.theta_panel.size());
    out.rhs.reserve(cfg.theta_panel.size());
    for (double theta : cfg.theta_panel) {
        const double lhs = theta * psi_sum / n;  // (theta/s) * xhat
        const double rhs = theta * ex / s + theta * ex2 / (2.0 * s * s) +
                           (kl_bernoulli(theta, 0.5) + ld) / n;
        out.lhs.push_back(lhs);
        out.rhs.push_back(rhs);
        out.joint_holds = out.joint_holds && lhs <= rhs;
    }
    return out;
}

Lemma31Report check_lemma31_empirical(const Lemma31Config& cfg) {
    cfg.validate();
    Lemma31Report rep;
    rep.trials = cfg.trials;
    rep.theta_panel = cfg.theta_panel;
    rep.per_theta_frequency.assign(cfg.theta_panel.size(), 0.0);
    rep.scale = effective_scale(cfg);

    std::size_t joint = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const Lemma31Trial tr = lemma31_trial(cfg, t);
        for (std::size_t j = 0; j < cfg.theta_panel.size(); ++j)
            if (tr.lhs[j] <= tr.rhs[j]) rep.per_theta_frequency[j] += 1.0;
        if (tr.joint_holds) ++joint;
    }
    for (double& f : rep.per_theta_frequency) f /= static_cast<double>(cfg.trials);
    rep.joint_frequency = static_cast<double>(joint) / static_cast<double>(cfg.trials);
    rep.std_error = std::sqrt(rep.joint_frequency * (1.0 - rep.joint_frequency) /
                              static_cast<double>(cfg.trials));
    rep.threshold = 1.0 - cfg.delta;
    rep.pass = rep.joint_frequency >= rep.threshold - 3.0 * rep.std_error;
    return rep;
}

} // namespace heavytail
