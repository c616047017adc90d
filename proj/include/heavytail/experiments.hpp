#ifndef HEAVYTAIL_EXPERIMENTS_HPP
#define HEAVYTAIL_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heavytail/learning_problem.hpp"
#include "heavytail/pac_bayes.hpp"
#include "heavytail/robust_mean.hpp"

namespace heavytail {

// The simulation studies the CLI can launch.  Each one turns a guarantee
// into an empirical frequency (or a head-to-head comparison) and reports
// pass/fail against a 3-standard-error margin.
enum class ExperimentKind {
    Coverage,           // one-stage estimator hits its radius
    CenteredCoverage,   // two-stage estimator under location shifts
    Lemma31,            // smoothed-estimator inequality, joint over a panel
    ChernoffCheck,      // binomial tail vs exp(-2 n eps^2)
    CountableBound,     // simultaneous per-hypothesis risk bounds
    UncountableBound,   // class-level bound at the robust Gibbs posterior
    GibbsCompare,       // robust vs traditional Gibbs under contamination
    IdentityCheck,      // exact KL/tilt identity on random instances
    CompareEstimators,  // deviation quantiles: empirical vs truncated vs centered
};

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);  // ConfigError

// JSON forms of the domain inputs and reports.  The field names here are
// the config-file format documented in the README; changing them breaks
// saved configs and recorded config hashes.
nlohmann::json to_json(const DistributionSpec& spec);
DistributionSpec dist_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LearningProblem& problem);
LearningProblem problem_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EstimateReport& rep);
nlohmann::json to_json(const BoundReport& rep);

// One experiment run.  Optional knobs fall back to documented defaults at
// run time: m2_bound / var_bound to the distribution's analytic moments,
// k to floor(n/2).  Fields irrelevant to the chosen experiment are
// ignored and left out of the effective config echo.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Coverage;
    std::size_t trials = 1000;
    std::size_t n = 100;
    double delta = 0.05;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: one worker per hardware thread

    std::optional<DistributionSpec> dist;   // estimator experiments
    std::optional<LearningProblem> problem; // bound experiments
    std::optional<double> m2_bound;
    std::optional<double> var_bound;
    std::optional<std::size_t> k;           // first-stage size, two-stage estimator

    std::vector<double> theta_panel{0.5, 0.9};  // lemma31
    std::optional<double> scale;                // lemma31: override the scale rule

    std::vector<double> theta_list{0.3, 0.5};       // chernoff_check cells
    std::vector<std::size_t> n_list{50, 100};       //   (theta x n x eps)
    std::vector<double> eps_list{0.05, 0.1, 0.2};

    bool contaminate = true;  // gibbs_compare: plant one wild observation
    double outlier = 1e6;     //   with this value

    std::optional<std::string> out;           // output directory; empty: no files
    std::optional<std::string> moment_cache;  // Monte Carlo moment cache file

    // Parses the documented config format; unknown keys are rejected so
    // typos fail loudly instead of silently running defaults.
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;  // ConfigError

    // The config with run-time defaults resolved, as echoed in summaries
    // and hashed into `config_hash`.
    nlohmann::json to_effective_json() const;
};

// What run() hands back: the JSON summary (also written to disk when an
// output directory is set), the full per-trial CSV, and the run verdict.
struct RunResult {
    nlohmann::json summary;
    std::string trials_csv;
    bool pass = false;
};

// Executes the experiment.  Deterministic for a fixed config: trial t
// always consumes generator stream (seed, t) (chernoff cells use
// cell*trials + t), so thread count never changes any output byte.
RunResult run(const ExperimentConfig& cfg);

// Writes <dir>/trials.csv and <dir>/summary.json, creating <dir> first.
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

// Lower empirical quantile: the ceil(q * size)-th smallest value.
double empirical_quantile(std::vector<double> values, double q);

} // namespace heavytail

#endif
