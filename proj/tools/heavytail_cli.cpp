// Command-line front end: one-shot robust mean estimation plus the
// simulation experiments.  Exit codes: 0 success, 2 when a theorem
// precondition is violated (AssumptionError), 1 for I/O or config errors.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "heavytail/errors.hpp"
#include "heavytail/experiments.hpp"
#include "heavytail/robust_mean.hpp"

namespace {

using heavytail::ConfigError;

// One decimal number per line; blank lines and surrounding whitespace are
// tolerated, anything else is an error naming the offending line.
std::vector<double> read_numbers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const char* begin = line.data() + first;
        const char* end = line.data() + last + 1;
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": not a number: \"" + line + "\"");
        out.push_back(value);
    }
    if (out.empty()) throw std::runtime_error(path + ": no numbers found");
    return out;
}

struct EstimateFlags {
    std::string path;
    double delta = 0.05;
    std::optional<double> m2_bound;
    bool m2_auto = false;
    bool centered = false;
    std::optional<double> var_bound;
    std::optional<std::size_t> k;
};

void run_estimate(const EstimateFlags& f) {
    const std::vector<double> data = read_numbers(f.path);
    heavytail::RobustMeanConfig cfg;
    cfg.delta = f.delta;
    if (f.m2_bound && f.m2_auto)
        throw ConfigError("give either --m2-bound or --m2-auto, not both");
    if (f.m2_bound) {
        cfg.m2_bound = *f.m2_bound;
    } else if (f.m2_auto) {
        cfg.m2_bound = heavytail::empirical_m2_bound(data);
        cfg.m2_is_heuristic = true;
    } else {
        throw ConfigError("estimate needs --m2-bound <value> or --m2-auto");
    }

    heavytail::EstimateReport rep;
    if (f.centered) {
        if (!f.var_bound) throw ConfigError("--centered needs --var-bound <value>");
        rep = heavytail::estimate_centered(data, cfg, *f.var_bound, f.k);
    } else {
        rep = heavytail::estimate(data, cfg);
    }
    std::cout << heavytail::to_json(rep).dump(2) << '\n';
}

struct ExperimentFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> n;
    std::optional<double> delta;
    std::optional<std::string> out;
};

void run_experiment_command(const ExperimentFlags& f, const std::string& default_kind,
                            const std::vector<std::string>& allowed,
                            const std::string& subcommand) {
    nlohmann::json j = nlohmann::json::object();
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw std::runtime_error("cannot open " + f.config_path);
        j = nlohmann::json::parse(in);
    }
    if (!j.contains("experiment")) j["experiment"] = default_kind;

    heavytail::ExperimentConfig cfg = heavytail::ExperimentConfig::from_json(j);
    const std::string kind = heavytail::experiment_name(cfg.kind);
    if (std::find(allowed.begin(), allowed.end(), kind) == allowed.end())
        throw ConfigError("experiment \"" + kind + "\" does not belong to subcommand \"" +
                          subcommand + "\"");
    if (f.seed) cfg.seed = *f.seed;
    if (f.trials) cfg.trials = *f.trials;
    if (f.n) cfg.n = *f.n;
    if (f.delta) cfg.delta = *f.delta;
    if (f.out) cfg.out = *f.out;

    const heavytail::RunResult res = heavytail::run(cfg);
    std::cout << res.summary.dump(2) << '\n';
}

void add_experiment_sub(CLI::App& app, const std::string& name, const std::string& help,
                        const std::string& default_kind,
                        std::vector<std::string> allowed) {
    auto flags = std::make_shared<ExperimentFlags>();
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags->config_path, "JSON config file");
    sub->add_option("--seed", flags->seed, "override: generator seed");
    sub->add_option("--trials", flags->trials, "override: Monte Carlo trials");
    sub->add_option("--n", flags->n, "override: sample size per trial");
    sub->add_option("--delta", flags->delta, "override: failure probability");
    sub->add_option("--out", flags->out, "write trials.csv and summary.json here");
    sub->callback([flags, default_kind, allowed = std::move(allowed), name] {
        run_experiment_command(*flags, default_kind, allowed, name);
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust mean estimation and PAC-Bayesian bound experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version",
                         std::string("heavytail (") + std::string(heavytail::kGeneratorVersion) +
                             ")");

    auto est = std::make_shared<EstimateFlags>();
    CLI::App* sub = app.add_subcommand("estimate", "robust mean of a numbers file");
    sub->add_option("file", est->path, "input file, one decimal per line")->required();
    sub->add_option("--delta", est->delta, "per-tail failure probability (default 0.05)");
    sub->add_option("--m2-bound", est->m2_bound, "known bound on E[x^2]");
    sub->add_flag("--m2-auto", est->m2_auto,
                  "use the inflated empirical second moment (heuristic; the formal "
                  "guarantee is lost)");
    sub->add_flag("--centered", est->centered, "two-stage location-then-estimate variant");
    sub->add_option("--var-bound", est->var_bound, "variance bound for --centered");
    sub->add_option("--k", est->k, "first-stage sample size (default n/2)");
    sub->callback([est] { run_estimate(*est); });

    add_experiment_sub(app, "coverage", "estimator coverage and tail-inequality checks",
                       "coverage",
                       {"coverage", "centered_coverage", "lemma31", "chernoff_check"});
    add_experiment_sub(app, "bound", "simultaneous risk-bound coverage checks",
                       "uncountable_bound", {"countable_bound", "uncountable_bound"});
    add_experiment_sub(app, "gibbs", "robust vs traditional Gibbs posterior comparison",
                       "gibbs_compare", {"gibbs_compare"});
    add_experiment_sub(app, "identity-check", "exact tilt/KL identity on random instances",
                       "identity_check", {"identity_check"});
    add_experiment_sub(app, "compare", "deviation quantiles of the three mean estimators",
                       "compare_estimators", {"compare_estimators"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const heavytail::AssumptionError& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
