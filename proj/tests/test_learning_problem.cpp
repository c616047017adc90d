#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "heavytail/errors.hpp"
#include "heavytail/learning_problem.hpp"

using namespace heavytail;

namespace {

// Scratch file that cleans up after itself.
struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const char* name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove(path);
    }
    ~TempFile() { std::filesystem::remove(path); }
};

} // namespace

TEST_SUITE("learning_problem") {

TEST_CASE("loss semantics") {
    CHECK(loss_value(LossKind::Absolute, 2.0, 5.0) == 3.0);
    CHECK(loss_value(LossKind::Absolute, 2.0, -1.0) == 3.0);
    CHECK(loss_value(LossKind::Squared, 2.0, 5.0) == 9.0);
    CHECK(loss_value(LossKind::Squared, -1.5, -1.5) == 0.0);
    // 0/1 loss: wrong iff the sign of z - theta disagrees with the sign of
    // z, where zero counts as negative.
    CHECK(loss_value(LossKind::ZeroOne, 1.0, 2.0) == 0.0);
    CHECK(loss_value(LossKind::ZeroOne, 3.0, 2.0) == 1.0);
    CHECK(loss_value(LossKind::ZeroOne, -1.0, -2.0) == 0.0);
    CHECK(loss_value(LossKind::ZeroOne, -3.0, -2.0) == 1.0);
    CHECK(loss_value(LossKind::ZeroOne, 1.0, 1.0) == 1.0);   // z - theta = 0 counts negative
    CHECK(loss_value(LossKind::ZeroOne, -1.0, 0.0) == 1.0);
    CHECK(loss_value(LossKind::ZeroOne, 0.0, 0.0) == 0.0);
}

TEST_CASE("frozen closed forms: log-normal data") {
    LearningProblem abs{DistributionSpec::log_normal(0.0, 1.0), LossKind::Absolute, {2.0}};
    const auto m = closed_form_moments(abs, 2.0);
    REQUIRE(m);
    CHECK(m->risk == doctest::Approx(1.4209809723716575).epsilon(1e-13));
    CHECK(m->m2 == doctest::Approx(4.7941710161301376).epsilon(1e-13));
    CHECK(m->m3 == doctest::Approx(61.129513242139071).epsilon(1e-13));
    CHECK(m->variance == doctest::Approx(m->m2 - m->risk * m->risk).epsilon(1e-13));

    LearningProblem zo{DistributionSpec::log_normal(0.0, 1.0), LossKind::ZeroOne, {2.0}};
    const auto z = closed_form_moments(zo, 2.0);
    REQUIRE(z);
    CHECK(z->risk == doctest::Approx(0.75589140421441727).epsilon(1e-14));
    CHECK(z->m2 == z->risk);   // 0/1 loss equals its own powers
    CHECK(z->m3 == z->risk);
    CHECK(z->variance == doctest::Approx(z->risk * (1.0 - z->risk)).epsilon(1e-14));
}

TEST_CASE("frozen closed forms: normal data") {
    LearningProblem sq{DistributionSpec::normal(0.0, 1.0), LossKind::Squared, {2.0}};
    const auto m = closed_form_moments(sq, 2.0);
    REQUIRE(m);
    CHECK(m->risk == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(m->m2 == doctest::Approx(43.0).epsilon(1e-13));
    CHECK(m->m3 == doctest::Approx(499.0).epsilon(1e-13));

    LearningProblem abs{DistributionSpec::normal(0.0, 1.0), LossKind::Absolute, {2.0}};
    const auto a = closed_form_moments(abs, 2.0);
    REQUIRE(a);
    CHECK(a->risk == doctest::Approx(2.0169814052336593).epsilon(1e-14));
    CHECK(a->m2 == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(a->m3 == doctest::Approx(14.010887903609239).epsilon(1e-13));
}

TEST_CASE("atom distributions are enumerated exactly for every loss") {
    LearningProblem p{DistributionSpec::bernoulli(0.25), LossKind::Absolute, {0.2}};
    const auto m = closed_form_moments(p, 0.2);
    REQUIRE(m);
    // Losses are 0.2 with mass 0.75 and 0.8 with mass 0.25.
    CHECK(m->risk == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(m->m2 == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(m->m3 == doctest::Approx(0.134).epsilon(1e-15));
    CHECK(m->variance == doctest::Approx(0.0675).epsilon(1e-15));

    p.loss = LossKind::ZeroOne;
    const auto z = closed_form_moments(p, 0.2);
    REQUIRE(z);
    // z = 0: sign(z - 0.2) = sign(z) = -1, correct.  z = 1: sign(0.8) = +1
    // = sign(1), correct.  Zero risk despite the odd sign convention.
    CHECK(z->risk == 0.0);

    LearningProblem pm{DistributionSpec::point_mass(3.0), LossKind::Squared, {1.0}};
    const auto q = closed_form_moments(pm, 1.0);
    REQUIRE(q);
    CHECK(q->risk == 4.0);
    CHECK(q->m2 == 16.0);
    CHECK(q->m3 == 64.0);
    CHECK(q->variance == 0.0);
}

TEST_CASE("squared risk is convex in theta and minimized at the data mean") {
    LearningProblem p{DistributionSpec::log_normal(0.0, 0.5), LossKind::Squared, {0.0}};
    const double mu = p.data.mean().value();
    const std::vector<double> grid = linspace(mu - 2.0, mu + 2.0, 41);
    std::vector<double> risk(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        risk[i] = closed_form_moments(p, grid[i])->risk;
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (risk[i] < risk[argmin]) argmin = i;
        if (i + 1 < grid.size()) {
            const double second_diff = risk[i + 1] - 2.0 * risk[i] + risk[i - 1];
            CHECK(second_diff >= -1e-10);
        }
    }
    // The grid straddles the mean symmetrically, so its midpoint must win.
    CHECK(grid[argmin] == doctest::Approx(mu).epsilon(1e-12));
}

TEST_CASE("infinite data moments are refused with a pointed message") {
    LearningProblem t_abs{DistributionSpec::student_t(2.5), LossKind::Absolute, {0.0}};
    CHECK_THROWS_WITH_AS((void)closed_form_moments(t_abs, 0.0),
                         doctest::Contains("needs nu > 3"), CapabilityError);
    LearningProblem par_sq{DistributionSpec::pareto(1.0, 2.5), LossKind::Squared, {0.0}};
    CHECK_THROWS_WITH_AS((void)closed_form_moments(par_sq, 0.0),
                         doctest::Contains("needs alpha > 6"), CapabilityError);
    // The bounded loss never needs tail moments, even on the same data.
    LearningProblem t_zo{DistributionSpec::student_t(2.5), LossKind::ZeroOne, {0.0}};
    CHECK_NOTHROW((void)closed_form_moments(t_zo, 0.0));
    // Heavier nu clears the requirement.
    LearningProblem t4{DistributionSpec::student_t(4.0), LossKind::Absolute, {0.0}};
    CHECK_NOTHROW((void)closed_form_moments(t4, 0.0));
}

TEST_CASE("linspace") {
    const auto g = linspace(-1.0, 1.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g[0] == -1.0);
    CHECK(g[1] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g[2] == doctest::Approx(0.0));
    CHECK(g[4] == 1.0);
    CHECK(linspace(2.5, 9.0, 1) == std::vector<double>{2.5});
    CHECK_THROWS_AS((void)linspace(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)linspace(1.0, 0.0, 3), std::invalid_argument);
}

TEST_CASE("problem validation and description") {
    LearningProblem p{DistributionSpec::normal(0.0, 1.0), LossKind::Absolute, {}};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.grid = {0.0, std::nan("")};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.grid = {0.0, 1.0};
    CHECK_NOTHROW(p.validate());
    CHECK(p.describe() == "absolute|normal(mean=0,stddev=1)");
    p.loss = LossKind::ZeroOne;
    CHECK(p.describe() == "zero_one|normal(mean=0,stddev=1)");
    CHECK_THROWS_AS((void)closed_form_moments(p, std::nan("")), std::invalid_argument);
}

TEST_CASE("provider on the closed-form path") {
    LearningProblem p{DistributionSpec::normal(1.0, 2.0), LossKind::Squared,
                      linspace(-1.0, 3.0, 9)};
    MomentProvider prov(p);
    CHECK(prov.closed_form());
    CHECK(!prov.mc_info(0));
    CHECK(prov.risks().size() == 9);
    double worst_m2 = 0.0, worst_m3 = 0.0, worst_var = 0.0;
    for (std::size_t h = 0; h < 9; ++h) {
        const auto direct = closed_form_moments(p, p.grid[h]);
        CHECK(prov.moments(h).risk == direct->risk);
        CHECK(prov.moments(h).m2 == direct->m2);
        CHECK(prov.risk(h) == direct->risk);
        worst_m2 = std::max(worst_m2, direct->m2);
        worst_m3 = std::max(worst_m3, direct->m3);
        worst_var = std::max(worst_var, direct->variance);
    }
    CHECK(prov.m2_cap() == worst_m2);
    CHECK(prov.m3_cap() == worst_m3);
    CHECK(prov.var_cap() == worst_var);
    CHECK_THROWS_AS((void)prov.moments(9), std::out_of_range);
    CHECK_THROWS_AS((void)prov.mc_info(9), std::out_of_range);
}

TEST_CASE("provider falls back to Monte Carlo and caches to disk") {
    // Student-t(4) has no closed absolute-loss form here (no cdf), but all
    // the needed moments exist; E|t_4| = 1 exactly anchors the sanity band.
    LearningProblem p{DistributionSpec::student_t(4.0), LossKind::Absolute, {0.0, 0.5}};
    TempFile cache("heavytail_test_moment_cache.json");
    MomentProvider::Options opt;
    opt.cache_path = cache.path;
    opt.seed = 33;
    opt.samples = 200'000;

    MomentProvider fresh(p, opt);
    CHECK(!fresh.closed_form());
    const auto info0 = fresh.mc_info(0);
    REQUIRE(info0);
    CHECK(!info0->from_cache);
    CHECK(info0->samples == 200'000);
    CHECK(info0->se_risk > 0.0);
    CHECK(std::abs(info0->moments.risk - 1.0) <= 5.0 * info0->se_risk);
    CHECK(info0->moments.variance ==
          doctest::Approx(info0->moments.m2 -
                          info0->moments.risk * info0->moments.risk));
    CHECK(std::filesystem::exists(cache.path));

    // Second provider: identical numbers, served from the cache.
    MomentProvider warm(p, opt);
    const auto again = warm.mc_info(1);
    REQUIRE(again);
    CHECK(again->from_cache);
    CHECK(again->moments.risk == fresh.mc_info(1)->moments.risk);
    CHECK(again->moments.m3 == fresh.mc_info(1)->moments.m3);
    CHECK(again->se_m2 == fresh.mc_info(1)->se_m2);

    // A cache written by a different generator version must be ignored.
    {
        nlohmann::json j;
        std::ifstream in(cache.path);
        in >> j;
        j["version"] = "someone-elses-generator v0";
        std::ofstream out(cache.path);
        out << j.dump(1) << '\n';
    }
    MomentProvider stale(p, opt);
    CHECK(!stale.mc_info(0)->from_cache);
    CHECK(stale.mc_info(0)->moments.risk == fresh.mc_info(0)->moments.risk);

    // A corrupt cache file is recomputed, not fatal.
    {
        std::ofstream out(cache.path);
        out << "{not json";
    }
    MomentProvider recovered(p, opt);
    CHECK(!recovered.mc_info(0)->from_cache);
    CHECK(recovered.mc_info(0)->moments.risk == fresh.mc_info(0)->moments.risk);

    // In-memory only: no file side effects.
    std::filesystem::remove(cache.path);
    MomentProvider memory_only(p, MomentProvider::Options{{}, 33, 50'000});
    CHECK(!std::filesystem::exists(cache.path));
    CHECK_THROWS_AS(MomentProvider(p, MomentProvider::Options{{}, 33, 0}), ConfigError);
}

TEST_CASE("Monte Carlo draws are deterministic in the seed") {
    LearningProblem p{DistributionSpec::student_t(4.0), LossKind::Absolute, {0.25}};
    MomentProvider a(p, MomentProvider::Options{{}, 7, 50'000});
    MomentProvider b(p, MomentProvider::Options{{}, 7, 50'000});
    MomentProvider c(p, MomentProvider::Options{{}, 8, 50'000});
    CHECK(a.moments(0).risk == b.moments(0).risk);
    CHECK(a.moments(0).m3 == b.moments(0).m3);
    CHECK(a.moments(0).risk != c.moments(0).risk);
}

} // TEST_SUITE
