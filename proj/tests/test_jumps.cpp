#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mlmc/analytic.hpp"
#include "mlmc/driver.hpp"
#include "mlmc/jumps.hpp"

using namespace mlmc;
using namespace testing_support;
using Catch::Approx;

namespace {

ModelSpec merton(double lambda) {
    return make_model("merton",
                      {{"r", 0.05}, {"sigma", 0.2}, {"lambda", lambda}, {"jump_mu", -0.1}, {"jump_sigma", 0.2}, {"x0", 1}});
}

PayoffSpec payoff_of(PayoffFamily family, double barrier = 0.0) {
    PayoffSpec p;
    p.family = family;
    p.barrier = barrier;
    p.discount = std::exp(-0.05);
    return p;
}

// Intensity fixed at a fraction of the bound.
JumpSpec constant_fraction(const ModelSpec& model, double bound, double fraction) {
    JumpSpec j = merton_jumps(model);
    j.rate = bound;
    j.intensity = [bound, fraction](double) { return bound * fraction; };
    return j;
}

}  // namespace

TEST_CASE("jump times") {
    CounterStream s({1, 0, 0, StreamPurpose::jumps});
    CHECK(sample_jump_times(s, 0.0, 1.0).empty());
    CHECK_THROWS(sample_jump_times(s, -1.0, 1.0));
    std::vector<double> counts;
    for (std::uint64_t k = 0; k < 1000000; ++k) {
        CounterStream t({2, 0, k, StreamPurpose::jumps});
        const auto times = sample_jump_times(t, 2.0, 1.0);
        for (std::size_t i = 0; i < times.size(); ++i) {
            REQUIRE(times[i] <= 1.0);
            if (i > 0) REQUIRE(times[i] > times[i - 1]);
        }
        counts.push_back(double(times.size()));
    }
    const Moments m = moments(counts);
    CHECK(std::abs(m.mean - 2.0) < 3 * std::sqrt(2.0 / 1e6));
    // Variance of the sample variance for Poisson(2): (mu4 - sigma^4) / n with mu4 = 2 + 3 * 4.
    CHECK(std::abs(m.var - 2.0) < 3 * std::sqrt((14.0 - 4.0) / 1e6));
}

TEST_CASE("jump-adapted grid") {
    const LevelGrid grid = LevelGrid::make(1, 1.0);
    CHECK(jump_adapted_grid(grid, {}) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(jump_adapted_grid(grid, {0.3}) == std::vector<double>{0.0, 0.3, 0.5, 1.0});
    CHECK(jump_adapted_grid(grid, {0.5}) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(jump_adapted_grid(grid, {0.2, 0.7}) == std::vector<double>{0.0, 0.2, 0.5, 0.7, 1.0});
    CHECK_THROWS(jump_adapted_grid(grid, {1.5}));
}

TEST_CASE("brownian values at jump times are consistent with the increments") {
    const ModelSpec m = merton(20.0);
    const LevelGrid grid = LevelGrid::make(3, 1.0);
    for (std::uint64_t k = 0; k < 200; ++k) {
        const IncrementSet inc = sample_jump_increments({3, 3, k}, grid, m, merton_jumps(m));
        REQUIRE(inc.jump_marks.size() == inc.jump_times.size());
        REQUIRE(inc.jump_bridge_uniforms.size() == inc.jump_times.size());
        for (std::size_t i = 0; i < inc.jump_times.size(); ++i) {
            const double tau = inc.jump_times[i];
            REQUIRE(tau > 0.0);
            REQUIRE(inc.jump_marks[i] > 0.0);
            if (tau == 1.0) continue;
            // Offsets are finite and vanish as the jump approaches the step start.
            REQUIRE(std::isfinite(inc.jump_brownian[i]));
        }
    }
}

TEST_CASE("without jumps the jump sampler reproduces the diffusion sampler") {
    const ModelSpec m = merton(0.0);
    const JumpSpec none = merton_jumps(m);
    for (auto family : {PayoffFamily::european, PayoffFamily::lookback, PayoffFamily::barrier, PayoffFamily::digital}) {
        const PayoffSpec p = payoff_of(family, family == PayoffFamily::barrier ? 0.9 : 0.0);
        const JumpSampler jumps(m, none, p, 1.0);
        const PricingSampler plain(m, p, 1.0);
        for (int level : {0, 1, 4}) {
            const LevelGrid grid = LevelGrid::make(level, 1.0);
            for (std::uint64_t k = 0; k < 50; ++k) {
                const StreamKey key{5, std::uint32_t(level), k};
                const SampleResult a = jumps.sample(grid, key, SampleMode::coupled);
                const SampleResult b = plain.sample(grid, key, SampleMode::coupled);
                INFO(to_string(family) << " level " << level);
                REQUIRE(a.fine == Approx(b.fine).margin(1e-14));
                REQUIRE(a.coarse == Approx(b.coarse).margin(1e-14));
                REQUIRE(a.cost == b.cost);
            }
        }
    }
}

TEST_CASE("a zero jump coefficient leaves the price unchanged") {
    ModelSpec m = gbm();
    JumpSpec j = merton_jumps(merton(5.0));
    j.coefficient = [](double) { return 0.0; };
    const PayoffSpec p = payoff_of(PayoffFamily::european);
    const JumpSampler jumps(m, j, p, 1.0);
    const PricingSampler plain(m, p, 1.0);
    const LevelGrid grid = LevelGrid::make(4, 1.0);
    const LevelStats a = sample_level(jumps, grid, 1, 0, 100000, SampleMode::fine_only);
    const LevelStats b = sample_level(plain, grid, 2, 0, 100000, SampleMode::fine_only);
    CHECK(std::abs(a.mean_fine() - b.mean_fine()) <
          3 * std::sqrt(a.var_fine() / 1e5 + b.var_fine() / 1e5));
}

TEST_CASE("jump on a coarse midpoint collapses the coarse interval onto the fine one") {
    const ModelSpec m = merton(1.0);
    const JumpSpec j = merton_jumps(m);
    const LevelGrid grid = LevelGrid::make(1, 1.0);
    IncrementSet inc;
    inc.fine = {0.1, -0.3};
    form_coarse_increments(inc);
    inc.uniforms = {0.3, 0.6};
    inc.jump_times = {0.5};
    inc.jump_marks = {0.8};
    inc.jump_uniforms = {0.2};
    inc.jump_bridge_uniforms = {0.9};
    inc.jump_brownian = {0.0};
    const JumpCoupledPaths paths = jump_adapted_milstein_pair(m, j, grid, inc);
    REQUIRE(paths.coarse);
    CHECK(paths.coarse->path.times == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(paths.coarse->path.values == paths.fine.path.values);
    CHECK(paths.coarse->path.left_limits == paths.fine.path.left_limits);
    for (auto family : {PayoffFamily::european, PayoffFamily::lookback, PayoffFamily::barrier, PayoffFamily::digital}) {
        const PayoffPair pair = jump_payoff_pair(paths, payoff_of(family, 0.7), m, grid, inc);
        INFO(to_string(family));
        CHECK(pair.fine == Approx(pair.coarse).margin(1e-15));
    }
    // The jump multiplies the left limit by the mark.
    CHECK(paths.fine.path.values[1] == Approx(0.8 * paths.fine.path.left_limits[1]));
}

TEST_CASE("jump-adapted barrier far below the path is the european payoff") {
    const ModelSpec m = merton(2.0);
    const LevelGrid grid = LevelGrid::make(3, 1.0);
    for (std::uint64_t k = 0; k < 50; ++k) {
        const IncrementSet inc = sample_jump_increments({6, 3, k}, grid, m, merton_jumps(m));
        const auto paths = jump_adapted_milstein_pair(m, merton_jumps(m), grid, inc);
        const PayoffPair b = jump_payoff_pair(paths, payoff_of(PayoffFamily::barrier, 1e-8), m, grid, inc);
        const PayoffPair e = jump_payoff_pair(paths, payoff_of(PayoffFamily::european), m, grid, inc);
        CHECK(b.fine == Approx(e.fine));
        CHECK(b.coarse == Approx(e.coarse));
    }
}

TEST_CASE("thinning weights have unit mean") {
    const ModelSpec m = merton(3.0);
    const JumpSpec j = decaying_intensity_jumps(m, 3.0);
    const LevelGrid grid = LevelGrid::make(2, 1.0);
    std::vector<double> w;
    for (std::uint64_t k = 0; k < 100000; ++k) {
        const IncrementSet inc = sample_jump_increments({7, 2, k}, grid, m, j);
        w.push_back(jump_adapted_milstein_pair(m, j, grid, inc, ThinningMode::measure_change).fine.weight);
    }
    const Moments s = moments(w);
    CHECK(std::abs(s.mean - 1.0) < 3 * s.se());
}

TEST_CASE("direct thinning at half the bound gives poisson counts at half the rate") {
    const ModelSpec m = merton(4.0);
    const JumpSpec j = constant_fraction(m, 4.0, 0.5);
    const LevelGrid grid = LevelGrid::make(1, 1.0);
    std::vector<double> counts;
    for (std::uint64_t k = 0; k < 100000; ++k) {
        const IncrementSet inc = sample_jump_increments({8, 1, k}, grid, m, j);
        counts.push_back(jump_adapted_milstein_pair(m, j, grid, inc, ThinningMode::direct).fine.jumps);
    }
    const Moments s = moments(counts);
    CHECK(std::abs(s.mean - 2.0) < 3 * std::sqrt(2.0 / 1e5));
    CHECK(std::abs(s.var - 2.0) < 3 * std::sqrt(10.0 / 1e5));
}

TEST_CASE("measure change at full intensity reproduces constant-rate jumps") {
    const ModelSpec m = merton(2.0);
    const JumpSpec full = constant_fraction(m, 2.0, 1.0);
    const PayoffSpec p = payoff_of(PayoffFamily::european);
    const JumpSampler changed(m, full, p, 1.0, ThinningMode::measure_change);
    const JumpSampler direct(m, merton_jumps(m), p, 1.0);
    const LevelGrid grid = LevelGrid::make(4, 1.0);
    const LevelStats a = sample_level(changed, grid, 1, 0, 200000, SampleMode::fine_only);
    const LevelStats b = sample_level(direct, grid, 2, 0, 200000, SampleMode::fine_only);
    CHECK(std::abs(a.mean_fine() - b.mean_fine()) < 3 * std::sqrt(a.var_fine() / 2e5 + b.var_fine() / 2e5));
}

TEST_CASE("intensity above its bound is a runtime error") {
    const ModelSpec m = merton(1.0);
    const JumpSpec bad = constant_fraction(m, 1.0, 1.5);
    const LevelGrid grid = LevelGrid::make(2, 1.0);
    bool thrown = false;
    for (std::uint64_t k = 0; k < 20 && !thrown; ++k) {
        const IncrementSet inc = sample_jump_increments({9, 2, k}, grid, m, bad);
        if (inc.jump_times.empty()) continue;
        CHECK_THROWS_AS(jump_adapted_milstein_pair(m, bad, grid, inc, ThinningMode::direct), std::runtime_error);
        thrown = true;
    }
    CHECK(thrown);
}

TEST_CASE("jump sampler configuration checks") {
    const ModelSpec m = merton(1.0);
    const PayoffSpec p = payoff_of(PayoffFamily::european);
    CHECK_THROWS(JumpSampler(m, merton_jumps(m), p, 1.0, ThinningMode::direct));
    CHECK_THROWS(JumpSampler(m, decaying_intensity_jumps(m, 2.0), p, 1.0, ThinningMode::none));
    PayoffSpec euler = p;
    euler.mode = SchemeMode::euler;
    CHECK_THROWS(JumpSampler(m, merton_jumps(m), euler, 1.0));
    CHECK_THROWS(decaying_intensity_jumps(m, 0.0));
}

TEST_CASE("mlmc prices the merton call") {
    const ModelSpec m = merton(1.0);
    const JumpSampler sampler(m, merton_jumps(m), payoff_of(PayoffFamily::european), 1.0);
    MertonInputs in;
    in.diffusion = {1.0, 1.0, 0.05, 0.2, 1.0};
    in.jump_rate = 1.0;
    in.jump_mu = -0.1;
    in.jump_sigma = 0.2;
    const double exact = merton_call(in).value;
    MlmcConfig cfg;
    cfg.eps = 0.005;
    const MlmcResult r = run_mlmc(sampler, cfg);
    CHECK(std::abs(r.estimate - exact) < 3 * cfg.eps);
}
