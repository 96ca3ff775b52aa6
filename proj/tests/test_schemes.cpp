#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mlmc/schemes.hpp"

using namespace mlmc;
using namespace testing_support;
using Catch::Approx;

namespace {

double one_step(const ModelSpec& m, Scheme s, double dt, double dw) {
    const std::vector<double> w{dw};
    return integrate(m, s, dt, dt, w).terminal();
}

}  // namespace

TEST_CASE("euler step examples") {
    CHECK(one_step(gbm(), Scheme::euler, 1.0, 0.0) == Approx(1.05));
    CHECK(one_step(additive(0.0, 1.0, 0.0), Scheme::euler, 1.0, 0.3) == Approx(0.3));
    CHECK(one_step(gbm(), Scheme::euler, 0.25, 0.1) == Approx(1.0325));
}

TEST_CASE("milstein step examples") {
    CHECK(one_step(gbm(), Scheme::milstein, 0.25, 0.1) == Approx(1.0277));
    CHECK(one_step(gbm(), Scheme::milstein, 0.25, 0.5) == Approx(one_step(gbm(), Scheme::euler, 0.25, 0.5)));
    const ModelSpec add = additive(0.3, 0.7, 1.0);
    for (double dw : {-1.0, -0.2, 0.0, 0.4, 2.0}) {
        CHECK(one_step(add, Scheme::milstein, 0.1, dw) == one_step(add, Scheme::euler, 0.1, dw));
    }
}

TEST_CASE("multi-dimensional milstein on clark-cameron") {
    const ModelSpec m = make_model("clark_cameron", {{"x1_0", 1}, {"x2_0", 1}});
    const std::vector<double> w{0.3, -0.2, 0.1, 0.4};
    const PathState p = integrate(m, Scheme::milstein, 1.0, 0.5, w);
    // x1 += dw1; x2 += x1 dw2 + 1/2 dw1 dw2.
    const double x1a = 1.3, x2a = 1.0 + 1.0 * -0.2 + 0.5 * 0.3 * -0.2;
    CHECK(p.value(1, 0) == Approx(x1a));
    CHECK(p.value(1, 1) == Approx(x2a));
    CHECK(p.value(2, 0) == Approx(x1a + 0.1));
    CHECK(p.value(2, 1) == Approx(x2a + x1a * 0.4 + 0.5 * 0.1 * 0.4));
    CHECK(p.times == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("commutativity check") {
    const std::vector<std::vector<double>> probes{{0.5, 1.0}, {2.0, -1.0}, {1.3, 0.7}};
    const std::vector<std::vector<double>> scalar_probes{{0.5}, {2.0}};
    CHECK(is_commutative(gbm(), scalar_probes, 1e-12));
    CHECK_FALSE(is_commutative(make_model("clark_cameron", {}), probes, 1e-12));

    // Diagonal noise with g_ii depending on x_i only.
    ModelSpec diag;
    diag.label = "diag";
    diag.dim = 2;
    diag.drivers = 2;
    diag.x0 = {1, 1};
    diag.correlation = {1, 0, 0, 1};
    diag.drift = [](std::span<const double>, std::span<double> out) { out[0] = out[1] = 0; };
    diag.diffusion = [](std::span<const double> x, std::span<double> out) {
        out[0] = x[0] * x[0];
        out[1] = out[2] = 0;
        out[3] = std::sin(x[1]);
    };
    diag.milstein_tensor = [](std::span<const double> x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = 0.5 * x[0] * x[0] * 2 * x[0];
        out[7] = 0.5 * std::sin(x[1]) * std::cos(x[1]);
    };
    finalize_correlation(diag);
    CHECK(is_commutative(diag, probes, 1e-12));
}

TEST_CASE("coupled paths share the coarse increments") {
    const ModelSpec m = gbm();
    const LevelGrid grid = LevelGrid::make(4, 1.0);
    const IncrementSet inc = sample_increments({1, 4, 17, StreamPurpose::brownian}, grid, m);
    const CoupledPaths p = coupled_paths(m, Scheme::milstein, grid, inc);
    REQUIRE(p.coarse);
    CHECK(p.fine.steps() == 16);
    CHECK(p.coarse->steps() == 8);
    const PathState direct = integrate(m, Scheme::milstein, 1.0, 0.125, inc.coarse);
    CHECK(direct.values == p.coarse->values);

    const LevelGrid g0 = LevelGrid::make(0, 1.0);
    const CoupledPaths p0 = coupled_paths(m, Scheme::euler, g0, sample_increments({1, 0, 0, StreamPurpose::brownian}, g0, m));
    CHECK_FALSE(p0.coarse);
}

TEST_CASE("antithetic average equals the coarse second component at coarse nodes") {
    const ModelSpec m = make_model("clark_cameron", {{"x1_0", 1}, {"x2_0", 1}});
    for (int level : {1, 3, 6}) {
        const LevelGrid grid = LevelGrid::make(level, 1.0);
        for (std::uint64_t s = 0; s < 200; ++s) {
            const IncrementSet inc = sample_increments({5, std::uint32_t(level), s, StreamPurpose::brownian}, grid, m);
            const CoupledPaths p = antithetic_triple(m, grid, inc);
            for (std::size_t n = 0; n <= p.coarse->steps(); ++n) {
                const double avg = 0.5 * (p.fine.value(2 * n, 1) + p.antithetic->value(2 * n, 1));
                REQUIRE(avg == Approx(p.coarse->value(n, 1)).margin(1e-13));
                REQUIRE(0.5 * (p.fine.value(2 * n, 0) + p.antithetic->value(2 * n, 0)) ==
                        Approx(p.coarse->value(n, 0)).margin(1e-13));
            }
        }
    }
}

TEST_CASE("zero diffusion collapses the triple to one deterministic path") {
    const ModelSpec m = make_model("deterministic", {{"r", 0.1}, {"x0", 2}});
    const LevelGrid grid = LevelGrid::make(3, 1.0);
    const IncrementSet inc = sample_increments({1, 3, 0, StreamPurpose::brownian}, grid, m);
    const CoupledPaths p = antithetic_triple(m, grid, inc);
    CHECK(p.fine.values == p.antithetic->values);
    CHECK(p.fine.terminal() == Approx(2 * std::pow(1 + 0.1 / 8, 8)));
    CHECK(p.coarse->terminal() == Approx(2 * std::pow(1 + 0.1 / 4, 4)));
}

TEST_CASE("brownian bridge midpoint") {
    const ModelSpec m = gbm(0.05, 0.5);
    PathState coarse;
    coarse.times = {0.0, 0.1};
    coarse.values = {1.0, 1.2};
    IncrementSet inc;
    inc.fine = {0.3, 0.1};
    inc.coarse = {0.4};
    CHECK(brownian_bridge_midpoint(coarse, m, inc, 0)[0] == Approx(1.15));
    inc.fine = {0.2, 0.2};
    CHECK(brownian_bridge_midpoint(coarse, m, inc, 0)[0] == Approx(1.1));
    const ModelSpec flat = make_model("deterministic", {{"r", 0.05}});
    inc.fine = {0.5, -0.1};
    CHECK(brownian_bridge_midpoint(coarse, flat, inc, 0)[0] == Approx(1.1));
}

TEST_CASE("piecewise linear interpolant") {
    PathState p;
    p.times = {0.0, 0.25, 0.5};
    p.values = {1.0, 2.0, 4.0};
    CHECK(piecewise_linear_interpolant(p, 0.25)[0] == 2.0);
    CHECK(piecewise_linear_interpolant(p, 0.375)[0] == Approx(3.0));
    CHECK(piecewise_linear_interpolant(p, 0.3)[0] == Approx(2.4));
    CHECK(piecewise_linear_interpolant(p, 0.5)[0] == 4.0);
}

TEST_CASE("non-finite states are reported with their step") {
    const ModelSpec m = gbm(0.05, 1e200);
    const std::vector<double> w{1e200, 1e200, 1.0};
    try {
        (void)integrate(m, Scheme::euler, 1.0, 1.0 / 3, w);
        FAIL("expected NonFiniteState");
    } catch (const NonFiniteState& e) {
        CHECK(e.step() <= 2);
    }
}

TEST_CASE("milstein converges strongly at order one for gbm") {
    // Exact solution on the same Brownian path.
    const ModelSpec m = gbm(0.05, 0.4);
    double err_coarse = 0, err_fine = 0;
    const int n = 2000;
    for (int s = 0; s < n; ++s) {
        const LevelGrid grid = LevelGrid::make(8, 1.0);
        const IncrementSet inc = sample_increments({2, 8, std::uint64_t(s), StreamPurpose::brownian}, grid, m);
        double w = 0;
        for (double d : inc.fine) w += d;
        const double exact = std::exp((0.05 - 0.08) + 0.4 * w);
        std::vector<double> c4(16, 0.0), c6(64, 0.0);
        for (std::size_t k = 0; k < 256; ++k) {
            c4[k / 16] += inc.fine[k];
            c6[k / 4] += inc.fine[k];
        }
        err_coarse += std::pow(integrate(m, Scheme::milstein, 1.0, 1.0 / 16, c4).terminal() - exact, 2);
        err_fine += std::pow(integrate(m, Scheme::milstein, 1.0, 1.0 / 64, c6).terminal() - exact, 2);
    }
    // Mean-square error ratio 4^2 for a 4x step refinement.
    const double ratio = err_coarse / err_fine;
    CHECK(ratio > 10.0);
    CHECK(ratio < 24.0);
}
