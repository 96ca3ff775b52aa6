#include <catch2/catch_amalgamated.hpp>

#include "mlmc/sde_core.hpp"

using namespace mlmc;
using Catch::Approx;

namespace {

ModelSpec gbm(double r = 0.05, double s = 0.2, double x0 = 1.0) {
    return make_model("gbm", {{"r", r}, {"sigma", s}, {"x0", x0}});
}

}  // namespace

TEST_CASE("gbm coefficients at x = 1") {
    const ModelSpec m = gbm();
    CHECK(m.is_scalar());
    CHECK(m.drift1(1.0) == Approx(0.05));
    CHECK(m.diffusion1(1.0) == Approx(0.2));
    CHECK(m.tensor1(1.0) == Approx(0.02));
    const ScalarJet j = m.scalar_jet(2.0, Parameter::volatility);
    CHECK(j.g == Approx(0.4));
    CHECK(j.gx == Approx(0.2));
    CHECK(j.gp == Approx(2.0));
    CHECK(j.h == Approx(0.5 * 0.04 * 2.0));
}

TEST_CASE("clark-cameron coefficients") {
    const ModelSpec m = make_model("clark_cameron", {});
    const std::vector<double> x{3.0, 7.0};
    std::vector<double> f(2), g(4), h(8);
    m.drift(x, f);
    m.diffusion(x, g);
    m.milstein_tensor(x, h);
    CHECK(f == std::vector<double>{0, 0});
    CHECK(g == std::vector<double>{1, 0, 0, 3});
    // Only h_221 is nonzero: g_11 d g_22 / d x_1 / 2.
    for (int i = 0; i < 8; ++i) CHECK(h[i] == (i == 6 ? 0.5 : 0.0));
}

TEST_CASE("heston with zero variance has no asset diffusion") {
    const ModelSpec m =
        make_model("heston", {{"r", 0.05}, {"kappa", 2}, {"theta", 0.04}, {"sigma", 0.3}, {"rho", -0.5}, {"s0", 1}, {"v0", 0}});
    std::vector<double> g(4);
    m.diffusion(m.x0, g);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("model construction rejects bad input") {
    CHECK_THROWS_AS(make_model("nope", {}), ModelError);
    CHECK_THROWS_AS(make_model("gbm", {{"r", 0.05}}), ModelError);
    CHECK_THROWS_AS(make_model("gbm", {{"r", 0.05}, {"sigma", 0.2}, {"typo", 1}}), ModelError);
    CHECK_THROWS_AS(
        make_model("heston", {{"r", 0}, {"kappa", 1}, {"theta", 0.04}, {"sigma", 0.3}, {"rho", 1.5}, {"s0", 1}, {"v0", 0.04}}),
        ModelError);
}

TEST_CASE("correlation must be a valid correlation matrix") {
    ModelSpec m = make_model("clark_cameron", {});
    m.correlation = {1.0, 0.3, 0.3, 1.0};
    REQUIRE_NOTHROW(finalize_correlation(m));
    CHECK(m.correlation_chol[2] == Approx(0.3));
    CHECK(m.correlation_chol[3] == Approx(std::sqrt(1 - 0.09)));
    m.correlation = {1.0, 0.3, 0.2, 1.0};
    CHECK_THROWS_AS(finalize_correlation(m), ModelError);
    m.correlation = {1.0, 1.2, 1.2, 1.0};
    CHECK_THROWS_AS(finalize_correlation(m), ModelError);
}

TEST_CASE("level grids halve the step") {
    const LevelGrid g = LevelGrid::make(3, 2.0);
    CHECK(g.steps == 8);
    CHECK(g.dt == 0.25);
    CHECK(g.coarser().steps == 4);
}

TEST_CASE("coarse increments are pairwise sums") {
    IncrementSet inc;
    inc.fine = {0.1, -0.2, 0.3, 0.4};
    form_coarse_increments(inc);
    REQUIRE(inc.coarse.size() == 2);
    CHECK(inc.coarse[0] == Approx(-0.1));
    CHECK(inc.coarse[1] == Approx(0.7));
    inc.fine = {0.1, 0.2, 0.3};
    CHECK_THROWS(form_coarse_increments(inc));
}

TEST_CASE("coarse increments telescope for random draws") {
    const ModelSpec m = make_model("clark_cameron", {});
    for (std::uint64_t s = 0; s < 50; ++s) {
        const IncrementSet inc = sample_increments({3, 5, s, StreamPurpose::brownian}, LevelGrid::make(5, 1.0), m);
        for (int j = 0; j < 2; ++j) {
            double fine = 0, coarse = 0;
            for (std::size_t n = 0; n < inc.fine_steps(); ++n) fine += inc.fine_at(n)[j];
            for (std::size_t n = 0; n < inc.coarse_steps(); ++n) coarse += inc.coarse_at(n)[j];
            CHECK(fine == Approx(coarse).margin(1e-14));
        }
    }
}

TEST_CASE("antithetic swap exchanges pairs, is an involution and keeps coarse increments") {
    IncrementSet inc;
    inc.fine = {1, 2, 3, 4};
    form_coarse_increments(inc);
    const IncrementSet a = antithetic_swap(inc);
    CHECK(a.fine == std::vector<double>{2, 1, 4, 3});
    CHECK(antithetic_swap(a).fine == inc.fine);
    CHECK(a.coarse == inc.coarse);

    const ModelSpec m = make_model("clark_cameron", {});
    const IncrementSet r = sample_increments({1, 4, 0, StreamPurpose::brownian}, LevelGrid::make(4, 1.0), m);
    const IncrementSet ra = antithetic_swap(r);
    CHECK(antithetic_swap(ra).fine == r.fine);
    for (std::size_t i = 0; i < r.coarse.size(); ++i) CHECK(ra.coarse[i] == Approx(r.coarse[i]).margin(1e-15));
}

TEST_CASE("fine increments have variance dt") {
    const ModelSpec m = gbm();
    const LevelGrid grid = LevelGrid::make(3, 1.0);
    const int n = 1000000 / 8;
    std::vector<double> sum(8, 0.0), sum2(8, 0.0);
    for (int s = 0; s < n; ++s) {
        const IncrementSet inc = sample_increments({9, 3, std::uint64_t(s), StreamPurpose::brownian}, grid, m);
        for (int k = 0; k < 8; ++k) {
            sum[k] += inc.fine[k];
            sum2[k] += inc.fine[k] * inc.fine[k];
        }
        REQUIRE(inc.uniforms.size() == 8);
    }
    // 10^6 increments in total; each coordinate is checked at 1% of dt.
    double pooled = 0;
    for (int k = 0; k < 8; ++k) pooled += sum2[k] / n;
    CHECK(pooled / 8 == Approx(0.125).epsilon(0.01));
    for (int k = 0; k < 8; ++k) CHECK(sum2[k] / n == Approx(0.125).epsilon(0.025));
}

TEST_CASE("correlated increments carry the requested correlation") {
    ModelSpec m = make_model("heston", {{"r", 0}, {"kappa", 1}, {"theta", 0.04}, {"sigma", 0.3}, {"rho", -0.7}, {"s0", 1}, {"v0", 0.04}});
    const LevelGrid grid = LevelGrid::make(0, 1.0);
    double s01 = 0, s00 = 0, s11 = 0;
    const int n = 200000;
    for (int s = 0; s < n; ++s) {
        const IncrementSet inc = sample_increments({4, 0, std::uint64_t(s), StreamPurpose::brownian}, grid, m);
        s00 += inc.fine[0] * inc.fine[0];
        s11 += inc.fine[1] * inc.fine[1];
        s01 += inc.fine[0] * inc.fine[1];
    }
    CHECK(s01 / std::sqrt(s00 * s11) == Approx(-0.7).margin(0.01));
}
