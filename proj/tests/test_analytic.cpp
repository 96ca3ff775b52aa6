#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mlmc/analytic.hpp"
#include "mlmc/normal.hpp"

using namespace mlmc;
using Catch::Approx;

namespace {

// Discounted expectation of f(S_T) for lognormal S_T by Simpson's rule in the
// standard normal variable.
template <class F>
double lognormal_expectation(double s, double r, double sigma, double t, F f, double lo = -10) {
    const int n = 20000;
    const double hi = 10, h = (hi - lo) / n;
    double sum = 0;
    for (int i = 0; i <= n; ++i) {
        const double z = lo + i * h;
        const double st = s * std::exp((r - 0.5 * sigma * sigma) * t + sigma * std::sqrt(t) * z);
        const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        sum += w * f(st) * std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
    }
    return std::exp(-r * t) * sum * h / 3;
}

double quad_call(double s, double k, double r, double sigma, double t) {
    return lognormal_expectation(s, r, sigma, t, [k](double x) { return std::max(x - k, 0.0); });
}

// Conditioning on n jumps moves the spot by the jump product and the drift
// compensator; the volatility absorbs the jump variance.
double merton_by_spot_shift(double s, double k, double r, double sigma, double lambda, double mu, double delta,
                            double t) {
    const double kappa = std::exp(mu + 0.5 * delta * delta) - 1;
    double total = 0, weight = std::exp(-lambda * t);
    for (int n = 0; n < 80; ++n) {
        if (n > 0) weight *= lambda * t / n;
        const double spot = s * std::exp(n * (mu + 0.5 * delta * delta) - lambda * kappa * t);
        const double vol = std::sqrt(sigma * sigma + n * delta * delta / t);
        total += weight * black_scholes_call({spot, k, r, vol, t});
    }
    return total;
}

}  // namespace

TEST_CASE("normal cdf and pdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(-40.0) >= 0.0);
    CHECK(normal_pdf(0.0) == Approx(1 / std::sqrt(2 * std::numbers::pi)));
}

TEST_CASE("black-scholes call against quadrature") {
    const BlackScholesInputs in{1.0, 1.0, 0.05, 0.2, 1.0};
    CHECK(black_scholes_call(in) == Approx(quad_call(1, 1, 0.05, 0.2, 1)).epsilon(1e-9));
    CHECK(black_scholes_call(in) == Approx(0.10450584).epsilon(1e-7));
    const BlackScholesInputs other{1.3, 0.9, 0.02, 0.45, 2.5};
    CHECK(black_scholes_call(other) == Approx(quad_call(1.3, 0.9, 0.02, 0.45, 2.5)).epsilon(1e-9));
}

TEST_CASE("black-scholes greeks against central differences") {
    const BlackScholesInputs in{1.0, 1.0, 0.05, 0.2, 1.0};
    const double h = 1e-5;
    BlackScholesInputs up = in, dn = in;
    up.spot += h;
    dn.spot -= h;
    CHECK(black_scholes_call_delta(in) == Approx((black_scholes_call(up) - black_scholes_call(dn)) / (2 * h)).epsilon(1e-7));
    CHECK(black_scholes_call_delta(in) == Approx(0.63683).epsilon(1e-5));
    up = dn = in;
    up.volatility += h;
    dn.volatility -= h;
    CHECK(black_scholes_call_vega(in) == Approx((black_scholes_call(up) - black_scholes_call(dn)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("black-scholes digital against quadrature") {
    const BlackScholesInputs in{1.0, 1.1, 0.05, 0.3, 0.5};
    // Integrate only above the exercise threshold so the integrand is smooth.
    const double z = (std::log(1.1) - (0.05 - 0.045) * 0.5) / (0.3 * std::sqrt(0.5));
    const double q = lognormal_expectation(1.0, 0.05, 0.3, 0.5, [](double) { return 1.0; }, z);
    CHECK(black_scholes_digital(in) == Approx(q).epsilon(1e-10));
}

TEST_CASE("merton series") {
    MertonInputs in;
    in.diffusion = {1.0, 1.0, 0.05, 0.2, 1.0};
    in.jump_rate = 0.0;
    CHECK(merton_call(in).value == Approx(black_scholes_call(in.diffusion)).epsilon(1e-14));

    in.jump_rate = 1.0;
    in.jump_mu = -0.1;
    in.jump_sigma = 0.2;
    const SeriesValue v = merton_call(in);
    CHECK(v.terms == 50);
    CHECK(v.remainder_bound < 1e-12);
    CHECK(v.value == Approx(merton_by_spot_shift(1, 1, 0.05, 0.2, 1.0, -0.1, 0.2, 1)).epsilon(1e-12));

    in.jump_sigma = 0.0;
    in.jump_mu = 0.0;
    CHECK(merton_call(in).value == Approx(black_scholes_call(in.diffusion)).epsilon(1e-12));

    in.jump_rate = 3.0;
    in.jump_mu = 0.1;
    in.jump_sigma = 0.3;
    in.diffusion = {1.2, 1.0, 0.03, 0.25, 2.0};
    CHECK(merton_call(in).value == Approx(merton_by_spot_shift(1.2, 1, 0.03, 0.25, 3.0, 0.1, 0.3, 2)).epsilon(1e-10));
    const SeriesValue short_series = merton_call(in, 3);
    CHECK(short_series.remainder_bound > 0.0);
    CHECK(std::abs(short_series.value - merton_call(in).value) <= short_series.remainder_bound);
}
