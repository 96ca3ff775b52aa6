#include "mlmc/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlmc/normal.hpp"

namespace mlmc {

namespace {

struct Moneyness {
    double d1;
    double d2;
};

Moneyness moneyness(const BlackScholesInputs& in) {
    if (!(in.spot > 0 && in.strike > 0 && in.volatility > 0 && in.maturity > 0)) {
        throw std::invalid_argument("Black-Scholes inputs must be positive");
    }
    const double sd = in.volatility * std::sqrt(in.maturity);
    const double d1 = (std::log(in.spot / in.strike) + (in.rate + 0.5 * in.volatility * in.volatility) * in.maturity) / sd;
    return {d1, d1 - sd};
}

}  // namespace

double black_scholes_call(const BlackScholesInputs& in) {
    const auto [d1, d2] = moneyness(in);
    return in.spot * normal_cdf(d1) - in.strike * std::exp(-in.rate * in.maturity) * normal_cdf(d2);
}

double black_scholes_call_delta(const BlackScholesInputs& in) { return normal_cdf(moneyness(in).d1); }

double black_scholes_call_vega(const BlackScholesInputs& in) {
    return in.spot * normal_pdf(moneyness(in).d1) * std::sqrt(in.maturity);
}

double black_scholes_digital(const BlackScholesInputs& in) {
    return std::exp(-in.rate * in.maturity) * normal_cdf(moneyness(in).d2);
}

SeriesValue merton_call(const MertonInputs& in, int terms) {
    if (terms < 1) throw std::invalid_argument("need at least one series term");
    const double t = in.diffusion.maturity;
    const double k = std::exp(in.jump_mu + 0.5 * in.jump_sigma * in.jump_sigma) - 1.0;
    const double intensity = in.jump_rate * (1.0 + k) * t;
    SeriesValue out;
    double weight = std::exp(-intensity);
    double mass = 0.0;
    for (int n = 0; n < terms; ++n) {
        BlackScholesInputs leg = in.diffusion;
        leg.rate = in.diffusion.rate - in.jump_rate * k + n * std::log1p(k) / t;
        leg.volatility = std::sqrt(in.diffusion.volatility * in.diffusion.volatility +
                                   n * in.jump_sigma * in.jump_sigma / t);
        out.value += weight * black_scholes_call(leg);
        mass += weight;
        weight *= intensity / (n + 1);
    }
    out.terms = terms;
    out.remainder_bound = std::max(0.0, 1.0 - mass) * in.diffusion.spot;
    return out;
}

}  // namespace mlmc
