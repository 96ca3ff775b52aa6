#pragma once

namespace mlmc {

struct BlackScholesInputs {
    double spot = 1.0;
    double strike = 1.0;
    double rate = 0.05;
    double volatility = 0.2;
    double maturity = 1.0;
};

double black_scholes_call(const BlackScholesInputs& in);
double black_scholes_call_delta(const BlackScholesInputs& in);
double black_scholes_call_vega(const BlackScholesInputs& in);
// Discounted price of a cash-or-nothing digital paying 1 when S_T > K.
double black_scholes_digital(const BlackScholesInputs& in);

struct MertonInputs {
    BlackScholesInputs diffusion;
    double jump_rate = 0.0;
    double jump_mu = 0.0;     // mean of log Y
    double jump_sigma = 0.0;  // standard deviation of log Y
};

struct SeriesValue {
    double value = 0.0;
    double remainder_bound = 0.0;  // Poisson tail mass beyond the last term times the spot
    int terms = 0;
};

// Merton jump-diffusion call as a Poisson mixture of Black-Scholes prices.
SeriesValue merton_call(const MertonInputs& in, int terms = 50);

}  // namespace mlmc
