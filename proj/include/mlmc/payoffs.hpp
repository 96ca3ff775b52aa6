#pragma once

#include <string>

#include "mlmc/schemes.hpp"

namespace mlmc {

enum class PayoffFamily { european, asian, lookback, barrier, digital };
enum class BarrierKind { down_out, up_out, down_in, up_in };
enum class TerminalKind { call, put, forward };
enum class SchemeMode { euler, milstein_smoothed, antithetic };

struct PayoffSpec {
    PayoffFamily family = PayoffFamily::european;
    double strike = 1.0;
    double barrier = 0.0;
    BarrierKind barrier_kind = BarrierKind::down_out;
    TerminalKind terminal = TerminalKind::call;
    SchemeMode mode = SchemeMode::milstein_smoothed;
    double beta_star = 0.5826;  // discrete-monitoring offset for Euler lookbacks
    double discount = 1.0;      // multiplies every payoff
    int component = 0;          // state coordinate the payoff reads

    double terminal_value(double x) const noexcept;
    double terminal_slope(double x) const noexcept;
};

// Throws std::invalid_argument for unsupported model/payoff/mode combinations.
void validate_payoff(const PayoffSpec& spec, const ModelSpec& model);

Scheme scheme_for(SchemeMode mode) noexcept;

std::string to_string(PayoffFamily family);

struct PayoffPair {
    double fine = 0.0;
    double coarse = 0.0;  // zero at level 0
    double cost_units = 0.0;
    int degenerate = 0;   // zero-diffusion events handled by a limit branch
};

// Timesteps of one coupled sample: 2^l fine plus 2^(l-1) coarse (1 at level 0).
double coupled_cost(const LevelGrid& grid) noexcept;

// Brownian-bridge minimum over a step of length dt from a to b, sampled with
// the uniform u.
double bridge_minimum(double a, double b, double g, double dt, double u) noexcept;

// Probability that a Brownian bridge from a to b with volatility g over dt
// dips below the barrier. `degenerate` is set when g == 0 with both ends above.
double crossing_probability(double a, double b, double barrier, double g, double dt, bool& degenerate) noexcept;

PayoffPair european_pair(const CoupledPaths& paths, const PayoffSpec& spec);
PayoffPair asian_pair(const CoupledPaths& paths, const PayoffSpec& spec);
PayoffPair lookback_pair_euler(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                               const LevelGrid& grid);
PayoffPair lookback_pair_milstein(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                                  const LevelGrid& grid, const IncrementSet& inc);
PayoffPair barrier_pair(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                        const LevelGrid& grid, const IncrementSet& inc);
PayoffPair barrier_pair_euler(const CoupledPaths& paths, const PayoffSpec& spec);
PayoffPair digital_pair(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                        const LevelGrid& grid, const IncrementSet& inc);
PayoffPair digital_pair_euler(const CoupledPaths& paths, const PayoffSpec& spec);

// Dispatch on family and mode; builds midpoints when the estimator needs them.
PayoffPair evaluate_pair(CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                         const LevelGrid& grid, const IncrementSet& inc);

}  // namespace mlmc
