#pragma once

#include <functional>

#include "mlmc/sampler.hpp"

namespace mlmc {

struct JumpSpec {
    double rate = 0.0;                         // constant intensity, or the bound for `intensity`
    std::function<double(double)> intensity;   // state-dependent rate; empty for a constant rate
    double mark_mu = 0.0;                      // log Y ~ N(mark_mu, mark_sigma^2)
    double mark_sigma = 0.0;
    std::function<double(double)> coefficient; // c(x); defaults to x

    bool state_dependent() const noexcept { return static_cast<bool>(intensity); }
    double jump_coefficient(double x) const { return coefficient ? coefficient(x) : x; }
};

// Jump spec of a merton model (rate lambda, lognormal marks, c(x) = x).
JumpSpec merton_jumps(const ModelSpec& model);

// lambda(x) = bound / (1 + x^2), bounded by `bound`.
JumpSpec decaying_intensity_jumps(const ModelSpec& model, double bound);

// Exponential inter-arrival times truncated at the horizon.
std::vector<double> sample_jump_times(CounterStream& stream, double rate, double horizon);

// Sorted union of the grid nodes and the jump times, without duplicates.
std::vector<double> jump_adapted_grid(const LevelGrid& grid, const std::vector<double>& jump_times);

// Brownian increments plus jump (or candidate) times, marks, acceptance and
// bridge uniforms, and the Brownian value at every jump time.
IncrementSet sample_jump_increments(const StreamKey& key, const LevelGrid& grid, const ModelSpec& model,
                                    const JumpSpec& jumps);

enum class ThinningMode { none, direct, measure_change };

// A node of a jump-adapted grid. W(t) = W(fine step `step` start) + offset.
struct GridPoint {
    double time = 0.0;
    std::size_t step = 0;
    double offset = 0.0;
    int node = -1;  // fine node index when the point is a fine node
    int jump = -1;  // jump (candidate) index when the point is a jump time
};

struct JumpLeg {
    PathState path;  // values are post-jump, left_limits pre-jump
    std::vector<GridPoint> points;
    double weight = 1.0;  // product of Radon-Nikodym factors
    int jumps = 0;        // accepted jumps
};

struct JumpCoupledPaths {
    JumpLeg fine;
    std::optional<JumpLeg> coarse;
};

// Jump-adapted Milstein paths sharing jump times and marks. With a
// state-dependent spec the jump times are candidates, thinned per `mode`.
JumpCoupledPaths jump_adapted_milstein_pair(const ModelSpec& model, const JumpSpec& jumps, const LevelGrid& grid,
                                            const IncrementSet& inc, ThinningMode mode = ThinningMode::none);

// Payoffs on jump-adapted paths; left limits feed the bridge formulas.
PayoffPair jump_payoff_pair(const JumpCoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                            const LevelGrid& grid, const IncrementSet& inc);

// Payoff pair scaled by each leg's Radon-Nikodym product.
PayoffPair thinned_pair_with_measure_change(const ModelSpec& model, const JumpSpec& jumps, const PayoffSpec& spec,
                                            const LevelGrid& grid, const IncrementSet& inc);

class JumpSampler : public LevelSampler {
public:
    JumpSampler(ModelSpec model, JumpSpec jumps, PayoffSpec payoff, double horizon,
                ThinningMode mode = ThinningMode::none);

    SampleResult sample(const LevelGrid& grid, const StreamKey& key, SampleMode mode) const override;
    double horizon() const override { return horizon_; }

private:
    ModelSpec model_;
    JumpSpec jumps_;
    PayoffSpec payoff_;
    double horizon_;
    ThinningMode mode_;
};

}  // namespace mlmc
