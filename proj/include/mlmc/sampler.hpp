#pragma once

#include "mlmc/payoffs.hpp"

namespace mlmc {

enum class SampleMode { coupled, fine_only };

struct SampleResult {
    double fine = 0.0;
    double coarse = 0.0;
    double cost = 0.0;
    int degenerate = 0;
};

// One draw of the level-l correction. Implementations must be pure functions of
// (grid, key, mode) so samples can be generated in any order on any thread.
class LevelSampler {
public:
    virtual ~LevelSampler() = default;
    virtual SampleResult sample(const LevelGrid& grid, const StreamKey& key, SampleMode mode) const = 0;
    virtual double horizon() const = 0;
};

class PricingSampler : public LevelSampler {
public:
    PricingSampler(ModelSpec model, PayoffSpec payoff, double horizon);

    SampleResult sample(const LevelGrid& grid, const StreamKey& key, SampleMode mode) const override;
    double horizon() const override { return horizon_; }

    const ModelSpec& model() const noexcept { return model_; }
    const PayoffSpec& payoff() const noexcept { return payoff_; }

private:
    ModelSpec model_;
    PayoffSpec payoff_;
    double horizon_;
};

}  // namespace mlmc
