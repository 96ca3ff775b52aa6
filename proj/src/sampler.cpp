#include "mlmc/sampler.hpp"

namespace mlmc {

PricingSampler::PricingSampler(ModelSpec model, PayoffSpec payoff, double horizon)
    : model_(std::move(model)), payoff_(payoff), horizon_(horizon) {
    validate_payoff(payoff_, model_);
    if (!(horizon_ > 0.0)) throw std::invalid_argument("horizon must be positive");
}

SampleResult PricingSampler::sample(const LevelGrid& grid, const StreamKey& key, SampleMode mode) const {
    const IncrementSet inc = sample_increments(key, grid, model_);
    CoupledPaths paths;
    if (mode == SampleMode::fine_only) {
        paths.fine = scheme_for(payoff_.mode) == Scheme::euler ? euler_path(model_, grid, inc)
                                                               : milstein_path(model_, grid, inc);
    } else if (payoff_.mode == SchemeMode::antithetic && grid.level >= 1) {
        paths = antithetic_triple(model_, grid, inc);
    } else {
        paths = coupled_paths(model_, scheme_for(payoff_.mode), grid, inc);
    }
    const PayoffPair pair = evaluate_pair(paths, payoff_, model_, grid, inc);
    SampleResult out;
    out.fine = pair.fine;
    out.coarse = pair.coarse;
    out.cost = mode == SampleMode::fine_only ? static_cast<double>(grid.steps) : pair.cost_units;
    out.degenerate = pair.degenerate;
    return out;
}

}  // namespace mlmc
