#pragma once

#include <string>

#include "mlmc/sampler.hpp"

namespace mlmc {

struct ParamSelector {
    Parameter which = Parameter::initial_state;
};

// Which quantity a Greek sampler reports.
enum class GreekKind { value, delta, vega, drift };

ParamSelector selector_for(GreekKind kind);
GreekKind greek_kind_from_string(const std::string& name);
std::string to_string(GreekKind kind);

enum class GreekMethod { smoothed, split, vibrato };

GreekMethod greek_method_from_string(const std::string& name);
std::string to_string(GreekMethod method);

struct SensitivityState {
    PathState path;
    std::vector<double> tangent;  // dX_n / d theta, one per node
};

// Scalar path and its tangent on an explicit increment sequence.
SensitivityState tangent_integrate(const ModelSpec& model, Scheme scheme, double horizon, double dt,
                                   std::span<const double> increments, ParamSelector theta);

SensitivityState pathwise_tangent_path(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc,
                                       ParamSelector theta, Scheme scheme = Scheme::milstein);

// Gaussian law of the terminal state given the path up to the last fine step,
// with its tangents.
struct VibratoComponents {
    double mu = 0.0;
    double sigma = 0.0;
    double dmu = 0.0;
    double dsigma = 0.0;
};

// Fine leg: last fine step from X_{N-1}. Coarse leg: last coarse step from
// X^c_{N/2-1} given the first-half fine increment.
VibratoComponents final_step_fine(const ModelSpec& model, const SensitivityState& fine, const LevelGrid& grid,
                                  ParamSelector theta);
VibratoComponents final_step_coarse(const ModelSpec& model, const SensitivityState& coarse, const LevelGrid& grid,
                                    const IncrementSet& inc, ParamSelector theta);

// Pathwise derivative of the conditional-expectation payoffs (european call,
// digital, lookback, barrier). With differentiate == false the smoothed values
// themselves are returned.
PayoffPair smoothed_delta_vega_pair(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                                    const IncrementSet& inc, ParamSelector theta, bool differentiate = true);

// Pathwise sensitivity averaged over s resampled final increments.
PayoffPair split_pathwise_pair(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                               const IncrementSet& inc, ParamSelector theta, int s, bool differentiate = true);

// s >= 1: sqrt(v2 c1 / (v1 c2)) rounded up. Returns 1 when v1 or c2 is zero.
int optimal_split_count(double v1, double v2, double c1, double c2);

// Pathwise to the penultimate step, likelihood ratio over the last step with
// s antithetic pairs of inner normals shared by both legs.
PayoffPair vibrato_pair(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                        const IncrementSet& inc, ParamSelector theta, int s, bool differentiate = true);

// Single-level likelihood-ratio estimate on an Euler path (score of the whole
// path density). Its variance grows like 1/dt; kept as a reference only.
double likelihood_ratio_sample(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                               const IncrementSet& inc, ParamSelector theta);

class GreekSampler : public LevelSampler {
public:
    GreekSampler(ModelSpec model, PayoffSpec payoff, double horizon, GreekMethod method, GreekKind kind,
                 int inner_samples = 10);

    SampleResult sample(const LevelGrid& grid, const StreamKey& key, SampleMode mode) const override;
    double horizon() const override { return horizon_; }

private:
    ModelSpec model_;
    PayoffSpec payoff_;
    double horizon_;
    GreekMethod method_;
    GreekKind kind_;
    int inner_;
};

}  // namespace mlmc
