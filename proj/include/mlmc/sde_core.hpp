#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlmc/rng.hpp"

namespace mlmc {

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Parameter a sensitivity is taken with respect to.
enum class Parameter { initial_state, volatility, drift };

// Coefficients of a scalar model at one state, with first derivatives in the
// state (x) and in a selected parameter (p). Used by the tangent recursions.
struct ScalarJet {
    double f = 0, fx = 0, fp = 0;
    double g = 0, gx = 0, gp = 0;
    double h = 0, hx = 0, hp = 0;
};

using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

// dX = f(X) dt + g(X) dW with W an m-dimensional Brownian motion whose
// increments have correlation `correlation`. The Milstein tensor holds
//   h_ijk = 1/2 sum_l g_lk d g_ij / d x_l
// so that the Milstein correction is sum_jk h_ijk (dW_j dW_k - Omega_jk dt).
struct ModelSpec {
    std::string label;
    int dim = 1;
    int drivers = 1;
    std::vector<double> x0;
    std::vector<double> correlation;     // m*m, row-major
    std::vector<double> correlation_chol;  // lower-triangular factor of `correlation`
    VectorField drift;                   // out: d
    VectorField diffusion;               // out: d*m, row-major
    VectorField milstein_tensor;         // out: d*m*m, index (i*m + j)*m + k
    std::function<ScalarJet(double x, Parameter p)> scalar_jet;  // d = m = 1 only
    std::map<std::string, double> params;

    bool is_scalar() const noexcept { return dim == 1 && drivers == 1; }

    // Scalar shortcuts; valid only when is_scalar().
    double drift1(double x) const;
    double diffusion1(double x) const;
    double tensor1(double x) const;
};

// Builds a model by name: gbm, deterministic, heston, clark_cameron, merton.
// Throws ModelError for unknown names or missing/out-of-range parameters.
ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params);

// Attaches the Cholesky factor of `correlation`; throws ModelError when the
// matrix is not a symmetric unit-diagonal positive semi-definite matrix.
void finalize_correlation(ModelSpec& model);

struct LevelGrid {
    int level = 0;
    double horizon = 1.0;
    double dt = 1.0;
    std::size_t steps = 1;

    static LevelGrid make(int level, double horizon);
    LevelGrid coarser() const { return make(level - 1, horizon); }
};

// Coupled randomness of one sample. Increments are stored flat: step n,
// driver j at index n*m + j.
struct IncrementSet {
    int drivers = 1;
    std::vector<double> fine;
    std::vector<double> coarse;
    std::vector<double> uniforms;       // one per fine step
    std::vector<double> jump_times;     // sorted, in (0, T]
    std::vector<double> jump_marks;     // Y_i, one per jump time
    std::vector<double> jump_uniforms;  // acceptance draws for thinning
    std::vector<double> jump_bridge_uniforms;  // bridge-minimum draw for the sub-step starting at each jump
    std::vector<double> jump_brownian;  // W(tau_i) - W(t_n), t_n the fine node before tau_i
    StreamKey key;

    std::size_t fine_steps() const { return fine.size() / static_cast<std::size_t>(drivers); }
    std::size_t coarse_steps() const { return coarse.size() / static_cast<std::size_t>(drivers); }
    std::span<const double> fine_at(std::size_t n) const {
        return {fine.data() + n * static_cast<std::size_t>(drivers), static_cast<std::size_t>(drivers)};
    }
    std::span<const double> coarse_at(std::size_t n) const {
        return {coarse.data() + n * static_cast<std::size_t>(drivers), static_cast<std::size_t>(drivers)};
    }
};

struct PathState {
    int dim = 1;
    std::vector<double> times;
    std::vector<double> values;       // (n+1)*d
    std::vector<double> left_limits;  // empty unless the path has jumps

    std::size_t size() const { return times.size(); }
    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    std::span<const double> at(std::size_t n) const {
        return {values.data() + n * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    double value(std::size_t n, int component = 0) const {
        return values[n * static_cast<std::size_t>(dim) + static_cast<std::size_t>(component)];
    }
    double left_limit(std::size_t n, int component = 0) const {
        return left_limits.empty() ? value(n, component)
                                   : left_limits[n * static_cast<std::size_t>(dim) + static_cast<std::size_t>(component)];
    }
    double terminal(int component = 0) const { return value(steps(), component); }
};

// Draws the Brownian increments (covariance correlation*dt) and one uniform per
// fine step; forms the coarse increments by pairwise summation when level >= 1.
IncrementSet sample_increments(const StreamKey& key, const LevelGrid& grid, const ModelSpec& model);

// Fills coarse increments from fine ones; throws on an odd step count.
void form_coarse_increments(IncrementSet& inc);

// Exchanges the two fine increments inside every coarse step.
IncrementSet antithetic_swap(const IncrementSet& inc);

}  // namespace mlmc
