#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlmc/sde_core.hpp"

namespace mlmc {

enum class Scheme { euler, milstein };

// Raised when a trajectory leaves the finite doubles.
class NonFiniteState : public std::runtime_error {
public:
    NonFiniteState(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

struct CoupledPaths {
    PathState fine;
    std::optional<PathState> coarse;      // absent at level 0
    std::optional<PathState> antithetic;  // antithetic mode only
    std::vector<double> midpoints;        // Brownian-bridge coarse midpoints, d per coarse step
};

// X_{n+1} = X_n + f dt + g dW, on the fine increments of `inc`.
PathState euler_path(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc);

// Milstein without Levy areas: adds sum_jk h_ijk (dW_j dW_k - Omega_jk dt).
PathState milstein_path(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc);

// Same schemes on an explicit increment sequence (steps*m values).
PathState integrate(const ModelSpec& model, Scheme scheme, double horizon, double dt,
                    std::span<const double> increments);

// Coarse path of level grid.level - 1 driven by inc.coarse.
PathState coarse_path(const ModelSpec& model, Scheme scheme, const LevelGrid& grid, const IncrementSet& inc);

CoupledPaths coupled_paths(const ModelSpec& model, Scheme scheme, const LevelGrid& grid, const IncrementSet& inc);

// Fine, antithetic (swapped increments) and coarse Milstein paths.
CoupledPaths antithetic_triple(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc);

bool is_commutative(const ModelSpec& model, std::span<const std::vector<double>> probe_points, double tol);

// Brownian-bridge interpolant of the coarse path at the middle of coarse step n,
// using the first-half fine increment.
std::vector<double> brownian_bridge_midpoint(const PathState& coarse_path, const ModelSpec& model,
                                             const IncrementSet& inc, std::size_t n);

// Computes every coarse midpoint into paths.midpoints.
void attach_midpoints(CoupledPaths& paths, const ModelSpec& model, const IncrementSet& inc);

std::vector<double> piecewise_linear_interpolant(const PathState& path, double t);

}  // namespace mlmc
