#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlmc/sampler.hpp"

namespace mlmc {

struct LevelStats {
    int level = 0;
    long long samples = 0;
    // Running means and centred sums of squares (Welford, Chan et al. on merge).
    double diff_mean = 0.0;
    double diff_m2 = 0.0;
    double fine_mean = 0.0;
    double fine_m2 = 0.0;
    double cost = 0.0;
    long long degenerate = 0;

    void add(const SampleResult& s) noexcept;
    void merge(const LevelStats& other) noexcept;

    double mean_diff() const noexcept;
    double var_diff() const noexcept;  // unbiased; 0 when fewer than two samples
    double mean_fine() const noexcept;
    double var_fine() const noexcept;
    double cost_per_sample() const noexcept;
};

struct RateFit {
    double alpha = 1.0, beta = 1.0, gamma = 1.0;
    double alpha_se = 0.0, beta_se = 0.0, gamma_se = 0.0;
    bool fitted = false;
};

struct MlmcConfig {
    double eps = 0.01;
    long long initial_samples = 100;
    int max_level = 12;
    double variance_fraction = 0.5;  // share of eps^2 given to the sampling variance
    double weak_constant = 1.0;      // standard MC only: bias ~ c T 2^-L
    std::uint64_t seed = 1;
    int threads = 0;                 // 0 = OpenMP default
};

struct MlmcResult {
    double estimate = 0.0;
    double std_error = 0.0;
    double total_cost = 0.0;
    double bias_estimate = 0.0;
    int final_level = 0;
    bool converged = false;
    std::vector<LevelStats> levels;
    RateFit rates;
    std::string diagnostic;
};

// N_l = ceil(eps^-2 / fraction * sqrt(V_l dt_l) * sum_k sqrt(V_k / dt_k)).
std::vector<long long> optimal_samples(const std::vector<double>& variances, const std::vector<double>& steps,
                                       double eps, double variance_fraction = 0.5);

// Smallest L with c T 2^-L <= eps / sqrt(2).
int max_level_for_bias(double eps, double weak_constant, double horizon);

// Least-squares decay rates over levels >= min_level. Throws std::invalid_argument
// with fewer than two usable levels.
RateFit fit_rates(const std::vector<LevelStats>& stats, int min_level = 1);

// Samples [first, first + count) of one level. Blocks of fixed size are summed
// serially and combined in index order, so the result does not depend on the
// number of threads.
LevelStats sample_level(const LevelSampler& sampler, const LevelGrid& grid, std::uint64_t seed,
                        long long first, long long count, SampleMode mode = SampleMode::coupled, int threads = 0);

// Plain sequential loop with the same sample keys.
LevelStats sample_level_serial(const LevelSampler& sampler, const LevelGrid& grid, std::uint64_t seed,
                               long long first, long long count, SampleMode mode = SampleMode::coupled);

inline constexpr long long kSampleBlock = 256;

// Fixed-N study over levels 0..max_level.
std::vector<LevelStats> run_fixed_levels(const LevelSampler& sampler, int max_level, long long samples,
                                         std::uint64_t seed, int threads = 0);

using LevelObserver = std::function<void(const std::vector<LevelStats>&)>;

MlmcResult run_mlmc(const LevelSampler& sampler, const MlmcConfig& config, const LevelObserver& observer = {});

// Single level at L = max_level_for_bias with N = ceil(V / (fraction eps^2)).
MlmcResult run_standard_mc(const LevelSampler& sampler, const MlmcConfig& config);

}  // namespace mlmc
