#include "mlmc/driver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include <omp.h>

namespace mlmc {

namespace {

StreamKey key_for(std::uint64_t seed, int level, long long index) {
    StreamKey k;
    k.seed = seed;
    k.level = static_cast<std::uint32_t>(level);
    k.sample = static_cast<std::uint64_t>(index);
    return k;
}

struct LineFit {
    double slope = 0.0;
    double slope_se = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    if (x.size() > 2) {
        double rss = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - my - fit.slope * (x[i] - mx);
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

double bias_bound(const std::vector<LevelStats>& stats, double alpha) {
    const std::size_t top = stats.size() - 1;
    const double r = std::pow(2.0, alpha);
    double bound = std::abs(stats[top].mean_diff()) / (r - 1.0);
    if (top >= 1) bound = std::max(bound, std::abs(stats[top - 1].mean_diff()) / (r * (r - 1.0)));
    return bound;
}

void summarise(MlmcResult& result) {
    result.estimate = 0.0;
    result.total_cost = 0.0;
    double var = 0.0;
    for (const auto& s : result.levels) {
        result.estimate += s.mean_diff();
        result.total_cost += s.cost;
        if (s.samples > 0) var += s.var_diff() / static_cast<double>(s.samples);
    }
    result.std_error = std::sqrt(var);
    result.final_level = result.levels.empty() ? 0 : result.levels.back().level;
}

}  // namespace

void LevelStats::add(const SampleResult& s) noexcept {
    const double d = s.fine - s.coarse;
    ++samples;
    const auto n = static_cast<double>(samples);
    const double dd = d - diff_mean;
    diff_mean += dd / n;
    diff_m2 += dd * (d - diff_mean);
    const double df = s.fine - fine_mean;
    fine_mean += df / n;
    fine_m2 += df * (s.fine - fine_mean);
    cost += s.cost;
    degenerate += s.degenerate;
}

void LevelStats::merge(const LevelStats& other) noexcept {
    if (other.samples == 0) return;
    if (samples == 0) {
        const int keep = level;
        *this = other;
        level = keep;
        return;
    }
    const auto na = static_cast<double>(samples);
    const auto nb = static_cast<double>(other.samples);
    const double n = na + nb;
    const double dd = other.diff_mean - diff_mean;
    diff_m2 += other.diff_m2 + dd * dd * na * nb / n;
    diff_mean += dd * nb / n;
    const double df = other.fine_mean - fine_mean;
    fine_m2 += other.fine_m2 + df * df * na * nb / n;
    fine_mean += df * nb / n;
    samples += other.samples;
    cost += other.cost;
    degenerate += other.degenerate;
}

double LevelStats::mean_diff() const noexcept { return samples > 0 ? diff_mean : 0.0; }

double LevelStats::var_diff() const noexcept {
    return samples < 2 ? 0.0 : std::max(0.0, diff_m2 / static_cast<double>(samples - 1));
}

double LevelStats::mean_fine() const noexcept { return samples > 0 ? fine_mean : 0.0; }

double LevelStats::var_fine() const noexcept {
    return samples < 2 ? 0.0 : std::max(0.0, fine_m2 / static_cast<double>(samples - 1));
}

double LevelStats::cost_per_sample() const noexcept { return samples > 0 ? cost / static_cast<double>(samples) : 0.0; }

std::vector<long long> optimal_samples(const std::vector<double>& variances, const std::vector<double>& steps,
                                       double eps, double variance_fraction) {
    if (variances.empty()) throw std::invalid_argument("optimal_samples needs at least one level");
    if (variances.size() != steps.size()) throw std::invalid_argument("variance and step lists differ in length");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(variance_fraction > 0.0 && variance_fraction < 1.0)) {
        throw std::invalid_argument("variance fraction must lie in (0, 1)");
    }
    double total = 0.0;
    for (std::size_t l = 0; l < variances.size(); ++l) {
        if (variances[l] < 0.0 || !(steps[l] > 0.0)) throw std::invalid_argument("invalid level variance or step");
        total += std::sqrt(variances[l] / steps[l]);
    }
    std::vector<long long> out(variances.size());
    const double scale = total / (variance_fraction * eps * eps);
    for (std::size_t l = 0; l < variances.size(); ++l) {
        out[l] = static_cast<long long>(std::ceil(scale * std::sqrt(variances[l] * steps[l])));
    }
    return out;
}

int max_level_for_bias(double eps, double weak_constant, double horizon) {
    if (!(eps > 0.0 && weak_constant > 0.0 && horizon > 0.0)) {
        throw std::invalid_argument("max_level_for_bias needs positive arguments");
    }
    const double target = eps / std::sqrt(2.0);
    double bias = weak_constant * horizon;
    int level = 0;
    while (bias > target) {
        bias *= 0.5;
        ++level;
    }
    return level;
}

RateFit fit_rates(const std::vector<LevelStats>& stats, int min_level) {
    std::vector<double> la, ya, lb, yb, lg, yg;
    for (const auto& s : stats) {
        if (s.level < min_level || s.samples < 2) continue;
        if (s.mean_diff() != 0.0) {
            la.push_back(s.level);
            ya.push_back(std::log2(std::abs(s.mean_diff())));
        }
        if (s.var_diff() > 0.0) {
            lb.push_back(s.level);
            yb.push_back(std::log2(s.var_diff()));
        }
        lg.push_back(s.level);
        yg.push_back(std::log2(s.cost_per_sample()));
    }
    if (lg.size() < 2) throw std::invalid_argument("fit_rates needs at least two levels above the minimum");
    RateFit fit;
    const LineFit g = least_squares(lg, yg);
    fit.gamma = g.slope;
    fit.gamma_se = g.slope_se;
    if (la.size() >= 2) {
        const LineFit a = least_squares(la, ya);
        fit.alpha = -a.slope;
        fit.alpha_se = a.slope_se;
    }
    if (lb.size() >= 2) {
        const LineFit b = least_squares(lb, yb);
        fit.beta = -b.slope;
        fit.beta_se = b.slope_se;
    }
    fit.fitted = la.size() >= 2 && lb.size() >= 2;
    return fit;
}

LevelStats sample_level_serial(const LevelSampler& sampler, const LevelGrid& grid, std::uint64_t seed,
                               long long first, long long count, SampleMode mode) {
    LevelStats stats;
    stats.level = grid.level;
    for (long long i = first; i < first + count; ++i) stats.add(sampler.sample(grid, key_for(seed, grid.level, i), mode));
    return stats;
}

LevelStats sample_level(const LevelSampler& sampler, const LevelGrid& grid, std::uint64_t seed, long long first,
                        long long count, SampleMode mode, int threads) {
    LevelStats total;
    total.level = grid.level;
    if (count <= 0) return total;
    const long long blocks = (count + kSampleBlock - 1) / kSampleBlock;
    std::vector<LevelStats> partial(static_cast<std::size_t>(blocks));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(blocks));
    const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
    for (long long b = 0; b < blocks; ++b) {
        const long long lo = first + b * kSampleBlock;
        const long long hi = std::min(first + count, lo + kSampleBlock);
        try {
            partial[static_cast<std::size_t>(b)] = sample_level_serial(sampler, grid, seed, lo, hi - lo, mode);
        } catch (...) {
            failures[static_cast<std::size_t>(b)] = std::current_exception();
        }
    }

    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    for (const auto& p : partial) total.merge(p);
    return total;
}

std::vector<LevelStats> run_fixed_levels(const LevelSampler& sampler, int max_level, long long samples,
                                         std::uint64_t seed, int threads) {
    if (max_level < 0) throw std::invalid_argument("max_level must be nonnegative");
    if (samples < 2) throw std::invalid_argument("need at least two samples per level");
    std::vector<LevelStats> out;
    for (int l = 0; l <= max_level; ++l) {
        out.push_back(sample_level(sampler, LevelGrid::make(l, sampler.horizon()), seed, 0, samples,
                                   SampleMode::coupled, threads));
    }
    return out;
}

MlmcResult run_mlmc(const LevelSampler& sampler, const MlmcConfig& config, const LevelObserver& observer) {
    if (!(config.eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (config.initial_samples < 2) throw std::invalid_argument("initial_samples must be at least 2");
    if (config.max_level < 0) throw std::invalid_argument("max_level must be nonnegative");
    const double horizon = sampler.horizon();
    const double bias_target = config.eps * std::sqrt(1.0 - config.variance_fraction);

    MlmcResult result;
    std::vector<LevelStats>& stats = result.levels;
    std::vector<long long> pending{config.initial_samples};
    stats.push_back(LevelStats{});

    for (;;) {
        for (std::size_t l = 0; l < stats.size(); ++l) {
            if (pending[l] <= 0) continue;
            const auto grid = LevelGrid::make(static_cast<int>(l), horizon);
            LevelStats batch = sample_level(sampler, grid, config.seed, stats[l].samples, pending[l],
                                            SampleMode::coupled, config.threads);
            stats[l].level = static_cast<int>(l);
            stats[l].merge(batch);
            pending[l] = 0;
        }
        if (observer) observer(stats);

        RateFit rates;
        if (stats.size() >= 3) {
            rates = fit_rates(stats, 1);
        }
        rates.alpha = std::max(rates.alpha, 0.5);
        rates.beta = std::max(rates.beta, 0.5);
        result.rates = rates;

        std::vector<double> variances(stats.size()), steps(stats.size());
        for (std::size_t l = 0; l < stats.size(); ++l) {
            steps[l] = LevelGrid::make(static_cast<int>(l), horizon).dt;
            variances[l] = stats[l].samples >= 2 || l == 0 ? stats[l].var_diff()
                                                           : variances[l - 1] / std::pow(2.0, rates.beta);
        }
        const auto wanted = optimal_samples(variances, steps, config.eps, config.variance_fraction);
        bool significant = false;
        for (std::size_t l = 0; l < stats.size(); ++l) {
            pending[l] = std::max(0LL, wanted[l] - stats[l].samples);
            if (static_cast<double>(pending[l]) > 0.01 * static_cast<double>(stats[l].samples)) significant = true;
        }
        if (significant) continue;

        const int top = static_cast<int>(stats.size()) - 1;
        if (top >= 2) {
            result.bias_estimate = bias_bound(stats, rates.alpha);
            if (result.bias_estimate <= bias_target) {
                result.converged = true;
                break;
            }
        }
        if (top >= config.max_level) {
            result.diagnostic = "max_level reached before the bias test passed";
            break;
        }

        // Add the next level; its variance is extrapolated until sampled.
        stats.push_back(LevelStats{});
        stats.back().level = top + 1;
        variances.push_back(variances.back() / std::pow(2.0, rates.beta));
        steps.push_back(LevelGrid::make(top + 1, horizon).dt);
        const auto regrown = optimal_samples(variances, steps, config.eps, config.variance_fraction);
        pending.resize(stats.size());
        for (std::size_t l = 0; l + 1 < stats.size(); ++l) pending[l] = std::max(0LL, regrown[l] - stats[l].samples);
        pending.back() = std::max(config.initial_samples, regrown.back());
    }

    summarise(result);
    if (result.levels.size() >= 3) {
        result.rates = fit_rates(result.levels, 1);
    }
    if (result.bias_estimate == 0.0 && result.levels.size() >= 2) {
        result.bias_estimate = bias_bound(result.levels, std::max(result.rates.alpha, 0.5));
    }
    return result;
}

MlmcResult run_standard_mc(const LevelSampler& sampler, const MlmcConfig& config) {
    if (!(config.eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (config.initial_samples < 2) throw std::invalid_argument("initial_samples must be at least 2");
    const double horizon = sampler.horizon();
    const int level = std::min(max_level_for_bias(config.eps, config.weak_constant, horizon), config.max_level);
    const auto grid = LevelGrid::make(level, horizon);

    LevelStats stats = sample_level(sampler, grid, config.seed, 0, config.initial_samples, SampleMode::fine_only,
                                    config.threads);
    const auto wanted = static_cast<long long>(
        std::ceil(stats.var_fine() / (config.variance_fraction * config.eps * config.eps)));
    if (wanted > stats.samples) {
        stats.merge(sample_level(sampler, grid, config.seed, stats.samples, wanted - stats.samples,
                                 SampleMode::fine_only, config.threads));
    }
    stats.level = level;

    MlmcResult result;
    result.levels.push_back(stats);
    summarise(result);
    result.converged = true;
    return result;
}

}  // namespace mlmc
