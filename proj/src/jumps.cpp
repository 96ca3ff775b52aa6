#include "mlmc/jumps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mlmc/normal.hpp"

namespace mlmc {

namespace {

double node_time(const LevelGrid& grid, std::size_t k) {
    return k == grid.steps ? grid.horizon : static_cast<double>(k) * grid.dt;
}

// Points of the leg whose uniform nodes are every `stride`-th fine node.
std::vector<GridPoint> merged_points(const LevelGrid& grid, std::size_t stride, const IncrementSet& inc) {
    const double tol = 1e-12 * grid.horizon;
    std::vector<GridPoint> pts;
    pts.reserve(grid.steps / stride + 1 + inc.jump_times.size());
    std::size_t j = 0;
    for (std::size_t k = 0; k <= grid.steps; k += stride) {
        const double t = node_time(grid, k);
        while (j < inc.jump_times.size() && inc.jump_times[j] < t - tol) {
            const double tau = inc.jump_times[j];
            const std::size_t n = std::min(static_cast<std::size_t>(tau / grid.dt), grid.steps - 1);
            GridPoint p;
            p.time = tau;
            p.step = n;
            p.offset = inc.jump_brownian[j];
            p.jump = static_cast<int>(j);
            // A jump on a fine node skipped by this leg keeps that node's bridge draw.
            if (std::abs(tau - node_time(grid, n)) <= tol && n > 0) p.node = static_cast<int>(n);
            pts.push_back(p);
            ++j;
        }
        GridPoint p;
        p.time = t;
        p.step = k;
        p.node = static_cast<int>(k);
        if (j < inc.jump_times.size() && std::abs(inc.jump_times[j] - t) <= tol && k > 0) {
            p.jump = static_cast<int>(j);
            ++j;
        }
        pts.push_back(p);
    }
    return pts;
}

double brownian_between(const IncrementSet& inc, const GridPoint& a, const GridPoint& b) {
    double s = 0.0;
    for (std::size_t i = a.step; i < b.step; ++i) s += inc.fine[i];
    return s + b.offset - a.offset;
}

double bridge_uniform(const IncrementSet& inc, const GridPoint& start) {
    if (start.node >= 0) return inc.uniforms[static_cast<std::size_t>(start.node)];
    return inc.jump_bridge_uniforms[static_cast<std::size_t>(start.jump)];
}

JumpLeg simulate_leg(const ModelSpec& model, const JumpSpec& jumps, const LevelGrid& grid, std::size_t stride,
                     const IncrementSet& inc, ThinningMode mode) {
    JumpLeg leg;
    leg.points = merged_points(grid, stride, inc);
    const std::size_t m = leg.points.size();
    leg.path.dim = 1;
    leg.path.times.resize(m);
    leg.path.values.resize(m);
    leg.path.left_limits.resize(m);
    double x = model.x0[0];
    leg.path.times[0] = 0.0;
    leg.path.values[0] = x;
    leg.path.left_limits[0] = x;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const GridPoint& a = leg.points[i];
        const GridPoint& b = leg.points[i + 1];
        const double h = b.time - a.time;
        const double dw = brownian_between(inc, a, b);
        double xm = x + model.drift1(x) * h + model.diffusion1(x) * dw + model.tensor1(x) * (dw * dw - h);
        if (!std::isfinite(xm)) throw NonFiniteState(i + 1, "non-finite state at jump-adapted step " + std::to_string(i + 1));
        leg.path.left_limits[i + 1] = xm;
        if (b.jump >= 0) {
            const auto jdx = static_cast<std::size_t>(b.jump);
            bool accept = true;
            if (mode != ThinningMode::none) {
                const double p = jumps.intensity(xm) / jumps.rate;
                if (!(p >= 0.0) || p > 1.0 + 1e-12) {
                    throw std::runtime_error("jump intensity exceeds its declared bound at t=" + std::to_string(b.time));
                }
                const double u = inc.jump_uniforms[jdx];
                if (mode == ThinningMode::direct) {
                    accept = u < p;
                } else {
                    accept = u < 0.5;
                    leg.weight *= accept ? 2.0 * p : 2.0 * (1.0 - p);
                }
            }
            if (accept) {
                xm += jumps.jump_coefficient(xm) * (inc.jump_marks[jdx] - 1.0);
                ++leg.jumps;
            }
        }
        x = xm;
        leg.path.times[i + 1] = b.time;
        leg.path.values[i + 1] = x;
    }
    return leg;
}

struct Piece {
    double a, b, g, dt, u;
};

std::vector<Piece> fine_pieces(const ModelSpec& model, const JumpLeg& leg, const IncrementSet& inc) {
    std::vector<Piece> out;
    const auto& p = leg.path;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        out.push_back({p.values[i], p.left_limits[i + 1], model.diffusion1(p.values[i]), p.times[i + 1] - p.times[i],
                       bridge_uniform(inc, leg.points[i])});
    }
    return out;
}

// Coarse intervals split at any coarse midpoint they contain, with the
// midpoint value interpolated by a Brownian bridge and g frozen at the start.
std::vector<Piece> coarse_pieces(const ModelSpec& model, const JumpLeg& leg, const LevelGrid& grid,
                                 const IncrementSet& inc) {
    std::vector<Piece> out;
    const auto& p = leg.path;
    const double tol = 1e-12 * grid.horizon;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const GridPoint& a = leg.points[i];
        const GridPoint& b = leg.points[i + 1];
        const double xa = p.values[i];
        const double xb = p.left_limits[i + 1];
        const double g = model.diffusion1(xa);
        const std::size_t q = a.node >= 0 ? static_cast<std::size_t>(a.node) + 1 : a.step + 1;
        const double tq = node_time(grid, q);
        if (q % 2 == 1 && tq > a.time + tol && tq < b.time - tol) {
            GridPoint mid;
            mid.time = tq;
            mid.step = q;
            mid.node = static_cast<int>(q);
            const double lambda = (tq - a.time) / (b.time - a.time);
            const double xm = xa + lambda * (xb - xa) +
                              g * (brownian_between(inc, a, mid) - lambda * brownian_between(inc, a, b));
            out.push_back({xa, xm, g, tq - a.time, bridge_uniform(inc, a)});
            out.push_back({xm, xb, g, b.time - tq, bridge_uniform(inc, mid)});
        } else {
            out.push_back({xa, xb, g, b.time - a.time, bridge_uniform(inc, a)});
        }
    }
    return out;
}

double lookback_value(const std::vector<Piece>& pieces, double start, double terminal) {
    double lo = start;
    for (const auto& pc : pieces) lo = std::min(lo, bridge_minimum(pc.a, pc.b, pc.g, pc.dt, pc.u));
    return terminal - lo;
}

double survival(const std::vector<Piece>& pieces, double barrier, int& degenerate) {
    double s = 1.0;
    for (const auto& pc : pieces) {
        bool deg = false;
        s *= 1.0 - crossing_probability(pc.a, pc.b, barrier, pc.g, pc.dt, deg);
        degenerate += deg;
    }
    return s;
}

double time_average(const JumpLeg& leg) {
    const auto& p = leg.path;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        s += 0.5 * (p.values[i] + p.left_limits[i + 1]) * (p.times[i + 1] - p.times[i]);
    }
    return s / p.times.back();
}

double digital_value(double mean, double sd, double strike, int& degenerate) {
    if (sd == 0.0) {
        ++degenerate;
        return mean > strike ? 1.0 : 0.0;
    }
    return normal_cdf((mean - strike) / sd);
}

}  // namespace

JumpSpec merton_jumps(const ModelSpec& model) {
    auto get = [&](const char* name) {
        auto it = model.params.find(name);
        if (it == model.params.end()) throw std::invalid_argument(std::string("model lacks jump parameter '") + name + "'");
        return it->second;
    };
    JumpSpec spec;
    spec.rate = get("lambda");
    spec.mark_mu = get("jump_mu");
    spec.mark_sigma = get("jump_sigma");
    return spec;
}

JumpSpec decaying_intensity_jumps(const ModelSpec& model, double bound) {
    if (!(bound > 0.0)) throw std::invalid_argument("intensity bound must be positive");
    JumpSpec spec = merton_jumps(model);
    spec.rate = bound;
    spec.intensity = [bound](double x) { return bound / (1.0 + x * x); };
    return spec;
}

std::vector<double> sample_jump_times(CounterStream& stream, double rate, double horizon) {
    if (rate < 0.0) throw std::invalid_argument("jump rate must be nonnegative");
    std::vector<double> times;
    if (rate == 0.0) return times;
    double t = stream.exponential(rate);
    while (t <= horizon) {
        if (times.empty() || t > times.back()) times.push_back(t);
        t += stream.exponential(rate);
    }
    return times;
}

std::vector<double> jump_adapted_grid(const LevelGrid& grid, const std::vector<double>& jump_times) {
    std::vector<double> out;
    out.reserve(grid.steps + 1 + jump_times.size());
    for (std::size_t k = 0; k <= grid.steps; ++k) out.push_back(node_time(grid, k));
    for (double t : jump_times) {
        if (t <= 0.0 || t > grid.horizon) throw std::invalid_argument("jump time outside (0, T]");
        out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    const double tol = 1e-12 * grid.horizon;
    std::vector<double> merged;
    for (double t : out) {
        if (merged.empty() || t - merged.back() > tol) merged.push_back(t);
    }
    return merged;
}

IncrementSet sample_jump_increments(const StreamKey& key, const LevelGrid& grid, const ModelSpec& model,
                                    const JumpSpec& jumps) {
    if (!model.is_scalar()) throw std::invalid_argument("jump-adapted simulation needs a scalar model");
    IncrementSet inc = sample_increments(key, grid, model);
    CounterStream stream(key.with_purpose(StreamPurpose::jumps));
    inc.jump_times = sample_jump_times(stream, jumps.rate, grid.horizon);
    const std::size_t k = inc.jump_times.size();
    inc.jump_marks.resize(k);
    inc.jump_uniforms.resize(k);
    inc.jump_bridge_uniforms.resize(k);
    inc.jump_brownian.resize(k);
    for (std::size_t i = 0; i < k; ++i) inc.jump_marks[i] = std::exp(jumps.mark_mu + jumps.mark_sigma * stream.normal());
    for (std::size_t i = 0; i < k; ++i) inc.jump_uniforms[i] = stream.uniform();
    for (std::size_t i = 0; i < k; ++i) inc.jump_bridge_uniforms[i] = stream.uniform();

    // Brownian bridge inside each fine step, conditioned on the step increment.
    std::size_t current = grid.steps;
    double s = 0.0, ws = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double tau = inc.jump_times[i];
        const std::size_t n = std::min(static_cast<std::size_t>(tau / grid.dt), grid.steps - 1);
        if (n != current) {
            current = n;
            s = node_time(grid, n);
            ws = 0.0;
        }
        const double end = node_time(grid, n + 1);
        const double span = end - s;
        const double frac = span > 0.0 ? (tau - s) / span : 0.0;
        const double var = span > 0.0 ? std::max(0.0, (tau - s) * (end - tau) / span) : 0.0;
        const double w = ws + frac * (inc.fine[n] - ws) + std::sqrt(var) * stream.normal();
        inc.jump_brownian[i] = w;
        s = tau;
        ws = w;
    }
    return inc;
}

JumpCoupledPaths jump_adapted_milstein_pair(const ModelSpec& model, const JumpSpec& jumps, const LevelGrid& grid,
                                            const IncrementSet& inc, ThinningMode mode) {
    if (!model.is_scalar()) throw std::invalid_argument("jump-adapted simulation needs a scalar model");
    if (mode != ThinningMode::none && !jumps.state_dependent()) {
        throw std::invalid_argument("thinning needs a state-dependent intensity");
    }
    if (mode == ThinningMode::none && jumps.state_dependent()) {
        throw std::invalid_argument("a state-dependent intensity needs a thinning mode");
    }
    JumpCoupledPaths out;
    out.fine = simulate_leg(model, jumps, grid, 1, inc, mode);
    if (grid.level >= 1) out.coarse = simulate_leg(model, jumps, grid, 2, inc, mode);
    return out;
}

PayoffPair jump_payoff_pair(const JumpCoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                            const LevelGrid& grid, const IncrementSet& inc) {
    PayoffPair out;
    const auto& fine = paths.fine;
    const double x0 = fine.path.values[0];
    auto terminal_only = [&](const JumpLeg& leg) { return spec.terminal_value(leg.path.values.back()); };
    switch (spec.family) {
        case PayoffFamily::european:
            out.fine = terminal_only(fine);
            if (paths.coarse) out.coarse = terminal_only(*paths.coarse);
            break;
        case PayoffFamily::asian:
            out.fine = std::max(time_average(fine) - spec.strike, 0.0);
            if (paths.coarse) out.coarse = std::max(time_average(*paths.coarse) - spec.strike, 0.0);
            break;
        case PayoffFamily::lookback:
            out.fine = lookback_value(fine_pieces(model, fine, inc), x0, fine.path.values.back());
            if (paths.coarse) {
                out.coarse = lookback_value(coarse_pieces(model, *paths.coarse, grid, inc), x0,
                                            paths.coarse->path.values.back());
            }
            break;
        case PayoffFamily::barrier:
            out.fine = terminal_only(fine) * survival(fine_pieces(model, fine, inc), spec.barrier, out.degenerate);
            if (paths.coarse) {
                out.coarse = terminal_only(*paths.coarse) *
                             survival(coarse_pieces(model, *paths.coarse, grid, inc), spec.barrier, out.degenerate);
            }
            break;
        case PayoffFamily::digital: {
            const std::size_t lf = fine.path.size() - 2;
            const GridPoint& a = fine.points[lf];
            const double xa = fine.path.values[lf];
            const double hf = grid.horizon - a.time;
            out.fine = digital_value(xa + model.drift1(xa) * hf, std::abs(model.diffusion1(xa)) * std::sqrt(hf),
                                     spec.strike, out.degenerate);
            if (paths.coarse) {
                const auto& c = *paths.coarse;
                const std::size_t lc = c.path.size() - 2;
                const GridPoint& s = c.points[lc];
                const double xs = c.path.values[lc];
                const double g = model.diffusion1(xs);
                double mean = xs + model.drift1(xs) * (grid.horizon - s.time);
                double sd = std::abs(g) * std::sqrt(grid.horizon - s.time);
                if (s.time < a.time - 1e-12 * grid.horizon) {
                    mean += g * brownian_between(inc, s, a);
                    sd = std::abs(g) * std::sqrt(hf);
                }
                out.coarse = digital_value(mean, sd, spec.strike, out.degenerate);
            }
            break;
        }
    }
    out.fine *= spec.discount * fine.weight;
    if (paths.coarse) out.coarse *= spec.discount * paths.coarse->weight;
    out.cost_units = static_cast<double>(fine.path.steps()) + (paths.coarse ? paths.coarse->path.steps() : 0.0);
    return out;
}

PayoffPair thinned_pair_with_measure_change(const ModelSpec& model, const JumpSpec& jumps, const PayoffSpec& spec,
                                            const LevelGrid& grid, const IncrementSet& inc) {
    const auto paths = jump_adapted_milstein_pair(model, jumps, grid, inc, ThinningMode::measure_change);
    return jump_payoff_pair(paths, spec, model, grid, inc);
}

JumpSampler::JumpSampler(ModelSpec model, JumpSpec jumps, PayoffSpec payoff, double horizon, ThinningMode mode)
    : model_(std::move(model)), jumps_(std::move(jumps)), payoff_(payoff), horizon_(horizon), mode_(mode) {
    if (!model_.is_scalar()) throw std::invalid_argument("jump models must be scalar");
    validate_payoff(payoff_, model_);
    if (payoff_.mode != SchemeMode::milstein_smoothed) {
        throw std::invalid_argument("jump-adapted estimators use the smoothed Milstein mode");
    }
    if (!(jumps_.rate >= 0.0)) throw std::invalid_argument("jump rate must be nonnegative");
    if ((mode_ == ThinningMode::none) == jumps_.state_dependent()) {
        throw std::invalid_argument("thinning mode and intensity type disagree");
    }
}

SampleResult JumpSampler::sample(const LevelGrid& grid, const StreamKey& key, SampleMode mode) const {
    const IncrementSet inc = sample_jump_increments(key, grid, model_, jumps_);
    JumpCoupledPaths paths = jump_adapted_milstein_pair(model_, jumps_, grid, inc, mode_);
    if (mode == SampleMode::fine_only) paths.coarse.reset();
    const PayoffPair pair = jump_payoff_pair(paths, payoff_, model_, grid, inc);
    SampleResult out;
    out.fine = pair.fine;
    out.coarse = pair.coarse;
    out.cost = pair.cost_units;
    out.degenerate = pair.degenerate;
    return out;
}

}  // namespace mlmc
