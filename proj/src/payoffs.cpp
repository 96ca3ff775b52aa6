#include "mlmc/payoffs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlmc/normal.hpp"

namespace mlmc {

namespace {

double component_at(const PathState& path, std::size_t n, int c) { return path.value(n, c); }

double trapezoid_average(const PathState& path, int c) {
    const std::size_t n = path.steps();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += component_at(path, i, c) + component_at(path, i + 1, c);
    return 0.5 * s / static_cast<double>(n);
}

double call_on(double x, double strike) { return std::max(x - strike, 0.0); }

bool survives(const PathState& path, const PayoffSpec& spec) {
    double lo = component_at(path, 0, spec.component);
    double hi = lo;
    for (std::size_t i = 1; i <= path.steps(); ++i) {
        const double x = component_at(path, i, spec.component);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    switch (spec.barrier_kind) {
        case BarrierKind::down_out: return lo >= spec.barrier;
        case BarrierKind::up_out: return hi <= spec.barrier;
        case BarrierKind::down_in: return lo <= spec.barrier;
        case BarrierKind::up_in: return hi > spec.barrier;
    }
    return false;
}

// Conditional probability that X_T > K given a Gaussian final step.
double digital_probability(double mean, double sd, double strike, int& degenerate) {
    if (sd == 0.0) {
        ++degenerate;
        return mean > strike ? 1.0 : 0.0;
    }
    return normal_cdf((mean - strike) / sd);
}

}  // namespace

double PayoffSpec::terminal_value(double x) const noexcept {
    switch (terminal) {
        case TerminalKind::call: return std::max(x - strike, 0.0);
        case TerminalKind::put: return std::max(strike - x, 0.0);
        case TerminalKind::forward: return x - strike;
    }
    return 0.0;
}

double PayoffSpec::terminal_slope(double x) const noexcept {
    switch (terminal) {
        case TerminalKind::call: return x > strike ? 1.0 : 0.0;
        case TerminalKind::put: return x < strike ? -1.0 : 0.0;
        case TerminalKind::forward: return 1.0;
    }
    return 0.0;
}

Scheme scheme_for(SchemeMode mode) noexcept { return mode == SchemeMode::euler ? Scheme::euler : Scheme::milstein; }

std::string to_string(PayoffFamily family) {
    switch (family) {
        case PayoffFamily::european: return "european";
        case PayoffFamily::asian: return "asian";
        case PayoffFamily::lookback: return "lookback";
        case PayoffFamily::barrier: return "barrier";
        case PayoffFamily::digital: return "digital";
    }
    return "unknown";
}

void validate_payoff(const PayoffSpec& spec, const ModelSpec& model) {
    if (spec.component < 0 || spec.component >= model.dim) {
        throw std::invalid_argument("payoff component outside the model state");
    }
    const bool call_type = spec.terminal != TerminalKind::forward;
    if ((call_type || spec.family == PayoffFamily::digital) && !(spec.strike > 0.0)) {
        throw std::invalid_argument("strike must be positive");
    }
    if (!(spec.discount > 0.0) || !std::isfinite(spec.discount)) throw std::invalid_argument("discount must be positive");
    const bool smoothed = spec.mode == SchemeMode::milstein_smoothed;
    const bool path_dependent_smoothing = spec.family == PayoffFamily::lookback ||
                                          spec.family == PayoffFamily::barrier || spec.family == PayoffFamily::digital;
    if (((smoothed && path_dependent_smoothing) || spec.family == PayoffFamily::lookback) && !model.is_scalar()) {
        throw std::invalid_argument(to_string(spec.family) + " smoothing needs a scalar model");
    }
    if (spec.mode == SchemeMode::antithetic && spec.family != PayoffFamily::european &&
        spec.family != PayoffFamily::asian) {
        throw std::invalid_argument("antithetic mode supports european and asian payoffs only");
    }
    if (spec.family == PayoffFamily::barrier) {
        if (smoothed && spec.barrier_kind != BarrierKind::down_out) {
            throw std::invalid_argument("smoothed barrier supports down-and-out only");
        }
        const double x0 = model.x0[static_cast<std::size_t>(spec.component)];
        if (spec.barrier_kind == BarrierKind::down_out && !(spec.barrier < x0)) {
            throw std::invalid_argument("down-and-out barrier must lie below x0");
        }
        if (spec.barrier_kind == BarrierKind::up_out && !(spec.barrier > x0)) {
            throw std::invalid_argument("up-and-out barrier must lie above x0");
        }
    }
}

double coupled_cost(const LevelGrid& grid) noexcept {
    const double fine = static_cast<double>(grid.steps);
    return grid.level == 0 ? fine : fine + 0.5 * fine;
}

double bridge_minimum(double a, double b, double g, double dt, double u) noexcept {
    const double spread = (b - a) * (b - a) - 2.0 * g * g * dt * std::log(u);
    return 0.5 * (a + b - std::sqrt(std::max(spread, 0.0)));
}

double crossing_probability(double a, double b, double barrier, double g, double dt, bool& degenerate) noexcept {
    degenerate = false;
    const double gap = std::max(a - barrier, 0.0) * std::max(b - barrier, 0.0);
    if (gap == 0.0) return 1.0;
    const double denom = g * g * dt;
    if (denom == 0.0) {
        degenerate = true;
        return 0.0;
    }
    return std::exp(-2.0 * gap / denom);
}

PayoffPair european_pair(const CoupledPaths& paths, const PayoffSpec& spec) {
    PayoffPair out;
    const int c = spec.component;
    out.fine = spec.terminal_value(paths.fine.terminal(c));
    if (paths.antithetic) out.fine = 0.5 * (out.fine + spec.terminal_value(paths.antithetic->terminal(c)));
    if (paths.coarse) out.coarse = spec.terminal_value(paths.coarse->terminal(c));
    out.fine *= spec.discount;
    out.coarse *= spec.discount;
    return out;
}

PayoffPair asian_pair(const CoupledPaths& paths, const PayoffSpec& spec) {
    PayoffPair out;
    const int c = spec.component;
    out.fine = call_on(trapezoid_average(paths.fine, c), spec.strike);
    if (paths.antithetic) out.fine = 0.5 * (out.fine + call_on(trapezoid_average(*paths.antithetic, c), spec.strike));
    if (paths.coarse) out.coarse = call_on(trapezoid_average(*paths.coarse, c), spec.strike);
    out.fine *= spec.discount;
    out.coarse *= spec.discount;
    return out;
}

PayoffPair lookback_pair_euler(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                               const LevelGrid& grid) {
    auto leg = [&](const PathState& path, double dt) {
        const double root = std::sqrt(dt);
        double lo = path.values[0] - spec.beta_star * model.diffusion1(path.values[0]) * root;
        for (std::size_t i = 1; i <= path.steps(); ++i) {
            const double x = path.values[i];
            lo = std::min(lo, x - spec.beta_star * model.diffusion1(x) * root);
        }
        return path.values.back() - lo;
    };
    PayoffPair out;
    out.fine = spec.discount * leg(paths.fine, grid.dt);
    if (paths.coarse) out.coarse = spec.discount * leg(*paths.coarse, 2.0 * grid.dt);
    return out;
}

PayoffPair lookback_pair_milstein(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                                  const LevelGrid& grid, const IncrementSet& inc) {
    if (inc.uniforms.size() != grid.steps) throw std::logic_error("bridge uniforms misaligned with the fine grid");
    const auto& xf = paths.fine.values;
    double lo = xf[0];
    for (std::size_t n = 0; n < grid.steps; ++n) {
        lo = std::min(lo, bridge_minimum(xf[n], xf[n + 1], model.diffusion1(xf[n]), grid.dt, inc.uniforms[n]));
    }
    PayoffPair out;
    out.fine = spec.discount * (xf.back() - lo);
    if (paths.coarse) {
        if (paths.midpoints.size() != paths.coarse->steps()) throw std::logic_error("coarse midpoints missing");
        const auto& xc = paths.coarse->values;
        double lc = xc[0];
        for (std::size_t n = 0; n < paths.coarse->steps(); ++n) {
            const double g = model.diffusion1(xc[n]);
            const double mid = paths.midpoints[n];
            lc = std::min(lc, bridge_minimum(xc[n], mid, g, grid.dt, inc.uniforms[2 * n]));
            lc = std::min(lc, bridge_minimum(mid, xc[n + 1], g, grid.dt, inc.uniforms[2 * n + 1]));
        }
        out.coarse = spec.discount * (xc.back() - lc);
    }
    return out;
}

PayoffPair barrier_pair(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                        const LevelGrid& grid, const IncrementSet& inc) {
    (void)inc;
    PayoffPair out;
    const double b = spec.barrier;
    bool degenerate = false;
    const auto& xf = paths.fine.values;
    double survive = 1.0;
    for (std::size_t n = 0; n < grid.steps; ++n) {
        survive *= 1.0 - crossing_probability(xf[n], xf[n + 1], b, model.diffusion1(xf[n]), grid.dt, degenerate);
        out.degenerate += degenerate;
    }
    out.fine = spec.discount * spec.terminal_value(xf.back()) * survive;
    if (paths.coarse) {
        if (paths.midpoints.size() != paths.coarse->steps()) throw std::logic_error("coarse midpoints missing");
        const auto& xc = paths.coarse->values;
        double sc = 1.0;
        for (std::size_t n = 0; n < paths.coarse->steps(); ++n) {
            const double g = model.diffusion1(xc[n]);
            const double mid = paths.midpoints[n];
            sc *= 1.0 - crossing_probability(xc[n], mid, b, g, grid.dt, degenerate);
            out.degenerate += degenerate;
            sc *= 1.0 - crossing_probability(mid, xc[n + 1], b, g, grid.dt, degenerate);
            out.degenerate += degenerate;
        }
        out.coarse = spec.discount * spec.terminal_value(xc.back()) * sc;
    }
    return out;
}

PayoffPair barrier_pair_euler(const CoupledPaths& paths, const PayoffSpec& spec) {
    PayoffPair out;
    const int c = spec.component;
    if (survives(paths.fine, spec)) out.fine = spec.discount * spec.terminal_value(paths.fine.terminal(c));
    if (paths.coarse && survives(*paths.coarse, spec)) {
        out.coarse = spec.discount * spec.terminal_value(paths.coarse->terminal(c));
    }
    return out;
}

PayoffPair digital_pair(const CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                        const LevelGrid& grid, const IncrementSet& inc) {
    PayoffPair out;
    const double root = std::sqrt(grid.dt);
    const auto& xf = paths.fine.values;
    const double xp = xf[grid.steps - 1];
    out.fine = spec.discount *
               digital_probability(xp + model.drift1(xp) * grid.dt, std::abs(model.diffusion1(xp)) * root,
                                   spec.strike, out.degenerate);
    if (paths.coarse) {
        const auto& xc = paths.coarse->values;
        const std::size_t nc = paths.coarse->steps();
        const double x = xc[nc - 1];
        const double g = model.diffusion1(x);
        const double half = inc.fine[grid.steps - 2];
        out.coarse = spec.discount * digital_probability(x + model.drift1(x) * 2.0 * grid.dt + g * half,
                                                         std::abs(g) * root, spec.strike, out.degenerate);
    }
    return out;
}

PayoffPair digital_pair_euler(const CoupledPaths& paths, const PayoffSpec& spec) {
    PayoffPair out;
    const int c = spec.component;
    out.fine = paths.fine.terminal(c) > spec.strike ? spec.discount : 0.0;
    if (paths.coarse) out.coarse = paths.coarse->terminal(c) > spec.strike ? spec.discount : 0.0;
    return out;
}

PayoffPair evaluate_pair(CoupledPaths& paths, const PayoffSpec& spec, const ModelSpec& model,
                         const LevelGrid& grid, const IncrementSet& inc) {
    PayoffPair out;
    const bool euler = spec.mode == SchemeMode::euler;
    switch (spec.family) {
        case PayoffFamily::european: out = european_pair(paths, spec); break;
        case PayoffFamily::asian: out = asian_pair(paths, spec); break;
        case PayoffFamily::lookback:
            if (euler) {
                out = lookback_pair_euler(paths, spec, model, grid);
            } else {
                if (paths.midpoints.empty()) attach_midpoints(paths, model, inc);
                out = lookback_pair_milstein(paths, spec, model, grid, inc);
            }
            break;
        case PayoffFamily::barrier:
            if (euler) {
                out = barrier_pair_euler(paths, spec);
            } else {
                if (paths.midpoints.empty()) attach_midpoints(paths, model, inc);
                out = barrier_pair(paths, spec, model, grid, inc);
            }
            break;
        case PayoffFamily::digital:
            out = euler ? digital_pair_euler(paths, spec) : digital_pair(paths, spec, model, grid, inc);
            break;
    }
    out.cost_units = coupled_cost(grid);
    if (paths.antithetic) out.cost_units += static_cast<double>(grid.steps);
    return out;
}

}  // namespace mlmc
