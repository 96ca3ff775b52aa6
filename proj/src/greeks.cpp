#include "mlmc/greeks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlmc/normal.hpp"

namespace mlmc {

namespace {

// Forward-mode value with one directional derivative.
struct Dual {
    double v = 0.0;
    double d = 0.0;
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }
Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
Dual dsqrt(Dual a) {
    const double r = std::sqrt(a.v);
    return {r, r > 0.0 ? 0.5 * a.d / r : 0.0};
}
Dual dexp(Dual a) {
    const double e = std::exp(a.v);
    return {e, e * a.d};
}
Dual positive_part(Dual a) { return a.v > 0.0 ? a : Dual{}; }
Dual dmin(Dual a, Dual b) { return b.v < a.v ? b : a; }

void require_scalar(const ModelSpec& model) {
    if (!model.is_scalar() || !model.scalar_jet) {
        throw std::invalid_argument("sensitivities need a scalar model with coefficient derivatives");
    }
}

Dual diffusion_dual(const ModelSpec& model, Dual x, ParamSelector theta) {
    const ScalarJet j = model.scalar_jet(x.v, theta.which);
    return {j.g, j.gx * x.d + j.gp};
}

struct StepOutcome {
    double x;
    double t;
};

StepOutcome tangent_step(const ModelSpec& model, Scheme scheme, ParamSelector theta, double x, double t, double dt,
                         double w) {
    const ScalarJet j = model.scalar_jet(x, theta.which);
    double nx = x + j.f * dt + j.g * w;
    double nt = t + (j.fx * t + j.fp) * dt + (j.gx * t + j.gp) * w;
    if (scheme == Scheme::milstein) {
        nx += j.h * (w * w - dt);
        nt += (j.hx * t + j.hp) * (w * w - dt);
    }
    return {nx, nt};
}

// Conditional expectation of the terminal payoff under X_T ~ N(mu, sigma^2),
// and its derivative along (dmu, dsigma).
Dual gaussian_payoff(const PayoffSpec& spec, const VibratoComponents& c, int& degenerate) {
    const double k = spec.strike;
    if (c.sigma == 0.0) {
        ++degenerate;
        if (spec.family == PayoffFamily::digital) return {c.mu > k ? 1.0 : 0.0, 0.0};
        return {spec.terminal_value(c.mu), spec.terminal_slope(c.mu) * c.dmu};
    }
    const double d = (c.mu - k) / c.sigma;
    const double cdf = normal_cdf(d);
    const double pdf = normal_pdf(d);
    if (spec.family == PayoffFamily::digital) return {cdf, pdf * (c.dmu - d * c.dsigma) / c.sigma};
    switch (spec.terminal) {
        case TerminalKind::call: return {(c.mu - k) * cdf + c.sigma * pdf, cdf * c.dmu + pdf * c.dsigma};
        case TerminalKind::put:
            return {(k - c.mu) * (1.0 - cdf) + c.sigma * pdf, -(1.0 - cdf) * c.dmu + pdf * c.dsigma};
        case TerminalKind::forward: return {c.mu - k, c.dmu};
    }
    return {};
}

double terminal_payoff(const PayoffSpec& spec, double x) {
    if (spec.family == PayoffFamily::digital) return x > spec.strike ? 1.0 : 0.0;
    return spec.terminal_value(x);
}

std::vector<Dual> as_duals(const SensitivityState& s) {
    std::vector<Dual> out(s.path.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {s.path.values[i], s.tangent[i]};
    return out;
}

// Coarse Brownian-bridge midpoints with tangents.
std::vector<Dual> coarse_midpoints(const ModelSpec& model, const std::vector<Dual>& xc, const IncrementSet& inc,
                                   ParamSelector theta) {
    std::vector<Dual> mid(xc.size() - 1);
    for (std::size_t n = 0; n + 1 < xc.size(); ++n) {
        const double bridge = inc.fine[2 * n] - 0.5 * inc.coarse[n];
        mid[n] = 0.5 * (xc[n] + xc[n + 1]) + bridge * diffusion_dual(model, xc[n], theta);
    }
    return mid;
}

Dual bridge_min_dual(Dual a, Dual b, Dual g, double dt, double u) {
    const Dual spread = (b - a) * (b - a) - (2.0 * dt * std::log(u)) * (g * g);
    return 0.5 * (a + b - dsqrt(spread));
}

Dual survival_dual(Dual a, Dual b, Dual g, double barrier, double dt, int& degenerate) {
    const Dual gap = positive_part(a - Dual{barrier, 0.0}) * positive_part(b - Dual{barrier, 0.0});
    if (gap.v == 0.0) return {};
    const Dual denom = dt * (g * g);
    if (denom.v == 0.0) {
        ++degenerate;
        return {1.0, 0.0};
    }
    return Dual{1.0, 0.0} - dexp(-2.0 * gap / denom);
}

Dual terminal_dual(const PayoffSpec& spec, Dual x) { return {spec.terminal_value(x.v), spec.terminal_slope(x.v) * x.d}; }

PayoffPair path_dependent_pair(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                               const IncrementSet& inc, ParamSelector theta, const SensitivityState& fine_state,
                               const SensitivityState* coarse_state, bool differentiate) {
    PayoffPair out;
    const auto xf = as_duals(fine_state);
    auto pick = [&](Dual v) { return differentiate ? v.d : v.v; };
    if (spec.family == PayoffFamily::lookback) {
        Dual lo = xf[0];
        for (std::size_t n = 0; n < grid.steps; ++n) {
            lo = dmin(lo, bridge_min_dual(xf[n], xf[n + 1], diffusion_dual(model, xf[n], theta), grid.dt,
                                          inc.uniforms[n]));
        }
        out.fine = spec.discount * pick(xf.back() - lo);
        if (coarse_state) {
            const auto xc = as_duals(*coarse_state);
            const auto mid = coarse_midpoints(model, xc, inc, theta);
            Dual lc = xc[0];
            for (std::size_t n = 0; n < mid.size(); ++n) {
                const Dual g = diffusion_dual(model, xc[n], theta);
                lc = dmin(lc, bridge_min_dual(xc[n], mid[n], g, grid.dt, inc.uniforms[2 * n]));
                lc = dmin(lc, bridge_min_dual(mid[n], xc[n + 1], g, grid.dt, inc.uniforms[2 * n + 1]));
            }
            out.coarse = spec.discount * pick(xc.back() - lc);
        }
        return out;
    }
    Dual survive{1.0, 0.0};
    for (std::size_t n = 0; n < grid.steps; ++n) {
        survive = survive * survival_dual(xf[n], xf[n + 1], diffusion_dual(model, xf[n], theta), spec.barrier,
                                          grid.dt, out.degenerate);
    }
    out.fine = spec.discount * pick(terminal_dual(spec, xf.back()) * survive);
    if (coarse_state) {
        const auto xc = as_duals(*coarse_state);
        const auto mid = coarse_midpoints(model, xc, inc, theta);
        Dual sc{1.0, 0.0};
        for (std::size_t n = 0; n < mid.size(); ++n) {
            const Dual g = diffusion_dual(model, xc[n], theta);
            sc = sc * survival_dual(xc[n], mid[n], g, spec.barrier, grid.dt, out.degenerate);
            sc = sc * survival_dual(mid[n], xc[n + 1], g, spec.barrier, grid.dt, out.degenerate);
        }
        out.coarse = spec.discount * pick(terminal_dual(spec, xc.back()) * sc);
    }
    return out;
}

struct Legs {
    SensitivityState fine;
    std::optional<SensitivityState> coarse;
};

Legs build_legs(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc, ParamSelector theta) {
    require_scalar(model);
    Legs legs;
    legs.fine = tangent_integrate(model, Scheme::milstein, grid.horizon, grid.dt, inc.fine, theta);
    if (grid.level >= 1) {
        legs.coarse = tangent_integrate(model, Scheme::milstein, grid.horizon, 2.0 * grid.dt, inc.coarse, theta);
    }
    return legs;
}

}  // namespace

ParamSelector selector_for(GreekKind kind) {
    switch (kind) {
        case GreekKind::value:
        case GreekKind::delta: return {Parameter::initial_state};
        case GreekKind::vega: return {Parameter::volatility};
        case GreekKind::drift: return {Parameter::drift};
    }
    return {};
}

GreekKind greek_kind_from_string(const std::string& name) {
    if (name == "value") return GreekKind::value;
    if (name == "delta") return GreekKind::delta;
    if (name == "vega") return GreekKind::vega;
    if (name == "drift" || name == "theta") return GreekKind::drift;
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

std::string to_string(GreekKind kind) {
    switch (kind) {
        case GreekKind::value: return "value";
        case GreekKind::delta: return "delta";
        case GreekKind::vega: return "vega";
        case GreekKind::drift: return "drift";
    }
    return "unknown";
}

GreekMethod greek_method_from_string(const std::string& name) {
    if (name == "smoothed" || name == "pathwise") return GreekMethod::smoothed;
    if (name == "split") return GreekMethod::split;
    if (name == "vibrato") return GreekMethod::vibrato;
    throw std::invalid_argument("unknown greek method '" + name + "'");
}

std::string to_string(GreekMethod method) {
    switch (method) {
        case GreekMethod::smoothed: return "smoothed";
        case GreekMethod::split: return "split";
        case GreekMethod::vibrato: return "vibrato";
    }
    return "unknown";
}

SensitivityState tangent_integrate(const ModelSpec& model, Scheme scheme, double horizon, double dt,
                                   std::span<const double> increments, ParamSelector theta) {
    require_scalar(model);
    const std::size_t n = increments.size();
    SensitivityState s;
    s.path.dim = 1;
    s.path.times.resize(n + 1);
    s.path.values.resize(n + 1);
    s.tangent.resize(n + 1);
    double x = model.x0[0];
    double t = theta.which == Parameter::initial_state ? 1.0 : 0.0;
    s.path.values[0] = x;
    s.tangent[0] = t;
    for (std::size_t i = 0; i < n; ++i) {
        const auto step = tangent_step(model, scheme, theta, x, t, dt, increments[i]);
        x = step.x;
        t = step.t;
        if (!std::isfinite(x) || !std::isfinite(t)) {
            throw NonFiniteState(i + 1, "non-finite state or tangent at step " + std::to_string(i + 1));
        }
        s.path.values[i + 1] = x;
        s.tangent[i + 1] = t;
        s.path.times[i + 1] = (i + 1 == n) ? horizon : static_cast<double>(i + 1) * dt;
    }
    return s;
}

SensitivityState pathwise_tangent_path(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc,
                                       ParamSelector theta, Scheme scheme) {
    if (inc.fine_steps() != grid.steps) throw std::invalid_argument("increments do not match the grid resolution");
    return tangent_integrate(model, scheme, grid.horizon, grid.dt, inc.fine, theta);
}

VibratoComponents final_step_fine(const ModelSpec& model, const SensitivityState& fine, const LevelGrid& grid,
                                  ParamSelector theta) {
    const std::size_t last = grid.steps - 1;
    const double x = fine.path.values[last];
    const double t = fine.tangent[last];
    const ScalarJet j = model.scalar_jet(x, theta.which);
    const double root = std::sqrt(grid.dt);
    const double sign = j.g < 0.0 ? -1.0 : 1.0;
    return {x + j.f * grid.dt, std::abs(j.g) * root, t * (1.0 + j.fx * grid.dt) + j.fp * grid.dt,
            sign * (j.gx * t + j.gp) * root};
}

VibratoComponents final_step_coarse(const ModelSpec& model, const SensitivityState& coarse, const LevelGrid& grid,
                                    const IncrementSet& inc, ParamSelector theta) {
    const std::size_t last = coarse.path.steps() - 1;
    const double x = coarse.path.values[last];
    const double t = coarse.tangent[last];
    const ScalarJet j = model.scalar_jet(x, theta.which);
    const double dtc = 2.0 * grid.dt;
    const double half = inc.fine[grid.steps - 2];
    const double root = std::sqrt(grid.dt);
    const double sign = j.g < 0.0 ? -1.0 : 1.0;
    return {x + j.f * dtc + j.g * half, std::abs(j.g) * root,
            t * (1.0 + j.fx * dtc + j.gx * half) + j.fp * dtc + j.gp * half, sign * (j.gx * t + j.gp) * root};
}

PayoffPair smoothed_delta_vega_pair(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                                    const IncrementSet& inc, ParamSelector theta, bool differentiate) {
    const Legs legs = build_legs(model, grid, inc, theta);
    PayoffPair out;
    switch (spec.family) {
        case PayoffFamily::european:
        case PayoffFamily::digital: {
            const Dual f = gaussian_payoff(spec, final_step_fine(model, legs.fine, grid, theta), out.degenerate);
            out.fine = spec.discount * (differentiate ? f.d : f.v);
            if (legs.coarse) {
                const Dual c = gaussian_payoff(spec, final_step_coarse(model, *legs.coarse, grid, inc, theta),
                                               out.degenerate);
                out.coarse = spec.discount * (differentiate ? c.d : c.v);
            }
            break;
        }
        case PayoffFamily::lookback:
        case PayoffFamily::barrier:
            out = path_dependent_pair(model, spec, grid, inc, theta, legs.fine, legs.coarse ? &*legs.coarse : nullptr,
                                      differentiate);
            break;
        case PayoffFamily::asian: throw std::invalid_argument("asian payoffs have no smoothed sensitivity form");
    }
    out.cost_units = coupled_cost(grid);
    return out;
}

PayoffPair split_pathwise_pair(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                               const IncrementSet& inc, ParamSelector theta, int s, bool differentiate) {
    if (s < 1) throw std::invalid_argument("split count must be at least 1");
    if (spec.family != PayoffFamily::european && !(spec.family == PayoffFamily::digital && !differentiate)) {
        throw std::invalid_argument("split pathwise supports european payoffs (and digital values)");
    }
    const Legs legs = build_legs(model, grid, inc, theta);
    CounterStream inner(inc.key.with_purpose(StreamPurpose::inner));
    const double root = std::sqrt(grid.dt);
    const std::size_t lf = grid.steps - 1;
    const double xf = legs.fine.path.values[lf], tf = legs.fine.tangent[lf];
    double xc = 0.0, tc = 0.0, half = 0.0;
    if (legs.coarse) {
        const std::size_t lc = legs.coarse->path.steps() - 1;
        xc = legs.coarse->path.values[lc];
        tc = legs.coarse->tangent[lc];
        half = inc.fine[grid.steps - 2];
    }
    double fine_sum = 0.0, coarse_sum = 0.0;
    for (int i = 0; i < s; ++i) {
        const double w = inner.normal() * root;
        const auto f = tangent_step(model, Scheme::milstein, theta, xf, tf, grid.dt, w);
        fine_sum += differentiate ? spec.terminal_slope(f.x) * f.t : terminal_payoff(spec, f.x);
        if (legs.coarse) {
            const auto c = tangent_step(model, Scheme::milstein, theta, xc, tc, 2.0 * grid.dt, half + w);
            coarse_sum += differentiate ? spec.terminal_slope(c.x) * c.t : terminal_payoff(spec, c.x);
        }
    }
    PayoffPair out;
    out.fine = spec.discount * fine_sum / s;
    out.coarse = spec.discount * coarse_sum / s;
    out.cost_units = coupled_cost(grid);
    return out;
}

int optimal_split_count(double v1, double v2, double c1, double c2) {
    if (v1 <= 0.0 || c2 <= 0.0) return 1;
    const double s = std::sqrt(v2 * c1 / (v1 * c2));
    return std::max(1, static_cast<int>(std::ceil(s - 1e-12)));
}

PayoffPair vibrato_pair(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                        const IncrementSet& inc, ParamSelector theta, int s, bool differentiate) {
    if (s < 1) throw std::invalid_argument("inner sample count must be at least 1");
    if (spec.family != PayoffFamily::european && spec.family != PayoffFamily::digital) {
        throw std::invalid_argument("vibrato supports terminal payoffs only");
    }
    const Legs legs = build_legs(model, grid, inc, theta);
    std::vector<double> z(static_cast<std::size_t>(s));
    CounterStream inner(inc.key.with_purpose(StreamPurpose::inner));
    for (auto& v : z) v = inner.normal();

    PayoffPair out;
    auto leg = [&](const VibratoComponents& c) {
        if (c.sigma == 0.0) {
            ++out.degenerate;
            if (!differentiate) return terminal_payoff(spec, c.mu);
            return spec.family == PayoffFamily::digital ? 0.0 : spec.terminal_slope(c.mu) * c.dmu;
        }
        const double centre = terminal_payoff(spec, c.mu);
        double value = 0.0, score_mu = 0.0, score_sigma = 0.0;
        for (double zi : z) {
            const double up = terminal_payoff(spec, c.mu + c.sigma * zi);
            const double down = terminal_payoff(spec, c.mu - c.sigma * zi);
            value += 0.5 * (up + down);
            score_mu += 0.5 * (up - down) * zi / c.sigma;
            score_sigma += (0.5 * (up + down) - centre) * (zi * zi - 1.0) / c.sigma;
        }
        if (!differentiate) return value / s;
        return (c.dmu * score_mu + c.dsigma * score_sigma) / s;
    };
    out.fine = spec.discount * leg(final_step_fine(model, legs.fine, grid, theta));
    if (legs.coarse) out.coarse = spec.discount * leg(final_step_coarse(model, *legs.coarse, grid, inc, theta));
    out.cost_units = coupled_cost(grid);
    return out;
}

double likelihood_ratio_sample(const ModelSpec& model, const PayoffSpec& spec, const LevelGrid& grid,
                               const IncrementSet& inc, ParamSelector theta) {
    require_scalar(model);
    const PathState path = euler_path(model, grid, inc);
    const double root = std::sqrt(grid.dt);
    double score = 0.0;
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const double x = path.values[n];
        const ScalarJet j = model.scalar_jet(x, theta.which);
        double dm = j.fp * grid.dt;
        double ds = j.gp * root;
        if (n == 0 && theta.which == Parameter::initial_state) {
            dm = 1.0 + j.fx * grid.dt;
            ds = j.gx * root;
        }
        const double sd = std::abs(j.g) * root;
        if (sd == 0.0) throw std::invalid_argument("likelihood ratio needs a nonzero diffusion");
        if (j.g < 0.0) ds = -ds;
        const double r = path.values[n + 1] - (x + j.f * grid.dt);
        score += r / (sd * sd) * dm + (r * r / (sd * sd * sd) - 1.0 / sd) * ds;
    }
    return spec.discount * terminal_payoff(spec, path.values.back()) * score;
}

GreekSampler::GreekSampler(ModelSpec model, PayoffSpec payoff, double horizon, GreekMethod method, GreekKind kind,
                           int inner_samples)
    : model_(std::move(model)), payoff_(payoff), horizon_(horizon), method_(method), kind_(kind),
      inner_(inner_samples) {
    require_scalar(model_);
    validate_payoff(payoff_, model_);
    if (inner_ < 1) throw std::invalid_argument("inner sample count must be at least 1");
    if (method_ != GreekMethod::smoothed && payoff_.family != PayoffFamily::european &&
        payoff_.family != PayoffFamily::digital) {
        throw std::invalid_argument(to_string(method_) + " supports european and digital payoffs only");
    }
    if (method_ == GreekMethod::smoothed && payoff_.family == PayoffFamily::asian) {
        throw std::invalid_argument("asian payoffs have no smoothed sensitivity form");
    }
    if (method_ == GreekMethod::split && payoff_.family == PayoffFamily::digital && kind_ != GreekKind::value) {
        throw std::invalid_argument("split pathwise cannot differentiate a digital payoff");
    }
}

SampleResult GreekSampler::sample(const LevelGrid& grid, const StreamKey& key, SampleMode mode) const {
    const IncrementSet inc = sample_increments(key, grid, model_);
    const ParamSelector theta = selector_for(kind_);
    const bool differentiate = kind_ != GreekKind::value;
    PayoffPair pair;
    switch (method_) {
        case GreekMethod::smoothed:
            pair = smoothed_delta_vega_pair(model_, payoff_, grid, inc, theta, differentiate);
            break;
        case GreekMethod::split: pair = split_pathwise_pair(model_, payoff_, grid, inc, theta, inner_, differentiate); break;
        case GreekMethod::vibrato: pair = vibrato_pair(model_, payoff_, grid, inc, theta, inner_, differentiate); break;
    }
    SampleResult out;
    out.fine = pair.fine;
    out.coarse = mode == SampleMode::fine_only ? 0.0 : pair.coarse;
    out.cost = mode == SampleMode::fine_only ? static_cast<double>(grid.steps) : pair.cost_units;
    out.degenerate = pair.degenerate;
    return out;
}

}  // namespace mlmc
