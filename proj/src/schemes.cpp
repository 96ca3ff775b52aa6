#include "mlmc/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mlmc {

namespace {

void guard_finite(std::span<const double> x, std::size_t step) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw NonFiniteState(step, "non-finite state at step " + std::to_string(step));
        }
    }
}

PathState integrate_scalar(const ModelSpec& model, Scheme scheme, double horizon, double dt,
                           std::span<const double> dw) {
    const std::size_t n = dw.size();
    PathState path;
    path.dim = 1;
    path.times.resize(n + 1);
    path.values.resize(n + 1);
    path.values[0] = model.x0[0];
    path.times[0] = 0.0;
    double x = model.x0[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double w = dw[i];
        double next = x + model.drift1(x) * dt + model.diffusion1(x) * w;
        if (scheme == Scheme::milstein) next += model.tensor1(x) * (w * w - dt);
        x = next;
        if (!std::isfinite(x)) throw NonFiniteState(i + 1, "non-finite state at step " + std::to_string(i + 1));
        path.values[i + 1] = x;
        path.times[i + 1] = (i + 1 == n) ? horizon : static_cast<double>(i + 1) * dt;
    }
    return path;
}

}  // namespace

PathState integrate(const ModelSpec& model, Scheme scheme, double horizon, double dt,
                    std::span<const double> increments) {
    if (model.is_scalar()) return integrate_scalar(model, scheme, horizon, dt, increments);

    const auto d = static_cast<std::size_t>(model.dim);
    const auto m = static_cast<std::size_t>(model.drivers);
    if (increments.size() % m != 0) throw std::invalid_argument("increment count is not a multiple of the driver count");
    const std::size_t n = increments.size() / m;

    PathState path;
    path.dim = model.dim;
    path.times.resize(n + 1);
    path.values.resize((n + 1) * d);
    std::copy(model.x0.begin(), model.x0.end(), path.values.begin());
    std::vector<double> f(d), g(d * m), h(scheme == Scheme::milstein ? d * m * m : 0);
    for (std::size_t step = 0; step < n; ++step) {
        std::span<const double> x(path.values.data() + step * d, d);
        std::span<double> next(path.values.data() + (step + 1) * d, d);
        std::span<const double> w(increments.data() + step * m, m);
        model.drift(x, f);
        model.diffusion(x, g);
        if (scheme == Scheme::milstein) model.milstein_tensor(x, h);
        for (std::size_t i = 0; i < d; ++i) {
            double v = x[i] + f[i] * dt;
            for (std::size_t j = 0; j < m; ++j) v += g[i * m + j] * w[j];
            if (scheme == Scheme::milstein) {
                for (std::size_t j = 0; j < m; ++j) {
                    for (std::size_t k = 0; k < m; ++k) {
                        const double hijk = h[(i * m + j) * m + k];
                        if (hijk != 0.0) v += hijk * (w[j] * w[k] - model.correlation[j * m + k] * dt);
                    }
                }
            }
            next[i] = v;
        }
        guard_finite(next, step + 1);
        path.times[step + 1] = (step + 1 == n) ? horizon : static_cast<double>(step + 1) * dt;
    }
    return path;
}

PathState euler_path(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc) {
    if (inc.fine_steps() != grid.steps) throw std::invalid_argument("increments do not match the grid resolution");
    return integrate(model, Scheme::euler, grid.horizon, grid.dt, inc.fine);
}

PathState milstein_path(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc) {
    if (inc.fine_steps() != grid.steps) throw std::invalid_argument("increments do not match the grid resolution");
    return integrate(model, Scheme::milstein, grid.horizon, grid.dt, inc.fine);
}

PathState coarse_path(const ModelSpec& model, Scheme scheme, const LevelGrid& grid, const IncrementSet& inc) {
    if (grid.level < 1) throw std::invalid_argument("level 0 has no coarse path");
    if (inc.coarse_steps() * 2 != grid.steps) throw std::invalid_argument("coarse increments do not match the grid");
    return integrate(model, scheme, grid.horizon, 2.0 * grid.dt, inc.coarse);
}

CoupledPaths coupled_paths(const ModelSpec& model, Scheme scheme, const LevelGrid& grid, const IncrementSet& inc) {
    CoupledPaths out;
    out.fine = scheme == Scheme::euler ? euler_path(model, grid, inc) : milstein_path(model, grid, inc);
    if (grid.level >= 1) out.coarse = coarse_path(model, scheme, grid, inc);
    return out;
}

CoupledPaths antithetic_triple(const ModelSpec& model, const LevelGrid& grid, const IncrementSet& inc) {
    if (grid.level < 1) throw std::invalid_argument("antithetic triple needs level >= 1");
    CoupledPaths out = coupled_paths(model, Scheme::milstein, grid, inc);
    out.antithetic = milstein_path(model, grid, antithetic_swap(inc));
    return out;
}

bool is_commutative(const ModelSpec& model, std::span<const std::vector<double>> probe_points, double tol) {
    if (probe_points.empty()) throw std::invalid_argument("is_commutative needs at least one probe point");
    const auto d = static_cast<std::size_t>(model.dim);
    const auto m = static_cast<std::size_t>(model.drivers);
    std::vector<double> h(d * m * m);
    double worst = 0.0;
    for (const auto& x : probe_points) {
        model.milstein_tensor(x, h);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                for (std::size_t k = j + 1; k < m; ++k) {
                    worst = std::max(worst, std::abs(h[(i * m + j) * m + k] - h[(i * m + k) * m + j]));
                }
            }
        }
    }
    return worst <= tol;
}

std::vector<double> brownian_bridge_midpoint(const PathState& coarse_path, const ModelSpec& model,
                                             const IncrementSet& inc, std::size_t n) {
    if (n >= coarse_path.steps()) throw std::out_of_range("coarse step index out of range");
    const auto d = static_cast<std::size_t>(model.dim);
    const auto m = static_cast<std::size_t>(model.drivers);
    if (inc.fine_steps() < 2 * n + 1) throw std::invalid_argument("fine increments unavailable for the midpoint");
    auto xn = coarse_path.at(n);
    auto xn1 = coarse_path.at(n + 1);
    std::vector<double> g(d * m);
    model.diffusion(xn, g);
    auto first_half = inc.fine_at(2 * n);
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        double v = xn[i] + 0.5 * (xn1[i] - xn[i]);
        for (std::size_t j = 0; j < m; ++j) {
            const double whole = inc.coarse.empty() ? first_half[j] + inc.fine_at(2 * n + 1)[j] : inc.coarse_at(n)[j];
            v += g[i * m + j] * (first_half[j] - 0.5 * whole);
        }
        out[i] = v;
    }
    return out;
}

void attach_midpoints(CoupledPaths& paths, const ModelSpec& model, const IncrementSet& inc) {
    if (!paths.coarse) return;
    const std::size_t nc = paths.coarse->steps();
    const auto d = static_cast<std::size_t>(model.dim);
    paths.midpoints.resize(nc * d);
    if (model.is_scalar()) {
        const auto& xc = paths.coarse->values;
        for (std::size_t n = 0; n < nc; ++n) {
            const double g = model.diffusion1(xc[n]);
            paths.midpoints[n] = 0.5 * (xc[n] + xc[n + 1]) + g * (inc.fine[2 * n] - 0.5 * inc.coarse[n]);
        }
        return;
    }
    for (std::size_t n = 0; n < nc; ++n) {
        auto mid = brownian_bridge_midpoint(*paths.coarse, model, inc, n);
        std::copy(mid.begin(), mid.end(), paths.midpoints.begin() + static_cast<std::ptrdiff_t>(n * d));
    }
}

std::vector<double> piecewise_linear_interpolant(const PathState& path, double t) {
    if (path.times.empty()) throw std::invalid_argument("empty path");
    const double t_end = path.times.back();
    if (t < 0.0 || t > t_end) throw std::out_of_range("time outside [0, T]");
    const auto d = static_cast<std::size_t>(path.dim);
    auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
    std::size_t n = it == path.times.begin() ? 0 : static_cast<std::size_t>(it - path.times.begin()) - 1;
    if (n >= path.steps()) {
        auto last = path.at(path.steps());
        return {last.begin(), last.end()};
    }
    const double lambda = (t - path.times[n]) / (path.times[n + 1] - path.times[n]);
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double a = path.value(n, static_cast<int>(i));
        const double b = path.value(n + 1, static_cast<int>(i));
        out[i] = a + lambda * (b - a);
    }
    return out;
}

}  // namespace mlmc
