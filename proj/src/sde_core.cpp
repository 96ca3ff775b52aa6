#include "mlmc/sde_core.hpp"

#include <algorithm>
#include <cmath>

namespace mlmc {

namespace {

double require(const std::map<std::string, double>& params, const std::string& model,
               std::initializer_list<const char*> names) {
    for (const char* name : names) {
        if (auto it = params.find(name); it != params.end()) {
            if (!std::isfinite(it->second)) {
                throw ModelError(model + ": parameter '" + name + "' is not finite");
            }
            return it->second;
        }
    }
    throw ModelError(model + ": missing parameter '" + std::string(*names.begin()) + "'");
}

double optional(const std::map<std::string, double>& params, const char* name, double fallback) {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

void check_known(const std::map<std::string, double>& params, const std::string& model,
                 std::initializer_list<const char*> known) {
    for (const auto& [name, value] : params) {
        (void)value;
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return name == k; })) {
            throw ModelError(model + ": unknown parameter '" + name + "'");
        }
    }
}

ModelSpec scalar_model(std::string label, double x0) {
    ModelSpec m;
    m.label = std::move(label);
    m.dim = 1;
    m.drivers = 1;
    m.x0 = {x0};
    m.correlation = {1.0};
    return m;
}

// Geometric Brownian motion with optional additive drift-only form (vol = 0).
ModelSpec geometric(std::string label, double x0, double mu, double vol) {
    ModelSpec m = scalar_model(std::move(label), x0);
    m.drift = [mu](std::span<const double> x, std::span<double> out) { out[0] = mu * x[0]; };
    m.diffusion = [vol](std::span<const double> x, std::span<double> out) { out[0] = vol * x[0]; };
    m.milstein_tensor = [vol](std::span<const double> x, std::span<double> out) {
        out[0] = 0.5 * vol * vol * x[0];
    };
    m.scalar_jet = [mu, vol](double x, Parameter p) {
        ScalarJet j;
        j.f = mu * x;
        j.fx = mu;
        j.g = vol * x;
        j.gx = vol;
        j.h = 0.5 * vol * vol * x;
        j.hx = 0.5 * vol * vol;
        if (p == Parameter::drift) j.fp = x;
        if (p == Parameter::volatility) {
            j.gp = x;
            j.hp = vol * x;
        }
        return j;
    };
    return m;
}

}  // namespace

double ModelSpec::drift1(double x) const {
    double out = 0;
    drift(std::span<const double>(&x, 1), std::span<double>(&out, 1));
    return out;
}

double ModelSpec::diffusion1(double x) const {
    double out = 0;
    diffusion(std::span<const double>(&x, 1), std::span<double>(&out, 1));
    return out;
}

double ModelSpec::tensor1(double x) const {
    double out = 0;
    milstein_tensor(std::span<const double>(&x, 1), std::span<double>(&out, 1));
    return out;
}

void finalize_correlation(ModelSpec& model) {
    const auto m = static_cast<std::size_t>(model.drivers);
    const auto& c = model.correlation;
    if (c.size() != m * m) throw ModelError(model.label + ": correlation matrix has wrong size");
    constexpr double tol = 1e-12;
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(c[i * m + i] - 1.0) > tol) throw ModelError(model.label + ": correlation diagonal must be 1");
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(c[i * m + j] - c[j * m + i]) > tol) {
                throw ModelError(model.label + ": correlation matrix is not symmetric");
            }
        }
    }
    // Cholesky tolerant of zero pivots (semi-definite input).
    std::vector<double> l(m * m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double diag = c[j * m + j];
        for (std::size_t k = 0; k < j; ++k) diag -= l[j * m + k] * l[j * m + k];
        if (diag < -1e-10) throw ModelError(model.label + ": correlation matrix is not positive semi-definite");
        const double pivot = std::sqrt(std::max(diag, 0.0));
        l[j * m + j] = pivot;
        for (std::size_t i = j + 1; i < m; ++i) {
            double s = c[i * m + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * m + k] * l[j * m + k];
            if (pivot > 1e-12) {
                l[i * m + j] = s / pivot;
            } else if (std::abs(s) > 1e-10) {
                throw ModelError(model.label + ": correlation matrix is not positive semi-definite");
            }
        }
    }
    model.correlation_chol = std::move(l);
}

ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params) {
    ModelSpec m;
    if (name == "gbm") {
        check_known(params, name, {"alpha", "r", "beta", "sigma", "x0"});
        const double mu = require(params, name, {"alpha", "r"});
        const double vol = require(params, name, {"beta", "sigma"});
        const double x0 = optional(params, "x0", 1.0);
        if (vol <= 0) throw ModelError("gbm: volatility must be positive");
        if (x0 <= 0) throw ModelError("gbm: x0 must be positive");
        m = geometric("gbm", x0, mu, vol);
    } else if (name == "deterministic") {
        check_known(params, name, {"alpha", "r", "x0"});
        const double mu = require(params, name, {"alpha", "r"});
        m = geometric("deterministic", optional(params, "x0", 1.0), mu, 0.0);
    } else if (name == "merton") {
        check_known(params, name, {"r", "sigma", "lambda", "jump_mu", "jump_sigma", "x0"});
        const double r = require(params, name, {"r"});
        const double vol = require(params, name, {"sigma"});
        const double lambda = require(params, name, {"lambda"});
        const double jump_mu = require(params, name, {"jump_mu"});
        const double jump_sigma = require(params, name, {"jump_sigma"});
        const double x0 = optional(params, "x0", 1.0);
        if (vol <= 0) throw ModelError("merton: volatility must be positive");
        if (lambda < 0) throw ModelError("merton: jump intensity must be nonnegative");
        if (jump_sigma < 0) throw ModelError("merton: jump_sigma must be nonnegative");
        if (x0 <= 0) throw ModelError("merton: x0 must be positive");
        // Risk-neutral compensation of the compound Poisson term.
        const double kappa = std::exp(jump_mu + 0.5 * jump_sigma * jump_sigma) - 1.0;
        m = geometric("merton", x0, r - lambda * kappa, vol);
    } else if (name == "heston") {
        check_known(params, name, {"r", "kappa", "theta", "sigma", "rho", "s0", "v0"});
        const double r = require(params, name, {"r"});
        const double kappa = require(params, name, {"kappa"});
        const double theta = require(params, name, {"theta"});
        const double xi = require(params, name, {"sigma"});
        const double rho = require(params, name, {"rho"});
        const double s0 = require(params, name, {"s0"});
        const double v0 = require(params, name, {"v0"});
        if (kappa <= 0 || theta <= 0 || xi <= 0) throw ModelError("heston: kappa, theta, sigma must be positive");
        if (std::abs(rho) > 1) throw ModelError("heston: |rho| must not exceed 1");
        if (s0 <= 0 || v0 < 0) throw ModelError("heston: need s0 > 0 and v0 >= 0");
        m.label = "heston";
        m.dim = 2;
        m.drivers = 2;
        m.x0 = {s0, v0};
        m.correlation = {1.0, rho, rho, 1.0};
        // Full truncation: the square root is taken of max(v, 0).
        m.drift = [r, kappa, theta](std::span<const double> x, std::span<double> out) {
            out[0] = r * x[0];
            out[1] = kappa * (theta - std::max(x[1], 0.0));
        };
        m.diffusion = [xi](std::span<const double> x, std::span<double> out) {
            const double sv = std::sqrt(std::max(x[1], 0.0));
            out[0] = x[0] * sv;
            out[1] = 0.0;
            out[2] = 0.0;
            out[3] = xi * sv;
        };
        m.milstein_tensor = [xi](std::span<const double> x, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            const double v = std::max(x[1], 0.0);
            out[0] = 0.5 * x[0] * v;  // h_111
            if (x[1] > 0) {
                out[1] = 0.25 * xi * x[0];  // h_112
                out[7] = 0.25 * xi * xi;    // h_222
            }
        };
    } else if (name == "clark_cameron") {
        check_known(params, name, {"x1_0", "x2_0"});
        m.label = "clark_cameron";
        m.dim = 2;
        m.drivers = 2;
        m.x0 = {optional(params, "x1_0", 0.0), optional(params, "x2_0", 0.0)};
        m.correlation = {1.0, 0.0, 0.0, 1.0};
        m.drift = [](std::span<const double>, std::span<double> out) {
            out[0] = 0.0;
            out[1] = 0.0;
        };
        m.diffusion = [](std::span<const double> x, std::span<double> out) {
            out[0] = 1.0;
            out[1] = 0.0;
            out[2] = 0.0;
            out[3] = x[0];
        };
        m.milstein_tensor = [](std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            out[(1 * 2 + 1) * 2 + 0] = 0.5;  // h_221 = 1/2 g_11 d g_22 / d x_1
        };
    } else {
        throw ModelError("unknown model '" + name + "'");
    }
    m.params = params;
    finalize_correlation(m);
    return m;
}

LevelGrid LevelGrid::make(int level, double horizon) {
    if (level < 0) throw std::invalid_argument("level must be nonnegative");
    if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
    LevelGrid g;
    g.level = level;
    g.horizon = horizon;
    g.dt = horizon;
    for (int i = 0; i < level; ++i) g.dt *= 0.5;
    g.steps = std::size_t{1} << level;
    return g;
}

void form_coarse_increments(IncrementSet& inc) {
    const std::size_t n = inc.fine_steps();
    if (n % 2 != 0) throw std::invalid_argument("coarse increments need an even number of fine steps");
    const auto m = static_cast<std::size_t>(inc.drivers);
    inc.coarse.assign(n / 2 * m, 0.0);
    for (std::size_t c = 0; c < n / 2; ++c) {
        for (std::size_t j = 0; j < m; ++j) {
            inc.coarse[c * m + j] = inc.fine[2 * c * m + j] + inc.fine[(2 * c + 1) * m + j];
        }
    }
}

IncrementSet sample_increments(const StreamKey& key, const LevelGrid& grid, const ModelSpec& model) {
    IncrementSet inc;
    inc.key = key;
    inc.drivers = model.drivers;
    const auto m = static_cast<std::size_t>(model.drivers);
    const std::size_t n = grid.steps;
    const double sqrt_dt = std::sqrt(grid.dt);
    CounterStream stream(key.with_purpose(StreamPurpose::brownian));
    inc.fine.resize(n * m);
    if (m == 1) {
        for (std::size_t i = 0; i < n; ++i) inc.fine[i] = sqrt_dt * stream.normal();
    } else {
        std::vector<double> z(m);
        const auto& l = model.correlation_chol;
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& zj : z) zj = stream.normal();
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0;
                for (std::size_t k = 0; k <= j; ++k) s += l[j * m + k] * z[k];
                inc.fine[i * m + j] = sqrt_dt * s;
            }
        }
    }
    inc.uniforms.resize(n);
    for (auto& u : inc.uniforms) u = stream.uniform();
    if (grid.level >= 1) form_coarse_increments(inc);
    return inc;
}

IncrementSet antithetic_swap(const IncrementSet& inc) {
    const std::size_t n = inc.fine_steps();
    if (n % 2 != 0) throw std::invalid_argument("antithetic swap needs an even number of fine increments");
    IncrementSet out = inc;
    const auto m = static_cast<std::size_t>(inc.drivers);
    for (std::size_t c = 0; c < n / 2; ++c) {
        for (std::size_t j = 0; j < m; ++j) {
            std::swap(out.fine[2 * c * m + j], out.fine[(2 * c + 1) * m + j]);
        }
    }
    return out;
}

}  // namespace mlmc
