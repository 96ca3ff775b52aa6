#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mlmc/analytic.hpp"
#include "mlmc/cli.hpp"
#include "mlmc/driver.hpp"
#include "mlmc/greeks.hpp"
#include "mlmc/jumps.hpp"

using namespace mlmc;

namespace {

constexpr long long kRateSamples = 200000;
constexpr int kRateTop = 7;
constexpr int kFitFrom = 2;

struct Check {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [miss]");
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ModelSpec gbm() { return make_model("gbm", {{"r", 0.05}, {"sigma", 0.2}, {"x0", 1.0}}); }

ModelSpec merton(double lambda) {
    return make_model("merton",
                      {{"r", 0.05}, {"sigma", 0.2}, {"lambda", lambda}, {"jump_mu", -0.1}, {"jump_sigma", 0.2}, {"x0", 1}});
}

PayoffSpec payoff(PayoffFamily family, SchemeMode mode, double barrier = 0.0) {
    PayoffSpec p;
    p.family = family;
    p.mode = mode;
    p.barrier = barrier;
    p.discount = std::exp(-0.05);
    return p;
}

RateFit rates_of(const LevelSampler& sampler, long long samples = kRateSamples, std::uint64_t seed = 1) {
    return fit_rates(run_fixed_levels(sampler, kRateTop, samples, seed), kFitFrom);
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string range(const char* name, double v, double lo, double hi) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s=%.3f in [%.2f, %.2f]", name, v, lo, hi);
    return buf;
}

Check criterion_1() {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    const double exact = black_scholes_call({1.0, 1.0, 0.05, 0.2, 1.0});
    const PricingSampler sampler(gbm(), payoff(PayoffFamily::european, SchemeMode::milstein_smoothed), 1.0);
    for (double eps : {0.02, 0.01, 0.005}) {
        MlmcConfig cfg;
        cfg.eps = eps;
        const MlmcResult r = run_mlmc(sampler, cfg);
        c.require(std::abs(r.estimate - exact) < 3 * eps,
                  "eps=" + fmt("%g", eps) + " |err|=" + fmt("%.2e", std::abs(r.estimate - exact)));
    }
    const RateFit fit = rates_of(sampler);
    c.require(within(fit.beta, 1.7, 2.3), range("beta", fit.beta, 1.7, 2.3));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.require(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s");
    return c;
}

Check criterion_2() {
    Check c;
    const PricingSampler sampler(gbm(), payoff(PayoffFamily::european, SchemeMode::euler), 1.0);
    const RateFit fit = rates_of(sampler);
    c.require(within(fit.beta, 0.8, 1.2), range("beta", fit.beta, 0.8, 1.2));
    c.require(within(fit.alpha, 0.8, 1.2), range("alpha", fit.alpha, 0.8, 1.2));
    return c;
}

Check criterion_3() {
    Check c;
    struct Case {
        const char* name;
        PayoffSpec spec;
        double lo, hi;
    };
    const std::vector<Case> cases{
        {"euler digital", payoff(PayoffFamily::digital, SchemeMode::euler), 0.35, 0.75},
        {"digital", payoff(PayoffFamily::digital, SchemeMode::milstein_smoothed), 1.2, 1.8},
        {"barrier", payoff(PayoffFamily::barrier, SchemeMode::milstein_smoothed, 0.85), 1.2, 1.8},
        {"lookback", payoff(PayoffFamily::lookback, SchemeMode::milstein_smoothed), 1.7, 2.3},
        {"asian", payoff(PayoffFamily::asian, SchemeMode::milstein_smoothed), 1.7, 2.3},
    };
    for (const Case& k : cases) {
        const PricingSampler sampler(gbm(), k.spec, 1.0);
        const RateFit fit = rates_of(sampler);
        c.require(within(fit.beta, k.lo, k.hi), range((std::string(k.name) + " beta").c_str(), fit.beta, k.lo, k.hi));
    }
    return c;
}

Check criterion_4() {
    Check c;
    const ModelSpec cc = make_model("clark_cameron", {{"x1_0", 1}, {"x2_0", 1}});

    bool exact = true;
    for (int level = 1; level <= 8; ++level) {
        const LevelGrid grid = LevelGrid::make(level, 1.0);
        for (std::uint64_t k = 0; k < 2000; ++k) {
            const IncrementSet inc = sample_increments({41, std::uint32_t(level), k}, grid, cc);
            const CoupledPaths p = antithetic_triple(cc, grid, inc);
            for (std::size_t n = 0; n <= p.coarse->steps(); ++n) {
                const double avg = 0.5 * (p.fine.value(2 * n, 1) + p.antithetic->value(2 * n, 1));
                exact = exact && std::abs(avg - p.coarse->value(n, 1)) <= 1e-13 * (1.0 + std::abs(avg));
            }
        }
    }
    c.require(exact, "(a) antithetic average equals coarse x2 at every coarse node");

    for (int level : {3, 4}) {
        const LevelGrid grid = LevelGrid::make(level, 1.0);
        const double dtc = 2.0 * grid.dt;
        const double target = 0.75 * 1.0 * (1.0 + dtc) * dtc * dtc;
        const long long n = 1000000;
        double s1 = 0, s2 = 0;
        for (long long k = 0; k < n; ++k) {
            const IncrementSet inc = sample_increments({42, std::uint32_t(level), std::uint64_t(k)}, grid, cc);
            const CoupledPaths p = antithetic_triple(cc, grid, inc);
            const double d = p.fine.terminal(1) - p.antithetic->terminal(1);
            const double q = d * d * d * d;
            s1 += q;
            s2 += q * q;
        }
        const double mean = s1 / double(n);
        const double se = std::sqrt((s2 / double(n) - mean * mean) / double(n - 1));
        char buf[160];
        std::snprintf(buf, sizeof buf, "(b) dt=1/%d E[d^4]=%.6f vs %.6f (%.1f se)", int(std::lround(1 / dtc)), mean, target,
                      std::abs(mean - target) / se);
        c.require(std::abs(mean - target) < 3 * se, buf);
    }

    PayoffSpec call = payoff(PayoffFamily::european, SchemeMode::antithetic);
    call.component = 1;
    call.discount = 1.0;
    const PricingSampler sampler(cc, call, 1.0);
    const RateFit fit = rates_of(sampler);
    c.require(within(fit.beta, 1.3, 1.7), range("(c) beta", fit.beta, 1.3, 1.7));
    return c;
}

Check criterion_5() {
    Check c;
    const PricingSampler sampler(gbm(), payoff(PayoffFamily::european, SchemeMode::milstein_smoothed), 1.0);
    std::vector<double> ml, sd, le;
    for (double eps : {0.02, 0.01, 0.005}) {
        MlmcConfig cfg;
        cfg.eps = eps;
        ml.push_back(eps * eps * run_mlmc(sampler, cfg).total_cost);
        sd.push_back(eps * eps * run_standard_mc(sampler, cfg).total_cost);
        le.push_back(std::log(eps));
    }
    const double spread = *std::max_element(ml.begin(), ml.end()) / *std::min_element(ml.begin(), ml.end());
    c.require(spread < 3.0, "MLMC eps^2 C spread " + fmt("%.2f", spread) + "x");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        mx += le[i] / 3;
        my += std::log(sd[i]) / 3;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        sxy += (le[i] - mx) * (std::log(sd[i]) - my);
        sxx += (le[i] - mx) * (le[i] - mx);
    }
    const double slope = sxy / sxx;
    c.require(within(slope, -1.3, -0.7), range("standard MC slope", slope, -1.3, -0.7));
    return c;
}

Check criterion_6() {
    Check c;
    const double delta = black_scholes_call_delta({1.0, 1.0, 0.05, 0.2, 1.0});
    const PayoffSpec call = payoff(PayoffFamily::european, SchemeMode::milstein_smoothed);
    for (GreekMethod method : {GreekMethod::smoothed, GreekMethod::vibrato}) {
        const GreekSampler sampler(gbm(), call, 1.0, method, GreekKind::delta);
        MlmcConfig cfg;
        cfg.eps = 0.01;
        const MlmcResult r = run_mlmc(sampler, cfg);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s delta %.5f (%.1f sigma)", to_string(method).c_str(), r.estimate,
                      std::abs(r.estimate - delta) / r.std_error);
        c.require(std::abs(r.estimate - delta) < 3 * r.std_error, buf);
    }
    const std::vector<std::pair<GreekKind, double>> table{
        {GreekKind::value, 2.0}, {GreekKind::delta, 1.5}, {GreekKind::vega, 2.0}};
    for (const auto& [kind, beta] : table) {
        const GreekSampler sampler(gbm(), call, 1.0, GreekMethod::vibrato, kind, 10);
        const RateFit fit = rates_of(sampler);
        c.require(std::abs(fit.beta - beta) <= 0.4,
                  range(("vibrato " + to_string(kind) + " beta").c_str(), fit.beta, beta - 0.4, beta + 0.4));
    }
    const GreekSampler split10(gbm(), call, 1.0, GreekMethod::split, GreekKind::delta, 10);
    const GreekSampler split500(gbm(), call, 1.0, GreekMethod::split, GreekKind::delta, 500);
    const double b10 = rates_of(split10).beta;
    const double b500 = rates_of(split500, 50000).beta;
    char buf[128];
    std::snprintf(buf, sizeof buf, "split delta beta %.3f (s=10) -> %.3f (s=500)", b10, b500);
    c.require(b500 > b10, buf);
    return c;
}

Check criterion_7() {
    Check c;
    const double r = 0.05, sigma = 0.2, x0 = 1.0, h = 1e-6;
    const ModelSpec m = gbm();
    const LevelGrid grid = LevelGrid::make(6, 1.0);
    auto model_at = [&](Parameter p, double shift) {
        return make_model("gbm", {{"r", r + (p == Parameter::drift ? shift : 0.0)},
                                  {"sigma", sigma + (p == Parameter::volatility ? shift : 0.0)},
                                  {"x0", x0 + (p == Parameter::initial_state ? shift : 0.0)}});
    };
    for (Parameter p : {Parameter::initial_state, Parameter::volatility, Parameter::drift}) {
        const ModelSpec up = model_at(p, h), down = model_at(p, -h);
        double worst = 0;
        for (std::uint64_t k = 0; k < 1000; ++k) {
            const IncrementSet inc = sample_increments({71, 6, k}, grid, m);
            const SensitivityState s = pathwise_tangent_path(m, grid, inc, ParamSelector{p});
            const double fd = (milstein_path(up, grid, inc).terminal() - milstein_path(down, grid, inc).terminal()) / (2 * h);
            worst = std::max(worst, std::abs(s.tangent.back() - fd) / std::max(std::abs(fd), 1e-8));
        }
        const char* name = p == Parameter::initial_state ? "x0" : p == Parameter::volatility ? "sigma" : "r";
        c.require(worst <= 1e-4, std::string(name) + " max rel err " + fmt("%.1e", worst));
    }
    return c;
}

Check criterion_8() {
    Check c;
    const ModelSpec m = merton(1.0);
    MertonInputs in;
    in.diffusion = {1.0, 1.0, 0.05, 0.2, 1.0};
    in.jump_rate = 1.0;
    in.jump_mu = -0.1;
    in.jump_sigma = 0.2;
    const double exact = merton_call(in).value;
    const JumpSampler sampler(m, merton_jumps(m), payoff(PayoffFamily::european, SchemeMode::milstein_smoothed), 1.0);
    for (double eps : {0.01, 0.005}) {
        MlmcConfig cfg;
        cfg.eps = eps;
        const MlmcResult r = run_mlmc(sampler, cfg);
        c.require(std::abs(r.estimate - exact) < 3 * eps, "merton eps=" + fmt("%g", eps) + " |err|=" +
                                                              fmt("%.2e", std::abs(r.estimate - exact)));
    }
    const ModelSpec md = merton(2.0);
    const JumpSpec decaying = decaying_intensity_jumps(md, 2.0);
    const PayoffSpec call = payoff(PayoffFamily::european, SchemeMode::milstein_smoothed);
    const double direct = rates_of(JumpSampler(md, decaying, call, 1.0, ThinningMode::direct)).beta;
    const double changed = rates_of(JumpSampler(md, decaying, call, 1.0, ThinningMode::measure_change)).beta;
    char buf[128];
    std::snprintf(buf, sizeof buf, "thinning beta %.3f direct -> %.3f measure change", direct, changed);
    c.require(changed - direct >= 0.5, buf);
    return c;
}

Check criterion_9() {
    Check c;
    struct Case {
        std::string name;
        std::function<std::unique_ptr<LevelSampler>()> make;
    };
    const ModelSpec mj = merton(1.0);
    auto pricing = [](PayoffSpec p) { return [p] { return std::unique_ptr<LevelSampler>(new PricingSampler(gbm(), p, 1.0)); }; };
    auto jumping = [&mj](PayoffSpec p) {
        return [p, &mj] { return std::unique_ptr<LevelSampler>(new JumpSampler(mj, merton_jumps(mj), p, 1.0)); };
    };
    const auto ms = SchemeMode::milstein_smoothed;
    const std::vector<Case> cases{
        {"european", pricing(payoff(PayoffFamily::european, ms))},
        {"asian", pricing(payoff(PayoffFamily::asian, ms))},
        {"lookback", pricing(payoff(PayoffFamily::lookback, ms))},
        {"barrier", pricing(payoff(PayoffFamily::barrier, ms, 0.85))},
        {"digital", pricing(payoff(PayoffFamily::digital, ms))},
        {"antithetic european", pricing(payoff(PayoffFamily::european, SchemeMode::antithetic))},
        {"jump european", jumping(payoff(PayoffFamily::european, ms))},
        {"jump lookback", jumping(payoff(PayoffFamily::lookback, ms))},
        {"jump barrier", jumping(payoff(PayoffFamily::barrier, ms, 0.85))},
        {"jump digital", jumping(payoff(PayoffFamily::digital, ms))},
    };
    const long long n = 1000000;
    const LevelGrid at = LevelGrid::make(3, 1.0), above = LevelGrid::make(4, 1.0);
    for (const Case& k : cases) {
        const auto sampler = k.make();
        double f1 = 0, f2 = 0, c1 = 0, c2 = 0;
        for (long long i = 0; i < n; ++i) {
            const double f = sampler->sample(at, {1, 3, std::uint64_t(i)}, SampleMode::fine_only).fine;
            const double g = sampler->sample(above, {1, 4, std::uint64_t(i)}, SampleMode::coupled).coarse;
            f1 += f;
            f2 += f * f;
            c1 += g;
            c2 += g * g;
        }
        const double mf = f1 / double(n), mc = c1 / double(n);
        const double se2 = (f2 / double(n) - mf * mf + c2 / double(n) - mc * mc) / double(n - 1);
        const double z = std::abs(mf - mc) / std::sqrt(se2);
        c.require(z < 3.0, k.name + " " + fmt("%.2f", z) + " se");
    }
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Check criterion_10() {
    Check c;
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "mlmc_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "call.cfg";
    std::ofstream(cfg) << "model = gbm\nmodel.r = 0.05\nmodel.sigma = 0.2\nmodel.x0 = 1\npayoff = european\n"
                          "scheme = milstein\neps = 0.02, 0.01, 0.005\nseed = 2024\nrates.levels = 5\n"
                          "rates.samples = 20000\n";
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
        {"run", {"levels.csv", "summary.csv"}},
        {"compare", {"levels.csv", "summary.csv", "compare.csv"}},
        {"rates", {"levels.csv", "rates.csv"}},
    };
    for (const auto& [command, files] : commands) {
        std::ostringstream sink;
        const fs::path one = root / (command + "_1"), eight = root / (command + "_8");
        const int a = run_cli({command, "--config", cfg.string(), "--out", one.string(), "--threads", "1"}, sink, sink);
        const int b = run_cli({command, "--config", cfg.string(), "--out", eight.string(), "--threads", "8"}, sink, sink);
        bool same = a == 0 && b == 0;
        for (const auto& f : files) same = same && !slurp(one / f).empty() && slurp(one / f) == slurp(eight / f);
        c.require(same, command + " identical at 1 and 8 threads");
    }
    fs::remove_all(root);
    return c;
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
    const std::vector<std::function<Check()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                       criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
    int failed = 0;
    std::vector<bool> selected(criteria.size(), argc == 1);
    for (int a = 1; a < argc; ++a) {
        const int k = std::atoi(argv[a]);
        if (k >= 1 && k <= int(criteria.size())) selected[std::size_t(k - 1)] = true;
    }
    int ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Check c;
        try {
            c = criteria[i]();
        } catch (const std::exception& e) {
            c.pass = false;
            c.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %zu: %s (%.1f s) %s\n", i + 1, c.pass ? "PASS" : "FAIL", secs, c.detail.c_str());
        std::fflush(stdout);
        failed += c.pass ? 0 : 1;
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
