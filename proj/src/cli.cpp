#include "mlmc/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace mlmc {

const char* const kLevelsHeader = "level,N,mean_diff,var_diff,mean_fine,var_fine,cost";
const char* const kSummaryHeader = "eps,estimate,std_error,total_cost,alpha,beta,gamma";
const char* const kRatesHeader = "alpha,alpha_se,beta,beta_se,gamma,gamma_se,fit_min_level";
const char* const kCompareHeader = "eps,mlmc_estimate,mlmc_cost,mlmc_eps2_cost,std_estimate,std_cost,std_eps2_cost";

namespace {

PayoffFamily family_from(const std::string& s) {
    if (s == "european" || s == "call") return PayoffFamily::european;
    if (s == "asian") return PayoffFamily::asian;
    if (s == "lookback") return PayoffFamily::lookback;
    if (s == "barrier") return PayoffFamily::barrier;
    if (s == "digital") return PayoffFamily::digital;
    throw ConfigError("unknown payoff '" + s + "'");
}

BarrierKind barrier_from(const std::string& s) {
    if (s == "down_out") return BarrierKind::down_out;
    if (s == "up_out") return BarrierKind::up_out;
    if (s == "down_in") return BarrierKind::down_in;
    if (s == "up_in") return BarrierKind::up_in;
    throw ConfigError("unknown barrier kind '" + s + "'");
}

TerminalKind terminal_from(const std::string& s) {
    if (s == "call") return TerminalKind::call;
    if (s == "put") return TerminalKind::put;
    if (s == "forward") return TerminalKind::forward;
    throw ConfigError("unknown terminal function '" + s + "'");
}

SchemeMode scheme_from(const std::string& s) {
    if (s == "euler") return SchemeMode::euler;
    if (s == "milstein") return SchemeMode::milstein_smoothed;
    if (s == "antithetic") return SchemeMode::antithetic;
    throw ConfigError("unknown scheme '" + s + "'");
}

ThinningMode thinning_from(const std::string& s) {
    if (s == "direct") return ThinningMode::direct;
    if (s == "measure_change") return ThinningMode::measure_change;
    throw ConfigError("unknown thinning mode '" + s + "'");
}

double default_discount_rate(const std::map<std::string, double>& params) {
    for (const char* key : {"r", "alpha"}) {
        if (auto it = params.find(key); it != params.end()) return it->second;
    }
    return 0.0;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

std::string levels_text(const std::vector<LevelStats>& levels) {
    std::ostringstream os;
    os << kLevelsHeader << '\n';
    for (const auto& s : levels) {
        os << s.level << ',' << s.samples << ',' << format_real(s.mean_diff()) << ',' << format_real(s.var_diff())
           << ',' << format_real(s.mean_fine()) << ',' << format_real(s.var_fine()) << ',' << format_real(s.cost)
           << '\n';
    }
    return os.str();
}

std::string summary_text(const std::vector<std::pair<double, MlmcResult>>& rows) {
    std::ostringstream os;
    os << kSummaryHeader << '\n';
    for (const auto& [eps, r] : rows) {
        os << format_real(eps) << ',' << format_real(r.estimate) << ',' << format_real(r.std_error) << ','
           << format_real(r.total_cost) << ',' << format_real(r.rates.alpha) << ',' << format_real(r.rates.beta)
           << ',' << format_real(r.rates.gamma) << '\n';
    }
    return os.str();
}

struct Session {
    std::filesystem::path dir;
    std::ostream& out;
    std::vector<LevelStats> latest;  // most recent level statistics, kept for partial output

    void status(const std::string& text) const { write_text(dir / "status.txt", text + "\n"); }
};

void echo_row(std::ostream& out, double eps, const MlmcResult& r) {
    char line[256];
    std::snprintf(line, sizeof line, "eps=%-8g estimate=%.8f std_error=%.3e cost=%.4e L=%d%s\n", eps, r.estimate,
                  r.std_error, r.total_cost, r.final_level, r.converged ? "" : " (not converged)");
    out << line;
}

std::string run_adaptive(const ExperimentConfig& cfg, const LevelSampler& sampler, Session& session) {
    std::vector<std::pair<double, MlmcResult>> rows;
    std::string notes;
    std::vector<double> order = cfg.eps;
    for (double eps : order) {
        MlmcConfig mc = cfg.mlmc;
        mc.eps = eps;
        MlmcResult r = run_mlmc(sampler, mc, [&](const std::vector<LevelStats>& s) { session.latest = s; });
        echo_row(session.out, eps, r);
        if (!r.converged) notes += "eps=" + format_real(eps) + ": " + r.diagnostic + "\n";
        rows.emplace_back(eps, std::move(r));
    }
    const auto finest = std::min_element(rows.begin(), rows.end(),
                                         [](const auto& a, const auto& b) { return a.first < b.first; });
    write_text(session.dir / "levels.csv", levels_text(finest->second.levels));
    write_text(session.dir / "summary.csv", summary_text(rows));
    return notes;
}

std::string run_rates(const ExperimentConfig& cfg, const LevelSampler& sampler, Session& session) {
    std::vector<LevelStats> levels;
    for (int l = 0; l <= cfg.rate_levels; ++l) {
        levels.push_back(sample_level(sampler, LevelGrid::make(l, sampler.horizon()), cfg.mlmc.seed, 0,
                                      cfg.rate_samples, SampleMode::coupled, cfg.mlmc.threads));
        session.latest = levels;
    }
    const RateFit fit = fit_rates(levels, cfg.fit_min_level);
    write_text(session.dir / "levels.csv", levels_text(levels));
    std::ostringstream os;
    os << kRatesHeader << '\n'
       << format_real(fit.alpha) << ',' << format_real(fit.alpha_se) << ',' << format_real(fit.beta) << ','
       << format_real(fit.beta_se) << ',' << format_real(fit.gamma) << ',' << format_real(fit.gamma_se) << ','
       << cfg.fit_min_level << '\n';
    write_text(session.dir / "rates.csv", os.str());
    char line[200];
    std::snprintf(line, sizeof line, "alpha=%.3f (+-%.3f) beta=%.3f (+-%.3f) gamma=%.3f\n", fit.alpha, fit.alpha_se,
                  fit.beta, fit.beta_se, fit.gamma);
    session.out << line;
    return {};
}

std::string run_compare(const ExperimentConfig& cfg, const LevelSampler& sampler, Session& session) {
    std::vector<std::pair<double, MlmcResult>> rows;
    std::ostringstream os;
    os << kCompareHeader << '\n';
    std::string notes;
    for (double eps : cfg.eps) {
        MlmcConfig mc = cfg.mlmc;
        mc.eps = eps;
        MlmcResult r = run_mlmc(sampler, mc, [&](const std::vector<LevelStats>& s) { session.latest = s; });
        const MlmcResult plain = run_standard_mc(sampler, mc);
        echo_row(session.out, eps, r);
        char line[160];
        std::snprintf(line, sizeof line, "  standard MC: estimate=%.8f cost=%.4e L=%d\n", plain.estimate,
                      plain.total_cost, plain.final_level);
        session.out << line;
        os << format_real(eps) << ',' << format_real(r.estimate) << ',' << format_real(r.total_cost) << ','
           << format_real(eps * eps * r.total_cost) << ',' << format_real(plain.estimate) << ','
           << format_real(plain.total_cost) << ',' << format_real(eps * eps * plain.total_cost) << '\n';
        if (!r.converged) notes += "eps=" + format_real(eps) + ": " + r.diagnostic + "\n";
        rows.emplace_back(eps, std::move(r));
    }
    const auto finest = std::min_element(rows.begin(), rows.end(),
                                         [](const auto& a, const auto& b) { return a.first < b.first; });
    write_text(session.dir / "levels.csv", levels_text(finest->second.levels));
    write_text(session.dir / "summary.csv", summary_text(rows));
    write_text(session.dir / "compare.csv", os.str());
    return notes;
}

}  // namespace

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_levels_csv(const std::string& path, const std::vector<LevelStats>& levels) {
    write_text(path, levels_text(levels));
}

void write_summary_csv(const std::string& path, const std::vector<std::pair<double, MlmcResult>>& rows) {
    write_text(path, summary_text(rows));
}

ExperimentConfig parse_experiment(const ConfigFile& file) {
    ExperimentConfig cfg;
    cfg.model_name = file.get_string("model");
    cfg.model_params = file.numeric_section("model");
    cfg.horizon = file.get_double("horizon", 1.0);
    if (!(cfg.horizon > 0.0)) throw ConfigError("horizon must be positive");

    PayoffSpec& p = cfg.payoff;
    p.family = family_from(file.get_string("payoff", "european"));
    p.strike = file.get_double("payoff.strike", 1.0);
    p.barrier = file.get_double("payoff.barrier", 0.0);
    p.barrier_kind = barrier_from(file.get_string("payoff.barrier_kind", "down_out"));
    p.terminal = terminal_from(file.get_string("payoff.terminal", "call"));
    p.component = static_cast<int>(file.get_int("payoff.component", 0));
    p.mode = scheme_from(file.get_string("scheme", "milstein"));
    const double rate = file.get_double("payoff.discount_rate", default_discount_rate(cfg.model_params));
    p.discount = std::exp(-rate * cfg.horizon);

    cfg.greek = file.has("estimator");
    if (cfg.greek) {
        try {
            cfg.estimator = greek_kind_from_string(file.get_string("estimator"));
            cfg.greek_method = greek_method_from_string(file.get_string("greek_method", "smoothed"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    cfg.greek_samples = static_cast<int>(file.get_int("greek_samples", 10));

    cfg.jump_intensity = file.get_string("jumps.intensity", "constant");
    if (cfg.jump_intensity != "constant" && cfg.jump_intensity != "decaying") {
        throw ConfigError("jumps.intensity must be constant or decaying");
    }
    cfg.jump_bound = file.get_double("jumps.rate", 0.0);
    if (cfg.jump_intensity == "decaying") {
        cfg.thinning = thinning_from(file.get_string("jumps.thinning", "measure_change"));
    }

    if (file.has("eps")) cfg.eps = file.get_double_list("eps");
    for (double e : cfg.eps) {
        if (!(e > 0.0)) throw ConfigError("every eps must be positive");
    }
    {
        const std::string text = file.get_string("seed", "1");
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cfg.mlmc.seed);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            throw ConfigError("seed must be an unsigned 64-bit integer, got '" + text + "'");
        }
    }
    cfg.mlmc.max_level = static_cast<int>(file.get_int("max_level", 12));
    cfg.mlmc.initial_samples = file.get_int("initial_samples", 100);
    cfg.mlmc.threads = static_cast<int>(file.get_int("threads", 0));
    cfg.mlmc.weak_constant = file.get_double("weak_constant", 1.0);
    cfg.mlmc.variance_fraction = file.get_double("variance_fraction", 0.5);
    cfg.rate_levels = static_cast<int>(file.get_int("rates.levels", 7));
    cfg.rate_samples = file.get_int("rates.samples", 200000);
    cfg.fit_min_level = static_cast<int>(file.get_int("rates.fit_min_level", 2));

    if (cfg.mlmc.initial_samples < 2) throw ConfigError("initial_samples must be at least 2");
    if (cfg.mlmc.max_level < 0 || cfg.mlmc.max_level > 24) throw ConfigError("max_level must lie in [0, 24]");
    if (cfg.rate_levels < 1 || cfg.rate_levels > 24) throw ConfigError("rates.levels must lie in [1, 24]");
    if (cfg.rate_samples < 2) throw ConfigError("rates.samples must be at least 2");
    if (cfg.fit_min_level < 0 || cfg.fit_min_level >= cfg.rate_levels) {
        throw ConfigError("rates.fit_min_level must be below rates.levels");
    }
    if (!(cfg.mlmc.variance_fraction > 0.0 && cfg.mlmc.variance_fraction < 1.0)) {
        throw ConfigError("variance_fraction must lie in (0, 1)");
    }
    if (cfg.mlmc.threads < 0) throw ConfigError("threads must be nonnegative");
    file.reject_unused();

    // Build once so every combination error surfaces before sampling.
    try {
        (void)make_sampler(cfg);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

std::unique_ptr<LevelSampler> make_sampler(const ExperimentConfig& cfg) {
    ModelSpec model = make_model(cfg.model_name, cfg.model_params);
    if (cfg.model_name == "merton") {
        if (cfg.greek) throw std::invalid_argument("sensitivities are not available for jump models");
        JumpSpec jumps = merton_jumps(model);
        if (cfg.jump_intensity == "decaying") {
            if (!(cfg.jump_bound > 0.0)) throw std::invalid_argument("decaying intensity needs jumps.rate > 0");
            jumps = decaying_intensity_jumps(model, cfg.jump_bound);
        }
        return std::make_unique<JumpSampler>(std::move(model), std::move(jumps), cfg.payoff, cfg.horizon,
                                             cfg.jump_intensity == "decaying" ? cfg.thinning : ThinningMode::none);
    }
    if (cfg.jump_intensity != "constant") throw std::invalid_argument("jump settings need the merton model");
    if (cfg.greek) {
        return std::make_unique<GreekSampler>(std::move(model), cfg.payoff, cfg.horizon, cfg.greek_method,
                                              cfg.estimator, cfg.greek_samples);
    }
    return std::make_unique<PricingSampler>(std::move(model), cfg.payoff, cfg.horizon);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multilevel Monte Carlo option pricing and Greeks"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = "mlmc_out";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string command;
    const std::pair<const char*, const char*> commands[] = {
        {"run", "adaptive MLMC for every eps in the config"},
        {"rates", "fixed-N level study and fitted decay rates"},
        {"compare", "MLMC against standard Monte Carlo for every eps"},
        {"greeks", "adaptive MLMC for the configured sensitivity"},
    };
    for (const auto& [name, about] : commands) {
        auto* sub = app.add_subcommand(name, about);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--threads", threads, "worker threads (0 = all)");
        sub->callback([&command, name] { command = name; });
    }
    std::vector<std::string> argv_store{"mlmc"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    ExperimentConfig cfg;
    try {
        ConfigFile file = ConfigFile::load(config_path);
        if (seed) file.set("seed", std::to_string(*seed));
        if (threads) file.set("threads", std::to_string(*threads));
        cfg = parse_experiment(file);
        if (command == "greeks" && !cfg.greek) throw ConfigError("greeks needs an 'estimator' key");
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }

    Session session{out_dir, out, {}};
    try {
        std::filesystem::create_directories(session.dir);
    } catch (const std::exception& e) {
        err << "cannot create output directory: " << e.what() << '\n';
        return exit_runtime;
    }
    try {
        const auto sampler = make_sampler(cfg);
        std::string notes;
        if (command == "rates") {
            notes = run_rates(cfg, *sampler, session);
        } else if (command == "compare") {
            notes = run_compare(cfg, *sampler, session);
        } else {
            notes = run_adaptive(cfg, *sampler, session);
        }
        session.status(notes.empty() ? "complete" : "complete\n" + notes);
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        try {
            write_text(session.dir / "levels.csv", levels_text(session.latest));
            session.status(std::string("aborted: ") + e.what());
        } catch (...) {
        }
        return exit_runtime;
    }
    return exit_ok;
}

}  // namespace mlmc
