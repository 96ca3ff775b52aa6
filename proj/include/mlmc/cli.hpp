#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mlmc/config.hpp"
#include "mlmc/driver.hpp"
#include "mlmc/greeks.hpp"
#include "mlmc/jumps.hpp"

namespace mlmc {

struct ExperimentConfig {
    std::string model_name;
    std::map<std::string, double> model_params;
    PayoffSpec payoff;
    double horizon = 1.0;

    bool greek = false;  // true when an `estimator` key is present
    GreekKind estimator = GreekKind::value;
    GreekMethod greek_method = GreekMethod::smoothed;
    int greek_samples = 10;

    std::string jump_intensity = "constant";  // constant | decaying
    double jump_bound = 0.0;
    ThinningMode thinning = ThinningMode::none;

    std::vector<double> eps{0.01};
    MlmcConfig mlmc;
    int rate_levels = 7;
    long long rate_samples = 200000;
    int fit_min_level = 2;
};

// Validates every key and combination; throws ConfigError.
ExperimentConfig parse_experiment(const ConfigFile& file);

std::unique_ptr<LevelSampler> make_sampler(const ExperimentConfig& cfg);

// %.17g
std::string format_real(double v);

extern const char* const kLevelsHeader;
extern const char* const kSummaryHeader;
extern const char* const kRatesHeader;
extern const char* const kCompareHeader;

void write_levels_csv(const std::string& path, const std::vector<LevelStats>& levels);
void write_summary_csv(const std::string& path, const std::vector<std::pair<double, MlmcResult>>& rows);

enum ExitCode { exit_ok = 0, exit_config = 1, exit_runtime = 2 };

// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlmc
