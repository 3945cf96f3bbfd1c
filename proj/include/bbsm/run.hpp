#pragma once

#include "bbsm/calibrate.hpp"
#include "bbsm/csyip.hpp"
#include "bbsm/esg.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bbsm {

/// Known coefficients for a synthetic stock driven by the simulated index.
struct SyntheticStock {
    double a = 0.0;
    double mu = 0.0;
    double v = 1.0;
    double sigma = 0.0;
    double gamma = 0.0;
    double a0 = 50.0;
    double noise_sd = 0.0;
};

/// Everything one batch invocation needs. Paths may be empty when unused.
struct RunConfig {
    std::string subcommand;  ///< csyip | calibrate | price | simulate | diagnose

    std::string ticker;
    std::filesystem::path prices;
    std::filesystem::path esg;         ///< stock fiscal-year scores
    std::filesystem::path rates;
    bool rates_in_percent = false;
    std::filesystem::path index;
    std::filesystem::path market_esg;  ///< daily index ESG (date,score)
    std::filesystem::path weights;     ///< {ticker: weight} for building the index ESG
    std::filesystem::path manifest;
    std::filesystem::path calibration; ///< calibrate output reused by price
    std::string start;                 ///< optional window bounds, YYYY-MM-DD
    std::string end;

    std::vector<double> gamma_esg{0.0};
    SmootherConfig smoother;
    std::string filter = "power";
    double d = 10.0;
    double delta = 1.0;
    double bandwidth = 0.0;  ///< 0: bandwidth_scale x Silverman
    double bandwidth_scale = 2.0;
    std::size_t min_observations = 50;

    std::vector<double> strikes;
    std::vector<int> maturities;
    int split_depth = 4;
    int max_maturity = 26;
    std::optional<double> x_init;

    std::uint64_t seed = 1;
    std::size_t steps = 2000;
    MarketIndexParams market;
    std::string sim_start = "2016-01-04";
    std::optional<SyntheticStock> stock;

    std::filesystem::path out = ".";
};

struct RunResult {
    int exit_code = 0;
    std::vector<std::filesystem::path> artifacts;
    std::string message;  ///< one-line JSON error record when exit_code != 0
};

/// Canonical JSON text of the config (sorted keys, shortest reals).
std::string config_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over config_json.
std::string config_hash(const RunConfig& cfg);

/// Throws Error(ConfigError / MaturityBudgetExceeded) on an invalid config.
void validate(const RunConfig& cfg);

/// Runs one subcommand, writing its artifacts under cfg.out.
/// Exit codes: 0 ok, 1 config, 2 data, 3 model validity.
RunResult run(const RunConfig& cfg);

}  // namespace bbsm
