#include "bbsm/error.hpp"
#include "bbsm/run.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_inputs(CLI::App* cmd, bbsm::RunConfig& c) {
    cmd->add_option("--ticker", c.ticker, "Ticker label (also selects one manifest entry)");
    cmd->add_option("--prices", c.prices, "Stock price CSV (date,close)");
    cmd->add_option("--esg", c.esg, "Stock fiscal-year ESG CSV (year,score)");
    cmd->add_option("--rates", c.rates, "Treasury yield CSV (date,yield)");
    cmd->add_flag("--percent", c.rates_in_percent, "Yields are quoted in percent");
    cmd->add_option("--market-esg", c.market_esg, "Daily index ESG CSV (date,score)");
    cmd->add_option("--weights", c.weights, "Index weights JSON {ticker: weight}");
    cmd->add_option("--manifest", c.manifest, "Batch manifest JSON");
    cmd->add_option("--start", c.start, "First date of the fit window (YYYY-MM-DD)");
    cmd->add_option("--end", c.end, "Last date of the fit window (YYYY-MM-DD)");
    cmd->add_option("--gamma-esg", c.gamma_esg, "ESG affinity values")->delimiter(',');
    cmd->add_option("--esg-window", c.smoother.window_days, "ESG moving-average window (trading days)");
    cmd->add_option("--esg-sigma", c.smoother.gaussian_sigma_days, "ESG Gaussian kernel sd (trading days)");
    cmd->add_option("--min-observations", c.min_observations, "Smallest accepted fit sample");
}

void add_path_opts(CLI::App* cmd, bbsm::RunConfig& c) {
    cmd->add_option("--index", c.index, "Market index CSV (date,close)");
    cmd->add_option("--filter", c.filter, "Path filter: power | gaussian | linear | unit");
    cmd->add_option("--d", c.d, "Filter scale");
    cmd->add_option("--delta", c.delta, "Time step in trading days");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Path-dependent ESG-valued BBSM calibration and option pricing"};
    app.require_subcommand(0, 1);
    bbsm::RunConfig c;
    std::string config_path;
    app.add_option("--config", config_path, "Full run config as JSON (flags are ignored)");
    app.add_option("--out", c.out, "Output directory");

    auto* csyip = app.add_subcommand("csyip", "Build the market sign path from an index");
    add_path_opts(csyip, c);
    csyip->add_option("--start", c.start, "First date (YYYY-MM-DD)");
    csyip->add_option("--end", c.end, "Last date (YYYY-MM-DD)");

    auto* calibrate = app.add_subcommand("calibrate", "Fit risky and riskless parameters");
    add_path_opts(calibrate, c);
    add_inputs(calibrate, c);

    auto* price = app.add_subcommand("price", "Price European calls on the binary tree");
    add_path_opts(price, c);
    add_inputs(price, c);
    price->add_option("--calibration", c.calibration, "Output of calibrate to price from");
    price->add_option("--strikes", c.strikes, "Strike list")->delimiter(',');
    price->add_option("--maturities", c.maturities, "Maturities in trading days")->delimiter(',');
    price->add_option("--split-depth", c.split_depth, "Subtree split depth for parallel pricing");
    price->add_option("--max-maturity", c.max_maturity, "Largest T allowed (2^T nodes)");
    price->add_option_function<double>("--x-init", [&](double v) { c.x_init = v; },
                                       "Path value X at the pricing date (default: last historical X)");

    auto* simulate = app.add_subcommand("simulate", "Simulate a market index and optionally a stock");
    simulate->add_option("--filter", c.filter, "Path filter for the stock generator");
    simulate->add_option("--d", c.d, "Filter scale");
    simulate->add_option("--delta", c.delta, "Time step in trading days");
    simulate->add_option("--steps", c.steps, "Number of steps");
    simulate->add_option("--seed", c.seed, "RNG seed");
    simulate->add_option("--start-date", c.sim_start, "First simulated date");
    simulate->add_option("--market-a", c.market.a);
    simulate->add_option("--market-mu", c.market.mu);
    simulate->add_option("--market-v", c.market.v);
    simulate->add_option("--market-sigma", c.market.sigma);
    simulate->add_option("--p0", c.market.p0);
    simulate->add_option("--p1", c.market.p1);
    simulate->add_option("--p2", c.market.p2);
    simulate->add_option("--market-a0", c.market.a0);
    bbsm::SyntheticStock stock;
    bool with_stock = false;
    simulate->add_flag("--with-stock", with_stock, "Also generate a synthetic stock");
    simulate->add_option("--stock-a", stock.a);
    simulate->add_option("--stock-mu", stock.mu);
    simulate->add_option("--stock-v", stock.v);
    simulate->add_option("--stock-sigma", stock.sigma);
    simulate->add_option("--stock-gamma", stock.gamma);
    simulate->add_option("--stock-a0", stock.a0);
    simulate->add_option("--noise-sd", stock.noise_sd);

    auto* diagnose = app.add_subcommand("diagnose", "Emit sign-path and density comparison CSVs");
    add_path_opts(diagnose, c);
    add_inputs(diagnose, c);
    diagnose->add_option("--bandwidth", c.bandwidth, "KDE bandwidth (default: scaled Silverman)");
    diagnose->add_option("--bandwidth-scale", c.bandwidth_scale, "Multiplier on Silverman's bandwidth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(bbsm::ErrorCategory::Config);
    }

    bbsm::RunConfig cfg = c;
    if (!config_path.empty()) {
        try {
            cfg = bbsm::load_run_config(config_path);
        } catch (const bbsm::Error& e) {
            std::cerr << e.what() << "\n";
            return static_cast<int>(e.category());
        }
    }
    if (!app.get_subcommands().empty() && (config_path.empty() || cfg.subcommand.empty())) {
        cfg.subcommand = app.get_subcommands().front()->get_name();
    }
    if (cfg.subcommand.empty()) {
        std::cerr << "a subcommand (csyip, calibrate, price, simulate, diagnose) or --config is required\n";
        return static_cast<int>(bbsm::ErrorCategory::Config);
    }
    if (with_stock) cfg.stock = stock;

    const auto result = bbsm::run(cfg);
    if (result.exit_code != 0) {
        std::cerr << result.message << "\n";
        return result.exit_code;
    }
    for (const auto& p : result.artifacts) std::cout << p.string() << "\n";
    return 0;
}
