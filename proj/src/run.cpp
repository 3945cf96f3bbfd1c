#include "bbsm/run.hpp"

#include "bbsm/error.hpp"
#include "bbsm/pricer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bbsm {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

json market_to_json(const MarketIndexParams& m) {
    return {{"a", m.a}, {"mu", m.mu}, {"v", m.v}, {"sigma", m.sigma},
            {"p0", m.p0}, {"p1", m.p1}, {"p2", m.p2}, {"a0", m.a0}};
}

json stock_to_json(const SyntheticStock& s) {
    return {{"a", s.a}, {"mu", s.mu}, {"v", s.v}, {"sigma", s.sigma},
            {"gamma", s.gamma}, {"a0", s.a0}, {"noise_sd", s.noise_sd}};
}

json to_json(const RunConfig& c) {
    json j;
    j["subcommand"] = c.subcommand;
    j["ticker"] = c.ticker;
    j["prices"] = c.prices.string();
    j["esg"] = c.esg.string();
    j["rates"] = c.rates.string();
    j["percent"] = c.rates_in_percent;
    j["index"] = c.index.string();
    j["market_esg"] = c.market_esg.string();
    j["weights"] = c.weights.string();
    j["manifest"] = c.manifest.string();
    j["calibration"] = c.calibration.string();
    j["start"] = c.start;
    j["end"] = c.end;
    j["gamma_esg"] = c.gamma_esg;
    j["esg_window"] = c.smoother.window_days;
    j["esg_sigma"] = c.smoother.gaussian_sigma_days;
    j["filter"] = c.filter;
    j["d"] = c.d;
    j["delta"] = c.delta;
    j["bandwidth"] = c.bandwidth;
    j["bandwidth_scale"] = c.bandwidth_scale;
    j["min_observations"] = c.min_observations;
    j["strikes"] = c.strikes;
    j["maturities"] = c.maturities;
    j["split_depth"] = c.split_depth;
    j["max_maturity"] = c.max_maturity;
    j["x_init"] = c.x_init ? json(*c.x_init) : json(nullptr);
    j["seed"] = c.seed;
    j["steps"] = c.steps;
    j["market"] = market_to_json(c.market);
    j["sim_start"] = c.sim_start;
    j["stock"] = c.stock ? stock_to_json(*c.stock) : json(nullptr);
    j["out"] = c.out.string();
    return j;
}

template <class T>
void take(const json& j, const char* key, T& dst) {
    if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

MarketIndexParams market_from_json(const json& j) {
    MarketIndexParams m;
    take(j, "a", m.a);
    take(j, "mu", m.mu);
    take(j, "v", m.v);
    take(j, "sigma", m.sigma);
    take(j, "p0", m.p0);
    take(j, "p1", m.p1);
    take(j, "p2", m.p2);
    take(j, "a0", m.a0);
    return m;
}

SyntheticStock stock_from_json(const json& j) {
    SyntheticStock s;
    take(j, "a", s.a);
    take(j, "mu", s.mu);
    take(j, "v", s.v);
    take(j, "sigma", s.sigma);
    take(j, "gamma", s.gamma);
    take(j, "a0", s.a0);
    take(j, "noise_sd", s.noise_sd);
    return s;
}

std::string provenance_json(const RunConfig& cfg) {
    auto j = to_json(cfg);
    j.erase("out");
    return j.dump();
}

std::string hash_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void require_file(const fs::path& p, const char* what) {
    if (p.empty()) config_error(std::string(what) + " is required");
    if (!fs::exists(p)) config_error(std::string(what) + " not found: " + p.string());
}

struct Artifacts {
    const RunConfig& cfg;
    std::string hash;
    std::string echo;
    std::vector<fs::path> written;

    fs::path name(const std::string& suffix) const { return cfg.out / (cfg.subcommand + "-" + hash + suffix); }

    void write_csv(const std::string& suffix, const std::string& body) {
        write(suffix, "# config_hash=" + hash + "\n# config=" + echo + "\n" + body);
    }

    void write_json(const std::string& suffix, json body) {
        body["config_hash"] = hash;
        body["config"] = json::parse(echo);
        write(suffix, body.dump(2) + "\n");
    }

    void write(const std::string& suffix, const std::string& text) {
        const auto path = name(suffix);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
        f << text;
        written.push_back(path);
    }
};

FilterSpec filter_of(const RunConfig& cfg) {
    FilterSpec f;
    f.kind = parse_filter_kind(cfg.filter);
    f.d = cfg.d;
    return f;
}

// --- data preparation ----------------------------------------------------

struct TickerInputs {
    std::string ticker;
    fs::path prices;
    fs::path esg;
};

struct Feeds {
    fs::path index;
    fs::path rates;
    bool rates_in_percent = false;
    fs::path market_esg;
    fs::path weights;
    std::vector<TickerInputs> tickers;
    std::map<std::string, fs::path> all_esg;  ///< every manifest ticker, for the index ESG
};

Feeds resolve_feeds(const RunConfig& cfg) {
    Feeds f;
    if (!cfg.manifest.empty()) {
        require_file(cfg.manifest, "--manifest");
        const auto m = load_manifest(cfg.manifest);
        f.index = m.index;
        f.rates = m.rates;
        f.rates_in_percent = m.rates_in_percent;
        f.market_esg = m.market_esg;
        f.weights = m.weights;
        for (const auto& [t, e] : m.tickers) {
            if (!e.esg.empty()) f.all_esg[t] = e.esg;
            if (cfg.ticker.empty() || cfg.ticker == t) f.tickers.push_back({t, e.prices, e.esg});
        }
        if (!cfg.ticker.empty() && f.tickers.empty()) config_error("ticker " + cfg.ticker + " not in manifest");
    }
    // Explicit flags override the manifest.
    if (!cfg.index.empty()) f.index = cfg.index;
    if (!cfg.rates.empty()) {
        f.rates = cfg.rates;
        f.rates_in_percent = cfg.rates_in_percent;
    }
    if (!cfg.market_esg.empty()) f.market_esg = cfg.market_esg;
    if (!cfg.weights.empty()) f.weights = cfg.weights;
    if (!cfg.prices.empty()) {
        const std::string t = cfg.ticker.empty() ? cfg.prices.stem().string() : cfg.ticker;
        f.tickers = {{t, cfg.prices, cfg.esg}};
        if (!cfg.esg.empty()) f.all_esg[t] = cfg.esg;
    }
    return f;
}

struct Prepared {
    std::string ticker;
    PriceSeries stock;
    CsyPath path;
    std::optional<RateSeries> rates;
    std::optional<RelEsgSeries> rel;
};

TradingCalendar apply_window(const TradingCalendar& cal, const RunConfig& cfg) {
    if (cfg.start.empty() && cfg.end.empty()) return cal;
    const auto lo = cfg.start.empty() ? Date{} : parse_date(cfg.start);
    const auto hi = cfg.end.empty() ? Date{std::chrono::year{9999}, std::chrono::December, std::chrono::day{31}}
                                    : parse_date(cfg.end);
    std::vector<Date> kept;
    for (const auto& d : cal.dates()) {
        if ((cfg.start.empty() || d >= lo) && d <= hi) kept.push_back(d);
    }
    if (kept.empty()) throw Error(ErrorCode::EmptyIntersection, "no trading days inside the --start/--end window");
    return TradingCalendar(std::move(kept));
}

EsgSeries restrict_esg(const EsgSeries& s, const TradingCalendar& cal) {
    const auto p = restrict_to(PriceSeries{s.calendar, s.score}, cal);
    return {p.calendar, p.values};
}

EsgSeries market_esg_on(const Feeds& feeds, const TradingCalendar& cal, const RunConfig& cfg) {
    if (!feeds.market_esg.empty()) return restrict_esg(load_esg_series(feeds.market_esg), cal);
    if (feeds.weights.empty()) {
        config_error("nonzero --gamma-esg needs --market-esg or a weights file with component ESG scores");
    }
    std::vector<EsgComponent> parts;
    for (const auto& [t, w] : load_index_weights(feeds.weights)) {
        const auto it = feeds.all_esg.find(t);
        if (it == feeds.all_esg.end()) config_error("weights name " + t + " which has no ESG file");
        parts.push_back({interpolate_esg_daily(load_esg_fiscal_scores(it->second), cal, cfg.smoother), w});
    }
    return index_esg(parts);
}

bool needs_esg(const RunConfig& cfg) {
    return std::any_of(cfg.gamma_esg.begin(), cfg.gamma_esg.end(), [](double g) { return g != 0.0; });
}

Prepared prepare(const Feeds& feeds, const TickerInputs& t, const RunConfig& cfg) {
    require_file(feeds.index, "--index");
    require_file(t.prices, "--prices");
    std::vector<PriceSeries> inputs{load_price_series(feeds.index), load_price_series(t.prices)};
    std::optional<RateSeries> rates;
    if (!feeds.rates.empty()) {
        require_file(feeds.rates, "--rates");
        rates = load_treasury_rates(feeds.rates, feeds.rates_in_percent);
        inputs.push_back(as_price_series(*rates));
    }
    const bool esg = needs_esg(cfg);
    std::optional<EsgSeries> daily_market;
    if (esg && !feeds.market_esg.empty()) {
        require_file(feeds.market_esg, "--market-esg");
        daily_market = load_esg_series(feeds.market_esg);
        inputs.push_back({daily_market->calendar, daily_market->score});
    }
    const auto aligned = align_calendars(inputs);
    const auto cal = apply_window(aligned.calendar, cfg);

    Prepared p;
    p.ticker = t.ticker;
    p.stock = restrict_to(inputs[1], cal);
    p.path = build_csy_path(restrict_to(inputs[0], cal), filter_of(cfg), cfg.delta);
    if (rates) p.rates = restrict_to(*rates, cal);
    if (esg) {
        if (t.esg.empty()) config_error("nonzero --gamma-esg needs --esg for " + t.ticker);
        require_file(t.esg, "--esg");
        const auto stock_esg = interpolate_esg_daily(load_esg_fiscal_scores(t.esg), cal, cfg.smoother);
        const auto market = daily_market ? restrict_esg(*daily_market, cal) : market_esg_on(feeds, cal, cfg);
        p.rel = relative_esg(stock_esg, market);
    }
    return p;
}

PriceSeries adjusted(const Prepared& p, double gamma_esg) {
    if (gamma_esg == 0.0) return p.stock;
    return esg_adjusted_prices(p.stock, *p.rel, gamma_esg);
}

RisklessParams riskless_of(const Prepared& p, const RunConfig& cfg) {
    if (!p.rates) return RisklessParams{0.0, 0.0, 1.0, std::nan("")};
    const auto beta = build_beta_series(*p.rates, 1.0, cfg.delta);
    return fit_riskless_params(beta.values, 1.0, cfg.delta);
}

json fit_to_json(const std::string& ticker, double g, const RiskyParams& f, double a_last) {
    const auto n = reparameterize(f, f.a0);
    return {{"ticker", ticker},
            {"gamma_esg", g},
            {"a", f.a},
            {"mu", f.mu},
            {"v", f.v},
            {"sigma", f.sigma},
            {"gamma", f.gamma},
            {"delta", f.delta},
            {"adj_r2", f.adj_r2},
            {"a0", f.a0},
            {"a_last", a_last},
            {"normalized",
             {{"a_over_a0", n.a_over_a0},
              {"mu", n.mu},
              {"v_over_a0", n.v_over_a0},
              {"sigma", n.sigma},
              {"gamma_over_a0", n.gamma_over_a0}}},
            {"std_errors",
             {{"a", f.std_errors[0]},
              {"mu", f.std_errors[1]},
              {"v", f.std_errors[2]},
              {"sigma", f.std_errors[3]},
              {"gamma", f.std_errors[4]}}},
            {"kkt_residual", f.kkt_residual},
            {"observations", f.observations},
            {"active_constraints", f.active_constraints}};
}

json riskless_to_json(const RisklessParams& r) {
    return {{"rho", r.rho}, {"r", r.r}, {"adj_r2", r.adj_r2}, {"beta0", r.beta0}};
}

json calibrate_ticker(const Prepared& p, const RunConfig& cfg) {
    FitOptions opts;
    opts.min_observations = cfg.min_observations;
    json fits = json::array();
    for (double g : cfg.gamma_esg) {
        const auto a = adjusted(p, g);
        fits.push_back(fit_to_json(p.ticker, g, fit_risky_params(a, p.path, opts), a.values.back()));
    }
    const auto& cal = p.path.calendar;
    return {{"ticker", p.ticker},
            {"start", format_date(cal[0])},
            {"end", format_date(cal[cal.size() - 1])},
            {"observations", p.path.steps()},
            {"up_prob", p.path.up_prob},
            {"x_last", p.path.x.back()},
            {"riskless", p.rates ? riskless_to_json(riskless_of(p, cfg)) : json(nullptr)},
            {"fits", fits}};
}

// --- subcommands ----------------------------------------------------------

void cmd_csyip(const RunConfig& cfg, Artifacts& out) {
    require_file(cfg.index, "--index");
    const auto index = load_price_series(cfg.index);
    const auto cal = apply_window(index.calendar, cfg);
    out.write_csv(".csv", to_csv(build_csy_path(restrict_to(index, cal), filter_of(cfg), cfg.delta)));
}

void cmd_calibrate(const RunConfig& cfg, Artifacts& out) {
    const auto feeds = resolve_feeds(cfg);
    if (feeds.tickers.empty()) config_error("calibrate needs --prices or --manifest");
    json results = json::array();
    for (const auto& t : feeds.tickers) results.push_back(calibrate_ticker(prepare(feeds, t, cfg), cfg));
    out.write_json(".json", {{"delta", cfg.delta}, {"filter", {{"kind", cfg.filter}, {"d", cfg.d}}}, {"results", results}});
}

RiskyParams risky_from_json(const json& f) {
    RiskyParams p;
    p.a = f.at("a").get<double>();
    p.mu = f.at("mu").get<double>();
    p.v = f.at("v").get<double>();
    p.sigma = f.at("sigma").get<double>();
    p.gamma = f.at("gamma").get<double>();
    take(f, "delta", p.delta);
    take(f, "a0", p.a0);
    return p;
}

void cmd_price(const RunConfig& cfg, Artifacts& out) {
    json calib;
    if (!cfg.calibration.empty()) {
        require_file(cfg.calibration, "--calibration");
        std::ifstream f(cfg.calibration);
        try {
            calib = json::parse(f);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, cfg.calibration.string() + ": " + e.what());
        }
    } else {
        const auto feeds = resolve_feeds(cfg);
        if (feeds.tickers.empty()) config_error("price needs --calibration, --prices or --manifest");
        json results = json::array();
        for (const auto& t : feeds.tickers) results.push_back(calibrate_ticker(prepare(feeds, t, cfg), cfg));
        calib = {{"delta", cfg.delta}, {"filter", {{"kind", cfg.filter}, {"d", cfg.d}}}, {"results", results}};
    }

    const int max_t = cfg.maturities.empty() ? 0 : *std::max_element(cfg.maturities.begin(), cfg.maturities.end());
    std::string body = "ticker,gamma_esg,K,T,price\n";
    try {
        const double delta = calib.at("delta").get<double>();
        FilterSpec filter;
        filter.kind = parse_filter_kind(calib.at("filter").at("kind").get<std::string>());
        filter.d = calib.at("filter").at("d").get<double>();
        for (const auto& r : calib.at("results")) {
            const auto ticker = r.at("ticker").get<std::string>();
            if (!cfg.ticker.empty() && ticker != cfg.ticker) continue;
            RisklessParams rl;
            if (!r.at("riskless").is_null()) {
                rl.rho = r.at("riskless").at("rho").get<double>();
                rl.r = r.at("riskless").at("r").get<double>();
            }
            for (const auto& f : r.at("fits")) {
                const double a0 = f.at("a_last").get<double>();
                rl.beta0 = a0;
                PricingConfig pc;
                pc.delta = delta;
                pc.up_prob = r.at("up_prob").get<double>();
                pc.x_init = cfg.x_init.value_or(r.at("x_last").get<double>());
                pc.filter = filter;
                pc.a0 = a0;
                pc.beta_path = riskless_beta_path(rl, a0, max_t, delta);
                pc.max_maturity = cfg.max_maturity;
                pc.split_depth = cfg.split_depth;
                OptionSpec tmpl;
                tmpl.gamma_esg = f.at("gamma_esg").get<double>();
                auto surface = price_surface(cfg.strikes, cfg.maturities, tmpl, risky_from_json(f), rl, pc);
                surface.ticker = ticker;
                body += to_csv(surface, false);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, "malformed calibration record: " + std::string(e.what()));
    }
    out.write_csv(".csv", body);
}

void cmd_simulate(const RunConfig& cfg, Artifacts& out) {
    const auto index = simulate_market_index(cfg.market, cfg.steps, cfg.delta, cfg.seed, parse_date(cfg.sim_start));
    out.write_csv("-index.csv", to_csv(index, "close"));
    json gen = {{"market", market_to_json(cfg.market)}, {"steps", cfg.steps}, {"seed", cfg.seed}};
    if (cfg.stock) {
        const auto& s = *cfg.stock;
        RiskyParams p;
        p.a = s.a;
        p.mu = s.mu;
        p.v = s.v;
        p.sigma = s.sigma;
        p.gamma = s.gamma;
        p.delta = cfg.delta;
        const auto path = build_csy_path(index, filter_of(cfg), cfg.delta);
        const auto stock = generate_risky_path(p, path, s.a0, s.noise_sd, cfg.seed + 1);
        out.write_csv("-stock.csv", to_csv(stock, "close"));
        gen["stock"] = stock_to_json(s);
        gen["up_prob"] = path.up_prob;
    }
    out.write_json("-generator.json", gen);
}

void cmd_diagnose(const RunConfig& cfg, Artifacts& out) {
    const auto feeds = resolve_feeds(cfg);
    if (feeds.tickers.empty()) {
        cmd_csyip(cfg, out);
        return;
    }
    bool path_written = false;
    for (const auto& t : feeds.tickers) {
        const auto p = prepare(feeds, t, cfg);
        if (!path_written) {
            out.write_csv("-csyip.csv", to_csv(p.path));
            path_written = true;
        }
        FitOptions opts;
        opts.min_observations = cfg.min_observations;
        for (double g : cfg.gamma_esg) {
            const auto a = adjusted(p, g);
            const auto fit = fit_risky_params(a, p.path, opts);
            const auto empirical = price_changes(a).change;
            const std::vector<double> lagged(a.values.begin(), a.values.end() - 1);
            const auto model = model_change_series(fit, lagged, p.path);
            const double bw = cfg.bandwidth > 0.0 ? cfg.bandwidth : cfg.bandwidth_scale * silverman_bandwidth(empirical);
            out.write_csv("-" + t.ticker + "-g" + format_real(g) + "-density.csv",
                          to_csv(kde_compare(empirical, model, bw)));
        }
    }
}

json error_record(const Error& e) {
    return {{"error", to_string(e.code())},
            {"category", e.category() == ErrorCategory::Config ? "config"
                         : e.category() == ErrorCategory::Data ? "data"
                                                               : "model"},
            {"message", e.what()}};
}

}  // namespace

std::string config_json(const RunConfig& cfg) { return to_json(cfg).dump(); }

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) config_error("config must be a JSON object");
    static const std::set<std::string> known = [] {
        std::set<std::string> k;
        const json defaults = to_json(RunConfig{});
        for (const auto& [key, _] : defaults.items()) k.insert(key);
        return k;
    }();
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) config_error("unknown config key \"" + key + "\"");
    }
    RunConfig c;
    try {
        take(j, "subcommand", c.subcommand);
        take(j, "ticker", c.ticker);
        auto path = [&](const char* key, fs::path& dst) {
            if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<std::string>();
        };
        path("prices", c.prices);
        path("esg", c.esg);
        path("rates", c.rates);
        take(j, "percent", c.rates_in_percent);
        path("index", c.index);
        path("market_esg", c.market_esg);
        path("weights", c.weights);
        path("manifest", c.manifest);
        path("calibration", c.calibration);
        take(j, "start", c.start);
        take(j, "end", c.end);
        take(j, "gamma_esg", c.gamma_esg);
        take(j, "esg_window", c.smoother.window_days);
        take(j, "esg_sigma", c.smoother.gaussian_sigma_days);
        take(j, "filter", c.filter);
        take(j, "d", c.d);
        take(j, "delta", c.delta);
        take(j, "bandwidth", c.bandwidth);
        take(j, "bandwidth_scale", c.bandwidth_scale);
        take(j, "min_observations", c.min_observations);
        take(j, "strikes", c.strikes);
        take(j, "maturities", c.maturities);
        take(j, "split_depth", c.split_depth);
        take(j, "max_maturity", c.max_maturity);
        if (j.contains("x_init") && !j.at("x_init").is_null()) c.x_init = j.at("x_init").get<double>();
        take(j, "seed", c.seed);
        take(j, "steps", c.steps);
        if (j.contains("market") && !j.at("market").is_null()) c.market = market_from_json(j.at("market"));
        take(j, "sim_start", c.sim_start);
        if (j.contains("stock") && !j.at("stock").is_null()) c.stock = stock_from_json(j.at("stock"));
        path("out", c.out);
    } catch (const json::exception& e) {
        config_error(std::string("bad config value: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) config_error("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_json(ss.str());
}

std::string config_hash(const RunConfig& cfg) { return hash_hex(provenance_json(cfg)); }

void validate(const RunConfig& cfg) {
    static const std::set<std::string> subcommands{"csyip", "calibrate", "price", "simulate", "diagnose"};
    if (!subcommands.count(cfg.subcommand)) config_error("unknown subcommand \"" + cfg.subcommand + "\"");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(cfg.delta > 0.0) || !finite(cfg.delta)) config_error("--delta must be positive");
    if (!(cfg.d > 0.0) || !finite(cfg.d)) config_error("--d must be positive");
    if (cfg.smoother.window_days < 1) config_error("--esg-window must be >= 1");
    if (!(cfg.smoother.gaussian_sigma_days > 0.0)) config_error("--esg-sigma must be positive");
    if (cfg.gamma_esg.empty()) config_error("--gamma-esg needs at least one value");
    if (!std::all_of(cfg.gamma_esg.begin(), cfg.gamma_esg.end(), finite)) config_error("--gamma-esg must be finite");
    if (cfg.bandwidth < 0.0 || !(cfg.bandwidth_scale > 0.0)) config_error("bandwidth settings must be positive");
    if (cfg.split_depth < 0) config_error("--split-depth must be >= 0");
    if (cfg.max_maturity < 0 || cfg.max_maturity > 40) config_error("--max-maturity must be in [0, 40]");
    try {
        parse_filter_kind(cfg.filter);
        if (!cfg.start.empty()) parse_date(cfg.start);
        if (!cfg.end.empty()) parse_date(cfg.end);
        parse_date(cfg.sim_start);
    } catch (const Error& e) {
        config_error(e.what());
    }
    if (cfg.subcommand == "price") {
        if (cfg.strikes.empty()) config_error("price needs --strikes");
        if (cfg.maturities.empty()) config_error("price needs --maturities");
        if (!std::all_of(cfg.strikes.begin(), cfg.strikes.end(), finite)) config_error("strikes must be finite");
        for (int t : cfg.maturities) {
            if (t < 0) config_error("maturities must be >= 0");
            if (t > cfg.max_maturity) {
                throw Error(ErrorCode::MaturityBudgetExceeded,
                            "T = " + std::to_string(t) + " exceeds the 2^T node budget (max T = " +
                                std::to_string(cfg.max_maturity) + "); use a coarser --delta or raise --max-maturity");
            }
        }
    }
    if (cfg.subcommand == "simulate") {
        if (cfg.steps < 2) config_error("--steps must be >= 2");
        if (!(cfg.market.a0 > 0.0)) config_error("market a0 must be positive");
    }
    if (cfg.x_init && !finite(*cfg.x_init)) config_error("--x-init must be finite");
}

RunResult run(const RunConfig& cfg) {
    RunResult result;
    try {
        validate(cfg);
        std::error_code ec;
        fs::create_directories(cfg.out, ec);
        if (ec) config_error("cannot create output directory " + cfg.out.string());
        Artifacts out{cfg, config_hash(cfg), provenance_json(cfg), {}};
        if (cfg.subcommand == "csyip") cmd_csyip(cfg, out);
        else if (cfg.subcommand == "calibrate") cmd_calibrate(cfg, out);
        else if (cfg.subcommand == "price") cmd_price(cfg, out);
        else if (cfg.subcommand == "simulate") cmd_simulate(cfg, out);
        else cmd_diagnose(cfg, out);
        result.artifacts = std::move(out.written);
    } catch (const Error& e) {
        result.exit_code = static_cast<int>(e.category());
        result.message = error_record(e).dump();
    } catch (const std::exception& e) {
        result.exit_code = static_cast<int>(ErrorCategory::Data);
        result.message = json{{"error", "Unexpected"}, {"category", "data"}, {"message", e.what()}}.dump();
    }
    return result;
}

}  // namespace bbsm
