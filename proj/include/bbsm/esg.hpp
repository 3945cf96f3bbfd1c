#pragma once

#include "bbsm/ingest.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bbsm {

/// Daily ESG scores (0-10 scale) for a stock or an index.
struct EsgSeries {
    TradingCalendar calendar;
    std::vector<double> score;

    std::size_t size() const noexcept { return score.size(); }
};

/// Relative rating (Z_stock - Z_market) / Z_market, dimensionless.
struct RelEsgSeries {
    TradingCalendar calendar;
    std::vector<double> rel;

    std::size_t size() const noexcept { return rel.size(); }
};

/// Gaussian-weighted moving average applied after linear interpolation.
/// The window is centred: it spans window_days / 2 trading days on each side.
struct SmootherConfig {
    int window_days = 126;
    double gaussian_sigma_days = 31.5;
};

/// Day on which each fiscal year closes.
struct FiscalYearEnd {
    std::chrono::month month = std::chrono::December;
    std::chrono::day day = std::chrono::day{31};
};

struct EsgInterpolationReport {
    std::size_t days_before_first_fy = 0;  ///< dates filled with the first score
    std::size_t days_after_last_fy = 0;    ///< dates carrying the last score forward
    std::vector<Date> anchors;             ///< assignment day per fiscal year
};

/// Piecewise-linear interpolation between fiscal-year anchors followed by a
/// boundary-renormalized truncated Gaussian moving average.
EsgSeries interpolate_esg_daily(const FiscalEsgTable& table, const TradingCalendar& calendar,
                                const SmootherConfig& cfg = {}, const FiscalYearEnd& fy_end = {},
                                EsgInterpolationReport* report = nullptr);

/// The smoothing step alone, on trading-day index.
std::vector<double> gaussian_moving_average(const std::vector<double>& values, const SmootherConfig& cfg);

struct EsgComponent {
    EsgSeries series;
    double weight;
};

/// Weighted average; weights are normalized to sum 1.
EsgSeries index_esg(const std::vector<EsgComponent>& components);

/// A weight snapshot effective from `effective` onwards.
struct WeightSnapshot {
    Date effective;
    std::map<std::string, double> weights;
};

/// Time-varying weights: each date uses the latest snapshot on or before it
/// (dates before the first snapshot use the first one).
EsgSeries index_esg_dated(const std::map<std::string, EsgSeries>& components,
                          const std::vector<WeightSnapshot>& snapshots);

/// {ticker: weight}
std::map<std::string, double> load_index_weights(const std::filesystem::path& path);
/// {"YYYY-MM-DD": {ticker: weight}, ...}
std::vector<WeightSnapshot> load_dated_weights(const std::filesystem::path& path);

RelEsgSeries relative_esg(const EsgSeries& stock, const EsgSeries& market);

/// A_t = S_t (1 + gamma_esg * rel_t). Negative results are allowed.
PriceSeries esg_adjusted_prices(const PriceSeries& financial, const RelEsgSeries& rel, double gamma_esg);

EsgSeries load_esg_series(const std::filesystem::path& path);
std::string to_csv(const EsgSeries& series);

}  // namespace bbsm
