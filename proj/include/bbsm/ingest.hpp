#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bbsm {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 day ("YYYY-MM-DD"). Throws ParseError.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Ordered trading days. Strictly increasing, no duplicates.
class TradingCalendar {
public:
    TradingCalendar() = default;
    explicit TradingCalendar(std::vector<Date> dates);

    const std::vector<Date>& dates() const noexcept { return dates_; }
    std::size_t size() const noexcept { return dates_.size(); }
    bool empty() const noexcept { return dates_.empty(); }
    const Date& operator[](std::size_t i) const { return dates_[i]; }

    /// Drops the first `n` days.
    TradingCalendar drop_front(std::size_t n) const;

    friend bool operator==(const TradingCalendar&, const TradingCalendar&) = default;

private:
    std::vector<Date> dates_;
};

/// Values on a trading calendar: stock prices, index levels, β.
struct PriceSeries {
    TradingCalendar calendar;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

/// Annualized yields (fraction per year) on a trading calendar.
struct RateSeries {
    TradingCalendar calendar;
    std::vector<double> annualized_yield;

    std::size_t size() const noexcept { return annualized_yield.size(); }
};

struct FiscalEsgEntry {
    int fiscal_year;
    double score;
};

/// Fiscal-year ESG scores, strictly increasing in year.
struct FiscalEsgTable {
    std::vector<FiscalEsgEntry> entries;
};

/// Column layout of a dated CSV. Columns are zero-based.
struct ColumnSpec {
    std::size_t date_column = 0;
    std::size_t value_column = 1;
    bool has_header = true;
};

PriceSeries load_price_series(const std::filesystem::path& path, const ColumnSpec& format = {});
FiscalEsgTable load_esg_fiscal_scores(const std::filesystem::path& path);
RateSeries load_treasury_rates(const std::filesystem::path& path, bool percent = false,
                               const ColumnSpec& format = {});

/// In-memory variants used by the file loaders; `source` labels error messages.
PriceSeries parse_price_series(std::string_view csv, const ColumnSpec& format = {},
                               std::string_view source = "<memory>");
FiscalEsgTable parse_esg_fiscal_scores(std::string_view csv, std::string_view source = "<memory>");

/// Canonical CSV: header "date,<value_name>", shortest round-trip decimal reals.
std::string to_csv(const PriceSeries& series, std::string_view value_name = "value");
void write_price_series(const std::filesystem::path& path, const PriceSeries& series,
                        std::string_view value_name = "value");

/// Shortest decimal form that parses back to the same double.
std::string format_real(double value);

struct AlignedSeries {
    TradingCalendar calendar;
    std::vector<PriceSeries> series;
    std::size_t dropped_dates = 0;  ///< summed over all inputs
};

/// Inner join on dates present in every input. Throws EmptyIntersection.
AlignedSeries align_calendars(const std::vector<PriceSeries>& series);

TradingCalendar common_calendar(const std::vector<TradingCalendar>& calendars);
PriceSeries restrict_to(const PriceSeries& series, const TradingCalendar& calendar);
RateSeries restrict_to(const RateSeries& series, const TradingCalendar& calendar);

PriceSeries as_price_series(const RateSeries& rates);

/// Batch-run manifest: ticker -> {price file, ESG file} plus shared feeds.
struct ManifestEntry {
    std::filesystem::path prices;
    std::filesystem::path esg;
};

struct Manifest {
    std::map<std::string, ManifestEntry> tickers;
    std::filesystem::path index;       ///< market index / ETF prices
    std::filesystem::path rates;       ///< treasury yields
    std::filesystem::path market_esg;  ///< optional precomputed daily index ESG
    std::filesystem::path weights;     ///< optional {ticker: weight} JSON
    bool rates_in_percent = false;
};

/// Relative paths in the manifest resolve against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace bbsm
