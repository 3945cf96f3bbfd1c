#include "bbsm/ingest.hpp"

#include "bbsm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bbsm {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

struct CsvRow {
    std::size_t line_number;
    std::vector<std::string_view> fields;
};

// Non-empty, non-comment rows; the header (if any) is dropped.
std::vector<CsvRow> data_rows(std::string_view csv, bool has_header) {
    std::vector<CsvRow> rows;
    std::size_t line_number = 0;
    bool header_seen = !has_header;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        auto eol = csv.find('\n', pos);
        auto line = csv.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        ++line_number;
        auto t = trim(line);
        if (!t.empty() && t.front() != '#') {
            if (!header_seen) {
                header_seen = true;
            } else {
                rows.push_back({line_number, split_fields(t)});
            }
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return rows;
}

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, const std::string& what) {
    throw Error(ErrorCode::ParseError,
                std::string(source) + ": row " + std::to_string(line) + ": " + what);
}

double parse_real(std::string_view text, std::string_view source, std::size_t line) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        parse_fail(source, line, "not a number: '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        parse_fail(source, line, "non-finite value: '" + std::string(text) + "'");
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::EmptyInput, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

PriceSeries sorted_series(std::vector<std::pair<Date, double>> points, std::string_view source) {
    std::stable_sort(points.begin(), points.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });
    std::vector<Date> dates;
    std::vector<double> values;
    dates.reserve(points.size());
    values.reserve(points.size());
    for (const auto& [d, v] : points) {
        if (!dates.empty() && dates.back() == d) {
            throw Error(ErrorCode::ParseError,
                        std::string(source) + ": duplicate date " + format_date(d));
        }
        dates.push_back(d);
        values.push_back(v);
    }
    return PriceSeries{TradingCalendar(std::move(dates)), std::move(values)};
}

}  // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    auto bad = [&] { throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') bad();
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto num = [&](std::size_t off, std::size_t len, auto& out) {
        auto [ptr, ec] = std::from_chars(text.data() + off, text.data() + off + len, out);
        if (ec != std::errc{} || ptr != text.data() + off + len) bad();
    };
    num(0, 4, y);
    num(5, 2, m);
    num(8, 2, d);
    Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) bad();
    return date;
}

std::string format_date(Date date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::string format_real(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

TradingCalendar::TradingCalendar(std::vector<Date> dates) : dates_(std::move(dates)) {
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (!(dates_[i - 1] < dates_[i])) {
            throw Error(ErrorCode::ParseError,
                        "calendar not strictly increasing at " + format_date(dates_[i]));
        }
    }
}

TradingCalendar TradingCalendar::drop_front(std::size_t n) const {
    n = std::min(n, dates_.size());
    return TradingCalendar(std::vector<Date>(dates_.begin() + static_cast<std::ptrdiff_t>(n), dates_.end()));
}

PriceSeries parse_price_series(std::string_view csv, const ColumnSpec& format, std::string_view source) {
    auto rows = data_rows(csv, format.has_header);
    if (rows.empty()) {
        throw Error(ErrorCode::EmptyInput, std::string(source) + ": no data rows");
    }
    const auto needed = std::max(format.date_column, format.value_column) + 1;
    std::vector<std::pair<Date, double>> points;
    points.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.fields.size() < needed) parse_fail(source, row.line_number, "missing column");
        Date d{};
        try {
            d = parse_date(row.fields[format.date_column]);
        } catch (const Error& e) {
            parse_fail(source, row.line_number, e.what());
        }
        points.emplace_back(d, parse_real(row.fields[format.value_column], source, row.line_number));
    }
    return sorted_series(std::move(points), source);
}

PriceSeries load_price_series(const std::filesystem::path& path, const ColumnSpec& format) {
    return parse_price_series(read_file(path), format, path.string());
}

FiscalEsgTable parse_esg_fiscal_scores(std::string_view csv, std::string_view source) {
    auto rows = data_rows(csv, true);
    if (rows.empty()) {
        throw Error(ErrorCode::EmptyInput, std::string(source) + ": no data rows");
    }
    FiscalEsgTable table;
    for (const auto& row : rows) {
        if (row.fields.size() < 2) parse_fail(source, row.line_number, "missing column");
        int year = 0;
        auto f = row.fields[0];
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), year);
        if (ec != std::errc{} || ptr != f.data() + f.size()) {
            parse_fail(source, row.line_number, "invalid fiscal year '" + std::string(f) + "'");
        }
        double score = parse_real(row.fields[1], source, row.line_number);
        if (score < 0.0) parse_fail(source, row.line_number, "negative ESG score");
        table.entries.push_back({year, score});
    }
    std::stable_sort(table.entries.begin(), table.entries.end(),
                     [](const auto& l, const auto& r) { return l.fiscal_year < r.fiscal_year; });
    for (std::size_t i = 1; i < table.entries.size(); ++i) {
        if (table.entries[i].fiscal_year == table.entries[i - 1].fiscal_year) {
            throw Error(ErrorCode::DuplicateYear, std::string(source) + ": fiscal year " +
                                                      std::to_string(table.entries[i].fiscal_year));
        }
    }
    return table;
}

FiscalEsgTable load_esg_fiscal_scores(const std::filesystem::path& path) {
    return parse_esg_fiscal_scores(read_file(path), path.string());
}

RateSeries load_treasury_rates(const std::filesystem::path& path, bool percent, const ColumnSpec& format) {
    auto series = load_price_series(path, format);
    if (percent) {
        for (auto& v : series.values) v /= 100.0;
    }
    return RateSeries{std::move(series.calendar), std::move(series.values)};
}

std::string to_csv(const PriceSeries& series, std::string_view value_name) {
    std::string out = "date," + std::string(value_name) + "\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += format_date(series.calendar[i]);
        out += ',';
        out += format_real(series.values[i]);
        out += '\n';
    }
    return out;
}

void write_price_series(const std::filesystem::path& path, const PriceSeries& series,
                        std::string_view value_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    out << to_csv(series, value_name);
}

TradingCalendar common_calendar(const std::vector<TradingCalendar>& calendars) {
    if (calendars.empty()) {
        throw Error(ErrorCode::EmptyInput, "align_calendars needs at least one series");
    }
    std::vector<Date> common = calendars.front().dates();
    for (std::size_t i = 1; i < calendars.size(); ++i) {
        std::vector<Date> next;
        std::set_intersection(common.begin(), common.end(), calendars[i].dates().begin(),
                              calendars[i].dates().end(), std::back_inserter(next));
        common = std::move(next);
    }
    if (common.empty()) {
        throw Error(ErrorCode::EmptyIntersection, "input calendars share no dates");
    }
    return TradingCalendar(std::move(common));
}

PriceSeries restrict_to(const PriceSeries& series, const TradingCalendar& calendar) {
    PriceSeries out{calendar, {}};
    out.values.reserve(calendar.size());
    const auto& dates = series.calendar.dates();
    std::size_t j = 0;
    for (const auto& d : calendar.dates()) {
        while (j < dates.size() && dates[j] < d) ++j;
        if (j == dates.size() || dates[j] != d) {
            throw Error(ErrorCode::CalendarMismatch, "date " + format_date(d) + " missing from series");
        }
        out.values.push_back(series.values[j]);
    }
    return out;
}

RateSeries restrict_to(const RateSeries& series, const TradingCalendar& calendar) {
    auto p = restrict_to(as_price_series(series), calendar);
    return RateSeries{std::move(p.calendar), std::move(p.values)};
}

PriceSeries as_price_series(const RateSeries& rates) {
    return PriceSeries{rates.calendar, rates.annualized_yield};
}

AlignedSeries align_calendars(const std::vector<PriceSeries>& series) {
    std::vector<TradingCalendar> cals;
    cals.reserve(series.size());
    for (const auto& s : series) cals.push_back(s.calendar);
    AlignedSeries out;
    out.calendar = common_calendar(cals);
    for (const auto& s : series) {
        out.dropped_dates += s.size() - out.calendar.size();
        out.series.push_back(restrict_to(s, out.calendar));
    }
    return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        if (p.empty()) return {};
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    Manifest m;
    try {
        for (const auto& [ticker, entry] : j.at("tickers").items()) {
            m.tickers[ticker] = ManifestEntry{resolve(entry.at("prices").get<std::string>()),
                                              resolve(entry.value("esg", std::string{}))};
        }
        m.index = resolve(j.value("index", std::string{}));
        m.rates = resolve(j.value("rates", std::string{}));
        m.market_esg = resolve(j.value("market_esg", std::string{}));
        m.weights = resolve(j.value("weights", std::string{}));
        m.rates_in_percent = j.value("rates_in_percent", false);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return m;
}

}  // namespace bbsm
