#include "bbsm/esg.hpp"

#include "bbsm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bbsm {

namespace {

using std::chrono::sys_days;

Date fiscal_year_end(int year, const FiscalYearEnd& fy) {
    Date d{std::chrono::year{year}, fy.month, fy.day};
    if (!d.ok()) {
        d = Date{std::chrono::year_month_day_last{std::chrono::year{year},
                                                  std::chrono::month_day_last{fy.month}}};
    }
    return d;
}

bool is_weekday(sys_days d) {
    std::chrono::weekday wd{d};
    return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

// Trading-day position of a date that precedes the calendar: minus the number
// of weekdays from (the last weekday <= date) up to, not including, the first
// calendar day.
double virtual_position(Date date, Date first) {
    sys_days d{date};
    while (!is_weekday(d)) d -= std::chrono::days{1};
    long count = 0;
    for (sys_days t = d; t < sys_days{first}; t += std::chrono::days{1}) {
        if (is_weekday(t)) ++count;
    }
    return -static_cast<double>(std::max(count, 1L));
}

void require_same_calendar(const TradingCalendar& a, const TradingCalendar& b, const char* what) {
    if (!(a == b)) throw Error(ErrorCode::CalendarMismatch, what);
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::EmptyInput, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

}  // namespace

std::vector<double> gaussian_moving_average(const std::vector<double>& values, const SmootherConfig& cfg) {
    if (cfg.window_days < 1 || !(cfg.gaussian_sigma_days > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "smoother needs window_days >= 1 and sigma > 0");
    }
    const long n = static_cast<long>(values.size());
    const long half = cfg.window_days / 2;
    std::vector<double> kernel(static_cast<std::size_t>(half) + 1);
    for (long j = 0; j <= half; ++j) {
        const double u = static_cast<double>(j) / cfg.gaussian_sigma_days;
        kernel[static_cast<std::size_t>(j)] = std::exp(-0.5 * u * u);
    }
    std::vector<double> out(values.size());
    for (long i = 0; i < n; ++i) {
        double num = 0.0;
        double den = 0.0;
        const long lo = std::max(0L, i - half);
        const long hi = std::min(n - 1, i + half);
        for (long k = lo; k <= hi; ++k) {
            const double w = kernel[static_cast<std::size_t>(std::labs(k - i))];
            num += w * values[static_cast<std::size_t>(k)];
            den += w;
        }
        out[static_cast<std::size_t>(i)] = num / den;
    }
    return out;
}

EsgSeries interpolate_esg_daily(const FiscalEsgTable& table, const TradingCalendar& calendar,
                                const SmootherConfig& cfg, const FiscalYearEnd& fy_end,
                                EsgInterpolationReport* report) {
    if (table.entries.empty()) throw Error(ErrorCode::EmptyTable, "no fiscal-year scores");
    if (calendar.empty()) throw Error(ErrorCode::EmptyInput, "empty calendar");

    const auto& dates = calendar.dates();
    struct Anchor {
        double position;  // trading-day index, negative before the calendar
        double score;
        Date date;
    };
    std::vector<Anchor> anchors;
    for (const auto& e : table.entries) {
        const Date end = fiscal_year_end(e.fiscal_year, fy_end);
        auto it = std::upper_bound(dates.begin(), dates.end(), end);
        Anchor a{};
        if (it == dates.begin()) {
            a = {virtual_position(end, dates.front()), e.score, end};
        } else {
            --it;
            a = {static_cast<double>(it - dates.begin()), e.score, *it};
        }
        // Two fiscal years with no trading day between them: the later one wins.
        if (!anchors.empty() && a.position <= anchors.back().position) anchors.pop_back();
        anchors.push_back(a);
    }

    EsgInterpolationReport local;
    std::vector<double> linear(dates.size());
    for (std::size_t i = 0; i < dates.size(); ++i) {
        const double pos = static_cast<double>(i);
        if (pos < anchors.front().position) {
            linear[i] = anchors.front().score;
            ++local.days_before_first_fy;
        } else if (pos >= anchors.back().position) {
            linear[i] = anchors.back().score;
            if (pos > anchors.back().position) ++local.days_after_last_fy;
        } else {
            auto hi = std::upper_bound(anchors.begin(), anchors.end(), pos,
                                       [](double p, const Anchor& a) { return p < a.position; });
            auto lo = hi - 1;
            const double w = (pos - lo->position) / (hi->position - lo->position);
            linear[i] = lo->score + w * (hi->score - lo->score);
        }
    }
    for (const auto& a : anchors) local.anchors.push_back(a.date);
    if (report) *report = std::move(local);

    return EsgSeries{calendar, gaussian_moving_average(linear, cfg)};
}

EsgSeries index_esg(const std::vector<EsgComponent>& components) {
    if (components.empty()) throw Error(ErrorCode::EmptyInput, "no index components");
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
            throw Error(ErrorCode::InvalidArgument, "index weights must be finite and >= 0");
        }
        require_same_calendar(c.series.calendar, components.front().series.calendar,
                              "index components are on different calendars");
        total += c.weight;
    }
    if (total <= 0.0) throw Error(ErrorCode::AllZeroWeights, "index weights sum to zero");

    EsgSeries out{components.front().series.calendar,
                  std::vector<double>(components.front().series.size(), 0.0)};
    for (const auto& c : components) {
        const double w = c.weight / total;
        for (std::size_t i = 0; i < out.size(); ++i) out.score[i] += w * c.series.score[i];
    }
    return out;
}

EsgSeries index_esg_dated(const std::map<std::string, EsgSeries>& components,
                          const std::vector<WeightSnapshot>& snapshots) {
    if (components.empty() || snapshots.empty()) {
        throw Error(ErrorCode::EmptyInput, "dated index ESG needs components and weight snapshots");
    }
    const TradingCalendar& cal = components.begin()->second.calendar;
    for (const auto& [ticker, s] : components) {
        require_same_calendar(s.calendar, cal, "index components are on different calendars");
    }
    auto sorted = snapshots;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& l, const auto& r) { return l.effective < r.effective; });

    EsgSeries out{cal, std::vector<double>(cal.size(), 0.0)};
    std::size_t snap = 0;
    for (std::size_t i = 0; i < cal.size(); ++i) {
        while (snap + 1 < sorted.size() && !(cal[i] < sorted[snap + 1].effective)) ++snap;
        double total = 0.0;
        double acc = 0.0;
        for (const auto& [ticker, w] : sorted[snap].weights) {
            auto it = components.find(ticker);
            if (it == components.end()) {
                throw Error(ErrorCode::CalendarMismatch, "no ESG series for weighted component " + ticker);
            }
            if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative index weight for " + ticker);
            total += w;
            acc += w * it->second.score[i];
        }
        if (total <= 0.0) {
            throw Error(ErrorCode::AllZeroWeights, "index weights sum to zero on " + format_date(cal[i]));
        }
        out.score[i] = acc / total;
    }
    return out;
}

std::map<std::string, double> load_index_weights(const std::filesystem::path& path) {
    auto j = read_json(path);
    std::map<std::string, double> out;
    try {
        for (const auto& [ticker, w] : j.items()) out[ticker] = w.get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return out;
}

std::vector<WeightSnapshot> load_dated_weights(const std::filesystem::path& path) {
    auto j = read_json(path);
    std::vector<WeightSnapshot> out;
    try {
        for (const auto& [date, weights] : j.items()) {
            WeightSnapshot s{parse_date(date), {}};
            for (const auto& [ticker, w] : weights.items()) s.weights[ticker] = w.get<double>();
            out.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return out;
}

RelEsgSeries relative_esg(const EsgSeries& stock, const EsgSeries& market) {
    require_same_calendar(stock.calendar, market.calendar, "stock and market ESG calendars differ");
    RelEsgSeries out{stock.calendar, std::vector<double>(stock.size())};
    for (std::size_t i = 0; i < stock.size(); ++i) {
        if (market.score[i] == 0.0) {
            throw Error(ErrorCode::DivisionByZero,
                        "market ESG score is zero on " + format_date(stock.calendar[i]));
        }
        out.rel[i] = (stock.score[i] - market.score[i]) / market.score[i];
    }
    return out;
}

PriceSeries esg_adjusted_prices(const PriceSeries& financial, const RelEsgSeries& rel, double gamma_esg) {
    require_same_calendar(financial.calendar, rel.calendar, "price and relative-ESG calendars differ");
    PriceSeries out{financial.calendar, std::vector<double>(financial.size())};
    for (std::size_t i = 0; i < financial.size(); ++i) {
        out.values[i] = financial.values[i] * (1.0 + gamma_esg * rel.rel[i]);
    }
    return out;
}

EsgSeries load_esg_series(const std::filesystem::path& path) {
    auto s = load_price_series(path);
    return EsgSeries{std::move(s.calendar), std::move(s.values)};
}

std::string to_csv(const EsgSeries& series) {
    return to_csv(PriceSeries{series.calendar, series.score}, "score");
}

}  // namespace bbsm
