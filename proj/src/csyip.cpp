#include "bbsm/csyip.hpp"

#include "bbsm/error.hpp"

#include <cmath>
#include <numbers>

namespace bbsm {

std::string to_string(FilterKind kind) {
    switch (kind) {
    case FilterKind::Power: return "power";
    case FilterKind::Gaussian: return "gaussian";
    case FilterKind::Linear: return "linear";
    case FilterKind::Unit: return "unit";
    }
    return "power";
}

FilterKind parse_filter_kind(const std::string& name) {
    if (name == "power") return FilterKind::Power;
    if (name == "gaussian") return FilterKind::Gaussian;
    if (name == "linear") return FilterKind::Linear;
    if (name == "unit") return FilterKind::Unit;
    throw Error(ErrorCode::ConfigError, "unknown filter '" + name + "'");
}

BernoulliLevels bernoulli_levels(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorCode::ProbabilityOutOfRange, "up probability " + format_real(p) + " not in (0,1)");
    }
    return {std::sqrt((1.0 - p) / p), std::sqrt(p / (1.0 - p))};
}

ChangeSeries price_changes(const PriceSeries& series) {
    if (series.size() < 2) throw Error(ErrorCode::TooShort, "need at least two values for changes");
    ChangeSeries out{series.calendar.drop_front(1), std::vector<double>(series.size() - 1)};
    for (std::size_t k = 1; k < series.size(); ++k) {
        out.change[k - 1] = series.values[k] - series.values[k - 1];
    }
    return out;
}

std::vector<double> standardize(const std::vector<double>& changes) {
    if (changes.size() < 2) throw Error(ErrorCode::TooShort, "need at least two changes to standardize");
    const double n = static_cast<double>(changes.size());
    double mean = 0.0;
    for (double c : changes) mean += c;
    mean /= n;
    double ss = 0.0;
    for (double c : changes) ss += (c - mean) * (c - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "changes have zero sample variance");
    std::vector<double> z(changes.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (changes[i] - mean) / sd;
    return z;
}

double estimate_up_probability(const std::vector<double>& z) {
    if (z.empty()) throw Error(ErrorCode::EmptyInput, "no standardized changes");
    std::size_t ups = 0;
    for (double v : z) {
        if (v >= 0.0) ++ups;
    }
    if (ups == 0 || ups == z.size()) {
        throw Error(ErrorCode::DegenerateProbability, "all standardized changes have the same sign");
    }
    return static_cast<double>(ups) / static_cast<double>(z.size());
}

std::vector<double> bernoulli_signs(const std::vector<double>& z, double p) {
    const auto lv = bernoulli_levels(p);
    std::vector<double> xi(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) xi[i] = z[i] >= 0.0 ? lv.up : -lv.down;
    return xi;
}

std::vector<double> cumulative_path(const std::vector<double>& xi, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    const double step = std::sqrt(delta);
    std::vector<double> x(xi.size() + 1, 0.0);
    for (std::size_t k = 0; k < xi.size(); ++k) x[k + 1] = x[k] + step * xi[k];
    return x;
}

double h_eval(double x, const FilterSpec& spec) {
    switch (spec.kind) {
    case FilterKind::Power: {
        if (x == 0.0) return 0.0;
        const double mag = std::pow(std::fabs(x) / spec.d, 0.6);
        return x > 0.0 ? mag : -mag;
    }
    case FilterKind::Gaussian: {
        const double u = x / spec.d;
        return std::exp(-0.5 * u * u) / (std::sqrt(2.0 * std::numbers::pi) * spec.d);
    }
    case FilterKind::Linear: return x;
    case FilterKind::Unit: return 1.0;
    }
    return 0.0;
}

std::vector<double> integral_path(const std::vector<double>& xi, const std::vector<double>& x,
                                  const FilterSpec& spec, double delta) {
    if (x.size() != xi.size() + 1) {
        throw Error(ErrorCode::LengthMismatch, "x must have one more entry than xi");
    }
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    const double step = std::sqrt(delta);
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t k = 0; k < xi.size(); ++k) y[k + 1] = y[k] + step * xi[k] * h_eval(x[k], spec);
    return y;
}

CsyPath build_csy_path(const PriceSeries& index, const FilterSpec& spec, double delta) {
    if (index.size() < 3) throw Error(ErrorCode::TooShort, "index needs at least three values");
    if (spec.kind != FilterKind::Linear && spec.kind != FilterKind::Unit && !(spec.d > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "filter scale d must be positive");
    }
    const auto changes = price_changes(index);
    CsyPath path;
    path.calendar = index.calendar;
    path.delta = delta;
    path.filter = spec;
    path.z = standardize(changes.change);
    path.up_prob = estimate_up_probability(path.z);
    path.xi = bernoulli_signs(path.z, path.up_prob);
    path.x = cumulative_path(path.xi, delta);
    path.h_of_x.resize(path.x.size());
    for (std::size_t k = 0; k < path.x.size(); ++k) path.h_of_x[k] = h_eval(path.x[k], spec);
    path.y = integral_path(path.xi, path.x, spec, delta);
    return path;
}

std::string to_csv(const CsyPath& path) {
    std::string out = "k,date,z,xi,x,h_of_x,y,up_prob\n";
    for (std::size_t k = 0; k < path.x.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        if (k < path.calendar.size()) out += format_date(path.calendar[k]);
        out += ',';
        if (k > 0) out += format_real(path.z[k - 1]);
        out += ',';
        if (k > 0) out += format_real(path.xi[k - 1]);
        out += ',' + format_real(path.x[k]);
        out += ',' + format_real(path.h_of_x[k]);
        out += ',' + format_real(path.y[k]);
        out += ',' + format_real(path.up_prob);
        out += '\n';
    }
    return out;
}

double MarketIndexParams::up_probability(double delta) const {
    return p0 + p1 * std::sqrt(delta) + p2 * delta;
}

std::uint64_t UniformStream::next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double UniformStream::next() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

TradingCalendar weekday_calendar(Date start, std::size_t n) {
    std::vector<Date> dates;
    dates.reserve(n);
    std::chrono::sys_days d{start};
    while (dates.size() < n) {
        std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) dates.emplace_back(d);
        d += std::chrono::days{1};
    }
    return TradingCalendar(std::move(dates));
}

PriceSeries simulate_market_index(const MarketIndexParams& params, std::size_t n, double delta,
                                  std::uint64_t seed, Date start) {
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    const double p = params.up_probability(delta);
    const auto lv = bernoulli_levels(p);
    const double sq = std::sqrt(delta);
    UniformStream rng(seed);
    std::vector<double> values(n + 1);
    values[0] = params.a0;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = values[k];
        const double phi = params.a + params.mu * a;
        const double psi = params.v + params.sigma * a;
        if (psi < 0.0) {
            throw Error(ErrorCode::NegativeVolatility,
                        "psi = " + format_real(psi) + " at step " + std::to_string(k));
        }
        const bool up = rng.next() < p;
        values[k + 1] = a + phi * delta + (up ? lv.up : -lv.down) * psi * sq;
    }
    return PriceSeries{weekday_calendar(start, n + 1), std::move(values)};
}

}  // namespace bbsm
