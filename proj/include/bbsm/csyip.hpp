#pragma once

#include "bbsm/ingest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bbsm {

/// One-step value changes c[k] = value[k] - value[k-1]; the calendar is the
/// source calendar minus its first day.
struct ChangeSeries {
    TradingCalendar calendar;
    std::vector<double> change;

    std::size_t size() const noexcept { return change.size(); }
};

enum class FilterKind {
    Power,     ///< sign(x) |x/d|^{3/5}
    Gaussian,  ///< exp(-x^2 / (2 d^2)) / (sqrt(2 pi) d)
    Linear,    ///< x (validation filter)
    Unit,      ///< 1 (validation filter)
};

/// Path filter h. `d` is the scale (Power, Gaussian); ignored otherwise.
struct FilterSpec {
    FilterKind kind = FilterKind::Power;
    double d = 10.0;

    static FilterSpec power(double d) { return {FilterKind::Power, d}; }
    static FilterSpec gaussian(double sigma_h) { return {FilterKind::Gaussian, sigma_h}; }
    static FilterSpec linear() { return {FilterKind::Linear, 1.0}; }
    static FilterSpec unit() { return {FilterKind::Unit, 1.0}; }
};

std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& name);

/// The two Bernoulli levels: xi takes +up with probability p and -down otherwise.
struct BernoulliLevels {
    double up;    ///< sqrt((1-p)/p)
    double down;  ///< sqrt(p/(1-p)), a magnitude
};

BernoulliLevels bernoulli_levels(double p);

/// Processes built from a market index.
///
/// Indexing: for N changes, `z` and `xi` have N entries where xi[i] is the
/// sign step taken on day i+1; `x`, `h_of_x` and `y` have N+1 entries with
/// x[0] = y[0] = 0 and
///   x[k] - x[k-1] = sqrt(delta) xi[k-1]
///   y[k] - y[k-1] = sqrt(delta) xi[k-1] h_of_x[k-1].
struct CsyPath {
    TradingCalendar calendar;  ///< N+1 days, aligned with x/h_of_x/y
    std::vector<double> z;
    double up_prob = 0.5;
    std::vector<double> xi;
    std::vector<double> x;
    std::vector<double> h_of_x;
    std::vector<double> y;
    double delta = 1.0;
    FilterSpec filter;

    std::size_t steps() const noexcept { return xi.size(); }
};

ChangeSeries price_changes(const PriceSeries& series);

/// (c - mean(c)) / sd(c) over the whole window, n-1 denominator.
std::vector<double> standardize(const std::vector<double>& changes);

/// Fraction of entries >= 0. Throws DegenerateProbability when it is 0 or 1.
double estimate_up_probability(const std::vector<double>& z);

std::vector<double> bernoulli_signs(const std::vector<double>& z, double p);

/// Partial sums of sqrt(delta) xi with a leading 0.
std::vector<double> cumulative_path(const std::vector<double>& xi, double delta);

double h_eval(double x, const FilterSpec& spec);

std::vector<double> integral_path(const std::vector<double>& xi, const std::vector<double>& x,
                                  const FilterSpec& spec, double delta);

CsyPath build_csy_path(const PriceSeries& index, const FilterSpec& spec, double delta = 1.0);

/// Long-format CSV: k,date,z,xi,x,h_of_x,y,up_prob. Row k = 0 has empty z/xi.
std::string to_csv(const CsyPath& path);

/// Constant-coefficient market-index dynamics with up-probability
/// p0 + p1 sqrt(delta) + p2 delta.
struct MarketIndexParams {
    double a = 0.0;
    double mu = 0.0;
    double v = 1.0;
    double sigma = 0.0;
    double p0 = 0.5;
    double p1 = 0.0;
    double p2 = 0.0;
    double a0 = 100.0;

    double up_probability(double delta) const;
};

/// Counter-based uniform stream on [0, 1) with a fixed bit recipe, so
/// simulations are reproducible across standard libraries.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : state_(seed) {}
    double next();
    std::uint64_t next_u64();

private:
    std::uint64_t state_;
};

/// Simulated index path of n+1 values on a synthetic weekday calendar
/// starting at `start`.
PriceSeries simulate_market_index(const MarketIndexParams& params, std::size_t n, double delta,
                                  std::uint64_t seed, Date start = Date{std::chrono::year{2016},
                                                                        std::chrono::January,
                                                                        std::chrono::day{4}});

/// n consecutive weekdays from `start` (inclusive if a weekday).
TradingCalendar weekday_calendar(Date start, std::size_t n);

}  // namespace bbsm
