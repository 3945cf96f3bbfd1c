#pragma once

#include "bbsm/calibrate.hpp"
#include "bbsm/csyip.hpp"
#include "bbsm/pricer.hpp"

#include <cmath>
#include <functional>

namespace bbsm::testing {

inline double uniform(UniformStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.next(); }

inline double rel_err(double got, double want) {
    const double scale = std::max(std::fabs(want), 1e-300);
    return std::fabs(got - want) / scale;
}

struct Draw {
    RiskyParams params;
    RisklessParams riskless;
    PricingConfig cfg;
};

// Random parameters whose trees stay valid (eta > 0, q in (0,1)) up to T = 24.
inline Draw admissible_draw(UniformStream& rng, int max_t) {
    Draw d;
    d.params.a = uniform(rng, -0.05, 0.05);
    d.params.mu = uniform(rng, -5e-4, 5e-4);
    d.params.v = uniform(rng, 0.5, 1.5);
    d.params.sigma = uniform(rng, 0.0, 0.02);
    d.params.gamma = uniform(rng, -0.2, 0.2);
    d.riskless.rho = uniform(rng, -1e-3, 1e-3);
    d.riskless.r = uniform(rng, 0.0, 5e-4);
    d.cfg.a0 = 100.0;
    d.cfg.up_prob = uniform(rng, 0.45, 0.55);
    d.cfg.x_init = uniform(rng, -3.0, 3.0);
    d.cfg.split_depth = 0;
    d.riskless.beta0 = d.cfg.a0;
    d.cfg.beta_path = riskless_beta_path(d.riskless, d.cfg.a0, max_t);
    return d;
}

// Composite Simpson rule over [lo, hi] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double sum = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return sum * h / 3.0;
}

inline double std_normal_density(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// E[(a0 + s Z - K)^+] by quadrature.
inline double normal_call_by_quadrature(double a0, double strike, double s) {
    return simpson([&](double z) { return std::max(a0 + s * z - strike, 0.0) * std_normal_density(z); }, -12.0, 12.0,
                   200000);
}

// exp(-r tau) E[(a0 exp((r - vol^2/2) tau + vol sqrt(tau) Z) - K)^+] by quadrature.
inline double lognormal_call_by_quadrature(double a0, double strike, double vol_total, double r_tau) {
    return std::exp(-r_tau) * simpson(
                                  [&](double z) {
                                      const double st = a0 * std::exp(r_tau - 0.5 * vol_total * vol_total + vol_total * z);
                                      return std::max(st - strike, 0.0) * std_normal_density(z);
                                  },
                                  -12.0, 12.0, 200000);
}

}  // namespace bbsm::testing

namespace bbsm::testing {

inline double sample_mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double sample_cov(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = sample_mean(x);
    const double my = sample_mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

inline double sample_var(const std::vector<double>& x) { return sample_cov(x, x); }

}  // namespace bbsm::testing

namespace bbsm::testing {

struct SyntheticCase {
    RiskyParams truth;
    CsyPath path;
    PriceSeries stock;
};

// Generator coefficients well inside the volatility constraint.
inline RiskyParams reference_truth() {
    RiskyParams t;
    t.a = 0.05;
    t.mu = -1e-4;
    t.v = 0.5;
    t.sigma = 0.005;
    t.gamma = 0.1;
    return t;
}

inline SyntheticCase synthetic_case(const RiskyParams& truth, std::size_t n, double noise_sd, std::uint64_t seed,
                                    double a0 = 50.0) {
    MarketIndexParams m;
    m.a = 0.02;
    m.v = 1.0;
    m.sigma = 0.002;
    m.p0 = 0.52;
    const auto index = simulate_market_index(m, n, 1.0, 1000 + seed);
    SyntheticCase c;
    c.truth = truth;
    c.path = build_csy_path(index, FilterSpec::power(10.0), 1.0);
    c.stock = generate_risky_path(truth, c.path, a0, noise_sd, 5000 + seed);
    return c;
}

}  // namespace bbsm::testing
