#pragma once

#include "bbsm/csyip.hpp"
#include "bbsm/ingest.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace bbsm {

/// Per-day risky-asset coefficients of the path-dependent model
///   c[k+1] = (a + mu A_k) delta + (v + sigma A_k + gamma h(X_k)) sqrt(delta) xi[k+1].
struct RiskyParams {
    double a = 0.0;
    double mu = 0.0;
    double v = 0.0;
    double sigma = 0.0;
    double gamma = 0.0;
    double delta = 1.0;
    double adj_r2 = 0.0;
    double a0 = 1.0;  ///< initial asset value the fit was made from

    /// Standard errors of (a, mu, v, sigma, gamma), unconstrained OLS formula.
    std::array<double, 5> std_errors{};
    double kkt_residual = 0.0;
    std::size_t observations = 0;
    std::size_t active_constraints = 0;

    double phi(double asset) const { return a + mu * asset; }
    double psi(double asset) const { return v + sigma * asset; }
    /// Regression-scale ("tilde") coefficients: (a, mu) * delta, (v, sigma, gamma) * sqrt(delta).
    std::array<double, 5> tilde() const;
    static RiskyParams from_tilde(const std::array<double, 5>& t, double delta);
};

/// A0-independent form: a, v and gamma divided by A0.
struct NormalizedParams {
    double a_over_a0 = 0.0;
    double mu = 0.0;
    double v_over_a0 = 0.0;
    double sigma = 0.0;
    double gamma_over_a0 = 0.0;
};

/// Riskless-asset coefficients with the reparameterized rho:
///   beta[k+1] = beta[k] + (rho beta0 + r beta[k]) delta.
struct RisklessParams {
    double rho = 0.0;
    double r = 0.0;
    double beta0 = 1.0;
    double adj_r2 = 0.0;

    double chi(double beta) const { return rho * beta0 + r * beta; }
};

struct DensityPair {
    std::vector<double> grid;
    std::vector<double> empirical_pdf;
    std::vector<double> model_pdf;
    double bandwidth = 0.0;
};

struct FitOptions {
    std::size_t min_observations = 50;
};

/// Constrained fit of the five tilde coefficients. `changes[k]` is the step
/// from day k to k+1, `lagged_prices[k]` is A_k, and path.xi[k] / path.h_of_x[k]
/// are the matching market regressors.
RiskyParams fit_risky_params(const std::vector<double>& changes, const std::vector<double>& lagged_prices,
                             const CsyPath& path, double delta, const FitOptions& opts = {});

/// Convenience form: the stock series must share the path's calendar.
RiskyParams fit_risky_params(const PriceSeries& stock, const CsyPath& path, const FitOptions& opts = {});

/// beta[k+1] = (1 + r_k delta) beta[k] with r_k = annual yield / days_per_year.
PriceSeries build_beta_series(const RateSeries& rates, double beta0, double delta = 1.0,
                              double days_per_year = 252.0);
std::vector<double> build_beta_series(const std::vector<double>& daily_rates, double beta0, double delta = 1.0);

/// OLS of (beta[k+1] - beta[k]) / delta on [beta0, beta[k]].
RisklessParams fit_riskless_params(const std::vector<double>& beta, double beta0, double delta = 1.0);

NormalizedParams reparameterize(const RiskyParams& params, double a0);
RiskyParams denormalize(const NormalizedParams& params, double a0, double delta = 1.0);

/// 1 - (1 - R^2)(n - 1)/(n - k - 1) with R^2 against the centred dependent variable.
double adjusted_r2(const std::vector<double>& residuals, const std::vector<double>& dependent, std::size_t k);
double adjusted_r2_from_r2(double r2, std::size_t n, std::size_t k);

struct MarketPriceOfRisk {
    double theta;
    bool positive;  ///< false flags a violation of the no-arbitrage sign condition
};

MarketPriceOfRisk market_price_of_risk(double phi, double chi, double psi);

/// Fitted changes a~ + mu~ A_k + (v~ + sigma~ A_k + gamma~ h(X_k)) xi[k+1].
std::vector<double> model_change_series(const RiskyParams& params, const std::vector<double>& lagged_prices,
                                        const CsyPath& path);

/// Synthetic asset path driven by a market path:
/// A[k+1] = A[k] + model change + N(0, noise_sd^2).
PriceSeries generate_risky_path(const RiskyParams& params, const CsyPath& path, double a0, double noise_sd = 0.0,
                                std::uint64_t seed = 1);

/// 0.9 min(sd, IQR/1.34) n^{-1/5}.
double silverman_bandwidth(const std::vector<double>& data);

struct KdeGrid {
    std::size_t points = 1024;
    double pad_bandwidths = 6.0;
};

std::vector<double> gaussian_kde(const std::vector<double>& data, const std::vector<double>& grid, double bandwidth);

/// Gaussian KDEs of both samples on a shared grid over the pooled range,
/// padded by `pad_bandwidths` on each side.
DensityPair kde_compare(const std::vector<double>& empirical, const std::vector<double>& model, double bandwidth,
                        const KdeGrid& grid = {});

std::string to_csv(const DensityPair& pair);

}  // namespace bbsm
