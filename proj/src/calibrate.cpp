#include "bbsm/calibrate.hpp"

#include "bbsm/error.hpp"
#include "bbsm/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

namespace bbsm {

namespace {

constexpr double kFeasibilityEps = 1e-9;

double quantize(double v) { return std::nearbyint(v * 1e12); }

}  // namespace

std::array<double, 5> RiskyParams::tilde() const {
    const double sq = std::sqrt(delta);
    return {a * delta, mu * delta, v * sq, sigma * sq, gamma * sq};
}

RiskyParams RiskyParams::from_tilde(const std::array<double, 5>& t, double delta) {
    const double sq = std::sqrt(delta);
    RiskyParams p;
    p.a = t[0] / delta;
    p.mu = t[1] / delta;
    p.v = t[2] / sq;
    p.sigma = t[3] / sq;
    p.gamma = t[4] / sq;
    p.delta = delta;
    return p;
}

RiskyParams fit_risky_params(const std::vector<double>& changes, const std::vector<double>& lagged_prices,
                             const CsyPath& path, double delta, const FitOptions& opts) {
    const std::size_t n = changes.size();
    if (lagged_prices.size() != n || path.xi.size() != n || path.h_of_x.size() != n + 1) {
        throw Error(ErrorCode::LengthMismatch, "changes, lagged prices and path are not aligned");
    }
    if (n < std::max<std::size_t>(opts.min_observations, 6)) {
        throw Error(ErrorCode::TooFewObservations,
                    std::to_string(n) + " observations, need " + std::to_string(opts.min_observations));
    }
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 5);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    std::set<std::pair<double, double>> seen;
    std::vector<std::pair<double, double>> constraint_rows;
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double a = lagged_prices[k];
        const double xi = path.xi[k];
        const double h = path.h_of_x[k];
        X.row(i) << 1.0, a, xi, a * xi, h * xi;
        y(i) = changes[k];
        if (seen.emplace(quantize(a), quantize(h)).second) constraint_rows.emplace_back(a, h);
    }
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(constraint_rows.size()), 5);
    for (std::size_t r = 0; r < constraint_rows.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        G(i, 2) = 1.0;
        G(i, 3) = constraint_rows[r].first;
        G(i, 4) = constraint_rows[r].second;
    }

    const auto sol = solve_cone_constrained_lsq(X, y, G);
    std::array<double, 5> t{};
    for (int j = 0; j < 5; ++j) t[static_cast<std::size_t>(j)] = sol.coef(j);

    for (std::size_t k = 0; k < n; ++k) {
        const double g = t[2] + t[3] * lagged_prices[k] + t[4] * path.h_of_x[k];
        if (g < -kFeasibilityEps) {
            throw Error(ErrorCode::Infeasible, "volatility constraint violated at observation " +
                                                   std::to_string(k) + " (" + format_real(g) + ")");
        }
    }

    RiskyParams p = RiskyParams::from_tilde(t, delta);
    p.a0 = lagged_prices.front();
    p.observations = n;
    p.active_constraints = sol.active.size();
    p.kkt_residual = sol.kkt_residual;

    const Eigen::VectorXd resid = y - X * sol.coef;
    std::vector<double> res(resid.data(), resid.data() + resid.size());
    p.adj_r2 = adjusted_r2(res, changes, 4);

    const double s2 = resid.squaredNorm() / static_cast<double>(n - 5);
    const Eigen::VectorXd scale = X.colwise().norm().transpose();
    const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd inv = (Xs.transpose() * Xs).ldlt().solve(Eigen::MatrixXd::Identity(5, 5));
    const double sq = std::sqrt(delta);
    const std::array<double, 5> detilde{delta, delta, sq, sq, sq};
    for (int j = 0; j < 5; ++j) {
        const double var = s2 * inv(j, j) / (scale(j) * scale(j));
        p.std_errors[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, var)) / detilde[static_cast<std::size_t>(j)];
    }
    return p;
}

RiskyParams fit_risky_params(const PriceSeries& stock, const CsyPath& path, const FitOptions& opts) {
    if (!(stock.calendar == path.calendar)) {
        throw Error(ErrorCode::CalendarMismatch, "stock and market path calendars differ");
    }
    const auto changes = price_changes(stock);
    std::vector<double> lagged(stock.values.begin(), stock.values.end() - 1);
    return fit_risky_params(changes.change, lagged, path, path.delta, opts);
}

std::vector<double> build_beta_series(const std::vector<double>& daily_rates, double beta0, double delta) {
    if (beta0 == 0.0) throw Error(ErrorCode::InvalidArgument, "beta0 must be nonzero");
    std::vector<double> beta(daily_rates.size() + 1);
    beta[0] = beta0;
    for (std::size_t k = 0; k < daily_rates.size(); ++k) beta[k + 1] = (1.0 + daily_rates[k] * delta) * beta[k];
    return beta;
}

PriceSeries build_beta_series(const RateSeries& rates, double beta0, double delta, double days_per_year) {
    if (rates.size() == 0) throw Error(ErrorCode::EmptyInput, "no rates");
    std::vector<double> daily(rates.size() - 1);
    for (std::size_t k = 0; k + 1 < rates.size(); ++k) daily[k] = rates.annualized_yield[k] / days_per_year;
    return PriceSeries{rates.calendar, build_beta_series(daily, beta0, delta)};
}

RisklessParams fit_riskless_params(const std::vector<double>& beta, double beta0, double delta) {
    if (beta.size() < 3) throw Error(ErrorCode::TooShort, "beta series needs at least three values");
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    const std::size_t n = beta.size() - 1;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    std::vector<double> dep(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        X(i, 0) = beta0;
        X(i, 1) = beta[k];
        y(i) = (beta[k + 1] - beta[k]) / delta;
        dep[k] = y(i);
    }
    const Eigen::VectorXd coef = solve_lsq(X, y);
    const Eigen::VectorXd resid = y - X * coef;
    RisklessParams p;
    p.rho = coef(0);
    p.r = coef(1);
    p.beta0 = beta0;
    if (n > 2) {
        std::vector<double> res(resid.data(), resid.data() + resid.size());
        try {
            p.adj_r2 = adjusted_r2(res, dep, 1);
        } catch (const Error&) {
            p.adj_r2 = 1.0;  // exact fit of a dependent variable with no variance
        }
    }
    return p;
}

NormalizedParams reparameterize(const RiskyParams& params, double a0) {
    if (!(a0 > 0.0)) throw Error(ErrorCode::NonpositiveA0, "A0 must be positive, got " + format_real(a0));
    return {params.a / a0, params.mu, params.v / a0, params.sigma, params.gamma / a0};
}

RiskyParams denormalize(const NormalizedParams& params, double a0, double delta) {
    if (!(a0 > 0.0)) throw Error(ErrorCode::NonpositiveA0, "A0 must be positive, got " + format_real(a0));
    RiskyParams p;
    p.a = params.a_over_a0 * a0;
    p.mu = params.mu;
    p.v = params.v_over_a0 * a0;
    p.sigma = params.sigma;
    p.gamma = params.gamma_over_a0 * a0;
    p.delta = delta;
    p.a0 = a0;
    return p;
}

double adjusted_r2_from_r2(double r2, std::size_t n, std::size_t k) {
    if (n <= k + 1) {
        throw Error(ErrorCode::DegenerateDenominator, "adjusted R^2 needs n > k + 1");
    }
    if (k == 0) return r2;
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    return 1.0 - (1.0 - r2) * (nn - 1.0) / (nn - kk - 1.0);
}

double adjusted_r2(const std::vector<double>& residuals, const std::vector<double>& dependent, std::size_t k) {
    if (residuals.size() != dependent.size()) {
        throw Error(ErrorCode::LengthMismatch, "residuals and dependent variable differ in length");
    }
    const std::size_t n = dependent.size();
    if (n <= k + 1) throw Error(ErrorCode::DegenerateDenominator, "adjusted R^2 needs n > k + 1");
    double mean = 0.0;
    for (double d : dependent) mean += d;
    mean /= static_cast<double>(n);
    double tss = 0.0;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tss += (dependent[i] - mean) * (dependent[i] - mean);
        rss += residuals[i] * residuals[i];
    }
    if (!(tss > 0.0)) throw Error(ErrorCode::DegenerateDenominator, "dependent variable has no variance");
    return adjusted_r2_from_r2(1.0 - rss / tss, n, k);
}

MarketPriceOfRisk market_price_of_risk(double phi, double chi, double psi) {
    if (!(psi > 0.0)) {
        throw Error(ErrorCode::NonpositiveVolatility, "psi must be positive, got " + format_real(psi));
    }
    const double theta = (phi - chi) / psi;
    return {theta, theta > 0.0};
}

std::vector<double> model_change_series(const RiskyParams& params, const std::vector<double>& lagged_prices,
                                        const CsyPath& path) {
    const std::size_t n = lagged_prices.size();
    if (path.xi.size() < n || path.h_of_x.size() < n) {
        throw Error(ErrorCode::LengthMismatch, "path shorter than lagged prices");
    }
    const auto t = params.tilde();
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = lagged_prices[k];
        out[k] = t[0] + t[1] * a + (t[2] + t[3] * a + t[4] * path.h_of_x[k]) * path.xi[k];
    }
    return out;
}

PriceSeries generate_risky_path(const RiskyParams& params, const CsyPath& path, double a0, double noise_sd,
                                std::uint64_t seed) {
    const auto t = params.tilde();
    UniformStream rng(seed);
    std::vector<double> values(path.steps() + 1);
    values[0] = a0;
    for (std::size_t k = 0; k < path.steps(); ++k) {
        const double a = values[k];
        double eps = 0.0;
        if (noise_sd > 0.0) {
            // Box-Muller
            const double u1 = 1.0 - rng.next();
            const double u2 = rng.next();
            eps = noise_sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
        values[k + 1] = a + t[0] + t[1] * a + (t[2] + t[3] * a + t[4] * path.h_of_x[k]) * path.xi[k] + eps;
    }
    return PriceSeries{path.calendar, std::move(values)};
}

double silverman_bandwidth(const std::vector<double>& data) {
    if (data.size() < 2) throw Error(ErrorCode::TooShort, "bandwidth needs at least two points");
    const double n = static_cast<double>(data.size());
    double mean = 0.0;
    for (double d : data) mean += d;
    mean /= n;
    double ss = 0.0;
    for (double d : data) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (n - 1.0));

    auto sorted = data;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) throw Error(ErrorCode::ZeroVariance, "data has no spread");
    return 0.9 * spread * std::pow(n, -0.2);
}

std::vector<double> gaussian_kde(const std::vector<double>& data, const std::vector<double>& grid, double bandwidth) {
    if (!(bandwidth > 0.0)) {
        throw Error(ErrorCode::NonpositiveBandwidth, "bandwidth must be positive, got " + format_real(bandwidth));
    }
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "no data for density estimate");
    auto sorted = data;
    std::sort(sorted.begin(), sorted.end());
    const double norm = 1.0 / (static_cast<double>(data.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    const double cutoff = 40.0 * bandwidth;  // exp(-800) underflows to 0
    std::vector<double> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto lo = std::lower_bound(sorted.begin(), sorted.end(), grid[g] - cutoff);
        auto hi = std::upper_bound(lo, sorted.end(), grid[g] + cutoff);
        double acc = 0.0;
        for (auto it = lo; it != hi; ++it) {
            const double u = (grid[g] - *it) / bandwidth;
            acc += std::exp(-0.5 * u * u);
        }
        out[g] = acc * norm;
    }
    return out;
}

DensityPair kde_compare(const std::vector<double>& empirical, const std::vector<double>& model, double bandwidth,
                        const KdeGrid& grid) {
    if (!(bandwidth > 0.0)) {
        throw Error(ErrorCode::NonpositiveBandwidth, "bandwidth must be positive, got " + format_real(bandwidth));
    }
    if (empirical.empty() || model.empty()) throw Error(ErrorCode::EmptyInput, "both samples must be non-empty");
    if (grid.points < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two points");
    auto [emin, emax] = std::minmax_element(empirical.begin(), empirical.end());
    auto [mmin, mmax] = std::minmax_element(model.begin(), model.end());
    const double lo = std::min(*emin, *mmin) - grid.pad_bandwidths * bandwidth;
    const double hi = std::max(*emax, *mmax) + grid.pad_bandwidths * bandwidth;

    DensityPair out;
    out.bandwidth = bandwidth;
    out.grid.resize(grid.points);
    const double step = (hi - lo) / static_cast<double>(grid.points - 1);
    for (std::size_t i = 0; i < grid.points; ++i) out.grid[i] = lo + step * static_cast<double>(i);
    out.grid.back() = hi;
    out.empirical_pdf = gaussian_kde(empirical, out.grid, bandwidth);
    out.model_pdf = gaussian_kde(model, out.grid, bandwidth);
    return out;
}

std::string to_csv(const DensityPair& pair) {
    std::string out = "x,empirical_pdf,model_pdf,bandwidth\n";
    for (std::size_t i = 0; i < pair.grid.size(); ++i) {
        out += format_real(pair.grid[i]) + ',' + format_real(pair.empirical_pdf[i]) + ',' +
               format_real(pair.model_pdf[i]) + ',' + format_real(pair.bandwidth) + '\n';
    }
    return out;
}

}  // namespace bbsm
