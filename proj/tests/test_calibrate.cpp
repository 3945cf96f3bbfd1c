#include "bbsm/calibrate.hpp"
#include "bbsm/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace bbsm;
using namespace bbsm::testing;

namespace {

std::vector<double> lagged(const PriceSeries& s) { return {s.values.begin(), s.values.end() - 1}; }

std::array<double, 5> coefs(const RiskyParams& p) { return {p.a, p.mu, p.v, p.sigma, p.gamma}; }

// Independent restatement of the regression design and its residual norm.
struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

Design design(const std::vector<double>& changes, const std::vector<double>& lag, const CsyPath& path) {
    const auto n = static_cast<Eigen::Index>(changes.size());
    Design d{Eigen::MatrixXd(n, 5), Eigen::VectorXd(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        d.X.row(k) << 1.0, lag[i], path.xi[i], lag[i] * path.xi[i], path.h_of_x[i] * path.xi[i];
        d.y(k) = changes[i];
    }
    return d;
}

double residual_ss(const Design& d, const Eigen::VectorXd& b) { return (d.X * b - d.y).squaredNorm(); }

bool feasible(const Eigen::VectorXd& b, const std::vector<double>& lag, const CsyPath& path) {
    for (std::size_t k = 0; k < lag.size(); ++k) {
        if (b(2) + b(3) * lag[k] + b(4) * path.h_of_x[k] < -1e-9) return false;
    }
    return true;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

}  // namespace

TEST(FitRiskyParams, NoiseFreeRecovery) {
    const auto c = synthetic_case(reference_truth(), 1500, 0.0, 1);
    const auto fit = fit_risky_params(c.stock, c.path);
    const auto got = coefs(fit);
    const auto want = coefs(c.truth);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_LT(rel_err(got[j], want[j]), 1e-6) << "coefficient " << j;
    EXPECT_LE(fit.kkt_residual, 1e-8);
    EXPECT_EQ(fit.observations, 1500u);
    EXPECT_DOUBLE_EQ(fit.a0, 50.0);
}

TEST(FitRiskyParams, NoisyCoverageWithinThreeStandardErrors) {
    int covered = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        const auto c = synthetic_case(reference_truth(), 2000, 0.1, static_cast<std::uint64_t>(s));
        const auto fit = fit_risky_params(c.stock, c.path);
        const auto got = coefs(fit);
        const auto want = coefs(c.truth);
        bool all = true;
        for (std::size_t j = 0; j < 5; ++j) all = all && std::fabs(got[j] - want[j]) <= 3.0 * fit.std_errors[j];
        covered += all;
    }
    EXPECT_GE(covered, 90);
}

TEST(FitRiskyParams, ModelChangesReproduceNoiseFreeData) {
    const auto c = synthetic_case(reference_truth(), 800, 0.0, 3);
    const auto fit = fit_risky_params(c.stock, c.path);
    const auto lag = lagged(c.stock);
    const auto fitted = model_change_series(fit, lag, c.path);
    const auto changes = price_changes(c.stock).change;
    for (std::size_t k = 0; k < fitted.size(); ++k) EXPECT_NEAR(fitted[k], changes[k], 1e-8);
}

TEST(FitRiskyParams, BindingConstraintBeatsClampedUnconstrained) {
    // A generator whose volatility goes negative on some days pushes the
    // unconstrained estimate out of the feasible cone.
    int binding = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        RiskyParams truth = reference_truth();
        truth.v = 0.02;
        truth.sigma = 0.0;
        truth.gamma = 0.6;
        const auto c = synthetic_case(truth, 600, 0.3, s);
        const auto changes = price_changes(c.stock).change;
        const auto lag = lagged(c.stock);
        const auto fit = fit_risky_params(changes, lag, c.path, 1.0);
        const auto d = design(changes, lag, c.path);
        Eigen::VectorXd b(5);
        b << fit.a, fit.mu, fit.v, fit.sigma, fit.gamma;
        EXPECT_TRUE(feasible(b, lag, c.path));

        Eigen::VectorXd clamped = d.X.householderQr().solve(d.y);
        if (!feasible(clamped, lag, c.path)) {
            ++binding;
            const Eigen::VectorXd drift = d.X.leftCols(2).householderQr().solve(d.y);
            clamped.setZero();
            clamped.head(2) = drift;
            EXPECT_GT(fit.active_constraints, 0u);
        }
        EXPECT_LE(residual_ss(d, b), residual_ss(d, clamped) * (1 + 1e-12));
        EXPECT_LE(fit.kkt_residual, 1e-8);
    }
    EXPECT_GT(binding, 0);
}

TEST(FitRiskyParams, Errors) {
    const auto c = synthetic_case(reference_truth(), 40, 0.0, 1);
    try {
        fit_risky_params(c.stock, c.path);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewObservations);
    }
    const auto big = synthetic_case(reference_truth(), 200, 0.0, 1);
    const std::vector<double> flat(200, 10.0);
    const auto changes = price_changes(big.stock).change;
    try {
        fit_risky_params(changes, flat, big.path, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
    }
    EXPECT_THROW(fit_risky_params(changes, std::vector<double>(10, 1.0), big.path, 1.0), Error);
}

TEST(FitRiskyParams, TildeRoundTrip) {
    RiskyParams p = reference_truth();
    const auto back = RiskyParams::from_tilde(RiskyParams{p.a, p.mu, p.v, p.sigma, p.gamma, 4.0}.tilde(), 4.0);
    EXPECT_DOUBLE_EQ(back.a, p.a);
    EXPECT_DOUBLE_EQ(back.v, p.v);
    EXPECT_DOUBLE_EQ(back.gamma, p.gamma);
}

TEST(NormalizedParams, InvariantUnderConsistentRescaling) {
    const double c = 7.5;
    RiskyParams base = reference_truth();
    RiskyParams scaled = base;
    scaled.a *= c;
    scaled.v *= c;
    scaled.gamma *= c;
    const auto one = synthetic_case(base, 1200, 0.05, 11, 50.0);
    const auto two = synthetic_case(scaled, 1200, 0.05 * c, 11, 50.0 * c);
    const auto n1 = reparameterize(fit_risky_params(one.stock, one.path), 50.0);
    const auto n2 = reparameterize(fit_risky_params(two.stock, two.path), 50.0 * c);
    EXPECT_LT(rel_err(n2.a_over_a0, n1.a_over_a0), 1e-8);
    EXPECT_LT(rel_err(n2.v_over_a0, n1.v_over_a0), 1e-8);
    EXPECT_LT(rel_err(n2.gamma_over_a0, n1.gamma_over_a0), 1e-8);
    EXPECT_LT(rel_err(n2.mu, n1.mu), 1e-8);
    EXPECT_LT(rel_err(n2.sigma, n1.sigma), 1e-8);
}

TEST(BuildBetaSeries, HandCompounding) {
    const auto b = build_beta_series(std::vector<double>{0.0001, 0.0001}, 100.0);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_DOUBLE_EQ(b[0], 100.0);
    EXPECT_NEAR(b[1], 100.01, 1e-12);
    EXPECT_NEAR(b[2], 100.020001, 1e-12);
}

TEST(BuildBetaSeries, ZeroAndConstantRates) {
    const auto z = build_beta_series(std::vector<double>(10, 0.0), 3.0);
    for (double v : z) EXPECT_EQ(v, 3.0);
    const double r = 2e-4;
    const auto b = build_beta_series(std::vector<double>(50, r), 2.0, 0.5);
    for (std::size_t k = 0; k < b.size(); ++k) {
        EXPECT_NEAR(b[k], 2.0 * std::pow(1 + r * 0.5, static_cast<double>(k)), 1e-13);
    }
    EXPECT_THROW(build_beta_series(std::vector<double>{0.1}, 0.0), Error);
}

TEST(BuildBetaSeries, AnnualYieldDividedByTradingDays) {
    const auto cal = weekday_calendar(parse_date("2016-01-04"), 3);
    const RateSeries rates{cal, {0.0252, 0.0504, 0.0}};
    const auto b = build_beta_series(rates, 1.0);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_DOUBLE_EQ(b.values[1], 1.0001);
    EXPECT_DOUBLE_EQ(b.values[2], 1.0001 * 1.0002);
    EXPECT_EQ(b.calendar, cal);
}

TEST(FitRisklessParams, ExactRecovery) {
    const double beta0 = 1.0;
    const double rho = -0.00139;
    const double r = 0.0014;
    std::vector<double> beta{beta0};
    for (int k = 0; k < 300; ++k) beta.push_back(beta.back() + (rho * beta0 + r * beta.back()));
    const auto fit = fit_riskless_params(beta, beta0);
    EXPECT_NEAR(fit.rho, rho, 1e-10);
    EXPECT_NEAR(fit.r, r, 1e-10);
}

TEST(FitRisklessParams, InvariantUnderBetaZeroScaling) {
    UniformStream rng(9);
    std::vector<double> daily(400);
    for (auto& d : daily) d = uniform(rng, 0.0, 2e-4);
    const auto b1 = build_beta_series(daily, 1.0);
    const auto b10 = build_beta_series(daily, 10.0);
    const auto f1 = fit_riskless_params(b1, 1.0);
    const auto f10 = fit_riskless_params(b10, 10.0);
    EXPECT_NEAR(f1.rho, f10.rho, 1e-10);
    EXPECT_NEAR(f1.r, f10.r, 1e-10);
    EXPECT_THROW(fit_riskless_params({1.0, 1.0}, 1.0), Error);
}

TEST(Reparameterize, ReferenceAndIdentity) {
    RiskyParams p;
    p.a = 0.0666;
    p.mu = 2.1e-4;
    p.v = 0.418;
    p.sigma = 7.96e-3;
    p.gamma = 0.172;
    const auto n = reparameterize(p, 0.0666 / 0.00278);
    EXPECT_NEAR(n.a_over_a0, 0.00278, 1e-15);
    const auto id = reparameterize(p, 1.0);
    EXPECT_EQ(id.a_over_a0, p.a);
    EXPECT_EQ(id.v_over_a0, p.v);
    EXPECT_EQ(id.gamma_over_a0, p.gamma);
    EXPECT_EQ(id.mu, p.mu);
    EXPECT_EQ(id.sigma, p.sigma);
    const auto half = reparameterize(p, 2.0);
    EXPECT_EQ(half.v_over_a0, p.v / 2.0);
    const auto back = denormalize(n, 0.0666 / 0.00278);
    EXPECT_NEAR(back.a, p.a, 1e-15);
    try {
        reparameterize(p, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonpositiveA0);
    }
}

TEST(AdjustedR2, Examples) {
    EXPECT_NEAR(adjusted_r2_from_r2(0.5, 102, 1), 0.495, 1e-15);
    const std::vector<double> dep{1, 2, 4, 3, 5, 7};
    EXPECT_DOUBLE_EQ(adjusted_r2(std::vector<double>(6, 0.0), dep, 2), 1.0);
    EXPECT_THROW(adjusted_r2_from_r2(0.5, 3, 2), Error);
}

TEST(AdjustedR2, NullFitSlightlyNegative) {
    UniformStream rng(4);
    const std::size_t n = 5000;
    const std::size_t k = 3;
    std::vector<double> dep(n);
    for (auto& d : dep) d = uniform(rng, -1, 1);
    const double mean = sample_mean(dep);
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = dep[i] - mean;
    const double adj = adjusted_r2(resid, dep, k);
    EXPECT_NEAR(adj, -static_cast<double>(k) / static_cast<double>(n - k - 1), 1e-12);
    EXPECT_LT(adj, 0.0);
}

TEST(AdjustedR2, NeverExceedsR2) {
    UniformStream rng(5);
    for (int t = 0; t < 500; ++t) {
        const double r2 = uniform(rng, -0.5, 1.0);
        const auto n = static_cast<std::size_t>(uniform(rng, 10, 3000));
        const auto k = static_cast<std::size_t>(uniform(rng, 0, 8));
        const double adj = adjusted_r2_from_r2(r2, n, k);
        if (k == 0) {
            EXPECT_DOUBLE_EQ(adj, r2);
        } else if (r2 < 1.0) {
            EXPECT_LT(adj, r2);
        }
    }
}

TEST(MarketPriceOfRisk, Examples) {
    const auto m = market_price_of_risk(0.2, 0.1, 0.5);
    EXPECT_NEAR(m.theta, 0.2, 1e-15);
    EXPECT_TRUE(m.positive);
    const auto z = market_price_of_risk(0.3, 0.3, 0.5);
    EXPECT_EQ(z.theta, 0.0);
    EXPECT_FALSE(z.positive);
    try {
        market_price_of_risk(0.2, 0.1, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonpositiveVolatility);
    }
}

TEST(ModelChangeSeries, Examples) {
    const auto c = synthetic_case(reference_truth(), 100, 0.0, 2);
    const auto lag = lagged(c.stock);
    for (double v : model_change_series(RiskyParams{}, lag, c.path)) EXPECT_EQ(v, 0.0);
    RiskyParams only_a;
    only_a.a = 0.37;
    for (double v : model_change_series(only_a, lag, c.path)) EXPECT_EQ(v, 0.37);
    std::vector<double> too_long(c.path.steps() + 5, 1.0);
    try {
        model_change_series(only_a, too_long, c.path);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
}

TEST(Kde, SinglePointIsNormalDensity) {
    const auto pair = kde_compare({0.0}, {0.0}, 1.0);
    for (std::size_t i = 0; i < pair.grid.size(); ++i) {
        EXPECT_NEAR(pair.empirical_pdf[i], std_normal_density(pair.grid[i]), 1e-15);
    }
}

TEST(Kde, SymmetricData) {
    const auto pair = kde_compare({-1.0, 1.0}, {-1.0, 1.0}, 0.7);
    const auto n = pair.grid.size();
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(pair.grid[i], -pair.grid[n - 1 - i], 1e-12);
        EXPECT_NEAR(pair.empirical_pdf[i], pair.empirical_pdf[n - 1 - i], 1e-12);
    }
}

TEST(Kde, LargeNormalSampleMatchesPdf) {
    UniformStream rng(77);
    std::vector<double> x(100000);
    for (std::size_t i = 0; i < x.size(); i += 2) {
        const double u1 = 1.0 - rng.next();
        const double u2 = rng.next();
        const double r = std::sqrt(-2.0 * std::log(u1));
        x[i] = r * std::cos(2.0 * M_PI * u2);
        x[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    const double bw = silverman_bandwidth(x);
    std::vector<double> grid;
    for (double g = -4.0; g <= 4.0; g += 0.05) grid.push_back(g);
    const auto f = gaussian_kde(x, grid, bw);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::fabs(f[i] - std_normal_density(grid[i])));
    EXPECT_LE(worst, 0.01);
}

TEST(Kde, DensitiesIntegrateToOne) {
    UniformStream rng(8);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> a(300), b(200);
        for (auto& v : a) v = uniform(rng, -2, 2) + (rng.next() < 0.5 ? -3 : 3);
        for (auto& v : b) v = uniform(rng, -1, 5);
        const double bw = 2.0 * silverman_bandwidth(a);
        const auto pair = kde_compare(a, b, bw);
        for (std::size_t i = 0; i < pair.grid.size(); ++i) {
            EXPECT_GE(pair.empirical_pdf[i], 0.0);
            EXPECT_GE(pair.model_pdf[i], 0.0);
        }
        EXPECT_NEAR(trapezoid(pair.grid, pair.empirical_pdf), 1.0, 1e-6);
        EXPECT_NEAR(trapezoid(pair.grid, pair.model_pdf), 1.0, 1e-6);
    }
}

TEST(Kde, Errors) {
    try {
        kde_compare({1.0}, {1.0}, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonpositiveBandwidth);
    }
    EXPECT_THROW(kde_compare({}, {1.0}, 1.0), Error);
    EXPECT_THROW(silverman_bandwidth({1.0, 1.0, 1.0}), Error);
}

TEST(Kde, CsvHasHeaderAndRows) {
    const auto pair = kde_compare({0.0}, {1.0}, 1.0, KdeGrid{5, 6.0});
    const auto csv = to_csv(pair);
    EXPECT_EQ(csv.rfind("x,empirical_pdf,model_pdf,bandwidth\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}
