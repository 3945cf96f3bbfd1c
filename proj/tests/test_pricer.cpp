#include "bbsm/error.hpp"
#include "bbsm/pricer.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bbsm;
using bbsm::testing::admissible_draw;
using bbsm::testing::rel_err;

namespace {

PricingConfig flat_config(double a0, int t, double p = 0.5) {
    PricingConfig cfg;
    cfg.a0 = a0;
    cfg.up_prob = p;
    cfg.beta_path.assign(static_cast<std::size_t>(t) + 1, a0);
    cfg.split_depth = 0;
    return cfg;
}

OptionSpec call(double strike, int t) {
    OptionSpec s;
    s.strike = strike;
    s.maturity = t;
    return s;
}

OptionSpec custom(std::function<double(double)> g, int t) {
    OptionSpec s;
    s.payoff = PayoffKind::Custom;
    s.custom = std::move(g);
    s.maturity = t;
    return s;
}

}  // namespace

TEST(Branch, ZeroParamsKeepAssetValue) {
    const auto b = branch({0, 100.0, 0.0}, RiskyParams{}, flat_config(100.0, 1));
    EXPECT_EQ(b.up.a, 100.0);
    EXPECT_EQ(b.down.a, 100.0);
    EXPECT_EQ(b.up.x, 1.0);
    EXPECT_EQ(b.down.x, -1.0);
    EXPECT_EQ(b.up.k, 1);
}

TEST(Branch, SymmetricMovesOfTwo) {
    RiskyParams p;
    p.v = 2.0;
    const auto b = branch({0, 50.0, 0.0}, p, flat_config(50.0, 1));
    EXPECT_DOUBLE_EQ(b.eta, 2.0);
    EXPECT_DOUBLE_EQ(b.up.a - 50.0, 2.0);
    EXPECT_DOUBLE_EQ(b.down.a - 50.0, -2.0);
}

TEST(Branch, GammaZeroIgnoresPath) {
    RiskyParams p;
    p.v = 0.7;
    p.sigma = 0.01;
    const auto cfg = flat_config(100.0, 1, 0.524);
    const auto b1 = branch({0, 100.0, 0.0}, p, cfg);
    const auto b2 = branch({0, 100.0, 7.5}, p, cfg);
    EXPECT_EQ(b1.eta, b2.eta);
    EXPECT_EQ(b1.up.a, b2.up.a);
    EXPECT_EQ(b1.down.a, b2.down.a);
}

TEST(Branch, NegativeEtaIsModelError) {
    RiskyParams p;
    p.v = 0.1;
    p.gamma = 1.0;
    try {
        branch({3, 100.0, -10.0}, p, flat_config(100.0, 5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NegativeConditionalVolatility);
        EXPECT_EQ(e.category(), ErrorCategory::Model);
        EXPECT_NE(std::string(e.what()).find("k=3"), std::string::npos);
    }
}

TEST(RiskNeutralProb, DriftMatchedNodeGivesP) {
    RiskyParams p;
    RisklessParams rl{0.0, 0.001, 100.0, 0.0};
    auto cfg = flat_config(100.0, 1, 0.53);
    p.mu = 0.001;  // phi = mu A = A chi / beta
    p.v = 1.0;
    EXPECT_NEAR(risk_neutral_prob({0, 100.0, 0.0}, 1.0, p, rl, cfg), 0.53, 1e-15);
}

TEST(RiskNeutralProb, FormulaEvaluation) {
    RiskyParams p;
    p.a = 0.1;
    EXPECT_NEAR(risk_neutral_prob({0, 100.0, 0.0}, 2.0, p, RisklessParams{}, flat_config(100.0, 1)), 0.475, 1e-15);
}

TEST(RiskNeutralProb, OutOfRangeIsModelError) {
    RiskyParams p;
    p.a = -1.4;  // q = 0.5 + 1.4 * 0.5 / 1 = 1.2
    try {
        risk_neutral_prob({0, 100.0, 0.0}, 1.0, p, RisklessParams{}, flat_config(100.0, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::QOutOfRange);
        EXPECT_EQ(e.category(), ErrorCategory::Model);
    }
}

TEST(RiskNeutralProb, ZeroEtaRejected) {
    EXPECT_THROW(risk_neutral_prob({0, 100.0, 0.0}, 0.0, RiskyParams{}, RisklessParams{}, flat_config(100.0, 1)),
                 Error);
}

TEST(RiskNeutralProb, BothFormsAgree) {
    UniformStream rng(11);
    for (int i = 0; i < 200; ++i) {
        auto d = admissible_draw(rng, 4);
        d.cfg.delta = bbsm::testing::uniform(rng, 0.2, 1.0);
        const NodeState node{2, bbsm::testing::uniform(rng, 80, 120), bbsm::testing::uniform(rng, -3, 3)};
        const double eta = branch(node, d.params, d.cfg).eta;
        EXPECT_NEAR(risk_neutral_prob(node, eta, d.params, d.riskless, d.cfg),
                    risk_neutral_prob_direct(node, eta, d.params, d.riskless, d.cfg), 1e-12);
    }
}

TEST(RiskNeutralProb, OneStepMartingale) {
    UniformStream rng(12);
    for (int i = 0; i < 100; ++i) {
        const auto d = admissible_draw(rng, 3);
        const NodeState node{1, 97.0, 0.4};
        const auto b = branch(node, d.params, d.cfg);
        const double q = risk_neutral_prob(node, b.eta, d.params, d.riskless, d.cfg);
        const double expected = node.a * d.cfg.beta_path[2] / d.cfg.beta_path[1];
        EXPECT_LT(rel_err(q * b.up.a + (1 - q) * b.down.a, expected), 1e-13);
    }
}

TEST(PriceEuropean, ZeroMaturityIsIntrinsic) {
    const auto res = price_european(call(90.0, 0), RiskyParams{}, RisklessParams{}, flat_config(100.0, 0));
    EXPECT_EQ(res.price, 10.0);
    EXPECT_EQ(res.root_hedge.asset_units, 0.0);
    EXPECT_DOUBLE_EQ(res.root_hedge.riskless_units, 0.1);
}

TEST(PriceEuropean, TwoLeafHandValue) {
    RiskyParams p;
    p.v = 1.0;
    const auto res = price_european(call(100.0, 1), p, RisklessParams{}, flat_config(100.0, 1));
    EXPECT_DOUBLE_EQ(res.price, 0.5);
    EXPECT_DOUBLE_EQ(res.root_hedge.asset_units, 0.5);
    EXPECT_DOUBLE_EQ(res.root_hedge.riskless_units, (1.0 - 0.5 * 101.0) / 100.0);
    const auto tree = enumerate_tree(call(100.0, 1), p, RisklessParams{}, flat_config(100.0, 1));
    EXPECT_EQ(tree.price, 0.5);
    EXPECT_EQ(tree.node_count(), 3u);
}

TEST(PriceEuropean, UnitPayoffTelescopes) {
    UniformStream rng(21);
    for (int i = 0; i < 20; ++i) {
        const auto d = admissible_draw(rng, 12);
        const auto res = price_european(custom([](double) { return 1.0; }, 12), d.params, d.riskless, d.cfg);
        EXPECT_LT(rel_err(res.price, d.cfg.beta_path[0] / d.cfg.beta_path[12]), 1e-12);
    }
}

TEST(PriceEuropean, AssetPayoffReplicatesA0) {
    UniformStream rng(22);
    for (int t : {1, 5, 10, 14}) {
        for (int i = 0; i < 10; ++i) {
            const auto d = admissible_draw(rng, t);
            const auto res = price_european(custom([](double a) { return a; }, t), d.params, d.riskless, d.cfg);
            EXPECT_LT(rel_err(res.price, d.cfg.a0), 1e-10) << "T=" << t;
        }
    }
}

TEST(PriceEuropean, RootHedgeReplicates) {
    UniformStream rng(23);
    for (int i = 0; i < 20; ++i) {
        const auto d = admissible_draw(rng, 8);
        const auto spec = call(100.0, 8);
        const auto res = price_european(spec, d.params, d.riskless, d.cfg);
        const double v = res.root_hedge.asset_units * d.cfg.a0 + res.root_hedge.riskless_units * d.cfg.beta_path[0];
        EXPECT_LT(rel_err(v, res.price), 1e-10);

        // Both children are replicated by the same holding.
        const auto tree = enumerate_tree(spec, d.params, d.riskless, d.cfg);
        const auto& kids = tree.levels[1];
        const auto& vals = tree.values[1];
        for (int c = 0; c < 2; ++c) {
            const double rep = res.root_hedge.asset_units * kids[c].a + res.root_hedge.riskless_units * d.cfg.beta_path[1];
            EXPECT_LT(rel_err(rep, vals[c]), 1e-10);
        }
    }
}

TEST(PriceEuropean, MatchesEnumeration) {
    UniformStream rng(24);
    for (int t = 1; t <= 12; ++t) {
        const auto d = admissible_draw(rng, t);
        const auto spec = call(bbsm::testing::uniform(rng, 95, 105), t);
        const double dfs = price_european(spec, d.params, d.riskless, d.cfg).price;
        const double full = enumerate_tree(spec, d.params, d.riskless, d.cfg).price;
        EXPECT_LE(rel_err(dfs, full), 1e-13) << "T=" << t;
    }
}

TEST(PriceEuropean, PutCallConsistency) {
    UniformStream rng(25);
    for (int i = 0; i < 10; ++i) {
        const auto d = admissible_draw(rng, 10);
        const double k = 101.0;
        auto put = call(k, 10);
        put.payoff = PayoffKind::Put;
        const double c = price_european(call(k, 10), d.params, d.riskless, d.cfg).price;
        const double p = price_european(put, d.params, d.riskless, d.cfg).price;
        const double fwd = price_european(custom([k](double a) { return a - k; }, 10), d.params, d.riskless, d.cfg).price;
        EXPECT_NEAR(c - p, fwd, 1e-10 * d.cfg.a0);
        EXPECT_NEAR(fwd, d.cfg.a0 - k * d.cfg.beta_path[0] / d.cfg.beta_path[10], 1e-10 * d.cfg.a0);
    }
}

TEST(PriceEuropean, PeakFramesBounded) {
    UniformStream rng(26);
    const auto d = admissible_draw(rng, 14);
    for (int t : {1, 6, 14}) {
        const auto res = price_european(call(100.0, t), d.params, d.riskless, d.cfg);
        EXPECT_LE(res.stats.peak_frames, static_cast<std::size_t>(t) + 1);
        EXPECT_EQ(res.stats.leaves, std::size_t{1} << t);
        EXPECT_EQ(res.stats.nodes_visited, (std::size_t{2} << t) - 1);
    }
}

TEST(PriceEuropean, SplitIsBitwiseSerial) {
    UniformStream rng(27);
    auto d = admissible_draw(rng, 12);
    const std::vector<double> strikes{95.0, 100.0, 105.0};
    const auto serial = price_strikes(call(0.0, 12), strikes, d.params, d.riskless, d.cfg);
    for (int split : {1, 3, 6, 11, 30}) {
        for (unsigned workers : {1u, 3u}) {
            d.cfg.split_depth = split;
            d.cfg.workers = workers;
            const auto par = price_strikes(call(0.0, 12), strikes, d.params, d.riskless, d.cfg);
            for (std::size_t j = 0; j < strikes.size(); ++j) {
                EXPECT_EQ(par.prices[j], serial.prices[j]);
                EXPECT_EQ(par.root_hedges[j].asset_units, serial.root_hedges[j].asset_units);
            }
            EXPECT_LE(par.stats.peak_frames, 13u);
            EXPECT_EQ(par.stats.leaves, serial.stats.leaves);
            EXPECT_EQ(par.stats.nodes_visited, serial.stats.nodes_visited);
        }
    }
}

TEST(PriceEuropean, SharedTraversalMatchesSingleStrike) {
    UniformStream rng(28);
    const auto d = admissible_draw(rng, 9);
    const std::vector<double> strikes{90.0, 100.0, 110.0};
    const auto many = price_strikes(call(0.0, 9), strikes, d.params, d.riskless, d.cfg);
    for (std::size_t j = 0; j < strikes.size(); ++j) {
        EXPECT_EQ(many.prices[j], price_european(call(strikes[j], 9), d.params, d.riskless, d.cfg).price);
    }
}

TEST(PriceEuropean, BudgetGuard) {
    auto cfg = flat_config(100.0, 30);
    try {
        price_european(call(100.0, 30), RiskyParams{}, RisklessParams{}, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MaturityBudgetExceeded);
        EXPECT_EQ(e.category(), ErrorCategory::Config);
        EXPECT_NE(std::string(e.what()).find("2^T"), std::string::npos);
    }
}

TEST(PriceEuropean, ConfigValidation) {
    auto cfg = flat_config(100.0, 3);
    EXPECT_THROW(price_european(call(100.0, 4), RiskyParams{}, RisklessParams{}, cfg), Error);  // short beta path
    cfg.up_prob = 1.0;
    EXPECT_THROW(price_european(call(100.0, 3), RiskyParams{}, RisklessParams{}, cfg), Error);
    cfg = flat_config(100.0, 3);
    cfg.beta_path[2] = 0.0;
    EXPECT_THROW(price_european(call(100.0, 3), RiskyParams{}, RisklessParams{}, cfg), Error);
}

TEST(EnumerateTree, CapAtSixteen) {
    try {
        enumerate_tree(call(100.0, 17), RiskyParams{}, RisklessParams{}, flat_config(100.0, 17));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MaturityTooLargeForEnumeration);
    }
}

TEST(PriceSurface, CallsNonincreasingInStrike) {
    UniformStream rng(31);
    auto d = admissible_draw(rng, 11);
    const auto surface = price_surface({90.0, 100.0, 110.0}, {2, 7, 11}, call(0.0, 1), d.params, d.riskless, d.cfg);
    ASSERT_EQ(surface.rows.size(), 9u);
    for (std::size_t i = 0; i < surface.rows.size(); i += 3) {
        EXPECT_GE(surface.rows[i].price, surface.rows[i + 1].price);
        EXPECT_GE(surface.rows[i + 1].price, surface.rows[i + 2].price);
        EXPECT_TRUE(std::isfinite(surface.rows[i].price));
    }
}

TEST(PriceSurface, EmptyStrikes) {
    const auto surface = price_surface({}, {2, 7}, call(0.0, 1), RiskyParams{}, RisklessParams{}, flat_config(1.0, 7));
    EXPECT_TRUE(surface.rows.empty());
}

TEST(PriceSurface, EsgAffinityOrdersPrices) {
    NormalizedParams norm{2e-4, 1e-4, 0.01, 0.004, 0.002};
    RisklessParams rl{-1e-4, 2e-4, 1.0, 0.0};
    const double s0 = 100.0;
    const double rel = 0.1;
    std::vector<double> prices;
    for (double g : {-1.0, 0.0, 1.0}) {
        const double a0 = s0 * (1.0 + g * rel);
        PricingConfig cfg;
        cfg.a0 = a0;
        cfg.up_prob = 0.524;
        cfg.x_init = 1.5;
        cfg.beta_path = riskless_beta_path(rl, a0, 10);
        auto spec = call(100.0, 10);
        spec.gamma_esg = g;
        const auto surface = price_surface({100.0}, {10}, spec, denormalize(norm, a0), rl, cfg);
        EXPECT_EQ(surface.gamma_esg, g);
        prices.push_back(surface.rows.at(0).price);
    }
    EXPECT_LT(prices[0], prices[1]);
    EXPECT_LT(prices[1], prices[2]);
}

TEST(PriceSurface, CsvLayout) {
    PriceSurface s{"AAPL", 1.0, {{100.0, 2, 1.25}}};
    EXPECT_EQ(to_csv(s), "ticker,gamma_esg,K,T,price\nAAPL,1,100,2,1.25\n");
}

TEST(PriceSurface, StrikeShiftDiagnostic) {
    PriceSurface lo{"X", -1, {{90, 5, 12}, {100, 5, 6}, {110, 5, 2}}};
    PriceSurface mid{"X", 0, {{90, 5, 14}, {100, 5, 8}, {110, 5, 3}}};
    PriceSurface hi{"X", 1, {{90, 5, 16}, {100, 5, 10}, {110, 5, 4}}};
    const auto k = strike_for_price(mid, 5, 5.5);
    ASSERT_TRUE(k.has_value());
    EXPECT_DOUBLE_EQ(*k, 105.0);
    EXPECT_FALSE(strike_for_price(mid, 5, 50.0).has_value());
    EXPECT_FALSE(strike_for_price(mid, 6, 5.0).has_value());
    const auto shift = esg_strike_shift(lo, mid, hi, 5, 6.0);
    ASSERT_TRUE(shift.has_value());
    EXPECT_DOUBLE_EQ(shift->minus_shift, 4.0);
    EXPECT_NEAR(shift->plus_shift, 8.0 / 3.0, 1e-12);
}

TEST(ClosedForm, BlackScholesValues) {
    EXPECT_NEAR(bsm_closed_form(100, 100, 20, 0.01, 0.0), 1.783975, 1e-6);
    EXPECT_NEAR(bsm_closed_form(100, 100, 20, 0.01, 0.0),
                bbsm::testing::lognormal_call_by_quadrature(100, 100, 0.01 * std::sqrt(20.0), 0.0), 1e-8);
    EXPECT_NEAR(bsm_closed_form(100, 95, 30, 0.02, 3e-4),
                bbsm::testing::lognormal_call_by_quadrature(100, 95, 0.02 * std::sqrt(30.0), 3e-4 * 30), 1e-8);
    EXPECT_EQ(bsm_closed_form(100, 0, 20, 0.01, 0.0), 100.0);
    EXPECT_LT(bsm_closed_form(100, 1000, 5, 0.01, 0.0), 1e-8 * 100);
    EXPECT_THROW(bsm_closed_form(100, 100, 20, 0.0, 0.0), Error);
    EXPECT_THROW(bsm_closed_form(0, 100, 20, 0.01, 0.0), Error);
}

TEST(ClosedForm, BachelierValues) {
    EXPECT_NEAR(bachelier_closed_form(100, 100, 16, 1.0), 4.0 / std::sqrt(2.0 * M_PI), 1e-14);
    EXPECT_NEAR(bachelier_closed_form(100, 98, 16, 1.0), bbsm::testing::normal_call_by_quadrature(100, 98, 4.0), 1e-8);
    EXPECT_NEAR(bachelier_closed_form(100, 98, 16, 1.0), 2.7912, 1e-4);
    EXPECT_NEAR(bachelier_closed_form(100, 98, 16, 1e-9), 2.0, 1e-9);
    EXPECT_NEAR(bachelier_closed_form(100, 102, 16, 1e-9), 0.0, 1e-9);
    EXPECT_THROW(bachelier_closed_form(100, 100, 16, 0.0), Error);
}

TEST(Workers, ExplicitValueWins) { EXPECT_EQ(resolve_workers(3), 3u); }

TEST(Limits, GeometricSubspaceApproachesBlackScholes) {
    RiskyParams p;
    p.mu = 0.0003;
    p.sigma = 0.01;
    const RisklessParams rl{0.0, 0.0002, 100.0, 0.0};
    auto cfg = flat_config(100.0, 20);
    cfg.beta_path = riskless_beta_path(rl, 100.0, 20);
    for (double k : {97.0, 100.0, 103.0}) {
        const double tree = price_european(call(k, 20), p, rl, cfg).price;
        EXPECT_LT(rel_err(tree, bsm_closed_form(100.0, k, 20.0, 0.01, 0.0002)), 0.015) << "K=" << k;
    }
}

TEST(Limits, ArithmeticSubspaceApproachesBachelier) {
    RiskyParams p;
    p.a = 0.01;
    p.v = 1.0;
    const RisklessParams rl{0.0, 0.0, 100.0, 0.0};
    const auto cfg = flat_config(100.0, 20);
    const double tree = price_european(call(100.0, 20), p, rl, cfg).price;
    EXPECT_LT(rel_err(tree, bachelier_closed_form(100.0, 100.0, 20.0, 1.0)), 0.015);
}
