#pragma once

#include "bbsm/calibrate.hpp"
#include "bbsm/csyip.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bbsm {

enum class PayoffKind { Call, Put, Custom };

/// European claim with terminal payoff g(A_T).
struct OptionSpec {
    PayoffKind payoff = PayoffKind::Call;
    double strike = 0.0;
    int maturity = 1;  ///< trading days
    double gamma_esg = 0.0;
    std::function<double(double)> custom;  ///< used when payoff == Custom

    double terminal_value(double asset, double strike_override) const;
    double terminal_value(double asset) const { return terminal_value(asset, strike); }
};

struct PricingConfig {
    double delta = 1.0;
    double up_prob = 0.5;
    double x_init = 0.0;  ///< market path value X at the pricing date
    FilterSpec filter;
    double a0 = 100.0;
    /// Deterministic riskless values beta_0 .. beta_T (at least T+1 entries;
    /// longer paths are used as a prefix).
    std::vector<double> beta_path;
    int max_maturity = 26;  ///< 2^T work budget
    int split_depth = 4;    ///< subtree-parallel split; 0 is fully serial
    unsigned workers = 0;   ///< 0: BBSM_WORKERS env var, else hardware threads
};

/// beta[k+1] = beta[k] + (rho beta0 + r beta[k]) delta, k < T.
std::vector<double> riskless_beta_path(const RisklessParams& riskless, double beta0, int maturity,
                                       double delta = 1.0);

struct NodeState {
    int k = 0;         ///< depth
    double a = 0.0;    ///< asset value
    double x = 0.0;    ///< cumulative market path value
};

struct Branching {
    NodeState up;
    NodeState down;
    double eta = 0.0;  ///< conditional volatility psi + gamma h(x)
};

/// Children of a node. Throws NegativeConditionalVolatility when eta < 0.
Branching branch(const NodeState& node, const RiskyParams& params, const PricingConfig& cfg);

/// q = p - (phi - A chi / beta) / eta * sqrt(p (1 - p) delta).
double risk_neutral_prob(const NodeState& node, double eta, const RiskyParams& params,
                         const RisklessParams& riskless, const PricingConfig& cfg);

/// The other algebraic form, [eta xi_d + (A chi / beta - phi) sqrt(delta)] sqrt(p(1-p)) / eta.
/// Used to cross-check risk_neutral_prob.
double risk_neutral_prob_direct(const NodeState& node, double eta, const RiskyParams& params,
                                const RisklessParams& riskless, const PricingConfig& cfg);

struct HedgeRatios {
    double asset_units = 0.0;
    double riskless_units = 0.0;
};

struct TraversalStats {
    std::size_t peak_frames = 0;  ///< most node frames live on one root-to-leaf chain
    std::size_t nodes_visited = 0;
    std::size_t leaves = 0;
};

struct PricingResult {
    double price = 0.0;
    HedgeRatios root_hedge;
    TraversalStats stats;
};

PricingResult price_european(const OptionSpec& spec, const RiskyParams& params, const RisklessParams& riskless,
                             const PricingConfig& cfg);

struct MultiStrikeResult {
    std::vector<double> prices;
    std::vector<HedgeRatios> root_hedges;
    TraversalStats stats;
};

/// All strikes at one maturity in a single traversal (leaf payoffs carried as a vector).
MultiStrikeResult price_strikes(const OptionSpec& tmpl, const std::vector<double>& strikes,
                                const RiskyParams& params, const RisklessParams& riskless,
                                const PricingConfig& cfg);

/// Level-by-level stored tree; the cross-check for the streaming traversal.
struct EnumeratedTree {
    std::vector<std::vector<NodeState>> levels;
    std::vector<std::vector<double>> values;  ///< option value per node
    double price = 0.0;

    std::size_t node_count() const;
};

inline constexpr int kMaxEnumerationMaturity = 16;

EnumeratedTree enumerate_tree(const OptionSpec& spec, const RiskyParams& params, const RisklessParams& riskless,
                              const PricingConfig& cfg);

struct SurfaceRow {
    double strike;
    int maturity;
    double price;
};

struct PriceSurface {
    std::string ticker;
    double gamma_esg = 0.0;
    std::vector<SurfaceRow> rows;
};

/// One shared traversal per maturity. cfg.beta_path must cover the largest maturity.
PriceSurface price_surface(const std::vector<double>& strikes, const std::vector<int>& maturities,
                           const OptionSpec& tmpl, const RiskyParams& params, const RisklessParams& riskless,
                           const PricingConfig& cfg);

std::string to_csv(const PriceSurface& surface, bool header = true);

/// Strike at which the call price at maturity T equals C (linear inverse interpolation).
std::optional<double> strike_for_price(const PriceSurface& surface, int maturity, double price);

struct StrikeShift {
    double minus_shift;  ///< |K_T(C, -1) - K_T(C, 0)|
    double plus_shift;   ///< |K_T(C, +1) - K_T(C, 0)|
};

/// Strike displacement between ESG-affinity surfaces at a common price level.
std::optional<StrikeShift> esg_strike_shift(const PriceSurface& minus, const PriceSurface& zero,
                                            const PriceSurface& plus, int maturity, double price);

double normal_cdf(double x);
double normal_pdf(double x);

/// Black-Scholes call with per-day volatility and continuously compounded per-day rate.
double bsm_closed_form(double a0, double strike, double t_days, double sigma_daily, double r_daily,
                       double delta = 1.0);

/// Normal-model call at zero rate.
double bachelier_closed_form(double a0, double strike, double t_days, double v_daily, double delta = 1.0);

/// Worker count: explicit value, else BBSM_WORKERS, else hardware threads.
unsigned resolve_workers(unsigned requested);

}  // namespace bbsm
