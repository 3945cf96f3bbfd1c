#include "bbsm/pricer.hpp"

#include "bbsm/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <span>
#include <string>
#include <thread>

namespace bbsm {

namespace {

std::string where(const NodeState& node) {
    return "node (k=" + std::to_string(node.k) + ", A=" + format_real(node.a) + ", X=" + format_real(node.x) + ")";
}

void validate(const PricingConfig& cfg, int maturity) {
    if (maturity < 0) throw Error(ErrorCode::InvalidArgument, "maturity must be >= 0");
    if (maturity > cfg.max_maturity) {
        throw Error(ErrorCode::MaturityBudgetExceeded,
                    "T = " + std::to_string(maturity) + " exceeds the 2^T node budget (max T = " +
                        std::to_string(cfg.max_maturity) + "); use a coarser delta or raise the budget");
    }
    if (!(cfg.delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    bernoulli_levels(cfg.up_prob);
    if (cfg.beta_path.size() < static_cast<std::size_t>(maturity) + 1) {
        throw Error(ErrorCode::InvalidArgument, "beta path shorter than T + 1");
    }
    for (int k = 0; k <= maturity; ++k) {
        if (cfg.beta_path[static_cast<std::size_t>(k)] == 0.0) {
            throw Error(ErrorCode::InvalidArgument, "beta path has a zero at k = " + std::to_string(k));
        }
    }
}

struct Frame {
    NodeState node;
    NodeState down;
    double up_asset;
    double q;
    int stage;  // 0 fresh, 1 waiting on up child, 2 waiting on down child
};

// Post-order traversal of the subtree under `root` down to `leaf_depth`.
// `leaf(node, leaf_index, out)` writes the m leaf values; the subtree's
// values land in `result`. Node frames live on an explicit stack of depth
// leaf_depth - root.k + 1.
class Walker {
public:
    Walker(const RiskyParams& params, const RisklessParams& riskless, const PricingConfig& cfg)
        : params_(params), riskless_(riskless), cfg_(cfg) {}

    template <class Leaf>
    void run(const NodeState& root, int leaf_depth, std::size_t m, Leaf&& leaf, std::span<double> result,
             std::vector<HedgeRatios>* root_hedges, TraversalStats& stats) const {
        const auto levels = static_cast<std::size_t>(leaf_depth - root.k) + 1;
        std::vector<Frame> stack;
        stack.reserve(levels);
        std::vector<double> up_values(levels * m);
        std::vector<double> ret(m);
        std::size_t leaf_index = 0;

        stack.push_back(Frame{root, {}, 0.0, 0.0, 0});
        stats.peak_frames = std::max(stats.peak_frames, stack.size());
        while (!stack.empty()) {
            const std::size_t depth = stack.size() - 1;
            Frame& f = stack.back();
            if (f.node.k == leaf_depth) {
                leaf(f.node, leaf_index++, std::span<double>(ret));
                ++stats.leaves;
                ++stats.nodes_visited;
                stack.pop_back();
                continue;
            }
            switch (f.stage) {
            case 0: {
                const auto b = branch(f.node, params_, cfg_);
                f.q = risk_neutral_prob(f.node, b.eta, params_, riskless_, cfg_);
                f.down = b.down;
                f.up_asset = b.up.a;
                f.stage = 1;
                stack.push_back(Frame{b.up, {}, 0.0, 0.0, 0});
                stats.peak_frames = std::max(stats.peak_frames, stack.size());
                break;
            }
            case 1: {
                std::copy(ret.begin(), ret.end(), up_values.begin() + static_cast<std::ptrdiff_t>(depth * m));
                f.stage = 2;
                const NodeState down = f.down;
                stack.push_back(Frame{down, {}, 0.0, 0.0, 0});
                stats.peak_frames = std::max(stats.peak_frames, stack.size());
                break;
            }
            default: {
                const auto k = static_cast<std::size_t>(f.node.k);
                const double disc = cfg_.beta_path[k] / cfg_.beta_path[k + 1];
                const double* up = up_values.data() + depth * m;
                if (depth == 0 && root_hedges) {
                    root_hedges->resize(m);
                    const double spread = f.up_asset - f.down.a;
                    for (std::size_t j = 0; j < m; ++j) {
                        const double units = (up[j] - ret[j]) / spread;
                        (*root_hedges)[j] = {units, (up[j] - units * f.up_asset) / cfg_.beta_path[k + 1]};
                    }
                }
                for (std::size_t j = 0; j < m; ++j) ret[j] = disc * (f.q * up[j] + (1.0 - f.q) * ret[j]);
                ++stats.nodes_visited;
                stack.pop_back();
                break;
            }
            }
        }
        std::copy(ret.begin(), ret.end(), result.begin());
    }

private:
    const RiskyParams& params_;
    const RisklessParams& riskless_;
    const PricingConfig& cfg_;
};

MultiStrikeResult price_many(const OptionSpec& tmpl, const std::vector<double>& strikes, const RiskyParams& params,
                             const RisklessParams& riskless, const PricingConfig& cfg) {
    const int T = tmpl.maturity;
    validate(cfg, T);
    const std::size_t m = strikes.size();
    MultiStrikeResult out;
    out.prices.assign(m, 0.0);
    if (m == 0) return out;

    const NodeState root{0, cfg.a0, cfg.x_init};
    auto payoff_leaf = [&](const NodeState& node, std::size_t, std::span<double> values) {
        for (std::size_t j = 0; j < m; ++j) values[j] = tmpl.terminal_value(node.a, strikes[j]);
    };

    if (T == 0) {
        payoff_leaf(root, 0, std::span<double>(out.prices));
        for (double c : out.prices) out.root_hedges.push_back({0.0, c / cfg.beta_path[0]});
        out.stats = {1, 1, 1};
        return out;
    }

    const Walker walker(params, riskless, cfg);
    const int split = std::clamp(cfg.split_depth, 0, T - 1);
    if (split == 0) {
        walker.run(root, T, m, payoff_leaf, std::span<double>(out.prices), &out.root_hedges, out.stats);
        return out;
    }

    // Upper tree down to the split depth.
    std::vector<NodeState> subroots;
    {
        std::vector<double> scratch(m);
        TraversalStats ignored;
        walker.run(
            root, split, m,
            [&](const NodeState& node, std::size_t, std::span<double> values) {
                subroots.push_back(node);
                std::fill(values.begin(), values.end(), 0.0);
            },
            std::span<double>(scratch), nullptr, ignored);
    }

    // Independent subtrees; each writes only its own slot.
    std::vector<double> sub_values(subroots.size() * m);
    std::vector<TraversalStats> sub_stats(subroots.size());
    std::vector<std::exception_ptr> errors(subroots.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < subroots.size(); i = next++) {
            try {
                walker.run(subroots[i], T, m, payoff_leaf,
                           std::span<double>(sub_values.data() + i * m, m), nullptr, sub_stats[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned workers = std::min<unsigned>(resolve_workers(cfg.workers), static_cast<unsigned>(subroots.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    TraversalStats top;
    walker.run(
        root, split, m,
        [&](const NodeState&, std::size_t idx, std::span<double> values) {
            std::copy_n(sub_values.begin() + static_cast<std::ptrdiff_t>(idx * m), m, values.begin());
        },
        std::span<double>(out.prices), &out.root_hedges, top);

    std::size_t sub_peak = 0;
    for (const auto& s : sub_stats) {
        sub_peak = std::max(sub_peak, s.peak_frames);
        out.stats.nodes_visited += s.nodes_visited;
        out.stats.leaves += s.leaves;
    }
    out.stats.nodes_visited += top.nodes_visited - top.leaves;
    out.stats.peak_frames = std::max(top.peak_frames, static_cast<std::size_t>(split) + sub_peak);
    return out;
}

}  // namespace

double OptionSpec::terminal_value(double asset, double strike_override) const {
    switch (payoff) {
    case PayoffKind::Call: return std::max(asset - strike_override, 0.0);
    case PayoffKind::Put: return std::max(strike_override - asset, 0.0);
    case PayoffKind::Custom:
        if (!custom) throw Error(ErrorCode::InvalidArgument, "custom payoff without a function");
        return custom(asset);
    }
    return 0.0;
}

std::vector<double> riskless_beta_path(const RisklessParams& riskless, double beta0, int maturity, double delta) {
    if (maturity < 0) throw Error(ErrorCode::InvalidArgument, "maturity must be >= 0");
    RisklessParams rp = riskless;
    rp.beta0 = beta0;
    std::vector<double> beta(static_cast<std::size_t>(maturity) + 1);
    beta[0] = beta0;
    for (std::size_t k = 0; k + 1 < beta.size(); ++k) beta[k + 1] = beta[k] + rp.chi(beta[k]) * delta;
    return beta;
}

Branching branch(const NodeState& node, const RiskyParams& params, const PricingConfig& cfg) {
    const double eta = params.psi(node.a) + params.gamma * h_eval(node.x, cfg.filter);
    if (eta < 0.0) {
        throw Error(ErrorCode::NegativeConditionalVolatility,
                    "eta = " + format_real(eta) + " < 0 at " + where(node));
    }
    const auto lv = bernoulli_levels(cfg.up_prob);
    const double sq = std::sqrt(cfg.delta);
    const double drift = params.phi(node.a) * cfg.delta;
    Branching b;
    b.eta = eta;
    b.up = {node.k + 1, node.a + drift + eta * sq * lv.up, node.x + sq * lv.up};
    b.down = {node.k + 1, node.a + drift - eta * sq * lv.down, node.x - sq * lv.down};
    return b;
}

double risk_neutral_prob(const NodeState& node, double eta, const RiskyParams& params,
                         const RisklessParams& riskless, const PricingConfig& cfg) {
    if (!(eta > 0.0)) {
        throw Error(ErrorCode::NegativeConditionalVolatility,
                    "eta = " + format_real(eta) + " must be > 0 for a risk-neutral probability at " + where(node));
    }
    const auto k = static_cast<std::size_t>(node.k);
    const double beta = cfg.beta_path.at(k);
    if (beta == 0.0) throw Error(ErrorCode::InvalidArgument, "beta is zero at " + where(node));
    const double p = cfg.up_prob;
    const double chi = riskless.rho * cfg.beta_path.front() + riskless.r * beta;
    const double q = p - (params.phi(node.a) - node.a * chi / beta) / eta * std::sqrt(p * (1.0 - p) * cfg.delta);
    if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorCode::QOutOfRange,
                    "q = " + format_real(q) + " outside (0,1) at " + where(node) + "; try a smaller delta");
    }
    return q;
}

double risk_neutral_prob_direct(const NodeState& node, double eta, const RiskyParams& params,
                                const RisklessParams& riskless, const PricingConfig& cfg) {
    const auto k = static_cast<std::size_t>(node.k);
    const double beta = cfg.beta_path.at(k);
    const double p = cfg.up_prob;
    const double chi = riskless.rho * cfg.beta_path.front() + riskless.r * beta;
    const double xi_d = std::sqrt(p / (1.0 - p));
    return (eta * xi_d + (chi / beta * node.a - params.phi(node.a)) * std::sqrt(cfg.delta)) *
           std::sqrt(p * (1.0 - p)) / eta;
}

PricingResult price_european(const OptionSpec& spec, const RiskyParams& params, const RisklessParams& riskless,
                             const PricingConfig& cfg) {
    auto many = price_many(spec, {spec.strike}, params, riskless, cfg);
    return {many.prices.front(), many.root_hedges.front(), many.stats};
}

MultiStrikeResult price_strikes(const OptionSpec& tmpl, const std::vector<double>& strikes,
                                const RiskyParams& params, const RisklessParams& riskless,
                                const PricingConfig& cfg) {
    return price_many(tmpl, strikes, params, riskless, cfg);
}

std::size_t EnumeratedTree::node_count() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.size();
    return n;
}

EnumeratedTree enumerate_tree(const OptionSpec& spec, const RiskyParams& params, const RisklessParams& riskless,
                              const PricingConfig& cfg) {
    const int T = spec.maturity;
    if (T > kMaxEnumerationMaturity) {
        throw Error(ErrorCode::MaturityTooLargeForEnumeration,
                    "T = " + std::to_string(T) + " exceeds the enumeration cap of " +
                        std::to_string(kMaxEnumerationMaturity));
    }
    validate(cfg, T);
    EnumeratedTree tree;
    tree.levels.resize(static_cast<std::size_t>(T) + 1);
    tree.levels[0].push_back({0, cfg.a0, cfg.x_init});
    std::vector<std::vector<double>> q(static_cast<std::size_t>(T));
    for (std::size_t k = 0; k < static_cast<std::size_t>(T); ++k) {
        for (const auto& node : tree.levels[k]) {
            const auto b = branch(node, params, cfg);
            q[k].push_back(risk_neutral_prob(node, b.eta, params, riskless, cfg));
            tree.levels[k + 1].push_back(b.up);
            tree.levels[k + 1].push_back(b.down);
        }
    }
    tree.values.resize(tree.levels.size());
    for (const auto& leaf : tree.levels.back()) tree.values.back().push_back(spec.terminal_value(leaf.a));
    for (std::size_t k = static_cast<std::size_t>(T); k-- > 0;) {
        const double disc = cfg.beta_path[k] / cfg.beta_path[k + 1];
        const auto& next = tree.values[k + 1];
        for (std::size_t i = 0; i < tree.levels[k].size(); ++i) {
            tree.values[k].push_back(disc * (q[k][i] * next[2 * i] + (1.0 - q[k][i]) * next[2 * i + 1]));
        }
    }
    tree.price = tree.values[0][0];
    return tree;
}

PriceSurface price_surface(const std::vector<double>& strikes, const std::vector<int>& maturities,
                           const OptionSpec& tmpl, const RiskyParams& params, const RisklessParams& riskless,
                           const PricingConfig& cfg) {
    PriceSurface surface;
    surface.gamma_esg = tmpl.gamma_esg;
    if (strikes.empty()) return surface;
    for (int T : maturities) {
        OptionSpec spec = tmpl;
        spec.maturity = T;
        const auto res = price_strikes(spec, strikes, params, riskless, cfg);
        for (std::size_t j = 0; j < strikes.size(); ++j) surface.rows.push_back({strikes[j], T, res.prices[j]});
    }
    return surface;
}

std::string to_csv(const PriceSurface& surface, bool header) {
    std::string out = header ? "ticker,gamma_esg,K,T,price\n" : "";
    for (const auto& row : surface.rows) {
        out += surface.ticker + ',' + format_real(surface.gamma_esg) + ',' + format_real(row.strike) + ',' +
               std::to_string(row.maturity) + ',' + format_real(row.price) + '\n';
    }
    return out;
}

std::optional<double> strike_for_price(const PriceSurface& surface, int maturity, double price) {
    std::vector<SurfaceRow> rows;
    for (const auto& r : surface.rows) {
        if (r.maturity == maturity) rows.push_back(r);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& l, const auto& r) { return l.strike < r.strike; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double hi = rows[i - 1].price;
        const double lo = rows[i].price;
        if (price <= hi && price >= lo) {
            if (hi == lo) return rows[i - 1].strike;
            const double w = (hi - price) / (hi - lo);
            return rows[i - 1].strike + w * (rows[i].strike - rows[i - 1].strike);
        }
    }
    return std::nullopt;
}

std::optional<StrikeShift> esg_strike_shift(const PriceSurface& minus, const PriceSurface& zero,
                                            const PriceSurface& plus, int maturity, double price) {
    const auto km = strike_for_price(minus, maturity, price);
    const auto k0 = strike_for_price(zero, maturity, price);
    const auto kp = strike_for_price(plus, maturity, price);
    if (!km || !k0 || !kp) return std::nullopt;
    return StrikeShift{std::fabs(*km - *k0), std::fabs(*kp - *k0)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double bsm_closed_form(double a0, double strike, double t_days, double sigma_daily, double r_daily, double delta) {
    if (!(a0 > 0.0) || !(sigma_daily > 0.0) || t_days < 0.0 || strike < 0.0 || !(delta > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "bsm_closed_form needs a0 > 0, sigma > 0, T >= 0, K >= 0");
    }
    const double tau = t_days * delta;
    if (strike == 0.0) return a0;
    if (tau == 0.0) return std::max(a0 - strike, 0.0);
    const double vol = sigma_daily * std::sqrt(tau);
    const double d1 = (std::log(a0 / strike) + r_daily * tau) / vol + 0.5 * vol;
    const double d2 = d1 - vol;
    return a0 * normal_cdf(d1) - strike * std::exp(-r_daily * tau) * normal_cdf(d2);
}

double bachelier_closed_form(double a0, double strike, double t_days, double v_daily, double delta) {
    if (!(v_daily > 0.0) || t_days < 0.0 || !(delta > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "bachelier_closed_form needs v > 0, T >= 0");
    }
    const double s = v_daily * std::sqrt(t_days * delta);
    if (s == 0.0) return std::max(a0 - strike, 0.0);
    const double d = (a0 - strike) / s;
    return (a0 - strike) * normal_cdf(d) + s * normal_pdf(d);
}

unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BBSM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace bbsm
