#include "bbsm/lsq.hpp"

#include "bbsm/error.hpp"

#include <algorithm>
#include <cmath>

namespace bbsm {

namespace {

constexpr double kRankThreshold = 1e-10;
constexpr int kMaxIterations = 500;

Eigen::VectorXd column_norms(const Eigen::MatrixXd& X) {
    Eigen::VectorXd s = X.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (!(s(j) > 0.0)) {
            throw Error(ErrorCode::RankDeficient, "regressor column " + std::to_string(j) + " is zero");
        }
    }
    return s;
}

void require_full_rank(const Eigen::MatrixXd& Xs) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < Xs.cols()) {
        throw Error(ErrorCode::RankDeficient, "regressors are collinear (rank " +
                                                  std::to_string(qr.rank()) + " of " +
                                                  std::to_string(Xs.cols()) + ")");
    }
}

}  // namespace

Eigen::VectorXd solve_lsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() < X.cols()) throw Error(ErrorCode::TooFewObservations, "fewer rows than regressors");
    const Eigen::VectorXd s = column_norms(X);
    const Eigen::MatrixXd Xs = X * s.cwiseInverse().asDiagonal();
    require_full_rank(Xs);
    Eigen::VectorXd bs = Xs.colPivHouseholderQr().solve(y);
    return bs.cwiseQuotient(s);
}

ConeLsqResult solve_cone_constrained_lsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         const Eigen::MatrixXd& G) {
    const Eigen::Index n = X.cols();
    if (X.rows() < n) throw Error(ErrorCode::TooFewObservations, "fewer rows than regressors");
    if (G.cols() != n) throw Error(ErrorCode::LengthMismatch, "constraint width differs from regressors");

    const Eigen::VectorXd s = column_norms(X);
    const Eigen::MatrixXd Xs = X * s.cwiseInverse().asDiagonal();
    require_full_rank(Xs);

    // |Xs b - y|^2 = |R b - c|^2 + const, so with u = R b the problem is the
    // projection of c onto the cone {u : A u >= 0}, A = Gs R^-1.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Xs);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    const Eigen::VectorXd c = (qr.householderQ().transpose() * y).head(n);
    const Eigen::MatrixXd Gs = G * s.cwiseInverse().asDiagonal();

    // Columns of E are the unit-normalized rows of A; all-zero rows are vacuous.
    std::vector<Eigen::Index> rows;
    std::vector<double> row_norm;
    Eigen::MatrixXd At = R.transpose().triangularView<Eigen::Lower>().solve(Gs.transpose());
    for (Eigen::Index i = 0; i < At.cols(); ++i) {
        const double nrm = At.col(i).norm();
        if (nrm > 0.0) {
            rows.push_back(i);
            row_norm.push_back(nrm);
        }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd E(n, m);
    for (Eigen::Index j = 0; j < m; ++j) E.col(j) = At.col(rows[static_cast<std::size_t>(j)]) / row_norm[static_cast<std::size_t>(j)];

    // Moreau: u = c + E lambda with lambda = argmin_{lambda >= 0} |E lambda + c|.
    // Lawson-Hanson NNLS on that dual; w_j > 0 exactly when row j is violated by u.
    const double tol = 1e-13 * std::max(1.0, c.norm());
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    std::vector<char> passive(static_cast<std::size_t>(m), 0);
    std::vector<char> skip(static_cast<std::size_t>(m), 0);
    Eigen::VectorXd u = c;
    const int cap = kMaxIterations + 3 * static_cast<int>(n);
    int it = 0;

    auto solve_passive = [&](const std::vector<Eigen::Index>& P) {
        Eigen::MatrixXd EP(n, static_cast<Eigen::Index>(P.size()));
        for (std::size_t k = 0; k < P.size(); ++k) EP.col(static_cast<Eigen::Index>(k)) = E.col(P[k]);
        return Eigen::VectorXd(EP.colPivHouseholderQr().solve(-c));
    };
    auto passive_set = [&] {
        std::vector<Eigen::Index> P;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (passive[static_cast<std::size_t>(j)]) P.push_back(j);
        }
        return P;
    };

    for (; it < cap; ++it) {
        const Eigen::VectorXd w = -(E.transpose() * u);
        Eigen::Index enter = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && !skip[static_cast<std::size_t>(j)] && w(j) > best) {
                best = w(j);
                enter = j;
            }
        }
        if (enter < 0) break;
        passive[static_cast<std::size_t>(enter)] = 1;

        auto P = passive_set();
        Eigen::VectorXd z = solve_passive(P);
        const auto pos_enter = static_cast<std::size_t>(std::find(P.begin(), P.end(), enter) - P.begin());
        if (!(z(static_cast<Eigen::Index>(pos_enter)) > 0.0)) {
            // Roundoff: the entering column cannot carry weight; leave it out.
            passive[static_cast<std::size_t>(enter)] = 0;
            skip[static_cast<std::size_t>(enter)] = 1;
            continue;
        }
        while (true) {
            double alpha = 1.0;
            std::size_t blocking = P.size();
            for (std::size_t k = 0; k < P.size(); ++k) {
                const double zk = z(static_cast<Eigen::Index>(k));
                if (zk <= 0.0) {
                    const double lk = lambda(P[k]);
                    const double ratio = lk / (lk - zk);
                    if (blocking == P.size() || ratio < alpha) {
                        alpha = ratio;
                        blocking = k;
                    }
                }
            }
            if (blocking == P.size()) break;
            // Step towards z until the first multiplier hits zero, then drop it.
            for (std::size_t k = 0; k < P.size(); ++k) {
                const Eigen::Index j = P[k];
                lambda(j) += alpha * (z(static_cast<Eigen::Index>(k)) - lambda(j));
                if (k == blocking || lambda(j) <= 0.0) {
                    lambda(j) = 0.0;
                    passive[static_cast<std::size_t>(j)] = 0;
                }
            }
            P = passive_set();
            if (P.empty()) {
                z.resize(0);
                break;
            }
            z = solve_passive(P);
        }
        lambda.setZero();
        for (std::size_t k = 0; k < P.size(); ++k) lambda(P[k]) = z(static_cast<Eigen::Index>(k));
        u = c + E * lambda;
        std::fill(skip.begin(), skip.end(), 0);
    }
    if (it == cap) throw Error(ErrorCode::Infeasible, "active-set iteration did not converge");

    const Eigen::VectorXd bs = R.triangularView<Eigen::Upper>().solve(u);
    ConeLsqResult out;
    out.iterations = it + 1;
    out.coef = bs.cwiseQuotient(s);

    // Gradient of |Xs b - y|^2 / 2 is R^T (u - c) = Gs^T (lambda_j / norm_j), so the
    // multipliers carry over unchanged to the caller's unscaled rows.
    std::vector<double> mult;
    for (Eigen::Index j = 0; j < m; ++j) {
        if (lambda(j) > 0.0) {
            out.active.push_back(static_cast<std::size_t>(rows[static_cast<std::size_t>(j)]));
            mult.push_back(lambda(j) / row_norm[static_cast<std::size_t>(j)]);
        }
    }
    out.multipliers = Eigen::Map<const Eigen::VectorXd>(mult.data(), static_cast<Eigen::Index>(mult.size()));

    // KKT residual in the scaled problem: stationarity, primal feasibility and slackness.
    const Eigen::VectorXd grad = Xs.transpose() * (Xs * bs - y);
    Eigen::VectorXd station = grad;
    for (std::size_t k = 0; k < out.active.size(); ++k) {
        station -= out.multipliers(static_cast<Eigen::Index>(k)) * Gs.row(static_cast<Eigen::Index>(out.active[k])).transpose();
    }
    const double y_scale = std::max(1.0, y.norm());
    double kkt = station.lpNorm<Eigen::Infinity>() / y_scale;
    for (Eigen::Index j = 0; j < m; ++j) {
        const double slack = E.col(j).dot(u);
        kkt = std::max(kkt, std::max(0.0, -slack) / y_scale);
        if (lambda(j) > 0.0) kkt = std::max(kkt, std::fabs(slack) / y_scale);
    }
    out.kkt_residual = kkt;
    return out;
}

}  // namespace bbsm
