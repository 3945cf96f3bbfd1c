#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace bbsm {

struct ConeLsqResult {
    Eigen::VectorXd coef;
    std::vector<std::size_t> active;  ///< rows with a positive multiplier at the solution
    Eigen::VectorXd multipliers;      ///< one per active row, > 0; grad |Xb-y|^2/2 = G_active^T multipliers
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// Least squares  min |X b - y|^2  subject to  G b >= 0  (row-wise).
///
/// Solved as the projection of the QR-reduced target onto the constraint cone,
/// through the nonnegative least-squares dual (Lawson-Hanson); the solution is
/// unique because X has full column rank. Columns of X are rescaled to unit
/// norm internally. Throws RankDeficient when X does not have full column
/// rank and Infeasible if the iteration cap is hit.
ConeLsqResult solve_cone_constrained_lsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         const Eigen::MatrixXd& G);

/// Plain least squares via column-pivoted QR. Throws RankDeficient.
Eigen::VectorXd solve_lsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace bbsm
