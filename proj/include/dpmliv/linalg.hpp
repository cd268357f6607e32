#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmliv/rng.hpp"

namespace dpmliv::linalg {

/// Draw from Normal(Q^{-1} b, Q^{-1}) for a symmetric positive definite
/// precision Q. Throws NumericalError if Q is not positive definite.
Eigen::VectorXd sample_mvn_precision(Rng& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& b);

/// Q^{-1} b by Cholesky.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b);

/// Least-squares coefficients; throws RankError when A lacks full column rank.
Eigen::VectorXd ols(const Eigen::MatrixXd& a, const Eigen::VectorXd& y);

int rank(const Eigen::MatrixXd& a);

/// Columns that are linear combinations of the columns before them, scanning
/// left to right. Empty when A has full column rank.
std::vector<std::size_t> collinear_columns(const Eigen::MatrixXd& a);

/// Throws RankError naming the collinear columns of `a` (labelled by `names`)
/// when it lacks full column rank; `what` describes the design.
void require_full_rank(const Eigen::MatrixXd& a, const std::vector<std::string>& names, const std::string& what);

}  // namespace dpmliv::linalg
