#include "dpmliv/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "dpmliv/error.hpp"

namespace dpmliv::linalg {

namespace {

// Relative threshold for treating a pivot as zero in rank decisions.
constexpr double kRankTol = 1e-10;

}  // namespace

Eigen::VectorXd sample_mvn_precision(Rng& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("posterior precision matrix is not positive definite");
  Eigen::VectorXd mean = llt.solve(b);
  Eigen::VectorXd e(b.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
  // Q = L L^T, so L^{-T} e has covariance Q^{-1}.
  mean += llt.matrixU().solve(e);
  return mean;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("matrix is not positive definite");
  return llt.solve(b);
}

int rank(const Eigen::MatrixXd& a) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(kRankTol);
  return static_cast<int>(qr.rank());
}

std::vector<std::size_t> collinear_columns(const Eigen::MatrixXd& a) {
  std::vector<std::size_t> bad;
  if (rank(a) == a.cols()) return bad;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Eigen::MatrixXd trial(a.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
    for (std::size_t k = 0; k < kept.size(); ++k) trial.col(static_cast<Eigen::Index>(k)) = a.col(kept[k]);
    trial.col(trial.cols() - 1) = a.col(j);
    if (rank(trial) == trial.cols())
      kept.push_back(j);
    else
      bad.push_back(static_cast<std::size_t>(j));
  }
  return bad;
}

void require_full_rank(const Eigen::MatrixXd& a, const std::vector<std::string>& names, const std::string& what) {
  const auto bad = collinear_columns(a);
  if (bad.empty()) return;
  std::string cols;
  for (auto j : bad) {
    if (!cols.empty()) cols += ", ";
    cols += j < names.size() ? names[j] : "column " + std::to_string(j);
  }
  throw RankError(what + " is rank deficient; collinear column(s): " + cols);
}

Eigen::VectorXd ols(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(kRankTol);
  if (qr.rank() < a.cols()) throw RankError("least-squares design is rank deficient");
  return qr.solve(y);
}

}  // namespace dpmliv::linalg
