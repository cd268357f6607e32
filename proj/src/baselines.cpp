#include "dpmliv/baselines.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "dpmliv/diagnostics.hpp"
#include "dpmliv/error.hpp"
#include "dpmliv/linalg.hpp"
#include "dpmliv/log.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/sampler.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv {

TslsResult two_stage_least_squares(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  TslsResult r;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < data.x().cols(); ++j) {
    const auto col = data.x().col(j);
    if (col.maxCoeff() > col.minCoeff())
      keep.push_back(j);
    else
      r.dropped_columns.push_back(data.column_names()[static_cast<std::size_t>(j)]);
  }
  const auto p = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index k = 0; k < p; ++k) x.col(k) = data.x().col(keep[static_cast<std::size_t>(k)]);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = data.d()[static_cast<std::size_t>(i)];

  Eigen::MatrixXd stage1(n, p + 2);
  stage1.col(0).setOnes();
  stage1.col(1) = data.z();
  stage1.rightCols(p) = x;
  std::vector<std::string> names{"intercept", "z"};
  for (auto j : keep) names.push_back(data.column_names()[static_cast<std::size_t>(j)]);
  linalg::require_full_rank(stage1, names, "first-stage design [intercept, z, X]");
  const Eigen::VectorXd g = linalg::ols(stage1, d);
  const Eigen::VectorXd dhat = stage1 * g;

  Eigen::MatrixXd xhat(n, p + 2), xs(n, p + 2);
  xhat.col(0).setOnes();
  xhat.col(1) = dhat;
  xhat.rightCols(p) = x;
  xs = xhat;
  xs.col(1) = d;
  const Eigen::VectorXd b = linalg::ols(xhat, data.y());
  const Eigen::VectorXd e = data.y() - xs * b;

  const Eigen::MatrixXd bread = (xhat.transpose() * xhat).inverse();
  const Eigen::MatrixXd meat = xhat.transpose() * e.cwiseAbs2().asDiagonal() * xhat;
  const Eigen::MatrixXd v = bread * meat * bread;

  r.coefficients = b;
  r.estimate = b[1];
  r.se = std::sqrt(v(1, 1));
  const double q = norm_quantile(0.975);
  r.ci_low = r.estimate - q * r.se;
  r.ci_high = r.estimate + q * r.se;

  // Incremental F for z on the same rows.
  Eigen::MatrixXd reduced(n, p + 1);
  reduced.col(0).setOnes();
  reduced.rightCols(p) = x;
  const double rss_f = (d - dhat).squaredNorm();
  const double rss_r = (d - reduced * linalg::ols(reduced, d)).squaredNorm();
  const double df2 = static_cast<double>(n - p - 2);
  r.first_stage_f = rss_f <= 1e-12 * std::max(rss_r, 1.0) ? kInf : (rss_r - rss_f) / (rss_f / df2);
  r.weak_instrument = r.first_stage_f < 10.0;
  if (r.weak_instrument)
    log_line(LogLevel::Info, "warning: weak instrument (first-stage F = " + text::format_double(r.first_stage_f) + ")");
  return r;
}

EffectEstimate tsls_effect(const Dataset& data, Estimand estimand, const Condition& condition) {
  TslsResult r;
  std::string label;
  if (estimand == Estimand::ATE) {
    r = two_stage_least_squares(data);
  } else if (estimand == Estimand::CATE) {
    const auto rows = condition.select(data);
    if (rows.empty()) throw InvalidArgument("condition '" + condition.text() + "' selects no units");
    r = two_stage_least_squares(data.subset(rows));
    label = condition.text();
  } else {
    throw InvalidArgument("2SLS provides ATE and stratified CATE only");
  }
  EffectEstimate e;
  e.estimand = estimand;
  e.condition = label;
  e.posterior_median = r.estimate;
  e.ci_low = r.ci_low;
  e.ci_high = r.ci_high;
  e.method = "2sls";
  return e;
}

std::vector<PosteriorDraws> normal_liv(const Dataset& data, const ModelConfig& config, std::size_t workers) {
  return run_chains(FitRequest{data, config, Variant::NormalLiv}, workers);
}

}  // namespace dpmliv
