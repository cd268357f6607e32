#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "dpmliv/baselines.hpp"
#include "dpmliv/error.hpp"
#include "dpmliv/rng.hpp"

using namespace dpmliv;

namespace {

Dataset iv_data(std::size_t n, std::uint64_t seed, double effect, double noise, double strength = 1.5) {
  Rng rng(seed);
  Eigen::VectorXd y(n), z(n);
  Eigen::MatrixXd x(n, 1);
  std::vector<std::uint8_t> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    z[ii] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    x(ii, 0) = rng.normal();
    const double u = rng.normal();
    d[i] = -0.5 + strength * z[ii] + 0.3 * x(ii, 0) + u + rng.normal() > 0.0 ? 1 : 0;
    y[ii] = 1.0 + effect * d[i] + 0.5 * x(ii, 0) + noise * (u + rng.normal());
  }
  return Dataset(y, d, z, x, {"x"});
}

struct IvOracle {
  Eigen::VectorXd b;
  double se;
};

// Just-identified IV: b = (W'X)^-1 W'y with HC0 variance.
IvOracle iv_oracle(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = data.x().cols();
  Eigen::MatrixXd w(n, p + 2), xs(n, p + 2);
  w.col(0).setOnes();
  w.col(1) = data.z();
  w.rightCols(p) = data.x();
  xs = w;
  for (Eigen::Index i = 0; i < n; ++i) xs(i, 1) = data.d()[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd a = (w.transpose() * xs).inverse();
  const Eigen::VectorXd b = a * w.transpose() * data.y();
  const Eigen::VectorXd e = data.y() - xs * b;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p + 2, p + 2);
  for (Eigen::Index i = 0; i < n; ++i) meat += e[i] * e[i] * w.row(i).transpose() * w.row(i);
  const Eigen::MatrixXd v = a * meat * a.transpose();
  return {b, std::sqrt(v(1, 1))};
}

}  // namespace

TEST_CASE("2SLS matches a hand-computed six-row instrumental-variable fit") {
  Eigen::MatrixXd x(6, 1);
  x << 0.2, -1.0, 0.5, 1.5, -0.3, 0.0;
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 3.1, 0.4, 2.2, 4.8, 1.0, 1.9).finished();
  const Eigen::VectorXd z = (Eigen::VectorXd(6) << 1, 0, 1, 1, 0, 0).finished();
  const Dataset data(y, {1, 0, 0, 1, 1, 0}, z, x, {"x"});
  const auto r = two_stage_least_squares(data);
  const auto o = iv_oracle(data);
  CHECK(std::abs(r.estimate - o.b[1]) < 1e-10);
  CHECK((r.coefficients - o.b).norm() < 1e-10);
  CHECK(std::abs(r.se - o.se) < 1e-10);
  CHECK(std::abs(r.ci_high - r.ci_low - 2.0 * 1.959963984540054 * r.se) < 1e-10);
}

TEST_CASE("2SLS matches the oracle on a larger sample") {
  const auto data = iv_data(500, 1, 2.0, 1.0);
  const auto r = two_stage_least_squares(data);
  const auto o = iv_oracle(data);
  CHECK(std::abs(r.estimate - o.b[1]) < 1e-9);
  CHECK(std::abs(r.se - o.se) < 1e-9);
  CHECK(r.ci_low < 2.0);
  CHECK(r.ci_high > 2.0);
}

TEST_CASE("2SLS recovers a noiseless effect exactly") {
  const auto data = iv_data(200, 2, 3.25, 0.0);
  const auto r = two_stage_least_squares(data);
  CHECK(std::abs(r.estimate - 3.25) < 1e-10);
  CHECK(std::abs(r.coefficients[0] - 1.0) < 1e-10);
  CHECK(std::abs(r.coefficients[2] - 0.5) < 1e-10);
  CHECK(r.se < 1e-8);
}

TEST_CASE("2SLS is equivariant to outcome scale") {
  const auto data = iv_data(300, 3, 2.0, 1.0);
  const Dataset scaled(7.5 * data.y(), data.d(), data.z(), data.x(), data.column_names());
  const auto a = two_stage_least_squares(data);
  const auto b = two_stage_least_squares(scaled);
  CHECK(std::abs(b.estimate - 7.5 * a.estimate) < 1e-9);
  CHECK(std::abs(b.se - 7.5 * a.se) < 1e-9);
}

TEST_CASE("2SLS with the treatment as its own instrument is OLS") {
  const auto base = iv_data(300, 4, 2.0, 1.0);
  Eigen::VectorXd z(300);
  for (Eigen::Index i = 0; i < 300; ++i) z[i] = base.d()[static_cast<std::size_t>(i)];
  const Dataset data(base.y(), base.d(), z, base.x(), base.column_names());
  Eigen::MatrixXd xs(300, 3);
  xs.col(0).setOnes();
  xs.col(1) = z;
  xs.col(2) = base.x().col(0);
  const Eigen::VectorXd ols = xs.colPivHouseholderQr().solve(base.y());
  const auto r = two_stage_least_squares(data);
  CHECK(std::abs(r.estimate - ols[1]) < 1e-10);
  CHECK(r.first_stage_f == std::numeric_limits<double>::infinity());
  CHECK_FALSE(r.weak_instrument);
}

TEST_CASE("2SLS flags a weak instrument") {
  const auto data = iv_data(400, 5, 2.0, 1.0, 0.0);
  const auto r = two_stage_least_squares(data);
  CHECK(r.first_stage_f < 10.0);
  CHECK(r.weak_instrument);
  CHECK_FALSE(two_stage_least_squares(iv_data(400, 5, 2.0, 1.0, 1.5)).weak_instrument);
}

TEST_CASE("2SLS drops constant covariates and rejects collinear ones") {
  const auto base = iv_data(100, 6, 2.0, 1.0);
  Eigen::MatrixXd x(100, 2);
  x.col(0) = base.x().col(0);
  x.col(1).setConstant(3.0);
  const Dataset data(base.y(), base.d(), base.z(), x, {"x", "flat"});
  const auto r = two_stage_least_squares(data);
  REQUIRE(r.dropped_columns.size() == 1);
  CHECK(r.dropped_columns[0] == "flat");
  CHECK(std::abs(r.estimate - two_stage_least_squares(base).estimate) < 1e-12);
  x.col(1) = -2.0 * base.x().col(0);
  const Dataset bad(base.y(), base.d(), base.z(), x, {"x", "neg_x"});
  CHECK_THROWS_AS(two_stage_least_squares(bad), RankError);
}

TEST_CASE("2SLS CATE refits on the subgroup") {
  const auto data = iv_data(400, 7, 2.0, 1.0);
  const auto cond = Condition::parse("x>0");
  const auto e = tsls_effect(data, Estimand::CATE, cond);
  const auto sub = two_stage_least_squares(data.subset(cond.select(data)));
  CHECK(e.posterior_median == sub.estimate);
  CHECK(e.ci_low == sub.ci_low);
  CHECK(e.method == "2sls");
  CHECK(tsls_effect(data, Estimand::ATE).posterior_median == two_stage_least_squares(data).estimate);
  CHECK_THROWS_AS(tsls_effect(data, Estimand::PB), InvalidArgument);
  CHECK_THROWS_AS(tsls_effect(data, Estimand::CATE, Condition::parse("x>100")), InvalidArgument);
}
