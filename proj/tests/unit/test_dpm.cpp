#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "dpmliv/dpm.hpp"
#include "dpmliv/error.hpp"
#include "dpmliv/sampler.hpp"
#include "dpmliv/stats.hpp"

using namespace dpmliv;

namespace {

ModelConfig base_config() {
  ModelConfig cfg;
  cfg.dpm_truncation = 10;
  return cfg;
}

DpmState two_atoms(double w0, double mu0, double mu1, double var) {
  DpmState d;
  d.sticks = Eigen::Vector2d(w0, 1.0);
  d.weights = dpm::stick_weights(std::vector<double>{w0, 1.0});
  d.means = Eigen::Vector2d(mu0, mu1);
  d.vars = Eigen::Vector2d(var, var);
  d.counts = {0, 0};
  return d;
}

double weight_sum(const DpmState& d) { return d.weights.sum(); }

}  // namespace

TEST_CASE("stick weights") {
  CHECK(dpm::stick_weights(std::vector<double>{1.0}) == Eigen::VectorXd::Ones(1));
  const auto w = dpm::stick_weights(std::vector<double>{0.5, 0.5, 0.3});
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 0.25);
  CHECK(w[2] == 0.25);
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> v(1 + static_cast<std::size_t>(rng.uniform() * 60));
    for (auto& x : v) x = rng.uniform();
    const auto ww = dpm::stick_weights(v);
    CHECK(std::abs(ww.sum() - 1.0) <= 1e-15);
    CHECK(ww.minCoeff() >= 0.0);
  }
  CHECK_THROWS_AS(dpm::stick_weights(std::vector<double>{1.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(dpm::stick_weights(std::vector<double>{0.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(dpm::stick_weights(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("allocations with a single atom are all zero") {
  Rng rng(2);
  auto d = dpm::initial_state(rng, 1, 5, 1.0, base_config());
  const std::vector<double> r{1.0, -3.0, 20.0, 0.0, 2.0};
  dpm::update_allocations(rng, r, d);
  CHECK(d.allocations == std::vector<std::int32_t>(5, 0));
  CHECK(d.counts == std::vector<std::int32_t>{5});
}

TEST_CASE("well separated atoms allocate a residual to the nearer atom") {
  auto d = two_atoms(0.5, -10.0, 10.0, 0.01);
  const Eigen::VectorXd lp = dpm::allocation_log_probabilities(10.0, d);
  CHECK(std::exp(lp[1]) > 1.0 - 1e-6);
  Rng rng(3);
  std::vector<double> r{10.0, -10.0, 9.9, -9.8, 10.1};
  dpm::update_allocations(rng, r, d);
  CHECK(d.allocations == std::vector<std::int32_t>{1, 0, 1, 0, 1});
  // Permuting residuals permutes the allocations.
  std::vector<double> perm{r[4], r[3], r[2], r[1], r[0]};
  auto e = d;
  dpm::update_allocations(rng, perm, e);
  CHECK(e.allocations == std::vector<std::int32_t>{1, 0, 1, 0, 1});
  // Extreme residuals whose densities underflow still normalize in log space.
  const Eigen::VectorXd far = dpm::allocation_log_probabilities(1e4, d);
  CHECK(std::exp(far[1]) == doctest::Approx(1.0));
  CHECK(std::isfinite(far[1]));
}

TEST_CASE("allocation probabilities follow the weighted Normal densities") {
  auto d = two_atoms(0.3, -1.0, 2.0, 1.5);
  for (double r : {-2.0, 0.3, 4.0}) {
    const Eigen::VectorXd lp = dpm::allocation_log_probabilities(r, d);
    const double a = 0.3 * std::exp(-0.5 * (r + 1.0) * (r + 1.0) / 1.5);
    const double b = 0.7 * std::exp(-0.5 * (r - 2.0) * (r - 2.0) / 1.5);
    CHECK(std::exp(lp[0]) == doctest::Approx(a / (a + b)).epsilon(1e-13));
    CHECK(std::exp(lp[1]) == doctest::Approx(b / (a + b)).epsilon(1e-13));
  }
}

TEST_CASE("empty atoms are redrawn from the base measure") {
  auto cfg = base_config();
  Rng rng(4);
  auto d = dpm::initial_state(rng, 3, 4, 1.0, cfg);
  d.base_mean = 5.0;
  d.base_var = 0.25;
  const std::vector<double> r{0.1, 0.2, -0.1, 0.0};
  std::vector<double> empty_means, empty_vars;
  for (int t = 0; t < 20000; ++t) {
    std::fill(d.allocations.begin(), d.allocations.end(), 0);
    d.recount();
    dpm::update_sticks_and_atoms(rng, r, d, cfg);
    CHECK(std::abs(weight_sum(d) - 1.0) <= 1e-12);
    empty_means.push_back(d.means[2]);
    empty_vars.push_back(d.vars[2]);
  }
  const double se = std::sqrt(0.25 / 20000.0);
  CHECK(std::abs(stats::mean(empty_means) - 5.0) < 4.0 * se);
  CHECK(std::abs(stats::variance(empty_means) - 0.25) < 0.02);
  // Atom variance prior InvGamma(2, 1) has median 1 / Gamma(2, 1) median.
  CHECK(std::abs(stats::median(empty_vars) - 1.0 / 1.678346990016661) < 0.03);
}

TEST_CASE("an atom with many equal residuals concentrates at their value") {
  auto cfg = base_config();
  Rng rng(5);
  auto d = dpm::initial_state(rng, 3, 10000, 1.0, cfg);
  d.base_var = 1e6;
  const std::vector<double> r(10000, 7.0);
  for (int t = 0; t < 50; ++t) dpm::update_sticks_and_atoms(rng, r, d, cfg);
  CHECK(std::abs(d.means[0] - 7.0) < 0.05);
  CHECK(std::abs(weight_sum(d) - 1.0) <= 1e-12);
  CHECK_NOTHROW(d.check_invariants());
}

TEST_CASE("single-atom updates keep the mean pinned at zero") {
  auto cfg = base_config();
  Rng rng(6);
  auto d = dpm::initial_state(rng, 1, 3, 1.0, cfg);
  const std::vector<double> r{5.0, 6.0, 7.0};
  dpm::update_sticks_and_atoms(rng, r, d, cfg);
  CHECK(d.means[0] == 0.0);
  CHECK(d.weights[0] == 1.0);
}

TEST_CASE("concentration update") {
  ModelConfig cfg;
  Rng rng(7);
  DpmState d = dpm::initial_state(rng, 5, 0, 1.0, cfg);
  std::vector<double> prior;
  for (int t = 0; t < 100000; ++t) prior.push_back(dpm::update_concentration(rng, d, 0, cfg));
  CHECK(std::abs(stats::mean(prior) - 1.0) < 4.0 * std::sqrt(1.0 / 100000.0));
  CHECK(std::abs(stats::variance(prior) - 1.0) < 0.05);

  // One occupied atom among 1000 units pulls c below the prior median log 2.
  DpmState one = dpm::initial_state(rng, 5, 1000, 1.0, cfg);
  std::vector<double> post;
  for (int t = 0; t < 1000; ++t) post.push_back(dpm::update_concentration(rng, one, 1000, cfg));
  CHECK(stats::median(post) < std::log(2.0));
  for (double c : post) CHECK(c > 0.0);
}

TEST_CASE("base measure update") {
  ModelConfig cfg;
  Rng rng(8);
  DpmState d = dpm::initial_state(rng, 6, 0, 1.0, cfg);
  d.means.setZero();
  d.base_var = 1e-4;
  std::vector<double> omega;
  for (int t = 0; t < 1000; ++t) {
    d.base_var = 1e-4;
    const auto c = dpm::base_mean_conditional(d);
    omega.push_back(c.mean);
    dpm::update_base_measure(rng, d, cfg);
    CHECK(d.base_var > 0.0);
    CHECK(d.hyper_var > 0.0);
  }
  CHECK(std::abs(stats::mean(omega)) < 1e-3);
  DpmState empty;
  CHECK_THROWS_AS(dpm::update_base_measure(rng, empty, cfg), InvalidArgument);
}

TEST_CASE("recentering") {
  DpmState single;
  single.sticks = single.weights = Eigen::VectorXd::Ones(1);
  single.means = Eigen::VectorXd::Constant(1, 3.0);
  single.vars = Eigen::VectorXd::Ones(1);
  single.allocations = {0, 0};
  single.counts = {2};
  CHECK(dpm::recenter(single) == 3.0);
  CHECK(single.means[0] == 0.0);
  CHECK(dpm::recenter(single) == 0.0);

  auto d = two_atoms(0.5, -1.0, 3.0, 1.0);
  d.allocations = {0, 0, 0, 1};
  d.recount();
  const double shift = dpm::recenter(d);
  CHECK(shift == doctest::Approx(0.0));
  CHECK(std::abs(d.allocation_mean()) < 1e-12);
}

TEST_CASE("recentering with intercept absorption leaves the likelihood unchanged") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30;
    Eigen::VectorXd y(n), z(n);
    Eigen::MatrixXd x(n, 2);
    std::vector<std::uint8_t> dv(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      y[ii] = 3.0 * rng.normal();
      z[ii] = static_cast<double>(i % 2);
      x(ii, 0) = rng.normal();
      x(ii, 1) = rng.normal();
      dv[i] = i % 3 == 0 ? 1 : 0;
    }
    const ModelData m(y, dv, z, x);
    ModelConfig cfg;
    cfg.dpm_truncation = 6;
    ParamState s = sampler::initial_state(rng, m, cfg, 6);
    s.d_star = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (int arm : {1, 0}) {
      auto& dp = s.dpm(arm);
      for (auto& a : dp.allocations) a = static_cast<std::int32_t>(rng.uniform() * 6);
      dp.recount();
      for (Eigen::Index j = 0; j < 6; ++j) dp.means[j] = 4.0 * rng.normal();
    }
    const double before = sampler::log_likelihood(s, m);
    for (int arm : {1, 0}) s.outcome(arm).intercept += dpm::recenter(s.dpm(arm));
    CHECK(sampler::log_likelihood(s, m) == doctest::Approx(before).epsilon(1e-12));
    CHECK(std::abs(std::abs(sampler::log_likelihood(s, m) - before)) < 1e-9);
  }
}

TEST_CASE("mixture fit recovers the mean of two-component data") {
  auto cfg = base_config();
  cfg.dpm_truncation = 20;
  Rng rng(10);
  const std::size_t n = 1000;
  std::vector<double> r(n);
  for (auto& v : r) v = rng.uniform() < 0.7 ? sample_normal(rng, -2.0, 0.5) : sample_normal(rng, 4.0, 0.5);
  auto d = dpm::initial_state(rng, 20, n, stats::variance(r), cfg);
  std::vector<double> mix_mean;
  for (int t = 0; t < 3000; ++t) {
    dpm::update_allocations(rng, r, d);
    dpm::update_sticks_and_atoms(rng, r, d, cfg);
    dpm::update_concentration(rng, d, n, cfg);
    dpm::update_base_measure(rng, d, cfg);
    CHECK(std::abs(weight_sum(d) - 1.0) <= 1e-12);
    if (t >= 1000) mix_mean.push_back(d.weights.dot(d.means));
  }
  const double se = std::sqrt(stats::variance(r) / static_cast<double>(n));
  CHECK(std::abs(stats::mean(mix_mean) - stats::mean(r)) < 2.0 * se);
  CHECK(d.occupied() >= 2);
}
