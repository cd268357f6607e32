#include <cmath>

#include <Eigen/LU>

#include "doctest.h"
#include "dpmliv/dpm.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/sampler.hpp"
#include "oracle.hpp"

using namespace dpmliv;
using oracle::Support;

namespace {

constexpr double kMeanTol = 1e-3;

ModelData toy_data() {
  Eigen::MatrixXd x(3, 1);
  x << 0.5, -1.2, 0.3;
  return ModelData(Eigen::Vector3d(1.3, -0.4, 0.7), {1, 1, 0}, Eigen::Vector3d(1.0, 0.0, 1.0), x);
}

DpmState toy_dpm(std::vector<double> sticks, std::vector<double> means, std::vector<double> vars,
                 std::vector<std::int32_t> alloc, double c) {
  DpmState d;
  d.sticks = Eigen::Map<Eigen::VectorXd>(sticks.data(), static_cast<Eigen::Index>(sticks.size()));
  d.weights = dpm::stick_weights(sticks);
  d.means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  d.vars = Eigen::Map<Eigen::VectorXd>(vars.data(), static_cast<Eigen::Index>(vars.size()));
  d.allocations = std::move(alloc);
  d.counts.assign(sticks.size(), 0);
  d.recount();
  d.concentration = c;
  d.base_mean = 0.2;
  d.base_var = 2.0;
  d.hyper_mean = -0.1;
  d.hyper_var = 1.5;
  return d;
}

ParamState toy_state() {
  ParamState s;
  s.treatment = {0.2, 0.8, Eigen::VectorXd::Constant(1, -0.3), 0.6};
  s.outcome1 = {0.4, Eigen::VectorXd::Constant(1, 0.9), -0.5};
  s.outcome0 = {-0.1, Eigen::VectorXd::Constant(1, 0.2), 0.7};
  s.theta = Eigen::Vector3d(0.3, -0.8, 1.1);
  s.d_star = Eigen::Vector3d(0.5, 0.9, -0.4);
  s.dpm1 = toy_dpm({0.5, 0.4, 1.0}, {0.1, -0.6, 1.5}, {0.8, 0.5, 1.2}, {0, 1}, 1.3);
  s.dpm0 = toy_dpm({0.6, 0.3, 1.0}, {-0.2, 0.4, 0.9}, {0.6, 1.1, 0.9}, {1}, 0.7);
  return s;
}

ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.prior_intercept_variance = 4.0;
  cfg.prior_coef_variance = 2.0;
  return cfg;
}

template <class Set>
oracle::Moments joint_moments(const ParamState& base, Set set, Support support) {
  const auto m = toy_data();
  const auto cfg = toy_config();
  return oracle::quad_moments(
      [&](double v) {
        ParamState s = base;
        set(s, v);
        return oracle::log_joint(s, m, cfg);
      },
      support);
}

// Conditional of coordinate j of a multivariate Normal given the others at x.
dpm::NormalParams coordinate_conditional(const MvnParams& mvn, const Eigen::VectorXd& x, Eigen::Index j) {
  const Eigen::MatrixXd q = mvn.cov.inverse();
  double shift = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (k != j) shift += q(j, k) * (x[k] - mvn.mean[k]);
  return {mvn.mean[j] - shift / q(j, j), 1.0 / q(j, j)};
}

std::vector<double> residuals(const ParamState& s, const ModelData& m, int arm) {
  const Eigen::VectorXd r = sampler::arm_residuals(s, m, arm);
  return {r.data(), r.data() + r.size()};
}

}  // namespace

TEST_CASE("theta conditional matches quadrature of the joint density") {
  const auto s = toy_state();
  const auto m = toy_data();
  for (std::size_t i = 0; i < 3; ++i) {
    const auto c = sampler::theta_conditional(i, s, m);
    const auto q = joint_moments(s, [i](ParamState& t, double v) { t.theta[static_cast<Eigen::Index>(i)] = v; }, Support::Real);
    CHECK(std::abs(c.mean - q.mean) < kMeanTol);
    CHECK(std::abs(c.var - q.var) < kMeanTol);
  }
}

TEST_CASE("latent utility conditional is the truncated Normal on the observed side") {
  const auto s = toy_state();
  const auto m = toy_data();
  const Eigen::VectorXd eta = sampler::treatment_index(s, m);
  for (Eigen::Index i = 0; i < 3; ++i) {
    const bool treated = m.d[static_cast<std::size_t>(i)] == 1;
    const auto q = joint_moments(s, [i](ParamState& t, double v) { t.d_star[i] = v; },
                                 treated ? Support::Positive : Support::Negative);
    const double mean = treated ? truncated_normal_mean(eta[i], 1.0, 0.0, kInf)
                                : truncated_normal_mean(eta[i], 1.0, -kInf, 0.0);
    CHECK(std::abs(mean - q.mean) < kMeanTol);
  }
}

TEST_CASE("treatment coefficient conditionals match quadrature") {
  const auto s = toy_state();
  const auto m = toy_data();
  const auto mvn = sampler::treatment_conditional(s, m, toy_config());
  Eigen::VectorXd x(4);
  x << s.treatment.intercept, s.treatment.gamma, s.treatment.beta[0], s.treatment.loading;
  for (Eigen::Index j = 0; j < 4; ++j) {
    const auto c = coordinate_conditional(mvn, x, j);
    const auto q = joint_moments(
        s,
        [j](ParamState& t, double v) {
          if (j == 0) t.treatment.intercept = v;
          if (j == 1) t.treatment.gamma = v;
          if (j == 2) t.treatment.beta[0] = v;
          if (j == 3) t.treatment.loading = v;
        },
        Support::Real);
    CHECK(std::abs(c.mean - q.mean) < kMeanTol);
    CHECK(std::abs(c.var - q.var) < kMeanTol);
  }
}

TEST_CASE("outcome coefficient conditionals match quadrature") {
  const auto s = toy_state();
  const auto m = toy_data();
  for (int arm : {1, 0}) {
    const auto mvn = sampler::outcome_conditional(s, m, arm, toy_config());
    const auto& o = s.outcome(arm);
    const Eigen::Vector3d x(o.intercept, o.beta[0], o.loading);
    for (Eigen::Index j = 0; j < 3; ++j) {
      const auto c = coordinate_conditional(mvn, x, j);
      const auto q = joint_moments(
          s,
          [arm, j](ParamState& t, double v) {
            auto& e = t.outcome(arm);
            if (j == 0) e.intercept = v;
            if (j == 1) e.beta[0] = v;
            if (j == 2) e.loading = v;
          },
          Support::Real);
      CHECK(std::abs(c.mean - q.mean) < kMeanTol);
      CHECK(std::abs(c.var - q.var) < kMeanTol);
    }
  }
}

TEST_CASE("atom mean and variance conditionals match quadrature") {
  const auto s = toy_state();
  const auto m = toy_data();
  const auto cfg = toy_config();
  for (int arm : {1, 0}) {
    const auto r = residuals(s, m, arm);
    for (std::size_t j = 0; j < 3; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const auto c = dpm::atom_mean_conditional(j, r, s.dpm(arm));
      const auto q = joint_moments(s, [arm, jj](ParamState& t, double v) { t.dpm(arm).means[jj] = v; }, Support::Real);
      CHECK(std::abs(c.mean - q.mean) < kMeanTol);
      CHECK(std::abs(c.var - q.var) < kMeanTol);

      const auto iv = dpm::atom_variance_conditional(j, r, s.dpm(arm), cfg);
      const auto qv = joint_moments(s, [arm, jj](ParamState& t, double v) { t.dpm(arm).vars[jj] = v; }, Support::Positive);
      CHECK(std::abs(iv.rate / (iv.shape - 1.0) - qv.mean) < kMeanTol);
    }
  }
}

TEST_CASE("stick conditionals match quadrature") {
  const auto s = toy_state();
  for (int arm : {1, 0}) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const auto c = dpm::stick_conditional(j, s.dpm(arm));
      const auto q = joint_moments(
          s,
          [arm, jj](ParamState& t, double v) {
            t.dpm(arm).sticks[jj] = v;
          },
          Support::Unit);
      CHECK(std::abs(c.a / (c.a + c.b) - q.mean) < kMeanTol);
    }
  }
}

TEST_CASE("allocation probabilities match enumeration of the joint density") {
  const auto s = toy_state();
  const auto m = toy_data();
  const auto cfg = toy_config();
  for (int arm : {1, 0}) {
    const auto r = residuals(s, m, arm);
    for (std::size_t u = 0; u < r.size(); ++u) {
      const Eigen::VectorXd lp = dpm::allocation_log_probabilities(r[u], s.dpm(arm));
      std::vector<double> joint(3);
      double mx = -kInf;
      for (int k = 0; k < 3; ++k) {
        ParamState t = s;
        t.dpm(arm).allocations[u] = k;
        joint[static_cast<std::size_t>(k)] = oracle::log_joint(t, m, cfg);
        mx = std::max(mx, joint[static_cast<std::size_t>(k)]);
      }
      double total = 0.0;
      for (double v : joint) total += std::exp(v - mx);
      for (int k = 0; k < 3; ++k)
        CHECK(std::exp(lp[k]) == doctest::Approx(std::exp(joint[static_cast<std::size_t>(k)] - mx) / total).epsilon(1e-12));
    }
  }
}

TEST_CASE("base measure conditionals match quadrature") {
  const auto s = toy_state();
  const auto cfg = toy_config();
  for (int arm : {1, 0}) {
    const auto& d = s.dpm(arm);
    const auto tau = dpm::base_variance_conditional(d, cfg);
    const auto qt = joint_moments(s, [arm](ParamState& t, double v) { t.dpm(arm).base_var = v; }, Support::Positive);
    CHECK(std::abs(tau.rate / (tau.shape - 1.0) - qt.mean) < kMeanTol);

    const auto om = dpm::base_mean_conditional(d);
    const auto qo = joint_moments(s, [arm](ParamState& t, double v) { t.dpm(arm).base_mean = v; }, Support::Real);
    CHECK(std::abs(om.mean - qo.mean) < kMeanTol);
    CHECK(std::abs(om.var - qo.var) < kMeanTol);

    const auto hm = dpm::hyper_mean_conditional(d, cfg);
    const auto qm = joint_moments(s, [arm](ParamState& t, double v) { t.dpm(arm).hyper_mean = v; }, Support::Real);
    CHECK(std::abs(hm.mean - qm.mean) < kMeanTol);
    CHECK(std::abs(hm.var - qm.var) < kMeanTol);

    const auto hv = dpm::hyper_var_conditional(d, cfg);
    const auto qk = joint_moments(s, [arm](ParamState& t, double v) { t.dpm(arm).hyper_var = v; }, Support::Positive);
    CHECK(std::abs(hv.rate / (hv.shape - 1.0) - qk.mean) < kMeanTol);
  }
}

TEST_CASE("concentration conditional matches quadrature of the augmented partition density") {
  ModelConfig cfg;
  cfg.concentration_prior = {2.0, 1.5};
  for (const auto& [eta, k, n] : {std::tuple{0.35, 2u, 5u}, std::tuple{0.8, 1u, 3u}, std::tuple{0.05, 3u, 3u}}) {
    // p(c, eta | k) is proportional to p(c) c^(k-1) (c + n) eta^c (1 - eta)^(n-1).
    const auto q = oracle::quad_moments(
        [&](double c) {
          return oracle::gamma_logpdf(c, cfg.concentration_prior.a, cfg.concentration_prior.b) + (k - 1.0) * std::log(c) +
                 std::log(c + n) + c * std::log(eta);
        },
        Support::Positive);
    const auto mix = dpm::concentration_conditional(eta, k, n, cfg);
    const double mean = mix.pi * mix.shape_hi / mix.rate + (1.0 - mix.pi) * mix.shape_lo / mix.rate;
    CHECK(std::abs(mean - q.mean) < kMeanTol);
  }
}

TEST_CASE("concentration update draws follow the mixture conditional on average") {
  ModelConfig cfg;
  cfg.concentration_prior = {2.0, 1.5};
  DpmState d = toy_state().dpm1;
  Rng rng(11);
  // Sampling the pair (eta, c) repeatedly targets p(c | k, n) proportional to p(c) c^k Gamma(c) / Gamma(c + n).
  const std::size_t n = 2;
  const auto k = d.occupied();
  const auto q = oracle::quad_moments(
      [&](double c) {
        return oracle::gamma_logpdf(c, 2.0, 1.5) + static_cast<double>(k) * std::log(c) + std::lgamma(c) -
               std::lgamma(c + static_cast<double>(n));
      },
      Support::Positive);
  double sum = 0.0;
  const int draws = 200000;
  for (int t = 0; t < draws; ++t) sum += dpm::update_concentration(rng, d, n, cfg);
  CHECK(std::abs(sum / draws - q.mean) < 0.03);
}

TEST_CASE("collapsed density matches quadrature over theta") {
  const auto m = toy_data();
  const auto s = toy_state();
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double expected = 0.0;
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const int arm = m.d[i];
    const auto& o = s.outcome(arm);
    const auto& mix = s.dpm(arm);
    const auto j = static_cast<Eigen::Index>(mix.allocations[m.position[i]]);
    const double a = s.treatment.intercept + s.treatment.gamma * m.z[ii] + m.x.row(ii).dot(s.treatment.beta);
    const double b = o.intercept + m.x.row(ii).dot(o.beta) + mix.means[j];
    auto f = [&](double th) {
      const double p1 = 0.5 * std::erfc(-(a + s.treatment.loading * th) / std::sqrt(2.0));
      return (arm ? p1 : 1.0 - p1) *
             std::exp(oracle::norm_logpdf(m.y[ii], b + o.loading * th, mix.vars[j]) + oracle::norm_logpdf(th, 0.0, 1.0));
    };
    expected += std::log(GK::integrate(f, -40.0, 40.0, 20, 1e-13));
  }
  CHECK(sampler::collapsed_log_density(s, m) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("latent utilities with theta integrated out match quadrature moments") {
  const auto m = toy_data();
  auto s = toy_state();
  Rng rng(15);
  constexpr int kDraws = 200000;
  std::vector<double> sum(m.n(), 0.0), sq(m.n(), 0.0);
  for (int r = 0; r < kDraws; ++r) {
    sampler::update_dstar_marginal(rng, s, m);
    for (std::size_t i = 0; i < m.n(); ++i) {
      const double v = s.d_star[static_cast<Eigen::Index>(i)];
      sum[i] += v;
      sq[i] += v * v;
    }
  }
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const int arm = m.d[i];
    const auto& o = s.outcome(arm);
    const auto& mix = s.dpm(arm);
    const auto j = static_cast<Eigen::Index>(mix.allocations[m.position[i]]);
    const double a = s.treatment.intercept + s.treatment.gamma * m.z[ii] + m.x.row(ii).dot(s.treatment.beta);
    const double b = o.intercept + m.x.row(ii).dot(o.beta) + mix.means[j];
    auto logf = [&](double u) {
      using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
      auto g = [&](double th) {
        return std::exp(oracle::norm_logpdf(u, a + s.treatment.loading * th, 1.0) +
                        oracle::norm_logpdf(m.y[ii], b + o.loading * th, mix.vars[j]) +
                        oracle::norm_logpdf(th, 0.0, 1.0));
      };
      return std::log(GK::integrate(g, -40.0, 40.0, 20, 1e-13));
    };
    const auto mom = oracle::quad_moments(logf, arm ? Support::Positive : Support::Negative);
    const double mean = sum[i] / kDraws;
    const double var = sq[i] / kDraws - mean * mean;
    CHECK(std::abs(mean - mom.mean) < 4.0 * std::sqrt(mom.var / kDraws));
    CHECK(var == doctest::Approx(mom.var).epsilon(0.02));
  }
}
