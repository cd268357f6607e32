#include "dpmliv/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "dpmliv/error.hpp"
#include "dpmliv/linalg.hpp"
#include "dpmliv/log.hpp"
#include "dpmliv/parallel.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv {

ModelData::ModelData(Eigen::VectorXd y_, std::vector<std::uint8_t> d_, Eigen::VectorXd z_, Eigen::MatrixXd x_)
    : y(std::move(y_)), d(std::move(d_)), z(std::move(z_)), x(std::move(x_)) {
  const auto n = static_cast<std::size_t>(y.size());
  if (d.size() != n || static_cast<std::size_t>(z.size()) != n || static_cast<std::size_t>(x.rows()) != n)
    throw InvalidArgument("model data: y, d, z and x disagree on the number of units");
  position.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 1) throw InvalidArgument("model data: treatment must be 0 or 1");
    position[i] = units[d[i]].size();
    units[d[i]].push_back(i);
  }
}

ModelData ModelData::from(const Dataset& data) { return ModelData(data.y(), data.d(), data.z(), data.x()); }

namespace sampler {

namespace {

double prior_precision(std::size_t col, const ModelConfig& cfg) {
  return 1.0 / (col == 0 ? cfg.prior_intercept_variance : cfg.prior_coef_variance);
}

// Atom variance and mean for unit i under its arm's current allocation.
std::pair<double, double> unit_atom(const ParamState& s, const ModelData& m, std::size_t i) {
  const auto& dp = s.dpm(m.d[i]);
  const std::size_t pos = m.position[i];
  const auto k = pos < dp.allocations.size() ? static_cast<std::size_t>(dp.allocations[pos]) : 0;
  return {dp.means[static_cast<Eigen::Index>(k)], dp.vars[static_cast<Eigen::Index>(k)]};
}

// Keeps allocations aligned with the arm sizes when the data change under a
// state (prior-predictive checks regenerate treatment between sweeps).
void sync_allocations(ParamState& s, const ModelData& m) {
  for (int arm : {1, 0}) {
    auto& dp = s.dpm(arm);
    if (dp.allocations.size() != m.units[arm].size()) {
      dp.allocations.assign(m.units[arm].size(), 0);
      dp.recount();
    }
  }
}

MvnParams to_moments(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b) {
  Eigen::MatrixXd cov = precision.inverse();
  return {linalg::solve_spd(precision, b), cov};
}

// Posterior precision and A'W t for the treatment regression.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> treatment_system(const ParamState& s, const ModelData& m,
                                                             const ModelConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(m.n());
  const auto p = static_cast<Eigen::Index>(m.p());
  Eigen::MatrixXd a(n, p + 3);
  a.col(0).setOnes();
  a.col(1) = m.z;
  a.middleCols(2, p) = m.x;
  a.col(p + 2) = s.theta;
  Eigen::MatrixXd q = a.transpose() * a;
  for (Eigen::Index j = 0; j < q.rows(); ++j) q(j, j) += prior_precision(static_cast<std::size_t>(j), cfg);
  Eigen::VectorXd b = a.transpose() * s.d_star;
  return {q, b};
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> outcome_system(const ParamState& s, const ModelData& m, int arm,
                                                           const ModelConfig& cfg) {
  const auto& units = m.units[arm];
  const auto& dp = s.dpm(arm);
  const auto rows = static_cast<Eigen::Index>(units.size());
  const auto p = static_cast<Eigen::Index>(m.p());
  Eigen::MatrixXd a(rows, p + 2);
  Eigen::VectorXd w(rows), t(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto i = static_cast<Eigen::Index>(units[static_cast<std::size_t>(r)]);
    const auto k = static_cast<Eigen::Index>(dp.allocations[static_cast<std::size_t>(r)]);
    a(r, 0) = 1.0;
    a.block(r, 1, 1, p) = m.x.row(i);
    a(r, p + 1) = s.theta[i];
    w[r] = 1.0 / dp.vars[k];
    t[r] = m.y[i] - dp.means[k];
  }
  Eigen::MatrixXd q = a.transpose() * w.asDiagonal() * a;
  for (Eigen::Index j = 0; j < q.rows(); ++j) q(j, j) += prior_precision(static_cast<std::size_t>(j), cfg);
  Eigen::VectorXd b = a.transpose() * w.cwiseProduct(t);
  return {q, b};
}

}  // namespace

std::size_t truncation(const ModelConfig& cfg, Variant variant) {
  return variant == Variant::NormalLiv ? 1 : static_cast<std::size_t>(cfg.dpm_truncation);
}

void check_design(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  std::vector<std::string> names{"intercept", "z"};
  for (const auto& c : data.column_names()) names.push_back(c);
  Eigen::MatrixXd a(n, p + 2);
  a.col(0).setOnes();
  a.col(1) = data.z();
  a.rightCols(p) = data.x();
  linalg::require_full_rank(a, names, "treatment design [intercept, z, X]");

  std::vector<std::string> arm_names{"intercept"};
  for (const auto& c : data.column_names()) arm_names.push_back(c);
  for (int arm : {1, 0}) {
    const auto& units = data.arm_units(arm);
    Eigen::MatrixXd b(static_cast<Eigen::Index>(units.size()), p + 1);
    for (std::size_t r = 0; r < units.size(); ++r) {
      b(static_cast<Eigen::Index>(r), 0) = 1.0;
      b.block(static_cast<Eigen::Index>(r), 1, 1, p) = data.x().row(static_cast<Eigen::Index>(units[r]));
    }
    linalg::require_full_rank(b, arm_names, "outcome design [intercept, X] for arm d=" + std::to_string(arm));
  }
}

Eigen::VectorXd treatment_index(const ParamState& s, const ModelData& m) {
  const auto& t = s.treatment;
  Eigen::VectorXd eta = m.x * t.beta;
  eta.array() += t.intercept;
  eta += t.gamma * m.z + t.loading * s.theta;
  return eta;
}

Eigen::VectorXd arm_residuals(const ParamState& s, const ModelData& m, int arm) {
  const auto& units = m.units[arm];
  const auto& o = s.outcome(arm);
  Eigen::VectorXd r(static_cast<Eigen::Index>(units.size()));
  for (std::size_t k = 0; k < units.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(units[k]);
    r[static_cast<Eigen::Index>(k)] = m.y[i] - o.intercept - m.x.row(i).dot(o.beta) - o.loading * s.theta[i];
  }
  return r;
}

ParamState initial_state(Rng& rng, const ModelData& m, const ModelConfig& cfg, std::size_t h) {
  const auto n = static_cast<Eigen::Index>(m.n());
  const auto p = static_cast<Eigen::Index>(m.p());
  ParamState s;
  const double treated = static_cast<double>(m.units[1].size()) / static_cast<double>(m.n());
  s.treatment.intercept = norm_quantile(std::clamp(treated, 0.01, 0.99));
  s.treatment.beta = Eigen::VectorXd::Zero(p);
  s.treatment.loading = 0.1;
  s.theta.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.theta[i] = rng.normal();
  s.d_star = Eigen::VectorXd::Zero(n);

  for (int arm : {1, 0}) {
    const auto& units = m.units[arm];
    auto& o = s.outcome(arm);
    o.beta = Eigen::VectorXd::Zero(p);
    o.loading = 0.1;
    double init_var = 1.0;
    if (units.size() > static_cast<std::size_t>(p) + 2) {
      Eigen::MatrixXd a(static_cast<Eigen::Index>(units.size()), p + 1);
      Eigen::VectorXd y(a.rows());
      for (std::size_t r = 0; r < units.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(units[r]);
        a(static_cast<Eigen::Index>(r), 0) = 1.0;
        a.block(static_cast<Eigen::Index>(r), 1, 1, p) = m.x.row(i);
        y[static_cast<Eigen::Index>(r)] = m.y[i];
      }
      try {
        const Eigen::VectorXd coef = linalg::ols(a, y);
        o.intercept = coef[0];
        o.beta = coef.tail(p);
        const Eigen::VectorXd res = y - a * coef;
        init_var = res.squaredNorm() / static_cast<double>(res.size() - p - 1);
      } catch (const RankError&) {
        o.intercept = y.mean();
      }
    }
    s.dpm(arm) = dpm::initial_state(rng, h, units.size(), init_var, cfg);
  }
  return s;
}

void update_dstar(Rng& rng, ParamState& s, const ModelData& m) {
  const Eigen::VectorXd eta = treatment_index(s, m);
  s.d_star.resize(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    s.d_star[i] = m.d[static_cast<std::size_t>(i)] ? sample_truncated_normal(rng, eta[i], 1.0, 0.0, kInf)
                                                   : sample_truncated_normal(rng, eta[i], 1.0, -kInf, 0.0);
  }
}

dpm::NormalParams theta_conditional(std::size_t i, const ParamState& s, const ModelData& m) {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto& t = s.treatment;
  const auto& o = s.outcome(m.d[i]);
  const auto [mu, var] = unit_atom(s, m, i);
  const double rd = s.d_star[ii] - (t.intercept + t.gamma * m.z[ii] + m.x.row(ii).dot(t.beta));
  const double ry = m.y[ii] - (o.intercept + m.x.row(ii).dot(o.beta) + mu);
  const double prec = 1.0 + t.loading * t.loading + o.loading * o.loading / var;
  return {(t.loading * rd + o.loading * ry / var) / prec, 1.0 / prec};
}

void update_theta(Rng& rng, ParamState& s, const ModelData& m) {
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto c = theta_conditional(i, s, m);
    s.theta[static_cast<Eigen::Index>(i)] = sample_normal(rng, c.mean, c.var);
  }
}

namespace {

// Per-unit treatment index and outcome residual, both without the factor
// term, with the unit's atom variance.
struct CollapsedTerms {
  Eigen::VectorXd a, ry, var;
};

CollapsedTerms collapsed_terms(const ParamState& s, const ModelData& m) {
  const auto n = static_cast<Eigen::Index>(m.n());
  const auto& t = s.treatment;
  CollapsedTerms c{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = s.outcome(m.d[static_cast<std::size_t>(i)]);
    const auto [mu, var] = unit_atom(s, m, static_cast<std::size_t>(i));
    c.a[i] = t.intercept + t.gamma * m.z[i] + m.x.row(i).dot(t.beta);
    c.ry[i] = m.y[i] - (o.intercept + m.x.row(i).dot(o.beta) + mu);
    c.var[i] = var;
  }
  return c;
}

// Mean and variance of D* given y with theta integrated out.
std::pair<double, double> dstar_given_y(double a, double ry, double v, double ad, double al) {
  const double total = al * al + v;
  return {a + ad * al * ry / total, 1.0 + ad * ad - ad * ad * al * al / total};
}

// sum_i log p(d_i, y_i) with theta and D* integrated out. The treatment
// index is multiplied by `k`, and `shift` is added to the atom variances of
// arm `shift_arm`. With `only_arm` >= 0 the sum runs over that arm only.
double collapsed_sum(const CollapsedTerms& c, const ModelData& m, double k, double ad, const double a[2],
                     int shift_arm, double shift, int only_arm) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < c.a.size(); ++i) {
    const int arm = m.d[static_cast<std::size_t>(i)];
    if (only_arm >= 0 && arm != only_arm) continue;
    const double v = c.var[i] + (arm == shift_arm ? shift : 0.0);
    const double al = a[arm];
    const double total = al * al + v;
    const auto [mean, var] = dstar_given_y(k * c.a[i], c.ry[i], v, ad, al);
    const double u = mean / std::sqrt(var);
    ll += norm_logcdf(arm ? u : -u) - 0.5 * (std::log(2.0 * std::numbers::pi * total) + c.ry[i] * c.ry[i] / total);
  }
  return ll;
}

double loading_log_prior(double a, const ModelConfig& cfg) { return -0.5 * a * a / cfg.prior_coef_variance; }

double treatment_log_prior(const TreatmentEquation& t, const ModelConfig& cfg) {
  return -0.5 * (t.intercept * t.intercept / cfg.prior_intercept_variance +
                 (t.gamma * t.gamma + t.beta.squaredNorm() + t.loading * t.loading) / cfg.prior_coef_variance);
}

double atom_var_log_prior(double v, const ModelConfig& cfg) {
  const double shape = cfg.atom_variance_prior.shape, scale = cfg.atom_variance_prior.scale;
  return -(shape + 1.0) * std::log(v) - scale / v;
}

constexpr double kLoadingSteps[3] = {0.1, 0.3, 1.0};

}  // namespace

double collapsed_log_density(const ParamState& s, const ModelData& m) {
  const double a[2] = {s.outcome0.loading, s.outcome1.loading};
  return collapsed_sum(collapsed_terms(s, m), m, 1.0, s.treatment.loading, a, -1, 0.0, -1);
}

void update_loadings(Rng& rng, ParamState& s, const ModelData& m, const ModelConfig& cfg) {
  CollapsedTerms c = collapsed_terms(s, m);
  double a[2] = {s.outcome0.loading, s.outcome1.loading};
  auto& t = s.treatment;
  const double dim = static_cast<double>(m.p() + 2);

  // alpha_D moves with the rest of the treatment equation rescaled by
  // k = sqrt((1 + alpha_D'^2) / (1 + alpha_D^2)), keeping Pr(D = 1 | x, z) fixed.
  // Steps scale with sqrt(1 + alpha_D^2), so the proposal is not symmetric.
  auto log_q = [](double to, double from, double step) {
    const double var = step * step * (1.0 + from * from);
    return -0.5 * (std::log(var) + (to - from) * (to - from) / var);
  };
  for (double step : kLoadingSteps) {
    const double prop = t.loading + step * std::sqrt(1.0 + t.loading * t.loading) * rng.normal();
    const double k = std::sqrt((1.0 + prop * prop) / (1.0 + t.loading * t.loading));
    TreatmentEquation next = t;
    next.intercept *= k;
    next.gamma *= k;
    next.beta *= k;
    next.loading = prop;
    const double log_ratio = collapsed_sum(c, m, k, prop, a, -1, 0.0, -1) -
                             collapsed_sum(c, m, 1.0, t.loading, a, -1, 0.0, -1) + treatment_log_prior(next, cfg) -
                             treatment_log_prior(t, cfg) + dim * std::log(k) + log_q(t.loading, prop, step) -
                             log_q(prop, t.loading, step);
    if (std::log(rng.uniform()) < log_ratio) {
      t = next;
      c.a *= k;
    }
  }

  // Moves alpha_d along the ridge alpha_d^2 + sigma^2_j = const over occupied atoms.
  for (int arm : {1, 0}) {
    auto& dp = s.dpm(arm);
    if (m.units[arm].empty()) continue;
    const double scale = std::sqrt(a[arm] * a[arm] + dp.allocation_variance());
    double applied = 0.0;
    for (double step : kLoadingSteps) {
      const double prop = a[arm] + step * scale * rng.normal();
      const double shift = a[arm] * a[arm] - prop * prop;
      double log_ratio = loading_log_prior(prop, cfg) - loading_log_prior(a[arm], cfg);
      bool valid = true;
      for (std::size_t j = 0; j < dp.size() && valid; ++j) {
        if (dp.counts[j] == 0) continue;
        const double v = dp.vars[static_cast<Eigen::Index>(j)] + applied;
        valid = v + shift > 0.0;
        if (valid) log_ratio += atom_var_log_prior(v + shift, cfg) - atom_var_log_prior(v, cfg);
      }
      const double u = rng.uniform();
      if (!valid) continue;
      double next[2] = {a[0], a[1]};
      next[arm] = prop;
      log_ratio += collapsed_sum(c, m, 1.0, t.loading, next, arm, applied + shift, arm) -
                   collapsed_sum(c, m, 1.0, t.loading, a, arm, applied, arm);
      if (std::log(u) < log_ratio) {
        a[arm] = prop;
        applied += shift;
      }
    }
    for (std::size_t j = 0; j < dp.size(); ++j)
      if (dp.counts[j] > 0) dp.vars[static_cast<Eigen::Index>(j)] += applied;
  }
  s.outcome0.loading = a[0];
  s.outcome1.loading = a[1];
}

void update_dstar_marginal(Rng& rng, ParamState& s, const ModelData& m) {
  const CollapsedTerms c = collapsed_terms(s, m);
  s.d_star.resize(c.a.size());
  for (Eigen::Index i = 0; i < c.a.size(); ++i) {
    const int arm = m.d[static_cast<std::size_t>(i)];
    const auto [mean, var] = dstar_given_y(c.a[i], c.ry[i], c.var[i], s.treatment.loading, s.outcome(arm).loading);
    s.d_star[i] = arm ? sample_truncated_normal(rng, mean, var, 0.0, kInf) : sample_truncated_normal(rng, mean, var, -kInf, 0.0);
  }
}

MvnParams treatment_conditional(const ParamState& s, const ModelData& m, const ModelConfig& cfg) {
  const auto [q, b] = treatment_system(s, m, cfg);
  return to_moments(q, b);
}

void update_treatment(Rng& rng, ParamState& s, const ModelData& m, const ModelConfig& cfg) {
  const auto [q, b] = treatment_system(s, m, cfg);
  const Eigen::VectorXd draw = linalg::sample_mvn_precision(rng, q, b);
  const auto p = static_cast<Eigen::Index>(m.p());
  s.treatment.intercept = draw[0];
  s.treatment.gamma = draw[1];
  s.treatment.beta = draw.segment(2, p);
  s.treatment.loading = draw[p + 2];
}

MvnParams outcome_conditional(const ParamState& s, const ModelData& m, int arm, const ModelConfig& cfg) {
  const auto [q, b] = outcome_system(s, m, arm, cfg);
  return to_moments(q, b);
}

void update_outcome(Rng& rng, ParamState& s, const ModelData& m, int arm, const ModelConfig& cfg) {
  const auto [q, b] = outcome_system(s, m, arm, cfg);
  const Eigen::VectorXd draw = linalg::sample_mvn_precision(rng, q, b);
  const auto p = static_cast<Eigen::Index>(m.p());
  auto& o = s.outcome(arm);
  o.intercept = draw[0];
  o.beta = draw.segment(1, p);
  o.loading = draw[p + 1];
}

void update_mixture(Rng& rng, ParamState& s, const ModelData& m, int arm, const ModelConfig& cfg) {
  auto& dp = s.dpm(arm);
  const Eigen::VectorXd r = arm_residuals(s, m, arm);
  const std::span<const double> res(r.data(), static_cast<std::size_t>(r.size()));
  if (dp.size() == 1) {
    dp.allocations.assign(res.size(), 0);
    dp.recount();
    dpm::update_atoms(rng, res, dp, cfg);
    return;
  }
  dpm::update_allocations(rng, res, dp);
  dpm::update_sticks_and_atoms(rng, res, dp, cfg);
  s.outcome(arm).intercept += dpm::recenter(dp);
}

void flip_signs(ParamState& s) {
  s.theta = -s.theta;
  s.treatment.loading = -s.treatment.loading;
  s.outcome1.loading = -s.outcome1.loading;
  s.outcome0.loading = -s.outcome0.loading;
}

bool sign_switch(Rng& rng, ParamState& s) {
  const bool flip = rng.uniform() < 0.5;
  if (flip) flip_signs(s);
  return flip;
}

double log_likelihood(const ParamState& s, const ModelData& m) {
  const Eigen::VectorXd eta = treatment_index(s, m);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    ll += norm_logcdf(m.d[static_cast<std::size_t>(i)] ? eta[i] : -eta[i]);
  for (int arm : {1, 0}) {
    const Eigen::VectorXd r = arm_residuals(s, m, arm);
    ll += dpm::log_likelihood(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), s.dpm(arm));
  }
  return ll;
}

void sweep(Rng& rng, ParamState& s, const ModelData& m, const ModelConfig& cfg) {
  sync_allocations(s, m);
  update_loadings(rng, s, m, cfg);
  update_dstar_marginal(rng, s, m);
  update_theta(rng, s, m);
  update_treatment(rng, s, m, cfg);
  update_outcome(rng, s, m, 1, cfg);
  update_outcome(rng, s, m, 0, cfg);
  update_mixture(rng, s, m, 1, cfg);
  update_mixture(rng, s, m, 0, cfg);
  for (int arm : {1, 0})
    if (s.dpm(arm).size() > 1) dpm::update_concentration(rng, s.dpm(arm), m.units[arm].size(), cfg);
  for (int arm : {1, 0})
    if (s.dpm(arm).size() > 1) dpm::update_base_measure(rng, s.dpm(arm), cfg);
  sign_switch(rng, s);
}

double mixture_variance(const DpmState& d) {
  const double mean = d.weights.dot(d.means);
  return d.weights.dot(d.vars + d.means.cwiseAbs2()) - mean * mean;
}

ImpliedCovariance implied_covariance(const ParamState& s) {
  const double ad = s.treatment.loading, a1 = s.outcome1.loading, a0 = s.outcome0.loading;
  return {ad * ad + 1.0, a1 * a1 + mixture_variance(s.dpm1), a0 * a0 + mixture_variance(s.dpm0),
          ad * a1,       ad * a0,                             a1 * a0};
}

}  // namespace sampler

namespace {

ParamState retained_copy(const ParamState& s, bool keep_latent) {
  ParamState r = s;
  if (!keep_latent) {
    r.d_star.resize(0);
    r.dpm1.allocations.clear();
    r.dpm0.allocations.clear();
  }
  return r;
}

struct OutcomeScale {
  double center = 0.0;
  double scale = 1.0;
};

OutcomeScale outcome_scale(const Eigen::VectorXd& y, const ModelConfig& cfg) {
  OutcomeScale sc;
  if (!cfg.standardize_outcome || y.size() < 2) return sc;
  const double mean = y.mean();
  const double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1));
  if (!(sd > 0.0)) return sc;
  sc.center = mean;
  sc.scale = sd;
  return sc;
}

void unscale(ParamState& s, const OutcomeScale& sc) {
  const double k = sc.scale, k2 = k * k;
  for (int arm : {1, 0}) {
    auto& o = s.outcome(arm);
    o.intercept = sc.center + k * o.intercept;
    o.beta *= k;
    o.loading *= k;
    auto& d = s.dpm(arm);
    d.means *= k;
    d.vars *= k2;
    d.base_mean *= k;
    d.base_var *= k2;
    d.hyper_mean *= k;
    d.hyper_var *= k2;
  }
}

}  // namespace

PosteriorDraws gibbs_run(const FitRequest& request, int chain_id, std::size_t truncation) {
  const auto& cfg = request.config;
  cfg.validate();
  if (truncation == 0) throw InvalidArgument("mixture truncation must be >= 1");
  sampler::check_design(request.data);
  const OutcomeScale sc = outcome_scale(request.data.y(), cfg);
  const ModelData m((request.data.y().array() - sc.center) / sc.scale, request.data.d(), request.data.z(),
                    request.data.x());
  Rng rng(cfg.seed, static_cast<std::uint64_t>(chain_id));
  ParamState s = sampler::initial_state(rng, m, cfg, truncation);

  PosteriorDraws out;
  out.meta = cfg;
  out.variant = request.variant;
  out.chain_id = chain_id;
  out.iterations.reserve(static_cast<std::size_t>(cfg.retained()));
  const bool trace = log_level() == LogLevel::Trace;
  for (int t = 1; t <= cfg.n_iter; ++t) {
    sampler::sweep(rng, s, m, cfg);
    const double ll = sampler::log_likelihood(s, m);
    if (!std::isfinite(ll))
      throw NumericalError("log-likelihood became non-finite at iteration " + std::to_string(t) + " of chain " +
                           std::to_string(chain_id));
    if (t % 1000 == 0 || (trace && t % 100 == 0))
      log_line(t % 1000 == 0 ? LogLevel::Info : LogLevel::Trace,
               "chain=" + std::to_string(chain_id) + " iter=" + std::to_string(t) + " loglik=" + text::format_double(ll));
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) out.iterations.push_back(retained_copy(s, request.keep_latent));
  }
  for (auto& st : out.iterations) unscale(st, sc);
  return out;
}

PosteriorDraws gibbs_run(const FitRequest& request, int chain_id) {
  return gibbs_run(request, chain_id, sampler::truncation(request.config, request.variant));
}

std::vector<PosteriorDraws> run_chains(const FitRequest& request, std::size_t workers) {
  request.config.validate();
  std::vector<PosteriorDraws> chains(static_cast<std::size_t>(request.config.n_chains));
  parallel_for(chains.size(), workers, [&](std::size_t k) { chains[k] = gibbs_run(request, static_cast<int>(k)); });
  return chains;
}

}  // namespace dpmliv
