#include "dpmliv/dpm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dpmliv/error.hpp"

namespace dpmliv::dpm {

namespace {

// Keeps drawn sticks strictly inside (0, 1) so weights stay well defined.
double clamp_stick(double v) {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(v, lo, hi);
}

void sample_base_atom(Rng& rng, DpmState& s, std::size_t j, const ModelConfig& cfg) {
  s.means[j] = sample_normal(rng, s.base_mean, s.base_var);
  s.vars[j] = sample_inverse_gamma(rng, cfg.atom_variance_prior.shape, cfg.atom_variance_prior.scale);
}

}  // namespace

Eigen::VectorXd stick_weights(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("stick_weights: need at least one stick");
  Eigen::VectorXd w(v.size());
  double remaining = 1.0;
  for (std::size_t j = 0; j + 1 < v.size(); ++j) {
    if (!(v[j] > 0.0 && v[j] < 1.0))
      throw InvalidArgument("stick_weights: v[" + std::to_string(j) + "] outside (0, 1)");
    w[j] = v[j] * remaining;
    remaining -= w[j];
  }
  w[v.size() - 1] = std::max(remaining, 0.0);
  return w;
}

DpmState initial_state(Rng& rng, std::size_t truncation, std::size_t n_units, double init_var,
                       const ModelConfig& cfg) {
  if (truncation == 0) throw InvalidArgument("DPM truncation must be >= 1");
  if (!(init_var > 0.0) || !std::isfinite(init_var)) init_var = 1.0;
  DpmState s;
  s.sticks = Eigen::VectorXd::Ones(truncation);
  s.weights = Eigen::VectorXd::Zero(truncation);
  s.weights[0] = 1.0;
  s.means = Eigen::VectorXd::Zero(truncation);
  s.vars = Eigen::VectorXd::Constant(truncation, init_var);
  s.allocations.assign(n_units, 0);
  s.counts.assign(truncation, 0);
  s.counts[0] = static_cast<std::int32_t>(n_units);
  s.concentration = cfg.concentration_prior.a / cfg.concentration_prior.b;
  s.hyper_mean = cfg.base_mean_hyper.m0_mean;
  s.base_mean = s.hyper_mean;
  s.base_var = cfg.base_variance_prior.psi_inv / (cfg.base_variance_prior.nu + 1.0);
  s.hyper_var = cfg.base_mean_hyper.k_scale / (cfg.base_mean_hyper.k_shape + 1.0);
  if (truncation > 1) {
    for (std::size_t j = 1; j < truncation; ++j) sample_base_atom(rng, s, j, cfg);
    update_sticks(rng, s);
  }
  return s;
}

Eigen::VectorXd allocation_log_probabilities(double residual, const DpmState& s) {
  const auto h = s.size();
  Eigen::VectorXd lp(h);
  double mx = -kInf;
  for (std::size_t j = 0; j < h; ++j) {
    if (s.weights[j] <= 0.0) {
      lp[j] = -kInf;
      continue;
    }
    const double r = residual - s.means[j];
    lp[j] = std::log(s.weights[j]) - 0.5 * std::log(s.vars[j]) - 0.5 * r * r / s.vars[j];
    mx = std::max(mx, lp[j]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < h; ++j) total += std::exp(lp[j] - mx);
  lp.array() -= mx + std::log(total);
  return lp;
}

void update_allocations(Rng& rng, std::span<const double> residuals, DpmState& s) {
  const auto h = s.size();
  s.allocations.resize(residuals.size());
  if (h == 1) {
    std::fill(s.allocations.begin(), s.allocations.end(), 0);
    s.recount();
    return;
  }
  // Per-atom constants: log w_j - log(sigma_j), 1 / sigma^2_j.
  std::vector<double> base(h), prec(h), lp(h);
  for (std::size_t j = 0; j < h; ++j) {
    base[j] = s.weights[j] > 0.0 ? std::log(s.weights[j]) - 0.5 * std::log(s.vars[j]) : -kInf;
    prec[j] = 1.0 / s.vars[j];
  }
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    double mx = -kInf;
    for (std::size_t j = 0; j < h; ++j) {
      const double r = residuals[i] - s.means[j];
      lp[j] = base[j] - 0.5 * r * r * prec[j];
      mx = std::max(mx, lp[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      lp[j] = std::exp(lp[j] - mx);
      total += lp[j];
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = 0;
    for (std::size_t j = 0; j < h; ++j) {
      if (lp[j] <= 0.0) continue;
      acc += lp[j];
      pick = j;
      if (u < acc) break;
    }
    s.allocations[i] = static_cast<std::int32_t>(pick);
  }
  s.recount();
}

BetaParams stick_conditional(std::size_t j, const DpmState& s) {
  double tail = 0.0;
  for (std::size_t l = j + 1; l < s.size(); ++l) tail += s.counts[l];
  return {1.0 + s.counts[j], s.concentration + tail};
}

void update_sticks(Rng& rng, DpmState& s) {
  const auto h = s.size();
  if (h == 1) {
    s.sticks[0] = 1.0;
    s.weights[0] = 1.0;
    return;
  }
  double tail = 0.0;
  for (std::size_t j = 0; j < h; ++j) tail += s.counts[j];
  for (std::size_t j = 0; j + 1 < h; ++j) {
    tail -= s.counts[j];
    s.sticks[j] = clamp_stick(sample_beta(rng, 1.0 + s.counts[j], s.concentration + tail));
  }
  s.sticks[h - 1] = 1.0;
  s.weights = stick_weights(std::span<const double>(s.sticks.data(), h));
}

NormalParams atom_mean_conditional(std::size_t j, std::span<const double> residuals, const DpmState& s) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (static_cast<std::size_t>(s.allocations[i]) == j) {
      sum += residuals[i];
      ++n;
    }
  }
  const double prec = 1.0 / s.base_var + static_cast<double>(n) / s.vars[j];
  return {(s.base_mean / s.base_var + sum / s.vars[j]) / prec, 1.0 / prec};
}

GammaParams atom_variance_conditional(std::size_t j, std::span<const double> residuals, const DpmState& s,
                                      const ModelConfig& cfg) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (static_cast<std::size_t>(s.allocations[i]) == j) {
      const double r = residuals[i] - s.means[j];
      ss += r * r;
      ++n;
    }
  }
  return {cfg.atom_variance_prior.shape + 0.5 * static_cast<double>(n), cfg.atom_variance_prior.scale + 0.5 * ss};
}

void update_atoms(Rng& rng, std::span<const double> residuals, DpmState& s, const ModelConfig& cfg) {
  const auto h = s.size();
  std::vector<double> sum(h, 0.0), ss(h, 0.0);
  for (std::size_t i = 0; i < residuals.size(); ++i) sum[static_cast<std::size_t>(s.allocations[i])] += residuals[i];

  if (h == 1) {
    // Single Normal error: mean pinned at zero, variance conjugate.
    s.means[0] = 0.0;
    double q = 0.0;
    for (double r : residuals) q += r * r;
    s.vars[0] = sample_inverse_gamma(rng, cfg.atom_variance_prior.shape + 0.5 * static_cast<double>(residuals.size()),
                                     cfg.atom_variance_prior.scale + 0.5 * q);
    return;
  }

  for (std::size_t j = 0; j < h; ++j) {
    if (s.counts[j] == 0) {
      sample_base_atom(rng, s, j, cfg);
      continue;
    }
    const double prec = 1.0 / s.base_var + s.counts[j] / s.vars[j];
    s.means[j] = sample_normal(rng, (s.base_mean / s.base_var + sum[j] / s.vars[j]) / prec, 1.0 / prec);
  }
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const auto k = static_cast<std::size_t>(s.allocations[i]);
    const double r = residuals[i] - s.means[k];
    ss[k] += r * r;
  }
  for (std::size_t j = 0; j < h; ++j) {
    if (s.counts[j] == 0) continue;
    s.vars[j] = sample_inverse_gamma(rng, cfg.atom_variance_prior.shape + 0.5 * s.counts[j],
                                     cfg.atom_variance_prior.scale + 0.5 * ss[j]);
  }
}

void update_sticks_and_atoms(Rng& rng, std::span<const double> residuals, DpmState& s, const ModelConfig& cfg) {
  update_sticks(rng, s);
  update_atoms(rng, residuals, s, cfg);
}

ConcentrationMixture concentration_conditional(double eta, std::size_t occupied, std::size_t n_units,
                                               const ModelConfig& cfg) {
  const double a = cfg.concentration_prior.a, b = cfg.concentration_prior.b;
  const double k = static_cast<double>(occupied), n = static_cast<double>(n_units);
  const double rate = b - std::log(eta);
  const double odds = (a + k - 1.0) / (n * rate);
  return {odds / (1.0 + odds), a + k, a + k - 1.0, rate};
}

double update_concentration(Rng& rng, DpmState& s, std::size_t n_units, const ModelConfig& cfg) {
  if (n_units == 0) {
    s.concentration = sample_gamma(rng, cfg.concentration_prior.a, cfg.concentration_prior.b);
    return s.concentration;
  }
  const auto k = std::min(s.occupied(), s.size());
  double eta = sample_beta(rng, s.concentration + 1.0, static_cast<double>(n_units));
  eta = std::max(eta, std::numeric_limits<double>::min());
  const auto mix = concentration_conditional(eta, std::max<std::size_t>(k, 1), n_units, cfg);
  const double shape = rng.uniform() < mix.pi ? mix.shape_hi : mix.shape_lo;
  // Shape a + k - 1 is zero only when a = 0, excluded by validation.
  s.concentration = std::max(sample_gamma(rng, shape, mix.rate), std::numeric_limits<double>::min());
  return s.concentration;
}

GammaParams base_variance_conditional(const DpmState& s, const ModelConfig& cfg) {
  double ss = 0.0;
  for (Eigen::Index j = 0; j < s.means.size(); ++j) {
    const double r = s.means[j] - s.base_mean;
    ss += r * r;
  }
  return {cfg.base_variance_prior.nu + 0.5 * static_cast<double>(s.size()), cfg.base_variance_prior.psi_inv + 0.5 * ss};
}

NormalParams base_mean_conditional(const DpmState& s) {
  const double prec = static_cast<double>(s.size()) / s.base_var + 1.0 / s.hyper_var;
  return {(s.means.sum() / s.base_var + s.hyper_mean / s.hyper_var) / prec, 1.0 / prec};
}

NormalParams hyper_mean_conditional(const DpmState& s, const ModelConfig& cfg) {
  const double v0 = cfg.base_mean_hyper.m0_var;
  const double prec = 1.0 / s.hyper_var + 1.0 / v0;
  return {(s.base_mean / s.hyper_var + cfg.base_mean_hyper.m0_mean / v0) / prec, 1.0 / prec};
}

GammaParams hyper_var_conditional(const DpmState& s, const ModelConfig& cfg) {
  const double r = s.base_mean - s.hyper_mean;
  return {cfg.base_mean_hyper.k_shape + 0.5, cfg.base_mean_hyper.k_scale + 0.5 * r * r};
}

void update_base_measure(Rng& rng, DpmState& s, const ModelConfig& cfg) {
  if (s.size() == 0) throw InvalidArgument("update_base_measure: no atoms");
  const auto tau = base_variance_conditional(s, cfg);
  s.base_var = sample_inverse_gamma(rng, tau.shape, tau.rate);
  const auto omega = base_mean_conditional(s);
  s.base_mean = sample_normal(rng, omega.mean, omega.var);
  const auto m = hyper_mean_conditional(s, cfg);
  s.hyper_mean = sample_normal(rng, m.mean, m.var);
  const auto k = hyper_var_conditional(s, cfg);
  s.hyper_var = sample_inverse_gamma(rng, k.shape, k.rate);
}

double recenter(DpmState& s) {
  const double shift = s.allocation_mean();
  s.means.array() -= shift;
  return shift;
}

double log_likelihood(std::span<const double> residuals, const DpmState& s) {
  double ll = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const auto k = static_cast<std::size_t>(s.allocations[i]);
    ll += norm_logpdf(residuals[i], s.means[k], s.vars[k]);
  }
  return ll;
}

}  // namespace dpmliv::dpm
