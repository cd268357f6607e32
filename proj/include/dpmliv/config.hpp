#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace dpmliv {

/// Priors, hyperpriors and MCMC settings for one fit.
///
/// JSON field names match the member names. Defaults reproduce the
/// simulation-study settings: Normal(0, 100) coefficients, c ~ Gamma(1, 1),
/// tau ~ InvGamma(nu = 1, psi_inv = 5), omega ~ Normal(m, K) with
/// m ~ Normal(0, 1) and K ~ InvGamma(1, 10), 20000 iterations with 5000
/// burn-in and thinning 10.
struct ModelConfig {
  int n_iter = 20000;
  int burn_in = 5000;
  int thin = 10;
  int n_chains = 1;
  std::uint64_t seed = 1;
  int dpm_truncation = 50;

  /// Prior variance for slopes, the instrument coefficient and the loadings.
  double prior_coef_variance = 100.0;
  /// Prior variance for the three equation intercepts.
  double prior_intercept_variance = 1e6;

  struct Concentration {
    double a = 1.0;  // shape
    double b = 1.0;  // rate
  } concentration_prior;

  /// tau ~ InvGamma(shape = nu, scale = psi_inv), so E(tau) = psi_inv / (nu - 1).
  struct BaseVariance {
    double nu = 1.0;
    double psi_inv = 5.0;
  } base_variance_prior;

  /// omega ~ Normal(m, K), m ~ Normal(m0_mean, m0_var), K ~ InvGamma(k_shape, k_scale).
  struct BaseMean {
    double m0_mean = 0.0;
    double m0_var = 1.0;
    double k_shape = 1.0;
    double k_scale = 10.0;
  } base_mean_hyper;

  /// Kernel variances sigma^2_j ~ InvGamma(shape, scale).
  struct AtomVariance {
    double shape = 2.0;
    double scale = 1.0;
  } atom_variance_prior;

  double pb_threshold = 0.0;

  /// Fit on (y - mean) / sd and map draws back, so the outcome-side priors
  /// are relative to the outcome scale.
  bool standardize_outcome = true;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  /// Number of retained draws: floor((n_iter - burn_in) / thin).
  int retained() const { return (n_iter - burn_in) / thin; }
};

nlohmann::json to_json(const ModelConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected.
ModelConfig config_from_json(const nlohmann::json& j);
ModelConfig load_config(const std::filesystem::path& path);

/// Stable 64-bit hash of the canonical JSON form, as a 16-digit hex string.
std::string config_hash(const ModelConfig& cfg);

}  // namespace dpmliv
