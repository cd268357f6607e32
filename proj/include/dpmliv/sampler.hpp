#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dpmliv/config.hpp"
#include "dpmliv/dataset.hpp"
#include "dpmliv/dpm.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/state.hpp"

/// Gibbs sampler for the latent-factor latent-index model
///
///   D*   = b_D0 + gamma z + x b_D + alpha_D theta + e_D,   e_D ~ Normal(0, 1)
///   D    = 1(D* > 0)
///   Y(d) = b_d0 + x b_d + alpha_d theta + e_d,             e_d ~ DPM of Normals
///   theta ~ Normal(0, 1)
///
/// with Normal priors on all coefficients. The Normal-error variant is the
/// same sampler with a single mixture atom per arm.
namespace dpmliv {

/// Raw model inputs without the Dataset invariants (an arm may be empty).
/// Used directly by prior-predictive checks; fits go through a Dataset.
struct ModelData {
  Eigen::VectorXd y;
  std::vector<std::uint8_t> d;
  Eigen::VectorXd z;
  Eigen::MatrixXd x;
  std::vector<std::size_t> units[2];  // unit indices per arm
  std::vector<std::size_t> position;  // index of unit i within its arm

  ModelData(Eigen::VectorXd y, std::vector<std::uint8_t> d, Eigen::VectorXd z, Eigen::MatrixXd x);
  static ModelData from(const Dataset& data);

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }
  std::size_t p() const { return static_cast<std::size_t>(x.cols()); }
};

struct FitRequest {
  const Dataset& data;
  ModelConfig config;
  Variant variant = Variant::DpmLiv;
  /// Keep d* and allocations in retained states (large).
  bool keep_latent = false;
};

/// Mean vector and covariance of a multivariate Normal conditional.
struct MvnParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

namespace sampler {

/// Mixture atoms per arm: 1 for the Normal variant, the configured truncation otherwise.
std::size_t truncation(const ModelConfig& cfg, Variant variant);

/// Throws RankError naming collinear columns of [1, z, X] or of [1, X] within an arm.
void check_design(const Dataset& data);

/// eta_i = b_D0 + gamma z_i + x_i b_D + alpha_D theta_i.
Eigen::VectorXd treatment_index(const ParamState& s, const ModelData& m);
/// y_i - (b_d0 + x_i b_d + alpha_d theta_i) for the units of one arm.
Eigen::VectorXd arm_residuals(const ParamState& s, const ModelData& m, int arm);

ParamState initial_state(Rng& rng, const ModelData& m, const ModelConfig& cfg, std::size_t truncation);

/// D*_i ~ Normal(eta_i, 1) truncated to the side given by d_i.
void update_dstar(Rng& rng, ParamState& s, const ModelData& m);

/// log p(d, y | everything except theta and d*), with both integrated out.
double collapsed_log_density(const ParamState& s, const ModelData& m);
/// Metropolis moves on the loadings with theta and d* integrated out: random
/// walks on alpha_D that rescale the other treatment coefficients to keep
/// Pr(D = 1 | x, z) fixed, and for each arm a move of alpha_d that keeps
/// alpha_d^2 + sigma^2_j fixed over occupied atoms. Leaves d* and theta
/// stale; update_dstar_marginal and update_theta must follow.
void update_loadings(Rng& rng, ParamState& s, const ModelData& m, const ModelConfig& cfg);
/// D*_i from its conditional given y_i with theta integrated out.
void update_dstar_marginal(Rng& rng, ParamState& s, const ModelData& m);

dpm::NormalParams theta_conditional(std::size_t i, const ParamState& s, const ModelData& m);
void update_theta(Rng& rng, ParamState& s, const ModelData& m);

/// Conditional of (b_D0, gamma, b_D, alpha_D) given d* and theta.
MvnParams treatment_conditional(const ParamState& s, const ModelData& m, const ModelConfig& cfg);
void update_treatment(Rng& rng, ParamState& s, const ModelData& m, const ModelConfig& cfg);

/// Conditional of (b_d0, b_d, alpha_d) given theta and the arm's allocations.
MvnParams outcome_conditional(const ParamState& s, const ModelData& m, int arm, const ModelConfig& cfg);
void update_outcome(Rng& rng, ParamState& s, const ModelData& m, int arm, const ModelConfig& cfg);

/// Allocations, sticks and atoms for one arm, then recentering with the
/// shift absorbed into the arm intercept.
void update_mixture(Rng& rng, ParamState& s, const ModelData& m, int arm, const ModelConfig& cfg);

/// Negates theta, alpha_D, alpha_1, alpha_0.
void flip_signs(ParamState& s);
/// flip_signs with probability 1/2; returns whether it flipped.
bool sign_switch(Rng& rng, ParamState& s);

/// sum_i log Phi(+-eta_i) + sum over arms of the mixture log density of the
/// outcome residuals under the current allocations.
double log_likelihood(const ParamState& s, const ModelData& m);

/// One full sweep in the fixed order loadings and d* (theta integrated out), theta, treatment coefficients,
/// outcome coefficients (arm 1, arm 0), mixtures (arm 1, arm 0), concentration,
/// base measure, sign switch. With one atom per arm only the atom variance is
/// updated in the mixture step.
void sweep(Rng& rng, ParamState& s, const ModelData& m, const ModelConfig& cfg);

/// Error covariances implied by one state, with Var(theta) = 1 and each
/// outcome error variance taken from its mixture weights.
struct ImpliedCovariance {
  double var_ud, var_u1, var_u0;
  double cov_ud_u1, cov_ud_u0, cov_u1_u0;
};
ImpliedCovariance implied_covariance(const ParamState& s);

/// Variance of the mixture sum_j w_j Normal(mu_j, sigma^2_j).
double mixture_variance(const DpmState& d);

}  // namespace sampler

/// Runs one chain with the stream (config.seed, chain_id) and an explicit
/// number of mixture atoms per arm.
PosteriorDraws gibbs_run(const FitRequest& request, int chain_id, std::size_t truncation);
/// Same, with truncation taken from the variant.
PosteriorDraws gibbs_run(const FitRequest& request, int chain_id = 0);

/// config.n_chains independent chains on up to `workers` threads (0 = all cores).
std::vector<PosteriorDraws> run_chains(const FitRequest& request, std::size_t workers = 0);

}  // namespace dpmliv
