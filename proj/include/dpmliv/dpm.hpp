#pragma once

#include <span>

#include <Eigen/Core>

#include "dpmliv/config.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/state.hpp"

/// Blocked-Gibbs updates for a truncated stick-breaking Dirichlet process
/// mixture of Normals, used for one arm's outcome errors.
///
/// Base measure: mu_j ~ Normal(omega, tau), sigma^2_j ~ InvGamma(shape, scale)
/// with omega ~ Normal(m, K), m ~ Normal(m0_mean, m0_var), K ~ InvGamma,
/// tau ~ InvGamma(nu, psi_inv) and concentration c ~ Gamma(a, b).
/// With a single atom (H = 1) the mixture is one Normal error whose mean is
/// pinned at zero; only its variance is updated.
namespace dpmliv::dpm {

/// w_j = v_j * prod_{l<j} (1 - v_l); the last stick is forced to 1 so the
/// final weight absorbs the remaining mass. Elements before the last must lie
/// in (0, 1); the value of the last element is ignored.
Eigen::VectorXd stick_weights(std::span<const double> v);

/// Fresh state with every unit on atom 0 (mean 0, variance `init_var`) and
/// the remaining atoms drawn from the base measure.
DpmState initial_state(Rng& rng, std::size_t truncation, std::size_t n_units, double init_var,
                       const ModelConfig& cfg);

/// Normalized log allocation probabilities of one residual over the atoms.
Eigen::VectorXd allocation_log_probabilities(double residual, const DpmState& state);

/// Reassigns every unit: Pr(k_i = j) proportional to w_j N(r_i; mu_j, sigma^2_j),
/// normalized in log space. Refreshes counts.
void update_allocations(Rng& rng, std::span<const double> residuals, DpmState& state);

/// v_j ~ Beta(1 + n_j, c + sum_{l>j} n_l), then weights.
void update_sticks(Rng& rng, DpmState& state);

/// Conjugate atom updates: mu_j | sigma^2_j then sigma^2_j | mu_j. Empty atoms
/// are redrawn from the base measure.
void update_atoms(Rng& rng, std::span<const double> residuals, DpmState& state, const ModelConfig& cfg);

void update_sticks_and_atoms(Rng& rng, std::span<const double> residuals, DpmState& state,
                             const ModelConfig& cfg);

/// Escobar-West auxiliary-variable update of c given the number of occupied
/// atoms among `n_units`. With no units the draw is from the Gamma(a, b) prior.
double update_concentration(Rng& rng, DpmState& state, std::size_t n_units, const ModelConfig& cfg);

/// tau, omega, m, K in turn, each from its conjugate conditional given all atoms.
void update_base_measure(Rng& rng, DpmState& state, const ModelConfig& cfg);

/// Subtracts the allocation-weighted mean of the atom means from every atom
/// and returns it; the caller adds it to the arm intercept.
double recenter(DpmState& state);

/// sum_i log N(r_i; mu_{k_i}, sigma^2_{k_i}) under the current allocations.
double log_likelihood(std::span<const double> residuals, const DpmState& state);

// Conditional distributions, exposed for verification.

struct NormalParams {
  double mean;
  double var;
};
struct GammaParams {
  double shape;
  double rate;
};
struct BetaParams {
  double a;
  double b;
};

NormalParams atom_mean_conditional(std::size_t j, std::span<const double> residuals, const DpmState& state);
/// Inverse-gamma (shape, scale) for sigma^2_j given mu_j.
GammaParams atom_variance_conditional(std::size_t j, std::span<const double> residuals, const DpmState& state,
                                      const ModelConfig& cfg);
BetaParams stick_conditional(std::size_t j, const DpmState& state);

/// Two-component Gamma mixture for c given the auxiliary eta:
/// pi * Gamma(a + k, rate) + (1 - pi) * Gamma(a + k - 1, rate).
struct ConcentrationMixture {
  double pi;
  double shape_hi;
  double shape_lo;
  double rate;
};
ConcentrationMixture concentration_conditional(double eta, std::size_t occupied, std::size_t n_units,
                                               const ModelConfig& cfg);

/// Inverse-gamma (shape, scale) for tau given atoms and omega.
GammaParams base_variance_conditional(const DpmState& state, const ModelConfig& cfg);
NormalParams base_mean_conditional(const DpmState& state);
NormalParams hyper_mean_conditional(const DpmState& state, const ModelConfig& cfg);
/// Inverse-gamma (shape, scale) for K.
GammaParams hyper_var_conditional(const DpmState& state, const ModelConfig& cfg);

}  // namespace dpmliv::dpm
