#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmliv/config.hpp"

namespace dpmliv {

/// Truncated stick-breaking mixture for one arm's outcome errors.
///
/// Invariants: weights >= 0 summing to 1 within 1e-12, vars > 0,
/// concentration > 0, base_var > 0, allocations in [0, H), counts[j] equal to
/// the number of allocations equal to j.
struct DpmState {
  Eigen::VectorXd sticks;   // v_j, last fixed at 1
  Eigen::VectorXd weights;  // w_j
  Eigen::VectorXd means;    // mu_j
  Eigen::VectorXd vars;     // sigma^2_j
  std::vector<std::int32_t> allocations;  // one per unit observed in the arm
  std::vector<std::int32_t> counts;       // occupancy per atom
  double concentration = 1.0;  // c
  double base_mean = 0.0;      // omega
  double base_var = 1.0;       // tau
  double hyper_mean = 0.0;     // m
  double hyper_var = 1.0;      // K

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t occupied() const;
  std::size_t n_units() const;

  /// Allocation-weighted mean of the atom means (mu-bar).
  double allocation_mean() const;
  /// Allocation-weighted mean of the atom variances (sigma-bar^2).
  double allocation_variance() const;

  /// Recomputes counts from allocations.
  void recount();
  /// Throws NumericalError if an invariant is broken.
  void check_invariants() const;
};

struct TreatmentEquation {
  double intercept = 0.0;
  double gamma = 0.0;
  Eigen::VectorXd beta;
  double loading = 0.0;  // alpha_D
};

struct OutcomeEquation {
  double intercept = 0.0;
  Eigen::VectorXd beta;
  double loading = 0.0;  // alpha_d
};

/// One state of the Gibbs chain. The treatment error variance is fixed at 1
/// and is not stored.
struct ParamState {
  TreatmentEquation treatment;
  OutcomeEquation outcome1, outcome0;
  Eigen::VectorXd theta;   // latent factor, one per unit
  Eigen::VectorXd d_star;  // latent treatment utility; may be empty in retained draws
  DpmState dpm1, dpm0;

  const OutcomeEquation& outcome(int arm) const { return arm == 1 ? outcome1 : outcome0; }
  OutcomeEquation& outcome(int arm) { return arm == 1 ? outcome1 : outcome0; }
  const DpmState& dpm(int arm) const { return arm == 1 ? dpm1 : dpm0; }
  DpmState& dpm(int arm) { return arm == 1 ? dpm1 : dpm0; }
};

enum class Variant { DpmLiv, NormalLiv };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Retained (post burn-in, thinned) states of one chain, in draw order.
struct PosteriorDraws {
  std::vector<ParamState> iterations;
  ModelConfig meta;
  Variant variant = Variant::DpmLiv;
  int chain_id = 0;

  std::size_t size() const { return iterations.size(); }
};

/// Concatenates the retained states of several chains.
std::vector<ParamState> pool(const std::vector<PosteriorDraws>& chains);

}  // namespace dpmliv
