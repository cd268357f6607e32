#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmliv/config.hpp"
#include "dpmliv/dataset.hpp"
#include "dpmliv/effects.hpp"

namespace dpmliv {

enum class ErrorLaw { Normal, Gamma, Mixture };

/// Finite mixture of Normals; weights are normalized when sampling.
struct MixtureLaw {
  std::vector<double> weights{0.15, 0.4, 0.25, 0.05};
  std::vector<double> means{-0.1, 1.0, 1.0, 10.0};
  std::vector<double> vars{0.01, 0.1, 0.1, 10.0};

  /// sum_j w_j mu_j / sum_j w_j.
  double mean() const;
};

/// Data-generating design: covariates X1, X2 ~ Normal(0, 1), X3 ~ Bernoulli(x3_prob),
/// instrument Z ~ Bernoulli(z_prob), theta ~ Normal(0, theta_sd^2) and
///   D* = bD0 + gamma Z + X bD + alpha_d theta + Normal(0, 1),  D = 1(D* > 0)
///   Y(d) = b_d0 + X b_d + alpha_dd theta + e_d,
/// with outcome errors drawn raw (uncentered) from the error law.
struct SimDesign {
  std::string name = "gamma_strong";
  std::size_t n = 2000;
  double beta0_0 = 90.0;
  Eigen::Vector3d beta0{-0.5, 1.5, 0.0};
  double beta1_0 = 100.0;
  Eigen::Vector3d beta1{-0.5, 1.5, 10.0};
  /// Treatment intercept; calibrated to target_treated when unset.
  std::optional<double> betaD_0;
  Eigen::Vector3d betaD{0.0, 0.0, 1.0};
  double gamma = 1.5;
  double alpha_d = 0.2;
  double alpha1 = 0.1;
  double alpha0 = 0.1;
  double theta_sd = 0.1;
  ErrorLaw error_law = ErrorLaw::Gamma;
  double normal_sd = 0.5;
  double gamma_shape = 3.0;
  double gamma_rate = 0.1;
  MixtureLaw mixture;
  double target_treated = 0.3;
  double x3_prob = 0.4;
  double z_prob = 0.5;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// gamma_strong, gamma_weak, normal_strong, mixture_strong, mixture_weak.
SimDesign design_preset(const std::string& name);
std::vector<std::string> design_names();

/// Treatment intercept giving the target treated fraction, by bisection on
/// the empirical treated rate of 1e5 units drawn with a fixed seed.
double calibrate_treatment_intercept(const SimDesign& design);

struct SimTruth {
  Eigen::VectorXd y1, y0;
  double true_ate = 0.0;  // mean(y1 - y0)
  /// Sample effect per subgroup condition text.
  std::map<std::string, double> true_cate;
  double treated_fraction = 0.0;
  double treatment_intercept = 0.0;

  /// Mean of y1 - y0 over the units selected by `condition`.
  double sample_effect(const Dataset& data, const Condition& condition) const;
};

struct Simulated {
  Dataset data;
  SimTruth truth;
};

/// Covariates are named x1, x2, x3; true_cate holds "x3==1" and "x3==0".
Simulated simulate(const SimDesign& design);

/// Synthetic data shaped like a registry cohort: n = 7963 units, binary
/// instrument with P(Z=1) = 0.714, treatment rates 0.055 / 0.298 by
/// instrument level, outcomes in $1000 with skewed errors and a planted
/// sex-specific effect (female -2.8, male -4.3).
struct PciDesign {
  std::size_t n = 7963;
  double z_prob = 0.714;
  double rate_z0 = 0.055;
  double rate_z1 = 0.298;
  double effect_female = -2.8;
  double effect_male = -4.3;
  double male_prob = 0.7;
  double alpha_d = 0.3;
  double alpha1 = 1.0;
  double alpha0 = 1.0;
  double error_shape = 4.0;
  double error_rate = 1.0;
  std::uint64_t seed = 1;
};

/// Covariates age (centered decades), male, diabetes, acs;
/// true_cate holds "male==1" and "male==0".
Simulated simulate_pci(const PciDesign& design);

struct ReplicationRow {
  std::string estimand;  // "ATE" or "CATE(x3==1)"
  std::size_t n = 0;
  std::string method;
  double bias = 0.0;      // mean |estimate - truth|
  double width = 0.0;     // mean CI width
  double coverage = 0.0;  // % of intervals covering the truth
  std::size_t reps = 0;   // successful replications
  std::size_t failures = 0;
};

struct ReplicationReport {
  std::string design;
  double treatment_intercept = 0.0;
  std::vector<ReplicationRow> rows;

  const ReplicationRow& row(const std::string& estimand, const std::string& method) const;
};

/// Per replication: simulate with seed derive_seed(design.seed, rep), fit each
/// method (dpm, normal, 2sls, oracle), and score ATE and CATE(x3==1) against the
/// sample truth. A failed fit counts as a failure, not an error.
ReplicationReport replicate(const SimDesign& design, std::size_t n_reps, const std::vector<std::string>& methods,
                            const ModelConfig& config, std::size_t workers = 0);

/// Columns estimand, n, method, bias, width, coverage, reps, failures.
void write_replication_csv(const ReplicationReport& report, const std::filesystem::path& path);

}  // namespace dpmliv
