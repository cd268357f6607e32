#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmliv/dataset.hpp"
#include "dpmliv/state.hpp"

namespace dpmliv::diagnostics {

/// Potential scale reduction sqrt(V/W), V = (n-1)/n W + (m+1)/(m n) B, for
/// m >= 2 chains of equal length n >= 10. Reported no lower than 1.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

struct ParameterRhat {
  std::string name;
  double rhat = 1.0;
};

/// R-hat for every regression coefficient across chains. Loadings enter by
/// absolute value since their joint sign is not identified.
/// Names follow the draws CSV columns; covariates use `covariate_names` when given.
std::vector<ParameterRhat> coefficient_rhats(const std::vector<PosteriorDraws>& chains,
                                             const std::vector<std::string>& covariate_names = {});

struct FirstStage {
  /// Incremental F for adding z to a linear-probability model of D on [1, X].
  double f_stat = 0.0;
  double f_df1 = 1.0, f_df2 = 0.0;
  bool strong = false;  // f_stat > 10
  /// Likelihood-ratio chi-square (1 df) from full vs reduced logistic fits.
  double lr_chi2 = 0.0;
  /// The logistic fit did not converge to finite coefficients (separation).
  bool separation = false;
};

FirstStage instrument_f_stat(const Dataset& data);

/// P(D=1 | Z=1) - P(D=1 | Z=0). Throws InvalidArgument unless z is binary with both levels.
double complier_proportion(const Dataset& data);
/// Same quantity from the two treatment rates.
double complier_proportion(double rate_z1, double rate_z0);

enum class Grouping { ByTreatment, ByInstrument };

struct BalanceRow {
  std::string covariate;
  double mean_1 = 0.0, mean_0 = 0.0;
  /// |mean_1 - mean_0| / sqrt((s_1^2 + s_0^2) / 2); NaN when the pooled SD is 0.
  double std_diff = 0.0;
  bool computable = true;
  bool flagged = false;  // std_diff > 0.1
};

std::vector<BalanceRow> balance_table(const Dataset& data, Grouping grouping);

struct FalsificationReport {
  double mean_z1 = 0.0, mean_z0 = 0.0;
  double difference = 0.0;  // mean_z1 - mean_z0
  double ci_low = 0.0, ci_high = 0.0;
  bool pass = false;
};

/// Difference in outcome means across instrument levels with a Welch
/// normal-approximation 95% interval. Passes when the interval covers 0 or
/// |difference| < tolerance.
FalsificationReport falsification_check(const Dataset& data, std::span<const double> outcome, double tolerance = 0.0);

void write_balance_csv(const std::vector<BalanceRow>& rows, const std::filesystem::path& path);

}  // namespace dpmliv::diagnostics
