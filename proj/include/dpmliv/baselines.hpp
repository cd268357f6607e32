#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmliv/condition.hpp"
#include "dpmliv/config.hpp"
#include "dpmliv/dataset.hpp"
#include "dpmliv/effects.hpp"
#include "dpmliv/state.hpp"

namespace dpmliv {

struct TslsResult {
  double estimate = 0.0;  // coefficient on the fitted treatment
  double se = 0.0;        // heteroskedasticity-robust (HC0)
  double ci_low = 0.0, ci_high = 0.0;
  double first_stage_f = 0.0;
  bool weak_instrument = false;  // first-stage F < 10
  /// Second-stage coefficients on [1, D, X].
  Eigen::VectorXd coefficients;
  /// Covariates dropped because they were constant in the fitted rows.
  std::vector<std::string> dropped_columns;
};

/// Two-stage least squares: D on [1, Z, X], then Y on [1, D-hat, X], with an
/// HC0 sandwich variance built from structural residuals Y - [1, D, X] b.
/// Covariates constant over the data are dropped. Throws RankError on a
/// singular design.
TslsResult two_stage_least_squares(const Dataset& data);

/// ATE from the full sample or CATE by refitting on the subgroup, as an
/// EffectEstimate with method "2sls" and the 95% interval from the sandwich SE.
EffectEstimate tsls_effect(const Dataset& data, Estimand estimand, const Condition& condition = {});

/// The sampler with one Normal error per arm.
std::vector<PosteriorDraws> normal_liv(const Dataset& data, const ModelConfig& config, std::size_t workers = 0);

}  // namespace dpmliv
