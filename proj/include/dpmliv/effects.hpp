#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmliv/condition.hpp"
#include "dpmliv/dataset.hpp"
#include "dpmliv/state.hpp"

namespace dpmliv {

enum class Estimand { ATE, CATE, ATT, PB };

std::string to_string(Estimand e);
Estimand estimand_from_string(const std::string& s);

/// Which difference counts as a benefit in the probability of benefit.
enum class BenefitDirection {
  TreatedMinusControl,  // Pr(Y(1) - Y(0) > H)
  ControlMinusTreated,  // Pr(Y(0) - Y(1) > H)
};

std::string to_string(BenefitDirection b);
BenefitDirection benefit_from_string(const std::string& s);

struct EffectRequest {
  Estimand estimand = Estimand::ATE;
  /// Subgroup for CATE; ignored otherwise.
  std::string condition;
  /// Threshold H for PB.
  double threshold = 0.0;
  BenefitDirection direction = BenefitDirection::TreatedMinusControl;
  /// PB from the full per-draw mixtures instead of the mean atom variance.
  bool full_mixture = false;
  /// Instrument level for ATT; each unit's own z when unset.
  std::optional<double> z_value;
  /// Latent-factor draws averaged in the ATT denominator. Every unit's theta
  /// is used when n is at most this; otherwise an evenly strided subset.
  std::size_t att_theta_draws = 256;
};

/// Posterior median and central 95% interval of one estimand.
struct EffectEstimate {
  Estimand estimand = Estimand::ATE;
  std::string condition;
  double posterior_median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> draws;
  /// ATT draws dropped because the selection-probability denominator underflowed.
  std::size_t dropped = 0;
  std::string method = "dpm";
};

/// Summarizes per-draw values into an EffectEstimate.
EffectEstimate summarize_draws(Estimand estimand, std::string condition, std::vector<double> draws);

namespace effects {

/// Unit-level Delta_i = (b_10 - b_00) + x_i (b_1 - b_0) + (a_1 - a_0) theta_i
/// + mu-bar_1 - mu-bar_0 for one state.
Eigen::VectorXd unit_effects(const ParamState& s, const Dataset& data);

/// Mean of unit_effects over `rows`.
double ate_draw(const ParamState& s, const Dataset& data, std::span<const std::size_t> rows);

/// ATT for one state; nullopt when the denominator underflows for some unit.
std::optional<double> att_draw(const ParamState& s, const Dataset& data, std::optional<double> z_value,
                               std::size_t theta_draws = 256);

/// Mean over units of Pr(Delta_i > H) for one state.
double pb_draw(const ParamState& s, const Dataset& data, double threshold,
               BenefitDirection direction = BenefitDirection::TreatedMinusControl, bool full_mixture = false);

}  // namespace effects

EffectEstimate ate(std::span<const ParamState> draws, const Dataset& data);
/// Throws InvalidArgument when the condition selects no unit.
EffectEstimate cate(std::span<const ParamState> draws, const Dataset& data, const Condition& condition);
EffectEstimate att(std::span<const ParamState> draws, const Dataset& data, std::optional<double> z_value = {},
                   std::size_t theta_draws = 256);
EffectEstimate pb(std::span<const ParamState> draws, const Dataset& data, double threshold,
                  BenefitDirection direction = BenefitDirection::TreatedMinusControl, bool full_mixture = false);

EffectEstimate estimate(std::span<const ParamState> draws, const Dataset& data, const EffectRequest& request);

/// Table with columns method, estimand, condition, median, ci_low, ci_high, dropped.
void write_effects_csv(const std::vector<EffectEstimate>& rows, const std::filesystem::path& path);
/// Same rows plus metadata (benefit direction, threshold) as JSON.
void write_effects_json(const std::vector<EffectEstimate>& rows, const std::filesystem::path& path,
                        const std::string& benefit_direction, double threshold);

}  // namespace dpmliv
