#include "dpmliv/effects.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>

#include "dpmliv/error.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/stats.hpp"
#include "dpmliv/text.hpp"
#include "json.hpp"

namespace dpmliv {

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::ATE: return "ATE";
    case Estimand::CATE: return "CATE";
    case Estimand::ATT: return "ATT";
    case Estimand::PB: return "PB";
  }
  return "ATE";
}

Estimand estimand_from_string(const std::string& s) {
  std::string u;
  for (char c : s) u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "ATE") return Estimand::ATE;
  if (u == "CATE") return Estimand::CATE;
  if (u == "ATT") return Estimand::ATT;
  if (u == "PB") return Estimand::PB;
  throw InvalidArgument("unknown estimand '" + s + "' (expected ate, cate, att or pb)");
}

std::string to_string(BenefitDirection b) {
  return b == BenefitDirection::TreatedMinusControl ? "treated_minus_control" : "control_minus_treated";
}

BenefitDirection benefit_from_string(const std::string& s) {
  if (s == "treated_minus_control") return BenefitDirection::TreatedMinusControl;
  if (s == "control_minus_treated") return BenefitDirection::ControlMinusTreated;
  throw InvalidArgument("unknown benefit direction '" + s + "'");
}

EffectEstimate summarize_draws(Estimand estimand, std::string condition, std::vector<double> draws) {
  EffectEstimate e;
  e.estimand = estimand;
  e.condition = std::move(condition);
  if (!draws.empty()) {
    const auto iv = stats::summarize(draws);
    e.posterior_median = iv.median;
    e.ci_low = iv.low;
    e.ci_high = iv.high;
  } else {
    e.posterior_median = e.ci_low = e.ci_high = std::numeric_limits<double>::quiet_NaN();
  }
  e.draws = std::move(draws);
  return e;
}

namespace effects {

Eigen::VectorXd unit_effects(const ParamState& s, const Dataset& data) {
  const auto& o1 = s.outcome1;
  const auto& o0 = s.outcome0;
  Eigen::VectorXd delta = data.x() * (o1.beta - o0.beta) + (o1.loading - o0.loading) * s.theta;
  delta.array() += (o1.intercept - o0.intercept) + s.dpm1.allocation_mean() - s.dpm0.allocation_mean();
  return delta;
}

double ate_draw(const ParamState& s, const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw InvalidArgument("effect over an empty set of units");
  const Eigen::VectorXd delta = unit_effects(s, data);
  double sum = 0.0;
  for (auto i : rows) sum += delta[static_cast<Eigen::Index>(i)];
  return sum / static_cast<double>(rows.size());
}

std::optional<double> att_draw(const ParamState& s, const Dataset& data, std::optional<double> z_value,
                               std::size_t theta_draws) {
  const auto n = data.n();
  const auto& t = s.treatment;
  const Eigen::VectorXd delta = unit_effects(s, data);
  // Latent-factor values for the denominator average.
  std::vector<double> thetas;
  if (theta_draws == 0 || n <= theta_draws) {
    thetas.assign(s.theta.data(), s.theta.data() + n);
  } else {
    for (std::size_t l = 0; l < theta_draws; ++l) thetas.push_back(s.theta[static_cast<Eigen::Index>(l * n / theta_draws)]);
  }
  const Eigen::VectorXd xb = data.x() * t.beta;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double z = z_value ? *z_value : data.z()[ii];
    const double base = t.intercept + t.gamma * z + xb[ii];
    double denom = 0.0;
    for (double th : thetas) denom += norm_cdf(base + t.loading * th);
    denom /= static_cast<double>(thetas.size());
    if (!(denom > 0.0)) return std::nullopt;
    total += delta[ii] * norm_cdf(base + t.loading * s.theta[ii]) / denom;
  }
  return total / static_cast<double>(n);
}

double pb_draw(const ParamState& s, const Dataset& data, double threshold, BenefitDirection direction,
               bool full_mixture) {
  if (!std::isfinite(threshold)) throw InvalidArgument("probability of benefit needs a finite threshold");
  const double sign = direction == BenefitDirection::TreatedMinusControl ? 1.0 : -1.0;
  const Eigen::VectorXd delta = unit_effects(s, data);
  const auto n = static_cast<std::size_t>(delta.size());
  double total = 0.0;
  if (!full_mixture) {
    const double sd = std::sqrt(s.dpm1.allocation_variance() + s.dpm0.allocation_variance());
    for (std::size_t i = 0; i < n; ++i)
      total += norm_sf((threshold - sign * delta[static_cast<Eigen::Index>(i)]) / sd);
    return total / static_cast<double>(n);
  }
  // Pairs of occupied atoms, weighted by allocation counts.
  struct Pair {
    double w, shift, sd;
  };
  std::vector<Pair> pairs;
  const double n1 = static_cast<double>(s.dpm1.n_units()), n0 = static_cast<double>(s.dpm0.n_units());
  const double mbar = s.dpm1.allocation_mean() - s.dpm0.allocation_mean();
  for (std::size_t j = 0; j < s.dpm1.size(); ++j) {
    if (s.dpm1.counts[j] == 0) continue;
    for (std::size_t k = 0; k < s.dpm0.size(); ++k) {
      if (s.dpm0.counts[k] == 0) continue;
      const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
      pairs.push_back({s.dpm1.counts[j] / n1 * (s.dpm0.counts[k] / n0), s.dpm1.means[jj] - s.dpm0.means[kk] - mbar,
                       std::sqrt(s.dpm1.vars[jj] + s.dpm0.vars[kk])});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double pi = 0.0;
    for (const auto& p : pairs)
      pi += p.w * norm_sf((threshold - sign * (delta[static_cast<Eigen::Index>(i)] + p.shift)) / p.sd);
    total += pi;
  }
  return total / static_cast<double>(n);
}

}  // namespace effects

namespace {

void require_draws(std::span<const ParamState> draws) {
  if (draws.empty()) throw InvalidArgument("no posterior draws");
}

}  // namespace

EffectEstimate ate(std::span<const ParamState> draws, const Dataset& data) {
  require_draws(draws);
  std::vector<std::size_t> rows(data.n());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& s : draws) v.push_back(effects::ate_draw(s, data, rows));
  return summarize_draws(Estimand::ATE, "", std::move(v));
}

EffectEstimate cate(std::span<const ParamState> draws, const Dataset& data, const Condition& condition) {
  require_draws(draws);
  const auto rows = condition.select(data);
  if (rows.empty()) throw InvalidArgument("condition '" + condition.text() + "' selects no units");
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& s : draws) v.push_back(effects::ate_draw(s, data, rows));
  return summarize_draws(Estimand::CATE, condition.text(), std::move(v));
}

EffectEstimate att(std::span<const ParamState> draws, const Dataset& data, std::optional<double> z_value,
                   std::size_t theta_draws) {
  require_draws(draws);
  std::vector<double> v;
  std::size_t dropped = 0;
  for (const auto& s : draws) {
    const auto a = effects::att_draw(s, data, z_value, theta_draws);
    if (a)
      v.push_back(*a);
    else
      ++dropped;
  }
  auto e = summarize_draws(Estimand::ATT, z_value ? "z==" + text::format_double(*z_value) : "", std::move(v));
  e.dropped = dropped;
  return e;
}

EffectEstimate pb(std::span<const ParamState> draws, const Dataset& data, double threshold, BenefitDirection direction,
                  bool full_mixture) {
  require_draws(draws);
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& s : draws) v.push_back(effects::pb_draw(s, data, threshold, direction, full_mixture));
  return summarize_draws(Estimand::PB, "H=" + text::format_double(threshold), std::move(v));
}

EffectEstimate estimate(std::span<const ParamState> draws, const Dataset& data, const EffectRequest& r) {
  switch (r.estimand) {
    case Estimand::ATE: return ate(draws, data);
    case Estimand::CATE: return cate(draws, data, Condition::parse(r.condition));
    case Estimand::ATT: return att(draws, data, r.z_value, r.att_theta_draws);
    case Estimand::PB: return pb(draws, data, r.threshold, r.direction, r.full_mixture);
  }
  throw InvalidArgument("unknown estimand");
}

void write_effects_csv(const std::vector<EffectEstimate>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,estimand,condition,median,ci_low,ci_high,dropped\n";
  for (const auto& e : rows) {
    out << e.method << ',' << to_string(e.estimand) << ",\"" << e.condition << "\"," << text::format_double(e.posterior_median)
        << ',' << text::format_double(e.ci_low) << ',' << text::format_double(e.ci_high) << ',' << e.dropped << '\n';
  }
  if (!out) throw IoError("error writing " + path.string());
}

void write_effects_json(const std::vector<EffectEstimate>& rows, const std::filesystem::path& path,
                        const std::string& benefit_direction, double threshold) {
  nlohmann::json j;
  j["benefit_direction"] = benefit_direction;
  j["threshold"] = threshold;
  j["effects"] = nlohmann::json::array();
  for (const auto& e : rows) {
    j["effects"].push_back({{"method", e.method},
                            {"estimand", to_string(e.estimand)},
                            {"condition", e.condition},
                            {"median", e.posterior_median},
                            {"ci_low", e.ci_low},
                            {"ci_high", e.ci_high},
                            {"dropped", e.dropped},
                            {"n_draws", e.draws.size()}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace dpmliv
