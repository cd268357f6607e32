#include "dpmliv/simulation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>

#include "dpmliv/baselines.hpp"
#include "dpmliv/error.hpp"
#include "dpmliv/parallel.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/sampler.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv {

namespace {

constexpr std::uint64_t kCalibrationSeed = 20240601;
constexpr std::size_t kCalibrationUnits = 100000;

// Root of f(b) = rate(b) - target for a rate increasing in b.
template <class F>
double bisect(F rate, double target, double lo = -30.0, double hi = 30.0) {
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double draw_error(Rng& rng, const SimDesign& d) {
  switch (d.error_law) {
    case ErrorLaw::Normal: return d.normal_sd * rng.normal();
    case ErrorLaw::Gamma: return sample_gamma(rng, d.gamma_shape, d.gamma_rate);
    case ErrorLaw::Mixture: {
      const auto k = sample_categorical(rng, d.mixture.weights);
      return sample_normal(rng, d.mixture.means[k], d.mixture.vars[k]);
    }
  }
  return 0.0;
}

}  // namespace

double MixtureLaw::mean() const {
  double w = 0.0, m = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    w += weights[j];
    m += weights[j] * means[j];
  }
  return m / w;
}

void SimDesign::validate() const {
  if (n < 10) throw ConfigError("simulation design needs n >= 10");
  if (!(theta_sd > 0.0)) throw ConfigError("theta_sd must be > 0");
  if (!(normal_sd > 0.0) || !(gamma_shape > 0.0) || !(gamma_rate > 0.0))
    throw ConfigError("error-law parameters must be > 0");
  if (!(target_treated > 0.0 && target_treated < 1.0)) throw ConfigError("target_treated must lie in (0, 1)");
  if (!(x3_prob > 0.0 && x3_prob < 1.0) || !(z_prob > 0.0 && z_prob < 1.0))
    throw ConfigError("covariate and instrument probabilities must lie in (0, 1)");
  if (error_law == ErrorLaw::Mixture) {
    const auto h = mixture.weights.size();
    if (h == 0 || mixture.means.size() != h || mixture.vars.size() != h)
      throw ConfigError("mixture law needs equal-length weights, means and vars");
    for (std::size_t j = 0; j < h; ++j)
      if (!(mixture.weights[j] >= 0.0) || !(mixture.vars[j] > 0.0))
        throw ConfigError("mixture weights must be >= 0 and variances > 0");
  }
}

std::vector<std::string> design_names() {
  return {"gamma_strong", "gamma_weak", "normal_strong", "mixture_strong", "mixture_weak"};
}

SimDesign design_preset(const std::string& name) {
  SimDesign d;
  d.name = name;
  if (name == "gamma_strong") return d;
  if (name == "gamma_weak") {
    d.gamma = 0.5;
    return d;
  }
  if (name == "normal_strong") {
    d.error_law = ErrorLaw::Normal;
    return d;
  }
  if (name == "mixture_strong" || name == "mixture_weak") {
    d.error_law = ErrorLaw::Mixture;
    d.alpha_d = d.alpha1 = d.alpha0 = 0.01;
    d.gamma = name == "mixture_strong" ? 1.5 : 0.5;
    return d;
  }
  throw InvalidArgument("unknown design '" + name + "'");
}

double calibrate_treatment_intercept(const SimDesign& design) {
  Rng rng(kCalibrationSeed, 1);
  std::vector<double> rest(kCalibrationUnits);
  for (auto& r : rest) {
    const double x1 = rng.normal(), x2 = rng.normal();
    const double x3 = rng.uniform() < design.x3_prob ? 1.0 : 0.0;
    const double z = rng.uniform() < design.z_prob ? 1.0 : 0.0;
    const double theta = design.theta_sd * rng.normal();
    r = design.gamma * z + design.betaD[0] * x1 + design.betaD[1] * x2 + design.betaD[2] * x3 +
        design.alpha_d * theta + rng.normal();
  }
  return bisect(
      [&](double b) {
        std::size_t treated = 0;
        for (double r : rest) treated += b + r > 0.0;
        return static_cast<double>(treated) / static_cast<double>(rest.size());
      },
      design.target_treated);
}

double SimTruth::sample_effect(const Dataset& data, const Condition& condition) const {
  const auto rows = condition.select(data);
  if (rows.empty()) throw InvalidArgument("condition '" + condition.text() + "' selects no units");
  double s = 0.0;
  for (auto i : rows) s += y1[static_cast<Eigen::Index>(i)] - y0[static_cast<Eigen::Index>(i)];
  return s / static_cast<double>(rows.size());
}

Simulated simulate(const SimDesign& design) {
  design.validate();
  const double bd0 = design.betaD_0 ? *design.betaD_0 : calibrate_treatment_intercept(design);
  const auto n = static_cast<Eigen::Index>(design.n);
  Rng rng(design.seed, 0);
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd z(n), y(n), y1(n), y0(n);
  std::vector<std::uint8_t> d(design.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    x(i, 2) = rng.uniform() < design.x3_prob ? 1.0 : 0.0;
    z[i] = rng.uniform() < design.z_prob ? 1.0 : 0.0;
    const double theta = design.theta_sd * rng.normal();
    const double dstar = bd0 + design.gamma * z[i] + x.row(i).dot(design.betaD) + design.alpha_d * theta + rng.normal();
    const double e1 = draw_error(rng, design);
    const double e0 = draw_error(rng, design);
    y1[i] = design.beta1_0 + x.row(i).dot(design.beta1) + design.alpha1 * theta + e1;
    y0[i] = design.beta0_0 + x.row(i).dot(design.beta0) + design.alpha0 * theta + e0;
    d[static_cast<std::size_t>(i)] = dstar > 0.0;
    y[i] = d[static_cast<std::size_t>(i)] ? y1[i] : y0[i];
  }
  Dataset data(y, d, z, x, {"x1", "x2", "x3"});
  SimTruth truth;
  truth.y1 = y1;
  truth.y0 = y0;
  truth.true_ate = (y1 - y0).mean();
  for (const char* c : {"x3==1", "x3==0"}) {
    const auto cond = Condition::parse(c);
    if (!cond.select(data).empty()) truth.true_cate[c] = truth.sample_effect(data, cond);
  }
  truth.treated_fraction = static_cast<double>(data.arm_units(1).size()) / static_cast<double>(design.n);
  truth.treatment_intercept = bd0;
  return {std::move(data), std::move(truth)};
}

Simulated simulate_pci(const PciDesign& design) {
  if (design.n < 10) throw ConfigError("PCI design needs n >= 10");
  const Eigen::Vector4d beta_d{0.1, 0.1, -0.2, 0.1};  // age, male, diabetes, acs
  const Eigen::Vector4d beta_y{1.5, 0.5, 3.0, 4.0};
  const double base_y = 25.0;

  struct Unit {
    Eigen::Vector4d x;
    double theta, e_d;
  };
  auto draw_unit = [&](Rng& rng) {
    Unit u;
    u.x[0] = 1.1 * rng.normal();
    u.x[1] = rng.uniform() < design.male_prob ? 1.0 : 0.0;
    u.x[2] = rng.uniform() < 0.35 ? 1.0 : 0.0;
    u.x[3] = rng.uniform() < 0.6 ? 1.0 : 0.0;
    u.theta = rng.normal();
    u.e_d = rng.normal();
    return u;
  };

  // Intercept from the Z = 0 treatment rate, then the instrument effect from the Z = 1 rate.
  Rng crng(kCalibrationSeed, 2);
  std::vector<double> rest(kCalibrationUnits);
  for (auto& r : rest) {
    const auto u = draw_unit(crng);
    r = u.x.dot(beta_d) + design.alpha_d * u.theta + u.e_d;
  }
  auto rate = [&](double shift) {
    std::size_t t = 0;
    for (double r : rest) t += shift + r > 0.0;
    return static_cast<double>(t) / static_cast<double>(rest.size());
  };
  const double b0 = bisect(rate, design.rate_z0);
  const double gamma = bisect([&](double g) { return rate(b0 + g); }, design.rate_z1, -30.0, 30.0);

  const auto n = static_cast<Eigen::Index>(design.n);
  Rng rng(design.seed, 0);
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd z(n), y(n), y1(n), y0(n);
  std::vector<std::uint8_t> d(design.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = draw_unit(rng);
    x.row(i) = u.x.transpose();
    z[i] = rng.uniform() < design.z_prob ? 1.0 : 0.0;
    const double dstar = b0 + gamma * z[i] + u.x.dot(beta_d) + design.alpha_d * u.theta + u.e_d;
    const double mu = base_y + u.x.dot(beta_y);
    const double effect = u.x[1] == 1.0 ? design.effect_male : design.effect_female;
    y0[i] = mu + design.alpha0 * u.theta + sample_gamma(rng, design.error_shape, design.error_rate);
    y1[i] = mu + effect + design.alpha1 * u.theta + sample_gamma(rng, design.error_shape, design.error_rate);
    d[static_cast<std::size_t>(i)] = dstar > 0.0;
    y[i] = d[static_cast<std::size_t>(i)] ? y1[i] : y0[i];
  }
  Dataset data(y, d, z, x, {"age", "male", "diabetes", "acs"});
  SimTruth truth;
  truth.y1 = y1;
  truth.y0 = y0;
  truth.true_ate = (y1 - y0).mean();
  for (const char* c : {"male==1", "male==0"}) truth.true_cate[c] = truth.sample_effect(data, Condition::parse(c));
  truth.treated_fraction = static_cast<double>(data.arm_units(1).size()) / static_cast<double>(design.n);
  truth.treatment_intercept = b0;
  return {std::move(data), std::move(truth)};
}

const ReplicationRow& ReplicationReport::row(const std::string& estimand, const std::string& method) const {
  for (const auto& r : rows)
    if (r.estimand == estimand && r.method == method) return r;
  throw InvalidArgument("no replication row for " + estimand + " / " + method);
}

namespace {

struct Scored {
  bool ok = false;
  double estimate = 0, low = 0, high = 0, truth = 0;
};

}  // namespace

ReplicationReport replicate(const SimDesign& design_in, std::size_t n_reps, const std::vector<std::string>& methods,
                            const ModelConfig& config, std::size_t workers) {
  if (n_reps == 0) throw InvalidArgument("replicate needs n_reps >= 1");
  for (const auto& m : methods)
    if (m != "dpm" && m != "normal" && m != "2sls" && m != "oracle") throw InvalidArgument("unknown method '" + m + "'");
  config.validate();
  SimDesign design = design_in;
  design.validate();
  if (!design.betaD_0) design.betaD_0 = calibrate_treatment_intercept(design);

  const std::string cate_label = "x3==1";
  const auto cond = Condition::parse(cate_label);
  // results[rep][method][estimand]
  std::vector<std::vector<std::array<Scored, 2>>> results(n_reps, std::vector<std::array<Scored, 2>>(methods.size()));

  parallel_for(n_reps, workers, [&](std::size_t rep) {
    SimDesign dr = design;
    dr.seed = derive_seed(design.seed, rep);
    std::optional<Simulated> sim;
    try {
      sim.emplace(simulate(dr));
    } catch (const Error&) {
      return;  // every method counts as failed for this replication
    }
    const double truth_ate = sim->truth.true_ate;
    const double truth_cate = sim->truth.sample_effect(sim->data, cond);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      auto& out = results[rep][k];
      try {
        EffectEstimate a, c;
        const auto& m = methods[k];
        if (m == "dpm" || m == "normal") {
          ModelConfig cfg = config;
          cfg.seed = derive_seed(dr.seed, 1000 + k);
          const auto chains = run_chains(
              FitRequest{sim->data, cfg, m == "dpm" ? Variant::DpmLiv : Variant::NormalLiv}, 1);
          const auto draws = pool(chains);
          a = ate(draws, sim->data);
          c = cate(draws, sim->data, cond);
        } else if (m == "2sls") {
          a = tsls_effect(sim->data, Estimand::ATE);
          c = tsls_effect(sim->data, Estimand::CATE, cond);
        } else {
          a.posterior_median = truth_ate;
          a.ci_low = truth_ate - 1e-9;
          a.ci_high = truth_ate + 1e-9;
          c.posterior_median = truth_cate;
          c.ci_low = truth_cate - 1e-9;
          c.ci_high = truth_cate + 1e-9;
        }
        out[0] = {true, a.posterior_median, a.ci_low, a.ci_high, truth_ate};
        out[1] = {true, c.posterior_median, c.ci_low, c.ci_high, truth_cate};
      } catch (const std::exception&) {
        out[0].ok = out[1].ok = false;
      }
    }
  });

  ReplicationReport report;
  report.design = design.name;
  report.treatment_intercept = *design.betaD_0;
  for (int e = 0; e < 2; ++e) {
    for (std::size_t k = 0; k < methods.size(); ++k) {
      ReplicationRow row;
      row.estimand = e == 0 ? "ATE" : "CATE(" + cate_label + ")";
      row.n = design.n;
      row.method = methods[k];
      double bias = 0, width = 0, cover = 0;
      for (std::size_t rep = 0; rep < n_reps; ++rep) {
        const auto& s = results[rep][k][static_cast<std::size_t>(e)];
        if (!s.ok) {
          ++row.failures;
          continue;
        }
        ++row.reps;
        bias += std::abs(s.estimate - s.truth);
        width += s.high - s.low;
        cover += s.low <= s.truth && s.truth <= s.high;
      }
      if (row.reps > 0) {
        const double r = static_cast<double>(row.reps);
        row.bias = bias / r;
        row.width = width / r;
        row.coverage = 100.0 * cover / r;
      } else {
        row.bias = row.width = row.coverage = std::numeric_limits<double>::quiet_NaN();
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_replication_csv(const ReplicationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "estimand,n,method,bias,width,coverage,reps,failures\n";
  for (const auto& r : report.rows)
    out << r.estimand << ',' << r.n << ',' << r.method << ',' << text::format_double(r.bias) << ','
        << text::format_double(r.width) << ',' << text::format_double(r.coverage) << ',' << r.reps << ','
        << r.failures << '\n';
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace dpmliv
