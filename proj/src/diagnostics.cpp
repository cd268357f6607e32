#include "dpmliv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include <Eigen/Dense>

#include "dpmliv/error.hpp"
#include "dpmliv/linalg.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/stats.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv::diagnostics {

namespace {

void require_binary_z(const Dataset& data) {
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < data.z().size(); ++i) {
    const double z = data.z()[i];
    if (z == 0.0)
      has0 = true;
    else if (z == 1.0)
      has1 = true;
    else
      throw InvalidArgument("instrument is not binary (value " + text::format_double(z) + " at row " +
                            std::to_string(i + 1) + ")");
  }
  if (!has0 || !has1) throw InvalidArgument("instrument has only one level");
}

double rss(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const Eigen::VectorXd coef = linalg::ols(a, y);
  return (y - a * coef).squaredNorm();
}

struct LogitFit {
  double loglik;
  bool separated;
};

// Newton-Raphson (IRLS) for a logistic regression.
LogitFit logistic(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(a.cols());
  double ll = -kInf;
  bool separated = false;
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = a * beta;
    Eigen::VectorXd p(eta.size()), w(eta.size());
    double ll_new = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      p[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-12);
      ll_new += y[i] * -std::log1p(std::exp(-eta[i])) + (1.0 - y[i]) * -std::log1p(std::exp(eta[i]));
    }
    if (beta.cwiseAbs().maxCoeff() > 30.0) separated = true;
    if (std::abs(ll_new - ll) < 1e-10) {
      ll = ll_new;
      break;
    }
    ll = ll_new;
    const Eigen::MatrixXd h = a.transpose() * w.asDiagonal() * a;
    const Eigen::VectorXd g = a.transpose() * (y - p);
    const Eigen::VectorXd step = h.ldlt().solve(g);
    if (!step.allFinite()) {
      separated = true;
      break;
    }
    beta += step;
  }
  return {ll, separated};
}

}  // namespace

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw InvalidArgument("gelman_rubin needs at least 2 chains");
  const std::size_t n = chains[0].size();
  if (n < 10) throw InvalidArgument("gelman_rubin needs chains of length >= 10");
  for (const auto& c : chains)
    if (c.size() != n) throw InvalidArgument("gelman_rubin: chains have unequal lengths");
  std::vector<double> means(m), vars(m);
  for (std::size_t k = 0; k < m; ++k) {
    means[k] = stats::mean(chains[k]);
    vars[k] = stats::variance(chains[k]);
  }
  const double w = stats::mean(vars);
  const double b = static_cast<double>(n) * stats::variance(means);
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  if (!(w > 0.0)) return b > 0.0 ? kInf : 1.0;
  const double v = (nd - 1.0) / nd * w + (md + 1.0) / (md * nd) * b;
  return std::max(1.0, std::sqrt(v / w));
}

std::vector<ParameterRhat> coefficient_rhats(const std::vector<PosteriorDraws>& chains,
                                             const std::vector<std::string>& covariate_names) {
  if (chains.size() < 2) throw InvalidArgument("R-hat needs at least two chains");
  const auto& first = chains.front().iterations;
  if (first.empty()) throw InvalidArgument("R-hat on chains without draws");
  const auto p = static_cast<std::size_t>(first.front().treatment.beta.size());
  auto cov = [&](std::size_t k) {
    return k < covariate_names.size() ? covariate_names[k] : std::to_string(k + 1);
  };
  using Getter = std::function<double(const ParamState&)>;
  std::vector<std::pair<std::string, Getter>> params{
      {"treat_intercept", [](const ParamState& s) { return s.treatment.intercept; }},
      {"treat_gamma", [](const ParamState& s) { return s.treatment.gamma; }},
      {"treat_loading", [](const ParamState& s) { return std::abs(s.treatment.loading); }},
  };
  for (std::size_t k = 0; k < p; ++k)
    params.emplace_back("treat_beta_" + cov(k),
                        [k](const ParamState& s) { return s.treatment.beta[static_cast<Eigen::Index>(k)]; });
  for (int arm : {1, 0}) {
    const std::string a = arm == 1 ? "y1" : "y0";
    params.emplace_back(a + "_intercept", [arm](const ParamState& s) { return s.outcome(arm).intercept; });
    params.emplace_back(a + "_loading", [arm](const ParamState& s) { return std::abs(s.outcome(arm).loading); });
    for (std::size_t k = 0; k < p; ++k)
      params.emplace_back(a + "_beta_" + cov(k), [arm, k](const ParamState& s) {
        return s.outcome(arm).beta[static_cast<Eigen::Index>(k)];
      });
  }
  std::vector<ParameterRhat> out;
  for (const auto& [name, get] : params) {
    std::vector<std::vector<double>> traces;
    for (const auto& c : chains) {
      std::vector<double> t;
      t.reserve(c.iterations.size());
      for (const auto& s : c.iterations) t.push_back(get(s));
      traces.push_back(std::move(t));
    }
    out.push_back({name, gelman_rubin(traces)});
  }
  return out;
}

FirstStage instrument_f_stat(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  Eigen::MatrixXd reduced(n, p + 1), full(n, p + 2);
  reduced.col(0).setOnes();
  reduced.rightCols(p) = data.x();
  full.leftCols(p + 1) = reduced;
  full.col(p + 1) = data.z();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = data.d()[static_cast<std::size_t>(i)];

  FirstStage fs;
  fs.f_df2 = static_cast<double>(n - p - 2);
  if (fs.f_df2 <= 0) throw RankError("first stage has no residual degrees of freedom");
  const double rss_r = rss(reduced, d);
  const double rss_f = rss(full, d);
  // A perfect predictor leaves no residual variance.
  fs.f_stat = rss_f <= 1e-12 * std::max(rss_r, 1.0) ? kInf : (rss_r - rss_f) / (rss_f / fs.f_df2);
  fs.strong = fs.f_stat > 10.0;

  const auto lf = logistic(full, d);
  const auto lr = logistic(reduced, d);
  fs.separation = lf.separated;
  fs.lr_chi2 = std::max(0.0, 2.0 * (lf.loglik - lr.loglik));
  if (fs.separation && !std::isfinite(fs.f_stat)) fs.lr_chi2 = kInf;
  return fs;
}

double complier_proportion(double rate_z1, double rate_z0) { return rate_z1 - rate_z0; }

double complier_proportion(const Dataset& data) {
  require_binary_z(data);
  double t1 = 0, n1 = 0, t0 = 0, n0 = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.z()[static_cast<Eigen::Index>(i)] == 1.0) {
      n1 += 1;
      t1 += data.d()[i];
    } else {
      n0 += 1;
      t0 += data.d()[i];
    }
  }
  return complier_proportion(t1 / n1, t0 / n0);
}

std::vector<BalanceRow> balance_table(const Dataset& data, Grouping grouping) {
  if (grouping == Grouping::ByInstrument) require_binary_z(data);
  std::vector<std::size_t> g1, g0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const bool one = grouping == Grouping::ByTreatment ? data.d()[i] == 1 : data.z()[static_cast<Eigen::Index>(i)] == 1.0;
    (one ? g1 : g0).push_back(i);
  }
  if (g1.size() < 2 || g0.size() < 2) throw InvalidArgument("balance_table: each group needs at least 2 units");
  std::vector<BalanceRow> rows;
  for (std::size_t j = 0; j < data.p(); ++j) {
    std::vector<double> a, b;
    for (auto i : g1) a.push_back(data.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    for (auto i : g0) b.push_back(data.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    BalanceRow r;
    r.covariate = data.column_names()[j];
    r.mean_1 = stats::mean(a);
    r.mean_0 = stats::mean(b);
    const double pooled = std::sqrt(0.5 * (stats::variance(a) + stats::variance(b)));
    if (pooled > 0.0) {
      r.std_diff = std::abs(r.mean_1 - r.mean_0) / pooled;
      r.flagged = r.std_diff > 0.1;
    } else {
      r.computable = false;
      r.std_diff = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(r);
  }
  return rows;
}

FalsificationReport falsification_check(const Dataset& data, std::span<const double> outcome, double tolerance) {
  require_binary_z(data);
  if (outcome.size() != data.n()) throw InvalidArgument("falsification outcome length differs from the data");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < data.n(); ++i) (data.z()[static_cast<Eigen::Index>(i)] == 1.0 ? a : b).push_back(outcome[i]);
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("falsification check needs 2 units per instrument level");
  FalsificationReport r;
  r.mean_z1 = stats::mean(a);
  r.mean_z0 = stats::mean(b);
  r.difference = r.mean_z1 - r.mean_z0;
  const double se = std::sqrt(stats::variance(a) / static_cast<double>(a.size()) +
                              stats::variance(b) / static_cast<double>(b.size()));
  const double q = norm_quantile(0.975);
  r.ci_low = r.difference - q * se;
  r.ci_high = r.difference + q * se;
  r.pass = (r.ci_low <= 0.0 && r.ci_high >= 0.0) || std::abs(r.difference) < tolerance;
  return r;
}

void write_balance_csv(const std::vector<BalanceRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "covariate,mean_1,mean_0,std_diff,flagged\n";
  for (const auto& r : rows)
    out << r.covariate << ',' << text::format_double(r.mean_1) << ',' << text::format_double(r.mean_0) << ','
        << (r.computable ? text::format_double(r.std_diff) : "NA") << ',' << (r.flagged ? 1 : 0) << '\n';
}

}  // namespace dpmliv::diagnostics
