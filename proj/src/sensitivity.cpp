#include "dpmliv/sensitivity.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "dpmliv/error.hpp"
#include "dpmliv/parallel.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/sampler.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv {

ModelConfig HyperCell::apply(ModelConfig cfg) const {
  cfg.concentration_prior.a = a;
  cfg.concentration_prior.b = b;
  cfg.base_variance_prior.psi_inv = psi_inv;
  cfg.base_variance_prior.nu = nu;
  return cfg;
}

std::string HyperCell::label() const {
  return "a=" + text::format_double(a) + ";b=" + text::format_double(b) + ";psi_inv=" + text::format_double(psi_inv) +
         ";nu=" + text::format_double(nu);
}

std::vector<HyperCell> hyper_grid(const std::vector<std::pair<double, double>>& ab,
                                  const std::vector<std::pair<double, double>>& psi_nu) {
  std::vector<HyperCell> g;
  for (const auto& [a, b] : ab)
    for (const auto& [psi, nu] : psi_nu) g.push_back({a, b, psi, nu});
  return g;
}

std::vector<HyperCell> sensitivity_grid() { return hyper_grid({{10.0, 1.0}, {1.0, 1.0}}, {{50.0, 2.0}, {1.0, 4.0}}); }

double SweepReport::spread(const std::string& estimand) const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows) {
    if (r.estimand != estimand || !r.error.empty()) continue;
    lo = std::min(lo, r.median);
    hi = std::max(hi, r.median);
  }
  return hi >= lo ? hi - lo : 0.0;
}

std::string estimand_label(const EffectRequest& request) {
  switch (request.estimand) {
    case Estimand::CATE: return "CATE(" + request.condition + ")";
    case Estimand::PB: return "PB(H=" + text::format_double(request.threshold) + ")";
    default: return to_string(request.estimand);
  }
}

namespace {

SweepReport sweep_impl(const Dataset& data, const std::vector<HyperCell>& grid, const ModelConfig& config,
                       const SweepOptions& options, const SimTruth* truth) {
  if (grid.empty()) throw InvalidArgument("hyperprior sweep needs a nonempty grid");
  std::vector<EffectRequest> requests = options.estimands;
  if (requests.empty()) requests.push_back({});
  for (const auto& cell : grid) cell.apply(config).validate();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<SweepRow>> per_cell(grid.size());
  parallel_for(grid.size(), options.workers, [&](std::size_t c) {
    const auto& cell = grid[c];
    ModelConfig cfg = cell.apply(config);
    cfg.seed = derive_seed(config.seed, text::fnv1a(cell.label()));
    auto& rows = per_cell[c];
    for (const auto& req : requests) {
      SweepRow r;
      r.cell = c;
      r.hyper = cell;
      r.estimand = estimand_label(req);
      if (truth && req.estimand == Estimand::ATE) r.truth = truth->true_ate;
      if (truth && req.estimand == Estimand::CATE) r.truth = truth->sample_effect(data, Condition::parse(req.condition));
      rows.push_back(std::move(r));
    }
    try {
      const auto chains = run_chains(FitRequest{data, cfg, Variant::DpmLiv, false}, 1);
      const auto draws = pool(chains);
      for (std::size_t k = 0; k < requests.size(); ++k) {
        const auto e = estimate(draws, data, requests[k]);
        rows[k].median = e.posterior_median;
        rows[k].ci_low = e.ci_low;
        rows[k].ci_high = e.ci_high;
      }
    } catch (const Error& e) {
      for (auto& r : rows) {
        r.median = r.ci_low = r.ci_high = r.delta = nan;
        r.error = e.what();
      }
    }
  });

  SweepReport report;
  report.tolerance = options.tolerance;
  for (auto& rows : per_cell)
    for (auto& r : rows) report.rows.push_back(std::move(r));
  const std::size_t k = requests.size();
  for (std::size_t c = 0; c < grid.size(); ++c)
    for (std::size_t e = 0; e < k; ++e) {
      auto& r = report.rows[c * k + e];
      if (r.error.empty()) r.delta = r.median - report.rows[e].median;
    }
  for (std::size_t e = 0; e < k; ++e)
    for (std::size_t a = 0; a < grid.size(); ++a)
      for (std::size_t b = a + 1; b < grid.size(); ++b) {
        const auto& ra = report.rows[a * k + e];
        const auto& rb = report.rows[b * k + e];
        if (!ra.error.empty() || !rb.error.empty()) continue;
        const double diff = std::abs(ra.median - rb.median);
        if (diff > options.tolerance) report.flags.push_back({ra.estimand, a, b, diff});
      }
  return report;
}

}  // namespace

SweepReport hyperprior_sweep(const Dataset& data, const std::vector<HyperCell>& grid, const ModelConfig& config,
                             const SweepOptions& options) {
  return sweep_impl(data, grid, config, options, nullptr);
}

SweepReport hyperprior_sweep(const SimDesign& design, const std::vector<HyperCell>& grid, const ModelConfig& config,
                             const SweepOptions& options) {
  const auto sim = simulate(design);
  return sweep_impl(sim.data, grid, config, options, &sim.truth);
}

void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "cell,a,b,psi_inv,nu,estimand,median,ci_low,ci_high,delta,truth,error\n";
  for (const auto& r : report.rows) {
    out << r.cell << ',' << text::format_double(r.hyper.a) << ',' << text::format_double(r.hyper.b) << ','
        << text::format_double(r.hyper.psi_inv) << ',' << text::format_double(r.hyper.nu) << ",\"" << r.estimand << "\","
        << text::format_double(r.median) << ',' << text::format_double(r.ci_low) << ',' << text::format_double(r.ci_high)
        << ',' << text::format_double(r.delta) << ',' << (r.truth ? text::format_double(*r.truth) : "") << ",\""
        << r.error << "\"\n";
  }
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace dpmliv
