#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpmliv/baselines.hpp"
#include "dpmliv/config.hpp"
#include "dpmliv/dataset.hpp"
#include "dpmliv/diagnostics.hpp"
#include "dpmliv/draws_io.hpp"
#include "dpmliv/effects.hpp"
#include "dpmliv/error.hpp"
#include "dpmliv/parallel.hpp"
#include "dpmliv/sampler.hpp"
#include "dpmliv/sensitivity.hpp"
#include "dpmliv/simulation.hpp"
#include "dpmliv/text.hpp"
#include "dpmliv/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpmliv;

namespace {

struct Options {
  std::string config, data, schema, out = ".", design = "gamma_strong", draws, variant = "dpm";
  std::string estimand = "ate", where, methods = "dpm,normal,2sls", direction = "treated_minus_control";
  std::string falsification, grid;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, iter, burn_in, thin;
  std::optional<double> z_value;
  std::size_t workers = 0, n = 0, reps = 20;
  double threshold = 0.0, tolerance = 1.0;
  bool keep_latent = false, full_mixture = false;
};

std::string file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::fnv1a(ss.str())));
  return buf;
}

fs::path prepare_out(const Options& o) {
  fs::path out(o.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void write_manifest(const fs::path& out, const std::string& command, const json& arguments,
                    const std::vector<fs::path>& inputs, const std::optional<ModelConfig>& cfg) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["arguments"] = arguments;
  json in = json::object();
  for (const auto& p : inputs) in[p.string()] = file_digest(p);
  m["inputs"] = in;
  if (cfg) {
    m["config_hash"] = config_hash(*cfg);
    m["seed"] = cfg->seed;
    m["config"] = to_json(*cfg);
  }
  std::ofstream f(out / "manifest.json");
  if (!f) throw IoError("cannot write " + (out / "manifest.json").string());
  f << m.dump(2) << '\n';
}

ModelConfig make_config(const Options& o) {
  ModelConfig cfg = o.config.empty() ? ModelConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.chains) cfg.n_chains = *o.chains;
  if (o.iter) cfg.n_iter = *o.iter;
  if (o.burn_in) cfg.burn_in = *o.burn_in;
  if (o.thin) cfg.thin = *o.thin;
  cfg.validate();
  return cfg;
}

Schema make_schema(const Options& o) { return o.schema.empty() ? Schema{} : schema_from_json_file(o.schema); }

std::vector<fs::path> data_inputs(const Options& o) {
  std::vector<fs::path> v{o.data};
  if (!o.schema.empty()) v.emplace_back(o.schema);
  if (!o.config.empty()) v.emplace_back(o.config);
  return v;
}

Dataset require_data(const Options& o) {
  if (o.data.empty()) throw InvalidArgument("--data is required");
  return load_csv(o.data, make_schema(o));
}

std::vector<fs::path> draw_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    if (fs::is_regular_file(dir)) return {dir};
    throw IoError("draws path " + dir.string() + " does not exist");
  }
  static const std::regex pattern(R"(draws_chain(\d+)\.csv)");
  std::vector<std::pair<int, fs::path>> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = e.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.emplace_back(std::stoi(m[1]), e.path());
  }
  if (found.empty()) throw IoError("no draws_chain*.csv files in " + dir.string());
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(f.second);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep))
    if (!text::trim(item).empty()) out.emplace_back(text::trim(item));
  return out;
}

EffectRequest effect_request(const Options& o) {
  EffectRequest r;
  r.estimand = estimand_from_string(o.estimand);
  r.condition = o.where;
  r.threshold = o.threshold;
  r.direction = benefit_from_string(o.direction);
  r.full_mixture = o.full_mixture;
  r.z_value = o.z_value;
  if (r.estimand == Estimand::CATE && r.condition.empty()) throw InvalidArgument("cate needs --where");
  return r;
}

void print_estimate(const EffectEstimate& e) {
  std::cout << e.method << ' ' << to_string(e.estimand) << (e.condition.empty() ? "" : "(" + e.condition + ")")
            << " median=" << text::format_double(e.posterior_median) << " ci=[" << text::format_double(e.ci_low) << ", "
            << text::format_double(e.ci_high) << "]";
  if (e.dropped) std::cout << " dropped=" << e.dropped;
  std::cout << '\n';
}

void cmd_simulate(const Options& o, const json& args) {
  const auto out = prepare_out(o);
  Simulated sim = [&] {
    if (o.design == "pci") {
      PciDesign d;
      if (o.seed) d.seed = *o.seed;
      if (o.n) d.n = o.n;
      return simulate_pci(d);
    }
    SimDesign d = design_preset(o.design);
    if (o.seed) d.seed = *o.seed;
    if (o.n) d.n = o.n;
    return simulate(d);
  }();
  write_csv(sim.data, out / "data.csv");
  json t;
  t["true_ate"] = sim.truth.true_ate;
  t["true_cate"] = sim.truth.true_cate;
  t["treated_fraction"] = sim.truth.treated_fraction;
  t["treatment_intercept"] = sim.truth.treatment_intercept;
  std::ofstream(out / "truth.json") << t.dump(2) << '\n';
  {
    std::ofstream po(out / "potential_outcomes.csv");
    po << "y1,y0\n";
    for (Eigen::Index i = 0; i < sim.truth.y1.size(); ++i)
      po << text::format_double(sim.truth.y1[i]) << ',' << text::format_double(sim.truth.y0[i]) << '\n';
  }
  write_manifest(out, "simulate", args, {}, std::nullopt);
  std::cout << "simulated n=" << sim.data.n() << " treated=" << text::format_double(sim.truth.treated_fraction)
            << " true_ate=" << text::format_double(sim.truth.true_ate) << '\n';
}

void cmd_fit(const Options& o, const json& args) {
  const auto data = require_data(o);
  const auto cfg = make_config(o);
  const auto out = prepare_out(o);
  const FitRequest req{data, cfg, variant_from_string(o.variant), o.keep_latent};
  const auto chains = run_chains(req, o.workers);
  for (const auto& c : chains) write_draws(c, out / ("draws_chain" + std::to_string(c.chain_id) + ".csv"));
  if (chains.size() >= 2) {
    const auto rhats = diagnostics::coefficient_rhats(chains, data.column_names());
    std::ofstream f(out / "convergence.csv");
    f << "parameter,rhat,converged\n";
    double worst = 1.0;
    for (const auto& r : rhats) {
      f << r.name << ',' << text::format_double(r.rhat) << ',' << (r.rhat < 1.1 ? 1 : 0) << '\n';
      worst = std::max(worst, r.rhat);
    }
    std::cout << "max_rhat=" << text::format_double(worst) << '\n';
  }
  write_manifest(out, "fit", args, data_inputs(o), cfg);
  std::cout << "wrote " << chains.size() << " chain(s) with " << cfg.retained() << " draws each to " << out.string()
            << '\n';
}

void cmd_effects(const Options& o, const json& args) {
  const auto data = require_data(o);
  const auto out = prepare_out(o);
  const auto req = effect_request(o);
  std::vector<EffectEstimate> rows;
  std::vector<fs::path> inputs = data_inputs(o);
  if (o.draws.empty()) {
    if (req.estimand != Estimand::ATE && req.estimand != Estimand::CATE)
      throw InvalidArgument("without --draws only 2sls ate/cate are available");
    rows.push_back(tsls_effect(data, req.estimand, Condition::parse(req.condition)));
  } else {
    std::vector<PosteriorDraws> chains;
    for (const auto& f : draw_files(o.draws)) {
      chains.push_back(read_draws(f));
      inputs.push_back(f);
    }
    const auto draws = pool(chains);
    if (draws.empty()) throw InvalidArgument("draws files hold no draws");
    if (static_cast<std::size_t>(draws.front().theta.size()) != data.n())
      throw InvalidArgument("draws were fitted on " + std::to_string(draws.front().theta.size()) + " units but --data has " +
                            std::to_string(data.n()));
    auto e = estimate(draws, data, req);
    e.method = to_string(chains.front().variant);
    rows.push_back(std::move(e));
  }
  write_effects_csv(rows, out / "effects.csv");
  write_effects_json(rows, out / "effects.json", to_string(req.direction), req.threshold);
  write_manifest(out, "effects", args, inputs, std::nullopt);
  for (const auto& e : rows) print_estimate(e);
}

void cmd_diagnose(const Options& o, const json& args) {
  const auto data = require_data(o);
  const auto out = prepare_out(o);
  std::vector<fs::path> inputs = data_inputs(o);
  json report;
  const auto fs_ = diagnostics::instrument_f_stat(data);
  report["first_stage"] = {{"f_stat", fs_.f_stat}, {"df1", fs_.f_df1}, {"df2", fs_.f_df2},   {"strong", fs_.strong},
                           {"lr_chi2", fs_.lr_chi2}, {"separation", fs_.separation}};
  std::cout << "first_stage_f=" << text::format_double(fs_.f_stat) << (fs_.strong ? " (strong)" : " (weak)") << '\n';
  if (data.binary_instrument()) {
    const double cp = diagnostics::complier_proportion(data);
    report["complier_proportion"] = cp;
    std::cout << "complier_proportion=" << text::format_double(cp) << '\n';
  }
  diagnostics::write_balance_csv(diagnostics::balance_table(data, diagnostics::Grouping::ByTreatment),
                                 out / "balance_treatment.csv");
  if (data.binary_instrument())
    diagnostics::write_balance_csv(diagnostics::balance_table(data, diagnostics::Grouping::ByInstrument),
                                   out / "balance_instrument.csv");
  if (!o.falsification.empty()) {
    Schema s = make_schema(o);
    s.y = o.falsification;
    if (s.covariates.empty() && s.categorical.empty()) s.covariates = data.column_names();
    const auto fdata = load_csv(o.data, s);
    const std::vector<double> outcome(fdata.y().data(), fdata.y().data() + fdata.n());
    const auto f = diagnostics::falsification_check(fdata, outcome);
    report["falsification"] = {{"outcome", o.falsification}, {"mean_z1", f.mean_z1}, {"mean_z0", f.mean_z0},
                               {"difference", f.difference},  {"ci_low", f.ci_low},   {"ci_high", f.ci_high},
                               {"pass", f.pass}};
    std::cout << "falsification " << o.falsification << (f.pass ? " pass" : " fail") << '\n';
  }
  if (!o.draws.empty()) {
    std::vector<PosteriorDraws> chains;
    for (const auto& f : draw_files(o.draws)) {
      chains.push_back(read_draws(f));
      inputs.push_back(f);
    }
    if (chains.size() >= 2) {
      json rh = json::object();
      double worst = 1.0;
      for (const auto& r : diagnostics::coefficient_rhats(chains, data.column_names())) {
        rh[r.name] = r.rhat;
        worst = std::max(worst, r.rhat);
      }
      report["rhat"] = rh;
      report["max_rhat"] = worst;
      report["converged"] = worst < 1.1;
      std::cout << "max_rhat=" << text::format_double(worst) << (worst < 1.1 ? " (converged)" : " (not converged)")
                << '\n';
    }
  }
  std::ofstream(out / "diagnostics.json") << report.dump(2) << '\n';
  write_manifest(out, "diagnose", args, inputs, std::nullopt);
}

void cmd_compare(const Options& o, const json& args) {
  SimDesign d = design_preset(o.design);
  if (o.n) d.n = o.n;
  const auto cfg = make_config(o);
  d.seed = cfg.seed;
  const auto out = prepare_out(o);
  const auto report = replicate(d, o.reps, split(o.methods, ','), cfg, o.workers);
  write_replication_csv(report, out / "replication.csv");
  write_manifest(out, "compare", args, o.config.empty() ? std::vector<fs::path>{} : std::vector<fs::path>{o.config},
                 cfg);
  for (const auto& r : report.rows)
    std::cout << r.estimand << ' ' << r.method << " bias=" << text::format_double(r.bias)
              << " width=" << text::format_double(r.width) << " coverage=" << text::format_double(r.coverage)
              << " reps=" << r.reps << " failures=" << r.failures << '\n';
}

std::vector<HyperCell> parse_grid(const std::string& g) {
  if (g.empty()) return sensitivity_grid();
  std::vector<HyperCell> cells;
  for (const auto& cell : split(g, ';')) {
    const auto f = split(cell, ',');
    if (f.size() != 4) throw InvalidArgument("grid cell '" + cell + "' needs a,b,psi_inv,nu");
    double v[4];
    for (int k = 0; k < 4; ++k) {
      const auto p = text::parse_double(f[static_cast<std::size_t>(k)]);
      if (!p) throw InvalidArgument("non-numeric grid value '" + f[static_cast<std::size_t>(k)] + "'");
      v[k] = *p;
    }
    cells.push_back({v[0], v[1], v[2], v[3]});
  }
  return cells;
}

void cmd_sweep(const Options& o, const json& args) {
  const auto cfg = make_config(o);
  const auto out = prepare_out(o);
  SweepOptions so;
  so.tolerance = o.tolerance;
  so.workers = o.workers;
  so.estimands.push_back(effect_request(o));
  const auto grid = parse_grid(o.grid);
  SweepReport report;
  std::vector<fs::path> inputs;
  if (!o.data.empty()) {
    report = hyperprior_sweep(require_data(o), grid, cfg, so);
    inputs = data_inputs(o);
  } else {
    SimDesign d = design_preset(o.design);
    if (o.n) d.n = o.n;
    d.seed = cfg.seed;
    report = hyperprior_sweep(d, grid, cfg, so);
  }
  write_sweep_csv(report, out / "sweep.csv");
  write_manifest(out, "sweep", args, inputs, cfg);
  for (const auto& r : report.rows)
    std::cout << "cell=" << r.cell << ' ' << r.hyper.label() << ' ' << r.estimand
              << " median=" << text::format_double(r.median) << " delta=" << text::format_double(r.delta)
              << (r.error.empty() ? "" : " error=" + r.error) << '\n';
  for (const auto& f : report.flags)
    std::cout << "flag " << f.estimand << " cells " << f.cell_a << "," << f.cell_b
              << " differ by " << text::format_double(f.difference) << '\n';
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instrumental-variable treatment effects with Dirichlet process mixture errors"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "ModelConfig JSON")->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "Override the config seed");
    c->add_option("--iter", o.iter, "Override n_iter");
    c->add_option("--burn-in", o.burn_in, "Override burn_in");
    c->add_option("--thin", o.thin, "Override thin");
    c->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  };
  auto add_data = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Input CSV")->check(CLI::ExistingFile);
    c->add_option("--schema", o.schema, "Column mapping JSON")->check(CLI::ExistingFile);
  };
  auto add_effect = [&](CLI::App* c) {
    c->add_option("--estimand", o.estimand, "ate, cate, att or pb");
    c->add_option("--where", o.where, "Subgroup condition for cate, e.g. \"male==1\"");
    c->add_option("--threshold", o.threshold, "Threshold H for pb");
    c->add_option("--direction", o.direction, "treated_minus_control or control_minus_treated");
    c->add_flag("--full-mixture", o.full_mixture, "PB from the full per-draw mixtures");
    c->add_option("--z-value", o.z_value, "Instrument level for att");
  };

  auto* sim = app.add_subcommand("simulate", "Simulate a dataset from a design preset or 'pci'");
  sim->add_option("--design", o.design, "Design preset");
  sim->add_option("--n", o.n, "Sample size");
  sim->add_option("--seed", o.seed, "Simulation seed");
  sim->add_option("--out", o.out, "Output directory");

  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler and write draws");
  add_data(fit);
  add_config(fit);
  fit->add_option("--chains", o.chains, "Number of chains");
  fit->add_option("--variant", o.variant, "dpm or normal");
  fit->add_flag("--keep-latent", o.keep_latent, "Store d* and allocations in the draws");
  fit->add_option("--out", o.out, "Output directory");

  auto* eff = app.add_subcommand("effects", "Summarize causal effects from draws (or 2SLS without draws)");
  add_data(eff);
  add_effect(eff);
  eff->add_option("--draws", o.draws, "Directory of draws_chain*.csv files or one draws file");
  eff->add_option("--out", o.out, "Output directory");

  auto* diag = app.add_subcommand("diagnose", "Instrument strength, balance, falsification and R-hat");
  add_data(diag);
  diag->add_option("--draws", o.draws, "Draws directory for R-hat");
  diag->add_option("--falsification", o.falsification, "Column holding a falsification outcome");
  diag->add_option("--out", o.out, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Replicate a simulation design across methods");
  add_config(cmp);
  cmp->add_option("--design", o.design, "Design preset");
  cmp->add_option("--n", o.n, "Sample size");
  cmp->add_option("--reps", o.reps, "Replications");
  cmp->add_option("--methods", o.methods, "Comma-separated: dpm, normal, 2sls, oracle");
  cmp->add_option("--chains", o.chains, "Chains per fit");
  cmp->add_option("--out", o.out, "Output directory");

  auto* sw = app.add_subcommand("sweep", "Hyperprior sensitivity sweep");
  add_data(sw);
  add_config(sw);
  add_effect(sw);
  sw->add_option("--design", o.design, "Design preset when no --data is given");
  sw->add_option("--n", o.n, "Sample size for the design");
  sw->add_option("--grid", o.grid, "Cells 'a,b,psi_inv,nu;...' (default: a,b in {(10,1),(1,1)} x psi_inv,nu in {(50,2),(1,4)})");
  sw->add_option("--tolerance", o.tolerance, "Flag cell pairs whose medians differ by more than this");
  sw->add_option("--chains", o.chains, "Chains per cell");
  sw->add_option("--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: kind=usage message=" << one_line(e.what()) << '\n';
    return 2;
  }

  json args = json::object();
  for (const auto* sub : app.get_subcommands())
    for (const auto* opt : sub->get_options())
      if (opt->count() > 0 && opt->get_name() != "--help") args[opt->get_name()] = opt->as<std::string>();

  try {
    const auto& name = app.get_subcommands().front()->get_name();
    if (name == "simulate") cmd_simulate(o, args);
    else if (name == "fit") cmd_fit(o, args);
    else if (name == "effects") cmd_effects(o, args);
    else if (name == "diagnose") cmd_diagnose(o, args);
    else if (name == "compare") cmd_compare(o, args);
    else if (name == "sweep") cmd_sweep(o, args);
  } catch (const IngestionError& e) {
    std::cerr << "error: kind=" << e.kind() << " row=" << e.row() << " column=" << e.column()
              << " message=" << one_line(e.what()) << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: kind=" << e.kind() << " message=" << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=internal message=" << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
