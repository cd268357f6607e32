#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dpmliv/baselines.hpp"
#include "dpmliv/config.hpp"
#include "dpmliv/dataset.hpp"
#include "dpmliv/diagnostics.hpp"
#include "dpmliv/draws_io.hpp"
#include "dpmliv/effects.hpp"
#include "dpmliv/error.hpp"
#include "dpmliv/sampler.hpp"
#include "dpmliv/sensitivity.hpp"
#include "dpmliv/simulation.hpp"
#include "dpmliv/version.hpp"
#include "json.hpp"

namespace py = pybind11;
using namespace dpmliv;

namespace {

ModelConfig parse_config(const std::string& text) {
  return text.empty() ? ModelConfig{} : config_from_json(nlohmann::json::parse(text));
}

std::vector<ParamState> pooled(const std::vector<PosteriorDraws>& chains) { return pool(chains); }

EffectRequest make_request(const std::string& estimand, const std::string& condition, double threshold,
                           const std::string& direction, bool full_mixture, std::optional<double> z_value) {
  EffectRequest r;
  r.estimand = estimand_from_string(estimand);
  r.condition = condition;
  r.threshold = threshold;
  r.direction = benefit_from_string(direction);
  r.full_mixture = full_mixture;
  r.z_value = z_value;
  return r;
}

py::dict sim_truth(const SimTruth& t) {
  py::dict d;
  d["y1"] = t.y1;
  d["y0"] = t.y0;
  d["true_ate"] = t.true_ate;
  d["true_cate"] = t.true_cate;
  d["treated_fraction"] = t.treated_fraction;
  d["treatment_intercept"] = t.treatment_intercept;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Latent-index instrumental-variable models with Dirichlet process mixture errors";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<IngestionError>(m, "IngestionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<RankError>(m, "RankError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](Eigen::VectorXd y, std::vector<std::uint8_t> d, Eigen::VectorXd z, Eigen::MatrixXd x,
                       std::vector<std::string> names) { return Dataset(y, std::move(d), z, x, std::move(names)); }),
           py::arg("y"), py::arg("d"), py::arg("z"), py::arg("x"), py::arg("column_names"))
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("p", &Dataset::p)
      .def_property_readonly("y", &Dataset::y)
      .def_property_readonly("d", &Dataset::d)
      .def_property_readonly("z", &Dataset::z)
      .def_property_readonly("x", &Dataset::x)
      .def_property_readonly("column_names", &Dataset::column_names)
      .def("subset", &Dataset::subset);

  m.def(
      "load_csv",
      [](const std::filesystem::path& path, const std::string& y, const std::string& d, const std::string& z,
         std::vector<std::string> covariates, std::vector<std::string> categorical) {
        return load_csv(path, Schema{y, d, z, std::move(covariates), std::move(categorical)});
      },
      py::arg("path"), py::arg("y") = "y", py::arg("d") = "d", py::arg("z") = "z",
      py::arg("covariates") = std::vector<std::string>{}, py::arg("categorical") = std::vector<std::string>{});
  m.def("write_csv", &write_csv, py::arg("data"), py::arg("path"));

  m.def(
      "default_config", [] { return to_json(ModelConfig{}).dump(); }, "Default configuration as JSON text.");
  m.def(
      "normalize_config", [](const std::string& text) { return to_json(parse_config(text)).dump(); },
      py::arg("config_json"));
  m.def(
      "config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("config_json"));

  py::class_<PosteriorDraws>(m, "PosteriorDraws")
      .def_property_readonly("chain_id", [](const PosteriorDraws& p) { return p.chain_id; })
      .def_property_readonly("variant", [](const PosteriorDraws& p) { return to_string(p.variant); })
      .def("__len__", &PosteriorDraws::size)
      .def(
          "trace",
          [](const PosteriorDraws& p, const std::string& name) {
            std::vector<double> out;
            for (const auto& s : p.iterations) {
              if (name == "treat_intercept") out.push_back(s.treatment.intercept);
              else if (name == "treat_gamma") out.push_back(s.treatment.gamma);
              else if (name == "treat_loading") out.push_back(s.treatment.loading);
              else if (name == "y1_intercept") out.push_back(s.outcome1.intercept);
              else if (name == "y0_intercept") out.push_back(s.outcome0.intercept);
              else if (name == "y1_loading") out.push_back(s.outcome1.loading);
              else if (name == "y0_loading") out.push_back(s.outcome0.loading);
              else if (name == "dpm1_concentration") out.push_back(s.dpm1.concentration);
              else if (name == "dpm0_concentration") out.push_back(s.dpm0.concentration);
              else throw InvalidArgument("unknown trace '" + name + "'");
            }
            return out;
          },
          py::arg("name"));

  m.def(
      "fit",
      [](const Dataset& data, const std::string& config, const std::string& variant, bool keep_latent,
         std::size_t workers) {
        py::gil_scoped_release release;
        return run_chains(FitRequest{data, parse_config(config), variant_from_string(variant), keep_latent}, workers);
      },
      py::arg("data"), py::arg("config_json") = "", py::arg("variant") = "dpm", py::arg("keep_latent") = false,
      py::arg("workers") = 0);
  m.def("write_draws", &write_draws, py::arg("draws"), py::arg("path"));
  m.def("read_draws", &read_draws, py::arg("path"));

  py::class_<EffectEstimate>(m, "EffectEstimate")
      .def_property_readonly("estimand", [](const EffectEstimate& e) { return to_string(e.estimand); })
      .def_readonly("condition", &EffectEstimate::condition)
      .def_readonly("median", &EffectEstimate::posterior_median)
      .def_readonly("ci_low", &EffectEstimate::ci_low)
      .def_readonly("ci_high", &EffectEstimate::ci_high)
      .def_readonly("draws", &EffectEstimate::draws)
      .def_readonly("dropped", &EffectEstimate::dropped)
      .def_readonly("method", &EffectEstimate::method)
      .def("__repr__", [](const EffectEstimate& e) {
        return "EffectEstimate(" + to_string(e.estimand) + (e.condition.empty() ? "" : " " + e.condition) +
               ", median=" + std::to_string(e.posterior_median) + ", ci=[" + std::to_string(e.ci_low) + ", " +
               std::to_string(e.ci_high) + "])";
      });

  m.def(
      "estimate",
      [](const std::vector<PosteriorDraws>& chains, const Dataset& data, const std::string& estimand,
         const std::string& condition, double threshold, const std::string& direction, bool full_mixture,
         std::optional<double> z_value) {
        const auto draws = pooled(chains);
        auto e = estimate(draws, data, make_request(estimand, condition, threshold, direction, full_mixture, z_value));
        if (!chains.empty()) e.method = to_string(chains.front().variant);
        return e;
      },
      py::arg("chains"), py::arg("data"), py::arg("estimand") = "ate", py::arg("condition") = "",
      py::arg("threshold") = 0.0, py::arg("direction") = "treated_minus_control", py::arg("full_mixture") = false,
      py::arg("z_value") = py::none());

  py::class_<TslsResult>(m, "TslsResult")
      .def_readonly("estimate", &TslsResult::estimate)
      .def_readonly("se", &TslsResult::se)
      .def_readonly("ci_low", &TslsResult::ci_low)
      .def_readonly("ci_high", &TslsResult::ci_high)
      .def_readonly("first_stage_f", &TslsResult::first_stage_f)
      .def_readonly("weak_instrument", &TslsResult::weak_instrument)
      .def_readonly("coefficients", &TslsResult::coefficients)
      .def_readonly("dropped_columns", &TslsResult::dropped_columns);
  m.def("two_stage_least_squares", &two_stage_least_squares, py::arg("data"));
  m.def(
      "tsls_effect",
      [](const Dataset& data, const std::string& estimand, const std::string& condition) {
        return tsls_effect(data, estimand_from_string(estimand), Condition::parse(condition));
      },
      py::arg("data"), py::arg("estimand") = "ate", py::arg("condition") = "");

  m.def("gelman_rubin", &diagnostics::gelman_rubin, py::arg("chains"));
  m.def(
      "coefficient_rhats",
      [](const std::vector<PosteriorDraws>& chains, const std::vector<std::string>& names) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& r : diagnostics::coefficient_rhats(chains, names)) out.emplace_back(r.name, r.rhat);
        return out;
      },
      py::arg("chains"), py::arg("covariate_names") = std::vector<std::string>{});
  m.def("complier_proportion", py::overload_cast<const Dataset&>(&diagnostics::complier_proportion), py::arg("data"));
  m.def("complier_proportion_from_rates", py::overload_cast<double, double>(&diagnostics::complier_proportion),
        py::arg("rate_z1"), py::arg("rate_z0"));
  m.def(
      "instrument_f_stat",
      [](const Dataset& data) {
        const auto f = diagnostics::instrument_f_stat(data);
        py::dict d;
        d["f_stat"] = f.f_stat;
        d["df1"] = f.f_df1;
        d["df2"] = f.f_df2;
        d["strong"] = f.strong;
        d["lr_chi2"] = f.lr_chi2;
        d["separation"] = f.separation;
        return d;
      },
      py::arg("data"));
  m.def(
      "falsification_check",
      [](const Dataset& data, const std::vector<double>& outcome, double tolerance) {
        const auto r = diagnostics::falsification_check(data, outcome, tolerance);
        py::dict d;
        d["mean_z1"] = r.mean_z1;
        d["mean_z0"] = r.mean_z0;
        d["difference"] = r.difference;
        d["ci_low"] = r.ci_low;
        d["ci_high"] = r.ci_high;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("data"), py::arg("outcome"), py::arg("tolerance") = 0.0);

  m.def("design_names", &design_names);
  m.def(
      "simulate",
      [](const std::string& design, std::size_t n, std::uint64_t seed) {
        auto d = design_preset(design);
        d.n = n;
        d.seed = seed;
        auto sim = simulate(d);
        return py::make_tuple(std::move(sim.data), sim_truth(sim.truth));
      },
      py::arg("design") = "gamma_strong", py::arg("n") = 2000, py::arg("seed") = 1);
  m.def(
      "simulate_pci",
      [](std::uint64_t seed) {
        PciDesign d;
        d.seed = seed;
        auto sim = simulate_pci(d);
        return py::make_tuple(std::move(sim.data), sim_truth(sim.truth));
      },
      py::arg("seed") = 1);
  m.def(
      "replicate",
      [](const std::string& design, std::size_t n, std::size_t reps, const std::vector<std::string>& methods,
         const std::string& config, std::uint64_t seed, std::size_t workers) {
        auto d = design_preset(design);
        d.n = n;
        d.seed = seed;
        ReplicationReport r;
        {
          py::gil_scoped_release release;
          r = replicate(d, reps, methods, parse_config(config), workers);
        }
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict x;
          x["estimand"] = row.estimand;
          x["n"] = row.n;
          x["method"] = row.method;
          x["bias"] = row.bias;
          x["width"] = row.width;
          x["coverage"] = row.coverage;
          x["reps"] = row.reps;
          x["failures"] = row.failures;
          rows.append(x);
        }
        return rows;
      },
      py::arg("design"), py::arg("n"), py::arg("reps"), py::arg("methods"), py::arg("config_json") = "",
      py::arg("seed") = 1, py::arg("workers") = 0);
  m.def("sensitivity_grid", [] {
    std::vector<std::tuple<double, double, double, double>> out;
    for (const auto& c : sensitivity_grid()) out.emplace_back(c.a, c.b, c.psi_inv, c.nu);
    return out;
  });
  m.def(
      "hyperprior_sweep",
      [](const Dataset& data, const std::vector<std::tuple<double, double, double, double>>& cells,
         const std::string& config, double tolerance) {
        std::vector<HyperCell> grid;
        for (const auto& [a, b, psi_inv, nu] : cells) grid.push_back(HyperCell{a, b, psi_inv, nu});
        SweepOptions opt;
        opt.tolerance = tolerance;
        SweepReport r;
        {
          py::gil_scoped_release release;
          r = hyperprior_sweep(data, grid, parse_config(config), opt);
        }
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict x;
          x["cell"] = row.cell;
          x["label"] = row.hyper.label();
          x["estimand"] = row.estimand;
          x["median"] = row.median;
          x["ci_low"] = row.ci_low;
          x["ci_high"] = row.ci_high;
          x["delta"] = row.delta;
          x["error"] = row.error;
          rows.append(x);
        }
        return rows;
      },
      py::arg("data"), py::arg("cells"), py::arg("config_json") = "", py::arg("tolerance") = 1.0);
}
