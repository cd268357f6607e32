#include "dpmliv/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "dpmliv/error.hpp"
#include "dpmliv/text.hpp"

namespace dpmliv {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown field '" + it.key() + "' in " + where);
}

}  // namespace

void ModelConfig::validate() const {
  check(n_iter > 0, "n_iter must be positive");
  check(burn_in >= 0, "burn_in must be >= 0");
  check(n_iter > burn_in, "n_iter must exceed burn_in");
  check(thin >= 1, "thin must be >= 1");
  check(n_chains >= 1, "n_chains must be >= 1");
  check(dpm_truncation >= 2, "dpm_truncation must be >= 2");
  check(positive(prior_coef_variance), "prior_coef_variance must be > 0");
  check(positive(prior_intercept_variance), "prior_intercept_variance must be > 0");
  check(positive(concentration_prior.a) && positive(concentration_prior.b), "concentration_prior a, b must be > 0");
  check(positive(base_variance_prior.nu) && positive(base_variance_prior.psi_inv),
        "base_variance_prior nu, psi_inv must be > 0");
  check(std::isfinite(base_mean_hyper.m0_mean), "base_mean_hyper.m0_mean must be finite");
  check(positive(base_mean_hyper.m0_var) && positive(base_mean_hyper.k_shape) && positive(base_mean_hyper.k_scale),
        "base_mean_hyper m0_var, k_shape, k_scale must be > 0");
  check(positive(atom_variance_prior.shape) && positive(atom_variance_prior.scale),
        "atom_variance_prior shape, scale must be > 0");
  check(std::isfinite(pb_threshold), "pb_threshold must be finite");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"n_iter", c.n_iter},
      {"burn_in", c.burn_in},
      {"thin", c.thin},
      {"n_chains", c.n_chains},
      {"seed", c.seed},
      {"dpm_truncation", c.dpm_truncation},
      {"prior_coef_variance", c.prior_coef_variance},
      {"prior_intercept_variance", c.prior_intercept_variance},
      {"concentration_prior", {{"a", c.concentration_prior.a}, {"b", c.concentration_prior.b}}},
      {"base_variance_prior", {{"nu", c.base_variance_prior.nu}, {"psi_inv", c.base_variance_prior.psi_inv}}},
      {"base_mean_hyper",
       {{"m0_mean", c.base_mean_hyper.m0_mean},
        {"m0_var", c.base_mean_hyper.m0_var},
        {"k_shape", c.base_mean_hyper.k_shape},
        {"k_scale", c.base_mean_hyper.k_scale}}},
      {"atom_variance_prior", {{"shape", c.atom_variance_prior.shape}, {"scale", c.atom_variance_prior.scale}}},
      {"pb_threshold", c.pb_threshold},
      {"standardize_outcome", c.standardize_outcome},
  };
}

ModelConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"n_iter", "burn_in", "thin", "n_chains", "seed", "dpm_truncation", "prior_coef_variance",
                  "prior_intercept_variance", "concentration_prior", "base_variance_prior", "base_mean_hyper",
                  "atom_variance_prior", "pb_threshold", "standardize_outcome"},
                 "config");
  ModelConfig c;
  try {
    c.n_iter = j.value("n_iter", c.n_iter);
    c.burn_in = j.value("burn_in", c.burn_in);
    c.thin = j.value("thin", c.thin);
    c.n_chains = j.value("n_chains", c.n_chains);
    c.seed = j.value("seed", c.seed);
    c.dpm_truncation = j.value("dpm_truncation", c.dpm_truncation);
    c.prior_coef_variance = j.value("prior_coef_variance", c.prior_coef_variance);
    c.prior_intercept_variance = j.value("prior_intercept_variance", c.prior_intercept_variance);
    c.pb_threshold = j.value("pb_threshold", c.pb_threshold);
    c.standardize_outcome = j.value("standardize_outcome", c.standardize_outcome);
    if (j.contains("concentration_prior")) {
      const auto& s = j.at("concentration_prior");
      reject_unknown(s, {"a", "b"}, "concentration_prior");
      c.concentration_prior.a = s.value("a", c.concentration_prior.a);
      c.concentration_prior.b = s.value("b", c.concentration_prior.b);
    }
    if (j.contains("base_variance_prior")) {
      const auto& s = j.at("base_variance_prior");
      reject_unknown(s, {"nu", "psi_inv"}, "base_variance_prior");
      c.base_variance_prior.nu = s.value("nu", c.base_variance_prior.nu);
      c.base_variance_prior.psi_inv = s.value("psi_inv", c.base_variance_prior.psi_inv);
    }
    if (j.contains("base_mean_hyper")) {
      const auto& s = j.at("base_mean_hyper");
      reject_unknown(s, {"m0_mean", "m0_var", "k_shape", "k_scale"}, "base_mean_hyper");
      c.base_mean_hyper.m0_mean = s.value("m0_mean", c.base_mean_hyper.m0_mean);
      c.base_mean_hyper.m0_var = s.value("m0_var", c.base_mean_hyper.m0_var);
      c.base_mean_hyper.k_shape = s.value("k_shape", c.base_mean_hyper.k_shape);
      c.base_mean_hyper.k_scale = s.value("k_scale", c.base_mean_hyper.k_scale);
    }
    if (j.contains("atom_variance_prior")) {
      const auto& s = j.at("atom_variance_prior");
      reject_unknown(s, {"shape", "scale"}, "atom_variance_prior");
      c.atom_variance_prior.shape = s.value("shape", c.atom_variance_prior.shape);
      c.atom_variance_prior.scale = s.value("scale", c.atom_variance_prior.scale);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ModelConfig& cfg) {
  const auto h = text::fnv1a(to_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dpmliv
