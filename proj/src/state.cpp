#include "dpmliv/state.hpp"

#include <cmath>

#include "dpmliv/error.hpp"

namespace dpmliv {

std::size_t DpmState::occupied() const {
  std::size_t k = 0;
  for (auto c : counts) k += c > 0;
  return k;
}

std::size_t DpmState::n_units() const {
  std::size_t n = 0;
  for (auto c : counts) n += static_cast<std::size_t>(c);
  return n;
}

double DpmState::allocation_mean() const {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    s += counts[j] * means[j];
    n += counts[j];
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

double DpmState::allocation_variance() const {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    s += counts[j] * vars[j];
    n += counts[j];
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

void DpmState::recount() {
  counts.assign(size(), 0);
  for (auto a : allocations) ++counts[static_cast<std::size_t>(a)];
}

void DpmState::check_invariants() const {
  const auto h = size();
  if (h == 0) throw NumericalError("DPM state has no atoms");
  if (static_cast<std::size_t>(means.size()) != h || static_cast<std::size_t>(vars.size()) != h ||
      counts.size() != h)
    throw NumericalError("DPM state arrays disagree on truncation level");
  double sum = 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    if (!(weights[j] >= 0.0)) throw NumericalError("negative stick weight");
    if (!(vars[j] > 0.0) || !std::isfinite(vars[j])) throw NumericalError("non-positive atom variance");
    if (!std::isfinite(means[j])) throw NumericalError("non-finite atom mean");
    sum += weights[j];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw NumericalError("stick weights do not sum to 1");
  if (!(concentration > 0.0) || !(base_var > 0.0) || !(hyper_var > 0.0))
    throw NumericalError("non-positive DPM hyperparameter");
  for (auto a : allocations)
    if (a < 0 || static_cast<std::size_t>(a) >= h) throw NumericalError("allocation out of range");
}

std::string to_string(Variant v) { return v == Variant::DpmLiv ? "dpm" : "normal"; }

Variant variant_from_string(const std::string& s) {
  if (s == "dpm" || s == "DPM_LIV" || s == "dpm_liv") return Variant::DpmLiv;
  if (s == "normal" || s == "NORMAL_LIV" || s == "normal_liv") return Variant::NormalLiv;
  throw InvalidArgument("unknown variant '" + s + "' (expected dpm or normal)");
}

std::vector<ParamState> pool(const std::vector<PosteriorDraws>& chains) {
  std::vector<ParamState> all;
  for (const auto& c : chains) all.insert(all.end(), c.iterations.begin(), c.iterations.end());
  return all;
}

}  // namespace dpmliv
