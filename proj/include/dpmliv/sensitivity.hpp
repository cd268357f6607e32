#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpmliv/config.hpp"
#include "dpmliv/dataset.hpp"
#include "dpmliv/effects.hpp"
#include "dpmliv/simulation.hpp"

namespace dpmliv {

/// One hyperprior setting: c ~ Gamma(a, b), tau ~ InvGamma(nu, psi_inv).
struct HyperCell {
  double a = 1.0;
  double b = 1.0;
  double psi_inv = 5.0;
  double nu = 1.0;

  ModelConfig apply(ModelConfig cfg) const;
  std::string label() const;
};

/// {(a, b)} x {(psi_inv, nu)} in row-major order.
std::vector<HyperCell> hyper_grid(const std::vector<std::pair<double, double>>& ab,
                                  const std::vector<std::pair<double, double>>& psi_nu);
/// {(10, 1), (1, 1)} x {(50, 2), (1, 4)}.
std::vector<HyperCell> sensitivity_grid();

struct SweepRow {
  std::size_t cell = 0;
  HyperCell hyper;
  std::string estimand;  // "ATE", "CATE(x3==1)", ...
  double median = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  /// median minus the reference (first) cell's median for the same estimand.
  double delta = 0.0;
  /// Sample truth when the data were simulated.
  std::optional<double> truth;
  /// Fit error text; the numeric fields are NaN when set.
  std::string error;
};

struct SweepFlag {
  std::string estimand;
  std::size_t cell_a = 0, cell_b = 0;
  double difference = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<SweepFlag> flags;
  double tolerance = 0.0;

  /// Largest pairwise median difference among successful cells for `estimand`.
  double spread(const std::string& estimand) const;
};

struct SweepOptions {
  /// Estimands evaluated in each cell; ATE when empty.
  std::vector<EffectRequest> estimands;
  /// Median differences above this flag the pair of cells.
  double tolerance = 1.0;
  std::size_t workers = 0;
};

std::string estimand_label(const EffectRequest& request);

/// Fits the DPM model once per cell with the cell's hyperpriors. Each cell's
/// seed is derived from config.seed and a hash of the cell values, so a cell's
/// result does not depend on its position in the grid. Throws InvalidArgument
/// on an empty grid; a failing cell is recorded in its rows and skipped.
SweepReport hyperprior_sweep(const Dataset& data, const std::vector<HyperCell>& grid, const ModelConfig& config,
                             const SweepOptions& options = {});

/// Simulates the design once and sweeps it, recording sample truths for ATE
/// and CATE requests.
SweepReport hyperprior_sweep(const SimDesign& design, const std::vector<HyperCell>& grid, const ModelConfig& config,
                             const SweepOptions& options = {});

/// One row per (cell, estimand): cell, a, b, psi_inv, nu, estimand, median,
/// ci_low, ci_high, delta, truth, error.
void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path);

}  // namespace dpmliv
