#pragma once

#include <filesystem>

#include "dpmliv/state.hpp"

namespace dpmliv {

/// Flat CSV, one row per retained draw. The first line is a '#' comment
/// holding the chain id, variant and config as JSON; the header follows.
///
/// Columns: treatment (intercept, gamma, beta_k, loading), each outcome arm
/// (intercept, beta_k, loading), each arm's mixture (hyperparameters,
/// allocation-weighted mean mu_bar and variance sigma2_bar, then per atom
/// stick, weight, mean, var, count), theta_i, and d_star_i plus allocations
/// when the draws carry them. Doubles use the shortest round-trip form, so
/// write -> read -> write is byte-identical.
void write_draws(const PosteriorDraws& draws, const std::filesystem::path& path);

PosteriorDraws read_draws(const std::filesystem::path& path);

}  // namespace dpmliv
