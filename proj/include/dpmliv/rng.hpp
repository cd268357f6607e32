#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace dpmliv {

/// Seedable generator. Identical (seed, stream) and call sequence give an
/// identical stream. Each chain or replication owns one; never share an Rng
/// between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double normal() { return normal_(engine_); }
  /// Gamma(shape, 1).
  double gamma(double shape);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Sub-seed for stream `stream` of a base seed (replications, grid cells).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_normal(Rng& rng, double mean, double var);

/// Draw from Normal(mean, var) restricted to (lower, upper). Mild truncation
/// uses the inverse CDF; bounds deep in a tail use exponential rejection.
double sample_truncated_normal(Rng& rng, double mean, double var, double lower, double upper);

/// Draws lie in the open interval (0, 1); values that would round to an
/// endpoint are clamped to the nearest representable interior double.
double sample_beta(Rng& rng, double a, double b);
double sample_gamma(Rng& rng, double shape, double rate);
double sample_inverse_gamma(Rng& rng, double shape, double scale);

/// Index drawn with probability proportional to weights (normalized internally).
std::size_t sample_categorical(Rng& rng, std::span<const double> weights);
/// Same, with unnormalized log weights; -inf entries are never chosen.
std::size_t sample_categorical_log(Rng& rng, std::span<const double> log_weights);

double norm_cdf(double x);
/// Upper tail 1 - Phi(x), accurate for large x.
double norm_sf(double x);
double norm_pdf(double x);
/// log Phi(x), finite far into the lower tail.
double norm_logcdf(double x);
double norm_logpdf(double x, double mean, double var);
double norm_quantile(double p);

/// Mean of Normal(mean, var) truncated to (lower, upper).
double truncated_normal_mean(double mean, double var, double lower, double upper);

}  // namespace dpmliv
