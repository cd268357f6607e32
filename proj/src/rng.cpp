#include "dpmliv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "dpmliv/error.hpp"

namespace dpmliv {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standardized bounds beyond this use rejection instead of the inverse CDF.
constexpr double kTail = 3.0;

// Standard normal restricted to (a, b) with a >= kTail.
double upper_tail(Rng& rng, double a, double b) {
  if (std::isfinite(b) && b - a < 1.0 / a) {
    // Narrow slab: uniform proposal, density ratio against the value at a.
    for (;;) {
      const double z = a + rng.uniform() * (b - a);
      if (rng.uniform() <= std::exp(-0.5 * (z * z - a * a))) return z;
    }
  }
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform()) / lambda;
    if (z >= b) continue;
    const double g = z - lambda;
    if (rng.uniform() <= std::exp(-0.5 * g * g)) return z;
  }
}

double standard_truncated(Rng& rng, double a, double b) {
  if (std::isinf(a) && std::isinf(b)) return rng.normal();
  if (a >= kTail) return upper_tail(rng, a, b);
  if (b <= -kTail) return -upper_tail(rng, -b, -a);
  for (;;) {
    double x;
    if (a > 0.0) {
      const double qa = norm_sf(a), qb = norm_sf(b);
      x = -norm_quantile(qb + rng.uniform() * (qa - qb));
    } else {
      const double pa = norm_cdf(a), pb = norm_cdf(b);
      x = norm_quantile(pa + rng.uniform() * (pb - pa));
    }
    if (x > a && x < b) return x;
  }
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t s0 = splitmix64(seed), s1 = splitmix64(stream ^ 0x5851f42d4c957f2dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(s0), static_cast<std::uint32_t>(s0 >> 32),
                    static_cast<std::uint32_t>(s1), static_cast<std::uint32_t>(s1 >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double sample_normal(Rng& rng, double mean, double var) {
  if (!(var > 0.0) || !std::isfinite(var)) throw InvalidArgument("sample_normal: variance must be > 0");
  return mean + std::sqrt(var) * rng.normal();
}

double sample_truncated_normal(Rng& rng, double mean, double var, double lower, double upper) {
  if (!(var > 0.0) || !std::isfinite(var)) throw InvalidArgument("sample_truncated_normal: variance must be > 0");
  if (!(lower < upper)) throw InvalidArgument("sample_truncated_normal: empty interval");
  const double sd = std::sqrt(var);
  const double a = (lower - mean) / sd, b = (upper - mean) / sd;
  for (;;) {
    const double x = mean + sd * standard_truncated(rng, a, b);
    if (x > lower && x < upper) return x;
  }
}

double sample_gamma(Rng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw InvalidArgument("sample_gamma: shape and rate must be > 0");
  return rng.gamma(shape) / rate;
}

double sample_inverse_gamma(Rng& rng, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw InvalidArgument("sample_inverse_gamma: shape and scale must be > 0");
  return scale / rng.gamma(shape);
}

double sample_beta(Rng& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidArgument("sample_beta: parameters must be > 0");
  // Log-space Gamma draws keep small shapes from underflowing to zero.
  auto log_gamma_draw = [&rng](double shape) {
    if (shape >= 1.0) return std::log(rng.gamma(shape));
    return std::log(rng.gamma(shape + 1.0)) + std::log(rng.uniform()) / shape;
  };
  const double lx = log_gamma_draw(a), ly = log_gamma_draw(b);
  const double v = 1.0 / (1.0 + std::exp(ly - lx));
  return std::clamp(v, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

std::size_t sample_categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("sample_categorical: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("sample_categorical: weights sum to zero");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    acc += weights[j];
    last = j;
    if (u < acc) return j;
  }
  return last;
}

std::size_t sample_categorical_log(Rng& rng, std::span<const double> log_weights) {
  double mx = -kInf;
  for (double lw : log_weights) mx = std::max(mx, lw);
  if (!std::isfinite(mx)) throw InvalidArgument("sample_categorical_log: no finite log weight");
  thread_local std::vector<double> p;
  p.resize(log_weights.size());
  double total = 0.0;
  for (std::size_t j = 0; j < log_weights.size(); ++j) {
    p[j] = std::exp(log_weights[j] - mx);
    total += p[j];
  }
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    acc += p[j];
    last = j;
    if (u < acc) return j;
  }
  return last;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double norm_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double norm_logcdf(double x) {
  if (x > -30.0) return std::log(norm_cdf(x));
  // Asymptotic series of the Mills ratio.
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

double norm_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

double norm_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double truncated_normal_mean(double mean, double var, double lower, double upper) {
  const double sd = std::sqrt(var);
  const double a = (lower - mean) / sd, b = (upper - mean) / sd;
  const double pa = std::isinf(a) ? 0.0 : norm_pdf(a);
  const double pb = std::isinf(b) ? 0.0 : norm_pdf(b);
  // Mass from the side that keeps precision.
  const double mass = a > 0.0 ? norm_sf(a) - norm_sf(b) : norm_cdf(b) - norm_cdf(a);
  return mean + sd * (pa - pb) / mass;
}

}  // namespace dpmliv
