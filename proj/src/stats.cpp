#include "dpmliv/stats.hpp"

#include <algorithm>
#include <cmath>

#include "dpmliv/error.hpp"

namespace dpmliv::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("variance needs at least 2 values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile(std::span<const double> x, double p) {
  if (x.empty()) throw InvalidArgument("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

Interval summarize(std::span<const double> x) { return {median(x), quantile(x, 0.025), quantile(x, 0.975)}; }

double batch_means_se(std::span<const double> x, std::size_t n_batches) {
  const std::size_t len = x.size() / n_batches;
  if (len < 2) throw InvalidArgument("series too short for batch means");
  std::vector<double> means(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) means[b] = mean(x.subspan(b * len, len));
  return std::sqrt(variance(means) / static_cast<double>(n_batches));
}

}  // namespace dpmliv::stats
