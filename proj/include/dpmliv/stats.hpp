#pragma once

#include <span>
#include <vector>

namespace dpmliv::stats {

double mean(std::span<const double> x);
/// Sample variance with denominator n - 1.
double variance(std::span<const double> x);

/// Linear-interpolation quantile (R type 7) of unsorted data.
double quantile(std::span<const double> x, double p);
double median(std::span<const double> x);

struct Interval {
  double median;
  double low;
  double high;
};
/// Median and central 95% interval.
Interval summarize(std::span<const double> x);

/// Batch-means standard error of the mean for a correlated series.
double batch_means_se(std::span<const double> x, std::size_t n_batches = 50);

}  // namespace dpmliv::stats
