#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>

#include "doctest.h"
#include "dpmliv/error.hpp"
#include "dpmliv/rng.hpp"
#include "dpmliv/stats.hpp"

using namespace dpmliv;

namespace {

constexpr int kDraws = 100000;
constexpr double kSeTol = 4.0;

template <class F>
std::vector<double> draw(int n, F f) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = f();
  return v;
}

void check_mean(const std::vector<double>& v, double expected) {
  const double se = std::sqrt(stats::variance(v) / static_cast<double>(v.size()));
  CHECK(std::abs(stats::mean(v) - expected) < kSeTol * se);
}

// Two-sample Kolmogorov-Smirnov p-value from the asymptotic distribution.
double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) q += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace

TEST_CASE("identical seeds give identical streams") {
  Rng a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int k = 0; k < 1000; ++k) {
    const double x = sample_normal(a, 0.0, 1.0);
    CHECK(x == sample_normal(b, 0.0, 1.0));
    differs |= x != sample_normal(c, 0.0, 1.0);
  }
  CHECK(differs);
}

TEST_CASE("chain streams do not collide on a prefix") {
  std::unordered_set<std::uint64_t> seen;
  constexpr int kStreams = 8, kPrefix = 100000;
  for (int s = 0; s < kStreams; ++s) {
    Rng r(7, static_cast<std::uint64_t>(s));
    for (int k = 0; k < kPrefix; ++k) seen.insert(r.next_u64());
  }
  CHECK(seen.size() == static_cast<std::size_t>(kStreams) * kPrefix);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("normal sampler moments") {
  Rng rng(1);
  check_mean(draw(kDraws, [&] { return sample_normal(rng, 5.0, 1e-6); }), 5.0);
  const auto v = draw(kDraws, [&] { return sample_normal(rng, 0.0, 1.0); });
  // Var of the sample variance for a Normal is 2 sigma^4 / (n - 1).
  CHECK(std::abs(stats::variance(v) - 1.0) < kSeTol * std::sqrt(2.0 / (kDraws - 1)));
  CHECK_THROWS_AS(sample_normal(rng, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(sample_normal(rng, 0.0, -1.0), InvalidArgument);
}

TEST_CASE("truncated normal sampler") {
  Rng rng(2);
  const auto half = draw(kDraws, [&] { return sample_truncated_normal(rng, 0.0, 1.0, 0.0, kInf); });
  check_mean(half, std::sqrt(2.0 / std::numbers::pi));
  CHECK(*std::min_element(half.begin(), half.end()) > 0.0);

  const auto tail = draw(kDraws, [&] { return sample_truncated_normal(rng, 0.0, 1.0, 5.0, kInf); });
  CHECK(*std::min_element(tail.begin(), tail.end()) > 5.0);
  check_mean(tail, truncated_normal_mean(0.0, 1.0, 5.0, kInf));

  const auto far = draw(kDraws, [&] { return sample_truncated_normal(rng, -10.0, 1.0, -kInf, 0.0); });
  CHECK(std::abs(stats::mean(far) + 10.0) < 0.01);
  CHECK(*std::max_element(far.begin(), far.end()) <= 0.0);

  const auto two = draw(kDraws, [&] { return sample_truncated_normal(rng, 1.0, 4.0, -0.5, 0.25); });
  check_mean(two, truncated_normal_mean(1.0, 4.0, -0.5, 0.25));

  const auto free = draw(10000, [&] { return sample_truncated_normal(rng, 0.0, 1.0, -kInf, kInf); });
  const auto plain = draw(10000, [&] { return sample_normal(rng, 0.0, 1.0); });
  CHECK(ks_pvalue(free, plain) > 0.01);

  CHECK_THROWS_AS(sample_truncated_normal(rng, 0.0, 1.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(sample_truncated_normal(rng, 0.0, 1.0, 2.0, 1.0), InvalidArgument);
}

TEST_CASE("beta, gamma and inverse-gamma samplers") {
  Rng rng(3);
  check_mean(draw(kDraws, [&] { return sample_beta(rng, 1.0, 1.0); }), 0.5);
  check_mean(draw(kDraws, [&] { return sample_beta(rng, 2.0, 5.0); }), 2.0 / 7.0);
  check_mean(draw(kDraws, [&] { return sample_gamma(rng, 3.0, 0.1); }), 30.0);
  check_mean(draw(kDraws, [&] { return sample_gamma(rng, 0.3, 2.0); }), 0.15);
  check_mean(draw(kDraws, [&] { return sample_inverse_gamma(rng, 5.0, 2.0); }), 0.5);
  for (double v : draw(10000, [&] { return sample_beta(rng, 0.2, 0.2); })) CHECK((v > 0.0 && v < 1.0));
  CHECK_THROWS_AS(sample_beta(rng, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(sample_gamma(rng, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(sample_inverse_gamma(rng, -1.0, 1.0), InvalidArgument);

  boost::math::inverse_gamma_distribution<> ig(1.0, 5.0);
  const auto tau = draw(kDraws, [&] { return sample_inverse_gamma(rng, 1.0, 5.0); });
  CHECK(std::abs(stats::median(tau) / boost::math::median(ig) - 1.0) < 0.05);

  const auto g = draw(10000, [&] { return sample_gamma(rng, 3.0, 0.1); });
  boost::math::gamma_distribution<> ref(3.0, 10.0);
  std::vector<double> exact(10000);
  for (std::size_t k = 0; k < exact.size(); ++k) exact[k] = boost::math::quantile(ref, (k + 0.5) / 10000.0);
  CHECK(ks_pvalue(g, exact) > 0.01);
}

TEST_CASE("categorical samplers") {
  Rng rng(4);
  const std::vector<double> w{0.0, 1.0, 0.0};
  for (int k = 0; k < 1000; ++k) CHECK(sample_categorical(rng, w) == 1);
  const std::vector<double> lw{-kInf, 0.0, -kInf};
  for (int k = 0; k < 1000; ++k) CHECK(sample_categorical_log(rng, lw) == 1);
  const std::vector<double> u{1.0, 3.0};
  const auto v = draw(kDraws, [&] { return static_cast<double>(sample_categorical(rng, u)); });
  check_mean(v, 0.75);
  const std::vector<double> big{-1000.0, -1000.0 + std::log(3.0)};
  check_mean(draw(kDraws, [&] { return static_cast<double>(sample_categorical_log(rng, big)); }), 0.75);
  CHECK_THROWS_AS(sample_categorical(rng, std::vector<double>{0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(sample_categorical(rng, std::vector<double>{-1.0, 2.0}), InvalidArgument);
}

TEST_CASE("normal distribution functions") {
  CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(norm_sf(37.0) > 0.0);
  CHECK(norm_sf(8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-12));
  CHECK(norm_logcdf(-40.0) == doctest::Approx(-804.608442013754).epsilon(1e-10));
  CHECK(norm_logcdf(-2.0) == doctest::Approx(std::log(0.0227501319481792)).epsilon(1e-12));
  CHECK(norm_quantile(0.975) == doctest::Approx(1.95996398454005).epsilon(1e-12));
  CHECK(norm_quantile(norm_cdf(-3.3)) == doctest::Approx(-3.3).epsilon(1e-12));
  CHECK(truncated_normal_mean(0.0, 1.0, 0.0, kInf) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
}
