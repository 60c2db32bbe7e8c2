#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"
#include "lrb/parallel.hpp"
#include "lrb/random.hpp"

using namespace lrb;

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(42), b(42), c(derive_seed(42, {stream::kReplicate, 1}));
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  Rng d(42);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += d() == c();
  CHECK(same == 0);
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("uniform stays inside the open unit interval") {
  Rng r(7);
  double lo = 1, hi = 0, sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / 1e5 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal and exponential moments") {
  Rng r(11);
  double s = 0, s2 = 0, e = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    e += r.exponential();
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(e / n - 1.0) < 0.02);
}

TEST_CASE("normal distribution helpers") {
  CHECK(norm_cdf(0.0) == 0.5);
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(norm_quantile(norm_cdf(-3.1)) == doctest::Approx(-3.1).epsilon(1e-12));
  CHECK(std::isinf(norm_quantile(0.0)));
  // tail: log Phi(-40) ~ -800 - log(40 sqrt(2 pi))
  CHECK(log_norm_cdf(-40.0) == doctest::Approx(-804.6084420137538).epsilon(1e-13));  // high-precision reference
  CHECK(norm_mills(-40.0) == doctest::Approx(40.0 + 1.0 / 40).epsilon(1e-4));
  CHECK(logistic_cdf(std::log(3.0)) == doctest::Approx(0.75));
  CHECK(logistic_quantile(0.75) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("truncated sampling respects the interval") {
  Rng r(3);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated(Latent::normal, 0.0, INFINITY, r.uniform());
    CHECK(x > 0.0);
    sum += x;
  }
  CHECK(std::abs(sum / n - std::sqrt(2.0 / M_PI)) < 0.01);
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_truncated(Latent::normal, 9.0, 9.5, r.uniform());
    CHECK(x > 9.0);
    CHECK(x <= 9.5);
    const double y = sample_truncated(Latent::logistic, -INFINITY, -30.0, r.uniform());
    CHECK(y <= -30.0);
  }
  CHECK_THROWS_AS(sample_truncated(Latent::normal, 60.0, 61.0, 0.5), Error);
}

TEST_CASE("parallel_for fills slots independent of thread count") {
  std::vector<double> a(1000), b(1000);
  parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = Rng(derive_seed(5, {i})).normal(); });
  parallel_for(b.size(), 4, [&](std::size_t i) { b[i] = Rng(derive_seed(5, {i})).normal(); });
  CHECK(a == b);
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 4) throw std::runtime_error("x");
  }));
}
