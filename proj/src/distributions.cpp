#include "lrb/distributions.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "lrb/errors.hpp"

namespace lrb {
namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kTailCutoff = -35.0;

// Asymptotic factor in Phi(x) ~ phi(x)/(-x) * series(x) for x << 0.
double tail_series(double x) {
  const double z = 1.0 / (x * x);
  return 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
}

}  // namespace

double norm_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double norm_sf(double x) noexcept { return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::InvalidArgument, "distributions", "normal quantile needs p in [0,1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_norm_cdf(double x) noexcept {
  if (x > kTailCutoff) return std::log(norm_cdf(x));
  return -0.5 * x * x - std::log(-x) + std::log(kInvSqrt2Pi) + std::log(tail_series(x));
}

double norm_mills(double x) noexcept {
  if (x > kTailCutoff) return norm_pdf(x) / norm_cdf(x);
  return -x / tail_series(x);
}

double logistic_cdf(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logistic_pdf(double x) noexcept {
  const double e = std::exp(-std::abs(x));
  return e / ((1.0 + e) * (1.0 + e));
}

double logistic_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::InvalidArgument, "distributions", "logistic quantile needs p in [0,1]");
  }
  return std::log(p) - std::log1p(-p);
}

double latent_cdf(Latent law, double x) noexcept {
  return law == Latent::normal ? norm_cdf(x) : logistic_cdf(x);
}

double latent_sf(Latent law, double x) noexcept { return latent_cdf(law, -x); }

double latent_quantile(Latent law, double p) {
  return law == Latent::normal ? norm_quantile(p) : logistic_quantile(p);
}

double sample_truncated(Latent law, double lo, double hi, double u) {
  if (!(lo < hi)) {
    throw Error(ErrorCode::DegenerateTruncation, "residuals", "empty truncation interval");
  }
  double x;
  if (lo >= 0.0) {
    // Upper region: both laws are symmetric, so sample the mirror image
    // (-hi, -lo] from the lower tail where the CDF has full precision.
    const double a = latent_cdf(law, -hi);
    const double b = latent_cdf(law, -lo);
    if (!(b - a >= 1e-300)) {
      throw Error(ErrorCode::DegenerateTruncation, "residuals", "truncation mass below 1e-300");
    }
    x = -latent_quantile(law, b - u * (b - a));
  } else {
    const double a = latent_cdf(law, lo);
    const double b = latent_cdf(law, hi);
    if (!(b - a >= 1e-300)) {
      throw Error(ErrorCode::DegenerateTruncation, "residuals", "truncation mass below 1e-300");
    }
    x = latent_quantile(law, a + u * (b - a));
  }
  if (x <= lo) x = std::nextafter(lo, std::numeric_limits<double>::infinity());
  if (x > hi) x = hi;
  return x;
}

}  // namespace lrb
