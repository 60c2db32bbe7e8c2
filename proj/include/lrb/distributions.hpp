#pragma once

namespace lrb {

double norm_pdf(double x) noexcept;
double norm_cdf(double x) noexcept;
/// Upper tail, 1 - Phi(x), without cancellation.
double norm_sf(double x) noexcept;
double norm_quantile(double p);
double log_norm_cdf(double x) noexcept;
/// phi(x) / Phi(x), stable far into the lower tail.
double norm_mills(double x) noexcept;

double logistic_cdf(double x) noexcept;
double logistic_pdf(double x) noexcept;
double logistic_quantile(double p);

/// Latent error law behind a binary/ordinal link.
enum class Latent { normal, logistic };

double latent_cdf(Latent law, double x) noexcept;
double latent_sf(Latent law, double x) noexcept;
double latent_quantile(Latent law, double p);

/// Draws from the latent law truncated to (lo, hi] by inverse-CDF sampling;
/// `u` is a uniform on (0, 1). Infinite bounds are allowed. Throws
/// Error(DegenerateTruncation) when the interval mass is below 1e-300.
double sample_truncated(Latent law, double lo, double hi, double u);

}  // namespace lrb
