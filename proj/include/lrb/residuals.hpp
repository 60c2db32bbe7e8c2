#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "lrb/dataset.hpp"
#include "lrb/glm.hpp"
#include "lrb/random.hpp"

namespace lrb {

enum class ResidualKind { pearson, deviance, sbs, surrogate, raw };

std::string_view to_string(ResidualKind kind);
ResidualKind parse_residual_kind(std::string_view text);

/// Whether `kind` is defined for `family` (deviance is diagnostic only).
bool residual_supported(Family family, ResidualKind kind);
/// Throws Error(UnsupportedKind) when the pair is not supported.
void require_residual(Family family, ResidualKind kind);

struct ResidualSet {
  Eigen::VectorXd values;
  ResidualKind kind = ResidualKind::pearson;
  std::optional<std::uint64_t> latent_seed;  // surrogate only
  std::string fit_ref;                       // model description of the source fit
};

ResidualSet pearson(const FitResult& fit, const Eigen::VectorXd& y);
ResidualSet deviance(const FitResult& fit, const Eigen::VectorXd& y);
ResidualSet sbs(const FitResult& fit, const Eigen::VectorXd& y);
/// One truncated latent draw per observation, consumed in row order.
ResidualSet surrogate(const FitResult& fit, const Eigen::VectorXd& y, Rng& rng);
ResidualSet surrogate(const FitResult& fit, const Eigen::VectorXd& y, std::uint64_t seed);
ResidualSet raw_residuals(const FitResult& fit, const Eigen::VectorXd& y);

/// Dispatch by kind; `seed` feeds the surrogate draw.
ResidualSet compute_residuals(const FitResult& fit, const Eigen::VectorXd& y, ResidualKind kind,
                              std::uint64_t seed = 0);

inline ResidualSet pearson(const FitResult& fit, const Dataset& data) { return pearson(fit, data.y); }
inline ResidualSet deviance(const FitResult& fit, const Dataset& data) { return deviance(fit, data.y); }
inline ResidualSet sbs(const FitResult& fit, const Dataset& data) { return sbs(fit, data.y); }
inline ResidualSet surrogate(const FitResult& fit, const Dataset& data, Rng& rng) {
  return surrogate(fit, data.y, rng);
}

/// Latent bounds (lo, hi] of the surrogate residual of observation i.
std::pair<double, double> surrogate_bounds(const FitResult& fit, double y, Eigen::Index i);

/// Turns resampled residuals back into pseudo-responses under the rule of
/// `kind`. Throws Error(UnsupportedKind) for deviance residuals.
Eigen::VectorXd recreate(const FitResult& fit, const Eigen::VectorXd& r_star, ResidualKind kind);

/// Clamps a pseudo-response into the family's support.
double clamp_to_support(Family family, double y);

/// CSV with columns observation,residual,kind (observations numbered from 1).
void write_residual_csv(std::ostream& out, const ResidualSet& residuals);

}  // namespace lrb
