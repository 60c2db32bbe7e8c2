#include "lrb/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"

namespace lrb {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_length(const FitResult& fit, const Eigen::VectorXd& y) {
  if (fit.eta.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "residuals", "response length differs from the fit");
  }
}

// Category index 1..J of a binary or ordinal observation.
int category_of(const FitResult& fit, double y) {
  if (fit.is_ordinal()) return static_cast<int>(y);
  if (y == 0.0) return 1;
  if (y == 1.0) return 2;
  throw Error(ErrorCode::InvalidArgument, "residuals", "binary residuals need responses in {0, 1}");
}

double cutpoint(const FitResult& fit, int k) {
  // k-th cutpoint, 0..J; binary data use the single cutpoint 0.
  const int K = fit.is_ordinal() ? static_cast<int>(fit.cutpoints.size()) : 1;
  if (k <= 0) return -kInf;
  if (k > K) return kInf;
  return fit.is_ordinal() ? fit.cutpoints(k - 1) : 0.0;
}

ResidualSet make_set(const FitResult& fit, Eigen::VectorXd values, ResidualKind kind) {
  ResidualSet out;
  out.values = std::move(values);
  out.kind = kind;
  out.fit_ref = std::string(to_string(fit.family)) + "/" + std::string(to_string(fit.link));
  return out;
}

double xlogy_ratio(double y, double mu) { return y == 0.0 ? 0.0 : y * std::log(y / mu); }

}  // namespace

std::string_view to_string(ResidualKind kind) {
  switch (kind) {
    case ResidualKind::pearson: return "pearson";
    case ResidualKind::deviance: return "deviance";
    case ResidualKind::sbs: return "sbs";
    case ResidualKind::surrogate: return "surrogate";
    case ResidualKind::raw: return "raw";
  }
  return "?";
}

ResidualKind parse_residual_kind(std::string_view text) {
  for (auto k : {ResidualKind::pearson, ResidualKind::deviance, ResidualKind::sbs, ResidualKind::surrogate,
                 ResidualKind::raw}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "residuals", "unknown residual kind '" + std::string(text) + "'");
}

bool residual_supported(Family family, ResidualKind kind) {
  switch (kind) {
    case ResidualKind::surrogate:
    case ResidualKind::sbs: return family == Family::binomial || family == Family::ordinal;
    case ResidualKind::pearson:
    case ResidualKind::deviance: return family != Family::ordinal;
    case ResidualKind::raw: return family == Family::gaussian;
  }
  return false;
}

void require_residual(Family family, ResidualKind kind) {
  if (!residual_supported(family, kind)) {
    throw Error(ErrorCode::UnsupportedKind, "residuals",
                std::string(to_string(kind)) + " residuals are not defined for the " +
                    std::string(to_string(family)) + " family");
  }
}

ResidualSet pearson(const FitResult& fit, const Eigen::VectorXd& y) {
  require_residual(fit.family, ResidualKind::pearson);
  check_length(fit, y);
  Eigen::VectorXd r = ((y - fit.mu).array() / fit.var.array().sqrt()).matrix();
  return make_set(fit, std::move(r), ResidualKind::pearson);
}

ResidualSet deviance(const FitResult& fit, const Eigen::VectorXd& y) {
  require_residual(fit.family, ResidualKind::deviance);
  check_length(fit, y);
  Eigen::VectorXd r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double yi = y(i), mu = fit.mu(i);
    double d = 0.0;
    switch (fit.family) {
      case Family::gaussian: d = (yi - mu) * (yi - mu); break;
      case Family::poisson: d = 2.0 * (xlogy_ratio(yi, mu) - (yi - mu)); break;
      case Family::binomial: d = 2.0 * (xlogy_ratio(yi, mu) + xlogy_ratio(1.0 - yi, 1.0 - mu)); break;
      case Family::gamma: d = 2.0 * (-std::log(yi / mu) + (yi - mu) / mu); break;
      case Family::ordinal: break;
    }
    const double sign = yi > mu ? 1.0 : (yi < mu ? -1.0 : 0.0);
    r(i) = sign * std::sqrt(std::max(d, 0.0));
  }
  return make_set(fit, std::move(r), ResidualKind::deviance);
}

ResidualSet sbs(const FitResult& fit, const Eigen::VectorXd& y) {
  require_residual(fit.family, ResidualKind::sbs);
  check_length(fit, y);
  Eigen::VectorXd r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const int j = category_of(fit, y(i));
    if (fit.is_ordinal()) {
      const Eigen::VectorXd F = ordinal_cumulative(fit.cutpoints, fit.eta(i));
      r(i) = F(j - 1) + F(j) - 1.0;
    } else {
      r(i) = j == 2 ? 1.0 - fit.mu(i) : -fit.mu(i);
    }
  }
  return make_set(fit, std::move(r), ResidualKind::sbs);
}

std::pair<double, double> surrogate_bounds(const FitResult& fit, double y, Eigen::Index i) {
  const int j = category_of(fit, y);
  return {cutpoint(fit, j - 1) - fit.eta(i), cutpoint(fit, j) - fit.eta(i)};
}

ResidualSet surrogate(const FitResult& fit, const Eigen::VectorXd& y, Rng& rng) {
  require_residual(fit.family, ResidualKind::surrogate);
  check_length(fit, y);
  const Latent law = fit.link == Link::logit ? Latent::logistic : Latent::normal;
  Eigen::VectorXd r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto [lo, hi] = surrogate_bounds(fit, y(i), i);
    r(i) = sample_truncated(law, lo, hi, rng.uniform());
  }
  return make_set(fit, std::move(r), ResidualKind::surrogate);
}

ResidualSet surrogate(const FitResult& fit, const Eigen::VectorXd& y, std::uint64_t seed) {
  Rng rng(seed);
  ResidualSet out = surrogate(fit, y, rng);
  out.latent_seed = seed;
  return out;
}

ResidualSet raw_residuals(const FitResult& fit, const Eigen::VectorXd& y) {
  require_residual(fit.family, ResidualKind::raw);
  check_length(fit, y);
  return make_set(fit, y - fit.eta, ResidualKind::raw);
}

ResidualSet compute_residuals(const FitResult& fit, const Eigen::VectorXd& y, ResidualKind kind,
                              std::uint64_t seed) {
  switch (kind) {
    case ResidualKind::pearson: return pearson(fit, y);
    case ResidualKind::deviance: return deviance(fit, y);
    case ResidualKind::sbs: return sbs(fit, y);
    case ResidualKind::surrogate: return surrogate(fit, y, seed);
    case ResidualKind::raw: return raw_residuals(fit, y);
  }
  throw Error(ErrorCode::UnsupportedKind, "residuals", "unknown residual kind");
}

double clamp_to_support(Family family, double y) {
  switch (family) {
    case Family::binomial: return std::clamp(y, 0.0, 1.0);
    case Family::poisson: return std::max(y, 0.0);
    case Family::gamma: return std::max(y, 1e-12);
    default: return y;
  }
}

Eigen::VectorXd recreate(const FitResult& fit, const Eigen::VectorXd& r_star, ResidualKind kind) {
  if (kind == ResidualKind::deviance) {
    throw Error(ErrorCode::UnsupportedKind, "residuals", "deviance residuals have no recreation rule");
  }
  require_residual(fit.family, kind);
  if (r_star.size() != fit.eta.size()) {
    throw Error(ErrorCode::DimensionMismatch, "residuals", "residual vector length differs from the fit");
  }
  const Eigen::Index n = r_star.size();
  Eigen::VectorXd y(n);
  switch (kind) {
    case ResidualKind::surrogate:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = r_star(i) + fit.eta(i);
        if (fit.is_ordinal()) {
          int j = 1;
          for (Eigen::Index k = 0; k < fit.cutpoints.size(); ++k) j += fit.cutpoints(k) < s;
          y(i) = j;
        } else {
          y(i) = s > 0.0 ? 1.0 : 0.0;
        }
      }
      break;
    case ResidualKind::sbs:
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!fit.is_ordinal()) {
          y(i) = r_star(i) > 0.0 ? 1.0 : 0.0;
          continue;
        }
        const Eigen::VectorXd F = ordinal_cumulative(fit.cutpoints, fit.eta(i));
        int best = 1;
        double best_gap = kInf;
        for (int j = 1; j <= fit.categories; ++j) {
          const double gap = std::abs(F(j - 1) + F(j) - 1.0 - r_star(i));
          if (gap < best_gap) {
            best_gap = gap;
            best = j;
          }
        }
        y(i) = best;
      }
      break;
    case ResidualKind::pearson:
      for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = clamp_to_support(fit.family, fit.mu(i) + std::sqrt(fit.var(i)) * r_star(i));
      }
      break;
    case ResidualKind::raw: y = fit.eta + r_star; break;
    case ResidualKind::deviance: break;
  }
  return y;
}

void write_residual_csv(std::ostream& out, const ResidualSet& residuals) {
  out << "observation,residual,kind\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < residuals.values.size(); ++i) {
    out << (i + 1) << ',' << residuals.values(i) << ',' << to_string(residuals.kind) << '\n';
  }
}

}  // namespace lrb
