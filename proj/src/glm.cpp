#include "lrb/glm.hpp"

#include <cmath>
#include <limits>

#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"

namespace lrb {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Pointwise {
  double ll = 0.0;
  double d1 = 0.0;  // d ll / d eta
  double d2 = 0.0;  // d^2 ll / d eta^2, non-positive
};

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Log-likelihood kernel of one observation (the c(y) term is dropped).
bool pointwise(Family family, Link link, double y, double eta, bool derivatives, Pointwise& out) {
  out = {};
  switch (family) {
    case Family::binomial:
      if (link == Link::probit) {
        if (y > 0.0) {
          out.ll += y * log_norm_cdf(eta);
          if (derivatives) {
            const double lam = norm_mills(eta);
            out.d1 += y * lam;
            out.d2 -= y * lam * (eta + lam);
          }
        }
        if (y < 1.0) {
          out.ll += (1.0 - y) * log_norm_cdf(-eta);
          if (derivatives) {
            const double lam = norm_mills(-eta);
            out.d1 -= (1.0 - y) * lam;
            out.d2 -= (1.0 - y) * lam * (lam - eta);
          }
        }
      } else {
        out.ll = y * eta - softplus(eta);
        if (derivatives) {
          const double mu = logistic_cdf(eta);
          out.d1 = y - mu;
          out.d2 = -mu * (1.0 - mu);
        }
      }
      return std::isfinite(out.ll);
    case Family::poisson: {
      if (eta > 700.0) return false;
      const double mu = std::exp(eta);
      out.ll = y * eta - mu;
      out.d1 = y - mu;
      out.d2 = -mu;
      return true;
    }
    case Family::gamma:
      if (!(eta > 0.0)) return false;
      out.ll = -y * eta + std::log(eta);
      out.d1 = 1.0 / eta - y;
      out.d2 = -1.0 / (eta * eta);
      return true;
    case Family::gaussian: {
      const double r = y - eta;
      out.ll = -0.5 * r * r;
      out.d1 = r;
      out.d2 = -1.0;
      return true;
    }
    case Family::ordinal: break;
  }
  return false;
}

struct Evaluation {
  double ll = kNegInf;
  Eigen::VectorXd score;
  Eigen::MatrixXd neg_hessian;
};

// ---- non-ordinal GLM objective -------------------------------------------

Evaluation eval_glm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                    const Eigen::VectorXd& beta, const Eigen::VectorXd* w, bool derivatives) {
  Evaluation ev;
  const Eigen::VectorXd eta = X * beta;
  const Eigen::Index n = X.rows();
  Eigen::VectorXd d1(n), d2(n);
  double ll = 0.0;
  Pointwise pw;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = w ? (*w)(i) : 1.0;
    if (wi == 0.0) {
      d1(i) = d2(i) = 0.0;
      continue;
    }
    if (!pointwise(spec.family, spec.link, y(i), eta(i), derivatives, pw)) return ev;
    ll += wi * pw.ll;
    d1(i) = wi * pw.d1;
    d2(i) = wi * pw.d2;
  }
  if (!std::isfinite(ll)) return ev;
  ev.ll = ll;
  if (derivatives) {
    ev.score = X.transpose() * d1;
    ev.neg_hessian = X.transpose() * (X.array().colwise() * (-d2).array()).matrix();
  }
  return ev;
}

// ---- ordinal objective ----------------------------------------------------

struct OrdinalTerms {
  double ll = kNegInf;
  double fu = 0, fl = 0, fuu = 0, fll = 0, ful = 0;
};

// Contribution of one observation in category j (1-based) with upper and
// lower latent bounds u = alpha_j - eta and l = alpha_{j-1} - eta.
OrdinalTerms ordinal_terms(int j, int J, double u, double l) {
  OrdinalTerms t;
  if (j == 1) {
    t.ll = log_norm_cdf(u);
    const double a = norm_mills(u);
    t.fu = a;
    t.fuu = -a * (u + a);
  } else if (j == J) {
    t.ll = log_norm_cdf(-l);
    const double b = norm_mills(-l);
    t.fl = -b;
    t.fll = -b * (b - l);
  } else {
    const double prob = l > 0.0 ? norm_cdf(-l) - norm_cdf(-u) : norm_cdf(u) - norm_cdf(l);
    if (!(prob > 0.0)) return t;
    t.ll = std::log(prob);
    const double pu = norm_pdf(u) / prob;
    const double pl = norm_pdf(l) / prob;
    t.fu = pu;
    t.fl = -pl;
    t.fuu = -u * pu - pu * pu;
    t.fll = l * pl - pl * pl;
    t.ful = pu * pl;
  }
  return t;
}

Evaluation eval_ordinal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int J,
                        const Eigen::VectorXd& params, const Eigen::VectorXd* w, bool derivatives) {
  Evaluation ev;
  const Eigen::Index p = X.cols();
  const Eigen::Index K = J - 1;
  const Eigen::VectorXd beta = params.head(p);
  const Eigen::VectorXd alpha = params.tail(K);
  for (Eigen::Index k = 1; k < K; ++k) {
    if (!(alpha(k) > alpha(k - 1))) return ev;
  }
  const Eigen::VectorXd eta = X * beta;
  const Eigen::Index n = X.rows();
  Eigen::VectorXd d1(n), d2(n);
  Eigen::VectorXd score_alpha = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd h_aa = Eigen::MatrixXd::Zero(K, K);
  Eigen::MatrixXd h_ba = Eigen::MatrixXd::Zero(p, K);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = w ? (*w)(i) : 1.0;
    d1(i) = d2(i) = 0.0;
    if (wi == 0.0) continue;
    const int j = static_cast<int>(y(i));
    const double u = j < J ? alpha(j - 1) - eta(i) : kInf;
    const double l = j > 1 ? alpha(j - 2) - eta(i) : kNegInf;
    const OrdinalTerms t = ordinal_terms(j, J, u, l);
    if (!std::isfinite(t.ll)) return ev;
    ll += wi * t.ll;
    if (!derivatives) continue;
    d1(i) = -wi * (t.fu + t.fl);
    d2(i) = wi * (t.fuu + 2.0 * t.ful + t.fll);
    if (j < J) {
      const Eigen::Index a = j - 1;
      score_alpha(a) += wi * t.fu;
      h_aa(a, a) += wi * t.fuu;
      h_ba.col(a) -= wi * (t.fuu + t.ful) * X.row(i).transpose();
    }
    if (j > 1) {
      const Eigen::Index a = j - 2;
      score_alpha(a) += wi * t.fl;
      h_aa(a, a) += wi * t.fll;
      h_ba.col(a) -= wi * (t.ful + t.fll) * X.row(i).transpose();
    }
    if (j > 1 && j < J) {
      h_aa(j - 1, j - 2) += wi * t.ful;
      h_aa(j - 2, j - 1) += wi * t.ful;
    }
  }
  if (!std::isfinite(ll)) return ev;
  ev.ll = ll;
  if (derivatives) {
    ev.score.resize(p + K);
    ev.score.head(p) = X.transpose() * d1;
    ev.score.tail(K) = score_alpha;
    ev.neg_hessian.resize(p + K, p + K);
    ev.neg_hessian.topLeftCorner(p, p) = X.transpose() * (X.array().colwise() * (-d2).array()).matrix();
    ev.neg_hessian.topRightCorner(p, K) = -h_ba;
    ev.neg_hessian.bottomLeftCorner(K, p) = -h_ba.transpose();
    ev.neg_hessian.bottomRightCorner(K, K) = -h_aa;
  }
  return ev;
}

Evaluation evaluate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                    const Eigen::VectorXd& params, const Eigen::VectorXd* w, bool derivatives) {
  if (spec.is_ordinal()) return eval_ordinal(X, y, spec.categories, params, w, derivatives);
  return eval_glm(X, y, spec, params, w, derivatives);
}

void check_response(const Eigen::VectorXd& y, const ModelSpec& spec) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y(i);
    bool ok = std::isfinite(v);
    switch (spec.family) {
      case Family::binomial: ok = ok && v >= 0.0 && v <= 1.0; break;
      case Family::poisson: ok = ok && v >= 0.0; break;
      case Family::gamma: ok = ok && v > 0.0; break;
      case Family::gaussian: break;
      case Family::ordinal:
        ok = ok && v == std::floor(v) && v >= 1.0 && v <= spec.categories;
        break;
    }
    if (!ok) {
      throw Error(ErrorCode::InvalidArgument, "glm_core",
                  "response value outside the support of the " + std::string(to_string(spec.family)) +
                      " family at row " + std::to_string(i));
    }
  }
}

Eigen::VectorXd initial_parameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const ModelSpec& spec, const Eigen::VectorXd* w) {
  const Eigen::Index p = X.cols();
  if (spec.is_ordinal()) {
    const int J = spec.categories;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(J);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      counts(static_cast<Eigen::Index>(y(i)) - 1) += w ? (*w)(i) : 1.0;
    }
    for (int j = 0; j < J; ++j) {
      if (!(counts(j) > 0.0)) {
        throw Error(ErrorCode::EmptyCategory, "glm_core",
                    "category " + std::to_string(j + 1) + " is not observed");
      }
    }
    Eigen::VectorXd params = Eigen::VectorXd::Zero(p + J - 1);
    const double total = counts.sum();
    double cum = 0.0;
    for (int j = 0; j < J - 1; ++j) {
      cum += counts(j);
      params(p + j) = norm_quantile(cum / total);
    }
    return params;
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (spec.family == Family::gamma) {
    // Zero is outside the inverse-link domain; start at the intercept-only
    // fit (or a positive constant predictor when there is no intercept).
    double sw = 0.0, swy = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double wi = w ? (*w)(i) : 1.0;
      sw += wi;
      swy += wi * y(i);
    }
    const double level = 1.0 / (swy / sw);
    bool placed = false;
    for (Eigen::Index k = 0; k < p && !placed; ++k) {
      if ((X.col(k).array() == 1.0).all()) {
        beta(k) = level;
        placed = true;
      }
    }
    if (!placed) {
      throw Error(ErrorCode::UnsupportedModel, "glm_core", "gamma models need an intercept");
    }
  }
  return beta;
}

void fill_fitted(FitResult& fit, const Eigen::MatrixXd& X) {
  fit.eta = X * fit.beta;
  const Eigen::Index n = fit.eta.size();
  fit.mu.resize(n);
  fit.var.resize(n);
  if (fit.is_ordinal()) {
    const int J = fit.categories;
    fit.probs.resize(n, J);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd F = ordinal_cumulative(fit.cutpoints, fit.eta(i));
      double m = 0.0, m2 = 0.0;
      for (int j = 0; j < J; ++j) {
        const double pj = F(j + 1) - F(j);
        fit.probs(i, j) = pj;
        m += (j + 1) * pj;
        m2 += (j + 1) * (j + 1) * pj;
      }
      fit.mu(i) = m;
      fit.var(i) = m2 - m * m;
    }
    return;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    fit.mu(i) = inverse_link(fit.link, fit.eta(i));
    fit.var(i) = variance_function(fit.family, fit.mu(i));
  }
}

}  // namespace

Eigen::VectorXd FitResult::parameters() const {
  Eigen::VectorXd out(beta.size() + cutpoints.size());
  out << beta, cutpoints;
  return out;
}

FitResult fitted_at(const Eigen::MatrixXd& X, const ModelSpec& spec, const Eigen::VectorXd& params) {
  spec.validate();
  const Eigen::Index p = X.cols();
  const Eigen::Index extra = spec.is_ordinal() ? spec.categories - 1 : 0;
  if (params.size() != p + extra) {
    throw Error(ErrorCode::DimensionMismatch, "glm_core", "parameter vector does not match the design");
  }
  FitResult fit;
  fit.family = spec.family;
  fit.link = spec.link;
  fit.categories = spec.is_ordinal() ? spec.categories : 0;
  fit.beta = params.head(p);
  fit.cutpoints = params.tail(extra);
  fill_fitted(fit, X);
  return fit;
}

double inverse_link(Link link, double eta) {
  switch (link) {
    case Link::probit: return norm_cdf(eta);
    case Link::logit: return logistic_cdf(eta);
    case Link::log: return std::exp(eta);
    case Link::inverse: return 1.0 / eta;
    case Link::identity: return eta;
  }
  return eta;
}

double variance_function(Family family, double mu) {
  switch (family) {
    case Family::binomial: return mu * (1.0 - mu);
    case Family::poisson: return mu;
    case Family::gamma: return mu * mu;
    case Family::gaussian: return 1.0;
    case Family::ordinal: break;
  }
  throw Error(ErrorCode::UnsupportedModel, "glm_core", "ordinal models have no scalar variance function");
}

Eigen::VectorXd ordinal_cumulative(const Eigen::VectorXd& cutpoints, double eta) {
  const Eigen::Index K = cutpoints.size();
  Eigen::VectorXd F(K + 2);
  F(0) = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) F(k + 1) = norm_cdf(cutpoints(k) - eta);
  F(K + 1) = 1.0;
  return F;
}

ObjectiveValue evaluate_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const ModelSpec& spec, const Eigen::VectorXd& params,
                                  const Eigen::VectorXd* weights) {
  Evaluation ev = evaluate(X, y, spec, params, weights, true);
  return {ev.ll, std::move(ev.score)};
}

FitResult fit_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                     const FitOptions& options, const Eigen::VectorXd* weights) {
  spec.validate();
  if (X.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "glm_core", "design rows and response length differ");
  }
  if (weights && weights->size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "glm_core", "weights length differs from response");
  }
  check_response(y, spec);
  const Eigen::Index p = X.cols();
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) {
      throw Error(ErrorCode::RankDeficient, "glm_core",
                  "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));
    }
  }

  const Eigen::Index n_params = p + (spec.is_ordinal() ? spec.categories - 1 : 0);
  Eigen::VectorXd params;
  if (options.start && options.start->size() == n_params) {
    params = *options.start;
    if (!std::isfinite(evaluate(X, y, spec, params, weights, false).ll)) {
      params = initial_parameters(X, y, spec, weights);
    }
  } else {
    params = initial_parameters(X, y, spec, weights);
  }

  FitResult fit;
  fit.family = spec.family;
  fit.link = spec.link;
  fit.categories = spec.is_ordinal() ? spec.categories : 0;

  Evaluation ev = evaluate(X, y, spec, params, weights, true);
  if (!std::isfinite(ev.ll)) {
    throw Error(ErrorCode::NonConvergence, "glm_core", "starting point outside the model domain");
  }
  const bool can_separate = spec.family == Family::binomial || spec.is_ordinal();
  int iter = 0;
  // Separated binomial/ordinal data: the likelihood keeps rising along the
  // Newton direction all the way past the coefficient bound.
  auto diverges = [&](const Eigen::VectorXd& direction) {
    const double len = direction.cwiseAbs().maxCoeff();
    if (!can_separate || !(len > 0.0)) return false;
    const Eigen::VectorXd far = params + (2.0 * options.separation_bound / len) * direction;
    const double ll = evaluate(X, y, spec, far, weights, false).ll;
    return std::isfinite(ll) && ll >= ev.ll - 1e-12 * (1.0 + std::abs(ev.ll));
  };
  auto separation = [&] {
    return Error(ErrorCode::SeparationDetected, "glm_core",
                 "likelihood increases without bound; coefficients exceed " +
                     std::to_string(options.separation_bound));
  };
  for (;; ++iter) {
    if (options.record_trace) fit.loglik_trace.push_back(ev.ll);
    const double grad = ev.score.cwiseAbs().maxCoeff();
    fit.grad_norm = grad;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.neg_hessian);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(ev.score);
    if (step.size() == 0 || !step.allFinite()) {
      // Flat directions (saturated fitted values): damp the system.
      const double ridge = 1e-8 * std::max(1.0, ev.neg_hessian.diagonal().cwiseAbs().maxCoeff());
      Eigen::MatrixXd damped = ev.neg_hessian;
      damped.diagonal().array() += ridge;
      step = damped.ldlt().solve(ev.score);
    }
    if (grad <= options.tolerance) {
      // A vanishing score with a large Newton step means fitted values are
      // saturating, not that a finite maximizer was reached.
      if (step.cwiseAbs().maxCoeff() > 1e-4 * (1.0 + params.cwiseAbs().maxCoeff()) && diverges(step)) {
        throw separation();
      }
      fit.converged = true;
      break;
    }
    if (iter >= options.max_iterations) {
      if (diverges(step)) throw separation();
      throw Error(ErrorCode::NonConvergence, "glm_core",
                  "iteration cap reached with max |score| = " + std::to_string(grad));
    }
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      candidate = params + t * step;
      const double ll = evaluate(X, y, spec, candidate, weights, false).ll;
      if (std::isfinite(ll) && ll >= ev.ll - 1e-12 * (1.0 + std::abs(ev.ll))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorCode::NonConvergence, "glm_core",
                  "step-halving failed with max |score| = " + std::to_string(grad));
    }
    params = candidate;
    if (can_separate && params.cwiseAbs().maxCoeff() > options.separation_bound) throw separation();
    ev = evaluate(X, y, spec, params, weights, true);
  }

  fit.iterations = iter;
  fit.loglik = ev.ll;
  fit.beta = params.head(p);
  if (spec.is_ordinal()) fit.cutpoints = params.tail(spec.categories - 1);
  fill_fitted(fit, X);
  return fit;
}

FitResult fit_qmle(const Dataset& data, const ModelSpec& spec, const FitOptions& options) {
  if (spec.is_ordinal()) {
    throw Error(ErrorCode::UnsupportedModel, "glm_core", "use fit_ordinal for ordinal models");
  }
  return fit_design(build_design(data, spec).X, data.y, spec, options);
}

FitResult fit_ordinal(const Dataset& data, const ModelSpec& spec, const FitOptions& options) {
  if (!spec.is_ordinal()) {
    throw Error(ErrorCode::UnsupportedModel, "glm_core", "fit_ordinal needs an ordinal model");
  }
  return fit_design(build_design(data, spec).X, data.y, spec, options);
}

FitResult fit_model(const Dataset& data, const ModelSpec& spec, const FitOptions& options) {
  return spec.is_ordinal() ? fit_ordinal(data, spec, options) : fit_qmle(data, spec, options);
}

Eigen::MatrixXd predict_mean(const FitResult& fit, const Eigen::MatrixXd& X_new) {
  if (X_new.cols() != fit.beta.size()) {
    throw Error(ErrorCode::DimensionMismatch, "glm_core",
                "X_new has " + std::to_string(X_new.cols()) + " columns, fit has " +
                    std::to_string(fit.beta.size()));
  }
  const Eigen::VectorXd eta = X_new * fit.beta;
  if (fit.is_ordinal()) {
    Eigen::MatrixXd out(eta.size(), fit.categories);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const Eigen::VectorXd F = ordinal_cumulative(fit.cutpoints, eta(i));
      for (int j = 0; j < fit.categories; ++j) out(i, j) = F(j + 1) - F(j);
    }
    return out;
  }
  Eigen::MatrixXd out(eta.size(), 1);
  for (Eigen::Index i = 0; i < eta.size(); ++i) out(i, 0) = inverse_link(fit.link, eta(i));
  return out;
}

}  // namespace lrb
