#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "lrb/dataset.hpp"
#include "lrb/model.hpp"

namespace lrb {

struct FitOptions {
  /// Convergence threshold on the max-abs score component.
  double tolerance = 1e-8;
  int max_iterations = 100;
  int max_halvings = 30;
  /// Binomial/ordinal fits abort with SeparationDetected past this |coefficient|.
  double separation_bound = 1e4;
  /// Starting parameters (coefficients, then cutpoints). Defaults to zero
  /// coefficients, with cutpoints from the marginal category proportions.
  std::optional<Eigen::VectorXd> start;
  bool record_trace = false;
};

struct FitResult {
  Family family = Family::gaussian;
  Link link = Link::identity;
  int categories = 0;

  Eigen::VectorXd beta;       // design coefficients
  Eigen::VectorXd cutpoints;  // ordinal only, strictly increasing
  Eigen::VectorXd eta;        // linear predictor x'beta
  Eigen::VectorXd mu;         // fitted means (ordinal: expected category)
  Eigen::VectorXd var;        // V(mu)
  Eigen::MatrixXd probs;      // ordinal only: n x J category probabilities

  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  std::vector<double> loglik_trace;

  bool is_ordinal() const { return family == Family::ordinal; }
  /// Coefficients followed by cutpoints.
  Eigen::VectorXd parameters() const;
};

/// QMLE of a non-ordinal GLM by Newton iterations on the quasi-score with
/// step-halving. Responses only need to lie in the family's support, so
/// continuous pseudo-responses from bootstrap recreation are accepted.
FitResult fit_qmle(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {});

/// Cumulative-link probit model P(Y <= j) = Phi(alpha_j - x'beta).
FitResult fit_ordinal(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {});

/// Dispatches to fit_qmle or fit_ordinal.
FitResult fit_model(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {});

/// Fit against a prebuilt design matrix. `weights`, when given, multiply the
/// per-observation log-likelihood contributions.
FitResult fit_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                     const FitOptions& options = {}, const Eigen::VectorXd* weights = nullptr);

struct ObjectiveValue {
  double loglik = 0.0;  // -inf outside the parameter domain
  Eigen::VectorXd score;
};

/// Quasi-log-likelihood and score at `params` (coefficients, then cutpoints).
ObjectiveValue evaluate_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const ModelSpec& spec, const Eigen::VectorXd& params,
                                  const Eigen::VectorXd* weights = nullptr);

/// Fitted quantities of a model evaluated at given parameters (coefficients,
/// then cutpoints) without any fitting, e.g. at a pseudo-true value.
FitResult fitted_at(const Eigen::MatrixXd& X, const ModelSpec& spec, const Eigen::VectorXd& params);

double inverse_link(Link link, double eta);
double variance_function(Family family, double mu);

/// h(x'beta) per row; ordinal fits return the n x J category probabilities.
Eigen::MatrixXd predict_mean(const FitResult& fit, const Eigen::MatrixXd& X_new);

/// Cumulative probabilities F(0..J) of an ordinal model at one linear predictor
/// (F(0) = 0, F(J) = 1).
Eigen::VectorXd ordinal_cumulative(const Eigen::VectorXd& cutpoints, double eta);

}  // namespace lrb
