#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrb/dataset.hpp"
#include "lrb/glm.hpp"
#include "lrb/model.hpp"
#include "lrb/neighborhood.hpp"
#include "lrb/random.hpp"
#include "lrb/residuals.hpp"

namespace lrb {

enum class MethodKind { lrb, local_response, classical_residual, parametric, pairwise, wild, multiplier };

std::string_view to_string(MethodKind kind);
MethodKind parse_method_kind(std::string_view text);

struct BootstrapMethod {
  MethodKind kind = MethodKind::lrb;
  ResidualKind residual = ResidualKind::surrogate;  // lrb and classical_residual
  std::size_t l = 10;                               // lrb and local_response
  Metric metric = Metric::euclidean;

  static BootstrapMethod lrb(ResidualKind r, std::size_t l) { return {MethodKind::lrb, r, l}; }
  static BootstrapMethod local_response(std::size_t l) { return {MethodKind::local_response, ResidualKind::raw, l}; }
  static BootstrapMethod classical(ResidualKind r) { return {MethodKind::classical_residual, r, 0}; }
  static BootstrapMethod of(MethodKind k) { return {k, ResidualKind::raw, 0}; }

  bool uses_residuals() const { return kind == MethodKind::lrb || kind == MethodKind::classical_residual; }
  bool uses_neighborhoods() const { return kind == MethodKind::lrb || kind == MethodKind::local_response; }
  /// Whether the method produces a recreated response y* at fixed x.
  bool recreates_response() const {
    return kind != MethodKind::pairwise && kind != MethodKind::wild && kind != MethodKind::multiplier;
  }
  std::string label() const;
};

/// Throws IncompatibleResidual / UnsupportedModel when the method cannot be
/// applied to the model (e.g. Pearson residuals on an ordinal model, wild
/// bootstrap on ordinal data).
void check_method(const ModelSpec& spec, const BootstrapMethod& method);

struct BootstrapOptions {
  std::size_t B = 500;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: default_threads()
  FitOptions fit;
  /// Start each refit from the original estimate (same maximizer, fewer steps).
  bool warm_start = true;
  double max_failure_fraction = 0.2;
};

/// Everything the bootstrap computes before the replicate loop.
struct Prepared {
  ModelSpec spec;
  Design design;
  Eigen::VectorXd y;
  FitResult fit;
  ResidualSet residuals;          // empty unless the method resamples residuals
  NeighborhoodMap neighborhoods;  // pools used by lrb/local_response/classical
  double sigma = 0.0;             // gaussian parametric: sqrt(RSS / (n - p))
  double gamma_shape = 0.0;       // gamma parametric: 1 / Pearson dispersion
};

/// Fits the model and computes residuals and neighborhoods. `neighborhoods`,
/// when given, is reused instead of rebuilding (fixed designs).
Prepared prepare(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                 const BootstrapOptions& options, const NeighborhoodMap* neighborhoods = nullptr);

/// One bootstrap sample. Empty `rows` means the original design rows; empty
/// `weights` means unit weights.
struct Replicate {
  Eigen::VectorXd y;
  std::vector<std::size_t> rows;
  Eigen::VectorXd weights;
};

/// Draws bootstrap samples for one method; shared by the SE bootstrap and
/// the model selection criteria.
class Resampler {
 public:
  Resampler(const Prepared& prepared, BootstrapMethod method);
  Replicate draw(Rng& rng) const;
  /// Refit of one replicate, optionally warm-started.
  FitResult refit(const Replicate& rep, const FitOptions& options) const;
  const Prepared& prepared() const { return prepared_; }

 private:
  const Prepared& prepared_;
  BootstrapMethod method_;
};

struct Provenance {
  std::string method;
  std::string residual;  // empty for response/row/weight based methods
  std::size_t l = 0;
  std::string metric;
  std::uint64_t seed = 0;
  std::size_t B = 0;
  double alpha = 0.05;
  std::string model;
};

struct BootstrapOutcome {
  std::vector<std::string> names;  // coefficients, then cutpoints
  Eigen::VectorXd estimate;
  Eigen::MatrixXd replicates;             // successful replicates only, in index order
  std::vector<std::size_t> replicate_ids;  // b of each row
  Eigen::VectorXd se_hat;
  Eigen::MatrixXd ci_normal;      // P x 2
  Eigen::MatrixXd ci_percentile;  // P x 2
  Eigen::VectorXd p_two_sided;    // H0: coefficient = 0
  std::size_t n_failed = 0;
  std::vector<std::string> failures;  // first few failure messages
  std::vector<std::string> warnings;
  Provenance provenance;
};

BootstrapOutcome run(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                     const BootstrapOptions& options);
BootstrapOutcome run_prepared(const Prepared& prepared, const BootstrapMethod& method,
                              const BootstrapOptions& options);

/// Recomputes every statistic of `outcome` on the raw term scale.
BootstrapOutcome back_transformed(const BootstrapOutcome& outcome, const Design& design);

/// Divisor-B standard deviation of each column. Throws TooFewReplicates.
Eigen::VectorXd se_estimate(const Eigen::MatrixXd& replicates);
/// Type-7 quantile of a sample (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double prob);
/// Per-column (alpha/2, 1 - alpha/2) type-7 quantiles.
Eigen::MatrixXd ci_percentile(const Eigen::MatrixXd& replicates, double alpha);
Eigen::MatrixXd ci_normal(const Eigen::VectorXd& estimate, const Eigen::VectorXd& se, double alpha);

enum class Alternative { two_sided, less, greater };
Alternative parse_alternative(std::string_view text);
/// Percentile-duality p-value: greater = F*(null), less = 1 - F*(null-),
/// two-sided = min(1, 2 min(greater, less)).
double p_value(const Eigen::VectorXd& replicates, double null_value, Alternative alternative);

nlohmann::json to_json(const BootstrapOutcome& outcome, bool include_replicates = false);
void write_summary_csv(std::ostream& out, const BootstrapOutcome& outcome);

}  // namespace lrb
