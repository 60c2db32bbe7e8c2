#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrb/bootstrap.hpp"
#include "lrb/model_selection.hpp"
#include "lrb/size_selection.hpp"

namespace lrb {

enum class ScenarioId {
  SC1_probit,
  SC1_logit,
  SC1_ordinal,
  SC2,
  SC3,
  SC4_exp,
  SC4_sine,
  SC5_slope,
  SC5_both,
  SC6,
  SC7,
  SC8,
  SC9,
  SC10,
  SC11,
  SC12,
  CaseI,
  CaseII,
  Example1,
};

std::string_view to_string(ScenarioId id);
/// Throws Error(UnknownScenario).
ScenarioId parse_scenario(std::string_view name);
std::vector<ScenarioId> all_scenarios();

/// A data-generating process together with the misspecified model fitted to it.
struct ScenarioDef {
  ScenarioId id = ScenarioId::SC1_probit;
  /// Sample size. For SC7 this counts binomial groups; each group expands
  /// into `m` binary rows.
  std::size_t n = 2000;
  std::map<std::string, double> params;  // defaults merged with overrides
  ModelSpec assumed;
  std::string coefficient;  // design column whose standard error is studied
  std::size_t default_l = 0;  // 0: chosen by the size selection
  std::vector<Candidate> candidates;  // model selection cases only
  std::vector<int> true_ranks;

  std::string name() const { return std::string(to_string(id)); }
  double param(const std::string& key) const { return params.at(key); }
  /// Stable key of the scenario, its size and its parameters.
  std::string key() const;
};

/// n = 0 keeps the scenario default sample size. Unknown override keys are rejected.
ScenarioDef make_scenario(ScenarioId id, std::size_t n = 0, const std::map<std::string, double>& overrides = {});
ScenarioDef make_scenario(std::string_view name, std::size_t n = 0,
                          const std::map<std::string, double>& overrides = {});

/// Covariates frozen for one (scenario, seed); only responses are redrawn.
struct FrozenDesign {
  Eigen::MatrixXd raw_X;
  std::vector<ColumnMeta> columns;
  Eigen::VectorXd mean;  // E(Y | x) under the true process
  ResponseKind response_kind = ResponseKind::real;
};

/// E(Y | x) of row `row` of a raw covariate matrix under the true process.
double true_mean(const ScenarioDef& scn, const Eigen::MatrixXd& raw_X, Eigen::Index row);

FrozenDesign draw_design(const ScenarioDef& scn, std::uint64_t seed);
Eigen::VectorXd draw_response(const ScenarioDef& scn, const FrozenDesign& design, Rng& rng);
/// Data set on the frozen design with the given response.
Dataset make_data(const FrozenDesign& design, Eigen::VectorXd y);
/// Replication `rep` of the scenario: design from (seed, design stream),
/// response from (seed, experiment stream, rep).
Dataset generate(const ScenarioDef& scn, std::uint64_t seed, std::size_t rep = 0);

struct PseudoTruth {
  std::string scenario;  // ScenarioDef::key()
  std::vector<std::string> names;
  Eigen::VectorXd beta_dagger;      // raw term scale
  Eigen::VectorXd psi;              // raw term scale, divisor reps
  Eigen::VectorXd beta_dagger_std;  // standardized design scale
  std::size_t reps = 0;
  std::size_t used = 0;
  std::size_t n_failed = 0;
  std::uint64_t seed = 0;

  std::size_t index_of(const std::string& name) const;
};

/// Monte Carlo pseudo-true parameter and standard error on the frozen design
/// of (scn, seed). Needs reps >= 100; more than 5% failed fits abort.
PseudoTruth pseudo_truth(const ScenarioDef& scn, std::size_t reps, std::uint64_t seed, unsigned threads = 0);
/// As pseudo_truth, reading and updating a JSON cache file when `cache_path`
/// is not empty. The file is replaced atomically.
PseudoTruth pseudo_truth_cached(const ScenarioDef& scn, std::size_t reps, std::uint64_t seed,
                                const std::string& cache_path, unsigned threads = 0);

nlohmann::json to_json(const PseudoTruth& truth);
PseudoTruth pseudo_truth_from_json(const nlohmann::json& j);

/// What one bootstrap run leaves for the coverage study.
struct ReplicationRecord {
  double estimate = 0.0;
  double se = 0.0;
  Eigen::VectorXd replicates;
};

struct LevelSummary {
  double level = 0.95;
  double coverage = 0.0;
  double width = 0.0;
  double width_se = 0.0;  // standard deviation of the widths over replications
};

struct MethodSummary {
  std::string method;
  std::size_t replications = 0;  // successful ones
  std::size_t failed = 0;
  double se_mean = 0.0;
  double se_ratio = 0.0;    // mean(se) / psi
  double mean_ratio = 0.0;  // mean(se / psi)
  std::vector<LevelSummary> normal;
  std::vector<LevelSummary> percentile;
};

MethodSummary summarize(const std::string& method, const std::vector<ReplicationRecord>& records, double truth,
                        double psi, const std::vector<double>& levels);

struct ExperimentOptions {
  std::size_t B = 500;
  std::size_t replications = 100;
  std::vector<double> levels{0.95, 0.90, 0.75};
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::size_t pt_reps = 10000;
  std::string cache_path;
  /// Coefficient to study; empty uses the scenario default.
  std::string coefficient;
  /// Pseudo truth to use instead of computing one.
  std::optional<PseudoTruth> truth;
  /// Size selection settings when a method asks for l = 0 and the scenario has
  /// no default size.
  SizeSelectionOptions size_selection;
};

struct ExperimentReport {
  std::string scenario;
  std::size_t n = 0;
  std::size_t B = 0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::string coefficient;
  double pseudo_true = 0.0;
  double psi = 0.0;
  std::size_t pt_reps = 0;
  std::vector<MethodSummary> methods;
  std::vector<std::size_t> l_used;  // per method, 0 when unused
};

/// Coverage study: every replication redraws y on the frozen design, runs
/// each method and records CI hits of the pseudo-true value. A method with
/// l = 0 takes the scenario's size, or the size selection choice on replication 0.
ExperimentReport run_experiment(const ScenarioDef& scn, const std::vector<BootstrapMethod>& methods,
                                const ExperimentOptions& options);

nlohmann::json to_json(const ExperimentReport& report);
/// Long form of the coverage table: one row per method, interval and level.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
/// One row per (sweep value, method) with the standard error ratios.
void write_ratios_csv(std::ostream& out, const std::string& param,
                      const std::vector<std::pair<double, ExperimentReport>>& sweep);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// KS distance between one set of LRB-resampled surrogate residuals and
/// surrogate residuals of a fresh response evaluated at the pseudo-true fit.
double residual_ks_distance(const ScenarioDef& scn, const PseudoTruth& truth, std::size_t l, std::uint64_t seed,
                            std::size_t rep);

/// Model selection study on a Case scenario: per replication ranks by L and
/// Gamma plus their CR1/CR2 against the scenario's true ranks.
struct SelectionStudy {
  std::string method;
  std::vector<std::vector<int>> rank_L, rank_Gamma;
  std::vector<double> cr1_L, cr2_L, cr1_Gamma, cr2_Gamma;
};
SelectionStudy run_selection_study(const ScenarioDef& scn, const BootstrapMethod& method, std::size_t B,
                                   std::size_t replications, std::uint64_t seed, unsigned threads = 0);

}  // namespace lrb
