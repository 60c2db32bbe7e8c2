#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrb/bootstrap.hpp"

namespace lrb {

enum class Criterion { L, Gamma };
Criterion parse_criterion(std::string_view text);

struct Candidate {
  std::string label;
  ModelSpec spec;
};

/// The three sums of the prediction-error estimator for one replicate:
/// term1 uses (y, beta_hat), term2 (y, beta*), term3 (y*, beta*) with the
/// variance at beta*; the in-sample loss is term2 alone.
struct CriterionTerms {
  double term1 = 0.0;
  double term2 = 0.0;
  double term3 = 0.0;
};

CriterionTerms criterion_terms(const Prepared& prepared, const Eigen::VectorXd& beta_star, const Replicate& rep);

struct CriterionEstimate {
  double L = 0.0;
  double Gamma = 0.0;  // NaN when the method does not recreate responses
  double optimism = 0.0;  // mean of term2 - term3
  std::size_t used = 0;
  std::size_t n_failed = 0;
};

/// Bootstrap estimates of the in-sample loss and (when the method recreates
/// responses) the out-of-sample prediction error from one pass of replicates.
CriterionEstimate estimate_criteria(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                                    const BootstrapOptions& options);
double in_sample_loss(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                      const BootstrapOptions& options);
/// Throws Error(MethodCannotRecreate) for pairwise, wild and multiplier.
double prediction_error(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                        const BootstrapOptions& options);

struct SelectionReport {
  std::vector<std::string> labels;
  std::vector<std::string> models;
  std::vector<double> L, Gamma;
  std::vector<int> rank_L, rank_Gamma;  // empty when not computed
  std::string chosen_L, chosen_Gamma;
  Criterion criterion = Criterion::L;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t B = 0;
};

/// Ranks candidates by the requested criterion; the other one is reported
/// too whenever the method allows it. Each model draws from a substream keyed
/// by its model description, so results do not depend on candidate order.
SelectionReport rank_models(const Dataset& data, const std::vector<Candidate>& candidates, Criterion criterion,
                            const BootstrapMethod& method, const BootstrapOptions& options);

/// Ranks 1..m by ascending value, ties broken by label order.
std::vector<int> rank_values(const std::vector<double>& values, const std::vector<std::string>& labels);

/// Share of models whose rank is exactly right.
double cr1(const std::vector<int>& true_ranks, const std::vector<int>& est_ranks);
/// Share of ordered pairs whose estimated order agrees with the true order.
double cr2(const std::vector<int>& true_ranks, const std::vector<int>& est_ranks);

nlohmann::json to_json(const SelectionReport& report);
void write_table(std::ostream& out, const SelectionReport& report);

}  // namespace lrb
