#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrb/dataset.hpp"
#include "lrb/distributions.hpp"

namespace lrb {

enum class Family { binomial, poisson, gamma, gaussian, ordinal };
enum class Link { probit, logit, log, inverse, identity };

std::string_view to_string(Family family);
std::string_view to_string(Link link);
Family parse_family(std::string_view text);
Link parse_link(std::string_view text);
/// Default link of a family: probit for binary/ordinal data, canonical otherwise.
Link default_link(Family family);

/// One predictor column of the design, written in terms of data set columns.
struct Term {
  enum class Kind { raw, power, interaction, exp };

  Kind kind = Kind::raw;
  std::vector<std::string> columns;
  int exponent = 1;

  static Term raw(std::string column) { return {Kind::raw, {std::move(column)}, 1}; }
  static Term power(std::string column, int k) { return {Kind::power, {std::move(column)}, k}; }
  static Term interaction(std::string a, std::string b) {
    return {Kind::interaction, {std::move(a), std::move(b)}, 1};
  }
  static Term exp(std::string column) { return {Kind::exp, {std::move(column)}, 1}; }

  /// Parses "x", "x^2", "x1*x2" or "exp(x)".
  static Term parse(std::string_view text);
  std::string label() const;
};

/// One candidate GLM: family, link and the ordered predictor terms.
/// Ordinal models carry no intercept; it is absorbed into the cutpoints.
struct ModelSpec {
  Family family = Family::binomial;
  Link link = Link::probit;
  bool include_intercept = true;
  int categories = 0;  // J for ordinal models
  std::vector<Term> terms;

  bool is_ordinal() const { return family == Family::ordinal; }
  /// Throws Error(UnsupportedModel) for unsupported family/link pairs.
  void validate() const;
  Latent latent() const { return link == Link::logit ? Latent::logistic : Latent::normal; }
  std::string describe() const;
};

ModelSpec make_spec(Family family, Link link, std::vector<Term> terms, bool intercept = true);
ModelSpec make_ordinal_spec(int categories, std::vector<Term> terms);

/// Design matrix built from a model's terms. Continuous-valued columns are
/// standardized when the data set is; `center`/`scale` map each column back
/// to the raw scale of its term.
struct Design {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  bool intercept = false;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  Design subset(std::span<const std::size_t> rows) const;
};

Design build_design(const Dataset& data, const ModelSpec& spec);

/// Coefficients on the raw term scale. Cutpoints of ordinal models are
/// shifted by the same centering.
struct RawCoefficients {
  Eigen::VectorXd beta;
  Eigen::VectorXd cutpoints;
};
RawCoefficients back_transform(const Design& design, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& cutpoints);

}  // namespace lrb
