#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lrb {

enum class ColumnKind { continuous, categorical };
enum class ResponseKind { real, ordinal };

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  // Standardization constants: stored value = (raw - center) / scale.
  double center = 0.0;
  double scale = 1.0;
  // For dummy columns built from a categorical source column.
  std::string source;
  std::string level;
  std::string reference;  // level coded by all dummies of `source` being zero
};

/// Fixed-design data set: response vector plus an n x p covariate matrix.
/// Continuous columns are standardized on construction unless asked not to;
/// the constants are kept so raw values and coefficients can be recovered.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<ColumnMeta> columns;
  bool standardized = false;
  std::string response_name = "y";
  ResponseKind response_kind = ResponseKind::real;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws Error(MissingColumn) naming the column.
  std::size_t column_index(std::string_view name) const;
  std::vector<std::size_t> continuous_columns() const;
  std::vector<std::size_t> categorical_columns() const;

  double raw_value(std::size_t row, std::size_t col) const {
    return X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) * columns[col].scale +
           columns[col].center;
  }
  Eigen::VectorXd raw_column(std::size_t col) const;

  /// Rows in the given order; standardization constants are carried over
  /// unchanged so the subset shares the parent's scale.
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset with_response(Eigen::VectorXd new_y) const;
};

/// Builds a data set from raw values, validating shapes and finiteness.
Dataset make_dataset(Eigen::VectorXd y, const Eigen::MatrixXd& raw_X, std::vector<ColumnMeta> columns,
                     bool standardize = true);

/// Checks the data set invariants; throws Error(InvalidArgument) on failure.
void validate_dataset(const Dataset& data);

}  // namespace lrb
