#include "lrb/dataset.hpp"

#include <cmath>

#include "lrb/errors.hpp"

namespace lrb {

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].name == name) return j;
  }
  return std::nullopt;
}

std::size_t Dataset::column_index(std::string_view name) const {
  if (auto j = find(name)) return *j;
  throw Error(ErrorCode::MissingColumn, "dataset", "no column named '" + std::string(name) + "'");
}

std::vector<std::size_t> Dataset::continuous_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].kind == ColumnKind::continuous) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> Dataset::categorical_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].kind == ColumnKind::categorical) out.push_back(j);
  }
  return out;
}

Eigen::VectorXd Dataset::raw_column(std::size_t col) const {
  const auto j = static_cast<Eigen::Index>(col);
  return (X.col(j).array() * columns[col].scale + columns[col].center).matrix();
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.columns = columns;
  out.standardized = standardized;
  out.response_name = response_name;
  out.response_kind = response_kind;
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(rows[i]);
    out.y(static_cast<Eigen::Index>(i)) = y(src);
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(src);
  }
  return out;
}

Dataset Dataset::with_response(Eigen::VectorXd new_y) const {
  if (new_y.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset", "response length does not match rows");
  }
  Dataset out = *this;
  out.y = std::move(new_y);
  return out;
}

Dataset make_dataset(Eigen::VectorXd y, const Eigen::MatrixXd& raw_X, std::vector<ColumnMeta> columns,
                     bool standardize) {
  if (raw_X.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset", "X rows and y length differ");
  }
  if (static_cast<std::size_t>(raw_X.cols()) != columns.size()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset", "column metadata does not match X");
  }
  Dataset data;
  data.y = std::move(y);
  data.X = raw_X;
  data.columns = std::move(columns);
  if (standardize) {
    const auto n = static_cast<double>(raw_X.rows());
    for (std::size_t j = 0; j < data.columns.size(); ++j) {
      auto& meta = data.columns[j];
      if (meta.kind != ColumnKind::continuous) continue;
      auto col = data.X.col(static_cast<Eigen::Index>(j));
      const double mean = col.mean();
      const double ss = (col.array() - mean).square().sum();
      const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      if (!(sd > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "dataset",
                    "continuous column '" + meta.name + "' is constant");
      }
      meta.center = mean;
      meta.scale = sd;
      col = ((col.array() - mean) / sd).matrix();
    }
    data.standardized = true;
  }
  validate_dataset(data);
  return data;
}

void validate_dataset(const Dataset& data) {
  if (!data.X.allFinite() || !data.y.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "dataset", "non-finite entries in data");
  }
  if (data.n() < data.p() + 1) {
    throw Error(ErrorCode::InvalidArgument, "dataset", "need n >= p + 1");
  }
  if (data.response_kind == ResponseKind::ordinal) {
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
      if (data.y(i) < 1 || data.y(i) != std::floor(data.y(i))) {
        throw Error(ErrorCode::InvalidArgument, "dataset", "ordinal response must be coded 1..J");
      }
    }
  }
}

}  // namespace lrb
