#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrb/dataset.hpp"
#include "lrb/model.hpp"

namespace lrb {

/// Header plus raw string cells. Quoted fields may hold commas, doubled
/// quotes and line breaks.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_of_row;  // 1-based source line of each row

  std::optional<std::size_t> find(std::string_view name) const;
};

/// Throws Error(ParseError) with the line and column of malformed input.
CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);

struct PredictorColumn {
  std::string name;
  /// Unset: continuous when every kept cell parses as a number.
  std::optional<ColumnKind> kind;
};

struct IngestConfig {
  std::string response;
  /// Empty: every column other than the response.
  std::vector<PredictorColumn> predictors;
  bool standardize = true;
  ResponseKind response_kind = ResponseKind::real;
  std::vector<std::string> missing_tokens{"", "NA", "NaN", "nan", "?"};
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::vector<std::string> columns;  // design columns in order
};

/// Parses a full decimal float; no trailing characters.
std::optional<double> parse_number(std::string_view text);

/// Builds a data set from a parsed table: listwise deletion of rows with a
/// missing cell in a used column, standardization of continuous columns,
/// and treatment coding of categorical columns (sorted levels, the first is
/// the reference; dummies are named `column[level]`).
Dataset ingest_table(const CsvTable& table, const IngestConfig& config, IngestReport* report = nullptr);
Dataset ingest(const std::string& path, const IngestConfig& config, IngestReport* report = nullptr);

/// Writes the response and source columns on the raw scale, categorical
/// columns as their level tokens, so ingest reproduces the data set.
void emit_csv(std::ostream& out, const Dataset& data);

/// Rewrites model terms so they name design columns: a categorical source
/// column becomes its dummy columns. Throws MissingColumn for unknown names
/// and InvalidArgument for powers or products of multi-level factors.
std::vector<Term> resolve_terms(const Dataset& data, const std::vector<Term>& terms);

}  // namespace lrb
