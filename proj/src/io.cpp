#include "lrb/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "lrb/errors.hpp"

namespace lrb {

namespace {

[[noreturn]] void parse_error(const std::string& source, std::size_t line, std::size_t column,
                              const std::string& what) {
  throw Error(ErrorCode::ParseError, "cli",
              source + ": line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos || s != trim(s) || s.empty();
}

std::string quoted(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, r.ptr);
}

}  // namespace

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  return std::nullopt;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false, was_quoted = false, any = false;
  std::size_t line = 1, record_line = 1, column = 1;

  auto end_field = [&] {
    record.push_back(was_quoted ? field : trim(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty() && !any;
    if (!blank) {
      if (table.header.empty()) {
        table.header = record;
        std::set<std::string> seen;
        for (std::size_t j = 0; j < record.size(); ++j) {
          if (record[j].empty()) parse_error(source, record_line, j + 1, "empty column name");
          if (!seen.insert(record[j]).second)
            parse_error(source, record_line, j + 1, "duplicate column '" + record[j] + "'");
        }
      } else {
        if (record.size() != table.header.size())
          parse_error(source, record_line, std::min(record.size(), table.header.size()) + 1,
                      "expected " + std::to_string(table.header.size()) + " fields, found " +
                          std::to_string(record.size()));
        table.rows.push_back(record);
        table.line_of_row.push_back(record_line);
      }
    }
    record.clear();
    any = false;
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (!trim(field).empty() || was_quoted)
        parse_error(source, line, record.size() + 1, "unexpected quote inside a field");
      field.clear();
      in_quotes = was_quoted = any = true;
    } else if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\n') {
      end_record();
      record_line = ++line;
    } else if (was_quoted && c != ' ' && c != '\t' && c != '\r') {
      parse_error(source, line, record.size() + 1, "text after closing quote");
    } else {
      field += c;
      if (c != '\r') any = true;
    }
    column = record.size() + 1;
  }
  if (in_quotes) parse_error(source, record_line, column, "unterminated quoted field");
  if (any || !record.empty() || !field.empty()) end_record();
  if (table.header.empty()) parse_error(source, 1, 1, "no header row");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cli", "cannot open '" + path + "'");
  return read_csv(in, path);
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

Dataset ingest_table(const CsvTable& table, const IngestConfig& config, IngestReport* report) {
  if (config.response.empty()) throw Error(ErrorCode::InvalidArgument, "cli", "no response column given");
  const auto ycol = table.find(config.response);
  if (!ycol) throw Error(ErrorCode::MissingColumn, "cli", "response column '" + config.response + "' not in header");

  std::vector<PredictorColumn> preds = config.predictors;
  if (preds.empty()) {
    for (const auto& h : table.header)
      if (h != config.response) preds.push_back({h, std::nullopt});
  }
  std::vector<std::size_t> src;
  for (const auto& p : preds) {
    const auto j = table.find(p.name);
    if (!j) throw Error(ErrorCode::MissingColumn, "cli", "predictor column '" + p.name + "' not in header");
    if (*j == *ycol) throw Error(ErrorCode::InvalidArgument, "cli", "'" + p.name + "' is the response");
    src.push_back(*j);
  }

  auto missing = [&](const std::string& cell) {
    return std::find(config.missing_tokens.begin(), config.missing_tokens.end(), cell) != config.missing_tokens.end();
  };
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool ok = !missing(row[*ycol]);
    for (auto j : src) ok = ok && !missing(row[j]);
    if (ok) kept.push_back(r);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::AllRowsDropped, "cli",
                "all " + std::to_string(table.rows.size()) + " rows have a missing cell");
  }

  const auto n = static_cast<Eigen::Index>(kept.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = kept[static_cast<std::size_t>(i)];
    const auto v = parse_number(table.rows[r][*ycol]);
    if (!v) {
      parse_error("response", table.line_of_row[r], *ycol + 1,
                  "'" + table.rows[r][*ycol] + "' is not a number");
    }
    y(i) = *v;
  }

  std::vector<ColumnMeta> meta;
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto j = src[k];
    ColumnKind kind = ColumnKind::continuous;
    if (preds[k].kind) {
      kind = *preds[k].kind;
    } else {
      for (auto r : kept)
        if (!parse_number(table.rows[r][j])) kind = ColumnKind::categorical;
    }
    if (kind == ColumnKind::continuous) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = kept[static_cast<std::size_t>(i)];
        const auto x = parse_number(table.rows[r][j]);
        if (!x) {
          parse_error("column '" + preds[k].name + "'", table.line_of_row[r], j + 1,
                      "'" + table.rows[r][j] + "' is not a number");
        }
        v(i) = *x;
      }
      ColumnMeta m;
      m.name = preds[k].name;
      meta.push_back(m);
      cols.push_back(std::move(v));
      continue;
    }
    std::set<std::string> levels;
    for (auto r : kept) levels.insert(table.rows[r][j]);
    if (levels.size() < 2) {
      throw Error(ErrorCode::EmptyCategory, "cli", "categorical column '" + preds[k].name + "' has one level");
    }
    const std::string reference = *levels.begin();
    for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = table.rows[kept[static_cast<std::size_t>(i)]][j] == *it ? 1.0 : 0.0;
      ColumnMeta m;
      m.name = preds[k].name + "[" + *it + "]";
      m.kind = ColumnKind::categorical;
      m.source = preds[k].name;
      m.level = *it;
      m.reference = reference;
      meta.push_back(m);
      cols.push_back(std::move(v));
    }
  }

  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) X.col(static_cast<Eigen::Index>(c)) = cols[c];
  if (report) {
    report->rows_read = table.rows.size();
    report->rows_dropped = table.rows.size() - kept.size();
    report->columns.clear();
    for (const auto& m : meta) report->columns.push_back(m.name);
  }
  // Assign the response kind before validation sees it.
  Dataset d = make_dataset(std::move(y), X, std::move(meta), config.standardize);
  d.response_name = config.response;
  d.response_kind = config.response_kind;
  validate_dataset(d);
  return d;
}

Dataset ingest(const std::string& path, const IngestConfig& config, IngestReport* report) {
  return ingest_table(read_csv_file(path), config, report);
}

void emit_csv(std::ostream& out, const Dataset& data) {
  // Source columns in first-appearance order; dummies collapse to one column.
  struct Source {
    std::string name;
    std::vector<std::size_t> cols;
  };
  std::vector<Source> sources;
  for (std::size_t j = 0; j < data.p(); ++j) {
    const auto& m = data.columns[j];
    const std::string name = m.kind == ColumnKind::categorical && !m.source.empty() ? m.source : m.name;
    auto it = std::find_if(sources.begin(), sources.end(), [&](const Source& s) { return s.name == name; });
    if (it == sources.end()) {
      sources.push_back({name, {j}});
    } else {
      it->cols.push_back(j);
    }
  }
  out << quoted(data.response_name);
  for (const auto& s : sources) out << ',' << quoted(s.name);
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << format_number(data.y(static_cast<Eigen::Index>(i)));
    for (const auto& s : sources) {
      out << ',';
      const auto& m0 = data.columns[s.cols[0]];
      if (m0.kind == ColumnKind::continuous) {
        out << format_number(data.raw_value(i, s.cols[0]));
      } else if (m0.source.empty()) {
        out << format_number(data.raw_value(i, s.cols[0]));  // numeric 0/1 indicator
      } else {
        std::string token = m0.reference;
        for (auto c : s.cols)
          if (data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) != 0.0) token = data.columns[c].level;
        out << quoted(token);
      }
    }
    out << '\n';
  }
}

std::vector<Term> resolve_terms(const Dataset& data, const std::vector<Term>& terms) {
  std::map<std::string, std::vector<std::string>> dummies;
  for (const auto& m : data.columns)
    if (!m.source.empty()) dummies[m.source].push_back(m.name);

  auto resolve_one = [&](const std::string& name, bool single_required) -> std::vector<std::string> {
    if (data.find(name)) return {name};
    const auto it = dummies.find(name);
    if (it == dummies.end()) throw Error(ErrorCode::MissingColumn, "cli", "no column named '" + name + "'");
    if (single_required && it->second.size() != 1) {
      throw Error(ErrorCode::InvalidArgument, "cli",
                  "factor '" + name + "' has several levels; name a dummy column like '" + it->second[0] + "'");
    }
    return it->second;
  };

  std::vector<Term> out;
  for (const auto& t : terms) {
    if (t.kind == Term::Kind::raw) {
      for (auto& c : resolve_one(t.columns[0], false)) out.push_back(Term::raw(c));
      continue;
    }
    Term r = t;
    for (auto& c : r.columns) c = resolve_one(c, true)[0];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lrb
