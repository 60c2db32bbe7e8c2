#include "lrb/model.hpp"

#include <cmath>
#include <sstream>

#include "lrb/errors.hpp"

namespace lrb {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::binomial: return "binomial";
    case Family::poisson: return "poisson";
    case Family::gamma: return "gamma";
    case Family::gaussian: return "gaussian";
    case Family::ordinal: return "ordinal";
  }
  return "?";
}

std::string_view to_string(Link link) {
  switch (link) {
    case Link::probit: return "probit";
    case Link::logit: return "logit";
    case Link::log: return "log";
    case Link::inverse: return "inverse";
    case Link::identity: return "identity";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  for (auto f : {Family::binomial, Family::poisson, Family::gamma, Family::gaussian, Family::ordinal}) {
    if (to_string(f) == text) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "glm_core", "unknown family '" + std::string(text) + "'");
}

Link parse_link(std::string_view text) {
  for (auto l : {Link::probit, Link::logit, Link::log, Link::inverse, Link::identity}) {
    if (to_string(l) == text) return l;
  }
  throw Error(ErrorCode::InvalidArgument, "glm_core", "unknown link '" + std::string(text) + "'");
}

Link default_link(Family family) {
  switch (family) {
    case Family::binomial:
    case Family::ordinal: return Link::probit;
    case Family::poisson: return Link::log;
    case Family::gamma: return Link::inverse;
    case Family::gaussian: return Link::identity;
  }
  return Link::identity;
}

Term Term::parse(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) throw Error(ErrorCode::ParseError, "glm_core", "empty term");
  if (t.rfind("exp(", 0) == 0 && t.back() == ')') {
    return Term::exp(trim(std::string_view(t).substr(4, t.size() - 5)));
  }
  if (const auto star = t.find('*'); star != std::string::npos) {
    auto a = trim(std::string_view(t).substr(0, star));
    auto b = trim(std::string_view(t).substr(star + 1));
    if (a.empty() || b.empty()) throw Error(ErrorCode::ParseError, "glm_core", "bad interaction '" + t + "'");
    return Term::interaction(std::move(a), std::move(b));
  }
  if (const auto caret = t.find('^'); caret != std::string::npos) {
    auto a = trim(std::string_view(t).substr(0, caret));
    const auto k = trim(std::string_view(t).substr(caret + 1));
    int power = 0;
    try {
      std::size_t used = 0;
      power = std::stoi(k, &used);
      if (used != k.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "glm_core", "bad power in term '" + t + "'");
    }
    if (power < 1) throw Error(ErrorCode::ParseError, "glm_core", "power must be >= 1 in '" + t + "'");
    return power == 1 ? Term::raw(std::move(a)) : Term::power(std::move(a), power);
  }
  return Term::raw(t);
}

std::string Term::label() const {
  switch (kind) {
    case Kind::raw: return columns.at(0);
    case Kind::power: return columns.at(0) + "^" + std::to_string(exponent);
    case Kind::interaction: return columns.at(0) + "*" + columns.at(1);
    case Kind::exp: return "exp(" + columns.at(0) + ")";
  }
  return "?";
}

void ModelSpec::validate() const {
  bool ok = false;
  switch (family) {
    case Family::binomial: ok = link == Link::probit || link == Link::logit; break;
    case Family::poisson: ok = link == Link::log; break;
    case Family::gamma: ok = link == Link::inverse; break;
    case Family::gaussian: ok = link == Link::identity; break;
    case Family::ordinal: ok = link == Link::probit && categories >= 3 && !include_intercept; break;
  }
  if (!ok) {
    throw Error(ErrorCode::UnsupportedModel, "glm_core",
                "unsupported model " + describe());
  }
  if (!include_intercept && terms.empty() && !is_ordinal()) {
    throw Error(ErrorCode::UnsupportedModel, "glm_core", "model has no predictors");
  }
}

std::string ModelSpec::describe() const {
  std::ostringstream os;
  os << to_string(family);
  if (is_ordinal()) os << "(" << categories << ")";
  os << "/" << to_string(link) << ":";
  bool first = true;
  if (include_intercept) {
    os << "1";
    first = false;
  }
  for (const auto& t : terms) {
    os << (first ? "" : "+") << t.label();
    first = false;
  }
  return os.str();
}

ModelSpec make_spec(Family family, Link link, std::vector<Term> terms, bool intercept) {
  ModelSpec spec;
  spec.family = family;
  spec.link = link;
  spec.include_intercept = intercept;
  spec.terms = std::move(terms);
  spec.validate();
  return spec;
}

ModelSpec make_ordinal_spec(int categories, std::vector<Term> terms) {
  ModelSpec spec;
  spec.family = Family::ordinal;
  spec.link = Link::probit;
  spec.include_intercept = false;
  spec.categories = categories;
  spec.terms = std::move(terms);
  spec.validate();
  return spec;
}

Design Design::subset(std::span<const std::size_t> rows) const {
  Design out;
  out.names = names;
  out.center = center;
  out.scale = scale;
  out.intercept = intercept;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Design build_design(const Dataset& data, const ModelSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(spec.terms.size() + (spec.include_intercept ? 1 : 0));
  Design d;
  d.intercept = spec.include_intercept;
  d.X.resize(n, p);
  d.center = Eigen::VectorXd::Zero(p);
  d.scale = Eigen::VectorXd::Ones(p);
  Eigen::Index k = 0;
  if (spec.include_intercept) {
    d.X.col(0).setOnes();
    d.names.emplace_back("(Intercept)");
    k = 1;
  }
  for (const auto& term : spec.terms) {
    std::vector<std::size_t> cols;
    for (const auto& name : term.columns) cols.push_back(data.column_index(name));
    bool all_categorical = true;
    for (auto c : cols) all_categorical = all_categorical && data.columns[c].kind == ColumnKind::categorical;

    if (term.kind == Term::Kind::raw) {
      const auto c = cols[0];
      d.X.col(k) = data.X.col(static_cast<Eigen::Index>(c));
      d.center(k) = data.columns[c].center;
      d.scale(k) = data.columns[c].scale;
    } else {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        switch (term.kind) {
          case Term::Kind::power: v(i) = std::pow(data.raw_value(row, cols[0]), term.exponent); break;
          case Term::Kind::interaction:
            v(i) = data.raw_value(row, cols[0]) * data.raw_value(row, cols[1]);
            break;
          case Term::Kind::exp: v(i) = std::exp(data.raw_value(row, cols[0])); break;
          case Term::Kind::raw: break;
        }
      }
      if (data.standardized && !all_categorical) {
        const double mean = v.mean();
        const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1));
        if (!(sd > 0.0) || !std::isfinite(sd)) {
          throw Error(ErrorCode::RankDeficient, "glm_core", "term '" + term.label() + "' is constant");
        }
        d.center(k) = mean;
        d.scale(k) = sd;
        v = ((v.array() - mean) / sd).matrix();
      }
      d.X.col(k) = v;
    }
    d.names.push_back(term.label());
    ++k;
  }
  return d;
}

RawCoefficients back_transform(const Design& design, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& cutpoints) {
  RawCoefficients out{beta, cutpoints};
  double shift = 0.0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    if (design.intercept && k == 0) continue;
    out.beta(k) = beta(k) / design.scale(k);
    shift += beta(k) * design.center(k) / design.scale(k);
  }
  if (design.intercept) out.beta(0) = beta(0) - shift;
  if (cutpoints.size() > 0) out.cutpoints = (cutpoints.array() + shift).matrix();
  return out;
}

}  // namespace lrb
