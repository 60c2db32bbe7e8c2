#include "lrb/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include "lrb/errors.hpp"
#include "lrb/parallel.hpp"

namespace lrb {
namespace {

// e^2 / v with 0/0 read as 0: binary fits push fitted means to exactly 0 or 1.
double scaled_square(double e, double v) {
  if (e == 0.0) return 0.0;
  return e * e / std::max(v, std::numeric_limits<double>::min());
}

void require_scalar_mean(const ModelSpec& spec) {
  if (spec.is_ordinal()) {
    throw Error(ErrorCode::UnsupportedModel, "model_selection",
                "ordinal models have no scalar mean and variance to score");
  }
}

void check_permutation(const std::vector<int>& r) {
  std::vector<int> s = r;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::NotAPermutation, "model_selection", "ranks must be a permutation of 1..m");
    }
  }
}

void check_ranks(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "model_selection", "rank vectors differ in length");
  check_permutation(a);
  check_permutation(b);
}

}  // namespace

Criterion parse_criterion(std::string_view text) {
  if (text == "L") return Criterion::L;
  if (text == "Gamma" || text == "gamma") return Criterion::Gamma;
  throw Error(ErrorCode::InvalidArgument, "model_selection", "criterion must be L or Gamma");
}

CriterionTerms criterion_terms(const Prepared& prep, const Eigen::VectorXd& beta_star, const Replicate& rep) {
  const Eigen::MatrixXd& X = prep.design.X;
  const Eigen::Index n = X.rows();
  const Eigen::VectorXd eta_star = X * beta_star;
  CriterionTerms t;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = prep.fit.var(i);
    const double mu_star = inverse_link(prep.spec.link, eta_star(i));
    const double e1 = prep.y(i) - prep.fit.mu(i);
    const double e2 = prep.y(i) - mu_star;
    t.term1 += scaled_square(e1, v);
    t.term2 += scaled_square(e2, v);
  }
  if (rep.y.size() > 0) {
    // x* = x for response-recreating schemes; rows only differ for pairwise,
    // which never reaches term 3.
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu_star = inverse_link(prep.spec.link, eta_star(i));
      const double e3 = rep.y(i) - mu_star;
      t.term3 += scaled_square(e3, variance_function(prep.spec.family, mu_star));
    }
  }
  const auto nd = static_cast<double>(n);
  t.term1 /= nd;
  t.term2 /= nd;
  t.term3 /= nd;
  return t;
}

CriterionEstimate estimate_criteria(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                                    const BootstrapOptions& options) {
  require_scalar_mean(spec);
  if (options.B < 1) throw Error(ErrorCode::TooFewReplicates, "model_selection", "need B >= 1");
  const Prepared prep = prepare(data, spec, method, options);
  const Resampler resampler(prep, method);
  const bool recreate = method.recreates_response();
  FitOptions fit_options = options.fit;
  if (options.warm_start) fit_options.start = prep.fit.parameters();

  std::vector<std::optional<CriterionTerms>> slots(options.B);
  parallel_for(options.B, options.threads, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, {stream::kReplicate, b}));
    Replicate rep = resampler.draw(rng);
    try {
      const FitResult star = resampler.refit(rep, fit_options);
      if (!recreate) rep.y.resize(0);
      slots[b] = criterion_terms(prep, star.beta, rep);
    } catch (const Error&) {
    }
  });

  CriterionEstimate est;
  double s1 = 0, s2 = 0, s3 = 0;
  for (const auto& s : slots) {
    if (!s) {
      ++est.n_failed;
      continue;
    }
    ++est.used;
    s1 += s->term1;
    s2 += s->term2;
    s3 += s->term3;
  }
  if (static_cast<double>(est.n_failed) > options.max_failure_fraction * static_cast<double>(options.B) || est.used == 0) {
    throw Error(ErrorCode::TooManyFailures, "model_selection",
                std::to_string(est.n_failed) + " of " + std::to_string(options.B) + " replicate fits failed");
  }
  const auto u = static_cast<double>(est.used);
  est.L = s2 / u;
  est.optimism = (s2 - s3) / u;
  est.Gamma = recreate ? (s1 + s2 - s3) / u : std::numeric_limits<double>::quiet_NaN();
  return est;
}

double in_sample_loss(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                      const BootstrapOptions& options) {
  return estimate_criteria(data, spec, method, options).L;
}

double prediction_error(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                        const BootstrapOptions& options) {
  if (!method.recreates_response()) {
    throw Error(ErrorCode::MethodCannotRecreate, "model_selection",
                "the " + std::string(to_string(method.kind)) + " bootstrap does not recreate responses");
  }
  return estimate_criteria(data, spec, method, options).Gamma;
}

std::vector<int> rank_values(const std::vector<double>& values, const std::vector<std::string>& labels) {
  if (values.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "model_selection", "values and labels differ in length");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return labels[a] < labels[b];
  });
  std::vector<int> ranks(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r) + 1;
  return ranks;
}

SelectionReport rank_models(const Dataset& data, const std::vector<Candidate>& candidates, Criterion criterion,
                            const BootstrapMethod& method, const BootstrapOptions& options) {
  if (candidates.size() < 2) throw Error(ErrorCode::InvalidArgument, "model_selection", "need at least 2 candidate models");
  if (criterion == Criterion::Gamma && !method.recreates_response()) {
    throw Error(ErrorCode::MethodCannotRecreate, "model_selection",
                "the " + std::string(to_string(method.kind)) + " bootstrap does not recreate responses");
  }
  SelectionReport rep;
  rep.criterion = criterion;
  rep.method = method.label();
  rep.seed = options.seed;
  rep.B = options.B;
  for (const auto& c : candidates) {
    require_scalar_mean(c.spec);
    rep.labels.push_back(c.label);
    rep.models.push_back(c.spec.describe());
  }
  for (const auto& c : candidates) {
    BootstrapOptions o = options;
    o.seed = derive_seed(options.seed, {stream::kModel, hash_label(c.spec.describe())});
    const CriterionEstimate e = estimate_criteria(data, c.spec, method, o);
    rep.L.push_back(e.L);
    rep.Gamma.push_back(e.Gamma);
  }
  rep.rank_L = rank_values(rep.L, rep.labels);
  rep.chosen_L = rep.labels[static_cast<std::size_t>(std::find(rep.rank_L.begin(), rep.rank_L.end(), 1) - rep.rank_L.begin())];
  if (method.recreates_response()) {
    rep.rank_Gamma = rank_values(rep.Gamma, rep.labels);
    rep.chosen_Gamma =
        rep.labels[static_cast<std::size_t>(std::find(rep.rank_Gamma.begin(), rep.rank_Gamma.end(), 1) - rep.rank_Gamma.begin())];
  }
  return rep;
}

double cr1(const std::vector<int>& t, const std::vector<int>& e) {
  check_ranks(t, e);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < t.size(); ++i) hits += t[i] == e[i];
  return static_cast<double>(hits) / static_cast<double>(t.size());
}

double cr2(const std::vector<int>& t, const std::vector<int>& e) {
  check_ranks(t, e);
  const std::size_t m = t.size();
  if (m < 2) return 1.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j && ((t[i] < t[j]) == (e[i] < e[j]))) ++agree;
  return static_cast<double>(agree) / static_cast<double>(m * (m - 1));
}

nlohmann::json to_json(const SelectionReport& r) {
  nlohmann::json models = nlohmann::json::array();
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    nlohmann::json m = {{"label", r.labels[i]}, {"model", r.models[i]}, {"L", r.L[i]}, {"rank_L", r.rank_L[i]}};
    if (!r.rank_Gamma.empty()) {
      m["Gamma"] = r.Gamma[i];
      m["rank_Gamma"] = r.rank_Gamma[i];
    }
    models.push_back(m);
  }
  nlohmann::json j = {{"criterion", r.criterion == Criterion::L ? "L" : "Gamma"},
                      {"method", r.method},
                      {"seed", r.seed},
                      {"B", r.B},
                      {"models", models},
                      {"chosen_L", r.chosen_L}};
  if (!r.rank_Gamma.empty()) j["chosen_Gamma"] = r.chosen_Gamma;
  return j;
}

void write_table(std::ostream& out, const SelectionReport& r) {
  std::size_t width = 5;
  for (const auto& l : r.labels) width = std::max(width, l.size());
  const bool gamma = !r.rank_Gamma.empty();
  out << std::left << std::setw(static_cast<int>(width)) << "label" << "  " << std::setw(14) << "L" << std::setw(7) << "rank_L";
  if (gamma) out << "  " << std::setw(14) << "Gamma" << std::setw(10) << "rank_Gamma";
  out << "  chosen\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << r.labels[i] << "  " << std::setw(14) << std::setprecision(6)
        << r.L[i] << std::setw(7) << r.rank_L[i];
    if (gamma) out << "  " << std::setw(14) << r.Gamma[i] << std::setw(10) << r.rank_Gamma[i];
    std::string chosen;
    if (r.labels[i] == r.chosen_L) chosen += "L";
    if (gamma && r.labels[i] == r.chosen_Gamma) chosen += chosen.empty() ? "Gamma" : ",Gamma";
    out << "  " << chosen << '\n';
  }
}

}  // namespace lrb
