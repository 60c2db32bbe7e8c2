#include "lrb/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>

#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"
#include "lrb/parallel.hpp"

namespace lrb {
namespace {

std::vector<std::string> parameter_names(const Prepared& prep) {
  std::vector<std::string> names = prep.design.names;
  for (Eigen::Index k = 0; k < prep.fit.cutpoints.size(); ++k) names.push_back("alpha_" + std::to_string(k + 1));
  return names;
}

void fill_statistics(BootstrapOutcome& out, double alpha) {
  out.se_hat = se_estimate(out.replicates);
  out.ci_normal = ci_normal(out.estimate, out.se_hat, alpha);
  out.ci_percentile = ci_percentile(out.replicates, alpha);
  out.p_two_sided.resize(out.replicates.cols());
  for (Eigen::Index k = 0; k < out.replicates.cols(); ++k) {
    out.p_two_sided(k) = p_value(out.replicates.col(k), 0.0, Alternative::two_sided);
  }
}

}  // namespace

std::string_view to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::lrb: return "lrb";
    case MethodKind::local_response: return "local_response";
    case MethodKind::classical_residual: return "classical_residual";
    case MethodKind::parametric: return "parametric";
    case MethodKind::pairwise: return "pairwise";
    case MethodKind::wild: return "wild";
    case MethodKind::multiplier: return "multiplier";
  }
  return "?";
}

MethodKind parse_method_kind(std::string_view text) {
  for (auto k : {MethodKind::lrb, MethodKind::local_response, MethodKind::classical_residual, MethodKind::parametric,
                 MethodKind::pairwise, MethodKind::wild, MethodKind::multiplier}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "bootstrap", "unknown bootstrap method '" + std::string(text) + "'");
}

std::string BootstrapMethod::label() const {
  std::string s(to_string(kind));
  if (uses_residuals()) s += "-" + std::string(to_string(residual));
  if (uses_neighborhoods()) s += "(l=" + std::to_string(l) + ")";
  return s;
}

void check_method(const ModelSpec& spec, const BootstrapMethod& method) {
  if (method.uses_residuals()) {
    if (method.residual == ResidualKind::deviance || !residual_supported(spec.family, method.residual)) {
      throw Error(ErrorCode::IncompatibleResidual, "bootstrap",
                  std::string(to_string(method.residual)) + " residuals cannot drive a bootstrap of a " +
                      std::string(to_string(spec.family)) + " model");
    }
  }
  if (method.kind == MethodKind::wild && spec.is_ordinal()) {
    throw Error(ErrorCode::UnsupportedModel, "bootstrap", "the wild bootstrap is not defined for ordinal models");
  }
}

Prepared prepare(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                 const BootstrapOptions& options, const NeighborhoodMap* neighborhoods) {
  check_method(spec, method);
  Prepared prep;
  prep.spec = spec;
  prep.design = build_design(data, spec);
  prep.y = data.y;
  prep.fit = fit_design(prep.design.X, prep.y, spec, options.fit);
  const std::size_t n = data.n();
  if (method.uses_residuals()) {
    prep.residuals = compute_residuals(prep.fit, prep.y, method.residual,
                                       derive_seed(options.seed, {stream::kResidual}));
  }
  if (method.uses_neighborhoods()) {
    prep.neighborhoods = neighborhoods ? *neighborhoods : build_neighborhoods(data, method.l, method.metric, &prep.fit.eta);
    if (prep.neighborhoods.n != n) {
      throw Error(ErrorCode::DimensionMismatch, "bootstrap", "neighborhood map was built for another data set");
    }
  } else if (method.kind == MethodKind::classical_residual) {
    prep.neighborhoods = NeighborhoodMap::all_rows(n);
  }
  if (method.kind == MethodKind::parametric) {
    const auto p = static_cast<double>(prep.design.cols());
    const double dof = std::max(1.0, static_cast<double>(n) - p);
    if (spec.family == Family::gaussian) {
      prep.sigma = std::sqrt((prep.y - prep.fit.mu).squaredNorm() / dof);
    } else if (spec.family == Family::gamma) {
      const double phi =
          ((prep.y - prep.fit.mu).array().square() / prep.fit.mu.array().square()).sum() / dof;
      prep.gamma_shape = 1.0 / phi;
    }
  }
  return prep;
}

Resampler::Resampler(const Prepared& prepared, BootstrapMethod method) : prepared_(prepared), method_(method) {
  check_method(prepared.spec, method);
  if (method.uses_residuals() && prepared.residuals.values.size() != prepared.y.size()) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap", "prepared state carries no residuals for this method");
  }
  if ((method.uses_residuals() || method.uses_neighborhoods()) && prepared.neighborhoods.n != static_cast<std::size_t>(prepared.y.size())) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap", "prepared state carries no neighborhoods for this method");
  }
}

Replicate Resampler::draw(Rng& rng) const {
  const Prepared& p = prepared_;
  const FitResult& fit = p.fit;
  const auto n = static_cast<std::size_t>(p.y.size());
  const auto& nb = p.neighborhoods;
  Replicate rep;
  switch (method_.kind) {
    case MethodKind::lrb:
    case MethodKind::classical_residual: {
      Eigen::VectorXd r(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        r(static_cast<Eigen::Index>(i)) = p.residuals.values(static_cast<Eigen::Index>(nb.member(i, rng.index(nb.size_of(i)))));
      }
      rep.y = recreate(fit, r, method_.residual);
      break;
    }
    case MethodKind::local_response:
      rep.y.resize(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        rep.y(static_cast<Eigen::Index>(i)) = p.y(static_cast<Eigen::Index>(nb.member(i, rng.index(nb.size_of(i)))));
      }
      break;
    case MethodKind::parametric:
      rep.y.resize(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        switch (fit.family) {
          case Family::binomial: rep.y(i) = rng.uniform() < fit.mu(i) ? 1.0 : 0.0; break;
          case Family::poisson: rep.y(i) = rng.poisson(fit.mu(i)); break;
          case Family::gaussian: rep.y(i) = fit.mu(i) + p.sigma * rng.normal(); break;
          case Family::gamma: {
            std::gamma_distribution<double> g(p.gamma_shape, fit.mu(i) / p.gamma_shape);
            rep.y(i) = std::max(g(rng), 1e-12);
            break;
          }
          case Family::ordinal: {
            const double u = rng.uniform();
            int j = 1;
            double cum = fit.probs(i, 0);
            while (j < fit.categories && cum < u) cum += fit.probs(i, j++);
            rep.y(i) = j;
            break;
          }
        }
      }
      break;
    case MethodKind::pairwise:
      rep.rows.resize(n);
      rep.y.resize(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        rep.rows[i] = rng.index(n);
        rep.y(static_cast<Eigen::Index>(i)) = p.y(static_cast<Eigen::Index>(rep.rows[i]));
      }
      break;
    case MethodKind::wild:
      rep.y.resize(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        const double w = rng.rademacher();
        rep.y(i) = clamp_to_support(fit.family, fit.mu(i) + w * (p.y(i) - fit.mu(i)));
      }
      break;
    case MethodKind::multiplier:
      rep.y = p.y;
      rep.weights.resize(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) rep.weights(i) = rng.exponential();
      break;
  }
  return rep;
}

FitResult Resampler::refit(const Replicate& rep, const FitOptions& options) const {
  const Eigen::VectorXd* w = rep.weights.size() > 0 ? &rep.weights : nullptr;
  if (rep.rows.empty()) return fit_design(prepared_.design.X, rep.y, prepared_.spec, options, w);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rep.rows.size()), prepared_.design.cols());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = prepared_.design.X.row(static_cast<Eigen::Index>(rep.rows[i]));
  }
  return fit_design(X, rep.y, prepared_.spec, options, w);
}

BootstrapOutcome run_prepared(const Prepared& prepared, const BootstrapMethod& method,
                              const BootstrapOptions& options) {
  if (options.B < 2) throw Error(ErrorCode::TooFewReplicates, "bootstrap", "need B >= 2");
  if (!(options.alpha > 0.0 && options.alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap", "alpha must lie in (0, 1]");
  }
  const Resampler resampler(prepared, method);
  FitOptions fit_options = options.fit;
  if (options.warm_start) fit_options.start = prepared.fit.parameters();

  std::vector<std::optional<Eigen::VectorXd>> slots(options.B);
  std::vector<std::string> errors(options.B);
  parallel_for(options.B, options.threads, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, {stream::kReplicate, b}));
    const Replicate rep = resampler.draw(rng);
    try {
      slots[b] = resampler.refit(rep, fit_options).parameters();
    } catch (const Error& e) {
      errors[b] = e.what();
    }
  });

  BootstrapOutcome out;
  out.names = parameter_names(prepared);
  out.estimate = prepared.fit.parameters();
  out.warnings = prepared.neighborhoods.warnings;
  out.provenance = {std::string(to_string(method.kind)),
                    method.uses_residuals() ? std::string(to_string(method.residual)) : std::string(),
                    method.uses_neighborhoods() ? method.l : (method.kind == MethodKind::classical_residual ? prepared.neighborhoods.n : 0),
                    method.uses_neighborhoods() ? std::string(to_string(prepared.neighborhoods.metric)) : std::string(),
                    options.seed,
                    options.B,
                    options.alpha,
                    prepared.spec.describe()};
  for (std::size_t b = 0; b < options.B; ++b) {
    if (slots[b]) {
      out.replicate_ids.push_back(b);
    } else {
      ++out.n_failed;
      if (out.failures.size() < 5) out.failures.push_back("replicate " + std::to_string(b) + ": " + errors[b]);
    }
  }
  if (static_cast<double>(out.n_failed) > options.max_failure_fraction * static_cast<double>(options.B)) {
    std::string msg = std::to_string(out.n_failed) + " of " + std::to_string(options.B) + " replicate fits failed";
    for (const auto& f : out.failures) msg += "; " + f;
    throw Error(ErrorCode::TooManyFailures, "bootstrap", msg);
  }
  out.replicates.resize(static_cast<Eigen::Index>(out.replicate_ids.size()), out.estimate.size());
  for (std::size_t r = 0; r < out.replicate_ids.size(); ++r) {
    out.replicates.row(static_cast<Eigen::Index>(r)) = slots[out.replicate_ids[r]]->transpose();
  }
  fill_statistics(out, options.alpha);
  return out;
}

BootstrapOutcome run(const Dataset& data, const ModelSpec& spec, const BootstrapMethod& method,
                     const BootstrapOptions& options) {
  const Prepared prepared = prepare(data, spec, method, options);
  return run_prepared(prepared, method, options);
}

BootstrapOutcome back_transformed(const BootstrapOutcome& outcome, const Design& design) {
  BootstrapOutcome out = outcome;
  const Eigen::Index p = design.cols();
  auto transform = [&](const Eigen::VectorXd& params) {
    const RawCoefficients raw = back_transform(design, params.head(p), params.tail(params.size() - p));
    Eigen::VectorXd v(params.size());
    v << raw.beta, raw.cutpoints;
    return v;
  };
  out.estimate = transform(outcome.estimate);
  for (Eigen::Index r = 0; r < out.replicates.rows(); ++r) {
    out.replicates.row(r) = transform(outcome.replicates.row(r).transpose()).transpose();
  }
  fill_statistics(out, outcome.provenance.alpha);
  return out;
}

Eigen::VectorXd se_estimate(const Eigen::MatrixXd& replicates) {
  if (replicates.rows() < 2) {
    throw Error(ErrorCode::TooFewReplicates, "bootstrap", "need at least 2 replicates");
  }
  const auto B = static_cast<double>(replicates.rows());
  const Eigen::RowVectorXd mean = replicates.colwise().mean();
  return ((replicates.rowwise() - mean).array().square().colwise().sum() / B).sqrt().transpose();
}

double quantile_type7(std::vector<double> values, double prob) {
  if (values.size() < 2) throw Error(ErrorCode::TooFewReplicates, "bootstrap", "need at least 2 replicates");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

Eigen::MatrixXd ci_percentile(const Eigen::MatrixXd& replicates, double alpha) {
  if (replicates.rows() < 2) throw Error(ErrorCode::TooFewReplicates, "bootstrap", "need at least 2 replicates");
  Eigen::MatrixXd ci(replicates.cols(), 2);
  for (Eigen::Index k = 0; k < replicates.cols(); ++k) {
    std::vector<double> col(replicates.col(k).begin(), replicates.col(k).end());
    ci(k, 0) = quantile_type7(col, alpha / 2.0);
    ci(k, 1) = quantile_type7(col, 1.0 - alpha / 2.0);
  }
  return ci;
}

Eigen::MatrixXd ci_normal(const Eigen::VectorXd& estimate, const Eigen::VectorXd& se, double alpha) {
  const double z = norm_quantile(1.0 - alpha / 2.0);
  Eigen::MatrixXd ci(estimate.size(), 2);
  ci.col(0) = estimate - z * se;
  ci.col(1) = estimate + z * se;
  return ci;
}

Alternative parse_alternative(std::string_view text) {
  if (text == "two_sided" || text == "two-sided") return Alternative::two_sided;
  if (text == "less") return Alternative::less;
  if (text == "greater") return Alternative::greater;
  throw Error(ErrorCode::InvalidArgument, "bootstrap", "unknown alternative '" + std::string(text) + "'");
}

double p_value(const Eigen::VectorXd& replicates, double null_value, Alternative alternative) {
  if (replicates.size() < 2) throw Error(ErrorCode::TooFewReplicates, "bootstrap", "need at least 2 replicates");
  const auto B = static_cast<double>(replicates.size());
  const double below = static_cast<double>((replicates.array() <= null_value).count()) / B;
  const double above = static_cast<double>((replicates.array() >= null_value).count()) / B;
  switch (alternative) {
    case Alternative::greater: return below;
    case Alternative::less: return above;
    case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(below, above));
  }
  return 1.0;
}

nlohmann::json to_json(const BootstrapOutcome& o, bool include_replicates) {
  nlohmann::json j;
  j["provenance"] = {{"method", o.provenance.method}, {"residual", o.provenance.residual},
                     {"l", o.provenance.l},           {"metric", o.provenance.metric},
                     {"seed", o.provenance.seed},     {"B", o.provenance.B},
                     {"alpha", o.provenance.alpha},   {"model", o.provenance.model}};
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t k = 0; k < o.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    coefs.push_back({{"name", o.names[k]},
                     {"estimate", o.estimate(i)},
                     {"se_hat", o.se_hat(i)},
                     {"ci_normal", {o.ci_normal(i, 0), o.ci_normal(i, 1)}},
                     {"ci_percentile", {o.ci_percentile(i, 0), o.ci_percentile(i, 1)}},
                     {"p_two_sided", o.p_two_sided(i)}});
  }
  j["coefficients"] = coefs;
  j["n_failed"] = o.n_failed;
  j["failures"] = o.failures;
  j["warnings"] = o.warnings;
  if (include_replicates) {
    nlohmann::json reps = nlohmann::json::array();
    for (Eigen::Index r = 0; r < o.replicates.rows(); ++r) {
      reps.push_back(std::vector<double>(o.replicates.row(r).begin(), o.replicates.row(r).end()));
    }
    j["replicates"] = reps;
    j["replicate_ids"] = o.replicate_ids;
  }
  return j;
}

void write_summary_csv(std::ostream& out, const BootstrapOutcome& o) {
  out << "coefficient,estimate,se_hat,ci_nor_lo,ci_nor_hi,ci_per_lo,ci_per_hi,p_two_sided\n";
  out.precision(17);
  for (std::size_t k = 0; k < o.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out << o.names[k] << ',' << o.estimate(i) << ',' << o.se_hat(i) << ',' << o.ci_normal(i, 0) << ','
        << o.ci_normal(i, 1) << ',' << o.ci_percentile(i, 0) << ',' << o.ci_percentile(i, 1) << ','
        << o.p_two_sided(i) << '\n';
  }
}

}  // namespace lrb
