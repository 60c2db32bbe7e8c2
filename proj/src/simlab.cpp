#include "lrb/simlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"
#include "lrb/parallel.hpp"

namespace lrb {
namespace {

constexpr std::array<ScenarioId, 19> kAll = {
    ScenarioId::SC1_probit, ScenarioId::SC1_logit, ScenarioId::SC1_ordinal, ScenarioId::SC2,   ScenarioId::SC3,
    ScenarioId::SC4_exp,    ScenarioId::SC4_sine,  ScenarioId::SC5_slope,   ScenarioId::SC5_both, ScenarioId::SC6,
    ScenarioId::SC7,        ScenarioId::SC8,       ScenarioId::SC9,         ScenarioId::SC10,  ScenarioId::SC11,
    ScenarioId::SC12,       ScenarioId::CaseI,     ScenarioId::CaseII,      ScenarioId::Example1,
};

using Params = std::map<std::string, double>;

Params default_params(ScenarioId id) {
  switch (id) {
    case ScenarioId::SC1_probit:
    case ScenarioId::SC1_logit: return {{"beta0", 12}, {"beta1", 2}, {"beta2", -2}};
    case ScenarioId::SC1_ordinal:
      return {{"alpha1", -16}, {"alpha2", -12}, {"alpha3", -8}, {"beta1", 8}, {"beta2", -1}};
    case ScenarioId::SC2:
    case ScenarioId::SC3: return {{"rho", 0}};
    case ScenarioId::SC7: return {{"m", 10}};
    case ScenarioId::SC11: return {{"hetero", 1}};
    case ScenarioId::SC9: return {{"shape", 2}};
    default: return {};
  }
}

std::size_t default_n(ScenarioId id) {
  switch (id) {
    case ScenarioId::SC7: return 200;
    case ScenarioId::Example1: return 500;
    default: return 2000;
  }
}

std::vector<Term> raw_terms(std::initializer_list<const char*> names) {
  std::vector<Term> out;
  for (const char* n : names) out.push_back(Term::raw(n));
  return out;
}

ModelSpec probit(std::vector<Term> terms) { return make_spec(Family::binomial, Link::probit, std::move(terms)); }
ModelSpec logit(std::vector<Term> terms) { return make_spec(Family::binomial, Link::logit, std::move(terms)); }

double uniform(Rng& rng, double a, double b) { return a + (b - a) * rng.uniform(); }
double bernoulli(Rng& rng, double p) { return rng.uniform() < p ? 1.0 : 0.0; }
double gamma_draw(Rng& rng, double shape, double scale) {
  std::gamma_distribution<double> g(shape, scale);
  return g(rng);
}

ColumnMeta continuous(std::string name) {
  ColumnMeta m;
  m.name = std::move(name);
  return m;
}
ColumnMeta categorical(std::string name) {
  ColumnMeta m = continuous(std::move(name));
  m.kind = ColumnKind::categorical;
  return m;
}

// Rows of N(0, Sigma) through the Cholesky factor.
Eigen::MatrixXd mvnormal(Rng& rng, std::size_t n, const Eigen::MatrixXd& sigma) {
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
  const auto p = sigma.rows();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd z(p);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    out.row(i) = (L * z).transpose();
  }
  return out;
}

double sc1_eta(const ScenarioDef& s, double x) {
  return s.param("beta0") + s.param("beta1") * x + s.param("beta2") * x * x;
}

// Cumulative probabilities of the SC1 ordinal process at x (F(0) = 0, F(J) = 1).
std::array<double, 5> sc1_ordinal_cdf(const ScenarioDef& s, double x) {
  const double shift = s.param("beta1") * x + s.param("beta2") * x * x;
  return {0.0, norm_cdf(s.param("alpha1") + shift), norm_cdf(s.param("alpha2") + shift),
          norm_cdf(s.param("alpha3") + shift), 1.0};
}

// True E(Y | x) of one row; the mean of SC10-SC12 excludes the error.
double row_mean(const ScenarioDef& s, const Eigen::MatrixXd& X, Eigen::Index i) {
  const auto x = [&](Eigen::Index j) { return X(i, j); };
  switch (s.id) {
    case ScenarioId::SC1_probit: return norm_cdf(sc1_eta(s, x(0)));
    case ScenarioId::SC1_logit: return logistic_cdf(sc1_eta(s, x(0)));
    case ScenarioId::SC1_ordinal: {
      const auto F = sc1_ordinal_cdf(s, x(0));
      double m = 0;
      for (int j = 1; j <= 4; ++j) m += j * (F[static_cast<std::size_t>(j)] - F[static_cast<std::size_t>(j - 1)]);
      return m;
    }
    case ScenarioId::SC2: {
      double eta = 1.0;
      for (Eigen::Index j = 0; j < 10; ++j) eta += ((j + 1) % 2 == 0 ? 1.0 : -1.0) * x(j);
      eta += -x(0) * x(9) + x(1) * x(8);
      return norm_cdf(eta);
    }
    case ScenarioId::SC3: return norm_cdf(-1 + 2 * x(0) + 2 * x(1));
    case ScenarioId::SC4_exp: return norm_cdf(-2 + 4 * std::exp(x(0)));
    case ScenarioId::SC4_sine: return norm_cdf(5 * std::sin(x(0)));
    case ScenarioId::SC5_slope: return norm_cdf(x(1) == 0 ? -2 + x(0) : -2 - x(0));
    case ScenarioId::SC5_both: return norm_cdf(x(1) == 0 ? -1 + x(0) : 1 - x(0));
    case ScenarioId::SC6: return norm_cdf(1 + x(0) - x(1) - 4 * x(0) * x(1));
    case ScenarioId::SC7: return logistic_cdf(-2 + 2 * x(0));
    case ScenarioId::SC8: return std::exp(4 + 2 * x(0) - x(0) * x(0));
    case ScenarioId::SC9: return std::exp(2 + x(0) - x(0) * x(0));
    case ScenarioId::SC10: return x(0) + x(1) + x(2) + 0.5 * x(0) * x(1);
    case ScenarioId::SC11: return 1 + x(0) + x(0) * x(0);
    case ScenarioId::SC12: return x(1) == 0 ? -2 + 2 * x(0) : -2 - 2 * x(0);
    case ScenarioId::CaseI: return norm_cdf(std::sin(2 * x(0) - 1) + 0.1 * std::exp(x(0)) + 0.5 * std::pow(x(0), 3));
    case ScenarioId::CaseII: {
      const double d = x(0) - x(1);
      return norm_cdf(1 + 2 * x(0) - 1.5 * x(1) + x(0) * x(1) - d * d);
    }
    case ScenarioId::Example1: return norm_cdf(x(0) + 2 * std::sin(3 * x(0)));
  }
  return 0.0;
}

Eigen::MatrixXd covariates(const ScenarioDef& s, Rng& rng, std::vector<ColumnMeta>& cols) {
  const std::size_t n = s.n;
  const auto N = static_cast<Eigen::Index>(n);
  auto uniform_column = [&](double a, double b) {
    Eigen::MatrixXd X(N, 1);
    for (Eigen::Index i = 0; i < N; ++i) X(i, 0) = uniform(rng, a, b);
    return X;
  };
  switch (s.id) {
    case ScenarioId::SC1_ordinal:
      cols = {continuous("x")};
      return uniform_column(1, 7);
    case ScenarioId::SC2: {
      cols.clear();
      for (int j = 1; j <= 10; ++j) cols.push_back(continuous("x" + std::to_string(j)));
      Eigen::MatrixXd sigma(10, 10);
      for (int a = 0; a < 10; ++a)
        for (int b = 0; b < 10; ++b) sigma(a, b) = a == b ? 1.0 : std::pow(s.param("rho"), std::abs(a - b));
      return mvnormal(rng, n, sigma);
    }
    case ScenarioId::SC3: {
      cols = {continuous("x1"), continuous("x2")};
      Eigen::Matrix2d sigma;
      sigma << 1, s.param("rho"), s.param("rho"), 1;
      Eigen::MatrixXd X = mvnormal(rng, n, sigma);
      X.col(1) = X.col(1).array().exp().matrix();
      return X;
    }
    case ScenarioId::SC5_slope:
    case ScenarioId::SC5_both: {
      cols = {continuous("x"), categorical("u")};
      Eigen::MatrixXd X(N, 2);
      for (Eigen::Index i = 0; i < N; ++i) {
        X(i, 0) = uniform(rng, -6, 6);
        X(i, 1) = bernoulli(rng, 0.5);
      }
      return X;
    }
    case ScenarioId::SC6: {
      cols = {categorical("x1"), categorical("x2")};
      Eigen::MatrixXd X(N, 2);
      for (Eigen::Index i = 0; i < N; ++i) {
        X(i, 0) = bernoulli(rng, 0.2);
        X(i, 1) = bernoulli(rng, 0.8);
      }
      return X;
    }
    case ScenarioId::SC7: {
      // Each binomial(m) group becomes m binary rows sharing x.
      cols = {continuous("x")};
      const auto m = static_cast<Eigen::Index>(s.param("m"));
      Eigen::MatrixXd X(N * m, 1);
      for (Eigen::Index g = 0; g < N; ++g) X.block(g * m, 0, m, 1).setConstant(uniform(rng, 0, 2));
      return X;
    }
    case ScenarioId::SC9:
    case ScenarioId::SC11:
      cols = {continuous("x")};
      return uniform_column(0, 1);
    case ScenarioId::SC10: {
      cols = {continuous("x1"), continuous("x2"), continuous("x3")};
      Eigen::Matrix3d sigma = Eigen::Matrix3d::Constant(0.2);
      sigma.diagonal().setOnes();
      Eigen::MatrixXd X = mvnormal(rng, n, sigma);
      // exp(v) is lognormal(0, 1): mean e^{1/2}, variance (e - 1) e.
      const double mean = std::exp(0.5), sd = std::sqrt((std::exp(1.0) - 1.0) * std::exp(1.0));
      X.col(0) = ((X.col(0).array().exp() - mean) / sd).matrix();
      return X;
    }
    case ScenarioId::SC12: {
      cols = {continuous("x"), categorical("u")};
      Eigen::MatrixXd X(N, 2);
      for (Eigen::Index i = 0; i < N; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = bernoulli(rng, 0.5);
      }
      return X;
    }
    case ScenarioId::CaseII: {
      cols = {continuous("x1"), continuous("x2")};
      Eigen::MatrixXd X(N, 2);
      for (Eigen::Index i = 0; i < N; ++i) {
        X(i, 0) = uniform(rng, -6, 6);
        X(i, 1) = uniform(rng, -6, 6);
      }
      return X;
    }
    case ScenarioId::Example1:
      cols = {continuous("x")};
      return uniform_column(-3, 3);
    default:
      cols = {continuous("x")};
      return uniform_column(-6, 6);
  }
}

bool binary_response(ScenarioId id) {
  switch (id) {
    case ScenarioId::SC1_ordinal:
    case ScenarioId::SC8:
    case ScenarioId::SC9:
    case ScenarioId::SC10:
    case ScenarioId::SC11:
    case ScenarioId::SC12: return false;
    default: return true;
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

ResidualKind default_residual(const ModelSpec& spec) {
  return spec.family == Family::binomial || spec.is_ordinal() ? ResidualKind::surrogate : ResidualKind::pearson;
}

}  // namespace

std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::SC1_probit: return "SC1_probit";
    case ScenarioId::SC1_logit: return "SC1_logit";
    case ScenarioId::SC1_ordinal: return "SC1_ordinal";
    case ScenarioId::SC2: return "SC2";
    case ScenarioId::SC3: return "SC3";
    case ScenarioId::SC4_exp: return "SC4_exp";
    case ScenarioId::SC4_sine: return "SC4_sine";
    case ScenarioId::SC5_slope: return "SC5_slope";
    case ScenarioId::SC5_both: return "SC5_both";
    case ScenarioId::SC6: return "SC6";
    case ScenarioId::SC7: return "SC7";
    case ScenarioId::SC8: return "SC8";
    case ScenarioId::SC9: return "SC9";
    case ScenarioId::SC10: return "SC10";
    case ScenarioId::SC11: return "SC11";
    case ScenarioId::SC12: return "SC12";
    case ScenarioId::CaseI: return "CaseI";
    case ScenarioId::CaseII: return "CaseII";
    case ScenarioId::Example1: return "Example1";
  }
  return "?";
}

ScenarioId parse_scenario(std::string_view name) {
  for (auto id : kAll) {
    if (to_string(id) == name) return id;
  }
  throw Error(ErrorCode::UnknownScenario, "simlab", "unknown scenario '" + std::string(name) + "'");
}

std::vector<ScenarioId> all_scenarios() { return {kAll.begin(), kAll.end()}; }

std::string ScenarioDef::key() const {
  std::ostringstream os;
  os << name() << "|n=" << n;
  for (const auto& [k, v] : params) os << "|" << k << "=" << format_double(v);
  return os.str();
}

ScenarioDef make_scenario(ScenarioId id, std::size_t n, const std::map<std::string, double>& overrides) {
  ScenarioDef s;
  s.id = id;
  s.n = n == 0 ? default_n(id) : n;
  s.params = default_params(id);
  for (const auto& [k, v] : overrides) {
    if (!s.params.count(k)) {
      throw Error(ErrorCode::InvalidArgument, "simlab", "scenario " + s.name() + " has no parameter '" + k + "'");
    }
    s.params[k] = v;
  }
  switch (id) {
    case ScenarioId::SC1_probit: s.assumed = probit(raw_terms({"x"})); s.default_l = 10; break;
    case ScenarioId::SC1_logit: s.assumed = logit(raw_terms({"x"})); s.default_l = 10; break;
    case ScenarioId::SC1_ordinal: s.assumed = make_ordinal_spec(4, raw_terms({"x"})); s.default_l = 10; break;
    case ScenarioId::SC2:
      s.assumed = probit(raw_terms({"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9", "x10"}));
      break;
    case ScenarioId::SC3: s.assumed = probit(raw_terms({"x1"})); break;
    case ScenarioId::SC4_exp:
    case ScenarioId::SC4_sine: s.assumed = probit(raw_terms({"x"})); break;
    case ScenarioId::SC5_slope:
    case ScenarioId::SC5_both: s.assumed = probit(raw_terms({"x", "u"})); break;
    case ScenarioId::SC6: s.assumed = probit(raw_terms({"x1", "x2"})); break;
    case ScenarioId::SC7: s.assumed = logit(raw_terms({"x"})); break;
    case ScenarioId::SC8: s.assumed = make_spec(Family::poisson, Link::log, raw_terms({"x"})); break;
    case ScenarioId::SC9: s.assumed = make_spec(Family::gamma, Link::inverse, raw_terms({"x"})); break;
    case ScenarioId::SC10:
      s.assumed = make_spec(Family::gaussian, Link::identity, raw_terms({"x1", "x2", "x3"}));
      break;
    case ScenarioId::SC11:
      s.assumed = make_spec(Family::gaussian, Link::identity, {Term::raw("x"), Term::power("x", 2)});
      break;
    case ScenarioId::SC12: s.assumed = make_spec(Family::gaussian, Link::identity, raw_terms({"x", "u"})); break;
    case ScenarioId::CaseI:
      s.candidates = {{"{x}", probit(raw_terms({"x"}))},
                      {"{x,x^2,x^3}", probit({Term::raw("x"), Term::power("x", 2), Term::power("x", 3)})},
                      {"{x,exp(x)}", probit({Term::raw("x"), Term::exp("x")})}};
      s.true_ranks = {3, 1, 2};
      s.assumed = s.candidates.front().spec;
      s.default_l = 10;
      break;
    case ScenarioId::CaseII:
      s.candidates = {{"probit-(x1,x2)", probit(raw_terms({"x1", "x2"}))},
                      {"logit-(x1,x2,x1^2)", logit({Term::raw("x1"), Term::raw("x2"), Term::power("x1", 2)})},
                      {"logit-(x1,x2,x1x2)", logit({Term::raw("x1"), Term::raw("x2"), Term::interaction("x1", "x2")})},
                      {"probit-(x1,x2,x1x2)",
                       probit({Term::raw("x1"), Term::raw("x2"), Term::interaction("x1", "x2")})}};
      s.true_ranks = {4, 3, 2, 1};
      s.assumed = s.candidates.front().spec;
      s.default_l = 10;
      break;
    case ScenarioId::Example1: s.assumed = probit(raw_terms({"x"})); s.default_l = 4; break;
  }
  s.coefficient = s.assumed.terms.front().label();
  return s;
}

ScenarioDef make_scenario(std::string_view name, std::size_t n, const std::map<std::string, double>& overrides) {
  return make_scenario(parse_scenario(name), n, overrides);
}

double true_mean(const ScenarioDef& scn, const Eigen::MatrixXd& raw_X, Eigen::Index row) {
  return row_mean(scn, raw_X, row);
}

FrozenDesign draw_design(const ScenarioDef& scn, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {stream::kDesign}));
  FrozenDesign d;
  d.raw_X = covariates(scn, rng, d.columns);
  d.mean.resize(d.raw_X.rows());
  for (Eigen::Index i = 0; i < d.raw_X.rows(); ++i) d.mean(i) = row_mean(scn, d.raw_X, i);
  d.response_kind = scn.assumed.is_ordinal() ? ResponseKind::ordinal : ResponseKind::real;
  return d;
}

Eigen::VectorXd draw_response(const ScenarioDef& scn, const FrozenDesign& design, Rng& rng) {
  const Eigen::MatrixXd& X = design.raw_X;
  const Eigen::Index n = X.rows();
  Eigen::VectorXd y(n);
  if (scn.id == ScenarioId::SC7) {
    // Beta-binomial: one success probability per group of m rows.
    const auto m = static_cast<Eigen::Index>(scn.param("m"));
    for (Eigen::Index g = 0; g * m < n; ++g) {
      const double mu = design.mean(g * m);
      const double a = gamma_draw(rng, 2 * mu, 1.0), b = gamma_draw(rng, 2 * (1 - mu), 1.0);
      const double p = a + b > 0 ? a / (a + b) : mu;
      for (Eigen::Index k = 0; k < m; ++k) y(g * m + k) = bernoulli(rng, p);
    }
    return y;
  }
  if (binary_response(scn.id)) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) = bernoulli(rng, design.mean(i));
    return y;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = design.mean(i);
    switch (scn.id) {
      case ScenarioId::SC1_ordinal: {
        const auto F = sc1_ordinal_cdf(scn, X(i, 0));
        const double u = rng.uniform();
        int j = 1;
        while (j < 4 && u > F[static_cast<std::size_t>(j)]) ++j;
        y(i) = j;
        break;
      }
      case ScenarioId::SC8: y(i) = rng.poisson(mu); break;
      case ScenarioId::SC9: {
        const double shape = scn.param("shape");
        y(i) = gamma_draw(rng, shape, mu / shape);
        break;
      }
      case ScenarioId::SC10: {
        // 0.9 N(-1/9, 1) + 0.1 N(1, 4), mean zero.
        const bool tail = rng.uniform() < 0.1;
        const double z = rng.normal();
        y(i) = mu + (tail ? 1.0 + 2.0 * z : -1.0 / 9.0 + z);
        break;
      }
      case ScenarioId::SC11: {
        // hetero = 0 gives the homoscedastic, correctly specified variant.
        const double h = scn.param("hetero");
        const double s = h * (X(i, 0) - 0.5) * (X(i, 0) - 0.5) + (1.0 - h);
        y(i) = mu + s * rng.normal();
        break;
      }
      case ScenarioId::SC12: y(i) = mu + rng.normal(); break;
      default: y(i) = mu; break;
    }
  }
  return y;
}

Dataset make_data(const FrozenDesign& design, Eigen::VectorXd y) {
  Dataset d = make_dataset(std::move(y), design.raw_X, design.columns);
  d.response_kind = design.response_kind;
  validate_dataset(d);
  return d;
}

Dataset generate(const ScenarioDef& scn, std::uint64_t seed, std::size_t rep) {
  const FrozenDesign design = draw_design(scn, seed);
  Rng rng(derive_seed(seed, {stream::kExperiment, rep}));
  return make_data(design, draw_response(scn, design, rng));
}

std::size_t PseudoTruth::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return k;
  }
  throw Error(ErrorCode::MissingColumn, "simlab", "no coefficient named '" + name + "'");
}

PseudoTruth pseudo_truth(const ScenarioDef& scn, std::size_t reps, std::uint64_t seed, unsigned threads) {
  if (reps < 100) throw Error(ErrorCode::InvalidArgument, "simlab", "pseudo_truth needs reps >= 100");
  const FrozenDesign design = draw_design(scn, seed);
  const Dataset base = make_data(design, design.mean.unaryExpr([&](double m) {
    return scn.assumed.is_ordinal() ? std::clamp(std::round(m), 1.0, 4.0) : m;
  }));
  const Design dsg = build_design(base, scn.assumed);

  std::vector<std::optional<Eigen::VectorXd>> std_fits(reps), raw_fits(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    Rng rng(derive_seed(seed, {stream::kTruth, r}));
    const Eigen::VectorXd y = draw_response(scn, design, rng);
    try {
      const FitResult fit = fit_design(dsg.X, y, scn.assumed);
      std_fits[r] = fit.parameters();
      const RawCoefficients raw = back_transform(dsg, fit.beta, fit.cutpoints);
      Eigen::VectorXd v(raw.beta.size() + raw.cutpoints.size());
      v << raw.beta, raw.cutpoints;
      raw_fits[r] = v;
    } catch (const Error&) {
    }
  });

  PseudoTruth pt;
  pt.scenario = scn.key();
  pt.names = dsg.names;
  const int extra = scn.assumed.is_ordinal() ? scn.assumed.categories - 1 : 0;
  for (int k = 1; k <= extra; ++k) pt.names.push_back("alpha_" + std::to_string(k));
  pt.reps = reps;
  pt.seed = seed;
  const auto P = static_cast<Eigen::Index>(pt.names.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(P), sum_std = Eigen::VectorXd::Zero(P);
  for (std::size_t r = 0; r < reps; ++r) {
    if (!raw_fits[r]) {
      ++pt.n_failed;
      continue;
    }
    ++pt.used;
    sum += *raw_fits[r];
    sum_std += *std_fits[r];
  }
  if (static_cast<double>(pt.n_failed) > 0.05 * static_cast<double>(reps)) {
    throw Error(ErrorCode::TooManyFailures, "simlab",
                std::to_string(pt.n_failed) + " of " + std::to_string(reps) + " pseudo-truth fits failed");
  }
  const auto used = static_cast<double>(pt.used);
  pt.beta_dagger = sum / used;
  pt.beta_dagger_std = sum_std / used;
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(P);
  for (std::size_t r = 0; r < reps; ++r) {
    if (raw_fits[r]) ss += (*raw_fits[r] - pt.beta_dagger).array().square().matrix();
  }
  pt.psi = (ss / used).cwiseSqrt();
  return pt;
}

nlohmann::json to_json(const PseudoTruth& t) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"scenario", t.scenario}, {"names", t.names},     {"beta_dagger", vec(t.beta_dagger)},
          {"psi", vec(t.psi)},       {"beta_dagger_std", vec(t.beta_dagger_std)},
          {"reps", t.reps},          {"used", t.used},       {"n_failed", t.n_failed}, {"seed", t.seed}};
}

PseudoTruth pseudo_truth_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  PseudoTruth t;
  t.scenario = j.at("scenario").get<std::string>();
  t.names = j.at("names").get<std::vector<std::string>>();
  t.beta_dagger = vec(j.at("beta_dagger"));
  t.psi = vec(j.at("psi"));
  t.beta_dagger_std = vec(j.at("beta_dagger_std"));
  t.reps = j.at("reps").get<std::size_t>();
  t.used = j.at("used").get<std::size_t>();
  t.n_failed = j.at("n_failed").get<std::size_t>();
  t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

PseudoTruth pseudo_truth_cached(const ScenarioDef& scn, std::size_t reps, std::uint64_t seed,
                                const std::string& cache_path, unsigned threads) {
  if (cache_path.empty()) return pseudo_truth(scn, reps, seed, threads);
  const std::string key = scn.key() + "|reps=" + std::to_string(reps) + "|seed=" + std::to_string(seed);
  nlohmann::json cache = nlohmann::json::object();
  if (std::ifstream in(cache_path); in) {
    try {
      in >> cache;
    } catch (const nlohmann::json::exception&) {
      cache = nlohmann::json::object();  // unreadable cache: rebuild it
    }
    if (cache.is_object() && cache.contains(key)) return pseudo_truth_from_json(cache.at(key));
  }
  const PseudoTruth pt = pseudo_truth(scn, reps, seed, threads);
  if (!cache.is_object()) cache = nlohmann::json::object();
  cache[key] = to_json(pt);
  const std::string tmp = cache_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << cache.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, cache_path);
  return pt;
}

MethodSummary summarize(const std::string& method, const std::vector<ReplicationRecord>& records, double truth,
                        double psi, const std::vector<double>& levels) {
  MethodSummary s;
  s.method = method;
  s.replications = records.size();
  std::vector<double> se, ratio;
  for (const auto& r : records) {
    se.push_back(r.se);
    ratio.push_back(r.se / psi);
  }
  s.se_mean = mean_of(se);
  s.se_ratio = s.se_mean / psi;
  s.mean_ratio = mean_of(ratio);
  for (double level : levels) {
    const double a = 1.0 - level;
    const double z = norm_quantile(1.0 - a / 2.0);
    std::vector<double> wn, wp;
    std::size_t hn = 0, hp = 0;
    for (const auto& r : records) {
      const double lo = r.estimate - z * r.se, hi = r.estimate + z * r.se;
      hn += lo <= truth && truth <= hi;
      wn.push_back(hi - lo);
      std::vector<double> v(r.replicates.data(), r.replicates.data() + r.replicates.size());
      const double plo = quantile_type7(v, a / 2.0), phi = quantile_type7(v, 1.0 - a / 2.0);
      hp += plo <= truth && truth <= phi;
      wp.push_back(phi - plo);
    }
    const double R = records.empty() ? 1.0 : static_cast<double>(records.size());
    s.normal.push_back({level, static_cast<double>(hn) / R, mean_of(wn), sd_of(wn)});
    s.percentile.push_back({level, static_cast<double>(hp) / R, mean_of(wp), sd_of(wp)});
  }
  return s;
}

ExperimentReport run_experiment(const ScenarioDef& scn, const std::vector<BootstrapMethod>& methods,
                                const ExperimentOptions& options) {
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "simlab", "no bootstrap methods given");
  const ModelSpec& spec = scn.assumed;
  for (const auto& m : methods) check_method(spec, m);
  const std::uint64_t seed = options.seed;
  const FrozenDesign design = draw_design(scn, seed);
  const PseudoTruth truth =
      options.truth ? *options.truth : pseudo_truth_cached(scn, options.pt_reps, seed, options.cache_path, options.threads);
  const std::string coef = options.coefficient.empty() ? scn.coefficient : options.coefficient;
  const std::size_t k = truth.index_of(coef);

  auto response = [&](std::size_t rep) {
    Rng rng(derive_seed(seed, {stream::kExperiment, rep}));
    return draw_response(scn, design, rng);
  };
  const Dataset data0 = make_data(design, response(0));

  // Resolve neighborhood sizes and build the pools once: the design is frozen.
  std::vector<BootstrapMethod> resolved = methods;
  std::vector<std::optional<NeighborhoodMap>> pools(methods.size());
  ExperimentReport report;
  for (std::size_t j = 0; j < resolved.size(); ++j) {
    auto& m = resolved[j];
    if (!m.uses_neighborhoods()) {
      report.l_used.push_back(0);
      continue;
    }
    if (m.l == 0) m.l = scn.default_l;
    if (m.l == 0) {
      SizeSelectionOptions so = options.size_selection;
      so.seed = derive_seed(seed, {stream::kSplit, j});
      so.threads = options.threads;
      so.metric = m.metric;
      const ResidualKind r = m.kind == MethodKind::lrb ? m.residual : default_residual(spec);
      m.l = select_size(data0, spec, r, so).final_l;
    }
    report.l_used.push_back(m.l);
    if (m.metric != Metric::linear_predictor) pools[j] = build_neighborhoods(data0, m.l, m.metric, nullptr);
  }

  const std::size_t R = options.replications;
  std::vector<std::vector<std::optional<ReplicationRecord>>> slots(resolved.size(),
                                                                   std::vector<std::optional<ReplicationRecord>>(R));
  parallel_for(R, options.threads, [&](std::size_t rep) {
    const Dataset data = rep == 0 ? data0 : make_data(design, response(rep));
    for (std::size_t j = 0; j < resolved.size(); ++j) {
      const auto& m = resolved[j];
      BootstrapOptions bo;
      bo.B = options.B;
      bo.seed = derive_seed(seed, {stream::kMethod, hash_label(m.label()), rep});
      bo.threads = 1;
      try {
        const Prepared prep = prepare(data, spec, m, bo, pools[j] ? &*pools[j] : nullptr);
        const BootstrapOutcome out = back_transformed(run_prepared(prep, m, bo), prep.design);
        const auto kk = static_cast<Eigen::Index>(k);
        slots[j][rep] = ReplicationRecord{out.estimate(kk), out.se_hat(kk), out.replicates.col(kk)};
      } catch (const Error&) {
      }
    }
  });

  report.scenario = scn.key();
  report.n = data0.n();
  report.B = options.B;
  report.replications = R;
  report.seed = seed;
  report.coefficient = coef;
  report.pseudo_true = truth.beta_dagger(static_cast<Eigen::Index>(k));
  report.psi = truth.psi(static_cast<Eigen::Index>(k));
  report.pt_reps = truth.reps;
  for (std::size_t j = 0; j < resolved.size(); ++j) {
    std::vector<ReplicationRecord> ok;
    for (auto& s : slots[j])
      if (s) ok.push_back(std::move(*s));
    MethodSummary ms = summarize(resolved[j].label(), ok, report.pseudo_true, report.psi, options.levels);
    ms.failed = R - ok.size();
    report.methods.push_back(std::move(ms));
  }
  return report;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json methods = nlohmann::json::array();
  for (std::size_t j = 0; j < r.methods.size(); ++j) {
    const auto& m = r.methods[j];
    auto levels = [](const std::vector<LevelSummary>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& s : v)
        a.push_back({{"level", s.level}, {"coverage", s.coverage}, {"width", s.width}, {"width_se", s.width_se}});
      return a;
    };
    methods.push_back({{"method", m.method},
                       {"l", r.l_used[j]},
                       {"replications", m.replications},
                       {"failed", m.failed},
                       {"se_mean", m.se_mean},
                       {"se_ratio", m.se_ratio},
                       {"mean_of_ratios", m.mean_ratio},
                       {"ci_normal", levels(m.normal)},
                       {"ci_percentile", levels(m.percentile)}});
  }
  return {{"scenario", r.scenario}, {"n", r.n},         {"B", r.B},       {"replications", r.replications},
          {"seed", r.seed},         {"coefficient", r.coefficient},      {"pseudo_true", r.pseudo_true},
          {"psi", r.psi},           {"pt_reps", r.pt_reps}, {"methods", methods}};
}

void write_report_csv(std::ostream& out, const ExperimentReport& r) {
  out << "scenario,n,B,replications,coefficient,pseudo_true,psi,method,l,interval,level,coverage,width,width_se,"
         "se_mean,se_ratio,mean_of_ratios,failed\n";
  out << std::setprecision(10);
  for (std::size_t j = 0; j < r.methods.size(); ++j) {
    const auto& m = r.methods[j];
    for (const auto* block : {&m.normal, &m.percentile}) {
      const char* name = block == &m.normal ? "ci_normal" : "ci_percentile";
      for (const auto& s : *block) {
        out << '"' << r.scenario << "\"," << r.n << ',' << r.B << ',' << r.replications << ',' << r.coefficient << ','
            << r.pseudo_true << ',' << r.psi << ',' << m.method << ',' << r.l_used[j] << ',' << name << ',' << s.level
            << ',' << s.coverage << ',' << s.width << ',' << s.width_se << ',' << m.se_mean << ',' << m.se_ratio << ','
            << m.mean_ratio << ',' << m.failed << '\n';
      }
    }
  }
}

void write_ratios_csv(std::ostream& out, const std::string& param,
                      const std::vector<std::pair<double, ExperimentReport>>& sweep) {
  out << "param,value,method,l,psi,se_mean,se_ratio,mean_of_ratios,failed\n";
  out << std::setprecision(10);
  for (const auto& [value, r] : sweep) {
    for (std::size_t j = 0; j < r.methods.size(); ++j) {
      const auto& m = r.methods[j];
      out << param << ',' << value << ',' << m.method << ',' << r.l_used[j] << ',' << r.psi << ',' << m.se_mean << ','
          << m.se_ratio << ',' << m.mean_ratio << ',' << m.failed << '\n';
    }
  }
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "simlab", "KS distance needs two samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double residual_ks_distance(const ScenarioDef& scn, const PseudoTruth& truth, std::size_t l, std::uint64_t seed,
                            std::size_t rep) {
  const ModelSpec& spec = scn.assumed;
  const FrozenDesign design = draw_design(scn, seed);
  Rng ry(derive_seed(seed, {stream::kExperiment, rep}));
  const Dataset data = make_data(design, draw_response(scn, design, ry));
  const Design dsg = build_design(data, spec);
  const FitResult fit = fit_design(dsg.X, data.y, spec);
  const ResidualSet res = surrogate(fit, data.y, derive_seed(seed, {stream::kResidual, rep}));
  const NeighborhoodMap nb = build_neighborhoods(data, l, Metric::euclidean, nullptr);
  Rng rr(derive_seed(seed, {stream::kReplicate, rep}));
  std::vector<double> boot(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    boot[i] = res.values(static_cast<Eigen::Index>(nb.member(i, rr.index(nb.size_of(i)))));
  }

  // Oracle: a fresh response from the true process, residuals at beta-dagger.
  Rng ro(derive_seed(seed, {stream::kTruth, rep, 1}));
  const Eigen::VectorXd y2 = draw_response(scn, design, ro);
  const FitResult at_truth = fitted_at(dsg.X, spec, truth.beta_dagger_std);
  const ResidualSet oracle = surrogate(at_truth, y2, derive_seed(seed, {stream::kResidual, rep, 1}));
  return ks_two_sample(boot, std::vector<double>(oracle.values.data(), oracle.values.data() + oracle.values.size()));
}

SelectionStudy run_selection_study(const ScenarioDef& scn, const BootstrapMethod& method, std::size_t B,
                                   std::size_t replications, std::uint64_t seed, unsigned threads) {
  if (scn.candidates.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "simlab", "scenario " + scn.name() + " has no candidate set");
  }
  BootstrapMethod m = method;
  if (m.uses_neighborhoods() && m.l == 0) m.l = scn.default_l;
  SelectionStudy st;
  st.method = m.label();
  const FrozenDesign design = draw_design(scn, seed);
  for (std::size_t rep = 0; rep < replications; ++rep) {
    Rng rng(derive_seed(seed, {stream::kExperiment, rep}));
    const Dataset data = make_data(design, draw_response(scn, design, rng));
    BootstrapOptions o;
    o.B = B;
    o.seed = derive_seed(seed, {stream::kMethod, hash_label(m.label()), rep});
    o.threads = threads;
    const SelectionReport r = rank_models(data, scn.candidates, Criterion::L, m, o);
    st.rank_L.push_back(r.rank_L);
    st.cr1_L.push_back(cr1(scn.true_ranks, r.rank_L));
    st.cr2_L.push_back(cr2(scn.true_ranks, r.rank_L));
    if (!r.rank_Gamma.empty()) {
      st.rank_Gamma.push_back(r.rank_Gamma);
      st.cr1_Gamma.push_back(cr1(scn.true_ranks, r.rank_Gamma));
      st.cr2_Gamma.push_back(cr2(scn.true_ranks, r.rank_Gamma));
    }
  }
  return st;
}

}  // namespace lrb
