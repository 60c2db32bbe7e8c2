// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and run
// sizes are pinned here. Pass criterion ids (e.g. "C3 C7") to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lrb/cli.hpp"
#include "lrb/distributions.hpp"
#include "lrb/errors.hpp"
#include "lrb/io.hpp"
#include "lrb/random.hpp"
#include "lrb/simlab.hpp"
#include "lrb/size_selection.hpp"
#include "oracles.hpp"

using namespace lrb;

namespace {

struct Verdict {
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

const std::string kCache = "acceptance_pseudo_truth.json";

const MethodSummary& by_method(const ExperimentReport& r, const std::string& prefix) {
  for (const auto& m : r.methods)
    if (m.method.rfind(prefix, 0) == 0) return m;
  throw std::runtime_error("method " + prefix + " missing from report");
}

ExperimentReport sc1_experiment(std::size_t reps) {
  ExperimentOptions o;
  o.B = 200;
  o.replications = reps;
  o.pt_reps = 10000;
  o.seed = 2024;
  o.cache_path = kCache;
  return run_experiment(make_scenario(ScenarioId::SC1_probit, 2000),
                        {BootstrapMethod::lrb(ResidualKind::surrogate, 10), BootstrapMethod::of(MethodKind::parametric)},
                        o);
}

// ---- criteria ----

Verdict c1_se_ratios() {
  const auto rep = sc1_experiment(50);
  const double lrb = by_method(rep, "lrb").se_ratio, par = by_method(rep, "parametric").se_ratio;
  return {lrb >= 0.85 && lrb <= 1.15 && par > 4,
          false,
          "lrb-surrogate ratio " + fmt(lrb) + " (need [0.85, 1.15]), parametric " + fmt(par) + " (need > 4); psi " +
              fmt(rep.psi)};
}

Verdict c2_coverage() {
  const auto rep = sc1_experiment(100);
  const double lrb = by_method(rep, "lrb").normal[0].coverage, par = by_method(rep, "parametric").normal[0].coverage;
  return {lrb >= 0.88 && lrb <= 1.0 && par >= 0.99,
          false,
          "95% normal-interval coverage: lrb-surrogate " + fmt(lrb) + " (need [0.88, 1]), parametric " + fmt(par) +
              " (need >= 0.99)"};
}

Verdict c3_beta2_sweep() {
  ExperimentOptions o;
  o.B = 200;
  o.replications = 20;
  o.pt_reps = 2000;
  o.seed = 33;
  o.cache_path = kCache;
  const std::vector<BootstrapMethod> methods{BootstrapMethod::lrb(ResidualKind::surrogate, 10),
                                             BootstrapMethod::of(MethodKind::parametric)};
  bool pass = true;
  std::string detail;
  for (double b2 : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    detail += "beta2=" + fmt(b2) + ": ";
    try {
      const auto rep = run_experiment(make_scenario(ScenarioId::SC1_probit, 2000, {{"beta2", b2}}), methods, o);
      const double lrb = by_method(rep, "lrb").se_ratio, par = by_method(rep, "parametric").se_ratio;
      detail += "lrb " + fmt(lrb, 3) + " par " + fmt(par, 3);
      if (b2 == 0.0) pass = pass && lrb >= 0.85 && lrb <= 1.15 && par >= 0.85 && par <= 1.15;
      if (std::abs(b2) == 2.0) pass = pass && lrb >= 0.8 && lrb <= 1.2 && par > 4;
    } catch (const Error& e) {
      // (12, 2, b2 > 0) keeps the linear predictor above 11: every response is 1
      // and the assumed model has no finite QMLE.
      detail += std::string("not estimable (") + std::string(error_name(e.code())) + ")";
      if (std::abs(b2) == 2.0 || b2 == 0.0) pass = false;
    }
    detail += b2 < 2.0 ? "; " : "";
  }
  return {pass, false, detail};
}

Verdict c4_sc11() {
  ExperimentOptions o;
  o.B = 200;
  o.replications = 50;
  o.pt_reps = 10000;
  o.seed = 44;
  o.cache_path = kCache;
  const auto rep = run_experiment(make_scenario(ScenarioId::SC11, 2000),
                                  {BootstrapMethod::lrb(ResidualKind::pearson, 0), BootstrapMethod::of(MethodKind::parametric)},
                                  o);
  const double lrb = by_method(rep, "lrb").se_ratio, par = by_method(rep, "parametric").se_ratio;
  return {lrb >= 0.85 && lrb <= 1.15 && par < 0.85,
          false,
          "lrb-pearson(l=" + std::to_string(rep.l_used[0]) + ") ratio " + fmt(lrb) + " (need [0.85, 1.15]), parametric " +
              fmt(par) + " (need < 0.85)"};
}

double mean_cr1_L(std::uint64_t seed) {
  const auto study = run_selection_study(make_scenario(ScenarioId::CaseII, 2000),
                                         BootstrapMethod::lrb(ResidualKind::surrogate, 10), 200, 20, seed);
  double m = 0;
  for (double v : study.cr1_L) m += v;
  return m / static_cast<double>(study.cr1_L.size());
}

Verdict c5_case2() {
  // The verdict uses the pinned design seed; other designs are reported for context only.
  const double m = mean_cr1_L(55);
  std::string others;
  for (std::uint64_t s : {56, 57, 58}) others += " " + fmt(mean_cr1_L(s), 3);
  return {m >= 0.9, false,
          "lrb-surrogate mean CR1(L) " + fmt(m) + " over 20 replications (need >= 0.9); other designs:" + others};
}

SizeSelectionTrace sc1_size_trace(std::uint64_t seed) {
  const ScenarioDef s = make_scenario(ScenarioId::SC1_probit, 2000);
  SizeSelectionOptions o;
  o.seed = seed;
  return select_size(generate(s, seed), s.assumed, ResidualKind::surrogate, o);
}

Verdict c6_size_selection() {
  // The verdict uses the pinned draw; other draws are reported for context only.
  const auto trace = sc1_size_trace(66);
  const bool ok = trace.final_l >= 3 && trace.final_l <= 8 && trace.converged && trace.iterations.size() <= 20;
  std::string others;
  for (std::uint64_t s : {67, 68, 69}) {
    const auto t = sc1_size_trace(s);
    others += " " + std::to_string(t.final_l) + (t.converged ? "" : "(not converged)");
  }
  return {ok, false,
          "l-hat " + std::to_string(trace.final_l) + " after " + std::to_string(trace.iterations.size()) +
              " iterations, converged " + (trace.converged ? "yes" : "no") +
              " (need l in [3, 8] within 20); other draws:" + others};
}

Verdict c7_reduction() {
  struct Case {
    ModelSpec spec;
    Dataset data;
  };
  Rng r(77);
  const int n = 120;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd yb(n), yg(n), yp(n), yo(n), yga(n);
  for (int i = 0; i < n; ++i) {
    const double x = r.uniform() * 4 - 2;
    X(i, 0) = x;
    yb(i) = r.uniform() < norm_cdf(0.3 + x - 0.5 * x * x) ? 1 : 0;
    yg(i) = 1 + x + x * x * 0.5 + r.normal();
    yp(i) = r.poisson(std::exp(0.5 + 0.4 * x));
    yga(i) = std::exp(0.2 * x) * r.exponential();
    const double z = x + r.normal();
    yo(i) = z < -0.5 ? 1 : (z < 0.7 ? 2 : 3);
  }
  const std::vector<ColumnMeta> cols{ColumnMeta{"x"}};
  const std::vector<Term> t{Term::raw("x")};
  Dataset dor = make_dataset(yo, X, cols);
  dor.response_kind = ResponseKind::ordinal;
  const std::vector<Case> cases{{make_spec(Family::binomial, Link::probit, t), make_dataset(yb, X, cols)},
                                {make_spec(Family::binomial, Link::logit, t), make_dataset(yb, X, cols)},
                                {make_spec(Family::gaussian, Link::identity, t), make_dataset(yg, X, cols)},
                                {make_spec(Family::poisson, Link::log, t), make_dataset(yp, X, cols)},
                                {make_spec(Family::gamma, Link::inverse, t), make_dataset(yga, X, cols)},
                                {make_ordinal_spec(3, t), dor}};
  BootstrapOptions o;
  o.B = 60;
  o.seed = 7;
  int checked = 0, identical = 0;
  std::string bad;
  for (const auto& c : cases) {
    for (auto k : {ResidualKind::surrogate, ResidualKind::sbs, ResidualKind::pearson, ResidualKind::raw}) {
      if (!residual_supported(c.spec.family, k)) continue;
      ++checked;
      const auto a = run(c.data, c.spec, BootstrapMethod::lrb(k, n), o);
      const auto b = run(c.data, c.spec, BootstrapMethod::classical(k), o);
      const bool same = a.replicates.rows() == b.replicates.rows() && a.replicates == b.replicates &&
                        a.replicate_ids == b.replicate_ids;
      identical += same;
      if (!same) bad += " " + c.spec.describe() + "/" + std::string(to_string(k));
    }
  }
  return {identical == checked, false,
          std::to_string(identical) + " of " + std::to_string(checked) +
              " (family, residual) pairs bit-identical at l = n" + (bad.empty() ? "" : "; differ:" + bad)};
}

Verdict c8_oracle() {
  Rng r(88);
  double worst = 0;
  std::string worst_case;
  int instances = 0;
  const std::vector<std::string> families{"probit", "logit", "poisson", "gamma", "gaussian", "ordinal"};
  for (const auto& fam : families) {
    int done = 0;
    while (done < 10) {
      const int n = 30 + static_cast<int>(r.index(21));
      const int q = 1 + static_cast<int>(r.index(2));  // covariates; design has <= 3 columns
      Eigen::MatrixXd X(n, q);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) X(i, j) = r.uniform() * 2 - 1;
      Eigen::VectorXd y(n);
      Eigen::VectorXd b(q);
      for (int j = 0; j < q; ++j) b(j) = r.uniform() * 1.6 - 0.8;
      for (int i = 0; i < n; ++i) {
        const double e = X.row(i).dot(b);
        if (fam == "probit") y(i) = r.uniform() < norm_cdf(0.2 + e) ? 1 : 0;
        if (fam == "logit") y(i) = r.uniform() < 1 / (1 + std::exp(-0.2 - e)) ? 1 : 0;
        if (fam == "poisson") y(i) = r.poisson(std::exp(0.8 + e));
        if (fam == "gamma") y(i) = (1 / (2.0 + e)) * (r.exponential() + r.exponential()) / 2;
        if (fam == "gaussian") y(i) = 1 + e + r.normal();
        if (fam == "ordinal") {
          const double z = e + r.normal();
          y(i) = z < -0.4 ? 1 : (z < 0.4 ? 2 : 3);
        }
      }
      std::vector<ColumnMeta> cols;
      std::vector<Term> terms;
      for (int j = 0; j < q; ++j) {
        cols.push_back(ColumnMeta{"x" + std::to_string(j)});
        terms.push_back(Term::raw("x" + std::to_string(j)));
      }
      Dataset d = make_dataset(y, X, cols, false);
      ModelSpec spec;
      if (fam == "probit") spec = make_spec(Family::binomial, Link::probit, terms);
      if (fam == "logit") spec = make_spec(Family::binomial, Link::logit, terms);
      if (fam == "poisson") spec = make_spec(Family::poisson, Link::log, terms);
      if (fam == "gamma") spec = make_spec(Family::gamma, Link::inverse, terms);
      if (fam == "gaussian") spec = make_spec(Family::gaussian, Link::identity, terms);
      if (fam == "ordinal") {
        spec = make_ordinal_spec(3, terms);
        d.response_kind = ResponseKind::ordinal;
      }
      FitResult fit;
      try {
        fit = fit_model(d, spec);
      } catch (const Error&) {
        continue;  // separated or empty-category draw; redraw
      }
      Eigen::MatrixXd D(n, q + 1);
      D << Eigen::VectorXd::Ones(n), X;
      std::function<double(const Eigen::VectorXd&)> f;
      Eigen::VectorXd start = Eigen::VectorXd::Zero(q + 1);
      if (fam == "probit") f = [&](const Eigen::VectorXd& p) { return oracle::probit_loglik(D, y, p); };
      if (fam == "logit") f = [&](const Eigen::VectorXd& p) { return oracle::logit_loglik(D, y, p); };
      if (fam == "poisson") f = [&](const Eigen::VectorXd& p) { return oracle::poisson_loglik(D, y, p); };
      if (fam == "gamma") {
        f = [&](const Eigen::VectorXd& p) { return oracle::gamma_loglik(D, y, p); };
        start(0) = 1 / y.mean();
      }
      if (fam == "gaussian") f = [&](const Eigen::VectorXd& p) { return -(y - D * p).squaredNorm(); };
      if (fam == "ordinal") {
        f = [&](const Eigen::VectorXd& p) { return oracle::ordinal_loglik(X, y, 3, p); };
        start = Eigen::VectorXd::Zero(q + 2);
        start(q) = -0.5;
        start(q + 1) = 0.5;
      }
      const Eigen::VectorXd nm = oracle::nelder_mead_max(f, start, 0.5, 12);
      const double diff = (fit.parameters() - nm).cwiseAbs().maxCoeff();
      if (diff > worst) {
        worst = diff;
        worst_case = fam + " n=" + std::to_string(n) + " q=" + std::to_string(q);
      }
      ++done;
      ++instances;
    }
  }
  return {worst < 1e-6, false,
          std::to_string(instances) + " instances over 6 families, max |fit - Nelder-Mead| " + fmt(worst, 3) + " (" +
              worst_case + "; need < 1e-6)"};
}

Verdict c9_ks() {
  auto median_ks = [](std::size_t n) {
    const ScenarioDef s = make_scenario(ScenarioId::SC1_probit, n);
    const PseudoTruth pt = pseudo_truth_cached(s, 2000, 99, kCache);
    const auto l = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-9));
    std::vector<double> d;
    for (std::size_t rep = 0; rep < 10; ++rep) d.push_back(residual_ks_distance(s, pt, l, 99, rep));
    std::sort(d.begin(), d.end());
    return std::make_pair(0.5 * (d[4] + d[5]), l);
  };
  const auto [d500, l500] = median_ks(500);
  const auto [d2000, l2000] = median_ks(2000);
  return {d2000 < d500, false,
          "median KS n=2000 (l=" + std::to_string(l2000) + ") " + fmt(d2000) + " vs n=500 (l=" + std::to_string(l500) +
              ") " + fmt(d500)};
}

int run_tool(const std::vector<std::string>& args, std::string& err_text) {
  std::vector<const char*> argv{"lrb"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  err_text = err.str();
  return code;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict c10_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lrb_acceptance_cli";
  fs::create_directories(dir);
  const std::string csv = (dir / "case2.csv").string();
  {
    std::ofstream f(csv, std::ios::binary);
    emit_csv(f, generate(make_scenario(ScenarioId::CaseII, 400), 10));
  }
  const std::vector<std::string> data{"-i", csv, "--response", "y"};
  std::vector<std::pair<std::string, std::vector<std::string>>> pipelines{
      {"fit", {"fit", "--format", "csv"}},
      {"bootstrap", {"bootstrap", "--method", "lrb", "--residual", "surrogate", "--l", "auto", "--B", "100", "--K",
                     "5", "--B-inner", "40", "--B-full", "40"}},
      {"bootstrap-csv", {"bootstrap", "--method", "pairwise", "--B", "100", "--format", "csv"}},
      {"select-l", {"select-l", "--K", "5", "--B-inner", "40", "--B-full", "40", "--format", "csv"}},
      {"select-model", {"select-model", "--model", "a=binomial/probit:x1+x2", "--model",
                        "b=binomial/logit:x1+x2+x1*x2", "--B", "100", "--split-half"}},
      {"simulate", {"simulate", "--scenario", "SC1_probit", "--methods", "lrb-surrogate,parametric", "--n", "400",
                    "--B", "50", "--reps", "6", "--pt-reps", "200", "--format", "csv"}},
  };
  int same = 0;
  std::string bad;
  for (auto& [name, args] : pipelines) {
    if (args[0] != "simulate") args.insert(args.begin() + 1, data.begin(), data.end());
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "4"}) {
      const std::string path = (dir / (name + "_t" + threads + ".out")).string();
      auto a = args;
      a.insert(a.end(), {"--seed", "7", "--threads", threads, "-o", path});
      std::string err;
      const int code = run_tool(a, err);
      outputs.push_back(code == 0 ? slurp(path) : "exit " + std::to_string(code) + ": " + err);
    }
    const bool ok = outputs[0] == outputs[1] && outputs[0].rfind("exit ", 0) != 0 && !outputs[0].empty();
    same += ok;
    if (!ok) bad += " " + name + (outputs[0].rfind("exit ", 0) == 0 ? " (" + outputs[0].substr(0, 80) + ")" : "");
  }
  return {same == static_cast<int>(pipelines.size()), false,
          std::to_string(same) + " of " + std::to_string(pipelines.size()) +
              " pipelines byte-identical with --threads 1 and 4" + (bad.empty() ? "" : "; failing:" + bad)};
}

Verdict c11_titanic() {
  const char* path = std::getenv("LRB_TITANIC_CSV");
  if (!path || !std::filesystem::exists(path)) return {false, true, "LRB_TITANIC_CSV not set; external data absent"};
  IngestConfig ic;
  ic.response = "Survived";
  ic.predictors = {{"Sex", ColumnKind::categorical}, {"Age", ColumnKind::continuous}, {"Fare", ColumnKind::continuous}};
  IngestReport rep;
  const Dataset d = ingest(path, ic, &rep);
  const auto spec = make_spec(Family::binomial, Link::probit,
                              {Term::raw("Sex[male]"), Term::raw("Age"), Term::raw("Fare")});
  const FitResult fit = fit_model(d, spec);
  // Reference values with Age and Fare standardized and Sex coded 0/1.
  const Eigen::Vector4d ref(0.651, -1.434, -0.085, 0.389);
  const double dev = (fit.beta - ref).cwiseAbs().maxCoeff();

  BootstrapOptions o;
  o.B = 2000;
  o.seed = 11;
  SizeSelectionOptions so;
  so.seed = 11;
  const std::size_t l = select_size(d, spec, ResidualKind::surrogate, so).final_l;
  const auto lrb = run(d, spec, BootstrapMethod::lrb(ResidualKind::surrogate, l), o);
  const auto par = run(d, spec, BootstrapMethod::of(MethodKind::parametric), o);
  const double p_lrb = lrb.p_two_sided(2), p_par = par.p_two_sided(2);
  return {dev < 0.05 && p_lrb < 0.05 && p_par > 0.10, false,
          "n=" + std::to_string(d.n()) + " (dropped " + std::to_string(rep.rows_dropped) + "), max coefficient gap " +
              fmt(dev) + " (need < 0.05), age p-value lrb(l=" + std::to_string(l) + ") " + fmt(p_lrb) +
              " (need < 0.05), parametric " + fmt(p_par) + " (need > 0.10)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"C1 sc1-se-ratios", c1_se_ratios},     {"C2 sc1-coverage", c2_coverage},
      {"C3 beta2-sweep", c3_beta2_sweep},     {"C4 sc11-heteroscedastic", c4_sc11},
      {"C5 case2-rank-accuracy", c5_case2},   {"C6 neighborhood-size", c6_size_selection},
      {"C7 reduction-to-classical", c7_reduction}, {"C8 optimizer-oracle", c8_oracle},
      {"C9 residual-ks-shrinks", c9_ks},      {"C10 cli-determinism", c10_determinism},
      {"C11 titanic", c11_titanic},
  };
  std::set<std::string> only;
  for (int k = 1; k < argc; ++k) only.insert(argv[k]);
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const std::string id = name.substr(0, name.find(' '));
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = v.skipped ? "SKIP" : (v.pass ? "PASS" : "FAIL");
    failed += !v.pass && !v.skipped;
    std::cout << tag << ' ' << name << ": " << v.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria met" : std::to_string(failed) + " criteria not met") << std::endl;
  return failed == 0 ? 0 : 1;
}
