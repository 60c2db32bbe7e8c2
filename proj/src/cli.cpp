#include "lrb/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrb/errors.hpp"
#include "lrb/io.hpp"
#include "lrb/random.hpp"
#include "lrb/simlab.hpp"
#include "lrb/size_selection.hpp"

namespace lrb {

namespace {

using nlohmann::json;

constexpr const char* kCommands[] = {"fit", "bootstrap", "select-l", "select-model", "simulate"};

/// Settings the user got wrong; reported like a CLI11 parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string normalize(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

template <class F>
auto usage_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::ParseError ||
        e.code() == ErrorCode::UnknownScenario)
      throw UsageError(e.what());
    throw;
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double_or_usage(const std::string& text, const std::string& what) {
  const auto v = parse_number(text);
  if (!v) throw UsageError(what + ": '" + text + "' is not a number");
  return *v;
}

// ---- option registration ----

void add_common(CLI::App& app, RunConfig& c) {
  app.add_option("--seed", c.seed, "Master seed");
  app.add_option("--threads", c.threads, "Worker threads (0: LRB_THREADS or all cores)");
  app.add_option("-o,--output", c.output_path, "Output file (default: standard output)");
  app.add_option("--format", c.output_format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

void add_data(CLI::App& app, RunConfig& c) {
  app.add_option("-i,--input", c.input_path, "CSV file with a header row")->required();
  app.add_option("--response", c.response, "Response column")->required();
  app.add_option("--predictors", c.predictors, "Predictor columns, optionally name:categorical")->delimiter(',');
  app.add_option("--terms", c.terms, "Model terms such as x, x^2, x1*x2, exp(x)")->delimiter(',');
  app.add_option("--family", c.family, "Assumed family")
      ->check(CLI::IsMember({"binomial", "poisson", "gamma", "gaussian", "ordinal"}));
  app.add_option("--link", c.link, "Link function (default: the family's)")
      ->check(CLI::IsMember({"probit", "logit", "log", "inverse", "identity"}));
  app.add_option("--categories", c.categories, "Number of ordinal categories (0: largest response)");
}

void add_method(CLI::App& app, RunConfig& c, bool with_l) {
  app.add_option("--method", c.method, "Bootstrap method");
  app.add_option("--residual", c.residual, "Residual kind for residual methods")
      ->check(CLI::IsMember({"surrogate", "pearson", "sbs", "raw"}));
  if (with_l) app.add_option("--l", c.l, "Neighborhood size or 'auto'");
  app.add_option("--metric", c.metric, "Neighborhood metric")
      ->check(CLI::IsMember({"euclidean", "mahalanobis", "linear_predictor"}));
  app.add_option("--B", c.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
}

void add_size_selection(CLI::App& app, RunConfig& c) {
  app.add_option("--grid", c.grid, "Candidate subsample sizes")->delimiter(',');
  app.add_option("--K", c.K, "Subsamples")->check(CLI::PositiveNumber);
  app.add_option("--subsample", c.m, "Subsample size (0: ceil(0.9 n))");
  app.add_option("--B-inner", c.B_inner, "Replicates per subsample fit")->check(CLI::PositiveNumber);
  app.add_option("--B-full", c.B_full, "Replicates for the full-data estimate")->check(CLI::PositiveNumber);
  app.add_option("--delta", c.delta, "Stopping threshold on the size change");
  app.add_option("--max-iterations", c.max_iterations, "Iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--coefficient", c.coefficient, "Design column whose standard error drives the choice");
}

void build_options(CLI::App& app, RunConfig& c) {
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key=value file supplying option defaults");
  app.allow_config_extras(CLI::config_extras_mode::error);
  add_common(app, c);
  const std::string& cmd = c.command;
  if (cmd == "fit") {
    add_data(app, c);
  } else if (cmd == "bootstrap") {
    add_data(app, c);
    add_method(app, c, true);
    app.add_option("--alpha", c.alpha, "Interval level is 1 - alpha")->check(CLI::Range(1e-6, 0.999));
    app.add_flag("--replicates", c.include_replicates, "Embed the replicate matrix");
    add_size_selection(app, c);
  } else if (cmd == "select-l") {
    add_data(app, c);
    app.add_option("--residual", c.residual, "Residual kind")
        ->check(CLI::IsMember({"surrogate", "pearson", "sbs", "raw"}));
    app.add_option("--metric", c.metric, "Neighborhood metric")
        ->check(CLI::IsMember({"euclidean", "mahalanobis", "linear_predictor"}));
    add_size_selection(app, c);
  } else if (cmd == "select-model") {
    app.add_option("-i,--input", c.input_path, "CSV file with a header row")->required();
    app.add_option("--response", c.response, "Response column")->required();
    app.add_option("--predictors", c.predictors, "Predictor columns, optionally name:categorical")
        ->delimiter(',');
    app.add_option("--categories", c.categories, "Number of ordinal categories (0: largest response)");
    app.add_option("--model", c.models, "Candidate label=family/link:term+term (repeatable)")->required();
    app.add_option("--criterion", c.criterion, "Ranking criterion")->check(CLI::IsMember({"L", "Gamma"}));
    app.add_flag("--split-half", c.split_half, "Select on a seeded random half of the rows");
    add_method(app, c, true);
  } else if (cmd == "simulate") {
    app.add_option("--scenario", c.scenario, "Scenario name")->required();
    app.add_option("--methods", c.methods, "Method tokens, e.g. lrb-surrogate,parametric")
        ->delimiter(',')
        ->required();
    app.add_option("--n", c.n, "Sample size (0: the scenario's)");
    app.add_option("--reps", c.reps, "Monte Carlo replications")->check(CLI::PositiveNumber);
    app.add_option("--B", c.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
    app.add_option("--pt-reps", c.pt_reps, "Replications for the pseudo-true values")->check(CLI::PositiveNumber);
    app.add_option("--param", c.params, "Scenario parameter override key=value (repeatable)");
    app.add_option("--sweep", c.sweep, "Parameter sweep key=v1,v2,...");
    app.add_option("--levels", c.levels, "Interval levels")->delimiter(',');
    app.add_option("--cache", c.cache_path, "Pseudo-truth cache file");
    add_size_selection(app, c);
  }
}

// ---- provenance ----

json provenance(const CLI::App& app, const RunConfig& c) {
  json cfg = json::object();
  for (const CLI::Option* o : app.get_options()) {
    const auto names = o->get_lnames();
    if (names.empty()) continue;
    const std::string& key = names.front();
    // The thread count cannot change results; output and config paths are not settings.
    if (key == "threads" || key == "output" || key == "config" || key == "help") continue;
    std::string value;
    if (o->count() > 0) {
      const auto& r = o->results();
      for (std::size_t k = 0; k < r.size(); ++k) value += (k ? "," : "") + r[k];
    } else {
      value = o->get_default_str();
      if (value == "{}") value.clear();
    }
    cfg[key] = value;
  }
  return {{"tool", kToolName}, {"version", kToolVersion}, {"command", c.command}, {"seed", c.seed}, {"config", cfg}};
}

void write_csv_provenance(std::ostream& out, const json& prov) {
  out << "# tool=" << prov["tool"].get<std::string>() << " version=" << prov["version"].get<std::string>()
      << " command=" << prov["command"].get<std::string>() << " seed=" << prov["seed"].get<std::uint64_t>() << '\n';
  for (const auto& [k, v] : prov["config"].items()) out << "# " << k << '=' << v.get<std::string>() << '\n';
}

void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (c.output_path.empty() || c.output_path == "-") {
    out << text;
    return;
  }
  const std::string tmp = c.output_path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cli", "cannot write '" + c.output_path + "'");
    f << text;
  }
  std::rename(tmp.c_str(), c.output_path.c_str());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- shared pipeline pieces ----

struct LoadedData {
  Dataset data;
  IngestReport report;
};

LoadedData load(const RunConfig& c, bool ordinal) {
  IngestConfig ic;
  ic.response = c.response;
  ic.response_kind = ordinal ? ResponseKind::ordinal : ResponseKind::real;
  for (const auto& p : c.predictors) {
    const auto colon = p.rfind(':');
    PredictorColumn pc{p, std::nullopt};
    if (colon != std::string::npos) {
      const std::string kind = p.substr(colon + 1);
      pc.name = p.substr(0, colon);
      if (kind == "categorical") {
        pc.kind = ColumnKind::categorical;
      } else if (kind == "continuous") {
        pc.kind = ColumnKind::continuous;
      } else {
        throw UsageError("--predictors: unknown column kind '" + kind + "'");
      }
    }
    ic.predictors.push_back(pc);
  }
  LoadedData out;
  out.data = ingest(c.input_path, ic, &out.report);
  return out;
}

int categories_of(const Dataset& d, int requested) {
  return requested > 0 ? requested : static_cast<int>(d.y.maxCoeff());
}

ModelSpec model_from(const RunConfig& c, const Dataset& d) {
  std::vector<Term> terms;
  if (c.terms.empty()) {
    std::vector<std::string> seen;
    for (const auto& m : d.columns) {
      const std::string name = m.source.empty() ? m.name : m.source;
      if (std::find(seen.begin(), seen.end(), name) == seen.end()) seen.push_back(name);
    }
    for (const auto& s : seen) terms.push_back(Term::raw(s));
  } else {
    for (const auto& t : c.terms) terms.push_back(usage_guard([&] { return Term::parse(t); }));
  }
  terms = resolve_terms(d, terms);
  const Family fam = parse_family(c.family);
  if (fam == Family::ordinal) return make_ordinal_spec(categories_of(d, c.categories), terms);
  const Link link = c.link.empty() ? default_link(fam) : parse_link(c.link);
  ModelSpec s = make_spec(fam, link, terms);
  usage_guard([&] {
    s.validate();
    return 0;
  });
  return s;
}

std::size_t parse_l(const std::string& l) {
  if (l == "auto") return 0;
  const auto v = parse_number(l);
  if (!v || *v < 1 || *v != std::floor(*v)) throw UsageError("--l: expected a positive integer or 'auto'");
  return static_cast<std::size_t>(*v);
}

BootstrapMethod method_from(const RunConfig& c) {
  BootstrapMethod m = usage_guard([&] { return parse_method_token(c.method); });
  if (m.uses_residuals()) m.residual = parse_residual_kind(c.residual);
  if (m.uses_neighborhoods()) m.l = parse_l(c.l);
  m.metric = parse_metric(c.metric);
  return m;
}

SizeSelectionOptions size_options(const RunConfig& c, const Dataset& d, const ModelSpec& spec) {
  SizeSelectionOptions o;
  o.grid = c.grid;
  o.K = c.K;
  o.m = c.m;
  o.B_inner = c.B_inner;
  o.B_full = c.B_full;
  o.delta = c.delta;
  o.max_iterations = c.max_iterations;
  o.seed = derive_seed(c.seed, {stream::kSplit});
  o.threads = c.threads;
  o.metric = parse_metric(c.metric);
  if (!c.coefficient.empty()) {
    const Design design = build_design(d, spec);
    const auto it = std::find(design.names.begin(), design.names.end(), c.coefficient);
    if (it == design.names.end()) throw UsageError("--coefficient: no design column '" + c.coefficient + "'");
    o.coefficient = static_cast<int>(it - design.names.begin());
  }
  return o;
}

json coefficient_table(const std::vector<std::string>& names, const Eigen::VectorXd& std_values,
                       const Eigen::VectorXd& raw_values) {
  json rows = json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    rows.push_back({{"name", names[k]}, {"standardized", std_values(i)}, {"raw", raw_values(i)}});
  }
  return rows;
}

json data_summary(const LoadedData& ld) {
  return {{"rows_read", ld.report.rows_read},
          {"rows_dropped", ld.report.rows_dropped},
          {"n", ld.data.n()},
          {"columns", ld.report.columns}};
}

// ---- subcommands ----

std::string cmd_fit(const RunConfig& c, const json& prov) {
  const bool ordinal = c.family == "ordinal";
  const LoadedData ld = load(c, ordinal);
  const ModelSpec spec = model_from(c, ld.data);
  const Design design = build_design(ld.data, spec);
  const FitResult fit = fit_model(ld.data, spec);
  const RawCoefficients raw = back_transform(design, fit.beta, fit.cutpoints);

  std::vector<std::string> names = design.names;
  Eigen::VectorXd sv = fit.parameters();
  Eigen::VectorXd rv(sv.size());
  rv << raw.beta, raw.cutpoints;
  for (Eigen::Index j = 0; j < fit.cutpoints.size(); ++j) names.push_back("cut" + std::to_string(j + 1));

  if (c.output_format == "csv") {
    std::ostringstream s;
    write_csv_provenance(s, prov);
    s << "# model=" << spec.describe() << " n=" << ld.data.n() << " rows_dropped=" << ld.report.rows_dropped
      << " loglik=" << fit.loglik << " converged=" << (fit.converged ? 1 : 0) << '\n';
    s << "coefficient,standardized,raw\n";
    s.precision(17);
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      s << names[k] << ',' << sv(i) << ',' << rv(i) << '\n';
    }
    return s.str();
  }
  json j{{"provenance", prov},
         {"data", data_summary(ld)},
         {"model", spec.describe()},
         {"coefficients", coefficient_table(names, sv, rv)},
         {"loglik", fit.loglik},
         {"iterations", fit.iterations},
         {"converged", fit.converged},
         {"grad_norm", fit.grad_norm}};
  return dump(j);
}

std::string cmd_bootstrap(const RunConfig& c, const json& prov) {
  const bool ordinal = c.family == "ordinal";
  const LoadedData ld = load(c, ordinal);
  const ModelSpec spec = model_from(c, ld.data);
  BootstrapMethod method = method_from(c);

  json trace_json;
  if (method.uses_neighborhoods() && method.l == 0) {
    if (method.kind != MethodKind::lrb) throw UsageError("--l auto needs --method lrb");
    const SizeSelectionTrace trace = select_size(ld.data, spec, method.residual, size_options(c, ld.data, spec));
    method.l = trace.final_l;
    trace_json = to_json(trace);
  }
  BootstrapOptions o;
  o.B = c.B;
  o.alpha = c.alpha;
  o.seed = c.seed;
  o.threads = c.threads;
  const BootstrapOutcome outcome = run(ld.data, spec, method, o);
  const BootstrapOutcome raw = back_transformed(outcome, build_design(ld.data, spec));

  if (c.output_format == "csv") {
    std::ostringstream s;
    write_csv_provenance(s, prov);
    s << "# model=" << spec.describe() << " method=" << method.label() << " n=" << ld.data.n()
      << " rows_dropped=" << ld.report.rows_dropped << " failed=" << outcome.n_failed << '\n';
    std::ostringstream a, b;
    write_summary_csv(a, outcome);
    write_summary_csv(b, raw);
    const auto la = split(a.str(), '\n'), lb = split(b.str(), '\n');
    s << "scale," << la[0] << '\n';
    for (std::size_t k = 1; k < la.size(); ++k)
      if (!la[k].empty()) s << "standardized," << la[k] << '\n';
    for (std::size_t k = 1; k < lb.size(); ++k)
      if (!lb[k].empty()) s << "raw," << lb[k] << '\n';
    return s.str();
  }
  json j{{"provenance", prov},
         {"data", data_summary(ld)},
         {"outcome", to_json(outcome, c.include_replicates)},
         {"raw", to_json(raw, false)}};
  if (!trace_json.is_null()) j["size_selection"] = trace_json;
  return dump(j);
}

std::string cmd_select_l(const RunConfig& c, const json& prov) {
  const bool ordinal = c.family == "ordinal";
  const LoadedData ld = load(c, ordinal);
  const ModelSpec spec = model_from(c, ld.data);
  const ResidualKind residual = parse_residual_kind(c.residual);
  const SizeSelectionTrace trace = select_size(ld.data, spec, residual, size_options(c, ld.data, spec));
  if (c.output_format == "csv") {
    std::ostringstream s;
    write_csv_provenance(s, prov);
    s << "# model=" << spec.describe() << " final_l=" << trace.final_l << " converged=" << (trace.converged ? 1 : 0)
      << '\n';
    s.precision(17);
    s << "iteration,l,psi,q_star,next_l,delta";
    for (auto g : trace.grid) s << ",mse_l" << g;
    s << '\n';
    for (std::size_t t = 0; t < trace.iterations.size(); ++t) {
      const auto& it = trace.iterations[t];
      s << t + 1 << ',' << it.l << ',' << it.psi << ',' << trace.grid[it.q_star] << ',' << it.next_l << ','
        << it.delta;
      for (double v : it.mse) s << ',' << v;
      s << '\n';
    }
    return s.str();
  }
  json j{{"provenance", prov}, {"data", data_summary(ld)}, {"model", spec.describe()}, {"size_selection", to_json(trace)}};
  return dump(j);
}

std::string cmd_select_model(const RunConfig& c, const json& prov) {
  std::vector<std::string> specs = c.models;
  bool ordinal = false;
  for (const auto& m : specs) ordinal = ordinal || m.find("=ordinal") != std::string::npos;
  LoadedData ld = load(c, ordinal);
  std::vector<Candidate> cands;
  for (const auto& m : specs) {
    Candidate cand = usage_guard([&] { return parse_candidate(m, categories_of(ld.data, c.categories)); });
    cand.spec.terms = resolve_terms(ld.data, cand.spec.terms);
    cands.push_back(std::move(cand));
  }
  if (cands.size() < 2) throw UsageError("--model: give at least two candidates");
  Dataset data = ld.data;
  std::size_t used = data.n();
  if (c.split_half) {
    std::vector<std::size_t> rows(data.n());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(derive_seed(c.seed, {stream::kSplit}));
    for (std::size_t k = rows.size(); k > 1; --k) std::swap(rows[k - 1], rows[rng.index(k)]);
    rows.resize(data.n() / 2);
    std::sort(rows.begin(), rows.end());
    data = data.subset(rows);
    used = rows.size();
  }
  BootstrapMethod method = method_from(c);
  if (method.uses_neighborhoods() && method.l == 0) {
    if (method.kind != MethodKind::lrb) throw UsageError("--l auto needs --method lrb");
    SizeSelectionOptions so;
    so.seed = derive_seed(c.seed, {stream::kSplit, 1});
    so.threads = c.threads;
    so.metric = method.metric;
    method.l = select_size(data, cands.front().spec, method.residual, so).final_l;
  }
  BootstrapOptions o;
  o.B = c.B;
  o.seed = c.seed;
  o.threads = c.threads;
  const SelectionReport rep = rank_models(data, cands, parse_criterion(c.criterion), method, o);

  if (c.output_format == "csv") {
    std::ostringstream s;
    write_csv_provenance(s, prov);
    s << "# method=" << rep.method << " rows_used=" << used << " chosen_L=" << rep.chosen_L
      << " chosen_Gamma=" << rep.chosen_Gamma << '\n';
    s.precision(17);
    s << "label,model,L,Gamma,rank_L,rank_Gamma\n";
    for (std::size_t k = 0; k < rep.labels.size(); ++k) {
      s << rep.labels[k] << ",\"" << rep.models[k] << "\"," << rep.L[k] << ',' << rep.Gamma[k] << ','
        << (rep.rank_L.empty() ? 0 : rep.rank_L[k]) << ',' << (rep.rank_Gamma.empty() ? 0 : rep.rank_Gamma[k])
        << '\n';
    }
    return s.str();
  }
  json j{{"provenance", prov}, {"data", data_summary(ld)}, {"rows_used", used}, {"selection", to_json(rep)}};
  return dump(j);
}

std::map<std::string, double> parse_params(const std::vector<std::string>& params) {
  std::map<std::string, double> out;
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw UsageError("--param: expected key=value, got '" + p + "'");
    out[p.substr(0, eq)] = parse_double_or_usage(p.substr(eq + 1), "--param " + p.substr(0, eq));
  }
  return out;
}

std::string cmd_simulate(const RunConfig& c, const json& prov) {
  std::vector<BootstrapMethod> methods;
  for (const auto& t : c.methods) {
    BootstrapMethod m = usage_guard([&] { return parse_method_token(t); });
    m.metric = parse_metric(c.metric);
    methods.push_back(m);
  }
  const auto overrides = parse_params(c.params);
  ExperimentOptions o;
  o.B = c.B;
  o.replications = c.reps;
  o.levels = c.levels;
  o.seed = c.seed;
  o.threads = c.threads;
  o.pt_reps = c.pt_reps;
  o.cache_path = c.cache_path;
  o.coefficient = c.coefficient;
  o.size_selection.grid = c.grid;
  o.size_selection.K = c.K;
  o.size_selection.m = c.m;
  o.size_selection.B_inner = c.B_inner;
  o.size_selection.B_full = c.B_full;
  o.size_selection.delta = c.delta;
  o.size_selection.max_iterations = c.max_iterations;

  if (c.sweep.empty()) {
    const ScenarioDef scn = usage_guard([&] { return make_scenario(c.scenario, c.n, overrides); });
    const ExperimentReport rep = run_experiment(scn, methods, o);
    if (c.output_format == "csv") {
      std::ostringstream s;
      write_csv_provenance(s, prov);
      write_report_csv(s, rep);
      return s.str();
    }
    return dump(json{{"provenance", prov}, {"report", to_json(rep)}});
  }

  const auto eq = c.sweep.find('=');
  if (eq == std::string::npos) throw UsageError("--sweep: expected key=v1,v2,...");
  const std::string key = c.sweep.substr(0, eq);
  std::vector<std::pair<double, ExperimentReport>> done;
  json skipped = json::array();
  for (const auto& v : split(c.sweep.substr(eq + 1), ',')) {
    auto ov = overrides;
    const double value = parse_double_or_usage(v, "--sweep " + key);
    ov[key] = value;
    const ScenarioDef scn = usage_guard([&] { return make_scenario(c.scenario, c.n, ov); });
    try {
      done.emplace_back(value, run_experiment(scn, methods, o));
    } catch (const Error& e) {
      // A sweep point without a pseudo-true value is reported, not fatal.
      if (e.code() != ErrorCode::TooManyFailures) throw;
      skipped.push_back({{"value", value}, {"error", e.what()}});
    }
  }
  if (done.empty()) throw Error(ErrorCode::TooManyFailures, "simlab", "no sweep point could be estimated");
  if (c.output_format == "csv") {
    std::ostringstream s;
    write_csv_provenance(s, prov);
    for (const auto& k : skipped)
      s << "# skipped " << key << '=' << k["value"].get<double>() << ": " << k["error"].get<std::string>() << '\n';
    write_ratios_csv(s, key, done);
    return s.str();
  }
  json reports = json::array();
  for (const auto& [value, rep] : done) reports.push_back({{"value", value}, {"report", to_json(rep)}});
  return dump(json{{"provenance", prov}, {"parameter", key}, {"sweep", reports}, {"skipped", skipped}});
}

std::string usage_text() {
  std::string s = "usage: lrb <command> [options]\ncommands:";
  for (const char* c : kCommands) s += std::string(" ") + c;
  return s + "\nrun 'lrb <command> --help' for the options of a command\n";
}

}  // namespace

BootstrapMethod parse_method_token(const std::string& token) {
  std::string t = normalize(token);
  std::optional<std::size_t> l;
  if (const auto colon = t.find(':'); colon != std::string::npos) {
    const auto v = parse_number(t.substr(colon + 1));
    if (!v || *v < 1 || *v != std::floor(*v))
      throw Error(ErrorCode::InvalidArgument, "cli", "bad neighborhood size in '" + token + "'");
    l = static_cast<std::size_t>(*v);
    t = t.substr(0, colon);
  }
  BootstrapMethod m;
  auto with_residual = [&](const std::string& prefix, MethodKind kind) {
    if (t.rfind(prefix, 0) != 0) return false;
    m.kind = kind;
    m.residual = parse_residual_kind(t.substr(prefix.size()));
    return true;
  };
  if (t == "classical") t = "classical_residual";
  if (t == "lrb" || t == "classical_residual" ||
      (!with_residual("lrb_", MethodKind::lrb) && !with_residual("classical_", MethodKind::classical_residual))) {
    m.kind = parse_method_kind(t);
    m.residual = m.uses_residuals() ? ResidualKind::surrogate : ResidualKind::raw;
  }
  m.l = m.uses_neighborhoods() ? l.value_or(0) : 0;
  if (l && !m.uses_neighborhoods())
    throw Error(ErrorCode::InvalidArgument, "cli", "'" + token + "' takes no neighborhood size");
  return m;
}

Candidate parse_candidate(const std::string& text, int categories) {
  const auto eq = text.find('=');
  const auto colon = text.find(':', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || colon == std::string::npos || eq == 0)
    throw Error(ErrorCode::InvalidArgument, "cli", "model '" + text + "' is not label=family/link:terms");
  Candidate c;
  c.label = text.substr(0, eq);
  const std::string fl = text.substr(eq + 1, colon - eq - 1);
  std::vector<Term> terms;
  for (const auto& t : split(text.substr(colon + 1), '+')) terms.push_back(Term::parse(t));
  const auto slash = fl.find('/');
  const Family fam = parse_family(fl.substr(0, slash));
  if (fam == Family::ordinal) {
    c.spec = make_ordinal_spec(categories, terms);
  } else {
    const Link link = slash == std::string::npos ? default_link(fam) : parse_link(fl.substr(slash + 1));
    c.spec = make_spec(fam, link, terms);
  }
  c.spec.validate();
  return c;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (argc < 2) {
    err << usage_text();
    return 1;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h") {
    out << usage_text();
    return 0;
  }
  if (command == "--version") {
    out << kToolName << ' ' << kToolVersion << '\n';
    return 0;
  }
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    err << "unknown command '" << command << "'\n" << usage_text();
    return 1;
  }

  RunConfig c;
  c.command = command;
  CLI::App app("lrb " + command, std::string(kToolName) + " " + command);
  build_options(app, c);
  try {
    std::vector<std::string> args;
    for (int k = argc - 1; k >= 2; --k) args.emplace_back(argv[k]);  // CLI11 wants reverse order
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const json prov = provenance(app, c);
    std::string text;
    if (command == "fit") {
      text = cmd_fit(c, prov);
    } else if (command == "bootstrap") {
      text = cmd_bootstrap(c, prov);
    } else if (command == "select-l") {
      text = cmd_select_l(c, prov);
    } else if (command == "select-model") {
      text = cmd_select_model(c, prov);
    } else {
      text = cmd_simulate(c, prov);
    }
    emit(c, text, out);
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "cli::InternalError: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace lrb
