#include "lrb/size_selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lrb/errors.hpp"
#include "lrb/parallel.hpp"

namespace lrb {
namespace {

std::vector<std::size_t> subsample_rows(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::size_t scale_size(std::size_t l_sub, std::size_t n, std::size_t m) {
  const double scaled = std::cbrt(static_cast<double>(n) / static_cast<double>(m)) * static_cast<double>(l_sub);
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(scaled)));
}

SizeSelectionTrace select_size(const Dataset& data, const ModelSpec& spec, ResidualKind residual,
                               const SizeSelectionOptions& options) {
  const std::size_t n = data.n();
  const std::size_t m = options.m ? options.m : static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n)));
  if (options.grid.empty()) throw Error(ErrorCode::InvalidArgument, "neighborhood", "size grid is empty");
  if (m >= n) throw Error(ErrorCode::InvalidSize, "neighborhood", "subsample size m must be below n");
  if (options.K < 2) throw Error(ErrorCode::InvalidArgument, "neighborhood", "need K >= 2 subsamples");
  for (auto l : options.grid) {
    if (l < 1 || l > m) throw Error(ErrorCode::InvalidSize, "neighborhood", "grid size outside [1, m]");
  }
  const int coef = options.coefficient >= 0 ? options.coefficient : (spec.include_intercept ? 1 : 0);
  const BootstrapMethod base = BootstrapMethod::lrb(residual, options.grid.front());
  check_method(spec, base);

  SizeSelectionTrace trace;
  trace.grid = options.grid;
  trace.n = n;
  trace.K = options.K;
  trace.m = m;
  trace.B_inner = options.B_inner;
  trace.B_full = options.B_full;
  trace.coefficient = coef;
  const std::size_t Q = options.grid.size();

  // Subsample fits and residuals are shared by every grid size.
  std::vector<Dataset> subs(options.K);
  std::vector<Prepared> preps(options.K);
  parallel_for(options.K, options.threads, [&](std::size_t k) {
    Rng rng(derive_seed(options.seed, {stream::kSubsample, k}));
    subs[k] = data.subset(subsample_rows(n, m, rng));
    BootstrapOptions bo;
    bo.seed = derive_seed(options.seed, {stream::kSubsample, k});
    bo.fit = options.fit;
    preps[k] = prepare(subs[k], spec, BootstrapMethod::classical(residual), bo);
  });

  trace.psi_kq.assign(options.K, std::vector<double>(Q, 0.0));
  parallel_for(options.K * Q, options.threads, [&](std::size_t task) {
    const std::size_t k = task / Q, q = task % Q;
    Prepared prep = preps[k];
    BootstrapMethod method = BootstrapMethod::lrb(residual, options.grid[q]);
    method.metric = options.metric;
    prep.neighborhoods = build_neighborhoods(subs[k], method.l, method.metric, &prep.fit.eta);
    BootstrapOptions bo;
    bo.B = options.B_inner;
    bo.seed = derive_seed(options.seed, {stream::kInnerBootstrap, k, q});
    bo.threads = 1;
    bo.fit = options.fit;
    trace.psi_kq[k][q] = run_prepared(prep, method, bo).se_hat(coef);
  });

  // Full-data estimates, keyed by l so revisiting a size reuses its value.
  std::map<std::size_t, double> psi_full;
  BootstrapOptions full_opts;
  full_opts.seed = options.seed;
  full_opts.fit = options.fit;
  const Prepared full = prepare(data, spec, BootstrapMethod::classical(residual), full_opts);
  auto psi_at = [&](std::size_t l) {
    if (auto it = psi_full.find(l); it != psi_full.end()) return it->second;
    Prepared prep = full;
    BootstrapMethod method = BootstrapMethod::lrb(residual, l);
    method.metric = options.metric;
    prep.neighborhoods = build_neighborhoods(data, l, method.metric, &prep.fit.eta);
    BootstrapOptions bo;
    bo.B = options.B_full;
    bo.seed = derive_seed(options.seed, {stream::kFullBootstrap, l});
    bo.threads = options.threads;
    bo.fit = options.fit;
    const double psi = run_prepared(prep, method, bo).se_hat(coef);
    psi_full[l] = psi;
    return psi;
  };

  std::size_t l = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-12)));
  for (int it = 0; it < options.max_iterations; ++it) {
    SizeIteration step;
    step.l = l;
    step.psi = psi_at(l);
    step.mse.assign(Q, 0.0);
    for (std::size_t q = 0; q < Q; ++q) {
      double s = 0.0;
      for (std::size_t k = 0; k < options.K; ++k) {
        const double d = trace.psi_kq[k][q] - step.psi;
        s += d * d;
      }
      step.mse[q] = s / static_cast<double>(options.K);
    }
    step.q_star = static_cast<std::size_t>(std::min_element(step.mse.begin(), step.mse.end()) - step.mse.begin());
    step.next_l = std::min(n, scale_size(options.grid[step.q_star], n, m));
    step.delta = std::abs(static_cast<double>(step.next_l) - static_cast<double>(l));
    trace.iterations.push_back(step);
    l = step.next_l;
    // With one candidate the update does not depend on the full-data
    // estimate, so the first update is already the fixed point.
    if (step.delta <= options.delta || Q == 1) {
      trace.converged = true;
      break;
    }
  }
  trace.final_l = l;
  return trace;
}

nlohmann::json to_json(const SizeSelectionTrace& t) {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& s : t.iterations) {
    its.push_back({{"l", s.l}, {"psi", s.psi}, {"mse", s.mse}, {"q_star", s.q_star}, {"selected_subsample_l", t.grid[s.q_star]},
                   {"next_l", s.next_l}, {"delta", s.delta}});
  }
  return {{"grid", t.grid}, {"n", t.n},           {"K", t.K},
          {"m", t.m},       {"B_inner", t.B_inner}, {"B_full", t.B_full},
          {"coefficient", t.coefficient}, {"psi_kq", t.psi_kq}, {"iterations", its},
          {"final_l", t.final_l}, {"converged", t.converged}};
}

}  // namespace lrb
