#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "lrb/bootstrap.hpp"

namespace lrb {

struct SizeSelectionOptions {
  std::vector<std::size_t> grid{2, 4, 6, 8, 10, 12, 14, 16};
  std::size_t K = 20;
  std::size_t m = 0;  // 0: ceil(0.9 n)
  std::size_t B_inner = 200;
  std::size_t B_full = 2000;  // replicates for the full-data estimate
  double delta = 0.5;
  int max_iterations = 20;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Metric metric = Metric::euclidean;
  /// Coordinate whose standard error drives the selection; -1 picks the first
  /// non-intercept coefficient.
  int coefficient = -1;
  FitOptions fit;
};

struct SizeIteration {
  std::size_t l = 0;        // full-data size used this iteration
  double psi = 0.0;         // full-data SE estimate at l
  std::vector<double> mse;  // per grid entry
  std::size_t q_star = 0;   // index into the grid
  std::size_t next_l = 0;
  double delta = 0.0;
};

struct SizeSelectionTrace {
  std::vector<std::size_t> grid;
  std::size_t n = 0, K = 0, m = 0, B_inner = 0, B_full = 0;
  int coefficient = 0;
  std::vector<std::vector<double>> psi_kq;  // K x Q subsample estimates
  std::vector<SizeIteration> iterations;
  std::size_t final_l = 0;
  bool converged = false;
};

/// Iterative subsampling choice of the neighborhood size for the local
/// residual bootstrap. Non-convergence within the cap is flagged in the trace
/// rather than thrown.
SizeSelectionTrace select_size(const Dataset& data, const ModelSpec& spec, ResidualKind residual,
                               const SizeSelectionOptions& options);

/// Scaled candidate max(2, round((n/m)^(1/3) l')).
std::size_t scale_size(std::size_t l_sub, std::size_t n, std::size_t m);

nlohmann::json to_json(const SizeSelectionTrace& trace);

}  // namespace lrb
