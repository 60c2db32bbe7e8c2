#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lrb/dataset.hpp"

namespace lrb {

enum class Metric { euclidean, linear_predictor, categorical_exact };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

inline constexpr const char* kTieRule = "distance, then self, then ascending index";

/// Per-observation resampling pools N_i. Each set is stored in ascending
/// index order, so a set holding every row is laid out exactly like the
/// classical residual bootstrap's pool. `full` marks the N_i = {all rows}
/// map without materializing n^2 indices.
struct NeighborhoodMap {
  std::vector<std::vector<std::size_t>> sets;
  std::size_t n = 0;
  std::size_t l = 0;  // requested size
  Metric metric = Metric::euclidean;
  std::string tie_rule = kTieRule;
  bool full = false;
  std::vector<std::string> warnings;

  std::size_t size_of(std::size_t i) const { return full ? n : sets[i].size(); }
  std::size_t member(std::size_t i, std::size_t k) const { return full ? k : sets[i][k]; }

  /// Every row in one pool (the classical residual bootstrap).
  static NeighborhoodMap all_rows(std::size_t n);
};

/// Euclidean distances between rows of Z; exactly symmetric, zero diagonal.
Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& Z);
/// Distances over the continuous columns of a data set.
Eigen::MatrixXd distance_matrix(const Dataset& data);

/// The l nearest rows of each row of D, ties by ascending index.
/// Throws Error(InvalidSize) unless 1 <= l <= n.
NeighborhoodMap knn_sets(const Eigen::MatrixXd& D, std::size_t l);

/// k-NN directly from coordinates. Up to `kFullMatrixLimit` rows this builds
/// the distance matrix; beyond it each row is scanned on the fly.
inline constexpr std::size_t kFullMatrixLimit = 20000;
NeighborhoodMap knn_points(const Eigen::MatrixXd& Z, std::size_t l);

/// Exact-match cells over the categorical columns. With continuous columns
/// present, each N_i is the l nearest rows inside its cell; the cell size caps
/// l (with a warning). l = 0 means whole cells.
NeighborhoodMap categorical_sets(const Dataset& data, std::size_t l = 0);

/// Dispatch used by the bootstrap. `eta` is the fitted linear predictor and is
/// only read for Metric::linear_predictor. Euclidean neighborhoods on data with
/// categorical columns route through categorical_sets.
NeighborhoodMap build_neighborhoods(const Dataset& data, std::size_t l, Metric metric,
                                    const Eigen::VectorXd* eta = nullptr);

}  // namespace lrb
