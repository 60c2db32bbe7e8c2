#include "lrb/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lrb/errors.hpp"

namespace lrb {
namespace {

void check_size(std::size_t l, std::size_t n) {
  if (l < 1 || l > n) {
    throw Error(ErrorCode::InvalidSize, "neighborhood",
                "neighborhood size " + std::to_string(l) + " outside [1, " + std::to_string(n) + "]");
  }
}

// Smallest l entries of one row; `dist(j)` is the distance to row j.
template <class Dist>
std::vector<std::size_t> nearest(std::size_t i, std::size_t n, std::size_t l, Dist&& dist,
                                 std::vector<std::pair<double, std::size_t>>& scratch) {
  scratch.clear();
  for (std::size_t j = 0; j < n; ++j) scratch.emplace_back(j == i ? -1.0 : dist(j), j);
  // -1 places i first: d_ii = 0 is minimal but other zero distances must not
  // push it out of its own neighborhood.
  auto less = [](const auto& a, const auto& b) { return a.first < b.first || (a.first == b.first && a.second < b.second); };
  if (l < n) std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(l - 1), scratch.end(), less);
  std::vector<std::size_t> out;
  out.reserve(l);
  for (std::size_t k = 0; k < l; ++k) out.push_back(scratch[k].second);
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXd continuous_block(const Dataset& data) {
  const auto cols = data.continuous_columns();
  Eigen::MatrixXd Z(data.X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) Z.col(static_cast<Eigen::Index>(k)) = data.X.col(static_cast<Eigen::Index>(cols[k]));
  return Z;
}

double sq_distance(const Eigen::MatrixXd& Z, Eigen::Index i, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < Z.cols(); ++k) {
    const double d = Z(i, k) - Z(j, k);
    s += d * d;
  }
  return s;
}

}  // namespace

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::euclidean: return "euclidean";
    case Metric::linear_predictor: return "linear_predictor";
    case Metric::categorical_exact: return "categorical_exact";
  }
  return "?";
}

Metric parse_metric(std::string_view text) {
  for (auto m : {Metric::euclidean, Metric::linear_predictor, Metric::categorical_exact}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "neighborhood", "unknown metric '" + std::string(text) + "'");
}

NeighborhoodMap NeighborhoodMap::all_rows(std::size_t n) {
  NeighborhoodMap map;
  map.n = n;
  map.l = n;
  map.full = true;
  return map;
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& Z) {
  const Eigen::Index n = Z.rows();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d = std::sqrt(sq_distance(Z, i, j));
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return D;
}

Eigen::MatrixXd distance_matrix(const Dataset& data) { return distance_matrix(continuous_block(data)); }

NeighborhoodMap knn_sets(const Eigen::MatrixXd& D, std::size_t l) {
  if (D.rows() != D.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "neighborhood", "distance matrix must be square");
  }
  const auto n = static_cast<std::size_t>(D.rows());
  check_size(l, n);
  NeighborhoodMap map;
  map.n = n;
  map.l = l;
  map.sets.resize(n);
  std::vector<std::pair<double, std::size_t>> scratch;
  scratch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    map.sets[i] = nearest(i, n, l, [&](std::size_t j) { return D(static_cast<Eigen::Index>(j), ii); }, scratch);
  }
  return map;
}

NeighborhoodMap knn_points(const Eigen::MatrixXd& Z, std::size_t l) {
  const auto n = static_cast<std::size_t>(Z.rows());
  if (n <= kFullMatrixLimit) return knn_sets(distance_matrix(Z), l);
  check_size(l, n);
  NeighborhoodMap map;
  map.n = n;
  map.l = l;
  map.sets.resize(n);
  std::vector<std::pair<double, std::size_t>> scratch;
  scratch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    // sqrt is monotone and applied identically in the matrix path, so the
    // selected sets agree with knn_sets(distance_matrix(Z), l).
    map.sets[i] = nearest(
        i, n, l, [&](std::size_t j) { return std::sqrt(sq_distance(Z, static_cast<Eigen::Index>(j), ii)); }, scratch);
  }
  return map;
}

NeighborhoodMap categorical_sets(const Dataset& data, std::size_t l) {
  const auto cat = data.categorical_columns();
  if (cat.empty()) {
    throw Error(ErrorCode::InvalidArgument, "neighborhood", "categorical_sets needs a categorical column");
  }
  const std::size_t n = data.n();
  std::map<std::vector<double>, std::vector<std::size_t>> cells;
  std::vector<std::vector<double>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto c : cat) keys[i].push_back(data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    cells[keys[i]].push_back(i);
  }
  const Eigen::MatrixXd Z = continuous_block(data);
  const bool has_continuous = Z.cols() > 0;

  NeighborhoodMap map;
  map.n = n;
  map.l = l;
  map.metric = has_continuous ? Metric::euclidean : Metric::categorical_exact;
  map.sets.resize(n);
  std::size_t capped = 0, singletons = 0;
  for (const auto& [key, members] : cells) {
    if (members.size() == 1) ++singletons;
    const std::size_t m = members.size();
    if (!has_continuous || l == 0) {
      for (auto i : members) map.sets[i] = members;
      continue;
    }
    const std::size_t eff = std::min(l, m);
    if (eff < l) ++capped;
    std::vector<std::pair<double, std::size_t>> scratch;
    for (std::size_t a = 0; a < m; ++a) {
      const auto ii = static_cast<Eigen::Index>(members[a]);
      auto local = nearest(
          a, m, eff,
          [&](std::size_t b) { return std::sqrt(sq_distance(Z, static_cast<Eigen::Index>(members[b]), ii)); },
          scratch);
      for (auto& k : local) k = members[k];  // members ascending, so order is preserved
      map.sets[members[a]] = std::move(local);
    }
  }
  if (capped > 0) {
    map.warnings.push_back(std::to_string(capped) + " cell(s) smaller than l = " + std::to_string(l) +
                           "; neighborhood size capped at the cell size");
  }
  if (singletons > 0) {
    map.warnings.push_back("SingletonCell: " + std::to_string(singletons) +
                           " cell(s) hold a single row; local resampling there returns the observed residual");
  }
  return map;
}

NeighborhoodMap build_neighborhoods(const Dataset& data, std::size_t l, Metric metric, const Eigen::VectorXd* eta) {
  const std::size_t n = data.n();
  switch (metric) {
    case Metric::categorical_exact: return categorical_sets(data, l);
    case Metric::linear_predictor: {
      if (!eta || static_cast<std::size_t>(eta->size()) != n) {
        throw Error(ErrorCode::DimensionMismatch, "neighborhood", "linear_predictor metric needs the fitted eta");
      }
      auto map = knn_points(Eigen::MatrixXd(*eta), l);
      map.metric = Metric::linear_predictor;
      return map;
    }
    case Metric::euclidean:
      if (!data.categorical_columns().empty()) {
        check_size(l, n);
        return categorical_sets(data, l);
      }
      break;
  }
  const Eigen::MatrixXd Z = continuous_block(data);
  if (Z.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "neighborhood", "no continuous columns to measure distance on");
  }
  return knn_points(Z, l);
}

}  // namespace lrb
