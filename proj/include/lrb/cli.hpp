#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lrb/bootstrap.hpp"
#include "lrb/model_selection.hpp"

namespace lrb {

inline constexpr const char* kToolName = "lrb";
inline constexpr const char* kToolVersion = "0.1.0";

/// Every setting a subcommand can take, from flags or a key=value config file.
struct RunConfig {
  std::string command;

  // data
  std::string input_path;
  std::string response;
  std::vector<std::string> predictors;  // "name" or "name:continuous|categorical"
  std::vector<std::string> terms;       // model terms; empty: one raw term per predictor
  std::string family = "binomial";
  std::string link;  // empty: the family's default link
  int categories = 0;

  // bootstrap
  std::string method = "lrb";
  std::string residual = "surrogate";
  std::string l = "10";  // integer or "auto"
  std::string metric = "euclidean";
  std::size_t B = 500;
  double alpha = 0.05;
  bool include_replicates = false;

  // neighborhood size selection
  std::vector<std::size_t> grid{2, 4, 6, 8, 10, 12, 14, 16};
  std::size_t K = 20;
  std::size_t m = 0;
  std::size_t B_inner = 200;
  std::size_t B_full = 2000;
  double delta = 0.5;
  int max_iterations = 20;
  std::string coefficient;

  // model selection
  std::vector<std::string> models;  // "label=family/link:term+term"
  std::string criterion = "L";
  bool split_half = false;

  // simulation
  std::string scenario;
  std::vector<std::string> methods;  // tokens such as lrb-surrogate, parametric, lrb-pearson:8
  std::size_t n = 0;
  std::size_t reps = 100;
  std::size_t pt_reps = 10000;
  std::vector<std::string> params;  // key=value overrides
  std::string sweep;                // key=v1,v2,...
  std::vector<double> levels{0.95, 0.90, 0.75};
  std::string cache_path;

  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: LRB_THREADS, else machine parallelism
  std::string output_path;
  std::string output_format = "json";
};

/// Method names with either '-' or '_' separators; a simulate token may end
/// in ":l" to fix the neighborhood size.
BootstrapMethod parse_method_token(const std::string& token);
/// "label=family/link:term+term" (the link may be omitted).
Candidate parse_candidate(const std::string& text, int categories);

/// Runs one subcommand: exit 0 on success, 1 on a usage error, 2 when a
/// module fails (its "module::Error" name is written to `err`).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lrb
