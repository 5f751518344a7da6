#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nodeplan/core.hpp"
#include "nodeplan/integrate.hpp"

namespace nodeplan {

struct DtwResult {
  double cost = 0.0;       // sum of Euclidean distances along the optimal alignment
  Eigen::Index path_len = 0;
};

/// Exact O(Ta*Tb) dynamic time warping on the rows of a and b, no window.
/// Among equal-cost predecessors the diagonal wins, then the one from a.
DtwResult dtw(const Matrix& a, const Matrix& b);
DtwResult dtw(const Trajectory& a, const Trajectory& b);

/// Symmetric matrix of DTW costs between all pairs of demos (zero diagonal).
Matrix dtw_pairwise(const DemonstrationSet& ds);
/// Mean of the strictly upper triangle of dtw_pairwise.
double mean_pairwise_dtw(const DemonstrationSet& ds);

namespace serial {
Matrix dtw_pairwise(const DemonstrationSet& ds);
}  // namespace serial

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// "i,j,...:k,l,..." (train:test); either side may be empty.
Split parse_split(const std::string& text);
std::string to_string(const Split& s);

struct DemoEval {
  int index = 0;
  std::string split;  // "train" or "test"
  bool ok = false;
  std::string error;
  DtwResult dtw;
  Trajectory reproduction;
};

struct SplitStats {
  long count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

struct EvalReport {
  std::vector<DemoEval> demos;  // train entries first, in split order
  std::optional<SplitStats> train;
  std::optional<SplitStats> test;
  nlohmann::json config;
};

/// Mean and population variance of the successful entries of one split;
/// absent when there are none.
std::optional<SplitStats> split_stats(const std::vector<DemoEval>& demos, const std::string& split);

/// Integrates the model from each demo's first sample over the demo's own time
/// stamps and scores the reproduction by DTW against the demo. Demos run in
/// parallel; failures are recorded per demo and excluded from the statistics.
EvalReport evaluate_model(const VectorField& model, const DemonstrationSet& ds, const Split& split,
                          const IntegratorConfig& integrator = {});

namespace serial {
EvalReport evaluate_model(const VectorField& model, const DemonstrationSet& ds, const Split& split,
                          const IntegratorConfig& integrator = {});
}  // namespace serial

nlohmann::json to_json(const EvalReport& r, bool include_reproductions = true);
std::string eval_to_csv(const EvalReport& r);
/// Demo-vs-reproduction overlay on the first two coordinates.
std::string eval_to_svg(const EvalReport& r, const DemonstrationSet& ds);

}  // namespace nodeplan
