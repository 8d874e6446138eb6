#pragma once

#include <span>
#include <string>
#include <vector>

#include "solar/types.hpp"

namespace solar::tag {

// Per-problem share of the "best topology" win. Ties split the unit credit
// evenly, so credits always sum to 1 for an annotated problem.
struct WinCredit {
  std::string problem_id;
  PerTopology<double> credit{0.0, 0.0, 0.0};
};

struct SegmentationConfig {
  double q_low = 0.25;
  double q_high = 0.75;

  void validate() const;
};

// 1 iff the response's final answer equals the reference under canonical
// equality. Throws a Data error when the response belongs to another problem.
int assign_hard_label(const ResponseRecord& record, const Problem& problem);

// Fills hard labels for every record in place. Unknown problem ids raise a
// Data error listing the dangling ids.
void assign_hard_labels(std::vector<ResponseRecord>& records,
                        std::span<const Problem> problems);

// Aggregates hard-labeled responses of one problem into per-topology counts
// and labels. Topologies with no samples get label 0 and stay out of the max.
TopoAnnotation compute_topo_annotation(const std::string& problem_id,
                                       std::span<const ResponseRecord> responses);

WinCredit compute_win_credit(const TopoAnnotation& annotation);

// Mean win credit across problems; the three rates sum to 1.
PerTopology<double> compute_win_rates(std::span<const TopoAnnotation> annotations);

// Linear-interpolation quantile: h = p*(n-1), v[floor(h)] + frac*(v[floor(h)+1]
// - v[floor(h)]) over the sorted values.
double quantile(std::vector<double> values, double p);

struct SegmentationThresholds {
  PerTopology<double> lo{0.0, 0.0, 0.0};
  PerTopology<double> hi{0.0, 0.0, 0.0};
};

SegmentationThresholds segmentation_thresholds(
    std::span<const TopoAnnotation> annotations, const SegmentationConfig& config);

// Assigns exactly one tier per problem: Hard when every topology label falls
// strictly below its low threshold, Easy when every label sits strictly above
// its high threshold, Medium otherwise. Requires at least two annotations.
std::vector<TopoAnnotation> segment_difficulty(std::vector<TopoAnnotation> annotations,
                                               const SegmentationConfig& config);

}  // namespace solar::tag
