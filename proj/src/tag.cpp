#include "solar/tag.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace solar::tag {

void SegmentationConfig::validate() const {
  if (!(q_low > 0.0 && q_low < 1.0) || !(q_high > 0.0 && q_high < 1.0)) {
    throw_config("segmentation: quantiles must lie strictly inside (0, 1)");
  }
  if (q_low >= q_high) {
    throw_config("segmentation: q_low must be strictly below q_high");
  }
}

int assign_hard_label(const ResponseRecord& record, const Problem& problem) {
  if (record.problem_id != problem.id) {
    throw_data("response '" + record.id + "' references problem '" +
               record.problem_id + "', not '" + problem.id + "'");
  }
  return record.final_answer == problem.reference_answer ? 1 : 0;
}

void assign_hard_labels(std::vector<ResponseRecord>& records,
                        std::span<const Problem> problems) {
  std::unordered_map<std::string, const Problem*> by_id;
  for (const Problem& problem : problems) by_id[problem.id] = &problem;

  std::vector<std::string> dangling;
  std::unordered_set<std::string> seen_dangling;
  for (const ResponseRecord& record : records) {
    if (!by_id.contains(record.problem_id) &&
        seen_dangling.insert(record.problem_id).second) {
      dangling.push_back(record.problem_id);
    }
  }
  if (!dangling.empty()) {
    std::sort(dangling.begin(), dangling.end());
    std::ostringstream msg;
    msg << "responses reference unknown problem ids:";
    for (const std::string& id : dangling) msg << " '" << id << "'";
    throw_data(msg.str());
  }

  for (ResponseRecord& record : records) {
    record.hard_label = assign_hard_label(record, *by_id.at(record.problem_id));
  }
}

TopoAnnotation compute_topo_annotation(const std::string& problem_id,
                                       std::span<const ResponseRecord> responses) {
  if (responses.empty()) {
    throw_data("problem '" + problem_id + "' has no responses to annotate");
  }
  TopoAnnotation annotation;
  annotation.problem_id = problem_id;
  for (const ResponseRecord& record : responses) {
    if (record.problem_id != problem_id) {
      throw_data("response '" + record.id + "' does not belong to problem '" +
                 problem_id + "'");
    }
    if (!record.hard_label) {
      throw_data("response '" + record.id + "' lacks a hard label");
    }
    int i = topology_index(record.topology);
    annotation.n_total[i] += 1;
    annotation.n_correct[i] += *record.hard_label;
  }
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    if (annotation.n_total[i] > 0) {
      annotation.topo_labels[i] = static_cast<double>(annotation.n_correct[i]) /
                                  static_cast<double>(annotation.n_total[i]);
      annotation.max_topo_label =
          std::max(annotation.max_topo_label, annotation.topo_labels[i]);
    }
  }
  return annotation;
}

WinCredit compute_win_credit(const TopoAnnotation& annotation) {
  WinCredit credit;
  credit.problem_id = annotation.problem_id;
  double best = -1.0;
  int sampled = 0;
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    if (annotation.n_total[i] == 0) continue;
    ++sampled;
    best = std::max(best, annotation.topo_labels[i]);
  }
  if (sampled == 0) {
    throw_data("annotation '" + annotation.problem_id +
               "' has no sampled topology; win credit undefined");
  }
  int winners = 0;
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    if (annotation.n_total[i] > 0 && annotation.topo_labels[i] == best) ++winners;
  }
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    if (annotation.n_total[i] > 0 && annotation.topo_labels[i] == best) {
      credit.credit[i] = 1.0 / winners;
    }
  }
  return credit;
}

PerTopology<double> compute_win_rates(std::span<const TopoAnnotation> annotations) {
  if (annotations.empty()) {
    throw_data("win rates undefined on an empty annotation set");
  }
  PerTopology<double> sums{0.0, 0.0, 0.0};
  for (const TopoAnnotation& annotation : annotations) {
    WinCredit credit = compute_win_credit(annotation);
    for (int i = 0; i < kTopologyCount; ++i) sums[i] += credit.credit[i];
  }
  for (int i = 0; i < kTopologyCount; ++i) {
    sums[i] /= static_cast<double>(annotations.size());
  }
  return sums;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw_data("quantile of an empty value list is undefined");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw_config("quantile position must lie in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  double h = p * static_cast<double>(values.size() - 1);
  size_t lo = static_cast<size_t>(h);
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

SegmentationThresholds segmentation_thresholds(
    std::span<const TopoAnnotation> annotations, const SegmentationConfig& config) {
  config.validate();
  if (annotations.size() < 2) {
    throw_data("difficulty segmentation requires at least two annotations");
  }
  SegmentationThresholds thresholds;
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    std::vector<double> labels;
    labels.reserve(annotations.size());
    for (const TopoAnnotation& annotation : annotations) {
      labels.push_back(annotation.topo_labels[i]);
    }
    thresholds.lo[i] = quantile(labels, config.q_low);
    thresholds.hi[i] = quantile(std::move(labels), config.q_high);
  }
  return thresholds;
}

std::vector<TopoAnnotation> segment_difficulty(std::vector<TopoAnnotation> annotations,
                                               const SegmentationConfig& config) {
  SegmentationThresholds thresholds = segmentation_thresholds(annotations, config);
  for (TopoAnnotation& annotation : annotations) {
    bool all_low = true;
    bool all_high = true;
    for (int i = 0; i < kTopologyCount; ++i) {
      all_low = all_low && annotation.topo_labels[i] < thresholds.lo[i];
      all_high = all_high && annotation.topo_labels[i] > thresholds.hi[i];
    }
    if (all_low) {
      annotation.difficulty = DifficultyTier::Hard;
    } else if (all_high) {
      annotation.difficulty = DifficultyTier::Easy;
    } else {
      annotation.difficulty = DifficultyTier::Medium;
    }
  }
  return annotations;
}

}  // namespace solar::tag
