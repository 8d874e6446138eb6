#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "solar/types.hpp"

namespace solar::metrics {

struct TrmEvalMetrics {
  double spearman_rho = 0.0;
  double pairwise_accuracy = 0.0;
  size_t regression_instances = 0;
  size_t pair_count = 0;
};

struct MetricReport {
  double overall_accuracy = 0.0;
  // Absent when a topology has no responses in the dataset.
  PerTopology<std::optional<double>> topology_accuracy{};
  PerTopology<double> win_rate{0.0, 0.0, 0.0};
  std::optional<double> spearman_rho;
  std::optional<double> pairwise_accuracy;
  double mean_response_length = 0.0;
};

// Mean hard label, optionally restricted to one topology. The restricted
// subset must be nonempty and every record must carry a hard label.
double accuracy(std::span<const ResponseRecord> records,
                std::optional<Topology> topology = std::nullopt);

// Ascending 1-based ranks with ties replaced by the mean of the tied span.
std::vector<double> fractional_ranks(std::span<const double> values);

// Rank correlation of two equally long vectors, computed as the Pearson
// correlation of their fractional ranks so ties are handled gracefully.
// Undefined (Data error) for n < 2 or when either rank vector is constant.
double spearman_rho(std::span<const double> truth,
                    std::span<const double> predicted);

// Fraction of (preferred, dispreferred) score pairs ordered correctly; exact
// ties count half.
double pairwise_accuracy(std::span<const std::pair<double, double>> pairs);

// Mean whitespace-separated word count of the response texts.
double mean_response_length(std::span<const ResponseRecord> records);

MetricReport build_report(std::span<const ResponseRecord> records,
                          std::span<const TopoAnnotation> annotations,
                          const std::optional<TrmEvalMetrics>& trm_eval = std::nullopt);

}  // namespace solar::metrics
