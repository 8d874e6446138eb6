#include "solar/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "solar/tag.hpp"

namespace solar::metrics {

double accuracy(std::span<const ResponseRecord> records,
                std::optional<Topology> topology) {
  std::int64_t total = 0;
  std::int64_t correct = 0;
  for (const ResponseRecord& record : records) {
    if (topology && record.topology != *topology) continue;
    if (!record.hard_label) {
      throw_data("response '" + record.id + "' lacks a hard label; accuracy undefined");
    }
    ++total;
    correct += *record.hard_label;
  }
  if (total == 0) {
    throw_data(topology ? "accuracy undefined: no responses for topology '" +
                              std::string(topology_name(*topology)) + "'"
                        : "accuracy undefined on an empty response set");
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (1-based i+1..j+1) share one value; assign the mean rank.
    double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> truth,
                    std::span<const double> predicted) {
  if (truth.size() != predicted.size()) {
    throw_data("spearman_rho requires equally long vectors");
  }
  if (truth.size() < 2) {
    throw_data("spearman_rho undefined for fewer than two instances");
  }
  std::vector<double> r1 = fractional_ranks(truth);
  std::vector<double> r2 = fractional_ranks(predicted);

  size_t n = r1.size();
  double mean1 = std::accumulate(r1.begin(), r1.end(), 0.0) / static_cast<double>(n);
  double mean2 = std::accumulate(r2.begin(), r2.end(), 0.0) / static_cast<double>(n);
  double cov = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d1 = r1[i] - mean1;
    double d2 = r2[i] - mean2;
    cov += d1 * d2;
    var1 += d1 * d1;
    var2 += d2 * d2;
  }
  if (var1 == 0.0 || var2 == 0.0) {
    throw_data("spearman_rho undefined: rank variance is zero");
  }
  return cov / std::sqrt(var1 * var2);
}

double pairwise_accuracy(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) {
    throw_data("pairwise_accuracy undefined on an empty pair set");
  }
  double score = 0.0;
  for (const auto& [preferred, dispreferred] : pairs) {
    if (preferred > dispreferred) {
      score += 1.0;
    } else if (preferred == dispreferred) {
      score += 0.5;
    }
  }
  return score / static_cast<double>(pairs.size());
}

namespace {

size_t word_count(const std::string& text) {
  size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

}  // namespace

double mean_response_length(std::span<const ResponseRecord> records) {
  if (records.empty()) {
    throw_data("mean response length undefined on an empty response set");
  }
  double total = 0.0;
  for (const ResponseRecord& record : records) {
    total += static_cast<double>(word_count(record.text));
  }
  return total / static_cast<double>(records.size());
}

MetricReport build_report(std::span<const ResponseRecord> records,
                          std::span<const TopoAnnotation> annotations,
                          const std::optional<TrmEvalMetrics>& trm_eval) {
  if (records.empty()) {
    throw_data("report undefined on an empty response set");
  }
  MetricReport report;
  report.overall_accuracy = accuracy(records);
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    bool present = std::any_of(records.begin(), records.end(),
                               [&](const ResponseRecord& r) { return r.topology == t; });
    if (present) report.topology_accuracy[i] = accuracy(records, t);
  }
  report.win_rate = tag::compute_win_rates(annotations);
  report.mean_response_length = mean_response_length(records);
  if (trm_eval) {
    report.spearman_rho = trm_eval->spearman_rho;
    report.pairwise_accuracy = trm_eval->pairwise_accuracy;
  }
  return report;
}

}  // namespace solar::metrics
