#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solar/trm.hpp"
#include "solar/types.hpp"

namespace solar::game {

enum class Aggregate { Mean, Max };

std::string_view aggregate_name(Aggregate aggregate);
Aggregate aggregate_from_name(std::string_view name);

struct SelectionResult {
  std::string problem_id;
  Topology winning_topology = Topology::CoT;
  // Aggregated regression-head score per topology; absent without responses.
  PerTopology<std::optional<double>> topology_scores{};
  std::string chosen_response_id;
  std::string chosen_answer;
};

// Single-pass topology competition: every response is scored once, the
// regression head's per-topology aggregate picks the winning topology
// (canonical CoT < ToT < GoT order breaks exact ties), and the ranking head
// picks the answer inside the winner (lexicographically smallest response id
// breaks score ties). Aggregation order is fixed by response id, so the
// outcome is invariant under response-list permutation.
SelectionResult compete(const Problem& problem,
                        std::span<const ResponseRecord> responses,
                        const trm::ResponseScorer& scorer,
                        Aggregate aggregate = Aggregate::Mean);

// Keeps, per topology, the top_k correct responses by ranking score (ties
// prefer the smaller response id). Output preserves the input order.
std::vector<ResponseRecord> rejection_sample(const Problem& problem,
                                             std::span<const ResponseRecord> responses,
                                             const trm::ResponseScorer& scorer,
                                             int top_k);

struct CurationConfig {
  double fraction = 1.0;
  int top_k = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SftRecord {
  std::string prompt;
  std::string completion;
  Topology topology = Topology::CoT;
  DifficultyTier difficulty = DifficultyTier::Medium;
};

struct CurationResult {
  std::vector<SftRecord> records;
  // Problems sampled per tier: floor(fraction * tier size).
  std::array<size_t, 3> sampled_per_tier{0, 0, 0};
  std::array<size_t, 3> tier_sizes{0, 0, 0};
  std::vector<std::string> warnings;
};

// Difficulty-stratified SFT curation: seeded diversity sampling per tier,
// correct-only filtering, then per-topology rejection sampling. Requires a
// fully segmented annotation set.
CurationResult curate_sft(const std::vector<Problem>& problems,
                          const std::vector<ResponseRecord>& responses,
                          const std::vector<TopoAnnotation>& annotations,
                          const trm::ResponseScorer& scorer,
                          const CurationConfig& config);

enum class StrategyKind { FixedTopology, Rewarding, OracleTopology };

struct Strategy {
  StrategyKind kind = StrategyKind::Rewarding;
  Topology fixed = Topology::CoT;  // FixedTopology only

  static Strategy fixed_topology(Topology t) {
    return Strategy{StrategyKind::FixedTopology, t};
  }
  static Strategy rewarding() { return Strategy{StrategyKind::Rewarding, Topology::CoT}; }
  static Strategy oracle_topology() {
    return Strategy{StrategyKind::OracleTopology, Topology::CoT};
  }
};

struct StrategyReport {
  std::string name;
  double accuracy = 0.0;
  size_t problems = 0;
};

// Per-problem answer selection accuracy under one strategy, over the same
// response set for every strategy:
//   fixed-topology   majority vote over that topology's final answers; vote
//                    ties go to the lexicographically smallest answer
//   rewarding        compete() selection
//   oracle-topology  compete() with the topology forced to the annotation's
//                    argmax topo label (upper-bound reference)
// Problems without usable responses for the strategy count as incorrect.
StrategyReport evaluate_strategy(const std::vector<Problem>& problems,
                                 const std::vector<ResponseRecord>& responses,
                                 const std::vector<TopoAnnotation>& annotations,
                                 const Strategy& strategy,
                                 const trm::ResponseScorer* scorer,
                                 Aggregate aggregate = Aggregate::Mean);

void write_selections(const std::string& path,
                      std::span<const SelectionResult> selections);
std::vector<SelectionResult> read_selections(const std::string& path);

void write_sft(const std::string& path, std::span<const SftRecord> records);
std::vector<SftRecord> read_sft(const std::string& path);

}  // namespace solar::game
