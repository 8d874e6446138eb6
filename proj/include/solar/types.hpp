#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace solar {

// Error taxonomy mirrored by the C API status codes and the CLI exit codes:
// Config -> bad configuration or arguments, Data -> invalid or inconsistent
// records, Io -> filesystem trouble.
enum class ErrorKind { Config, Data, Io, Internal };

class SolarError : public std::runtime_error {
public:
  SolarError(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void throw_config(const std::string& message);
[[noreturn]] void throw_data(const std::string& message);
[[noreturn]] void throw_io(const std::string& message);

// Reasoning topologies in canonical order. The order doubles as the
// tie-breaking order everywhere a winner must be picked deterministically.
enum class Topology : int { CoT = 0, ToT = 1, GoT = 2 };

inline constexpr int kTopologyCount = 3;
inline constexpr std::array<Topology, 3> kTopologies = {
    Topology::CoT, Topology::ToT, Topology::GoT};

constexpr int topology_index(Topology t) { return static_cast<int>(t); }

std::string_view topology_name(Topology t);
Topology topology_from_name(std::string_view name);

template <typename T>
using PerTopology = std::array<T, kTopologyCount>;

enum class DifficultyTier : int { Hard = 0, Medium = 1, Easy = 2 };

inline constexpr std::array<DifficultyTier, 3> kTiers = {
    DifficultyTier::Hard, DifficultyTier::Medium, DifficultyTier::Easy};

std::string_view tier_name(DifficultyTier tier);
DifficultyTier tier_from_name(std::string_view name);

struct Problem {
  std::string id;
  std::string question;
  // Stored in canonical answer form; readers reject anything else.
  std::string reference_answer;
  std::string source;
  std::map<std::string, std::string> metadata;
};

// Knobs a generator receives when a topology prompt is rendered.
struct GenerationParams {
  int max_depth = 3;
  int num_children = 3;
  int num_neighbors = 3;
  int samples_per_topology = 5;
  double temperature = 0.7;

  void validate() const;
};

struct RewardScores {
  double topo = 0.0;
  double rank = 0.0;
};

struct ResponseRecord {
  std::string id;
  std::string problem_id;
  Topology topology = Topology::CoT;
  std::string text;
  // Always canonicalize_answer(extract_final_answer(text)); readers re-derive
  // it and reject mismatches.
  std::string final_answer;
  std::optional<int> hard_label;
  std::optional<RewardScores> reward_scores;
  std::string generator;
  std::int64_t seed = 0;
};

struct TopoAnnotation {
  std::string problem_id;
  PerTopology<std::int64_t> n_correct{0, 0, 0};
  PerTopology<std::int64_t> n_total{0, 0, 0};
  // n_correct/n_total per topology, 0 where n_total is 0.
  PerTopology<double> topo_labels{0.0, 0.0, 0.0};
  double max_topo_label = 0.0;
  std::optional<DifficultyTier> difficulty;
};

// Invariant checks shared by the JSONL readers and writers. Each throws a
// Data error naming the offending record and invariant.
void validate_problem(const Problem& problem);
void validate_response(const ResponseRecord& record);
void validate_annotation(const TopoAnnotation& annotation);

}  // namespace solar
