#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "solar/types.hpp"

namespace solar::gen {

// Deterministic topology prompt. Every template renders the numeric knobs it
// depends on and demands a terminal "Final Answer:" line.
std::string render_prompt(const std::string& question, Topology topology,
                          const GenerationParams& params);

enum class WorldProfile { Uniform, TopologySkewed, DifficultyGraded };

std::string_view world_profile_name(WorldProfile profile);
WorldProfile world_profile_from_name(std::string_view name);

struct WorldEntry {
  // Planted per-topology correctness probability.
  PerTopology<double> p{0.0, 0.0, 0.0};
  // Distinct canonical wrong answers; incorrect samples draw from here so
  // vote-based baselines see disagreeing wrong answers.
  std::vector<std::string> wrong_pool;
  std::optional<Topology> preferred;  // skewed profile only
  std::optional<int> band;            // graded profile only: 0 hard, 1 mid, 2 easy
};

struct SyntheticWorld {
  WorldProfile profile = WorldProfile::Uniform;
  std::uint64_t seed = 0;
  std::map<std::string, WorldEntry> entries;  // keyed by problem id

  const WorldEntry& entry(const std::string& problem_id) const;
};

// Plants correctness probabilities over the given problems:
//   uniform           p(q,T) iid U[0.2, 0.9]
//   topology-skewed   shared base U[0.2, 0.9]; one uniformly drawn preferred
//                     topology gets +0.2 (clamped to 1), so argmax p is the
//                     preferred topology by construction
//   difficulty-graded problems split into thirds by position with p centered
//                     at 0.2 / 0.5 / 0.8 plus small jitter
SyntheticWorld plant_world(const std::vector<Problem>& problems,
                           WorldProfile profile, std::uint64_t seed);

// Models a generator improved by tuning: every planted probability rises by
// boost, clamped to 1.
void apply_tuning_boost(SyntheticWorld& world, double boost);

// Draws n seeded responses for one (problem, topology): correctness is a
// Bernoulli(p) draw, wrong answers come from the problem's pool, and the stub
// text length grows CoT < ToT < GoT. Bitwise reproducible.
std::vector<ResponseRecord> mock_generate(const SyntheticWorld& world,
                                          const Problem& problem,
                                          Topology topology, int n,
                                          std::uint64_t seed);

// Seeded arithmetic word problems with canonical numeric reference answers.
std::vector<Problem> make_synthetic_problems(int count, std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace solar::gen
