#include "solar/generation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "solar/answer.hpp"
#include "solar/features.hpp"

namespace solar::gen {

std::string render_prompt(const std::string& question, Topology topology,
                          const GenerationParams& params) {
  params.validate();
  std::ostringstream prompt;
  switch (topology) {
    case Topology::CoT:
      prompt << "Solve the problem by reasoning step by step in one chain.\n"
             << "Work through at most " << params.max_depth
             << " sequential steps, then stop.\n";
      break;
    case Topology::ToT:
      prompt << "Solve the problem by exploring a tree of candidate thoughts.\n"
             << "Branch into up to " << params.num_children
             << " children per step, explore to depth " << params.max_depth
             << ", then commit to the best branch.\n";
      break;
    case Topology::GoT:
      prompt << "Solve the problem by building a graph of interlinked thoughts.\n"
             << "Link up to " << params.num_neighbors
             << " neighbor thoughts per node, refine to depth " << params.max_depth
             << ", and merge supporting thoughts before answering.\n";
      break;
  }
  prompt << "Problem: " << question << "\n"
         << "End with one line of the form 'Final Answer: <answer>'.";
  return prompt.str();
}

std::string_view world_profile_name(WorldProfile profile) {
  switch (profile) {
    case WorldProfile::Uniform: return "uniform";
    case WorldProfile::TopologySkewed: return "topology-skewed";
    case WorldProfile::DifficultyGraded: return "difficulty-graded";
  }
  throw_data("unknown world profile value");
}

WorldProfile world_profile_from_name(std::string_view name) {
  if (name == "uniform") return WorldProfile::Uniform;
  if (name == "topology-skewed") return WorldProfile::TopologySkewed;
  if (name == "difficulty-graded") return WorldProfile::DifficultyGraded;
  throw_config("unknown world profile: '" + std::string(name) + "'");
}

const WorldEntry& SyntheticWorld::entry(const std::string& problem_id) const {
  auto it = entries.find(problem_id);
  if (it == entries.end()) {
    throw_data("world has no entry for problem '" + problem_id + "'");
  }
  return it->second;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<std::string> wrong_pool_for(const Problem& problem) {
  std::vector<std::string> pool;
  const std::string& reference = problem.reference_answer;
  // Numeric references get near-miss numbers; anything else gets suffix
  // variants. Two entries keep wrong votes split without fragmenting them.
  char* end = nullptr;
  double value = std::strtod(reference.c_str(), &end);
  bool numeric = end != reference.c_str() && end != nullptr && *end == '\0';
  if (numeric) {
    for (double delta : {1.0, -1.0}) {
      std::ostringstream out;
      out << value + delta;
      std::string candidate = canonicalize_answer(out.str());
      if (candidate != reference) pool.push_back(candidate);
    }
  }
  int suffix = 1;
  while (pool.size() < 2) {
    std::string candidate =
        canonicalize_answer(reference + " alt " + std::to_string(suffix++));
    if (candidate != reference) pool.push_back(candidate);
  }
  return pool;
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

SyntheticWorld plant_world(const std::vector<Problem>& problems,
                           WorldProfile profile, std::uint64_t seed) {
  if (problems.empty()) throw_data("cannot plant a world over zero problems");
  SyntheticWorld world;
  world.profile = profile;
  world.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> base_dist(0.2, 0.9);
  std::uniform_int_distribution<int> topo_dist(0, kTopologyCount - 1);
  std::uniform_real_distribution<double> jitter_dist(-0.05, 0.05);

  size_t count = problems.size();
  for (size_t index = 0; index < count; ++index) {
    const Problem& problem = problems[index];
    WorldEntry entry;
    switch (profile) {
      case WorldProfile::Uniform:
        for (int i = 0; i < kTopologyCount; ++i) entry.p[i] = base_dist(rng);
        break;
      case WorldProfile::TopologySkewed: {
        double base = base_dist(rng);
        Topology preferred = kTopologies[static_cast<size_t>(topo_dist(rng))];
        entry.preferred = preferred;
        for (int i = 0; i < kTopologyCount; ++i) {
          entry.p[i] = i == topology_index(preferred) ? clamp01(base + 0.2) : base;
        }
        break;
      }
      case WorldProfile::DifficultyGraded: {
        int band = static_cast<int>(index * 3 / count);
        entry.band = band;
        double center = band == 0 ? 0.2 : band == 1 ? 0.5 : 0.8;
        for (int i = 0; i < kTopologyCount; ++i) {
          entry.p[i] = std::min(0.98, std::max(0.02, center + jitter_dist(rng)));
        }
        break;
      }
    }
    entry.wrong_pool = wrong_pool_for(problem);
    if (!world.entries.emplace(problem.id, std::move(entry)).second) {
      throw_data("duplicate problem id '" + problem.id + "' while planting world");
    }
  }
  return world;
}

void apply_tuning_boost(SyntheticWorld& world, double boost) {
  if (boost < 0.0) throw_config("tuning boost must be >= 0");
  for (auto& [id, entry] : world.entries) {
    for (int i = 0; i < kTopologyCount; ++i) entry.p[i] = clamp01(entry.p[i] + boost);
  }
}

namespace {

const char* check_line(bool correct) {
  return correct ? "The verification check confirms the result."
                 : "The verification check is inconclusive here.";
}

std::string stub_text(Topology topology, const Problem& problem,
                      const std::string& answer, bool correct, int filler) {
  std::ostringstream text;
  switch (topology) {
    case Topology::CoT:
      text << "Step 1: restate the task. " << problem.question << "\n"
           << "Step 2: carry the computation through line by line.\n";
      for (int i = 0; i < filler; ++i) {
        text << "Step " << 3 + i << ": simplify the intermediate expression again.\n";
      }
      text << check_line(correct) << "\n";
      break;
    case Topology::ToT:
      text << "Branch 1: attempt a direct route to the target quantity. "
           << problem.question << "\n"
           << "Branch 2: explore an alternative decomposition of the task.\n"
           << "Branch 3: expand the most promising child one level deeper.\n";
      for (int i = 0; i < filler; ++i) {
        text << "Branch " << 4 + i << ": expand one more child for comparison.\n";
      }
      text << "Comparing child branches and committing to the strongest path.\n"
           << check_line(correct) << "\n";
      break;
    case Topology::GoT:
      text << "Node a: extract the given quantities. " << problem.question << "\n"
           << "Node b: derive an intermediate relation and link it to node a.\n"
           << "Node c: cross check node b against node a through a second path.\n"
           << "Node d: aggregate the strongest neighbor nodes of the graph.\n";
      for (int i = 0; i < filler; ++i) {
        text << "Node e" << i << ": merge one more neighbor node into the graph.\n";
      }
      text << "Merging neighbor nodes into one consistent graph before answering.\n"
           << check_line(correct) << "\n";
      break;
  }
  text << "Final Answer: " << answer;
  return text.str();
}

}  // namespace

std::vector<ResponseRecord> mock_generate(const SyntheticWorld& world,
                                          const Problem& problem,
                                          Topology topology, int n,
                                          std::uint64_t seed) {
  if (n < 1) throw_config("mock_generate: n must be >= 1");
  const WorldEntry& entry = world.entry(problem.id);
  double p = entry.p[topology_index(topology)];

  std::uint64_t stream_seed = mix_seed(
      mix_seed(seed, trm::fnv1a64(problem.id)),
      static_cast<std::uint64_t>(topology_index(topology)));
  std::mt19937_64 rng(stream_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  size_t pool_size = entry.wrong_pool.size();
  std::uniform_int_distribution<size_t> wrong_dist(0, pool_size > 0 ? pool_size - 1 : 0);
  std::uniform_int_distribution<int> filler_dist(0, 2);

  std::vector<ResponseRecord> records;
  records.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    bool correct = unit(rng) < p;
    std::string answer;
    if (correct) {
      answer = problem.reference_answer;
    } else {
      if (pool_size == 0) {
        throw_data("world entry for problem '" + problem.id +
                   "' has an empty wrong-answer pool");
      }
      answer = entry.wrong_pool[wrong_dist(rng)];
    }
    int filler = filler_dist(rng);

    ResponseRecord record;
    std::ostringstream id;
    id << problem.id << "-" << topology_name(topology) << "-";
    id.fill('0');
    id.width(4);
    id << k;
    record.id = id.str();
    record.problem_id = problem.id;
    record.topology = topology;
    record.text = stub_text(topology, problem, answer, correct, filler);
    record.final_answer = extract_final_answer(record.text);
    record.generator = "mock";
    record.seed = static_cast<std::int64_t>(stream_seed);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<Problem> make_synthetic_problems(int count, std::uint64_t seed) {
  if (count < 1) throw_config("make_synthetic_problems: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> small(2, 40);
  std::uniform_int_distribution<int> tiny(2, 9);

  std::vector<Problem> problems;
  problems.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    int a = small(rng);
    int b = small(rng);
    int c = tiny(rng);
    Problem problem;
    std::ostringstream id;
    id << "p";
    id.fill('0');
    id.width(4);
    id << i;
    problem.id = id.str();
    problem.source = "synthetic";
    std::ostringstream question;
    long long value = 0;
    switch (i % 3) {
      case 0:
        question << "Compute the value of (" << a << " + " << b << ") * " << c << ".";
        value = static_cast<long long>(a + b) * c;
        problem.metadata["template"] = "sum-product";
        break;
      case 1:
        question << "A crate holds " << a << " boxes with " << b
                 << " items each; " << c << " items break. How many items remain?";
        value = static_cast<long long>(a) * b - c;
        problem.metadata["template"] = "inventory";
        break;
      default:
        question << "Evaluate " << a << " * " << c << " + " << b << ".";
        value = static_cast<long long>(a) * c + b;
        problem.metadata["template"] = "linear";
        break;
    }
    problem.question = question.str();
    problem.reference_answer = canonicalize_answer(std::to_string(value));
    problems.push_back(std::move(problem));
  }
  return problems;
}

}  // namespace solar::gen
