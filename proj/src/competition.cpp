#include "solar/competition.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "solar/jsonl.hpp"

namespace solar::game {

std::string_view aggregate_name(Aggregate aggregate) {
  switch (aggregate) {
    case Aggregate::Mean: return "mean";
    case Aggregate::Max: return "max";
  }
  throw_data("unknown aggregate value");
}

Aggregate aggregate_from_name(std::string_view name) {
  if (name == "mean") return Aggregate::Mean;
  if (name == "max") return Aggregate::Max;
  throw_config("unknown aggregate mode: '" + std::string(name) + "'");
}

namespace {

struct ScoredResponse {
  const ResponseRecord* record = nullptr;
  RewardScores scores;
};

// Scores every response and groups by topology in response-id order, making
// downstream reductions independent of the input permutation.
PerTopology<std::vector<ScoredResponse>> score_by_topology(
    const Problem& problem, std::span<const ResponseRecord> responses,
    const trm::ResponseScorer& scorer) {
  PerTopology<std::vector<ScoredResponse>> grouped;
  for (const ResponseRecord& record : responses) {
    if (record.problem_id != problem.id) {
      throw_data("response '" + record.id + "' does not belong to problem '" +
                 problem.id + "'");
    }
    grouped[topology_index(record.topology)].push_back(
        ScoredResponse{&record, scorer.score(problem, record)});
  }
  for (auto& group : grouped) {
    std::sort(group.begin(), group.end(),
              [](const ScoredResponse& a, const ScoredResponse& b) {
                return a.record->id < b.record->id;
              });
  }
  return grouped;
}

const ScoredResponse* best_ranked(const std::vector<ScoredResponse>& group) {
  const ScoredResponse* best = nullptr;
  for (const ScoredResponse& candidate : group) {
    if (best == nullptr || candidate.scores.rank > best->scores.rank) {
      best = &candidate;
    }
    // Groups are id-sorted, so an equal score never displaces the earlier id.
  }
  return best;
}

}  // namespace

SelectionResult compete(const Problem& problem,
                        std::span<const ResponseRecord> responses,
                        const trm::ResponseScorer& scorer, Aggregate aggregate) {
  if (responses.empty()) {
    throw_data("competition over problem '" + problem.id +
               "' requires at least one response");
  }
  PerTopology<std::vector<ScoredResponse>> grouped =
      score_by_topology(problem, responses, scorer);

  SelectionResult result;
  result.problem_id = problem.id;

  int winner = -1;
  double winner_score = 0.0;
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    const auto& group = grouped[i];
    if (group.empty()) continue;
    double reduced;
    if (aggregate == Aggregate::Mean) {
      double total = 0.0;
      for (const ScoredResponse& scored : group) total += scored.scores.topo;
      reduced = total / static_cast<double>(group.size());
    } else {
      reduced = group.front().scores.topo;
      for (const ScoredResponse& scored : group) {
        reduced = std::max(reduced, scored.scores.topo);
      }
    }
    result.topology_scores[i] = reduced;
    if (winner < 0 || reduced > winner_score) {
      winner = i;
      winner_score = reduced;
    }
    // Canonical order breaks ties: an equal later score never wins.
  }

  result.winning_topology = kTopologies[static_cast<size_t>(winner)];
  const ScoredResponse* chosen = best_ranked(grouped[winner]);
  result.chosen_response_id = chosen->record->id;
  result.chosen_answer = chosen->record->final_answer;
  return result;
}

std::vector<ResponseRecord> rejection_sample(const Problem& problem,
                                             std::span<const ResponseRecord> responses,
                                             const trm::ResponseScorer& scorer,
                                             int top_k) {
  if (top_k < 1) throw_config("rejection_sample: top_k must be >= 1");
  PerTopology<std::vector<ScoredResponse>> grouped =
      score_by_topology(problem, responses, scorer);

  std::unordered_set<const ResponseRecord*> kept;
  for (auto& group : grouped) {
    std::vector<const ScoredResponse*> correct;
    for (const ScoredResponse& scored : group) {
      if (!scored.record->hard_label) {
        throw_data("response '" + scored.record->id +
                   "' lacks a hard label; rejection sampling undefined");
      }
      if (*scored.record->hard_label == 1) correct.push_back(&scored);
    }
    std::stable_sort(correct.begin(), correct.end(),
                     [](const ScoredResponse* a, const ScoredResponse* b) {
                       return a->scores.rank > b->scores.rank;
                     });
    size_t keep = std::min(static_cast<size_t>(top_k), correct.size());
    for (size_t i = 0; i < keep; ++i) kept.insert(correct[i]->record);
  }

  std::vector<ResponseRecord> result;
  for (const ResponseRecord& record : responses) {
    if (kept.contains(&record)) result.push_back(record);
  }
  return result;
}

void CurationConfig::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw_config("curation: fraction must lie in (0, 1]");
  }
  if (top_k < 1) throw_config("curation: top_k must be >= 1");
}

CurationResult curate_sft(const std::vector<Problem>& problems,
                          const std::vector<ResponseRecord>& responses,
                          const std::vector<TopoAnnotation>& annotations,
                          const trm::ResponseScorer& scorer,
                          const CurationConfig& config) {
  config.validate();

  std::unordered_map<std::string, const Problem*> problem_by_id;
  for (const Problem& problem : problems) problem_by_id[problem.id] = &problem;

  std::unordered_map<std::string, std::vector<const ResponseRecord*>> responses_by_problem;
  for (const ResponseRecord& record : responses) {
    responses_by_problem[record.problem_id].push_back(&record);
  }

  std::unordered_map<std::string, DifficultyTier> tier_by_problem;
  std::array<std::vector<std::string>, 3> tier_members;
  for (const TopoAnnotation& annotation : annotations) {
    if (!annotation.difficulty) {
      throw_data("annotation '" + annotation.problem_id +
                 "' lacks a difficulty tier; segment the dataset first");
    }
    tier_by_problem[annotation.problem_id] = *annotation.difficulty;
    tier_members[static_cast<size_t>(*annotation.difficulty)].push_back(
        annotation.problem_id);
  }

  CurationResult result;
  std::mt19937_64 rng(config.seed);
  for (DifficultyTier tier : kTiers) {
    size_t index = static_cast<size_t>(tier);
    std::vector<std::string>& members = tier_members[index];
    result.tier_sizes[index] = members.size();
    if (members.empty()) {
      result.warnings.push_back("tier '" + std::string(tier_name(tier)) +
                                "' has no problems; skipped");
      continue;
    }
    std::sort(members.begin(), members.end());
    size_t want = static_cast<size_t>(config.fraction * static_cast<double>(members.size()));
    want = std::min(want, members.size());
    std::shuffle(members.begin(), members.end(), rng);
    std::vector<std::string> selected(members.begin(),
                                      members.begin() + static_cast<long>(want));
    std::sort(selected.begin(), selected.end());
    result.sampled_per_tier[index] = selected.size();

    for (const std::string& problem_id : selected) {
      auto problem_it = problem_by_id.find(problem_id);
      if (problem_it == problem_by_id.end()) {
        throw_data("annotation references unknown problem '" + problem_id + "'");
      }
      auto responses_it = responses_by_problem.find(problem_id);
      if (responses_it == responses_by_problem.end()) continue;

      std::vector<ResponseRecord> candidates;
      candidates.reserve(responses_it->second.size());
      for (const ResponseRecord* record : responses_it->second) {
        candidates.push_back(*record);
      }
      std::vector<ResponseRecord> kept = rejection_sample(
          *problem_it->second, candidates, scorer, config.top_k);
      for (const ResponseRecord& record : kept) {
        result.records.push_back(SftRecord{problem_it->second->question, record.text,
                                           record.topology, tier});
      }
    }
  }
  return result;
}

namespace {

bool majority_vote_correct(const Problem& problem,
                           const std::vector<const ResponseRecord*>& records) {
  if (records.empty()) return false;
  std::map<std::string, size_t> votes;
  for (const ResponseRecord* record : records) ++votes[record->final_answer];
  // Iteration is answer-sorted, so taking strict improvements picks the
  // lexicographically smallest answer among tied vote counts.
  std::string winner;
  size_t best = 0;
  for (const auto& [answer, count] : votes) {
    if (count > best) {
      best = count;
      winner = answer;
    }
  }
  return winner == problem.reference_answer;
}

}  // namespace

StrategyReport evaluate_strategy(const std::vector<Problem>& problems,
                                 const std::vector<ResponseRecord>& responses,
                                 const std::vector<TopoAnnotation>& annotations,
                                 const Strategy& strategy,
                                 const trm::ResponseScorer* scorer,
                                 Aggregate aggregate) {
  if (problems.empty()) throw_data("strategy evaluation requires problems");
  if ((strategy.kind == StrategyKind::Rewarding ||
       strategy.kind == StrategyKind::OracleTopology) &&
      scorer == nullptr) {
    throw_config("strategy evaluation requires a reward model scorer");
  }

  std::unordered_map<std::string, std::vector<const ResponseRecord*>> by_problem;
  for (const ResponseRecord& record : responses) {
    by_problem[record.problem_id].push_back(&record);
  }
  std::unordered_map<std::string, const TopoAnnotation*> annotation_by_problem;
  for (const TopoAnnotation& annotation : annotations) {
    annotation_by_problem[annotation.problem_id] = &annotation;
  }

  StrategyReport report;
  switch (strategy.kind) {
    case StrategyKind::FixedTopology:
      report.name = "fixed_" + std::string(topology_name(strategy.fixed));
      break;
    case StrategyKind::Rewarding: report.name = "rewarding"; break;
    case StrategyKind::OracleTopology: report.name = "oracle_topology"; break;
  }
  report.problems = problems.size();
  size_t correct = 0;

  for (const Problem& problem : problems) {
    auto it = by_problem.find(problem.id);
    if (it == by_problem.end()) continue;  // counts as incorrect
    const std::vector<const ResponseRecord*>& records = it->second;

    switch (strategy.kind) {
      case StrategyKind::FixedTopology: {
        std::vector<const ResponseRecord*> subset;
        for (const ResponseRecord* record : records) {
          if (record->topology == strategy.fixed) subset.push_back(record);
        }
        if (majority_vote_correct(problem, subset)) ++correct;
        break;
      }
      case StrategyKind::Rewarding: {
        std::vector<ResponseRecord> copy;
        copy.reserve(records.size());
        for (const ResponseRecord* record : records) copy.push_back(*record);
        SelectionResult selection = compete(problem, copy, *scorer, aggregate);
        if (selection.chosen_answer == problem.reference_answer) ++correct;
        break;
      }
      case StrategyKind::OracleTopology: {
        auto annotation_it = annotation_by_problem.find(problem.id);
        if (annotation_it == annotation_by_problem.end()) break;
        const TopoAnnotation& annotation = *annotation_it->second;
        int best = -1;
        double best_label = -1.0;
        for (Topology t : kTopologies) {
          int i = topology_index(t);
          if (annotation.n_total[i] == 0) continue;
          if (annotation.topo_labels[i] > best_label) {
            best_label = annotation.topo_labels[i];
            best = i;
          }
        }
        if (best < 0) break;
        std::vector<ResponseRecord> subset;
        for (const ResponseRecord* record : records) {
          if (topology_index(record->topology) == best) subset.push_back(*record);
        }
        if (subset.empty()) break;
        SelectionResult selection =
            compete(problem, subset, *scorer, aggregate);
        if (selection.chosen_answer == problem.reference_answer) ++correct;
        break;
      }
    }
  }

  report.accuracy = static_cast<double>(correct) / static_cast<double>(problems.size());
  return report;
}

void write_selections(const std::string& path,
                      std::span<const SelectionResult> selections) {
  jsonl::Writer writer(path);
  for (const SelectionResult& selection : selections) {
    nlohmann::ordered_json object;
    object["problem_id"] = selection.problem_id;
    object["winning_topology"] = std::string(topology_name(selection.winning_topology));
    object["chosen_response_id"] = selection.chosen_response_id;
    object["chosen_answer"] = selection.chosen_answer;
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    for (Topology t : kTopologies) {
      int i = topology_index(t);
      if (selection.topology_scores[i]) {
        scores[std::string(topology_name(t))] = *selection.topology_scores[i];
      }
    }
    object["scores"] = scores;
    writer.write(object);
  }
  writer.close();
}

std::vector<SelectionResult> read_selections(const std::string& path) {
  std::vector<SelectionResult> selections;
  jsonl::for_each_line(path, [&](size_t, const nlohmann::json& object) {
    SelectionResult selection;
    selection.problem_id = object.at("problem_id").get<std::string>();
    selection.winning_topology =
        topology_from_name(object.at("winning_topology").get<std::string>());
    selection.chosen_response_id = object.at("chosen_response_id").get<std::string>();
    selection.chosen_answer = object.at("chosen_answer").get<std::string>();
    for (const auto& [key, value] : object.at("scores").items()) {
      selection.topology_scores[topology_index(topology_from_name(key))] =
          value.get<double>();
    }
    selections.push_back(std::move(selection));
  });
  return selections;
}

void write_sft(const std::string& path, std::span<const SftRecord> records) {
  jsonl::Writer writer(path);
  for (const SftRecord& record : records) {
    nlohmann::ordered_json object;
    object["prompt"] = record.prompt;
    object["completion"] = record.completion;
    object["topology"] = std::string(topology_name(record.topology));
    object["difficulty"] = std::string(tier_name(record.difficulty));
    writer.write(object);
  }
  writer.close();
}

std::vector<SftRecord> read_sft(const std::string& path) {
  std::vector<SftRecord> records;
  jsonl::for_each_line(path, [&](size_t, const nlohmann::json& object) {
    SftRecord record;
    record.prompt = object.at("prompt").get<std::string>();
    record.completion = object.at("completion").get<std::string>();
    record.topology = topology_from_name(object.at("topology").get<std::string>());
    record.difficulty = tier_from_name(object.at("difficulty").get<std::string>());
    records.push_back(std::move(record));
  });
  return records;
}

}  // namespace solar::game
