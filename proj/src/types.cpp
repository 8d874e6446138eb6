#include "solar/types.hpp"

#include <cmath>
#include <string>

#include "solar/answer.hpp"

namespace solar {

void throw_config(const std::string& message) {
  throw SolarError(ErrorKind::Config, message);
}

void throw_data(const std::string& message) {
  throw SolarError(ErrorKind::Data, message);
}

void throw_io(const std::string& message) {
  throw SolarError(ErrorKind::Io, message);
}

std::string_view topology_name(Topology t) {
  switch (t) {
    case Topology::CoT: return "cot";
    case Topology::ToT: return "tot";
    case Topology::GoT: return "got";
  }
  throw_data("unknown topology value");
}

Topology topology_from_name(std::string_view name) {
  if (name == "cot") return Topology::CoT;
  if (name == "tot") return Topology::ToT;
  if (name == "got") return Topology::GoT;
  throw_data("unknown topology name: '" + std::string(name) + "'");
}

std::string_view tier_name(DifficultyTier tier) {
  switch (tier) {
    case DifficultyTier::Hard: return "hard";
    case DifficultyTier::Medium: return "medium";
    case DifficultyTier::Easy: return "easy";
  }
  throw_data("unknown difficulty value");
}

DifficultyTier tier_from_name(std::string_view name) {
  if (name == "hard") return DifficultyTier::Hard;
  if (name == "medium") return DifficultyTier::Medium;
  if (name == "easy") return DifficultyTier::Easy;
  throw_data("unknown difficulty name: '" + std::string(name) + "'");
}

void GenerationParams::validate() const {
  if (max_depth < 1) throw_config("generation params: max_depth must be >= 1");
  if (num_children < 1) throw_config("generation params: num_children must be >= 1");
  if (num_neighbors < 1) throw_config("generation params: num_neighbors must be >= 1");
  if (samples_per_topology < 1) {
    throw_config("generation params: samples_per_topology must be >= 1");
  }
  if (!(temperature >= 0.0)) {
    throw_config("generation params: temperature must be >= 0");
  }
}

void validate_problem(const Problem& problem) {
  if (problem.id.empty()) {
    throw_data("problem with empty id violates invariant: id nonempty");
  }
  if (canonicalize_answer(problem.reference_answer) != problem.reference_answer) {
    throw_data("problem '" + problem.id +
               "' violates invariant: reference_answer must be canonical");
  }
}

void validate_response(const ResponseRecord& record) {
  if (record.id.empty()) {
    throw_data("response with empty id violates invariant: id nonempty");
  }
  if (record.problem_id.empty()) {
    throw_data("response '" + record.id +
               "' violates invariant: problem_id nonempty");
  }
  if (record.hard_label && *record.hard_label != 0 && *record.hard_label != 1) {
    throw_data("response '" + record.id +
               "' violates invariant: hard_label must be 0 or 1");
  }
  if (record.final_answer != extract_final_answer(record.text)) {
    throw_data("response '" + record.id +
               "' violates invariant: final_answer must equal the canonicalized "
               "extraction of text");
  }
}

void validate_annotation(const TopoAnnotation& annotation) {
  if (annotation.problem_id.empty()) {
    throw_data("annotation with empty problem_id violates invariant: "
               "problem_id nonempty");
  }
  const std::string& id = annotation.problem_id;
  double max_label = 0.0;
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    std::int64_t correct = annotation.n_correct[i];
    std::int64_t total = annotation.n_total[i];
    if (correct < 0 || total < 0 || correct > total) {
      throw_data("annotation '" + id + "' violates invariant: 0 <= n_correct <= "
                 "n_total for " + std::string(topology_name(t)));
    }
    double expected = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    if (std::abs(annotation.topo_labels[i] - expected) > 1e-9) {
      throw_data("annotation '" + id + "' violates invariant: topo_label must "
                 "equal n_correct/n_total for " + std::string(topology_name(t)));
    }
    if (annotation.topo_labels[i] > max_label) max_label = annotation.topo_labels[i];
  }
  if (std::abs(annotation.max_topo_label - max_label) > 1e-9) {
    throw_data("annotation '" + id +
               "' violates invariant: max_topo_label must equal the largest topo_label");
  }
}

}  // namespace solar
