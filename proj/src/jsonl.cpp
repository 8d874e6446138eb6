#include "solar/jsonl.hpp"

#include <fstream>
#include <unordered_set>

namespace solar::jsonl {

using nlohmann::json;
using nlohmann::ordered_json;

void for_each_line(const std::string& path,
                   const std::function<void(size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open '" + path + "' for reading");
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    json object = json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
      throw_data(path + ":" + std::to_string(line_number) +
                 ": malformed JSONL line");
    }
    fn(line_number, object);
  }
  if (in.bad()) throw_io("read error on '" + path + "'");
}

Writer::Writer(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw_io("cannot open '" + path + "' for writing");
}

Writer::~Writer() {
  if (out_.is_open()) out_.close();
}

void Writer::write(const ordered_json& object) {
  out_ << object.dump() << '\n';
  if (!out_) throw_io("write error on '" + path_ + "'");
}

void Writer::close() {
  out_.close();
  if (out_.fail()) throw_io("write error on '" + path_ + "'");
}

namespace {

std::string context_of(const json& object, const char* id_key) {
  if (object.contains(id_key) && object[id_key].is_string()) {
    return "record '" + object[id_key].get<std::string>() + "'";
  }
  return "record with missing " + std::string(id_key);
}

const json& require(const json& object, const char* key, const std::string& ctx) {
  auto it = object.find(key);
  if (it == object.end()) throw_data(ctx + ": missing key '" + key + "'");
  return *it;
}

std::string require_string(const json& object, const char* key,
                           const std::string& ctx) {
  const json& value = require(object, key, ctx);
  if (!value.is_string()) throw_data(ctx + ": key '" + key + "' must be a string");
  return value.get<std::string>();
}

}  // namespace

ordered_json problem_to_json(const Problem& problem) {
  ordered_json object;
  object["id"] = problem.id;
  object["question"] = problem.question;
  object["reference_answer"] = problem.reference_answer;
  object["source"] = problem.source;
  object["metadata"] = ordered_json::object();
  for (const auto& [key, value] : problem.metadata) object["metadata"][key] = value;
  return object;
}

Problem problem_from_json(const json& object) {
  std::string ctx = context_of(object, "id");
  Problem problem;
  problem.id = require_string(object, "id", ctx);
  problem.question = require_string(object, "question", ctx);
  problem.reference_answer = require_string(object, "reference_answer", ctx);
  problem.source = require_string(object, "source", ctx);
  const json& metadata = require(object, "metadata", ctx);
  if (!metadata.is_object()) throw_data(ctx + ": metadata must be an object");
  for (const auto& [key, value] : metadata.items()) {
    if (!value.is_string()) {
      throw_data(ctx + ": metadata values must be strings");
    }
    problem.metadata[key] = value.get<std::string>();
  }
  validate_problem(problem);
  return problem;
}

ordered_json response_to_json(const ResponseRecord& record) {
  ordered_json object;
  object["id"] = record.id;
  object["problem_id"] = record.problem_id;
  object["topology"] = std::string(topology_name(record.topology));
  object["text"] = record.text;
  object["final_answer"] = record.final_answer;
  if (record.hard_label) {
    object["hard_label"] = *record.hard_label;
  } else {
    object["hard_label"] = nullptr;
  }
  if (record.reward_scores) {
    object["reward_scores"] = {{"topo", record.reward_scores->topo},
                               {"rank", record.reward_scores->rank}};
  } else {
    object["reward_scores"] = nullptr;
  }
  object["generator"] = record.generator;
  object["seed"] = record.seed;
  return object;
}

ResponseRecord response_from_json(const json& object) {
  std::string ctx = context_of(object, "id");
  ResponseRecord record;
  record.id = require_string(object, "id", ctx);
  record.problem_id = require_string(object, "problem_id", ctx);
  record.topology = topology_from_name(require_string(object, "topology", ctx));
  record.text = require_string(object, "text", ctx);
  record.final_answer = require_string(object, "final_answer", ctx);
  const json& hard_label = require(object, "hard_label", ctx);
  if (!hard_label.is_null()) {
    if (!hard_label.is_number_integer()) {
      throw_data(ctx + ": hard_label must be null or an integer");
    }
    record.hard_label = hard_label.get<int>();
  }
  const json& scores = require(object, "reward_scores", ctx);
  if (!scores.is_null()) {
    if (!scores.is_object()) {
      throw_data(ctx + ": reward_scores must be null or an object");
    }
    RewardScores parsed;
    const json& topo = require(scores, "topo", ctx);
    const json& rank = require(scores, "rank", ctx);
    if (!topo.is_number() || !rank.is_number()) {
      throw_data(ctx + ": reward_scores entries must be numbers");
    }
    parsed.topo = topo.get<double>();
    parsed.rank = rank.get<double>();
    record.reward_scores = parsed;
  }
  record.generator = require_string(object, "generator", ctx);
  const json& seed = require(object, "seed", ctx);
  if (!seed.is_number_integer()) throw_data(ctx + ": seed must be an integer");
  record.seed = seed.get<std::int64_t>();
  validate_response(record);
  return record;
}

ordered_json annotation_to_json(const TopoAnnotation& annotation) {
  ordered_json object;
  object["problem_id"] = annotation.problem_id;
  ordered_json counts = ordered_json::object();
  ordered_json labels = ordered_json::object();
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    std::string key(topology_name(t));
    counts[key] = {annotation.n_correct[i], annotation.n_total[i]};
    labels[key] = annotation.topo_labels[i];
  }
  object["counts"] = counts;
  object["topo_labels"] = labels;
  object["max_topo_label"] = annotation.max_topo_label;
  if (annotation.difficulty) {
    object["difficulty"] = std::string(tier_name(*annotation.difficulty));
  } else {
    object["difficulty"] = nullptr;
  }
  return object;
}

TopoAnnotation annotation_from_json(const json& object) {
  std::string ctx = context_of(object, "problem_id");
  TopoAnnotation annotation;
  annotation.problem_id = require_string(object, "problem_id", ctx);
  const json& counts = require(object, "counts", ctx);
  const json& labels = require(object, "topo_labels", ctx);
  if (!counts.is_object() || !labels.is_object()) {
    throw_data(ctx + ": counts and topo_labels must be objects");
  }
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    std::string key(topology_name(t));
    const json& pair = require(counts, key.c_str(), ctx);
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer()) {
      throw_data(ctx + ": counts." + key + " must be [n_correct, n_total]");
    }
    annotation.n_correct[i] = pair[0].get<std::int64_t>();
    annotation.n_total[i] = pair[1].get<std::int64_t>();
    const json& label = require(labels, key.c_str(), ctx);
    if (!label.is_number()) {
      throw_data(ctx + ": topo_labels." + key + " must be a number");
    }
    annotation.topo_labels[i] = label.get<double>();
  }
  const json& max_label = require(object, "max_topo_label", ctx);
  if (!max_label.is_number()) throw_data(ctx + ": max_topo_label must be a number");
  annotation.max_topo_label = max_label.get<double>();
  const json& difficulty = require(object, "difficulty", ctx);
  if (!difficulty.is_null()) {
    if (!difficulty.is_string()) {
      throw_data(ctx + ": difficulty must be null or a string");
    }
    annotation.difficulty = tier_from_name(difficulty.get<std::string>());
  }
  validate_annotation(annotation);
  return annotation;
}

namespace {

template <typename Record>
std::vector<Record> read_all(const std::string& path,
                             Record (*parse)(const json&),
                             const std::string& (*id_of)(const Record&),
                             const char* what) {
  std::vector<Record> records;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](size_t line_number, const json& object) {
    Record record;
    try {
      record = parse(object);
    } catch (const SolarError& e) {
      throw SolarError(e.kind(), path + ":" + std::to_string(line_number) + ": " +
                                     e.what());
    }
    const std::string& id = id_of(record);
    if (!seen.insert(id).second) {
      throw_data(path + ":" + std::to_string(line_number) + ": duplicate " +
                 std::string(what) + " id '" + id + "'");
    }
    records.push_back(std::move(record));
  });
  return records;
}

const std::string& problem_id_of(const Problem& problem) { return problem.id; }
const std::string& response_id_of(const ResponseRecord& record) { return record.id; }
const std::string& annotation_id_of(const TopoAnnotation& annotation) {
  return annotation.problem_id;
}

}  // namespace

std::vector<Problem> read_problems(const std::string& path) {
  return read_all<Problem>(path, problem_from_json, problem_id_of, "problem");
}

std::vector<ResponseRecord> read_responses(const std::string& path) {
  return read_all<ResponseRecord>(path, response_from_json, response_id_of,
                                  "response");
}

std::vector<TopoAnnotation> read_annotations(const std::string& path) {
  return read_all<TopoAnnotation>(path, annotation_from_json, annotation_id_of,
                                  "annotation");
}

void write_problems(const std::string& path, std::span<const Problem> problems) {
  Writer writer(path);
  for (const Problem& problem : problems) {
    validate_problem(problem);
    writer.write(problem_to_json(problem));
  }
  writer.close();
}

void write_responses(const std::string& path,
                     std::span<const ResponseRecord> records) {
  Writer writer(path);
  for (const ResponseRecord& record : records) {
    validate_response(record);
    writer.write(response_to_json(record));
  }
  writer.close();
}

void write_annotations(const std::string& path,
                       std::span<const TopoAnnotation> annotations) {
  Writer writer(path);
  for (const TopoAnnotation& annotation : annotations) {
    validate_annotation(annotation);
    writer.write(annotation_to_json(annotation));
  }
  writer.close();
}

}  // namespace solar::jsonl
