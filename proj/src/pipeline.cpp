#include "solar/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "solar/answer.hpp"
#include "solar/jsonl.hpp"
#include "solar/metrics.hpp"

namespace solar::pipeline {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string joined(std::string_view scope, std::string_view key) {
  if (scope.empty()) return std::string(key);
  return std::string(scope) + "." + std::string(key);
}

void check_keys(const json& object, std::string_view scope,
                std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) {
    throw_config("config section '" + std::string(scope.empty() ? "<root>" : scope) +
                 "' must be a JSON object");
  }
  for (const auto& item : object.items()) {
    bool known = false;
    for (std::string_view key : allowed) {
      if (item.key() == key) { known = true; break; }
    }
    if (!known) throw_config("unknown config key '" + joined(scope, item.key()) + "'");
  }
}

template <typename T>
void read_field(const json& object, std::string_view scope, std::string_view key,
                T& out) {
  auto it = object.find(key);
  if (it == object.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw_config("config key '" + joined(scope, key) + "' has the wrong type");
  }
}

void parse_paths(const json& object, Paths& paths) {
  check_keys(object, "paths",
             {"problems", "responses", "annotations", "model", "selections", "sft",
              "report_csv", "report_json", "errors"});
  read_field(object, "paths", "problems", paths.problems);
  read_field(object, "paths", "responses", paths.responses);
  read_field(object, "paths", "annotations", paths.annotations);
  read_field(object, "paths", "model", paths.model);
  read_field(object, "paths", "selections", paths.selections);
  read_field(object, "paths", "sft", paths.sft);
  read_field(object, "paths", "report_csv", paths.report_csv);
  read_field(object, "paths", "report_json", paths.report_json);
  read_field(object, "paths", "errors", paths.errors);
}

void parse_segment(const json& object, tag::SegmentationConfig& segment) {
  check_keys(object, "segment", {"q_low", "q_high"});
  read_field(object, "segment", "q_low", segment.q_low);
  read_field(object, "segment", "q_high", segment.q_high);
}

void parse_trm(const json& object, TrmSettings& settings) {
  check_keys(object, "trm",
             {"beta", "lambda_mse", "lambda_rank", "learning_rate", "epochs",
              "batch_size", "seed", "hash_dim", "hidden", "pairs_per_problem",
              "train_fraction"});
  read_field(object, "trm", "beta", settings.training.beta);
  read_field(object, "trm", "lambda_mse", settings.training.lambda_mse);
  read_field(object, "trm", "lambda_rank", settings.training.lambda_rank);
  read_field(object, "trm", "learning_rate", settings.training.learning_rate);
  read_field(object, "trm", "epochs", settings.training.epochs);
  read_field(object, "trm", "batch_size", settings.training.batch_size);
  read_field(object, "trm", "seed", settings.training.seed);
  read_field(object, "trm", "hash_dim", settings.hash_dim);
  read_field(object, "trm", "hidden", settings.hidden);
  read_field(object, "trm", "pairs_per_problem", settings.pairs_per_problem);
  read_field(object, "trm", "train_fraction", settings.train_fraction);
}

void parse_endpoint(const json& object, gen::EndpointConfig& endpoint) {
  check_keys(object, "generation.endpoint",
             {"base_url", "model_name", "api_key_env", "max_concurrency",
              "timeout_ms", "retries"});
  read_field(object, "generation.endpoint", "base_url", endpoint.base_url);
  read_field(object, "generation.endpoint", "model_name", endpoint.model_name);
  read_field(object, "generation.endpoint", "api_key_env", endpoint.api_key_env);
  read_field(object, "generation.endpoint", "max_concurrency", endpoint.max_concurrency);
  read_field(object, "generation.endpoint", "timeout_ms", endpoint.timeout_ms);
  read_field(object, "generation.endpoint", "retries", endpoint.retries);
}

void parse_generation(const json& object, GenerationSettings& settings) {
  check_keys(object, "generation",
             {"mode", "profile", "n", "seed", "tuned_boost", "problems_count",
              "params", "endpoint"});
  read_field(object, "generation", "mode", settings.mode);
  if (auto it = object.find("profile"); it != object.end()) {
    if (!it->is_string()) {
      throw_config("config key 'generation.profile' has the wrong type");
    }
    settings.profile = gen::world_profile_from_name(it->get<std::string>());
  }
  read_field(object, "generation", "n", settings.n);
  read_field(object, "generation", "seed", settings.seed);
  read_field(object, "generation", "tuned_boost", settings.tuned_boost);
  read_field(object, "generation", "problems_count", settings.problems_count);
  if (auto it = object.find("params"); it != object.end()) {
    check_keys(*it, "generation.params",
               {"max_depth", "num_children", "num_neighbors", "samples_per_topology",
                "temperature"});
    read_field(*it, "generation.params", "max_depth", settings.params.max_depth);
    read_field(*it, "generation.params", "num_children", settings.params.num_children);
    read_field(*it, "generation.params", "num_neighbors", settings.params.num_neighbors);
    read_field(*it, "generation.params", "samples_per_topology",
               settings.params.samples_per_topology);
    read_field(*it, "generation.params", "temperature", settings.params.temperature);
  }
  if (auto it = object.find("endpoint"); it != object.end()) {
    gen::EndpointConfig endpoint;
    parse_endpoint(*it, endpoint);
    settings.endpoint = endpoint;
  }
}

ordered_json summary_base(std::string_view command) {
  ordered_json object;
  object["command"] = std::string(command);
  return object;
}

ordered_json per_topology_json(const PerTopology<double>& values) {
  ordered_json object;
  for (Topology t : kTopologies) {
    object[std::string(topology_name(t))] = values[topology_index(t)];
  }
  return object;
}

std::unordered_map<std::string, const Problem*> index_problems(
    const std::vector<Problem>& problems) {
  std::unordered_map<std::string, const Problem*> index;
  for (const Problem& problem : problems) index[problem.id] = &problem;
  return index;
}

std::unordered_map<std::string, const TopoAnnotation*> index_annotations(
    const std::vector<TopoAnnotation>& annotations) {
  std::unordered_map<std::string, const TopoAnnotation*> index;
  for (const TopoAnnotation& annotation : annotations) {
    index[annotation.problem_id] = &annotation;
  }
  return index;
}

const Problem& problem_for(const std::unordered_map<std::string, const Problem*>& index,
                           const ResponseRecord& record) {
  auto it = index.find(record.problem_id);
  if (it == index.end()) {
    throw_data("response '" + record.id + "' references unknown problem '" +
               record.problem_id + "'");
  }
  return *it->second;
}

// Everything needed to score a model on one side of the problem-id split.
struct SplitData {
  std::vector<Problem> problems;
  std::vector<ResponseRecord> responses;
  std::vector<TopoAnnotation> annotations;
};

SplitData select_split(const std::vector<Problem>& problems,
                       const std::vector<ResponseRecord>& responses,
                       const std::vector<TopoAnnotation>& annotations,
                       double train_fraction, bool want_train) {
  SplitData split;
  std::unordered_set<std::string> keep;
  for (const Problem& problem : problems) {
    if (in_train_split(problem.id, train_fraction) == want_train) {
      keep.insert(problem.id);
      split.problems.push_back(problem);
    }
  }
  for (const ResponseRecord& record : responses) {
    if (keep.count(record.problem_id)) split.responses.push_back(record);
  }
  for (const TopoAnnotation& annotation : annotations) {
    if (keep.count(annotation.problem_id)) split.annotations.push_back(annotation);
  }
  return split;
}

trm::TrainingData build_training_data(const SplitData& split,
                                      const trm::FeatureConfig& features,
                                      int pairs_per_problem, std::uint64_t seed) {
  auto problem_index = index_problems(split.problems);
  auto annotation_index = index_annotations(split.annotations);

  trm::TrainingData data;
  data.regression.reserve(split.responses.size());
  for (const ResponseRecord& record : split.responses) {
    const Problem& problem = problem_for(problem_index, record);
    auto it = annotation_index.find(record.problem_id);
    if (it == annotation_index.end()) {
      throw_data("problem '" + record.problem_id +
                 "' has responses but no annotation; run annotate first");
    }
    trm::RegressionItem item;
    item.features = trm::featurize(problem, record, features);
    item.target = it->second->topo_labels[topology_index(record.topology)];
    data.regression.push_back(std::move(item));
  }

  std::vector<trm::PreferencePair> pairs =
      trm::build_pairs(split.responses, pairs_per_problem, seed);
  data.pairs.reserve(pairs.size());
  for (const trm::PreferencePair& pair : pairs) {
    auto it = problem_index.find(pair.problem_id);
    if (it == problem_index.end()) {
      throw_data("preference pair references unknown problem '" + pair.problem_id + "'");
    }
    trm::PairItem item;
    item.preferred = trm::featurize(*it->second, pair.preferred, features);
    item.dispreferred = trm::featurize(*it->second, pair.dispreferred, features);
    data.pairs.push_back(std::move(item));
  }
  return data;
}

struct TrmEvalOutcome {
  metrics::TrmEvalMetrics metrics;
  size_t test_problems = 0;
};

// Regression Spearman and pairwise ranking accuracy over the held-out split,
// using the feature geometry stored inside the model itself.
TrmEvalOutcome compute_trm_eval(const trm::TrmModel& model,
                                const std::vector<Problem>& problems,
                                const std::vector<ResponseRecord>& responses,
                                const std::vector<TopoAnnotation>& annotations,
                                const TrmSettings& settings) {
  SplitData split = select_split(problems, responses, annotations,
                                 settings.train_fraction, /*want_train=*/false);
  if (split.responses.empty()) {
    throw_data("evaluation split is empty; lower trm.train_fraction or add problems");
  }
  auto problem_index = index_problems(split.problems);
  auto annotation_index = index_annotations(split.annotations);

  std::vector<double> truth;
  std::vector<double> predicted;
  truth.reserve(split.responses.size());
  predicted.reserve(split.responses.size());
  for (const ResponseRecord& record : split.responses) {
    const Problem& problem = problem_for(problem_index, record);
    auto it = annotation_index.find(record.problem_id);
    if (it == annotation_index.end()) {
      throw_data("problem '" + record.problem_id +
                 "' has responses but no annotation; run annotate first");
    }
    truth.push_back(it->second->topo_labels[topology_index(record.topology)]);
    trm::FeatureVector features = trm::featurize(problem, record, model.features());
    predicted.push_back(trm::forward(model, features).topo);
  }

  std::vector<trm::PreferencePair> pairs = trm::build_pairs(
      split.responses, settings.pairs_per_problem, settings.training.seed);
  std::vector<std::pair<double, double>> scored;
  scored.reserve(pairs.size());
  for (const trm::PreferencePair& pair : pairs) {
    const Problem& problem = *problem_index.at(pair.problem_id);
    trm::FeatureVector pos = trm::featurize(problem, pair.preferred, model.features());
    trm::FeatureVector neg = trm::featurize(problem, pair.dispreferred, model.features());
    scored.emplace_back(trm::forward(model, pos).rank, trm::forward(model, neg).rank);
  }
  if (scored.empty()) {
    throw_data("evaluation split produced no preference pairs");
  }

  TrmEvalOutcome outcome;
  outcome.metrics.spearman_rho = metrics::spearman_rho(truth, predicted);
  outcome.metrics.pairwise_accuracy = metrics::pairwise_accuracy(scored);
  outcome.metrics.regression_instances = truth.size();
  outcome.metrics.pair_count = scored.size();
  outcome.test_problems = split.problems.size();
  return outcome;
}

std::string format_metric(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

}  // namespace

void PipelineConfig::validate() const {
  auto require_path = [](const std::string& value, std::string_view key) {
    if (value.empty()) throw_config("config key 'paths." + std::string(key) + "' is empty");
  };
  require_path(paths.problems, "problems");
  require_path(paths.responses, "responses");
  require_path(paths.annotations, "annotations");
  require_path(paths.model, "model");
  require_path(paths.selections, "selections");
  require_path(paths.sft, "sft");
  require_path(paths.report_csv, "report_csv");
  require_path(paths.report_json, "report_json");
  require_path(paths.errors, "errors");

  segment.validate();
  trm.training.validate();
  trm::FeatureConfig{trm.hash_dim}.validate();
  if (trm.hidden < 1) throw_config("trm.hidden must be at least 1");
  if (trm.pairs_per_problem < 1) throw_config("trm.pairs_per_problem must be at least 1");
  if (!(trm.train_fraction > 0.0) || trm.train_fraction > 1.0) {
    throw_config("trm.train_fraction must lie in (0, 1]");
  }
  curate.validate();

  if (generation.mode != "mock" && generation.mode != "endpoint") {
    throw_config("generation.mode must be 'mock' or 'endpoint'");
  }
  if (generation.n < 1) throw_config("generation.n must be at least 1");
  if (generation.problems_count < 1) {
    throw_config("generation.problems_count must be at least 1");
  }
  if (generation.tuned_boost < 0.0) {
    throw_config("generation.tuned_boost must be non-negative");
  }
  generation.params.validate();
  if (generation.mode == "endpoint") {
    if (!generation.endpoint) {
      throw_config("generation.endpoint is required when generation.mode is 'endpoint'");
    }
    generation.endpoint->validate();
  }
}

PipelineConfig default_config() { return PipelineConfig{}; }

PipelineConfig parse_config(const json& document) {
  PipelineConfig config;
  check_keys(document, "", {"paths", "segment", "trm", "compete", "curate", "generation"});
  if (auto it = document.find("paths"); it != document.end()) {
    parse_paths(*it, config.paths);
  }
  if (auto it = document.find("segment"); it != document.end()) {
    parse_segment(*it, config.segment);
  }
  if (auto it = document.find("trm"); it != document.end()) {
    parse_trm(*it, config.trm);
  }
  if (auto it = document.find("compete"); it != document.end()) {
    check_keys(*it, "compete", {"aggregate"});
    if (auto agg = it->find("aggregate"); agg != it->end()) {
      if (!agg->is_string()) {
        throw_config("config key 'compete.aggregate' has the wrong type");
      }
      config.aggregate = game::aggregate_from_name(agg->get<std::string>());
    }
  }
  if (auto it = document.find("curate"); it != document.end()) {
    check_keys(*it, "curate", {"fraction", "top_k", "seed"});
    read_field(*it, "curate", "fraction", config.curate.fraction);
    read_field(*it, "curate", "top_k", config.curate.top_k);
    read_field(*it, "curate", "seed", config.curate.seed);
  }
  if (auto it = document.find("generation"); it != document.end()) {
    parse_generation(*it, config.generation);
  }
  config.validate();
  return config;
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open config file '" + path + "'");
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& error) {
    throw_config("config file '" + path + "' is not valid JSON: " + error.what());
  }
  return parse_config(document);
}

bool in_train_split(const std::string& problem_id, double train_fraction) {
  std::uint64_t bucket = trm::fnv1a64(problem_id) % 10000;
  return static_cast<double>(bucket) < train_fraction * 10000.0;
}

CommandSummary cmd_make_problems(const PipelineConfig& config) {
  std::vector<Problem> problems = gen::make_synthetic_problems(
      config.generation.problems_count, config.generation.seed);
  jsonl::write_problems(config.paths.problems, problems);

  CommandSummary summary;
  summary.json = summary_base("make-problems");
  summary.json["problems"] = problems.size();
  summary.json["seed"] = config.generation.seed;
  summary.json["path"] = config.paths.problems;
  return summary;
}

CommandSummary cmd_generate(const PipelineConfig& config) {
  std::vector<Problem> problems = jsonl::read_problems(config.paths.problems);
  if (problems.empty()) {
    throw_data("problems file '" + config.paths.problems + "' is empty");
  }
  const GenerationSettings& settings = config.generation;

  CommandSummary summary;
  summary.json = summary_base("generate");
  summary.json["mode"] = settings.mode;

  std::vector<ResponseRecord> responses;
  if (settings.mode == "mock") {
    gen::SyntheticWorld world =
        gen::plant_world(problems, settings.profile, settings.seed);
    if (settings.tuned_boost > 0.0) {
      gen::apply_tuning_boost(world, settings.tuned_boost);
    }
    for (const Problem& problem : problems) {
      for (Topology topology : kTopologies) {
        std::vector<ResponseRecord> drawn =
            gen::mock_generate(world, problem, topology, settings.n, settings.seed);
        responses.insert(responses.end(), std::make_move_iterator(drawn.begin()),
                         std::make_move_iterator(drawn.end()));
      }
    }
    summary.json["profile"] = std::string(gen::world_profile_name(settings.profile));
    summary.json["seed"] = settings.seed;
    if (settings.tuned_boost > 0.0) summary.json["tuned_boost"] = settings.tuned_boost;
  } else {
    const gen::EndpointConfig& endpoint = *settings.endpoint;
    size_t failures = 0;
    jsonl::Writer errors(config.paths.errors);
    for (const Problem& problem : problems) {
      for (Topology topology : kTopologies) {
        gen::HttpGenerationResult result = gen::http_generate(
            endpoint, problem, topology, settings.params, settings.n);
        responses.insert(responses.end(),
                         std::make_move_iterator(result.responses.begin()),
                         std::make_move_iterator(result.responses.end()));
        for (const gen::GenerationError& error : result.errors) {
          ordered_json line;
          line["problem_id"] = problem.id;
          line["topology"] = std::string(topology_name(topology));
          line["request_index"] = error.request_index;
          line["message"] = error.message;
          errors.write(line);
          ++failures;
        }
      }
    }
    errors.close();
    summary.json["model"] = endpoint.model_name;
    summary.json["failed_requests"] = failures;
    summary.json["errors_path"] = config.paths.errors;
    summary.partial = failures > 0;
  }

  jsonl::write_responses(config.paths.responses, responses);
  summary.json["problems"] = problems.size();
  summary.json["samples_per_topology"] = settings.n;
  summary.json["responses"] = responses.size();
  summary.json["path"] = config.paths.responses;
  return summary;
}

CommandSummary cmd_annotate(const PipelineConfig& config) {
  std::vector<Problem> problems = jsonl::read_problems(config.paths.problems);
  std::vector<ResponseRecord> responses = jsonl::read_responses(config.paths.responses);
  if (responses.empty()) {
    throw_data("responses file '" + config.paths.responses + "' is empty");
  }
  tag::assign_hard_labels(responses, problems);

  std::unordered_map<std::string, std::vector<ResponseRecord>> by_problem;
  for (const ResponseRecord& record : responses) {
    by_problem[record.problem_id].push_back(record);
  }

  std::vector<TopoAnnotation> annotations;
  size_t skipped = 0;
  PerTopology<long long> total_correct{0, 0, 0};
  PerTopology<long long> total_samples{0, 0, 0};
  for (const Problem& problem : problems) {
    auto it = by_problem.find(problem.id);
    if (it == by_problem.end()) {
      ++skipped;
      continue;
    }
    TopoAnnotation annotation = tag::compute_topo_annotation(problem.id, it->second);
    for (Topology t : kTopologies) {
      int i = topology_index(t);
      total_correct[i] += annotation.n_correct[i];
      total_samples[i] += annotation.n_total[i];
    }
    annotations.push_back(std::move(annotation));
  }
  if (annotations.empty()) {
    throw_data("no problem in '" + config.paths.problems + "' has responses");
  }

  jsonl::write_responses(config.paths.responses, responses);
  jsonl::write_annotations(config.paths.annotations, annotations);

  CommandSummary summary;
  summary.json = summary_base("annotate");
  summary.json["problems"] = annotations.size();
  summary.json["problems_without_responses"] = skipped;
  summary.json["responses"] = responses.size();
  ordered_json counts;
  for (Topology t : kTopologies) {
    int i = topology_index(t);
    counts[std::string(topology_name(t))] =
        ordered_json::array({total_correct[i], total_samples[i]});
  }
  summary.json["aggregate_counts"] = counts;
  summary.json["annotations_path"] = config.paths.annotations;
  summary.json["responses_path"] = config.paths.responses;
  return summary;
}

CommandSummary cmd_segment(const PipelineConfig& config) {
  std::vector<TopoAnnotation> annotations =
      jsonl::read_annotations(config.paths.annotations);
  tag::SegmentationThresholds thresholds =
      tag::segmentation_thresholds(annotations, config.segment);
  annotations = tag::segment_difficulty(std::move(annotations), config.segment);
  jsonl::write_annotations(config.paths.annotations, annotations);

  std::array<size_t, 3> tier_counts{0, 0, 0};
  for (const TopoAnnotation& annotation : annotations) {
    tier_counts[static_cast<int>(*annotation.difficulty)] += 1;
  }

  CommandSummary summary;
  summary.json = summary_base("segment");
  summary.json["problems"] = annotations.size();
  summary.json["q_low"] = config.segment.q_low;
  summary.json["q_high"] = config.segment.q_high;
  summary.json["thresholds"] = ordered_json{
      {"low", per_topology_json(thresholds.lo)},
      {"high", per_topology_json(thresholds.hi)},
  };
  ordered_json tiers;
  for (DifficultyTier tier : kTiers) {
    tiers[std::string(tier_name(tier))] = tier_counts[static_cast<int>(tier)];
  }
  summary.json["tiers"] = tiers;
  summary.json["path"] = config.paths.annotations;
  return summary;
}

CommandSummary cmd_train_trm(const PipelineConfig& config) {
  std::vector<Problem> problems = jsonl::read_problems(config.paths.problems);
  std::vector<ResponseRecord> responses = jsonl::read_responses(config.paths.responses);
  std::vector<TopoAnnotation> annotations =
      jsonl::read_annotations(config.paths.annotations);

  SplitData split = select_split(problems, responses, annotations,
                                 config.trm.train_fraction, /*want_train=*/true);
  if (split.responses.empty()) {
    throw_data("training split is empty; raise trm.train_fraction or add problems");
  }

  trm::FeatureConfig features{config.trm.hash_dim};
  trm::TrainingData data = build_training_data(
      split, features, config.trm.pairs_per_problem, config.trm.training.seed);
  trm::TrainResult result =
      trm::train(data, features, config.trm.hidden, config.trm.training);
  trm::save_model(result.model, config.paths.model);

  CommandSummary summary;
  summary.json = summary_base("train-trm");
  summary.json["train_problems"] = split.problems.size();
  summary.json["test_problems"] = problems.size() - split.problems.size();
  summary.json["regression_instances"] = data.regression.size();
  summary.json["preference_pairs"] = data.pairs.size();
  summary.json["epochs"] = config.trm.training.epochs;
  summary.json["first_epoch_loss"] = result.epoch_loss.front();
  summary.json["final_loss"] = result.epoch_loss.back();
  summary.json["model_path"] = config.paths.model;
  return summary;
}

CommandSummary cmd_eval_trm(const PipelineConfig& config) {
  trm::TrmModel model = trm::load_model(config.paths.model);
  std::vector<Problem> problems = jsonl::read_problems(config.paths.problems);
  std::vector<ResponseRecord> responses = jsonl::read_responses(config.paths.responses);
  std::vector<TopoAnnotation> annotations =
      jsonl::read_annotations(config.paths.annotations);

  TrmEvalOutcome outcome =
      compute_trm_eval(model, problems, responses, annotations, config.trm);

  CommandSummary summary;
  summary.json = summary_base("eval-trm");
  summary.json["test_problems"] = outcome.test_problems;
  summary.json["regression_instances"] = outcome.metrics.regression_instances;
  summary.json["spearman_rho"] = outcome.metrics.spearman_rho;
  summary.json["preference_pairs"] = outcome.metrics.pair_count;
  summary.json["pairwise_accuracy"] = outcome.metrics.pairwise_accuracy;
  return summary;
}

CommandSummary cmd_compete(const PipelineConfig& config) {
  // Model problems surface before any data file is touched.
  trm::TrmScorer scorer(trm::load_model(config.paths.model));
  std::vector<Problem> problems = jsonl::read_problems(config.paths.problems);
  std::vector<ResponseRecord> responses = jsonl::read_responses(config.paths.responses);

  std::unordered_map<std::string, std::vector<ResponseRecord>> by_problem;
  for (ResponseRecord& record : responses) {
    by_problem[record.problem_id].push_back(std::move(record));
  }

  std::vector<game::SelectionResult> selections;
  size_t skipped = 0;
  size_t correct = 0;
  PerTopology<size_t> winners{0, 0, 0};
  for (const Problem& problem : problems) {
    auto it = by_problem.find(problem.id);
    if (it == by_problem.end()) {
      ++skipped;
      continue;
    }
    game::SelectionResult selection =
        game::compete(problem, it->second, scorer, config.aggregate);
    winners[topology_index(selection.winning_topology)] += 1;
    if (selection.chosen_answer == problem.reference_answer) ++correct;
    selections.push_back(std::move(selection));
  }
  if (selections.empty()) {
    throw_data("no problem in '" + config.paths.problems + "' has responses");
  }
  game::write_selections(config.paths.selections, selections);

  CommandSummary summary;
  summary.json = summary_base("compete");
  summary.json["aggregate"] = std::string(game::aggregate_name(config.aggregate));
  summary.json["problems"] = selections.size();
  summary.json["problems_without_responses"] = skipped;
  summary.json["selection_accuracy"] =
      static_cast<double>(correct) / static_cast<double>(selections.size());
  ordered_json winner_counts;
  for (Topology t : kTopologies) {
    winner_counts[std::string(topology_name(t))] = winners[topology_index(t)];
  }
  summary.json["winners"] = winner_counts;
  summary.json["path"] = config.paths.selections;
  return summary;
}

CommandSummary cmd_curate(const PipelineConfig& config) {
  trm::TrmScorer scorer(trm::load_model(config.paths.model));
  std::vector<Problem> problems = jsonl::read_problems(config.paths.problems);
  std::vector<ResponseRecord> responses = jsonl::read_responses(config.paths.responses);
  std::vector<TopoAnnotation> annotations =
      jsonl::read_annotations(config.paths.annotations);

  game::CurationResult result =
      game::curate_sft(problems, responses, annotations, scorer, config.curate);
  game::write_sft(config.paths.sft, result.records);

  CommandSummary summary;
  summary.json = summary_base("curate");
  summary.json["sft_records"] = result.records.size();
  summary.json["fraction"] = config.curate.fraction;
  summary.json["top_k"] = config.curate.top_k;
  ordered_json tiers;
  for (DifficultyTier tier : kTiers) {
    int i = static_cast<int>(tier);
    tiers[std::string(tier_name(tier))] = ordered_json{
        {"problems", result.tier_sizes[i]},
        {"sampled", result.sampled_per_tier[i]},
    };
  }
  summary.json["tiers"] = tiers;
  summary.json["warnings"] = result.warnings;
  summary.json["path"] = config.paths.sft;
  return summary;
}

CommandSummary cmd_report(const PipelineConfig& config) {
  trm::TrmModel model = trm::load_model(config.paths.model);
  std::vector<Problem> problems = jsonl::read_problems(config.paths.problems);
  std::vector<ResponseRecord> responses = jsonl::read_responses(config.paths.responses);
  std::vector<TopoAnnotation> annotations =
      jsonl::read_annotations(config.paths.annotations);

  TrmEvalOutcome trm_eval =
      compute_trm_eval(model, problems, responses, annotations, config.trm);
  metrics::MetricReport report =
      metrics::build_report(responses, annotations, trm_eval.metrics);

  // Selection strategies are compared on the held-out split only, so the
  // reward model never grades problems it trained on.
  SplitData test = select_split(problems, responses, annotations,
                                config.trm.train_fraction, /*want_train=*/false);
  trm::TrmScorer scorer(std::move(model));
  std::vector<game::StrategyReport> strategies;
  for (Topology t : kTopologies) {
    strategies.push_back(game::evaluate_strategy(
        test.problems, test.responses, test.annotations,
        game::Strategy::fixed_topology(t), &scorer, config.aggregate));
  }
  strategies.push_back(game::evaluate_strategy(test.problems, test.responses,
                                               test.annotations,
                                               game::Strategy::rewarding(), &scorer,
                                               config.aggregate));
  strategies.push_back(game::evaluate_strategy(test.problems, test.responses,
                                               test.annotations,
                                               game::Strategy::oracle_topology(),
                                               &scorer, config.aggregate));

  ordered_json document;
  document["dataset"] = ordered_json{
      {"problems", problems.size()},
      {"responses", responses.size()},
      {"annotated_problems", annotations.size()},
      {"test_problems", test.problems.size()},
  };
  document["overall_accuracy"] = report.overall_accuracy;
  ordered_json topology_accuracy;
  for (Topology t : kTopologies) {
    const auto& value = report.topology_accuracy[topology_index(t)];
    if (value) {
      topology_accuracy[std::string(topology_name(t))] = *value;
    } else {
      topology_accuracy[std::string(topology_name(t))] = nullptr;
    }
  }
  document["topology_accuracy"] = topology_accuracy;
  document["win_rate"] = per_topology_json(report.win_rate);
  document["mean_response_length"] = report.mean_response_length;
  document["trm"] = ordered_json{
      {"spearman_rho", trm_eval.metrics.spearman_rho},
      {"pairwise_accuracy", trm_eval.metrics.pairwise_accuracy},
      {"regression_instances", trm_eval.metrics.regression_instances},
      {"preference_pairs", trm_eval.metrics.pair_count},
  };
  ordered_json strategy_table;
  for (const game::StrategyReport& strategy : strategies) {
    strategy_table[strategy.name] = ordered_json{
        {"accuracy", strategy.accuracy},
        {"problems", strategy.problems},
    };
  }
  document["strategies"] = strategy_table;

  {
    std::ofstream out(config.paths.report_json, std::ios::binary);
    if (!out) throw_io("cannot open '" + config.paths.report_json + "' for writing");
    out << document.dump(2) << "\n";
  }
  {
    std::ofstream out(config.paths.report_csv, std::ios::binary);
    if (!out) throw_io("cannot open '" + config.paths.report_csv + "' for writing");
    out << "metric,scope,value\n";
    out << "overall_accuracy,all," << format_metric(report.overall_accuracy) << "\n";
    for (Topology t : kTopologies) {
      const auto& value = report.topology_accuracy[topology_index(t)];
      if (!value) continue;
      out << "topology_accuracy," << topology_name(t) << ","
          << format_metric(*value) << "\n";
    }
    for (Topology t : kTopologies) {
      out << "win_rate," << topology_name(t) << ","
          << format_metric(report.win_rate[topology_index(t)]) << "\n";
    }
    out << "mean_response_length,all," << format_metric(report.mean_response_length)
        << "\n";
    out << "spearman_rho,trm," << format_metric(trm_eval.metrics.spearman_rho) << "\n";
    out << "pairwise_accuracy,trm," << format_metric(trm_eval.metrics.pairwise_accuracy)
        << "\n";
    for (const game::StrategyReport& strategy : strategies) {
      out << "strategy_accuracy," << strategy.name << ","
          << format_metric(strategy.accuracy) << "\n";
    }
  }

  CommandSummary summary;
  summary.json = summary_base("report");
  summary.json["report"] = document;
  summary.json["csv_path"] = config.paths.report_csv;
  summary.json["json_path"] = config.paths.report_json;
  return summary;
}

}  // namespace solar::pipeline
