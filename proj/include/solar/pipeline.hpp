#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "solar/competition.hpp"
#include "solar/generation.hpp"
#include "solar/http_client.hpp"
#include "solar/tag.hpp"
#include "solar/trm.hpp"
#include "solar/types.hpp"

namespace solar::pipeline {

struct Paths {
  std::string problems = "problems.jsonl";
  std::string responses = "responses.jsonl";
  std::string annotations = "annotations.jsonl";
  std::string model = "trm.json";
  std::string selections = "selections.jsonl";
  std::string sft = "sft.jsonl";
  std::string report_csv = "report.csv";
  std::string report_json = "report.json";
  std::string errors = "generation_errors.jsonl";
};

struct GenerationSettings {
  std::string mode = "mock";  // "mock" or "endpoint"
  gen::WorldProfile profile = gen::WorldProfile::Uniform;
  int n = 200;                // samples per (problem, topology)
  std::uint64_t seed = 42;
  double tuned_boost = 0.0;
  int problems_count = 60;    // make-problems only
  GenerationParams params;
  std::optional<gen::EndpointConfig> endpoint;
};

struct TrmSettings {
  trm::TrainingConfig training;
  int hash_dim = 256;
  int hidden = 32;
  int pairs_per_problem = 4;
  double train_fraction = 0.8;
};

struct PipelineConfig {
  Paths paths;
  tag::SegmentationConfig segment;
  TrmSettings trm;
  game::Aggregate aggregate = game::Aggregate::Mean;
  game::CurationConfig curate;
  GenerationSettings generation;

  void validate() const;
};

PipelineConfig default_config();

// Parses the single-document JSON config; unknown keys are rejected so typos
// fail loudly. The document may be empty ({}), leaving every default intact.
PipelineConfig parse_config(const nlohmann::json& document);
PipelineConfig load_config_file(const std::string& path);

// Deterministic 80/20-style split on the problem id hash.
bool in_train_split(const std::string& problem_id, double train_fraction);

struct CommandSummary {
  nlohmann::ordered_json json;
  // Set when some endpoint requests failed but others succeeded; the CLI
  // turns this into its "partial failure" exit code.
  bool partial = false;
};

CommandSummary cmd_make_problems(const PipelineConfig& config);
CommandSummary cmd_generate(const PipelineConfig& config);
CommandSummary cmd_annotate(const PipelineConfig& config);
CommandSummary cmd_segment(const PipelineConfig& config);
CommandSummary cmd_train_trm(const PipelineConfig& config);
CommandSummary cmd_eval_trm(const PipelineConfig& config);
CommandSummary cmd_compete(const PipelineConfig& config);
CommandSummary cmd_curate(const PipelineConfig& config);
CommandSummary cmd_report(const PipelineConfig& config);

}  // namespace solar::pipeline
