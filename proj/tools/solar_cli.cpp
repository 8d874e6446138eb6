// Command line front end. All pipeline work happens behind the C API in
// libsolar; this file only turns flags into a configuration document and
// prints the returned summary.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "solar/solar.h"

namespace {

using nlohmann::json;

int exit_code(solar_status status) {
  if (status == SOLAR_OK) return 0;
  if (status == SOLAR_PARTIAL) return 2;
  return 1;
}

template <typename T>
void set_key(json& document, const char* section, const char* key,
             const std::optional<T>& value) {
  if (value) document[section][key] = *value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology-aware reasoning pipeline: generate, label, segment, "
               "train and play the topology competition"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "JSON configuration file");
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed,
                 "Master seed for generation, training and curation");

  std::optional<std::string> problems_path, responses_path, annotations_path,
      model_path, selections_path, sft_path, report_csv_path, report_json_path,
      errors_path;
  app.add_option("--problems", problems_path, "Problems JSONL path");
  app.add_option("--responses", responses_path, "Responses JSONL path");
  app.add_option("--annotations", annotations_path, "Annotations JSONL path");
  app.add_option("--model", model_path, "Reward model JSON path");
  app.add_option("--selections", selections_path, "Competition selections JSONL path");
  app.add_option("--sft", sft_path, "Curated SFT JSONL path");
  app.add_option("--report-csv", report_csv_path, "Report CSV path");
  app.add_option("--report-json", report_json_path, "Report JSON path");
  app.add_option("--errors", errors_path, "Generation errors JSONL path");

  CLI::App* make_problems =
      app.add_subcommand("make-problems", "Write seeded synthetic problems");
  std::optional<int> problems_count;
  make_problems->add_option("--count", problems_count, "Number of problems");

  CLI::App* generate = app.add_subcommand(
      "generate", "Sample responses for every problem and topology");
  std::optional<std::string> mode, profile;
  std::optional<int> samples;
  std::optional<double> tuned_boost;
  generate->add_option("--mode", mode, "mock or endpoint");
  generate->add_option("--profile", profile,
                       "uniform, topology-skewed or difficulty-graded");
  generate->add_option("--n", samples, "Samples per problem and topology");
  generate->add_option("--tuned-boost", tuned_boost,
                       "Raise every planted success probability (mock mode)");

  app.add_subcommand("annotate",
                     "Hard-label responses and aggregate per-topology counts");

  CLI::App* segment = app.add_subcommand(
      "segment", "Assign difficulty tiers from topo label quantiles");
  std::optional<double> q_low, q_high;
  segment->add_option("--q-low", q_low, "Lower quantile");
  segment->add_option("--q-high", q_high, "Upper quantile");

  CLI::App* train = app.add_subcommand("train-trm", "Train the reward model");
  std::optional<int> epochs, batch_size, hash_dim, hidden, pairs_per_problem;
  std::optional<double> learning_rate, beta, lambda_mse, lambda_rank, train_fraction;
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--batch-size", batch_size, "Mini-batch size");
  train->add_option("--learning-rate", learning_rate, "Gradient step size");
  train->add_option("--beta", beta, "Ranking loss sharpness");
  train->add_option("--lambda-mse", lambda_mse, "Regression loss weight");
  train->add_option("--lambda-rank", lambda_rank, "Ranking loss weight");
  train->add_option("--hash-dim", hash_dim, "Hashed text feature dimension");
  train->add_option("--hidden", hidden, "Hidden layer width");
  train->add_option("--pairs-per-problem", pairs_per_problem,
                    "Preference pairs sampled per problem");
  train->add_option("--train-fraction", train_fraction,
                    "Fraction of problems in the training split");

  app.add_subcommand("eval-trm", "Evaluate the reward model on held-out problems");

  CLI::App* compete =
      app.add_subcommand("compete", "Run the single-pass topology competition");
  std::optional<std::string> aggregate;
  compete->add_option("--aggregate", aggregate, "mean or max");

  CLI::App* curate = app.add_subcommand(
      "curate", "Curate difficulty-stratified SFT data from correct responses");
  std::optional<double> fraction;
  std::optional<int> top_k;
  curate->add_option("--fraction", fraction, "Fraction of each tier to sample");
  curate->add_option("--top-k", top_k, "Correct responses kept per topology");

  app.add_subcommand("report", "Aggregate metrics and compare selection strategies");

  CLI11_PARSE(app, argc, argv);

  json document = json::object();
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) {
      std::fprintf(stderr, "error: cannot open config file '%s'\n",
                   config_path->c_str());
      return 1;
    }
    try {
      document = json::parse(in);
    } catch (const json::parse_error& error) {
      std::fprintf(stderr, "error: config file '%s' is not valid JSON: %s\n",
                   config_path->c_str(), error.what());
      return 1;
    }
  }

  if (seed) {
    document["generation"]["seed"] = *seed;
    document["trm"]["seed"] = *seed;
    document["curate"]["seed"] = *seed;
  }
  set_key(document, "paths", "problems", problems_path);
  set_key(document, "paths", "responses", responses_path);
  set_key(document, "paths", "annotations", annotations_path);
  set_key(document, "paths", "model", model_path);
  set_key(document, "paths", "selections", selections_path);
  set_key(document, "paths", "sft", sft_path);
  set_key(document, "paths", "report_csv", report_csv_path);
  set_key(document, "paths", "report_json", report_json_path);
  set_key(document, "paths", "errors", errors_path);

  set_key(document, "generation", "problems_count", problems_count);
  set_key(document, "generation", "mode", mode);
  set_key(document, "generation", "profile", profile);
  set_key(document, "generation", "n", samples);
  set_key(document, "generation", "tuned_boost", tuned_boost);

  set_key(document, "segment", "q_low", q_low);
  set_key(document, "segment", "q_high", q_high);

  set_key(document, "trm", "epochs", epochs);
  set_key(document, "trm", "batch_size", batch_size);
  set_key(document, "trm", "learning_rate", learning_rate);
  set_key(document, "trm", "beta", beta);
  set_key(document, "trm", "lambda_mse", lambda_mse);
  set_key(document, "trm", "lambda_rank", lambda_rank);
  set_key(document, "trm", "hash_dim", hash_dim);
  set_key(document, "trm", "hidden", hidden);
  set_key(document, "trm", "pairs_per_problem", pairs_per_problem);
  set_key(document, "trm", "train_fraction", train_fraction);

  set_key(document, "compete", "aggregate", aggregate);

  set_key(document, "curate", "fraction", fraction);
  set_key(document, "curate", "top_k", top_k);

  const std::string command = app.get_subcommands().front()->get_name();

  solar_engine* engine = nullptr;
  solar_status status = solar_engine_create(document.dump().c_str(), &engine);
  if (status != SOLAR_OK) {
    std::fprintf(stderr, "error: %s\n", solar_last_error_message());
    return exit_code(status);
  }

  char* summary = nullptr;
  status = solar_engine_run(engine, command.c_str(), &summary);
  if (summary != nullptr) {
    std::printf("%s\n", summary);
    solar_string_free(summary);
  }
  if (status != SOLAR_OK) {
    std::fprintf(stderr, "error: %s\n", solar_last_error_message());
  }
  solar_engine_destroy(engine);
  return exit_code(status);
}
