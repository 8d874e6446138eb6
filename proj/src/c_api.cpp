#include "solar/solar.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include <json.hpp>

#include "solar/answer.hpp"
#include "solar/pipeline.hpp"
#include "solar/trm.hpp"
#include "solar/types.hpp"

struct solar_engine {
  solar::pipeline::PipelineConfig config;
};

struct solar_model {
  solar::trm::TrmScorer scorer;
};

namespace {

thread_local std::string t_last_error;

solar_status status_for(const solar::SolarError& error) {
  switch (error.kind()) {
    case solar::ErrorKind::Config: return SOLAR_ERROR_CONFIG;
    case solar::ErrorKind::Data: return SOLAR_ERROR_DATA;
    case solar::ErrorKind::Io: return SOLAR_ERROR_IO;
    case solar::ErrorKind::Internal: return SOLAR_ERROR_INTERNAL;
  }
  return SOLAR_ERROR_INTERNAL;
}

// C-heap copy so callers pair every out string with solar_string_free.
char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out != nullptr) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

template <typename Fn>
solar_status guarded(Fn&& fn) {
  t_last_error.clear();
  try {
    return fn();
  } catch (const solar::SolarError& error) {
    t_last_error = error.what();
    return status_for(error);
  } catch (const std::exception& error) {
    t_last_error = error.what();
    return SOLAR_ERROR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown failure";
    return SOLAR_ERROR_INTERNAL;
  }
}

solar_status config_failure(const char* message) {
  t_last_error = message;
  return SOLAR_ERROR_CONFIG;
}

solar_status out_of_memory() {
  t_last_error = "out of memory";
  return SOLAR_ERROR_INTERNAL;
}

}  // namespace

extern "C" {

const char* solar_version(void) { return "0.1.0"; }

const char* solar_last_error_message(void) { return t_last_error.c_str(); }

void solar_string_free(char* text) { std::free(text); }

solar_status solar_engine_create(const char* config_json, solar_engine** out_engine) {
  if (out_engine == nullptr) return config_failure("out_engine is null");
  *out_engine = nullptr;
  return guarded([&]() {
    nlohmann::json document = nlohmann::json::object();
    if (config_json != nullptr && config_json[0] != '\0') {
      try {
        document = nlohmann::json::parse(config_json);
      } catch (const nlohmann::json::parse_error& error) {
        solar::throw_config(std::string("configuration is not valid JSON: ") +
                            error.what());
      }
    }
    auto* engine = new solar_engine{solar::pipeline::parse_config(document)};
    *out_engine = engine;
    return SOLAR_OK;
  });
}

void solar_engine_destroy(solar_engine* engine) { delete engine; }

solar_status solar_engine_run(solar_engine* engine, const char* command,
                              char** out_summary_json) {
  if (engine == nullptr) return config_failure("engine is null");
  if (command == nullptr) return config_failure("command is null");
  if (out_summary_json == nullptr) return config_failure("out_summary_json is null");
  *out_summary_json = nullptr;
  return guarded([&]() {
    using Runner =
        solar::pipeline::CommandSummary (*)(const solar::pipeline::PipelineConfig&);
    struct Entry {
      const char* name;
      Runner run;
    };
    static constexpr Entry kCommands[] = {
        {"make-problems", solar::pipeline::cmd_make_problems},
        {"generate", solar::pipeline::cmd_generate},
        {"annotate", solar::pipeline::cmd_annotate},
        {"segment", solar::pipeline::cmd_segment},
        {"train-trm", solar::pipeline::cmd_train_trm},
        {"eval-trm", solar::pipeline::cmd_eval_trm},
        {"compete", solar::pipeline::cmd_compete},
        {"curate", solar::pipeline::cmd_curate},
        {"report", solar::pipeline::cmd_report},
    };
    Runner runner = nullptr;
    for (const Entry& entry : kCommands) {
      if (std::strcmp(entry.name, command) == 0) {
        runner = entry.run;
        break;
      }
    }
    if (runner == nullptr) {
      solar::throw_config(std::string("unknown command '") + command + "'");
    }
    solar::pipeline::CommandSummary summary = runner(engine->config);
    char* text = dup_string(summary.json.dump(2));
    if (text == nullptr) return out_of_memory();
    *out_summary_json = text;
    if (summary.partial) {
      t_last_error = "command finished with partial failures; see the summary";
      return SOLAR_PARTIAL;
    }
    return SOLAR_OK;
  });
}

solar_status solar_model_load(const char* path, solar_model** out_model) {
  if (path == nullptr) return config_failure("path is null");
  if (out_model == nullptr) return config_failure("out_model is null");
  *out_model = nullptr;
  return guarded([&]() {
    auto* model = new solar_model{solar::trm::TrmScorer(solar::trm::load_model(path))};
    *out_model = model;
    return SOLAR_OK;
  });
}

void solar_model_destroy(solar_model* model) { delete model; }

solar_status solar_model_score(const solar_model* model, const char* question,
                               const char* response_text, const char* topology,
                               double* out_topo, double* out_rank) {
  if (model == nullptr) return config_failure("model is null");
  if (question == nullptr) return config_failure("question is null");
  if (response_text == nullptr) return config_failure("response_text is null");
  if (topology == nullptr) return config_failure("topology is null");
  return guarded([&]() {
    solar::Problem problem;
    problem.id = "adhoc";
    problem.question = question;
    solar::ResponseRecord record;
    record.id = "adhoc-response";
    record.problem_id = problem.id;
    record.topology = solar::topology_from_name(topology);
    record.text = response_text;
    record.final_answer = solar::extract_final_answer(record.text);
    solar::RewardScores scores = model->scorer.score(problem, record);
    if (out_topo != nullptr) *out_topo = scores.topo;
    if (out_rank != nullptr) *out_rank = scores.rank;
    return SOLAR_OK;
  });
}

solar_status solar_canonicalize_answer(const char* raw, char** out_canonical) {
  if (raw == nullptr) return config_failure("raw is null");
  if (out_canonical == nullptr) return config_failure("out_canonical is null");
  *out_canonical = nullptr;
  return guarded([&]() {
    char* text = dup_string(solar::canonicalize_answer(raw));
    if (text == nullptr) return out_of_memory();
    *out_canonical = text;
    return SOLAR_OK;
  });
}

solar_status solar_extract_final_answer(const char* text, char** out_answer) {
  if (text == nullptr) return config_failure("text is null");
  if (out_answer == nullptr) return config_failure("out_answer is null");
  *out_answer = nullptr;
  return guarded([&]() {
    char* answer = dup_string(solar::extract_final_answer(text));
    if (answer == nullptr) return out_of_memory();
    *out_answer = answer;
    return SOLAR_OK;
  });
}

}  // extern "C"
