#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>

#include "solar/solar.h"
#include "test_util.hpp"

using nlohmann::json;

namespace {

// Owns the out-string of a C call so every path frees it.
struct OwnedString {
  char* text = nullptr;
  ~OwnedString() { solar_string_free(text); }
  std::string str() const { return text == nullptr ? std::string() : text; }
};

struct OwnedEngine {
  solar_engine* engine = nullptr;
  ~OwnedEngine() { solar_engine_destroy(engine); }
};

struct OwnedModel {
  solar_model* model = nullptr;
  ~OwnedModel() { solar_model_destroy(model); }
};

std::string tiny_config(const testutil::TempDir& dir) {
  json document;
  document["paths"] = {
      {"problems", dir.file("problems.jsonl")},
      {"responses", dir.file("responses.jsonl")},
      {"annotations", dir.file("annotations.jsonl")},
      {"model", dir.file("trm.json")},
      {"selections", dir.file("selections.jsonl")},
      {"sft", dir.file("sft.jsonl")},
      {"report_csv", dir.file("report.csv")},
      {"report_json", dir.file("report.json")},
      {"errors", dir.file("errors.jsonl")},
  };
  document["generation"] = {{"mode", "mock"}, {"n", 4}, {"problems_count", 6}};
  document["trm"] = {{"hash_dim", 16},          {"hidden", 4},
                     {"epochs", 2},             {"batch_size", 8},
                     {"pairs_per_problem", 2},  {"train_fraction", 0.7}};
  return document.dump();
}

json run_ok(solar_engine* engine, const char* command) {
  OwnedString summary;
  solar_status status = solar_engine_run(engine, command, &summary.text);
  INFO("command: ", command, " error: ", solar_last_error_message());
  REQUIRE(status == SOLAR_OK);
  REQUIRE(summary.text != nullptr);
  return json::parse(summary.str());
}

}  // namespace

TEST_CASE("the library reports its version as a static string") {
  REQUIRE(solar_version() != nullptr);
  CHECK(std::string(solar_version()) == "0.1.0");
}

TEST_CASE("answer helpers round trip through the C surface") {
  OwnedString canonical;
  REQUIRE(solar_canonicalize_answer("  42. ", &canonical.text) == SOLAR_OK);
  CHECK(canonical.str() == "42");

  OwnedString extracted;
  REQUIRE(solar_extract_final_answer("Step 1: add.\n#### 12\n", &extracted.text) ==
          SOLAR_OK);
  CHECK(extracted.str() == "12");

  OwnedString spelled;
  REQUIRE(solar_extract_final_answer("so the Final Answer: YES.", &spelled.text) ==
          SOLAR_OK);
  CHECK(spelled.str() == "yes");

  char* out = nullptr;
  CHECK(solar_canonicalize_answer(nullptr, &out) == SOLAR_ERROR_CONFIG);
  CHECK(solar_canonicalize_answer("x", nullptr) == SOLAR_ERROR_CONFIG);
  CHECK(solar_extract_final_answer(nullptr, &out) == SOLAR_ERROR_CONFIG);
  CHECK(out == nullptr);
  solar_string_free(nullptr);  // must be a no-op
}

TEST_CASE("engine creation accepts defaults and rejects bad configs") {
  OwnedEngine defaults;
  CHECK(solar_engine_create(nullptr, &defaults.engine) == SOLAR_OK);
  CHECK(defaults.engine != nullptr);

  OwnedEngine empty;
  CHECK(solar_engine_create("", &empty.engine) == SOLAR_OK);
  CHECK(empty.engine != nullptr);

  solar_engine* engine = nullptr;
  CHECK(solar_engine_create("{nope", &engine) == SOLAR_ERROR_CONFIG);
  CHECK(engine == nullptr);
  CHECK(std::string(solar_last_error_message()).find("configuration is not valid JSON") !=
        std::string::npos);

  CHECK(solar_engine_create("{\"bogus\": 1}", &engine) == SOLAR_ERROR_CONFIG);
  CHECK(std::string(solar_last_error_message()).find("unknown config key 'bogus'") !=
        std::string::npos);

  CHECK(solar_engine_create("{}", nullptr) == SOLAR_ERROR_CONFIG);
}

TEST_CASE("engine run validates its arguments") {
  testutil::TempDir dir;
  std::string config = tiny_config(dir);
  OwnedEngine owner;
  REQUIRE(solar_engine_create(config.c_str(), &owner.engine) == SOLAR_OK);

  char* out = nullptr;
  CHECK(solar_engine_run(nullptr, "report", &out) == SOLAR_ERROR_CONFIG);
  CHECK(solar_engine_run(owner.engine, nullptr, &out) == SOLAR_ERROR_CONFIG);
  CHECK(solar_engine_run(owner.engine, "report", nullptr) == SOLAR_ERROR_CONFIG);

  CHECK(solar_engine_run(owner.engine, "fnord", &out) == SOLAR_ERROR_CONFIG);
  CHECK(out == nullptr);
  CHECK(std::string(solar_last_error_message()).find("unknown command 'fnord'") !=
        std::string::npos);

  // Running against missing inputs maps to the file-error status.
  CHECK(solar_engine_run(owner.engine, "generate", &out) == SOLAR_ERROR_IO);
  CHECK(out == nullptr);
  CHECK(std::string(solar_last_error_message()).find("problems.jsonl") !=
        std::string::npos);
}

TEST_CASE("the whole pipeline drives through the C interface") {
  testutil::TempDir dir;
  std::string config = tiny_config(dir);
  OwnedEngine owner;
  REQUIRE(solar_engine_create(config.c_str(), &owner.engine) == SOLAR_OK);

  CHECK(run_ok(owner.engine, "make-problems")["problems"] == 6);
  CHECK(run_ok(owner.engine, "generate")["responses"] == 6 * 3 * 4);
  CHECK(run_ok(owner.engine, "annotate")["problems"] == 6);
  CHECK(run_ok(owner.engine, "segment")["problems"] == 6);
  json trained = run_ok(owner.engine, "train-trm");
  CHECK(trained["train_problems"].get<int>() >= 1);
  CHECK(trained["test_problems"].get<int>() >= 1);
  json evaluated = run_ok(owner.engine, "eval-trm");
  CHECK(std::isfinite(evaluated["spearman_rho"].get<double>()));
  CHECK(run_ok(owner.engine, "compete")["problems"] == 6);
  json curated = run_ok(owner.engine, "curate");
  CHECK(curated["sft_records"].get<int>() >= 1);
  json reported = run_ok(owner.engine, "report");
  CHECK(reported["report"]["dataset"]["problems"] == 6);
  // A successful call clears the thread's error message.
  CHECK(std::string(solar_last_error_message()).empty());

  // The model trained above is loadable and scores ad-hoc responses.
  OwnedModel loaded;
  std::string model_path = dir.file("trm.json");
  REQUIRE(solar_model_load(model_path.c_str(), &loaded.model) == SOLAR_OK);
  double topo = -1.0;
  double rank = std::nan("");
  REQUIRE(solar_model_score(loaded.model, "What is 2 + 2?",
                            "Step 1: add the numbers.\nFinal Answer: 4", "cot",
                            &topo, &rank) == SOLAR_OK);
  CHECK(topo > 0.0);
  CHECK(topo < 1.0);
  CHECK(std::isfinite(rank));

  // Either output may be skipped.
  CHECK(solar_model_score(loaded.model, "q", "Final Answer: 1", "tot", nullptr,
                          &rank) == SOLAR_OK);
  CHECK(solar_model_score(loaded.model, "q", "Final Answer: 1", "got", &topo,
                          nullptr) == SOLAR_OK);

  CHECK(solar_model_score(loaded.model, "q", "text", "ring", &topo, &rank) ==
        SOLAR_ERROR_DATA);
  CHECK(std::string(solar_last_error_message()).find("ring") != std::string::npos);
  CHECK(solar_model_score(nullptr, "q", "t", "cot", &topo, &rank) ==
        SOLAR_ERROR_CONFIG);
  CHECK(solar_model_score(loaded.model, nullptr, "t", "cot", &topo, &rank) ==
        SOLAR_ERROR_CONFIG);
}

TEST_CASE("model loading surfaces missing files as file errors") {
  testutil::TempDir dir;
  std::string path = dir.file("nope.json");
  solar_model* model = nullptr;
  CHECK(solar_model_load(path.c_str(), &model) == SOLAR_ERROR_IO);
  CHECK(model == nullptr);
  CHECK(std::string(solar_last_error_message()).find("nope.json") != std::string::npos);
  CHECK(solar_model_load(nullptr, &model) == SOLAR_ERROR_CONFIG);
  CHECK(solar_model_load(path.c_str(), nullptr) == SOLAR_ERROR_CONFIG);
}

TEST_CASE("error messages are thread local") {
  char* out = nullptr;
  CHECK(solar_canonicalize_answer(nullptr, &out) == SOLAR_ERROR_CONFIG);
  std::string main_error = solar_last_error_message();
  CHECK_FALSE(main_error.empty());

  std::string fresh;
  std::string after_failure;
  std::thread worker([&] {
    fresh = solar_last_error_message();
    char* inner = nullptr;
    solar_engine_create("{oops", nullptr);  // null out param: different message
    solar_extract_final_answer(nullptr, &inner);
    after_failure = solar_last_error_message();
  });
  worker.join();

  CHECK(fresh.empty());
  CHECK_FALSE(after_failure.empty());
  CHECK(after_failure != main_error);
  // The worker's failures never touched this thread's slot.
  CHECK(std::string(solar_last_error_message()) == main_error);
}

TEST_CASE("partial generation failures map to the partial status") {
  testutil::TempDir dir;

  httplib::Server server;
  std::atomic<int> calls{0};
  server.Post("/v1/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                if (calls.fetch_add(1) == 0) {
                  res.status = 404;
                  res.set_content("nope", "text/plain");
                } else {
                  res.status = 200;
                  res.set_content(
                      "{\"choices\":[{\"message\":{\"content\":\"Final Answer: 3\"}}]}",
                      "application/json");
                }
              });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  ::setenv("SOLAR_C_API_KEY", "k", 1);

  json document = json::parse(tiny_config(dir));
  document["generation"] = {
      {"mode", "endpoint"},
      {"n", 1},
      {"problems_count", 2},
      {"endpoint",
       {{"base_url", "http://127.0.0.1:" + std::to_string(port)},
        {"model_name", "stub"},
        {"api_key_env", "SOLAR_C_API_KEY"},
        {"max_concurrency", 1},
        {"retries", 0}}}};
  std::string config = document.dump();

  OwnedEngine owner;
  REQUIRE(solar_engine_create(config.c_str(), &owner.engine) == SOLAR_OK);
  run_ok(owner.engine, "make-problems");

  OwnedString summary;
  solar_status status = solar_engine_run(owner.engine, "generate", &summary.text);
  server.stop();
  thread.join();
  ::unsetenv("SOLAR_C_API_KEY");

  REQUIRE(status == SOLAR_PARTIAL);
  REQUIRE(summary.text != nullptr);
  CHECK(std::string(solar_last_error_message()) ==
        "command finished with partial failures; see the summary");
  json parsed = json::parse(summary.str());
  CHECK(parsed["failed_requests"] == 1);
  CHECK(parsed["responses"] == 2 * 3 * 1 - 1);
}
