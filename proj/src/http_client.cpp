#include "solar/http_client.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "solar/answer.hpp"
#include "solar/generation.hpp"

namespace solar::gen {

using nlohmann::json;

void EndpointConfig::validate() const {
  if (base_url.empty()) throw_config("endpoint: base_url must be set");
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw_config("endpoint: base_url must start with http:// or https://");
  }
  if (model_name.empty()) throw_config("endpoint: model_name must be set");
  if (api_key_env.empty()) throw_config("endpoint: api_key_env must be set");
  if (max_concurrency < 1) throw_config("endpoint: max_concurrency must be >= 1");
  if (timeout_ms < 1) throw_config("endpoint: timeout must be positive");
  if (retries < 0) throw_config("endpoint: retries must be >= 0");
}

namespace {

struct SplitUrl {
  std::string host_port;  // scheme://host[:port]
  std::string prefix;     // path prefix, possibly empty
};

SplitUrl split_base_url(const std::string& base_url) {
  size_t scheme_end = base_url.find("://");
  size_t path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

std::string extract_content(const std::string& body) {
  json object = json::parse(body, nullptr, false);
  if (object.is_discarded()) throw_data("endpoint returned malformed JSON");
  if (!object.contains("choices") || !object["choices"].is_array() ||
      object["choices"].empty()) {
    throw_data("endpoint response lacks choices");
  }
  const json& message = object["choices"][0];
  if (!message.contains("message") || !message["message"].contains("content") ||
      !message["message"]["content"].is_string()) {
    throw_data("endpoint response lacks choices[0].message.content");
  }
  return message["message"]["content"].get<std::string>();
}

}  // namespace

HttpGenerationResult http_generate(const EndpointConfig& endpoint,
                                   const Problem& problem, Topology topology,
                                   const GenerationParams& params, int n) {
  endpoint.validate();
  params.validate();
  if (n < 1) throw_config("http_generate: n must be >= 1");

  const char* key = std::getenv(endpoint.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw_config("endpoint: environment variable '" + endpoint.api_key_env +
                 "' is not set; no requests were sent");
  }
  std::string bearer = "Bearer " + std::string(key);

  SplitUrl url = split_base_url(endpoint.base_url);
  std::string path = url.prefix + "/v1/chat/completions";

  json body;
  body["model"] = endpoint.model_name;
  body["messages"] = json::array(
      {{{"role", "user"}, {"content", render_prompt(problem.question, topology, params)}}});
  body["temperature"] = params.temperature;
  body["n"] = 1;
  std::string payload = body.dump();

  std::vector<std::optional<ResponseRecord>> slots(static_cast<size_t>(n));
  std::vector<std::optional<GenerationError>> failures(static_cast<size_t>(n));
  std::atomic<int> next{0};

  auto worker = [&]() {
    httplib::Client client(url.host_port);
    client.set_connection_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
    httplib::Headers headers{{"Authorization", bearer}};

    while (true) {
      int index = next.fetch_add(1);
      if (index >= n) break;
      std::string failure;
      std::chrono::milliseconds delay(1000);
      for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
        if (attempt > 0) {
          std::this_thread::sleep_for(delay);
          delay *= 2;
        }
        httplib::Result res = client.Post(path, headers, payload, "application/json");
        if (!res) {
          std::ostringstream msg;
          msg << "transport error: " << httplib::to_string(res.error());
          failure = msg.str();
          continue;  // retryable
        }
        if (res->status >= 500) {
          failure = "server error: HTTP " + std::to_string(res->status);
          continue;  // retryable
        }
        if (res->status != 200) {
          failure = "request failed: HTTP " + std::to_string(res->status);
          break;  // not retryable
        }
        try {
          std::string content = extract_content(res->body);
          ResponseRecord record;
          std::ostringstream id;
          id << problem.id << "-" << topology_name(topology) << "-";
          id.fill('0');
          id.width(4);
          id << index;
          record.id = id.str();
          record.problem_id = problem.id;
          record.topology = topology;
          record.text = content;
          record.final_answer = extract_final_answer(content);
          record.generator = endpoint.model_name;
          record.seed = index;
          slots[static_cast<size_t>(index)] = std::move(record);
          failure.clear();
        } catch (const SolarError& e) {
          failure = e.what();
        }
        break;
      }
      if (!slots[static_cast<size_t>(index)]) {
        failures[static_cast<size_t>(index)] =
            GenerationError{static_cast<size_t>(index), failure};
      }
    }
  };

  int thread_count = std::min(endpoint.max_concurrency, n);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
  for (std::thread& thread : threads) thread.join();

  HttpGenerationResult result;
  for (auto& slot : slots) {
    if (slot) result.responses.push_back(std::move(*slot));
  }
  for (auto& failure : failures) {
    if (failure) result.errors.push_back(std::move(*failure));
  }
  return result;
}

}  // namespace solar::gen
