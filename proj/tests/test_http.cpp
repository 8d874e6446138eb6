#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "solar/http_client.hpp"

using namespace solar;
using nlohmann::json;

namespace {

constexpr const char* kKeyVar = "SOLAR_TEST_API_KEY";

// Local chat-completions stub whose handler is swappable per test.
class StubServer {
public:
  explicit StubServer(const std::string& route = "/v1/chat/completions") {
    server_.Post(route, [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url(const std::string& prefix = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

  void set_handler(
      std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    std::lock_guard<std::mutex> lock(mutex_);
    handler_ = std::move(handler);
  }

  int hits() const { return hits_.load(); }

  static std::string completion(const std::string& content) {
    json body;
    body["choices"] = json::array({{{"message", {{"content", content}}}}});
    return body.dump();
  }

  static void reply_ok(httplib::Response& res, const std::string& content) {
    res.status = 200;
    res.set_content(completion(content), "application/json");
  }

private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    hits_.fetch_add(1);
    std::function<void(const httplib::Request&, httplib::Response&)> handler;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      handler = handler_;
    }
    if (handler) {
      handler(req, res);
    } else {
      reply_ok(res, "Final Answer: 1");
    }
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::mutex mutex_;
  std::function<void(const httplib::Request&, httplib::Response&)> handler_;
};

Problem sample_problem() {
  Problem problem;
  problem.id = "q1";
  problem.question = "What is 3 + 4?";
  problem.reference_answer = "7";
  problem.source = "unit";
  return problem;
}

gen::EndpointConfig endpoint_for(const StubServer& server,
                                 const std::string& prefix = "") {
  gen::EndpointConfig endpoint;
  endpoint.base_url = server.base_url(prefix);
  endpoint.model_name = "stub-model";
  endpoint.api_key_env = kKeyVar;
  endpoint.max_concurrency = 2;
  endpoint.timeout_ms = 5000;
  endpoint.retries = 2;
  return endpoint;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (value) {
      ::setenv(kKeyVar, value, 1);
    } else {
      ::unsetenv(kKeyVar);
    }
  }
  ~EnvGuard() { ::unsetenv(kKeyVar); }
};

}  // namespace

TEST_CASE("endpoint configuration is strictly validated") {
  StubServer server;
  gen::EndpointConfig good = endpoint_for(server);
  CHECK_NOTHROW(good.validate());
  auto expect_reject = [&](auto&& mutate) {
    gen::EndpointConfig bad = good;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), SolarError);
  };
  expect_reject([](gen::EndpointConfig& e) { e.base_url = ""; });
  expect_reject([](gen::EndpointConfig& e) { e.base_url = "ftp://host"; });
  expect_reject([](gen::EndpointConfig& e) { e.model_name = ""; });
  expect_reject([](gen::EndpointConfig& e) { e.api_key_env = ""; });
  expect_reject([](gen::EndpointConfig& e) { e.max_concurrency = 0; });
  expect_reject([](gen::EndpointConfig& e) { e.timeout_ms = 0; });
  expect_reject([](gen::EndpointConfig& e) { e.retries = -1; });
}

TEST_CASE("generation sends bearer-authenticated chat requests and collects replies") {
  EnvGuard env("test-key-123");
  StubServer server;

  std::mutex seen_mutex;
  std::vector<std::string> auth_headers;
  std::vector<json> bodies;
  server.set_handler([&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(seen_mutex);
      auth_headers.push_back(req.get_header_value("Authorization"));
      bodies.push_back(json::parse(req.body));
    }
    StubServer::reply_ok(res, "Adding 3 and 4 gives 7.\nFinal Answer: 7");
  });

  GenerationParams params;
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint_for(server), sample_problem(), Topology::ToT,
                         params, 5);

  CHECK(result.errors.empty());
  REQUIRE(result.responses.size() == 5);
  for (size_t i = 0; i < result.responses.size(); ++i) {
    const ResponseRecord& record = result.responses[i];
    CHECK(record.id == "q1-tot-000" + std::to_string(i));
    CHECK(record.problem_id == "q1");
    CHECK(record.topology == Topology::ToT);
    CHECK(record.final_answer == "7");
    CHECK(record.generator == "stub-model");
    CHECK(record.seed == std::int64_t(i));
    CHECK_FALSE(record.hard_label.has_value());
  }

  std::lock_guard<std::mutex> lock(seen_mutex);
  REQUIRE(auth_headers.size() == 5);
  for (const std::string& header : auth_headers) {
    CHECK(header == "Bearer test-key-123");
  }
  for (const json& body : bodies) {
    CHECK(body.at("model") == "stub-model");
    CHECK(body.at("n") == 1);
    CHECK(body.at("temperature") == doctest::Approx(0.7));
    REQUIRE(body.at("messages").size() == 1);
    CHECK(body.at("messages")[0].at("role") == "user");
    std::string content = body.at("messages")[0].at("content").get<std::string>();
    CHECK(content.find("What is 3 + 4?") != std::string::npos);
    CHECK(content.find("Final Answer:") != std::string::npos);
    CHECK(content.find("tree") != std::string::npos);
  }
}

TEST_CASE("a path prefix in the base url is preserved") {
  EnvGuard env("k");
  StubServer server("/proxy/v1/chat/completions");
  gen::EndpointConfig endpoint = endpoint_for(server, "/proxy");
  GenerationParams params;
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint, sample_problem(), Topology::CoT, params, 2);
  CHECK(result.errors.empty());
  CHECK(result.responses.size() == 2);
  CHECK(server.hits() == 2);
}

TEST_CASE("server errors are retried with backoff until they clear") {
  EnvGuard env("k");
  StubServer server;
  std::atomic<int> calls{0};
  server.set_handler([&](const httplib::Request&, httplib::Response& res) {
    int call = calls.fetch_add(1);
    if (call < 2) {
      res.status = 500;
      res.set_content("overloaded", "text/plain");
    } else {
      StubServer::reply_ok(res, "Final Answer: 7");
    }
  });

  gen::EndpointConfig endpoint = endpoint_for(server);
  endpoint.max_concurrency = 1;
  endpoint.retries = 2;
  GenerationParams params;
  auto start = std::chrono::steady_clock::now();
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint, sample_problem(), Topology::CoT, params, 1);
  auto elapsed = std::chrono::steady_clock::now() - start;

  CHECK(result.errors.empty());
  REQUIRE(result.responses.size() == 1);
  CHECK(result.responses[0].final_answer == "7");
  CHECK(calls.load() == 3);
  // Two retries sleep 1s then 2s before their attempts.
  CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() >= 2900);
}

TEST_CASE("exhausted retries surface as an indexed error") {
  EnvGuard env("k");
  StubServer server;
  server.set_handler([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("down", "text/plain");
  });
  gen::EndpointConfig endpoint = endpoint_for(server);
  endpoint.max_concurrency = 1;
  endpoint.retries = 1;
  GenerationParams params;
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint, sample_problem(), Topology::CoT, params, 1);
  CHECK(result.responses.empty());
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].request_index == 0);
  CHECK(result.errors[0].message.find("HTTP 503") != std::string::npos);
  CHECK(server.hits() == 2);  // first attempt plus one retry
}

TEST_CASE("client errors fail immediately without retries") {
  EnvGuard env("k");
  StubServer server;
  std::atomic<int> calls{0};
  server.set_handler([&](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) == 0) {
      res.status = 404;
      res.set_content("nope", "text/plain");
    } else {
      StubServer::reply_ok(res, "Final Answer: 7");
    }
  });
  gen::EndpointConfig endpoint = endpoint_for(server);
  endpoint.max_concurrency = 1;
  endpoint.retries = 3;
  GenerationParams params;
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint, sample_problem(), Topology::CoT, params, 4);

  // The 404 request dies on its single attempt; the other three succeed.
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].request_index == 0);
  CHECK(result.errors[0].message.find("HTTP 404") != std::string::npos);
  REQUIRE(result.responses.size() == 3);
  CHECK(result.responses[0].id == "q1-cot-0001");
  CHECK(result.responses[1].id == "q1-cot-0002");
  CHECK(result.responses[2].id == "q1-cot-0003");
  CHECK(calls.load() == 4);
}

TEST_CASE("malformed completion payloads are data errors for that request") {
  EnvGuard env("k");
  StubServer server;
  std::atomic<int> calls{0};
  server.set_handler([&](const httplib::Request&, httplib::Response& res) {
    int call = calls.fetch_add(1);
    res.status = 200;
    if (call == 0) {
      res.set_content("this is not json", "application/json");
    } else if (call == 1) {
      res.set_content("{\"choices\":[]}", "application/json");
    } else {
      StubServer::reply_ok(res, "Final Answer: 7");
    }
  });
  gen::EndpointConfig endpoint = endpoint_for(server);
  endpoint.max_concurrency = 1;
  GenerationParams params;
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint, sample_problem(), Topology::CoT, params, 3);
  REQUIRE(result.errors.size() == 2);
  CHECK(result.errors[0].request_index == 0);
  CHECK(result.errors[0].message.find("malformed JSON") != std::string::npos);
  CHECK(result.errors[1].request_index == 1);
  CHECK(result.errors[1].message.find("choices") != std::string::npos);
  REQUIRE(result.responses.size() == 1);
  CHECK(result.responses[0].id == "q1-cot-0002");
}

TEST_CASE("a missing or empty api key aborts before any request") {
  StubServer server;
  GenerationParams params;
  {
    EnvGuard env(nullptr);
    CHECK_THROWS_WITH_AS(
        gen::http_generate(endpoint_for(server), sample_problem(), Topology::CoT,
                           params, 2),
        doctest::Contains("SOLAR_TEST_API_KEY"), SolarError);
  }
  {
    EnvGuard env("");
    CHECK_THROWS_AS(gen::http_generate(endpoint_for(server), sample_problem(),
                                       Topology::CoT, params, 2),
                    SolarError);
  }
  CHECK(server.hits() == 0);
  EnvGuard env("k");
  CHECK_THROWS_AS(gen::http_generate(endpoint_for(server), sample_problem(),
                                     Topology::CoT, params, 0),
                  SolarError);
}

TEST_CASE("an unreachable endpoint reports a transport error") {
  EnvGuard env("k");
  gen::EndpointConfig endpoint;
  endpoint.base_url = "http://127.0.0.1:9";  // discard port; nothing listens here
  endpoint.model_name = "stub-model";
  endpoint.api_key_env = kKeyVar;
  endpoint.max_concurrency = 1;
  endpoint.timeout_ms = 500;
  endpoint.retries = 0;
  GenerationParams params;
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint, sample_problem(), Topology::CoT, params, 1);
  CHECK(result.responses.empty());
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].message.find("transport error") != std::string::npos);
}

TEST_CASE("in-flight requests respect the concurrency ceiling") {
  EnvGuard env("k");
  StubServer server;
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  server.set_handler([&](const httplib::Request&, httplib::Response& res) {
    int now = in_flight.fetch_add(1) + 1;
    int snapshot = peak.load();
    while (now > snapshot && !peak.compare_exchange_weak(snapshot, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    in_flight.fetch_sub(1);
    StubServer::reply_ok(res, "Final Answer: 7");
  });

  gen::EndpointConfig endpoint = endpoint_for(server);
  endpoint.max_concurrency = 3;
  GenerationParams params;
  gen::HttpGenerationResult result =
      gen::http_generate(endpoint, sample_problem(), Topology::CoT, params, 12);
  CHECK(result.errors.empty());
  CHECK(result.responses.size() == 12);
  CHECK(peak.load() <= 3);
  CHECK(peak.load() >= 2);
}
