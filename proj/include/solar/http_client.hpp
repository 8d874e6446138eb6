#pragma once

#include <string>
#include <vector>

#include "solar/types.hpp"

namespace solar::gen {

struct EndpointConfig {
  std::string base_url;      // e.g. http://127.0.0.1:8080 with optional path prefix
  std::string model_name;
  std::string api_key_env;   // environment variable holding the bearer token
  int max_concurrency = 4;
  int timeout_ms = 30000;
  int retries = 2;           // additional attempts after the first

  void validate() const;
};

struct GenerationError {
  size_t request_index = 0;
  std::string message;
};

struct HttpGenerationResult {
  // Successful completions in request order; failed indices are absent here
  // and described in errors instead.
  std::vector<ResponseRecord> responses;
  std::vector<GenerationError> errors;
};

// Issues n chat-completion requests for one (problem, topology) against an
// OpenAI-compatible endpoint. At most max_concurrency requests are in flight
// at once; transport failures and 5xx responses retry with exponential
// backoff (1s base, doubling); other statuses fail the request immediately.
// A missing API key environment variable is a Config error raised before any
// request is sent.
HttpGenerationResult http_generate(const EndpointConfig& endpoint,
                                   const Problem& problem, Topology topology,
                                   const GenerationParams& params, int n);

}  // namespace solar::gen
