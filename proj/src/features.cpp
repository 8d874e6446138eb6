#include "solar/features.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <string>

namespace solar::trm {

void FeatureConfig::validate() const {
  if (hash_dim < 1) throw_config("features: hash_dim must be >= 1");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

// Lowercased runs of [a-z0-9.], stripped of edge dots.
template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  std::string token;
  auto flush = [&] {
    size_t b = 0;
    size_t e = token.size();
    while (b < e && token[b] == '.') ++b;
    while (e > b && token[e - 1] == '.') --e;
    if (e > b) fn(std::string_view(token).substr(b, e - b));
    token.clear();
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isalnum(c) || raw == '.') {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
}

bool is_numeric_token(std::string_view token) {
  bool seen_digit = false;
  bool seen_dot = false;
  for (char c : token) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      seen_digit = true;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      return false;
    }
  }
  return seen_digit;
}

constexpr std::array<std::string_view, 10> kBranchingKeywords = {
    "branch",   "branches", "node",    "nodes", "neighbor",
    "neighbors", "graph",    "tree",    "path",  "paths"};

bool is_branching_keyword(std::string_view token) {
  for (std::string_view keyword : kBranchingKeywords) {
    if (token == keyword) return true;
  }
  return false;
}

size_t word_count(std::string_view text) {
  size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

bool contains_case_insensitive(std::string_view haystack, std::string_view needle) {
  if (needle.size() > haystack.size()) return false;
  for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool hit = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
          std::tolower(static_cast<unsigned char>(needle[j]))) {
        hit = false;
        break;
      }
    }
    if (hit) return true;
  }
  return false;
}

}  // namespace

FeatureVector featurize(const Problem& problem, const ResponseRecord& record,
                        const FeatureConfig& config) {
  config.validate();
  FeatureVector features(static_cast<size_t>(config.dimension()), 0.0);

  auto hash_into = [&](std::string_view text) {
    for_each_token(text, [&](std::string_view token) {
      std::uint64_t h = fnv1a64(token);
      size_t bucket = static_cast<size_t>(h % static_cast<std::uint64_t>(config.hash_dim));
      double sign = (h >> 63) ? -1.0 : 1.0;
      features[bucket] += sign;
    });
  };
  hash_into(problem.question);
  hash_into(record.text);

  double norm = 0.0;
  for (int i = 0; i < config.hash_dim; ++i) norm += features[i] * features[i];
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (int i = 0; i < config.hash_dim; ++i) features[i] /= norm;
  }

  features[static_cast<size_t>(config.hash_dim + topology_index(record.topology))] = 1.0;

  size_t numeric_tokens = 0;
  size_t branching_tokens = 0;
  for_each_token(record.text, [&](std::string_view token) {
    if (is_numeric_token(token)) ++numeric_tokens;
    if (is_branching_keyword(token)) ++branching_tokens;
  });

  size_t base = static_cast<size_t>(config.hash_dim + kTopologyCount);
  features[base + 0] = std::log1p(static_cast<double>(word_count(record.text)));
  features[base + 1] = static_cast<double>(numeric_tokens);
  features[base + 2] = (record.text.find("#### ") != std::string::npos ||
                        contains_case_insensitive(record.text, "final answer:"))
                           ? 1.0
                           : 0.0;
  features[base + 3] = static_cast<double>(branching_tokens);
  return features;
}

}  // namespace solar::trm
