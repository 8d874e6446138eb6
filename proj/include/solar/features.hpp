#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "solar/types.hpp"

namespace solar::trm {

// Deterministic featurization of a (question, response) pair:
//   [0, hash_dim)            signed hashed bag-of-words over question + response
//                            tokens, L2-normalized when nonzero
//   [hash_dim, hash_dim+3)   topology one-hot
//   [hash_dim+3, hash_dim+7) log1p word count, numeric token count, answer
//                            marker flag, branching keyword count (response text)
struct FeatureConfig {
  int hash_dim = 256;

  int dimension() const { return hash_dim + kTopologyCount + 4; }
  void validate() const;
};

using FeatureVector = std::vector<double>;

std::uint64_t fnv1a64(std::string_view bytes);

FeatureVector featurize(const Problem& problem, const ResponseRecord& record,
                        const FeatureConfig& config);

}  // namespace solar::trm
