#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "solar/features.hpp"
#include "solar/types.hpp"

namespace solar::trm {

inline constexpr std::string_view kModelVersion = "solar-trm-v1";

// Two-headed reward model over a shared tanh trunk:
//   h    = tanh(W x + b)
//   topo = sigmoid(u . h + c)   regression head, predicts topo labels
//   rank = v . h + d            ranking head, unbounded score
// Parameters live in one flat vector so optimization and finite-difference
// probing can treat the model as a point in R^P.
class TrmModel {
public:
  TrmModel() = default;
  TrmModel(const FeatureConfig& features, int hidden);

  const FeatureConfig& features() const { return features_; }
  int hidden() const { return hidden_; }
  int input_dim() const { return features_.dimension(); }
  size_t param_count() const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Flat layout: trunk weights (hidden x dim, row major), trunk bias,
  // regression head weights + bias, ranking head weights + bias.
  std::span<double> trunk_w();
  std::span<double> trunk_b();
  std::span<double> reg_w();
  std::span<double> rank_w();
  double& reg_b();
  double& rank_b();
  std::span<const double> trunk_w() const;
  std::span<const double> trunk_b() const;
  std::span<const double> reg_w() const;
  std::span<const double> rank_w() const;
  double reg_b() const;
  double rank_b() const;

private:
  FeatureConfig features_;
  int hidden_ = 32;
  std::vector<double> params_;
};

RewardScores forward(const TrmModel& model, std::span<const double> features);

struct RegressionItem {
  FeatureVector features;
  double target = 0.0;
};

struct PairItem {
  FeatureVector preferred;
  FeatureVector dispreferred;
};

struct Batch {
  std::span<const RegressionItem> regression;
  std::span<const PairItem> pairs;
};

struct TrainingConfig {
  double beta = 1.0;
  double lambda_mse = 1.0;
  double lambda_rank = 1.0;
  double learning_rate = 0.05;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

// Mean squared error over parallel prediction/target vectors.
double mse_loss(std::span<const double> predicted, std::span<const double> targets);

// Pairwise logistic ranking loss log(1 + exp(-beta * (preferred -
// dispreferred))), evaluated in softplus form so large margins stay finite.
double pairwise_rank_loss(double preferred, double dispreferred, double beta);

// lambda_mse * regression loss + lambda_rank * mean ranking loss over the
// batch. A missing sub-batch contributes zero; both missing is a Data error.
double combined_loss(const TrmModel& model, const Batch& batch,
                     const TrainingConfig& config);

// Analytic gradient of combined_loss with respect to the flat parameters.
std::vector<double> grad(const TrmModel& model, const Batch& batch,
                         const TrainingConfig& config);

struct PreferencePair {
  std::string problem_id;
  ResponseRecord preferred;
  ResponseRecord dispreferred;
};

// Up to pairs_per_problem (correct, incorrect) pairs per problem, sampled
// uniformly without replacement from the cross product. Problems are visited
// in sorted id order, so output is a pure function of (records, k, seed).
std::vector<PreferencePair> build_pairs(std::span<const ResponseRecord> records,
                                        int pairs_per_problem, std::uint64_t seed);

struct TrainingData {
  std::vector<RegressionItem> regression;
  std::vector<PairItem> pairs;
};

struct TrainResult {
  TrmModel model;
  std::vector<double> epoch_loss;  // full-dataset combined loss after each epoch
};

TrmModel init_model(const FeatureConfig& features, int hidden, std::uint64_t seed);

// Seeded mini-batch gradient descent. Deterministic given (data, config); a
// non-finite loss aborts with a Data error naming the epoch.
TrainResult train(const TrainingData& data, const FeatureConfig& features,
                  int hidden, const TrainingConfig& config);

void save_model(const TrmModel& model, const std::string& path);
TrmModel load_model(const std::string& path);

// Scoring surface the competition game consumes. Production code wraps a
// trained model; tests may substitute oracles.
class ResponseScorer {
public:
  virtual ~ResponseScorer() = default;
  virtual RewardScores score(const Problem& problem,
                             const ResponseRecord& record) const = 0;
};

class TrmScorer : public ResponseScorer {
public:
  explicit TrmScorer(TrmModel model) : model_(std::move(model)) {}
  RewardScores score(const Problem& problem,
                     const ResponseRecord& record) const override;
  const TrmModel& model() const { return model_; }

private:
  TrmModel model_;
};

}  // namespace solar::trm
