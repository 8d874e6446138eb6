#include "solar/trm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <unordered_set>

#include <json.hpp>

namespace solar::trm {

using nlohmann::json;
using nlohmann::ordered_json;

TrmModel::TrmModel(const FeatureConfig& features, int hidden)
    : features_(features), hidden_(hidden) {
  features_.validate();
  if (hidden_ < 1) throw_config("trm: hidden width must be >= 1");
  params_.assign(param_count(), 0.0);
}

size_t TrmModel::param_count() const {
  size_t d = static_cast<size_t>(input_dim());
  size_t h = static_cast<size_t>(hidden_);
  return d * h + h + h + 1 + h + 1;
}

namespace {

struct Layout {
  size_t trunk_w, trunk_b, reg_w, reg_b, rank_w, rank_b;
};

Layout layout_of(int dim, int hidden) {
  size_t d = static_cast<size_t>(dim);
  size_t h = static_cast<size_t>(hidden);
  Layout l{};
  l.trunk_w = 0;
  l.trunk_b = d * h;
  l.reg_w = l.trunk_b + h;
  l.reg_b = l.reg_w + h;
  l.rank_w = l.reg_b + 1;
  l.rank_b = l.rank_w + h;
  return l;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

std::span<double> TrmModel::trunk_w() {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.trunk_w, l.trunk_b - l.trunk_w};
}
std::span<double> TrmModel::trunk_b() {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.trunk_b, static_cast<size_t>(hidden_)};
}
std::span<double> TrmModel::reg_w() {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.reg_w, static_cast<size_t>(hidden_)};
}
std::span<double> TrmModel::rank_w() {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.rank_w, static_cast<size_t>(hidden_)};
}
double& TrmModel::reg_b() {
  return params_[layout_of(input_dim(), hidden_).reg_b];
}
double& TrmModel::rank_b() {
  return params_[layout_of(input_dim(), hidden_).rank_b];
}
std::span<const double> TrmModel::trunk_w() const {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.trunk_w, l.trunk_b - l.trunk_w};
}
std::span<const double> TrmModel::trunk_b() const {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.trunk_b, static_cast<size_t>(hidden_)};
}
std::span<const double> TrmModel::reg_w() const {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.reg_w, static_cast<size_t>(hidden_)};
}
std::span<const double> TrmModel::rank_w() const {
  Layout l = layout_of(input_dim(), hidden_);
  return {params_.data() + l.rank_w, static_cast<size_t>(hidden_)};
}
double TrmModel::reg_b() const {
  return params_[layout_of(input_dim(), hidden_).reg_b];
}
double TrmModel::rank_b() const {
  return params_[layout_of(input_dim(), hidden_).rank_b];
}

namespace {

void hidden_activations(const TrmModel& model, std::span<const double> x,
                        std::vector<double>& h) {
  int dim = model.input_dim();
  int hidden = model.hidden();
  std::span<const double> w = model.trunk_w();
  std::span<const double> b = model.trunk_b();
  h.assign(static_cast<size_t>(hidden), 0.0);
  for (int i = 0; i < hidden; ++i) {
    double z = b[static_cast<size_t>(i)];
    const double* row = w.data() + static_cast<size_t>(i) * static_cast<size_t>(dim);
    for (int j = 0; j < dim; ++j) z += row[j] * x[static_cast<size_t>(j)];
    h[static_cast<size_t>(i)] = std::tanh(z);
  }
}

}  // namespace

RewardScores forward(const TrmModel& model, std::span<const double> features) {
  if (static_cast<int>(features.size()) != model.input_dim()) {
    throw_data("forward: feature vector length does not match the model input");
  }
  std::vector<double> h;
  hidden_activations(model, features, h);
  std::span<const double> u = model.reg_w();
  std::span<const double> v = model.rank_w();
  double a = model.reg_b();
  double s = model.rank_b();
  for (int i = 0; i < model.hidden(); ++i) {
    a += u[static_cast<size_t>(i)] * h[static_cast<size_t>(i)];
    s += v[static_cast<size_t>(i)] * h[static_cast<size_t>(i)];
  }
  return RewardScores{sigmoid(a), s};
}

void TrainingConfig::validate() const {
  if (!(beta > 0.0)) throw_config("trm: beta must be > 0");
  if (lambda_mse < 0.0 || lambda_rank < 0.0) {
    throw_config("trm: loss weights must be >= 0");
  }
  if (lambda_mse == 0.0 && lambda_rank == 0.0) {
    throw_config("trm: at least one loss weight must be positive");
  }
  if (!(learning_rate > 0.0)) throw_config("trm: learning_rate must be > 0");
  if (epochs < 1) throw_config("trm: epochs must be >= 1");
  if (batch_size < 1) throw_config("trm: batch_size must be >= 1");
}

double mse_loss(std::span<const double> predicted, std::span<const double> targets) {
  if (predicted.size() != targets.size()) {
    throw_data("mse_loss requires equally long vectors");
  }
  if (predicted.empty()) throw_data("mse_loss undefined on empty vectors");
  double total = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    double d = predicted[i] - targets[i];
    total += d * d;
  }
  return total / static_cast<double>(predicted.size());
}

double pairwise_rank_loss(double preferred, double dispreferred, double beta) {
  if (!(beta > 0.0)) throw_config("pairwise_rank_loss: beta must be > 0");
  return softplus(-beta * (preferred - dispreferred));
}

double combined_loss(const TrmModel& model, const Batch& batch,
                     const TrainingConfig& config) {
  config.validate();
  if (batch.regression.empty() && batch.pairs.empty()) {
    throw_data("combined loss undefined on an empty batch");
  }
  double loss = 0.0;
  if (!batch.regression.empty() && config.lambda_mse != 0.0) {
    double total = 0.0;
    for (const RegressionItem& item : batch.regression) {
      double d = forward(model, item.features).topo - item.target;
      total += d * d;
    }
    loss += config.lambda_mse * total / static_cast<double>(batch.regression.size());
  }
  if (!batch.pairs.empty() && config.lambda_rank != 0.0) {
    double total = 0.0;
    for (const PairItem& pair : batch.pairs) {
      double pos = forward(model, pair.preferred).rank;
      double neg = forward(model, pair.dispreferred).rank;
      total += pairwise_rank_loss(pos, neg, config.beta);
    }
    loss += config.lambda_rank * total / static_cast<double>(batch.pairs.size());
  }
  return loss;
}

namespace {

// Accumulates d(loss)/d(rank or topo pre-activation) back into the flat
// gradient for one example. head_w/head_b select which head the signal
// entered through.
void backprop_example(const TrmModel& model, std::span<const double> x,
                      const std::vector<double>& h, double g_head, bool reg_head,
                      std::vector<double>& gradient) {
  Layout l = layout_of(model.input_dim(), model.hidden());
  int dim = model.input_dim();
  int hidden = model.hidden();
  std::span<const double> head_w = reg_head ? model.reg_w() : model.rank_w();
  size_t head_w_off = reg_head ? l.reg_w : l.rank_w;
  size_t head_b_off = reg_head ? l.reg_b : l.rank_b;

  for (int i = 0; i < hidden; ++i) {
    gradient[head_w_off + static_cast<size_t>(i)] += g_head * h[static_cast<size_t>(i)];
  }
  gradient[head_b_off] += g_head;

  for (int i = 0; i < hidden; ++i) {
    double hi = h[static_cast<size_t>(i)];
    double g_z = g_head * head_w[static_cast<size_t>(i)] * (1.0 - hi * hi);
    if (g_z == 0.0) continue;
    size_t row = l.trunk_w + static_cast<size_t>(i) * static_cast<size_t>(dim);
    for (int j = 0; j < dim; ++j) {
      gradient[row + static_cast<size_t>(j)] += g_z * x[static_cast<size_t>(j)];
    }
    gradient[l.trunk_b + static_cast<size_t>(i)] += g_z;
  }
}

}  // namespace

std::vector<double> grad(const TrmModel& model, const Batch& batch,
                         const TrainingConfig& config) {
  config.validate();
  if (batch.regression.empty() && batch.pairs.empty()) {
    throw_data("gradient undefined on an empty batch");
  }
  std::vector<double> gradient(model.param_count(), 0.0);
  std::vector<double> h;

  if (!batch.regression.empty() && config.lambda_mse != 0.0) {
    double scale = config.lambda_mse / static_cast<double>(batch.regression.size());
    for (const RegressionItem& item : batch.regression) {
      hidden_activations(model, item.features, h);
      double a = model.reg_b();
      std::span<const double> u = model.reg_w();
      for (int i = 0; i < model.hidden(); ++i) {
        a += u[static_cast<size_t>(i)] * h[static_cast<size_t>(i)];
      }
      double y = sigmoid(a);
      double g_a = scale * 2.0 * (y - item.target) * y * (1.0 - y);
      backprop_example(model, item.features, h, g_a, true, gradient);
    }
  }

  if (!batch.pairs.empty() && config.lambda_rank != 0.0) {
    double scale = config.lambda_rank / static_cast<double>(batch.pairs.size());
    std::vector<double> h_neg;
    for (const PairItem& pair : batch.pairs) {
      hidden_activations(model, pair.preferred, h);
      hidden_activations(model, pair.dispreferred, h_neg);
      std::span<const double> v = model.rank_w();
      double pos = model.rank_b();
      double neg = model.rank_b();
      for (int i = 0; i < model.hidden(); ++i) {
        pos += v[static_cast<size_t>(i)] * h[static_cast<size_t>(i)];
        neg += v[static_cast<size_t>(i)] * h_neg[static_cast<size_t>(i)];
      }
      // d softplus(-beta*m) / dm = -beta * sigmoid(-beta*m)
      double g_margin = -config.beta * sigmoid(-config.beta * (pos - neg)) * scale;
      backprop_example(model, pair.preferred, h, g_margin, false, gradient);
      backprop_example(model, pair.dispreferred, h_neg, -g_margin, false, gradient);
    }
  }
  return gradient;
}

std::vector<PreferencePair> build_pairs(std::span<const ResponseRecord> records,
                                        int pairs_per_problem, std::uint64_t seed) {
  if (pairs_per_problem < 1) {
    throw_config("build_pairs: pairs_per_problem must be >= 1");
  }
  std::map<std::string, std::vector<const ResponseRecord*>> by_problem;
  for (const ResponseRecord& record : records) {
    if (!record.hard_label) {
      throw_data("response '" + record.id + "' lacks a hard label; cannot pair");
    }
    by_problem[record.problem_id].push_back(&record);
  }

  std::mt19937_64 rng(seed);
  std::vector<PreferencePair> pairs;
  for (auto& [problem_id, group] : by_problem) {
    std::sort(group.begin(), group.end(),
              [](const ResponseRecord* a, const ResponseRecord* b) {
                return a->id < b->id;
              });
    std::vector<const ResponseRecord*> correct;
    std::vector<const ResponseRecord*> incorrect;
    for (const ResponseRecord* record : group) {
      (*record->hard_label ? correct : incorrect).push_back(record);
    }
    if (correct.empty() || incorrect.empty()) continue;

    std::uint64_t cross = static_cast<std::uint64_t>(correct.size()) *
                          static_cast<std::uint64_t>(incorrect.size());
    std::uint64_t want =
        std::min<std::uint64_t>(static_cast<std::uint64_t>(pairs_per_problem), cross);
    std::unordered_set<std::uint64_t> chosen;
    std::uniform_int_distribution<std::uint64_t> pick(0, cross - 1);
    while (chosen.size() < want) chosen.insert(pick(rng));
    std::vector<std::uint64_t> ordered(chosen.begin(), chosen.end());
    std::sort(ordered.begin(), ordered.end());
    for (std::uint64_t index : ordered) {
      const ResponseRecord* pos = correct[index / incorrect.size()];
      const ResponseRecord* neg = incorrect[index % incorrect.size()];
      pairs.push_back(PreferencePair{problem_id, *pos, *neg});
    }
  }
  return pairs;
}

TrmModel init_model(const FeatureConfig& features, int hidden, std::uint64_t seed) {
  TrmModel model(features, hidden);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (double& p : model.params()) p = dist(rng);
  return model;
}

TrainResult train(const TrainingData& data, const FeatureConfig& features,
                  int hidden, const TrainingConfig& config) {
  config.validate();
  if (data.regression.empty() && data.pairs.empty()) {
    throw_data("training data is empty");
  }
  int dim = features.dimension();
  for (const RegressionItem& item : data.regression) {
    if (static_cast<int>(item.features.size()) != dim) {
      throw_data("regression item feature length does not match the model input");
    }
  }
  for (const PairItem& pair : data.pairs) {
    if (static_cast<int>(pair.preferred.size()) != dim ||
        static_cast<int>(pair.dispreferred.size()) != dim) {
      throw_data("pair feature length does not match the model input");
    }
  }

  TrmModel model = init_model(features, hidden, config.seed);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<size_t> reg_order(data.regression.size());
  std::vector<size_t> pair_order(data.pairs.size());
  for (size_t i = 0; i < reg_order.size(); ++i) reg_order[i] = i;
  for (size_t i = 0; i < pair_order.size(); ++i) pair_order[i] = i;

  size_t batch = static_cast<size_t>(config.batch_size);
  auto batches_of = [batch](size_t n) { return n == 0 ? 0 : (n + batch - 1) / batch; };

  TrainResult result;
  std::vector<RegressionItem> reg_batch;
  std::vector<PairItem> pair_batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(reg_order.begin(), reg_order.end(), rng);
    std::shuffle(pair_order.begin(), pair_order.end(), rng);
    size_t steps = std::max(batches_of(reg_order.size()), batches_of(pair_order.size()));
    for (size_t step = 0; step < steps; ++step) {
      reg_batch.clear();
      pair_batch.clear();
      size_t reg_begin = step * batch;
      for (size_t i = reg_begin; i < std::min(reg_begin + batch, reg_order.size()); ++i) {
        reg_batch.push_back(data.regression[reg_order[i]]);
      }
      size_t pair_begin = step * batch;
      for (size_t i = pair_begin; i < std::min(pair_begin + batch, pair_order.size());
           ++i) {
        pair_batch.push_back(data.pairs[pair_order[i]]);
      }
      if (reg_batch.empty() && pair_batch.empty()) continue;
      std::vector<double> gradient =
          grad(model, Batch{reg_batch, pair_batch}, config);
      std::vector<double>& params = model.params();
      for (size_t i = 0; i < params.size(); ++i) {
        params[i] -= config.learning_rate * gradient[i];
      }
    }
    double loss = combined_loss(model, Batch{data.regression, data.pairs}, config);
    if (!std::isfinite(loss)) {
      throw_data("training diverged: non-finite loss at epoch " +
                 std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(loss);
  }
  result.model = std::move(model);
  return result;
}

void save_model(const TrmModel& model, const std::string& path) {
  ordered_json object;
  object["version"] = std::string(kModelVersion);
  object["hash_dim"] = model.features().hash_dim;
  object["hidden"] = model.hidden();
  auto dump_span = [](std::span<const double> values) {
    return std::vector<double>(values.begin(), values.end());
  };
  object["trunk_w"] = dump_span(model.trunk_w());
  object["trunk_b"] = dump_span(model.trunk_b());
  object["reg_w"] = dump_span(model.reg_w());
  object["reg_b"] = model.reg_b();
  object["rank_w"] = dump_span(model.rank_w());
  object["rank_b"] = model.rank_b();

  std::ofstream out(path);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  out << object.dump(2) << '\n';
  if (!out) throw_io("write error on '" + path + "'");
}

TrmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open model file '" + path + "'");
  json object = json::parse(in, nullptr, false);
  if (object.is_discarded() || !object.is_object()) {
    throw_data("model file '" + path + "' is not a JSON object");
  }
  if (!object.contains("version") || !object["version"].is_string()) {
    throw_data("model file '" + path + "' lacks a version tag");
  }
  std::string version = object["version"].get<std::string>();
  if (version != kModelVersion) {
    throw_data("model file '" + path + "' has unsupported version '" + version +
               "' (expected '" + std::string(kModelVersion) + "')");
  }
  for (const char* key : {"hash_dim", "hidden", "trunk_w", "trunk_b", "reg_w",
                          "reg_b", "rank_w", "rank_b"}) {
    if (!object.contains(key)) {
      throw_data("model file '" + path + "' lacks key '" + key + "'");
    }
  }
  FeatureConfig features;
  features.hash_dim = object["hash_dim"].get<int>();
  int hidden = object["hidden"].get<int>();
  TrmModel model(features, hidden);

  auto load_span = [&](const char* key, std::span<double> dst) {
    const json& values = object[key];
    if (!values.is_array() || values.size() != dst.size()) {
      throw_data("model file '" + path + "': '" + key +
                 "' has inconsistent dimensions");
    }
    for (size_t i = 0; i < dst.size(); ++i) dst[i] = values[i].get<double>();
  };
  load_span("trunk_w", model.trunk_w());
  load_span("trunk_b", model.trunk_b());
  load_span("reg_w", model.reg_w());
  load_span("rank_w", model.rank_w());
  model.reg_b() = object["reg_b"].get<double>();
  model.rank_b() = object["rank_b"].get<double>();
  return model;
}

RewardScores TrmScorer::score(const Problem& problem,
                              const ResponseRecord& record) const {
  return forward(model_, featurize(problem, record, model_.features()));
}

}  // namespace solar::trm
