/*
 * Copyright 2026 The serfuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Linear classifier head over pooled feature streams, trained with Adam
// and a NewBob validation schedule. Multi-stream samples pool each stream
// independently and concatenate the pooled vectors before the head. The
// head and the attention-pooling parameters train with separate learning
// rates; the NewBob anneal factor applies to both. The best model by dev
// Macro-F1 is the one returned.

#ifndef SERFUSE_TRAINER_HPP_
#define SERFUSE_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "serfuse/csv_io.hpp"
#include "serfuse/digest.hpp"
#include "serfuse/errors.hpp"
#include "serfuse/evaluation.hpp"
#include "serfuse/losses.hpp"
#include "serfuse/newbob.hpp"
#include "serfuse/optimizer.hpp"
#include "serfuse/pooling.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

struct TrainConfig {
  LossKind loss = LossKind::nll;
  JeffreysParams jeffreys;
  PoolingKind pooling = PoolingKind::mean;
  int batch_size = 16;
  int max_epochs = 10;
  double learning_rate_head = 1e-4;
  double learning_rate_pooling = 1e-5;
  NewBobConfig newbob;
  std::uint64_t seed = 42;
};

inline void validate_train_config(const TrainConfig& c) {
  if (c.batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (c.max_epochs < 0) throw InvalidConfig("max_epochs must be >= 0");
  if (!(c.learning_rate_head > 0.0) || !(c.learning_rate_pooling > 0.0)) {
    throw InvalidConfig("learning rates must be > 0");
  }
  validate_jeffreys_params(c.jeffreys);
  validate_newbob_config(c.newbob);
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"loss", loss_kind_name(c.loss)},
      {"jeffreys",
       {{"alpha", c.jeffreys.alpha},
        {"beta", c.jeffreys.beta},
        {"epsilon", c.jeffreys.epsilon}}},
      {"pooling", pooling_kind_name(c.pooling)},
      {"batch_size", c.batch_size},
      {"max_epochs", c.max_epochs},
      {"learning_rate_head", c.learning_rate_head},
      {"learning_rate_pooling", c.learning_rate_pooling},
      {"newbob",
       {{"enabled", c.newbob.enabled},
        {"improvement_threshold", c.newbob.improvement_threshold},
        {"anneal_factor", c.newbob.anneal_factor},
        {"patience", c.newbob.patience}}},
      {"seed", c.seed},
  };
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  c.jeffreys.alpha = j.at("jeffreys").at("alpha").get<double>();
  c.jeffreys.beta = j.at("jeffreys").at("beta").get<double>();
  c.jeffreys.epsilon = j.at("jeffreys").at("epsilon").get<double>();
  c.pooling = parse_pooling_kind(j.at("pooling").get<std::string>());
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.learning_rate_head = j.at("learning_rate_head").get<double>();
  c.learning_rate_pooling = j.at("learning_rate_pooling").get<double>();
  c.newbob.enabled = j.at("newbob").at("enabled").get<bool>();
  c.newbob.improvement_threshold =
      j.at("newbob").at("improvement_threshold").get<double>();
  c.newbob.anneal_factor = j.at("newbob").at("anneal_factor").get<double>();
  c.newbob.patience = j.at("newbob").at("patience").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

/// Trained parameter container. `weights` is kNumClasses x input_dim
/// row-major; `attention` holds one scoring vector per stream when the
/// pooling is attention, else it is empty.
struct LinearHeadModel {
  std::vector<std::size_t> stream_dims;
  std::size_t input_dim = 0;
  PoolingKind pooling = PoolingKind::mean;
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<std::vector<double>> attention;
  std::uint64_t seed = 0;
  std::string config_digest;
  nlohmann::json train_config;  // resolved config, carried for provenance
};

/// Seeded initialization: weights uniform in +-1/sqrt(input_dim), bias
/// zero, attention vectors zero so that initial attention pooling equals
/// mean pooling.
inline LinearHeadModel init_model(std::span<const std::size_t> stream_dims,
                                  PoolingKind pooling, std::uint64_t seed) {
  if (stream_dims.empty()) throw InvalidConfig("no feature streams");
  LinearHeadModel model;
  model.stream_dims.assign(stream_dims.begin(), stream_dims.end());
  for (std::size_t d : stream_dims) {
    if (d == 0) throw InvalidConfig("zero-dimensional feature stream");
    model.input_dim += d;
  }
  model.pooling = pooling;
  model.seed = seed;
  model.bias.assign(kNumClasses, 0.0);
  model.weights.resize(kNumClasses * model.input_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(model.input_dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : model.weights) w = dist(rng);
  if (pooling == PoolingKind::attention) {
    for (std::size_t d : stream_dims) {
      model.attention.emplace_back(d, 0.0);
    }
  }
  return model;
}

namespace detail {

inline void check_sample_shape(const LinearHeadModel& model,
                               const SampleRecord& sample) {
  if (sample.streams.size() != model.stream_dims.size()) {
    throw DimensionMismatch("sample \"" + sample.sample_id + "\" has " +
                            std::to_string(sample.streams.size()) +
                            " streams, model expects " +
                            std::to_string(model.stream_dims.size()));
  }
  for (std::size_t s = 0; s < sample.streams.size(); ++s) {
    if (sample.streams[s].cols != model.stream_dims[s]) {
      throw DimensionMismatch("sample \"" + sample.sample_id + "\" stream " +
                              std::to_string(s) + " has D " +
                              std::to_string(sample.streams[s].cols) +
                              ", model expects " +
                              std::to_string(model.stream_dims[s]));
    }
  }
}

}  // namespace detail

struct SampleForward {
  std::vector<double> input;                      // pooled streams, Dtot
  std::vector<double> logits;                     // kNumClasses
  std::vector<std::vector<double>> att_weights;   // per stream, attention only
};

inline SampleForward forward_sample(const LinearHeadModel& model,
                                    const SampleRecord& sample) {
  detail::check_sample_shape(model, sample);
  SampleForward fwd;
  fwd.input.reserve(model.input_dim);
  for (std::size_t s = 0; s < sample.streams.size(); ++s) {
    if (model.pooling == PoolingKind::mean) {
      const auto pooled = mean_pool(sample.streams[s]);
      fwd.input.insert(fwd.input.end(), pooled.begin(), pooled.end());
    } else {
      auto res = attention_pool(sample.streams[s], model.attention[s]);
      fwd.input.insert(fwd.input.end(), res.pooled.begin(), res.pooled.end());
      fwd.att_weights.push_back(std::move(res.weights));
    }
  }
  fwd.logits.assign(kNumClasses, 0.0);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double* row = model.weights.data() + c * model.input_dim;
    double acc = model.bias[c];
    for (std::size_t d = 0; d < model.input_dim; ++d) {
      acc += row[d] * fwd.input[d];
    }
    fwd.logits[c] = acc;
  }
  return fwd;
}

inline PosteriorVector predict_sample(const LinearHeadModel& model,
                                      const SampleRecord& sample) {
  const auto fwd = forward_sample(model, sample);
  const auto probs = softmax(fwd.logits);
  PosteriorVector out{};
  std::copy(probs.begin(), probs.end(), out.begin());
  return out;
}

/// Posteriors in input order.
inline std::vector<std::pair<std::string, PosteriorVector>> predict(
    const LinearHeadModel& model, std::span<const SampleRecord> samples) {
  std::vector<std::pair<std::string, PosteriorVector>> out;
  out.reserve(samples.size());
  for (const auto& sample : samples) {
    out.emplace_back(sample.sample_id, predict_sample(model, sample));
  }
  return out;
}

/// Gradient accumulator shaped like the trainable parameters.
struct ModelGradients {
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<std::vector<double>> attention;

  static ModelGradients zeros_like(const LinearHeadModel& model) {
    ModelGradients g;
    g.weights.assign(model.weights.size(), 0.0);
    g.bias.assign(model.bias.size(), 0.0);
    for (const auto& u : model.attention) {
      g.attention.emplace_back(u.size(), 0.0);
    }
    return g;
  }
};

/// Mean loss over the batch plus exact analytic gradients with respect to
/// every trainable parameter (head weights, bias, per-stream attention).
/// The nll kind evaluates the Jeffreys expression with alpha = beta = 0,
/// which reduces to softmax cross-entropy.
inline double batch_loss_and_gradients(const LinearHeadModel& model,
                                       const std::vector<SampleRecord>& data,
                                       std::span<const std::size_t> indices,
                                       LossKind loss,
                                       const JeffreysParams& jeffreys,
                                       ModelGradients& grads) {
  if (indices.empty()) throw EmptyDataset("empty batch");
  const JeffreysParams effective =
      loss == LossKind::nll
          ? JeffreysParams{0.0, 0.0, jeffreys.epsilon}
          : jeffreys;
  const double inv_batch = 1.0 / static_cast<double>(indices.size());
  double total_loss = 0.0;
  std::vector<double> input_grad(model.input_dim);
  for (std::size_t idx : indices) {
    const SampleRecord& sample = data[idx];
    if (!sample.label.has_value()) {
      throw LabelX("sample \"" + sample.sample_id + "\" has no label");
    }
    const std::size_t target = class_index(*sample.label);
    const auto fwd = forward_sample(model, sample);
    total_loss +=
        inv_batch * jeffreys_loss_from_logits(fwd.logits, target, effective);
    auto dlogits = jeffreys_grad_logits(fwd.logits, target, effective);
    for (double& g : dlogits) g *= inv_batch;

    for (std::size_t c = 0; c < kNumClasses; ++c) {
      double* wrow = grads.weights.data() + c * model.input_dim;
      for (std::size_t d = 0; d < model.input_dim; ++d) {
        wrow[d] += dlogits[c] * fwd.input[d];
      }
      grads.bias[c] += dlogits[c];
    }

    if (model.pooling == PoolingKind::attention) {
      std::fill(input_grad.begin(), input_grad.end(), 0.0);
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double* row = model.weights.data() + c * model.input_dim;
        for (std::size_t d = 0; d < model.input_dim; ++d) {
          input_grad[d] += row[d] * dlogits[c];
        }
      }
      std::size_t offset = 0;
      for (std::size_t s = 0; s < sample.streams.size(); ++s) {
        const std::size_t dim = model.stream_dims[s];
        const auto back = attention_pool_backward(
            sample.streams[s], model.attention[s],
            std::span<const double>(input_grad.data() + offset, dim));
        for (std::size_t d = 0; d < dim; ++d) {
          grads.attention[s][d] += back.grad_u[d];
        }
        offset += dim;
      }
    }
  }
  return total_loss;
}

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_macro_f1 = 0.0;
  double learning_rate_head = 0.0;
  double learning_rate_pooling = 0.0;
  bool annealed = false;
};

struct TrainResult {
  LinearHeadModel model;
  std::vector<EpochStats> history;
  bool early_stopped = false;
};

namespace detail {

inline std::vector<std::size_t> dataset_stream_dims(
    const std::vector<SampleRecord>& data) {
  std::vector<std::size_t> dims;
  for (const auto& seq : data.front().streams) dims.push_back(seq.cols);
  return dims;
}

inline void validate_dataset(const std::vector<SampleRecord>& data,
                             std::span<const std::size_t> dims,
                             bool require_labels, const char* what) {
  for (const auto& sample : data) {
    if (sample.streams.size() != dims.size()) {
      throw DimensionMismatch(std::string(what) + " sample \"" +
                              sample.sample_id + "\": stream count varies");
    }
    for (std::size_t s = 0; s < dims.size(); ++s) {
      if (sample.streams[s].cols != dims[s]) {
        throw DimensionMismatch(std::string(what) + " sample \"" +
                                sample.sample_id +
                                "\": stream dimension varies");
      }
    }
    if (require_labels) {
      if (!sample.label.has_value() || *sample.label == Emotion::NoConsensus) {
        throw LabelX(std::string(what) + " sample \"" + sample.sample_id +
                     "\" lacks a usable (non-X) label");
      }
    }
  }
}

inline double dev_macro_f1(const LinearHeadModel& model,
                           const std::vector<SampleRecord>& dev) {
  std::vector<Emotion> refs;
  std::vector<Emotion> preds;
  refs.reserve(dev.size());
  preds.reserve(dev.size());
  for (const auto& sample : dev) {
    refs.push_back(*sample.label);
    const auto probs = predict_sample(model, sample);
    preds.push_back(kCanonicalOrder[argmax_class(probs)]);
  }
  return macro_f1(confusion_matrix(refs, preds));
}

}  // namespace detail

/// Mini-batch training loop: seeded shuffle per epoch, Adam on the head
/// at learning_rate_head and on the attention parameters at
/// learning_rate_pooling, NewBob on dev Macro-F1 after every epoch.
/// Returns the best-dev model and the per-epoch history. (seed, config,
/// data) fully determine the result.
inline TrainResult train(const std::vector<SampleRecord>& data,
                         const std::vector<SampleRecord>& dev,
                         const TrainConfig& config) {
  validate_train_config(config);
  if (data.empty()) throw EmptyDataset("empty training set");
  if (dev.empty()) throw EmptyDataset("empty dev set");
  const auto dims = detail::dataset_stream_dims(data);
  detail::validate_dataset(data, dims, true, "train");
  detail::validate_dataset(dev, dims, true, "dev");

  TrainResult result;
  result.model = init_model(dims, config.pooling, config.seed);
  result.model.train_config = train_config_to_json(config);
  result.model.config_digest = fnv1a64_hex(result.model.train_config.dump());
  if (config.max_epochs == 0) return result;

  LinearHeadModel& model = result.model;
  AdamState adam_weights(model.weights.size());
  AdamState adam_bias(model.bias.size());
  std::vector<AdamState> adam_attention;
  for (const auto& u : model.attention) adam_attention.emplace_back(u.size());

  NewBobState scheduler{config.newbob, config.learning_rate_head, {}, 0};
  // Both rates anneal by the same factor; keep their ratio fixed.
  const double pooling_ratio =
      config.learning_rate_pooling / config.learning_rate_head;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  LinearHeadModel best = model;
  double best_f1 = -1.0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double lr_head = scheduler.learning_rate;
    const double lr_pooling = lr_head * pooling_ratio;
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t size = std::min(batch, order.size() - start);
      const std::span<const std::size_t> indices(order.data() + start, size);
      auto grads = ModelGradients::zeros_like(model);
      const double loss = batch_loss_and_gradients(
          model, data, indices, config.loss, config.jeffreys, grads);
      epoch_loss += loss * static_cast<double>(size);
      adam_step(model.weights, grads.weights, adam_weights, lr_head);
      adam_step(model.bias, grads.bias, adam_bias, lr_head);
      for (std::size_t s = 0; s < model.attention.size(); ++s) {
        adam_step(model.attention[s], grads.attention[s], adam_attention[s],
                  lr_pooling);
      }
    }
    epoch_loss /= static_cast<double>(data.size());

    const double dev_f1 = detail::dev_macro_f1(model, dev);
    if (dev_f1 > best_f1) {
      best = model;
      best_f1 = dev_f1;
    }
    const auto decision = newbob_update(scheduler, dev_f1);
    result.history.push_back(
        {epoch, epoch_loss, dev_f1, lr_head, lr_pooling, decision.annealed});
    if (decision.stop) {
      result.early_stopped = true;
      break;
    }
  }

  result.model = std::move(best);
  result.model.train_config = train_config_to_json(config);
  result.model.config_digest = fnv1a64_hex(result.model.train_config.dump());
  return result;
}

// --- model (de)serialization -------------------------------------------

inline nlohmann::json model_to_json(const LinearHeadModel& model) {
  nlohmann::json weights = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t d = 0; d < model.input_dim; ++d) {
      row.push_back(model.weights[c * model.input_dim + d]);
    }
    weights.push_back(std::move(row));
  }
  nlohmann::json labels = nlohmann::json::array();
  for (Emotion e : kCanonicalOrder) labels.push_back(std::string(1, label_code(e)));
  nlohmann::json j{
      {"format", "serfuse-linear-head"},
      {"version", 1},
      {"labels", std::move(labels)},
      {"pooling", pooling_kind_name(model.pooling)},
      {"stream_dims", model.stream_dims},
      {"input_dim", model.input_dim},
      {"weights", std::move(weights)},
      {"bias", model.bias},
      {"attention", model.attention},
      {"seed", model.seed},
      {"config_digest", model.config_digest},
  };
  if (!model.train_config.is_null()) j["train_config"] = model.train_config;
  return j;
}

inline LinearHeadModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "serfuse-linear-head" ||
      j.value("version", 0) != 1) {
    throw IoFailure("not a serfuse linear-head model file");
  }
  LinearHeadModel model;
  model.pooling = parse_pooling_kind(j.at("pooling").get<std::string>());
  model.stream_dims = j.at("stream_dims").get<std::vector<std::size_t>>();
  model.input_dim = j.at("input_dim").get<std::size_t>();
  model.bias = j.at("bias").get<std::vector<double>>();
  model.attention =
      j.at("attention").get<std::vector<std::vector<double>>>();
  model.seed = j.at("seed").get<std::uint64_t>();
  model.config_digest = j.at("config_digest").get<std::string>();
  if (j.contains("train_config")) model.train_config = j.at("train_config");
  const auto& weights = j.at("weights");
  if (weights.size() != kNumClasses || model.bias.size() != kNumClasses) {
    throw IoFailure("model file has wrong class count");
  }
  model.weights.reserve(kNumClasses * model.input_dim);
  for (const auto& row : weights) {
    if (row.size() != model.input_dim) {
      throw IoFailure("model weight row does not match input_dim");
    }
    for (const auto& v : row) model.weights.push_back(v.get<double>());
  }
  std::size_t dim_sum = 0;
  for (std::size_t d : model.stream_dims) dim_sum += d;
  if (dim_sum != model.input_dim) {
    throw IoFailure("model stream_dims do not sum to input_dim");
  }
  if (model.pooling == PoolingKind::attention) {
    if (model.attention.size() != model.stream_dims.size()) {
      throw IoFailure("model attention params do not match stream count");
    }
    for (std::size_t s = 0; s < model.attention.size(); ++s) {
      if (model.attention[s].size() != model.stream_dims[s]) {
        throw IoFailure("model attention vector has wrong dimension");
      }
    }
  }
  for (double v : model.weights) {
    if (!std::isfinite(v)) throw NonFiniteValue("non-finite model weight");
  }
  return model;
}

inline void save_model(const LinearHeadModel& model,
                       const std::filesystem::path& path) {
  detail::write_text_file(path, model_to_json(model).dump(2) + "\n");
}

inline LinearHeadModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open \"" + path.string() + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure("\"" + path.string() + "\": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace serfuse

#endif  // SERFUSE_TRAINER_HPP_
