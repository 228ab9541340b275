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

// Score-level fusion: the posterior vectors of N sub-systems concatenate
// into one (N*8)-dimensional feature vector, classified by a linear
// one-vs-rest SVM trained from scratch. Per-class objective:
//
//   (1/n) sum_i max(0, 1 - y_i (w.x_i + b)) + (1/(2 C n)) ||w||^2
//
// minimized by deterministic full-batch subgradient descent with a
// 1/sqrt(t) step schedule, keeping the best iterate by objective value.
// Inputs standardize per dimension before training and scoring.

#ifndef SERFUSE_FUSION_HPP_
#define SERFUSE_FUSION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "serfuse/csv_io.hpp"
#include "serfuse/errors.hpp"
#include "serfuse/labels.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

struct FusionVector {
  std::string sample_id;
  std::vector<double> values;  // N * kNumClasses, each 8-block sums to 1
};

struct FusionDataset {
  std::vector<FusionVector> vectors;       // sorted by sample_id
  std::vector<std::string> source_order;   // sub-system names, file order
};

/// Concatenates per-sub-system posteriors in the given order. Every file
/// must cover the same sample set; vectors come out sorted by sample_id.
inline FusionDataset build_fusion_vectors(
    const std::vector<std::vector<Prediction>>& per_system,
    std::vector<std::string> source_names) {
  if (per_system.empty()) throw EmptyDataset("no sub-system predictions");
  if (source_names.size() != per_system.size()) {
    throw InvalidConfig("source names do not match prediction sets");
  }

  std::map<std::string, std::vector<const Prediction*>> by_sample;
  for (const auto& pred : per_system.front()) {
    by_sample[pred.sample_id].push_back(&pred);
  }
  for (std::size_t s = 1; s < per_system.size(); ++s) {
    for (const auto& pred : per_system[s]) {
      const auto it = by_sample.find(pred.sample_id);
      if (it == by_sample.end()) {
        throw SampleMismatch("sample \"" + pred.sample_id + "\" appears in " +
                             source_names[s] + " but not in " +
                             source_names.front());
      }
      it->second.push_back(&pred);
    }
  }
  for (const auto& [sample_id, preds] : by_sample) {
    if (preds.size() != per_system.size()) {
      throw SampleMismatch("sample \"" + sample_id +
                           "\" is missing from at least one sub-system");
    }
  }

  FusionDataset out;
  out.source_order = std::move(source_names);
  out.vectors.reserve(by_sample.size());
  for (const auto& [sample_id, preds] : by_sample) {
    FusionVector vec;
    vec.sample_id = sample_id;
    vec.values.reserve(per_system.size() * kNumClasses);
    for (const Prediction* pred : preds) {
      if (!is_valid_posterior(pred->probs)) {
        throw InvalidPosterior("sample \"" + sample_id +
                               "\" carries an invalid posterior");
      }
      vec.values.insert(vec.values.end(), pred->probs.begin(),
                        pred->probs.end());
    }
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

struct SvmConfig {
  double c = 1.0;          // inverse regularization weight, > 0
  int iterations = 2000;   // fixed budget, full-batch
  std::uint64_t seed = 42; // recorded; training itself draws no randomness
};

/// One-vs-rest linear SVM with per-dimension standardization.
struct SvmFusionModel {
  std::size_t dim = 0;
  std::vector<double> weights;  // kNumClasses x dim row-major
  std::vector<double> bias;     // kNumClasses
  std::vector<double> mean;     // dim
  std::vector<double> scale;    // dim, entries > 0
  double c = 1.0;
  int iterations = 2000;
  std::uint64_t seed = 0;
  std::vector<std::string> sources;
};

namespace detail {

inline std::vector<double> standardize(const SvmFusionModel& model,
                                       std::span<const double> x) {
  std::vector<double> out(model.dim);
  for (std::size_t d = 0; d < model.dim; ++d) {
    out[d] = (x[d] - model.mean[d]) / model.scale[d];
  }
  return out;
}

struct BinarySvm {
  std::vector<double> w;
  double b = 0.0;
};

inline double hinge_objective(const BinarySvm& svm,
                              const std::vector<std::vector<double>>& xs,
                              const std::vector<double>& ys, double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double margin = svm.b;
    for (std::size_t d = 0; d < svm.w.size(); ++d) {
      margin += svm.w[d] * xs[i][d];
    }
    hinge += std::max(0.0, 1.0 - ys[i] * margin);
  }
  double norm2 = 0.0;
  for (double v : svm.w) norm2 += v * v;
  return hinge / static_cast<double>(xs.size()) + 0.5 * lambda * norm2;
}

/// Full-batch subgradient descent on the regularized hinge objective,
/// returning the best iterate encountered (earliest on ties).
inline BinarySvm train_binary_svm(const std::vector<std::vector<double>>& xs,
                                  const std::vector<double>& ys, double c,
                                  int iterations) {
  const std::size_t n = xs.size();
  const std::size_t dim = xs.front().size();
  const double lambda = 1.0 / (c * static_cast<double>(n));
  const double inv_n = 1.0 / static_cast<double>(n);

  BinarySvm svm{std::vector<double>(dim, 0.0), 0.0};
  BinarySvm best = svm;
  double best_objective = hinge_objective(svm, xs, ys, lambda);

  std::vector<double> grad_w(dim);
  for (int t = 1; t <= iterations; ++t) {
    for (std::size_t d = 0; d < dim; ++d) grad_w[d] = lambda * svm.w[d];
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double margin = svm.b;
      for (std::size_t d = 0; d < dim; ++d) margin += svm.w[d] * xs[i][d];
      if (ys[i] * margin < 1.0) {
        for (std::size_t d = 0; d < dim; ++d) {
          grad_w[d] -= inv_n * ys[i] * xs[i][d];
        }
        grad_b -= inv_n * ys[i];
      }
    }
    const double step = 0.5 / std::sqrt(static_cast<double>(t));
    for (std::size_t d = 0; d < dim; ++d) svm.w[d] -= step * grad_w[d];
    svm.b -= step * grad_b;

    const double objective = hinge_objective(svm, xs, ys, lambda);
    if (objective < best_objective) {
      best_objective = objective;
      best = svm;
    }
  }
  return best;
}

}  // namespace detail

/// Fits standardization on the training vectors, then trains the eight
/// one-vs-rest classifiers. Labels must cover every vector and contain at
/// least two distinct classes.
inline SvmFusionModel train_svm(const FusionDataset& dataset,
                                const std::map<std::string, Emotion>& labels,
                                const SvmConfig& config) {
  if (!(config.c > 0.0)) throw InvalidConfig("svm C must be > 0");
  if (config.iterations < 1) throw InvalidConfig("iterations must be >= 1");
  if (dataset.vectors.empty()) throw EmptyDataset("no fusion vectors");

  const std::size_t dim = dataset.vectors.front().values.size();
  std::vector<std::size_t> targets;
  targets.reserve(dataset.vectors.size());
  for (const auto& vec : dataset.vectors) {
    if (vec.values.size() != dim) {
      throw DimensionMismatch("fusion vector \"" + vec.sample_id +
                              "\" has inconsistent dimension");
    }
    const auto it = labels.find(vec.sample_id);
    if (it == labels.end()) {
      throw SampleMismatch("no label for sample \"" + vec.sample_id + "\"");
    }
    if (it->second == Emotion::NoConsensus) {
      throw LabelX("sample \"" + vec.sample_id + "\" is labeled X");
    }
    targets.push_back(class_index(it->second));
  }
  if (std::set<std::size_t>(targets.begin(), targets.end()).size() < 2) {
    throw DegenerateLabels("training labels contain a single class");
  }

  SvmFusionModel model;
  model.dim = dim;
  model.c = config.c;
  model.iterations = config.iterations;
  model.seed = config.seed;
  model.sources = dataset.source_order;

  const std::size_t n = dataset.vectors.size();
  model.mean.assign(dim, 0.0);
  model.scale.assign(dim, 0.0);
  for (const auto& vec : dataset.vectors) {
    for (std::size_t d = 0; d < dim; ++d) model.mean[d] += vec.values[d];
  }
  for (double& v : model.mean) v /= static_cast<double>(n);
  for (const auto& vec : dataset.vectors) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double centered = vec.values[d] - model.mean[d];
      model.scale[d] += centered * centered;
    }
  }
  for (double& v : model.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v <= 1e-12) v = 1.0;  // constant dimension
  }

  std::vector<std::vector<double>> xs;
  xs.reserve(n);
  for (const auto& vec : dataset.vectors) {
    xs.push_back(detail::standardize(model, vec.values));
  }

  model.weights.assign(kNumClasses * dim, 0.0);
  model.bias.assign(kNumClasses, 0.0);
  std::vector<double> ys(n);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      ys[i] = targets[i] == c ? 1.0 : -1.0;
    }
    const auto svm =
        detail::train_binary_svm(xs, ys, config.c, config.iterations);
    std::copy(svm.w.begin(), svm.w.end(), model.weights.begin() + c * dim);
    model.bias[c] = svm.b;
  }
  return model;
}

struct SvmPrediction {
  std::string sample_id;
  Emotion label = Emotion::Anger;
  std::array<double, kNumClasses> scores{};
};

/// Standardize, score each class, argmax with canonical-order tie-break.
inline std::vector<SvmPrediction> svm_predict(
    const SvmFusionModel& model, std::span<const FusionVector> vectors) {
  std::vector<SvmPrediction> out;
  out.reserve(vectors.size());
  for (const auto& vec : vectors) {
    if (vec.values.size() != model.dim) {
      throw DimensionMismatch("fusion vector \"" + vec.sample_id +
                              "\" has dimension " +
                              std::to_string(vec.values.size()) +
                              ", model expects " + std::to_string(model.dim));
    }
    const auto x = detail::standardize(model, vec.values);
    SvmPrediction pred;
    pred.sample_id = vec.sample_id;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      double score = model.bias[c];
      const double* row = model.weights.data() + c * model.dim;
      for (std::size_t d = 0; d < model.dim; ++d) score += row[d] * x[d];
      pred.scores[c] = score;
    }
    pred.label = kCanonicalOrder[argmax_class(pred.scores)];
    out.push_back(std::move(pred));
  }
  return out;
}

// --- model (de)serialization -------------------------------------------

inline nlohmann::json svm_to_json(const SvmFusionModel& model) {
  nlohmann::json weights = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t d = 0; d < model.dim; ++d) {
      row.push_back(model.weights[c * model.dim + d]);
    }
    weights.push_back(std::move(row));
  }
  nlohmann::json labels = nlohmann::json::array();
  for (Emotion e : kCanonicalOrder) labels.push_back(std::string(1, label_code(e)));
  return nlohmann::json{
      {"format", "serfuse-svm-fusion"},
      {"version", 1},
      {"labels", std::move(labels)},
      {"dim", model.dim},
      {"weights", std::move(weights)},
      {"bias", model.bias},
      {"mean", model.mean},
      {"scale", model.scale},
      {"c", model.c},
      {"iterations", model.iterations},
      {"seed", model.seed},
      {"sources", model.sources},
  };
}

inline SvmFusionModel svm_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "serfuse-svm-fusion" ||
      j.value("version", 0) != 1) {
    throw IoFailure("not a serfuse svm-fusion model file");
  }
  SvmFusionModel model;
  model.dim = j.at("dim").get<std::size_t>();
  model.bias = j.at("bias").get<std::vector<double>>();
  model.mean = j.at("mean").get<std::vector<double>>();
  model.scale = j.at("scale").get<std::vector<double>>();
  model.c = j.at("c").get<double>();
  model.iterations = j.at("iterations").get<int>();
  model.seed = j.at("seed").get<std::uint64_t>();
  model.sources = j.at("sources").get<std::vector<std::string>>();
  const auto& weights = j.at("weights");
  if (weights.size() != kNumClasses || model.bias.size() != kNumClasses ||
      model.mean.size() != model.dim || model.scale.size() != model.dim) {
    throw IoFailure("svm model file has inconsistent shapes");
  }
  for (double v : model.scale) {
    if (!(v > 0.0)) throw IoFailure("svm model scale must be positive");
  }
  model.weights.reserve(kNumClasses * model.dim);
  for (const auto& row : weights) {
    if (row.size() != model.dim) {
      throw IoFailure("svm weight row does not match dim");
    }
    for (const auto& v : row) model.weights.push_back(v.get<double>());
  }
  return model;
}

inline void save_svm(const SvmFusionModel& model,
                     const std::filesystem::path& path) {
  detail::write_text_file(path, svm_to_json(model).dump(2) + "\n");
}

inline SvmFusionModel load_svm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open \"" + path.string() + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure("\"" + path.string() + "\": " + e.what());
  }
  return svm_from_json(j);
}

}  // namespace serfuse

#endif  // SERFUSE_FUSION_HPP_
