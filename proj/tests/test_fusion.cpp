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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "serfuse/fusion.hpp"

using namespace serfuse;
namespace fs = std::filesystem;

namespace {

Prediction make_pred(const std::string& id, std::size_t hot,
                     double mass = 0.86) {
  Prediction p;
  p.sample_id = id;
  const double rest = (1.0 - mass) / (kNumClasses - 1);
  p.probs.fill(rest);
  p.probs[hot] = mass;
  p.predicted = kCanonicalOrder[hot];
  return p;
}

FusionVector make_vec(const std::string& id, std::vector<double> values) {
  return FusionVector{id, std::move(values)};
}

}  // namespace

TEST_CASE("five sub-systems concatenate to forty dimensions") {
  std::vector<std::vector<Prediction>> per_system(5);
  for (std::size_t s = 0; s < 5; ++s) {
    per_system[s].push_back(make_pred("s1", s));
    per_system[s].push_back(make_pred("s2", 7 - s));
  }
  const auto dataset = build_fusion_vectors(
      per_system, {"a", "b", "c", "d", "e"});
  REQUIRE(dataset.vectors.size() == 2);
  REQUIRE(dataset.vectors[0].values.size() == 40);
  REQUIRE(dataset.vectors[0].sample_id == "s1");  // sorted by id
  // Each consecutive 8-block is a probability vector.
  for (const auto& vec : dataset.vectors) {
    for (std::size_t block = 0; block < 5; ++block) {
      double sum = 0.0;
      for (std::size_t i = 0; i < kNumClasses; ++i) {
        sum += vec.values[block * kNumClasses + i];
      }
      REQUIRE(std::fabs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("single system fusion vector equals the posterior") {
  std::vector<std::vector<Prediction>> per_system(1);
  per_system[0].push_back(make_pred("s1", 3));
  const auto dataset = build_fusion_vectors(per_system, {"a"});
  REQUIRE(dataset.vectors[0].values ==
          std::vector<double>(per_system[0][0].probs.begin(),
                              per_system[0][0].probs.end()));
}

TEST_CASE("mismatched sample sets are rejected") {
  std::vector<std::vector<Prediction>> per_system(2);
  per_system[0].push_back(make_pred("s1", 0));
  per_system[1].push_back(make_pred("s2", 0));
  REQUIRE_THROWS_AS(build_fusion_vectors(per_system, {"a", "b"}),
                    SampleMismatch);
}

TEST_CASE("invalid posteriors are rejected") {
  std::vector<std::vector<Prediction>> per_system(1);
  auto bad = make_pred("s1", 0);
  bad.probs[0] = 0.5;  // sum now far from one
  per_system[0].push_back(bad);
  REQUIRE_THROWS_AS(build_fusion_vectors(per_system, {"a"}),
                    InvalidPosterior);
}

TEST_CASE("svm separates a linearly separable toy set") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.1);
  FusionDataset dataset;
  dataset.source_order = {"toy"};
  std::map<std::string, Emotion> labels;
  for (int i = 0; i < 30; ++i) {
    const std::string id_a = "a" + std::to_string(i);
    const std::string id_c = "c" + std::to_string(i);
    dataset.vectors.push_back(
        make_vec(id_a, {2.0 + noise(rng), 2.0 + noise(rng)}));
    labels[id_a] = Emotion::Anger;
    dataset.vectors.push_back(
        make_vec(id_c, {-2.0 + noise(rng), -2.0 + noise(rng)}));
    labels[id_c] = Emotion::Contempt;
  }
  const auto model = train_svm(dataset, labels, {1.0, 2000, 42});
  const auto preds = svm_predict(model, dataset.vectors);
  for (const auto& pred : preds) {
    REQUIRE(pred.label == labels.at(pred.sample_id));
  }
}

TEST_CASE("identical points with mixed labels predict the majority class") {
  FusionDataset dataset;
  dataset.source_order = {"toy"};
  std::map<std::string, Emotion> labels;
  for (int i = 0; i < 9; ++i) {
    const std::string id = "s" + std::to_string(i);
    dataset.vectors.push_back(make_vec(id, {0.4, 0.6}));
    // Six Neutral, three Anger: the majority is Neutral.
    labels[id] = i < 3 ? Emotion::Anger : Emotion::Neutral;
  }
  const SvmConfig config{1.0, 2000, 1};
  const auto model = train_svm(dataset, labels, config);

  // Identical points standardize to the zero vector, so only the biases
  // matter. Grid-search oracle over b for each class's hinge objective.
  auto hinge_at = [&](double b, int positives) {
    const int n = 9;
    const int negatives = n - positives;
    return (positives * std::max(0.0, 1.0 - b) +
            negatives * std::max(0.0, 1.0 + b)) /
           n;
  };
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    int positives = 0;
    for (const auto& [id, label] : labels) {
      if (class_index(label) == c) positives += 1;
    }
    double best_obj = hinge_at(-2.0, positives);
    for (double b = -2.0; b <= 2.0; b += 0.01) {
      best_obj = std::min(best_obj, hinge_at(b, positives));
    }
    // The trained bias must reach the grid optimum's objective (the
    // optimum can be a flat region, so positions may differ).
    INFO("class " << c << " positives " << positives
                  << " bias " << model.bias[c]);
    REQUIRE(hinge_at(model.bias[c], positives) <= best_obj + 0.05);
  }
  const auto preds = svm_predict(model, dataset.vectors);
  for (const auto& pred : preds) {
    REQUIRE(pred.label == Emotion::Neutral);
  }
}

TEST_CASE("svm training is deterministic") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FusionDataset dataset;
  dataset.source_order = {"x"};
  std::map<std::string, Emotion> labels;
  for (int i = 0; i < 40; ++i) {
    const std::string id = "s" + std::to_string(i);
    dataset.vectors.push_back(make_vec(id, {unit(rng), unit(rng), unit(rng)}));
    labels[id] = kCanonicalOrder[i % 3];
  }
  const auto a = train_svm(dataset, labels, {1.0, 500, 42});
  const auto b = train_svm(dataset, labels, {1.0, 500, 42});
  REQUIRE(svm_to_json(a).dump() == svm_to_json(b).dump());
}

TEST_CASE("per-dimension rescaling leaves predictions unchanged") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FusionDataset base;
  base.source_order = {"x"};
  std::map<std::string, Emotion> labels;
  for (int i = 0; i < 60; ++i) {
    const std::string id = "s" + std::to_string(i);
    const std::size_t cls = i % 4;
    base.vectors.push_back(make_vec(
        id, {static_cast<double>(cls) + 0.3 * gauss(rng), gauss(rng),
             cls * 0.5 + 0.2 * gauss(rng)}));
    labels[id] = kCanonicalOrder[cls];
  }
  FusionDataset scaled = base;
  const std::vector<double> factor = {10.0, 0.1, 3.0};
  const std::vector<double> offset = {-4.0, 2.0, 100.0};
  for (auto& vec : scaled.vectors) {
    for (std::size_t d = 0; d < vec.values.size(); ++d) {
      vec.values[d] = factor[d] * vec.values[d] + offset[d];
    }
  }
  const SvmConfig config{1.0, 800, 42};
  const auto model_a = train_svm(base, labels, config);
  const auto model_b = train_svm(scaled, labels, config);
  const auto preds_a = svm_predict(model_a, base.vectors);
  const auto preds_b = svm_predict(model_b, scaled.vectors);
  for (std::size_t i = 0; i < preds_a.size(); ++i) {
    REQUIRE(preds_a[i].label == preds_b[i].label);
  }
}

TEST_CASE("all-zero model predicts the first class by tie-break") {
  SvmFusionModel model;
  model.dim = 2;
  model.weights.assign(kNumClasses * 2, 0.0);
  model.bias.assign(kNumClasses, 0.0);
  model.mean.assign(2, 0.0);
  model.scale.assign(2, 1.0);
  const std::vector<FusionVector> vectors = {make_vec("s1", {0.3, 0.7})};
  const auto preds = svm_predict(model, vectors);
  REQUIRE(preds[0].label == Emotion::Anger);
}

TEST_CASE("constructed heavy weight on one block selects that class") {
  SvmFusionModel model;
  model.dim = kNumClasses;
  model.weights.assign(kNumClasses * kNumClasses, 0.0);
  model.weights[0] = 10.0;  // class A reacts to p_A
  model.bias.assign(kNumClasses, 0.0);
  model.mean.assign(kNumClasses, 0.0);
  model.scale.assign(kNumClasses, 1.0);
  const auto p = make_pred("s1", 0, 0.9);
  const std::vector<FusionVector> vectors = {
      make_vec("s1", std::vector<double>(p.probs.begin(), p.probs.end()))};
  const auto preds = svm_predict(model, vectors);
  REQUIRE(preds[0].label == Emotion::Anger);
  REQUIRE(preds[0].scores[0] > preds[0].scores[1]);
}

TEST_CASE("degenerate label sets are rejected") {
  FusionDataset dataset;
  dataset.source_order = {"x"};
  std::map<std::string, Emotion> labels;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "s" + std::to_string(i);
    dataset.vectors.push_back(make_vec(id, {0.1, 0.2}));
    labels[id] = Emotion::Anger;
  }
  REQUIRE_THROWS_AS(train_svm(dataset, labels, {1.0, 100, 1}),
                    DegenerateLabels);
  labels.erase("s0");
  REQUIRE_THROWS_AS(train_svm(dataset, labels, {1.0, 100, 1}),
                    SampleMismatch);
}

TEST_CASE("svm files survive save, load and re-save byte for byte") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FusionDataset dataset;
  dataset.source_order = {"a", "b"};
  std::map<std::string, Emotion> labels;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "s" + std::to_string(i);
    std::vector<double> values(16);
    for (double& v : values) v = unit(rng);
    dataset.vectors.push_back(make_vec(id, std::move(values)));
    labels[id] = kCanonicalOrder[i % 5];
  }
  const auto model = train_svm(dataset, labels, {2.0, 300, 9});
  const auto path_a = fs::temp_directory_path() / "serfuse_svm_a.json";
  const auto path_b = fs::temp_directory_path() / "serfuse_svm_b.json";
  save_svm(model, path_a);
  save_svm(load_svm(path_a), path_b);
  std::ifstream in_a(path_a, std::ios::binary), in_b(path_b, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(in_a)),
                            std::istreambuf_iterator<char>());
  const std::string bytes_b((std::istreambuf_iterator<char>(in_b)),
                            std::istreambuf_iterator<char>());
  REQUIRE(bytes_a == bytes_b);
}
