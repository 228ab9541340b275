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

#include <map>

#include "serfuse/synth.hpp"

using namespace serfuse;

namespace {

SyntheticSpec tiny_spec() {
  SyntheticSpec spec;
  spec.per_class_train = 6;
  spec.per_class_dev = 3;
  spec.per_class_test = 3;
  spec.feature_dim = 4;
  spec.streams = 2;
  spec.t_min = 2;
  spec.t_max = 5;
  spec.annotators = 3;
  spec.seed = 5;
  return spec;
}

}  // namespace

TEST_CASE("noiseless annotators reproduce the ground truth") {
  auto spec = tiny_spec();
  spec.annotator_error = 0.0;
  const auto data = generate_synthetic(spec);
  std::map<std::string, Emotion> truth;
  for (const auto& row : data.train.truth) truth[row.sample_id] = row.label;
  for (const auto& rec : data.annotations) {
    REQUIRE(rec.vote == truth.at(rec.sample_id));
  }
  for (const auto& row : data.original_consensus) {
    REQUIRE(row.label == truth.at(row.sample_id));
  }
}

TEST_CASE("generation is seed deterministic") {
  const auto a = generate_synthetic(tiny_spec());
  const auto b = generate_synthetic(tiny_spec());
  REQUIRE(a.train.streams.size() == b.train.streams.size());
  for (std::size_t k = 0; k < a.train.streams.size(); ++k) {
    REQUIRE(a.train.streams[k].size() == b.train.streams[k].size());
    for (std::size_t i = 0; i < a.train.streams[k].size(); ++i) {
      REQUIRE(a.train.streams[k][i].sample_id ==
              b.train.streams[k][i].sample_id);
      REQUIRE(a.train.streams[k][i].values == b.train.streams[k][i].values);
    }
  }
  REQUIRE(a.annotations.size() == b.annotations.size());
  for (std::size_t i = 0; i < a.annotations.size(); ++i) {
    REQUIRE(a.annotations[i].vote == b.annotations[i].vote);
  }
  const auto c = generate_synthetic([] {
    auto spec = tiny_spec();
    spec.seed = 6;
    return spec;
  }());
  REQUIRE(a.train.streams[0][0].values != c.train.streams[0][0].values);
}

TEST_CASE("splits carry the expected shapes") {
  const auto spec = tiny_spec();
  const auto data = generate_synthetic(spec);
  REQUIRE(data.train.truth.size() == spec.per_class_train * kNumClasses);
  REQUIRE(data.dev.truth.size() == spec.per_class_dev * kNumClasses);
  REQUIRE(data.test.truth.size() == spec.per_class_test * kNumClasses);
  REQUIRE(data.train.streams.size() == spec.streams);
  for (const auto& seq : data.train.streams[0]) {
    REQUIRE(seq.cols == spec.feature_dim);
    REQUIRE(seq.rows >= spec.t_min);
    REQUIRE(seq.rows <= spec.t_max);
  }
  REQUIRE(data.annotations.size() ==
          data.train.truth.size() * spec.annotators);
}

TEST_CASE("noisy annotators with few votes produce X rows") {
  auto spec = tiny_spec();
  spec.per_class_train = 30;
  spec.annotators = 2;
  spec.annotator_error = 0.5;
  const auto data = generate_synthetic(spec);
  std::size_t x_count = 0;
  for (const auto& row : data.original_consensus) {
    if (row.label == Emotion::NoConsensus) x_count += 1;
  }
  REQUIRE(x_count > 0);
  REQUIRE(x_count < data.original_consensus.size());
}

TEST_CASE("invalid specs are rejected") {
  auto spec = tiny_spec();
  spec.t_max = 1;
  spec.t_min = 3;
  REQUIRE_THROWS_AS(generate_synthetic(spec), InvalidConfig);
  spec = tiny_spec();
  spec.annotator_error = 1.5;
  REQUIRE_THROWS_AS(generate_synthetic(spec), InvalidConfig);
}

TEST_CASE("error spread makes the annotator pool heterogeneous") {
  auto spec = tiny_spec();
  spec.per_class_train = 40;
  spec.annotators = 5;
  spec.annotator_error = 0.3;
  spec.annotator_error_spread = 0.25;
  const auto data = generate_synthetic(spec);

  std::map<std::string, Emotion> truth;
  for (const auto& row : data.train.truth) truth[row.sample_id] = row.label;
  std::map<std::string, std::pair<int, int>> tallies;  // wrong, total
  for (const auto& rec : data.annotations) {
    auto& [wrong, total] = tallies[rec.annotator_id];
    total += 1;
    if (rec.vote != truth.at(rec.sample_id)) wrong += 1;
  }
  // The first annotator (rate 0.05) must be markedly more reliable than
  // the last (rate 0.55).
  const auto& best = tallies.at("ann00");
  const auto& worst = tallies.at("ann04");
  const double best_rate = static_cast<double>(best.first) / best.second;
  const double worst_rate = static_cast<double>(worst.first) / worst.second;
  REQUIRE(best_rate < 0.15);
  REQUIRE(worst_rate > 0.40);
}
