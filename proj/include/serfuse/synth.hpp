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

// Seed-deterministic synthetic corpus: Gaussian class clusters in feature
// space (per-class means scaled by `separation`, unit frame noise), split
// into train/dev/test, plus simulated annotator votes over the train
// split. The emitted "original consensus" for train is the majority vote
// of the simulated annotations, so noisy annotators naturally produce X
// rows, and zero annotator error reproduces the ground truth exactly.

#ifndef SERFUSE_SYNTH_HPP_
#define SERFUSE_SYNTH_HPP_

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "serfuse/consensus.hpp"
#include "serfuse/csv_io.hpp"
#include "serfuse/errors.hpp"
#include "serfuse/labels.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

struct SyntheticSpec {
  std::size_t per_class_train = 100;
  std::size_t per_class_dev = 50;
  std::size_t per_class_test = 50;
  std::size_t feature_dim = 12;
  std::size_t streams = 2;
  std::size_t t_min = 5;
  std::size_t t_max = 12;
  double separation = 3.0;
  std::size_t annotators = 5;
  double annotator_error = 0.25;
  // Optional reliability spread: annotator a gets error rate
  // clamp(annotator_error + spread * (2a/(A-1) - 1)). Zero keeps every
  // annotator at the same rate.
  double annotator_error_spread = 0.0;
  std::uint64_t seed = 42;
};

inline void validate_synthetic_spec(const SyntheticSpec& s) {
  if (s.per_class_train == 0 || s.per_class_dev == 0 || s.per_class_test == 0) {
    throw InvalidConfig("per-class counts must be positive");
  }
  if (s.feature_dim == 0 || s.streams == 0) {
    throw InvalidConfig("feature_dim and streams must be positive");
  }
  if (s.t_min == 0 || s.t_max < s.t_min) {
    throw InvalidConfig("frame-count range must satisfy 1 <= t_min <= t_max");
  }
  if (!(s.annotator_error >= 0.0 && s.annotator_error <= 1.0)) {
    throw InvalidConfig("annotator_error must lie in [0,1]");
  }
  if (!(s.annotator_error_spread >= 0.0 && s.annotator_error_spread <= 1.0)) {
    throw InvalidConfig("annotator_error_spread must lie in [0,1]");
  }
  if (s.annotators == 0) throw InvalidConfig("annotators must be positive");
  if (!(s.separation >= 0.0)) throw InvalidConfig("separation must be >= 0");
}

struct SyntheticSplit {
  // streams[k] is the full container for stream k, in sample order.
  std::vector<std::vector<FeatureSequence>> streams;
  std::vector<LabeledSample> truth;
};

struct SyntheticData {
  SyntheticSplit train, dev, test;
  std::vector<AnnotationRecord> annotations;        // train split only
  std::vector<LabeledSample> original_consensus;    // train, may contain X
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> frame_count(spec.t_min,
                                                         spec.t_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> wrong_offset(1, kNumClasses - 1);

  // Per-stream, per-class cluster means.
  std::vector<std::vector<std::vector<double>>> means(spec.streams);
  for (auto& per_class : means) {
    per_class.resize(kNumClasses);
    for (auto& mean : per_class) {
      mean.resize(spec.feature_dim);
      for (double& v : mean) v = spec.separation * gauss(rng);
    }
  }

  SyntheticData data;
  const struct {
    const char* name;
    std::size_t per_class;
    SyntheticSplit* split;
  } splits[] = {
      {"train", spec.per_class_train, &data.train},
      {"dev", spec.per_class_dev, &data.dev},
      {"test", spec.per_class_test, &data.test},
  };

  for (const auto& part : splits) {
    part.split->streams.resize(spec.streams);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const Emotion label = kCanonicalOrder[c];
      for (std::size_t i = 0; i < part.per_class; ++i) {
        char id[64];
        std::snprintf(id, sizeof id, "%s_%c_%04zu", part.name,
                      label_code(label), i);
        part.split->truth.push_back({id, label});
        for (std::size_t k = 0; k < spec.streams; ++k) {
          FeatureSequence seq;
          seq.sample_id = id;
          seq.rows = frame_count(rng);
          seq.cols = spec.feature_dim;
          seq.values.resize(seq.rows * seq.cols);
          for (std::size_t t = 0; t < seq.rows; ++t) {
            for (std::size_t d = 0; d < spec.feature_dim; ++d) {
              seq.values[t * seq.cols + d] = means[k][c][d] + gauss(rng);
            }
          }
          part.split->streams[k].push_back(std::move(seq));
        }
      }
    }
  }

  // Simulated votes: each annotator reports the truth, flipping to a
  // uniformly random wrong label with its error rate. With a nonzero
  // spread the pool is heterogeneous (first annotator most reliable).
  std::vector<double> error_rates(spec.annotators, spec.annotator_error);
  if (spec.annotator_error_spread > 0.0 && spec.annotators > 1) {
    for (std::size_t a = 0; a < spec.annotators; ++a) {
      const double offset =
          2.0 * static_cast<double>(a) /
              static_cast<double>(spec.annotators - 1) -
          1.0;
      error_rates[a] = std::clamp(
          spec.annotator_error + spec.annotator_error_spread * offset, 0.0,
          1.0);
    }
  }
  for (const auto& sample : data.train.truth) {
    std::vector<Emotion> votes;
    for (std::size_t a = 0; a < spec.annotators; ++a) {
      char annotator[32];
      std::snprintf(annotator, sizeof annotator, "ann%02zu", a);
      Emotion vote = sample.label;
      if (error_rates[a] > 0.0 && unit(rng) < error_rates[a]) {
        const std::size_t shifted =
            (class_index(sample.label) + wrong_offset(rng)) % kNumClasses;
        vote = kCanonicalOrder[shifted];
      }
      data.annotations.push_back({sample.sample_id, annotator, vote});
      votes.push_back(vote);
    }
    data.original_consensus.push_back(
        {sample.sample_id, majority_consensus(votes, true)});
  }
  return data;
}

}  // namespace serfuse

#endif  // SERFUSE_SYNTH_HPP_
