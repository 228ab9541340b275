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

#ifndef SERFUSE_TYPES_HPP_
#define SERFUSE_TYPES_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "serfuse/errors.hpp"
#include "serfuse/labels.hpp"

namespace serfuse {

/// One annotator's vote on one sample. X is not admissible as a vote.
struct AnnotationRecord {
  std::string sample_id;
  std::string annotator_id;
  Emotion vote = Emotion::Neutral;
};

/// A T x D matrix of encoder outputs for one sample and one stream,
/// stored row-major. Values live as doubles in memory; the on-disk
/// container stores 32-bit floats.
struct FeatureSequence {
  std::string sample_id;
  std::size_t rows = 0;  // T, frames
  std::size_t cols = 0;  // D, feature dimension
  std::vector<double> values;

  double operator()(std::size_t t, std::size_t d) const {
    return values[t * cols + d];
  }
  std::span<const double> frame(std::size_t t) const {
    return {values.data() + t * cols, cols};
  }
};

/// Throws unless T >= 1, D >= 1, the buffer matches T*D and all entries
/// are finite.
inline void validate_feature_sequence(const FeatureSequence& seq) {
  if (seq.rows == 0 || seq.cols == 0) {
    throw DimensionMismatch("feature sequence \"" + seq.sample_id +
                            "\" has empty shape");
  }
  if (seq.values.size() != seq.rows * seq.cols) {
    throw DimensionMismatch("feature sequence \"" + seq.sample_id +
                            "\" buffer does not match T*D");
  }
  for (double v : seq.values) {
    if (!std::isfinite(v)) {
      throw NonFiniteValue("feature sequence \"" + seq.sample_id +
                           "\" contains a non-finite value");
    }
  }
}

/// One dataset sample: the per-encoder feature streams plus an optional
/// target label (absent for unlabeled or test data).
struct SampleRecord {
  std::string sample_id;
  std::vector<FeatureSequence> streams;
  std::optional<Emotion> label;
};

/// 8 class probabilities in canonical order.
using PosteriorVector = std::array<double, kNumClasses>;

inline bool is_valid_posterior(const PosteriorVector& p, double tol = 1e-9) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::fabs(sum - 1.0) <= tol;
}

/// Argmax over canonical class order; ties resolve to the lowest index.
inline std::size_t argmax_class(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace serfuse

#endif  // SERFUSE_TYPES_HPP_
