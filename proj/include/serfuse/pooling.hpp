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

// Collapses a T x D feature sequence into one D vector. Mean pooling
// averages frames; attention pooling scores each frame with a learned
// vector u, softmax-normalizes the scores and takes the weighted average.
// With u = 0 the attention weights are uniform, so both poolings agree.

#ifndef SERFUSE_POOLING_HPP_
#define SERFUSE_POOLING_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "serfuse/errors.hpp"
#include "serfuse/math.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

enum class PoolingKind { mean, attention };

inline std::string pooling_kind_name(PoolingKind k) {
  return k == PoolingKind::mean ? "mean" : "attention";
}

inline PoolingKind parse_pooling_kind(const std::string& s) {
  if (s == "mean") return PoolingKind::mean;
  if (s == "attention") return PoolingKind::attention;
  throw InvalidConfig("unknown pooling kind \"" + s + "\"");
}

/// Learned per-stream scoring vector for attention pooling.
struct AttentionParams {
  std::vector<double> u;
};

inline std::vector<double> mean_pool(const FeatureSequence& seq) {
  std::vector<double> out(seq.cols, 0.0);
  for (std::size_t t = 0; t < seq.rows; ++t) {
    const auto row = seq.frame(t);
    for (std::size_t d = 0; d < seq.cols; ++d) out[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(seq.rows);
  for (double& v : out) v *= inv;
  return out;
}

struct AttentionResult {
  std::vector<double> pooled;   // D
  std::vector<double> weights;  // T, positive, sums to 1
};

inline AttentionResult attention_pool(const FeatureSequence& seq,
                                      std::span<const double> u) {
  if (u.size() != seq.cols) {
    throw DimensionMismatch("attention vector dimension " +
                            std::to_string(u.size()) + " != stream D " +
                            std::to_string(seq.cols));
  }
  std::vector<double> scores(seq.rows);
  for (std::size_t t = 0; t < seq.rows; ++t) {
    scores[t] = dot(u, seq.frame(t));
  }
  AttentionResult res;
  res.weights = stable_softmax(scores);
  res.pooled.assign(seq.cols, 0.0);
  for (std::size_t t = 0; t < seq.rows; ++t) {
    const auto row = seq.frame(t);
    const double w = res.weights[t];
    for (std::size_t d = 0; d < seq.cols; ++d) res.pooled[d] += w * row[d];
  }
  return res;
}

struct AttentionBackward {
  std::vector<double> grad_seq;  // T x D row-major
  std::vector<double> grad_u;    // D
};

/// Exact gradients of upstream . pooled with respect to the frames and u.
/// With w = softmax(s), s_t = u . x_t and a_t = upstream . x_t:
///   d/ds_t = w_t (a_t - sum_j w_j a_j)
///   d/du   = sum_t (d/ds_t) x_t
///   d/dx_t = w_t upstream + (d/ds_t) u
inline AttentionBackward attention_pool_backward(
    const FeatureSequence& seq, std::span<const double> u,
    std::span<const double> upstream) {
  if (u.size() != seq.cols || upstream.size() != seq.cols) {
    throw DimensionMismatch("attention backward dimension mismatch");
  }
  const AttentionResult fwd = attention_pool(seq, u);

  std::vector<double> frame_dots(seq.rows);
  double weighted_sum = 0.0;
  for (std::size_t t = 0; t < seq.rows; ++t) {
    frame_dots[t] = dot(upstream, seq.frame(t));
    weighted_sum += fwd.weights[t] * frame_dots[t];
  }

  AttentionBackward grads;
  grads.grad_seq.assign(seq.rows * seq.cols, 0.0);
  grads.grad_u.assign(seq.cols, 0.0);
  for (std::size_t t = 0; t < seq.rows; ++t) {
    const double dscore = fwd.weights[t] * (frame_dots[t] - weighted_sum);
    const auto row = seq.frame(t);
    for (std::size_t d = 0; d < seq.cols; ++d) {
      grads.grad_u[d] += dscore * row[d];
      grads.grad_seq[t * seq.cols + d] =
          fwd.weights[t] * upstream[d] + dscore * u[d];
    }
  }
  return grads;
}

}  // namespace serfuse

#endif  // SERFUSE_POOLING_HPP_
