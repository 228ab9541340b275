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

#ifndef SERFUSE_MATH_HPP_
#define SERFUSE_MATH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "serfuse/errors.hpp"

namespace serfuse {

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot product of vectors with different sizes");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double log_sum_exp(std::span<const double> z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - m);
  return m + std::log(acc);
}

/// Softmax with max subtraction. Scores are unbounded, so the naive
/// exponential would overflow.
inline std::vector<double> stable_softmax(std::span<const double> z) {
  for (double v : z) {
    if (!std::isfinite(v)) throw NonFiniteInput("non-finite softmax input");
  }
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace serfuse

#endif  // SERFUSE_MATH_HPP_
