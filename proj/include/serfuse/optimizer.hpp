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

#ifndef SERFUSE_OPTIMIZER_HPP_
#define SERFUSE_OPTIMIZER_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "serfuse/errors.hpp"

namespace serfuse {

/// Adam accumulators for one parameter block.
struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t size)
      : first_moment(size, 0.0), second_moment(size, 0.0) {}
};

/// Standard bias-corrected Adam update, in place.
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, double learning_rate) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size()) {
    throw ShapeMismatch("adam_step: params " + std::to_string(params.size()) +
                        ", grads " + std::to_string(grads.size()) +
                        ", state " +
                        std::to_string(state.first_moment.size()));
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double bias2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = AdamState::kBeta1 * m + (1.0 - AdamState::kBeta1) * grads[i];
    v = AdamState::kBeta2 * v + (1.0 - AdamState::kBeta2) * grads[i] * grads[i];
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
  }
}

}  // namespace serfuse

#endif  // SERFUSE_OPTIMIZER_HPP_
