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

// Validation-driven learning-rate annealing: whenever the relative
// improvement of the validation metric falls below a threshold the rate
// is multiplied by a fixed factor; too many consecutive anneals trigger
// an early stop.

#ifndef SERFUSE_NEWBOB_HPP_
#define SERFUSE_NEWBOB_HPP_

#include <cmath>
#include <optional>

#include "serfuse/errors.hpp"

namespace serfuse {

struct NewBobConfig {
  bool enabled = true;
  double improvement_threshold = 0.0025;
  double anneal_factor = 0.5;
  int patience = 3;
};

inline void validate_newbob_config(const NewBobConfig& c) {
  if (!(c.anneal_factor > 0.0 && c.anneal_factor < 1.0)) {
    throw InvalidConfig("anneal_factor must lie in (0,1)");
  }
  if (c.patience < 0) throw InvalidConfig("patience must be >= 0");
  if (!std::isfinite(c.improvement_threshold)) {
    throw InvalidConfig("improvement_threshold must be finite");
  }
}

struct NewBobState {
  NewBobConfig config;
  double learning_rate = 0.0;
  std::optional<double> previous_metric;
  int consecutive_anneals = 0;
};

struct NewBobDecision {
  double learning_rate = 0.0;
  bool annealed = false;
  bool stop = false;
};

/// Feeds one validation metric (in [0,1]) into the schedule. The first
/// call only records the baseline. Relative improvement is measured
/// against the previous epoch's metric; an improvement below the
/// threshold anneals the rate. `stop` raises once the consecutive-anneal
/// count exceeds the patience.
inline NewBobDecision newbob_update(NewBobState& state, double metric) {
  if (!(metric >= 0.0 && metric <= 1.0)) {
    throw InvalidConfig("validation metric must lie in [0,1]");
  }
  NewBobDecision decision{state.learning_rate, false, false};
  if (!state.config.enabled) {
    state.previous_metric = metric;
    return decision;
  }
  if (state.previous_metric.has_value()) {
    const double prev = *state.previous_metric;
    const double improvement = (metric - prev) / std::max(prev, 1e-9);
    if (improvement < state.config.improvement_threshold) {
      state.learning_rate *= state.config.anneal_factor;
      state.consecutive_anneals += 1;
      decision.annealed = true;
      decision.stop = state.consecutive_anneals > state.config.patience;
    } else {
      state.consecutive_anneals = 0;
    }
  }
  state.previous_metric = metric;
  decision.learning_rate = state.learning_rate;
  return decision;
}

}  // namespace serfuse

#endif  // SERFUSE_NEWBOB_HPP_
