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

// Softmax, negative log-likelihood, and the Jeffreys loss
//
//   L = -log(p_k) - alpha * sum_{i != k} log(p_i) / (K - 1)
//             + beta * sum_{i != k} p_i log(p_i) / (1 - p_k)
//
// with exact gradients with respect to logits. Probabilities are floored
// at epsilon inside logs and in the 1 - p_k denominator; the loss is
// singular at p_i = 0 and p_k = 1 otherwise. During training everything
// is computed from logits through log-sum-exp, never from stored
// posteriors. Class count follows the input vector, so the loss also
// works on small test problems with K != 8.

#ifndef SERFUSE_LOSSES_HPP_
#define SERFUSE_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "serfuse/errors.hpp"
#include "serfuse/math.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

enum class LossKind { nll, jeffreys };

inline std::string loss_kind_name(LossKind k) {
  return k == LossKind::nll ? "nll" : "jeffreys";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "nll") return LossKind::nll;
  if (s == "jeffreys") return LossKind::jeffreys;
  throw InvalidConfig("unknown loss kind \"" + s + "\"");
}

struct JeffreysParams {
  double alpha = 0.1;
  double beta = 0.05;
  double epsilon = 1e-12;
};

inline void validate_jeffreys_params(const JeffreysParams& p) {
  if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha) || !(p.beta >= 0.0) ||
      !std::isfinite(p.beta)) {
    throw InvalidConfig("alpha and beta must be finite and non-negative");
  }
  if (!(p.epsilon > 0.0 && p.epsilon <= 1e-6)) {
    throw InvalidConfig("epsilon must lie in (0, 1e-6]");
  }
}

inline std::vector<double> softmax(std::span<const double> logits) {
  return stable_softmax(logits);
}

inline double nll_loss(std::span<const double> probs, std::size_t target,
                       double epsilon = 1e-12) {
  return -std::log(std::max(probs[target], epsilon));
}

inline double jeffreys_loss(std::span<const double> probs, std::size_t target,
                            const JeffreysParams& params) {
  const std::size_t num_classes = probs.size();
  const double log_eps = std::log(params.epsilon);
  double sum_log_other = 0.0;
  double sum_plogp_other = 0.0;
  for (std::size_t i = 0; i < num_classes; ++i) {
    if (i == target) continue;
    const double lp = std::max(std::log(probs[i]), log_eps);
    sum_log_other += lp;
    sum_plogp_other += probs[i] * lp;
  }
  const double target_term =
      -std::max(std::log(probs[target]), log_eps);
  const double smoothing_term =
      -params.alpha * sum_log_other / static_cast<double>(num_classes - 1);
  const double confidence_term =
      params.beta * sum_plogp_other /
      std::max(1.0 - probs[target], params.epsilon);
  return target_term + smoothing_term + confidence_term;
}

/// Jeffreys loss evaluated from logits through log-sum-exp, the path the
/// trainer uses. Identical to jeffreys_loss(softmax(logits), ...) but the
/// log-probabilities never round-trip through exp.
inline double jeffreys_loss_from_logits(std::span<const double> logits,
                                        std::size_t target,
                                        const JeffreysParams& params) {
  for (double z : logits) {
    if (!std::isfinite(z)) throw NonFiniteInput("non-finite logit");
  }
  const std::size_t num_classes = logits.size();
  const double lse = log_sum_exp(logits);
  const double log_eps = std::log(params.epsilon);
  double sum_log_other = 0.0;
  double sum_plogp_other = 0.0;
  double p_target = 0.0;
  for (std::size_t i = 0; i < num_classes; ++i) {
    const double lp = logits[i] - lse;
    const double p = std::exp(lp);
    if (i == target) {
      p_target = p;
      continue;
    }
    const double lp_floored = std::max(lp, log_eps);
    sum_log_other += lp_floored;
    sum_plogp_other += p * lp_floored;
  }
  const double target_term = -std::max(logits[target] - lse, log_eps);
  const double smoothing_term =
      -params.alpha * sum_log_other / static_cast<double>(num_classes - 1);
  const double confidence_term =
      params.beta * sum_plogp_other / std::max(1.0 - p_target, params.epsilon);
  return target_term + smoothing_term + confidence_term;
}

/// Exact gradient of jeffreys_loss(softmax(logits), target) with respect
/// to the logits. The epsilon floors act as clamps: where a floor is
/// active its branch contributes zero gradient. With alpha = beta = 0 the
/// result is the classical softmax cross-entropy gradient p - onehot.
inline std::vector<double> jeffreys_grad_logits(std::span<const double> logits,
                                                std::size_t target,
                                                const JeffreysParams& params) {
  for (double z : logits) {
    if (!std::isfinite(z)) throw NonFiniteInput("non-finite logit");
  }
  const std::size_t num_classes = logits.size();
  const double lse = log_sum_exp(logits);
  const double log_eps = std::log(params.epsilon);

  std::vector<double> probs(num_classes);
  std::vector<double> logp(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) {
    logp[i] = logits[i] - lse;
    probs[i] = std::exp(logp[i]);
  }
  const double denom_raw = 1.0 - probs[target];
  const bool denom_clamped = denom_raw <= params.epsilon;
  const double denom = std::max(denom_raw, params.epsilon);

  double sum_plogp_other = 0.0;
  for (std::size_t i = 0; i < num_classes; ++i) {
    if (i == target) continue;
    sum_plogp_other += probs[i] * std::max(logp[i], log_eps);
  }

  // dL/dp_i, with floored branches contributing zero.
  std::vector<double> dprob(num_classes, 0.0);
  for (std::size_t i = 0; i < num_classes; ++i) {
    const bool floored = logp[i] < log_eps;
    if (i == target) {
      if (!floored) dprob[i] += -1.0 / probs[i];
      if (!denom_clamped) {
        dprob[i] += params.beta * sum_plogp_other / (denom * denom);
      }
    } else {
      if (!floored) {
        dprob[i] += -params.alpha /
                    (static_cast<double>(num_classes - 1) * probs[i]);
      }
      // d(p log p)/dp = log p + 1 away from the floor, log(eps) at it.
      const double d_plogp = std::max(logp[i], log_eps) + (floored ? 0.0 : 1.0);
      dprob[i] += params.beta * d_plogp / denom;
    }
  }

  // Chain rule through softmax: dL/dz_j = p_j (dL/dp_j - sum_i p_i dL/dp_i).
  double weighted = 0.0;
  for (std::size_t i = 0; i < num_classes; ++i) weighted += probs[i] * dprob[i];
  std::vector<double> grad(num_classes);
  for (std::size_t j = 0; j < num_classes; ++j) {
    grad[j] = probs[j] * (dprob[j] - weighted);
  }
  return grad;
}

}  // namespace serfuse

#endif  // SERFUSE_LOSSES_HPP_
