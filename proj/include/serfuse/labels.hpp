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

#ifndef SERFUSE_LABELS_HPP_
#define SERFUSE_LABELS_HPP_

#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "serfuse/errors.hpp"

namespace serfuse {

/// The eight emotion classes plus the no-consensus marker X.
/// The first eight enumerators define the canonical class ordering
/// (alphabetical by code) used for every vector and matrix index.
enum class Emotion : std::uint8_t {
  Anger = 0,     // A
  Contempt = 1,  // C
  Disgust = 2,   // D
  Fear = 3,      // F
  Happiness = 4, // H
  Neutral = 5,   // N
  Sadness = 6,   // S
  Surprise = 7,  // U
  NoConsensus = 8,  // X, annotation outcome only, never a training target
};

inline constexpr std::size_t kNumClasses = 8;
inline constexpr std::size_t kNumCodes = 9;

inline constexpr std::array<Emotion, kNumClasses> kCanonicalOrder = {
    Emotion::Anger,   Emotion::Contempt, Emotion::Disgust, Emotion::Fear,
    Emotion::Happiness, Emotion::Neutral, Emotion::Sadness, Emotion::Surprise,
};

inline constexpr std::array<char, kNumCodes> kLabelCodes = {
    'A', 'C', 'D', 'F', 'H', 'N', 'S', 'U', 'X'};

inline constexpr std::array<std::string_view, kNumCodes> kLabelNames = {
    "Anger", "Contempt", "Disgust", "Fear", "Happiness",
    "Neutral", "Sadness", "Surprise", "NoConsensus"};

constexpr char label_code(Emotion e) noexcept {
  return kLabelCodes[static_cast<std::size_t>(e)];
}

constexpr std::string_view label_name(Emotion e) noexcept {
  return kLabelNames[static_cast<std::size_t>(e)];
}

/// Index of a class in the canonical ordering. X has no class index.
inline std::size_t class_index(Emotion e) {
  if (e == Emotion::NoConsensus) {
    throw LabelX("label X has no class index");
  }
  return static_cast<std::size_t>(e);
}

/// Parses a single-letter label code, case-insensitively.
inline Emotion parse_label(std::string_view text) {
  if (text.size() == 1) {
    const char c = static_cast<char>(
        std::toupper(static_cast<unsigned char>(text[0])));
    for (std::size_t i = 0; i < kNumCodes; ++i) {
      if (kLabelCodes[i] == c) return static_cast<Emotion>(i);
    }
  }
  throw UnknownLabel("unknown emotion label \"" + std::string(text) + "\"");
}

/// The fixed 8-class target set shared by all pipeline stages.
struct LabelSet {
  std::array<Emotion, kNumClasses> classes = kCanonicalOrder;
  static constexpr std::size_t class_count = kNumClasses;
};

}  // namespace serfuse

#endif  // SERFUSE_LABELS_HPP_
