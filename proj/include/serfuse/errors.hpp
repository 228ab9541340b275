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

#ifndef SERFUSE_ERRORS_HPP_
#define SERFUSE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace serfuse {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Label / CSV layer.
struct UnknownLabel final : Error { using Error::Error; };
struct LabelX final : Error { using Error::Error; };
struct CsvError final : Error { using Error::Error; };

// Binary feature container.
struct BadMagic final : Error { using Error::Error; };
struct TruncatedRecord final : Error { using Error::Error; };
struct NonFiniteValue final : Error { using Error::Error; };
struct IoFailure final : Error { using Error::Error; };

// Consensus.
struct EmptyVotes final : Error { using Error::Error; };
struct MissingConsensus final : Error { using Error::Error; };

// Numerics.
struct DimensionMismatch final : Error { using Error::Error; };
struct ShapeMismatch final : Error { using Error::Error; };
struct NonFiniteInput final : Error { using Error::Error; };
struct InvalidConfig final : Error { using Error::Error; };

// Dataset / fusion.
struct EmptyDataset final : Error { using Error::Error; };
struct SampleMismatch final : Error { using Error::Error; };
struct InvalidPosterior final : Error { using Error::Error; };
struct DegenerateLabels final : Error { using Error::Error; };

// Evaluation.
struct LengthMismatch final : Error { using Error::Error; };
struct EmptyMatrix final : Error { using Error::Error; };

}  // namespace serfuse

#endif  // SERFUSE_ERRORS_HPP_
