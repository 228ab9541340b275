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

// CSV formats shared by the pipeline (UTF-8, LF line endings):
//   annotations: sample_id,annotator_id,label
//   labels:      sample_id,label
//   predictions: sample_id,pA,pC,pD,pF,pH,pN,pS,pU,pred
// Fields must not contain commas; probabilities print to 6 decimals.

#ifndef SERFUSE_CSV_IO_HPP_
#define SERFUSE_CSV_IO_HPP_

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "serfuse/errors.hpp"
#include "serfuse/labels.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

struct LabeledSample {
  std::string sample_id;
  Emotion label = Emotion::NoConsensus;
};

struct Prediction {
  std::string sample_id;
  PosteriorVector probs{};
  Emotion predicted = Emotion::Anger;
};

inline constexpr std::string_view kAnnotationsHeader =
    "sample_id,annotator_id,label";
inline constexpr std::string_view kLabelsHeader = "sample_id,label";
inline constexpr std::string_view kPredictionsHeader =
    "sample_id,pA,pC,pD,pF,pH,pN,pS,pU,pred";

namespace detail {

inline std::vector<std::string> read_csv_lines(
    const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open \"" + path.string() + "\" for reading");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty() || lines.front() != header) {
    throw CsvError("\"" + path.string() + "\": expected header \"" +
                   std::string(header) + "\"");
  }
  lines.erase(lines.begin());
  // Trailing blank line from the final LF is fine; blanks elsewhere are not.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<std::string> split_fields(const std::string& line,
                                             std::size_t expected,
                                             const std::filesystem::path& path,
                                             std::size_t lineno) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (fields.size() != expected) {
    throw CsvError("\"" + path.string() + "\" line " + std::to_string(lineno) +
                   ": expected " + std::to_string(expected) + " fields, got " +
                   std::to_string(fields.size()));
  }
  return fields;
}

inline std::string format_prob(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline double parse_prob(const std::string& s,
                         const std::filesystem::path& path,
                         std::size_t lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CsvError("\"" + path.string() + "\" line " + std::to_string(lineno) +
                   ": bad probability \"" + s + "\"");
  }
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoFailure("cannot open \"" + path.string() + "\" for writing");
  }
  out << content;
  if (!out) throw IoFailure("short write to \"" + path.string() + "\"");
}

}  // namespace detail

inline std::vector<AnnotationRecord> read_annotations_csv(
    const std::filesystem::path& path) {
  const auto lines = detail::read_csv_lines(path, kAnnotationsHeader);
  std::vector<AnnotationRecord> out;
  out.reserve(lines.size());
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = detail::split_fields(lines[i], 3, path, i + 2);
    if (f[0].empty() || f[1].empty()) {
      throw CsvError("\"" + path.string() + "\" line " + std::to_string(i + 2) +
                     ": empty id field");
    }
    AnnotationRecord rec{f[0], f[1], parse_label(f[2])};
    if (rec.vote == Emotion::NoConsensus) {
      throw LabelX("\"" + path.string() + "\" line " + std::to_string(i + 2) +
                   ": X is not an admissible vote");
    }
    if (!seen.emplace(rec.sample_id, rec.annotator_id).second) {
      throw CsvError("\"" + path.string() + "\" line " + std::to_string(i + 2) +
                     ": duplicate (sample_id, annotator_id) pair (" +
                     rec.sample_id + ", " + rec.annotator_id + ")");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline void write_annotations_csv(std::span<const AnnotationRecord> records,
                                  const std::filesystem::path& path) {
  std::ostringstream os;
  os << kAnnotationsHeader << '\n';
  for (const auto& rec : records) {
    os << rec.sample_id << ',' << rec.annotator_id << ','
       << label_code(rec.vote) << '\n';
  }
  detail::write_text_file(path, os.str());
}

/// Reads a labels CSV in file order; duplicate sample ids are an error.
/// X rows are allowed (original consensus files carry them).
inline std::vector<LabeledSample> read_labels_csv(
    const std::filesystem::path& path) {
  const auto lines = detail::read_csv_lines(path, kLabelsHeader);
  std::vector<LabeledSample> out;
  out.reserve(lines.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = detail::split_fields(lines[i], 2, path, i + 2);
    if (f[0].empty()) {
      throw CsvError("\"" + path.string() + "\" line " + std::to_string(i + 2) +
                     ": empty sample_id");
    }
    if (!seen.insert(f[0]).second) {
      throw CsvError("\"" + path.string() + "\" line " + std::to_string(i + 2) +
                     ": duplicate sample_id \"" + f[0] + "\"");
    }
    out.push_back({f[0], parse_label(f[1])});
  }
  return out;
}

inline void write_labels_csv(std::span<const LabeledSample> rows,
                             const std::filesystem::path& path) {
  std::ostringstream os;
  os << kLabelsHeader << '\n';
  for (const auto& row : rows) {
    os << row.sample_id << ',' << label_code(row.label) << '\n';
  }
  detail::write_text_file(path, os.str());
}

/// Reads a predictions CSV. The probability columns are validated loosely
/// (entries in [0,1], sum within 1e-4 of one; the file stores 6 decimals)
/// and renormalized so every in-memory posterior sums to 1 within 1e-9.
inline std::vector<Prediction> read_predictions_csv(
    const std::filesystem::path& path) {
  const auto lines = detail::read_csv_lines(path, kPredictionsHeader);
  std::vector<Prediction> out;
  out.reserve(lines.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = detail::split_fields(lines[i], 10, path, i + 2);
    Prediction p;
    p.sample_id = f[0];
    if (p.sample_id.empty()) {
      throw CsvError("\"" + path.string() + "\" line " + std::to_string(i + 2) +
                     ": empty sample_id");
    }
    if (!seen.insert(p.sample_id).second) {
      throw CsvError("\"" + path.string() + "\" line " + std::to_string(i + 2) +
                     ": duplicate sample_id \"" + p.sample_id + "\"");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      p.probs[c] = detail::parse_prob(f[1 + c], path, i + 2);
      if (p.probs[c] < 0.0 || p.probs[c] > 1.0) {
        throw InvalidPosterior("\"" + path.string() + "\" sample \"" +
                               p.sample_id + "\": probability out of [0,1]");
      }
      sum += p.probs[c];
    }
    if (std::fabs(sum - 1.0) > 1e-4) {
      throw InvalidPosterior("\"" + path.string() + "\" sample \"" +
                             p.sample_id + "\": probabilities sum to " +
                             detail::format_prob(sum));
    }
    for (double& v : p.probs) v /= sum;
    p.predicted = parse_label(f[9]);
    if (p.predicted == Emotion::NoConsensus) {
      throw LabelX("\"" + path.string() + "\" sample \"" + p.sample_id +
                   "\": X is not a valid prediction");
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_predictions_csv(std::span<const Prediction> rows,
                                  const std::filesystem::path& path) {
  std::ostringstream os;
  os << kPredictionsHeader << '\n';
  for (const auto& row : rows) {
    os << row.sample_id;
    for (double v : row.probs) os << ',' << detail::format_prob(v);
    os << ',' << label_code(row.predicted) << '\n';
  }
  detail::write_text_file(path, os.str());
}

}  // namespace serfuse

#endif  // SERFUSE_CSV_IO_HPP_
