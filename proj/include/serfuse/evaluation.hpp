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

// Scoring: per-class F1 (harmonic mean of precision and recall),
// Macro-F1 (unweighted mean over all 8 classes, absent classes scoring
// 0), accuracy, Micro-F1 and the confusion matrix.

#ifndef SERFUSE_EVALUATION_HPP_
#define SERFUSE_EVALUATION_HPP_

#include <array>
#include <cstdint>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>

#include "serfuse/errors.hpp"
#include "serfuse/labels.hpp"

namespace serfuse {

/// Rows are reference classes, columns predicted classes, canonical order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts) {
      for (std::uint64_t c : row) n += c;
    }
    return n;
  }
};

inline ConfusionMatrix confusion_matrix(std::span<const Emotion> refs,
                                        std::span<const Emotion> preds) {
  if (refs.size() != preds.size()) {
    throw LengthMismatch("confusion_matrix: " + std::to_string(refs.size()) +
                         " references vs " + std::to_string(preds.size()) +
                         " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i] == Emotion::NoConsensus || preds[i] == Emotion::NoConsensus) {
      throw LabelX("confusion_matrix: X at position " + std::to_string(i));
    }
    cm.counts[class_index(refs[i])][class_index(preds[i])] += 1;
  }
  return cm;
}

/// F1 per class; any 0/0 (class absent from references and predictions)
/// resolves to 0 and still participates in the macro average.
inline std::array<double, kNumClasses> per_class_f1(const ConfusionMatrix& cm) {
  std::array<double, kNumClasses> f1{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::uint64_t tp = cm.counts[c][c];
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (std::size_t other = 0; other < kNumClasses; ++other) {
      if (other == c) continue;
      fp += cm.counts[other][c];
      fn += cm.counts[c][other];
    }
    const double precision =
        (tp + fp) == 0 ? 0.0
                       : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall =
        (tp + fn) == 0 ? 0.0
                       : static_cast<double>(tp) / static_cast<double>(tp + fn);
    f1[c] = (precision + recall) == 0.0
                ? 0.0
                : 2.0 * precision * recall / (precision + recall);
  }
  return f1;
}

inline double macro_f1(const ConfusionMatrix& cm) {
  const auto f1 = per_class_f1(cm);
  double sum = 0.0;
  for (double v : f1) sum += v;
  return sum / static_cast<double>(kNumClasses);
}

inline double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw EmptyMatrix("accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) trace += cm.counts[c][c];
  return static_cast<double>(trace) / static_cast<double>(total);
}

/// Micro-F1 from global tp/fp/fn counts. For single-label multiclass
/// every miss is both a false positive and a false negative, so this
/// equals accuracy; kept as its own computation so the identity is
/// checkable rather than assumed.
inline double micro_f1(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw EmptyMatrix("micro_f1 of an empty confusion matrix");
  std::uint64_t tp = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) tp += cm.counts[c][c];
  // Every single-label miss is one fp and one fn: fp = fn = total - tp.
  const std::uint64_t fp = total - tp;
  const std::uint64_t fn = total - tp;
  return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

struct ScoreReport {
  std::array<double, kNumClasses> per_class_f1{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::array<std::uint64_t, kNumClasses> support{};
};

inline ScoreReport score_report(const ConfusionMatrix& cm) {
  ScoreReport report;
  report.per_class_f1 = per_class_f1(cm);
  report.macro_f1 = macro_f1(cm);
  report.accuracy = accuracy(cm);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::uint64_t n = 0;
    for (std::size_t p = 0; p < kNumClasses; ++p) n += cm.counts[c][p];
    report.support[c] = n;
  }
  return report;
}

enum class ReportFormat { text, csv };

namespace detail {

inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string format_ratio4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

/// Row-normalized confusion matrix, 4 decimals; empty rows render as 0.
inline std::string render_confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "ref\\pred";
  for (Emotion e : kCanonicalOrder) os << ',' << label_code(e);
  os << '\n';
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    std::uint64_t row_total = 0;
    for (std::uint64_t c : cm.counts[r]) row_total += c;
    os << label_code(kCanonicalOrder[r]);
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      const double v = row_total == 0
                           ? 0.0
                           : static_cast<double>(cm.counts[r][p]) /
                                 static_cast<double>(row_total);
      os << ',' << detail::format_ratio4(v);
    }
    os << '\n';
  }
  return os.str();
}

/// Renders the score report. Text: per-class F1 rows in canonical order,
/// then Accuracy and F1-Macro, then the row-normalized confusion matrix.
/// CSV: machine-readable metric,value rows.
inline std::string render_report(const ScoreReport& report,
                                 const ConfusionMatrix& cm,
                                 ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::text) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const Emotion e = kCanonicalOrder[c];
      const std::string name =
          std::string(label_name(e)) + " (" + label_code(e) + ")";
      char row[64];
      std::snprintf(row, sizeof row, "%-14s %s\n", name.c_str(),
                    detail::format_score(report.per_class_f1[c]).c_str());
      os << row;
    }
    char line[64];
    std::snprintf(line, sizeof line, "%-14s %s\n", "Accuracy",
                  detail::format_score(report.accuracy).c_str());
    os << line;
    std::snprintf(line, sizeof line, "%-14s %s\n", "F1-Macro",
                  detail::format_score(report.macro_f1).c_str());
    os << line;
    os << "\nConfusion (row-normalized)\n" << render_confusion_csv(cm);
  } else {
    os << "metric,value\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      os << "F1-" << label_code(kCanonicalOrder[c]) << ','
         << detail::format_score(report.per_class_f1[c]) << '\n';
    }
    os << "Accuracy," << detail::format_score(report.accuracy) << '\n';
    os << "F1-Macro," << detail::format_score(report.macro_f1) << '\n';
  }
  return os.str();
}

}  // namespace serfuse

#endif  // SERFUSE_EVALUATION_HPP_
