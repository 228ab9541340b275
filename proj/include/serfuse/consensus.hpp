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

// Consensus relabeling from per-annotator votes. Each evaluator is scored
// by the fraction of their votes that match the existing per-sample
// consensus (samples without a consensus do not count); evaluators below
// a threshold are discarded and the consensus is recomputed from the
// surviving votes in a single pass. Modal ties resolve to X, except a tie
// between Neutral and exactly one other label, which drops Neutral.

#ifndef SERFUSE_CONSENSUS_HPP_
#define SERFUSE_CONSENSUS_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "serfuse/errors.hpp"
#include "serfuse/labels.hpp"
#include "serfuse/types.hpp"

namespace serfuse {

struct ConsensusConfig {
  double evaluator_threshold = 0.5;  // discard strictly-below scores
  bool neutral_drop_tie = true;
};

inline void validate_consensus_config(const ConsensusConfig& c) {
  if (!(c.evaluator_threshold >= 0.0 && c.evaluator_threshold <= 1.0)) {
    throw InvalidConfig("evaluator_threshold must lie in [0,1]");
  }
}

enum class ConsensusSource { original, recomputed };

struct ConsensusResult {
  std::string sample_id;
  Emotion label = Emotion::NoConsensus;
  ConsensusSource source = ConsensusSource::original;
  std::map<Emotion, std::uint64_t> vote_histogram;  // surviving votes
};

/// Modal label of a vote multiset. A tie between Neutral and exactly one
/// other label drops Neutral; any other tie yields X.
inline Emotion majority_consensus(std::span<const Emotion> votes,
                                  bool neutral_drop_tie = true) {
  if (votes.empty()) throw EmptyVotes("majority_consensus of no votes");
  std::array<std::uint64_t, kNumClasses> counts{};
  for (Emotion v : votes) {
    if (v == Emotion::NoConsensus) {
      throw LabelX("X is not an admissible vote");
    }
    counts[class_index(v)] += 1;
  }
  std::uint64_t max_count = 0;
  for (std::uint64_t c : counts) max_count = std::max(max_count, c);
  std::vector<Emotion> modal;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == max_count) modal.push_back(kCanonicalOrder[c]);
  }
  if (modal.size() == 1) return modal.front();
  if (neutral_drop_tie &&
      std::find(modal.begin(), modal.end(), Emotion::Neutral) != modal.end() &&
      modal.size() == 2) {
    return modal.front() == Emotion::Neutral ? modal.back() : modal.front();
  }
  return Emotion::NoConsensus;
}

/// Per-annotator agreement ratio against the given consensus, counting
/// only samples whose consensus is not X. Annotators with no countable
/// votes score 1 and are never discarded.
inline std::map<std::string, double> evaluator_scores(
    std::span<const AnnotationRecord> annotations,
    const std::map<std::string, Emotion>& consensus) {
  struct Tally {
    std::uint64_t countable = 0;
    std::uint64_t matching = 0;
  };
  std::map<std::string, Tally> tallies;
  for (const auto& rec : annotations) {
    const auto it = consensus.find(rec.sample_id);
    if (it == consensus.end()) {
      throw MissingConsensus("no consensus entry for sample \"" +
                             rec.sample_id + "\"");
    }
    Tally& tally = tallies[rec.annotator_id];  // creates on first vote
    if (it->second == Emotion::NoConsensus) continue;
    tally.countable += 1;
    if (rec.vote == it->second) tally.matching += 1;
  }
  std::map<std::string, double> scores;
  for (const auto& [annotator, tally] : tallies) {
    scores[annotator] = tally.countable == 0
                            ? 1.0
                            : static_cast<double>(tally.matching) /
                                  static_cast<double>(tally.countable);
  }
  return scores;
}

/// One filter-and-recompute pass: score evaluators against the original
/// consensus, drop every vote of evaluators scoring strictly below the
/// threshold, then take the majority of the surviving votes per sample.
/// Samples with no surviving votes get X. Emits one result per sample of
/// the original consensus, sorted by sample_id.
inline std::vector<ConsensusResult> recompute_consensus(
    std::span<const AnnotationRecord> annotations,
    const std::map<std::string, Emotion>& original_consensus,
    const ConsensusConfig& config) {
  validate_consensus_config(config);
  const auto scores = evaluator_scores(annotations, original_consensus);

  std::set<std::string> discarded;
  for (const auto& [annotator, score] : scores) {
    if (score < config.evaluator_threshold) discarded.insert(annotator);
  }

  std::map<std::string, std::vector<Emotion>> surviving;
  for (const auto& rec : annotations) {
    if (discarded.count(rec.annotator_id)) continue;
    surviving[rec.sample_id].push_back(rec.vote);
  }

  std::vector<ConsensusResult> results;
  results.reserve(original_consensus.size());
  for (const auto& [sample_id, original_label] : original_consensus) {
    ConsensusResult res;
    res.sample_id = sample_id;
    const auto it = surviving.find(sample_id);
    if (it == surviving.end() || it->second.empty()) {
      res.label = Emotion::NoConsensus;
    } else {
      res.label = majority_consensus(it->second, config.neutral_drop_tie);
      for (Emotion v : it->second) res.vote_histogram[v] += 1;
    }
    res.source = res.label == original_label ? ConsensusSource::original
                                             : ConsensusSource::recomputed;
    results.push_back(std::move(res));
  }
  return results;
}

struct AugmentationRow {
  Emotion label = Emotion::Neutral;
  std::uint64_t before = 0;
  std::uint64_t after = 0;
  std::int64_t delta = 0;
};

struct AugmentationReport {
  std::vector<AugmentationRow> rows;  // descending before-count order
  std::uint64_t total_before = 0;
  std::uint64_t total_after = 0;
};

/// Per-class before/after counts plus totals, rows in descending
/// before-count order (canonical order breaks ties).
inline AugmentationReport augmentation_report(
    const std::map<Emotion, std::uint64_t>& before,
    const std::map<Emotion, std::uint64_t>& after) {
  AugmentationReport report;
  for (Emotion e : kCanonicalOrder) {
    AugmentationRow row;
    row.label = e;
    if (const auto it = before.find(e); it != before.end()) {
      row.before = it->second;
    }
    if (const auto it = after.find(e); it != after.end()) {
      row.after = it->second;
    }
    row.delta = static_cast<std::int64_t>(row.after) -
                static_cast<std::int64_t>(row.before);
    report.total_before += row.before;
    report.total_after += row.after;
    report.rows.push_back(row);
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const AugmentationRow& a, const AugmentationRow& b) {
                     return a.before > b.before;
                   });
  return report;
}

inline std::string render_augmentation_report(const AugmentationReport& r) {
  std::ostringstream os;
  char line[96];
  std::snprintf(line, sizeof line, "%-14s %10s %10s %8s\n", "Emotion Class",
                "Before", "After", "Delta");
  os << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-14c %10llu %10llu %8lld\n",
                  label_code(row.label),
                  static_cast<unsigned long long>(row.before),
                  static_cast<unsigned long long>(row.after),
                  static_cast<long long>(row.delta));
    os << line;
  }
  std::snprintf(line, sizeof line, "%-14s %10llu %10llu %8lld\n", "Total",
                static_cast<unsigned long long>(r.total_before),
                static_cast<unsigned long long>(r.total_after),
                static_cast<long long>(r.total_after) -
                    static_cast<long long>(r.total_before));
  os << line;
  return os.str();
}

}  // namespace serfuse

#endif  // SERFUSE_CONSENSUS_HPP_
