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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "serfuse/evaluation.hpp"

using namespace serfuse;

namespace {

// Direct counting oracle over the raw (ref, pred) pairs.
struct OracleScores {
  std::array<double, kNumClasses> f1{};
  double macro = 0.0;
  double accuracy = 0.0;
};

OracleScores oracle_scores(const std::vector<Emotion>& refs,
                           const std::vector<Emotion>& preds) {
  OracleScores out;
  int correct = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const bool is_ref = class_index(refs[i]) == c;
      const bool is_pred = class_index(preds[i]) == c;
      if (is_ref && is_pred) tp += 1;
      if (!is_ref && is_pred) fp += 1;
      if (is_ref && !is_pred) fn += 1;
    }
    const double precision =
        tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall =
        tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    out.f1[c] = precision + recall == 0.0
                    ? 0.0
                    : 2.0 * precision * recall / (precision + recall);
    out.macro += out.f1[c];
  }
  out.macro /= static_cast<double>(kNumClasses);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i] == preds[i]) correct += 1;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(refs.size());
  return out;
}

const std::vector<Emotion> kFixtureRefs = {Emotion::Anger, Emotion::Anger,
                                           Emotion::Neutral, Emotion::Neutral};
const std::vector<Emotion> kFixturePreds = {Emotion::Anger, Emotion::Neutral,
                                            Emotion::Neutral, Emotion::Neutral};

}  // namespace

TEST_CASE("confusion matrix counts pairs") {
  const auto cm = confusion_matrix(kFixtureRefs, kFixturePreds);
  REQUIRE(cm.counts[class_index(Emotion::Anger)][class_index(Emotion::Anger)] ==
          1);
  REQUIRE(
      cm.counts[class_index(Emotion::Anger)][class_index(Emotion::Neutral)] ==
      1);
  REQUIRE(cm.counts[class_index(Emotion::Neutral)]
                   [class_index(Emotion::Neutral)] == 2);
  REQUIRE(cm.total() == 4);
}

TEST_CASE("perfect predictions give a diagonal matrix") {
  std::vector<Emotion> refs;
  for (Emotion e : kCanonicalOrder) {
    refs.push_back(e);
    refs.push_back(e);
  }
  const auto cm = confusion_matrix(refs, refs);
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      REQUIRE(cm.counts[r][p] == (r == p ? 2u : 0u));
    }
  }
  REQUIRE(macro_f1(cm) == 1.0);
  REQUIRE(accuracy(cm) == 1.0);
}

TEST_CASE("empty inputs give the zero matrix") {
  const auto cm =
      confusion_matrix(std::vector<Emotion>{}, std::vector<Emotion>{});
  REQUIRE(cm.total() == 0);
  REQUIRE_THROWS_AS(accuracy(cm), EmptyMatrix);
}

TEST_CASE("length mismatches and X labels are rejected") {
  REQUIRE_THROWS_AS(
      confusion_matrix(std::vector<Emotion>{Emotion::Anger},
                       std::vector<Emotion>{}),
      LengthMismatch);
  REQUIRE_THROWS_AS(
      confusion_matrix(std::vector<Emotion>{Emotion::NoConsensus},
                       std::vector<Emotion>{Emotion::Anger}),
      LabelX);
}

TEST_CASE("fixture scores match hand computation") {
  const auto cm = confusion_matrix(kFixtureRefs, kFixturePreds);
  const auto f1 = per_class_f1(cm);
  // P_A = 1, R_A = 1/2 -> F1_A = 2/3; P_N = 2/3, R_N = 1 -> F1_N = 4/5.
  REQUIRE(f1[class_index(Emotion::Anger)] ==
          Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  REQUIRE(f1[class_index(Emotion::Neutral)] ==
          Catch::Approx(0.8).epsilon(1e-15));
  for (Emotion e : {Emotion::Contempt, Emotion::Disgust, Emotion::Fear,
                    Emotion::Happiness, Emotion::Sadness, Emotion::Surprise}) {
    REQUIRE(f1[class_index(e)] == 0.0);
  }
  REQUIRE(accuracy(cm) == 0.75);
  REQUIRE(macro_f1(cm) ==
          Catch::Approx((2.0 / 3.0 + 0.8) / 8.0).epsilon(1e-15));
  REQUIRE(macro_f1(cm) == Catch::Approx(0.183333).margin(1e-6));
}

TEST_CASE("uniformly wrong predictions score zero accuracy") {
  const std::vector<Emotion> refs(10, Emotion::Anger);
  const std::vector<Emotion> preds(10, Emotion::Happiness);
  const auto cm = confusion_matrix(refs, preds);
  REQUIRE(accuracy(cm) == 0.0);
  REQUIRE(macro_f1(cm) == 0.0);
}

TEST_CASE("macro F1 agrees with the counting oracle on random data") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> any_class(0, kNumClasses - 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<Emotion> refs(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      refs[i] = kCanonicalOrder[any_class(rng)];
      preds[i] = kCanonicalOrder[any_class(rng)];
    }
    const auto cm = confusion_matrix(refs, preds);
    const auto oracle = oracle_scores(refs, preds);
    const auto f1 = per_class_f1(cm);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      REQUIRE(f1[c] == oracle.f1[c]);  // exact
    }
    REQUIRE(macro_f1(cm) == oracle.macro);
    REQUIRE(accuracy(cm) == oracle.accuracy);
  }
}

TEST_CASE("macro F1 is invariant under sample permutation") {
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<std::size_t> any_class(0, kNumClasses - 1);
  std::vector<Emotion> refs(40), preds(40);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    refs[i] = kCanonicalOrder[any_class(rng)];
    preds[i] = kCanonicalOrder[any_class(rng)];
  }
  const double base = macro_f1(confusion_matrix(refs, preds));
  std::vector<std::size_t> order(refs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Emotion> refs2(refs.size()), preds2(refs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      refs2[i] = refs[order[i]];
      preds2[i] = preds[order[i]];
    }
    REQUIRE(macro_f1(confusion_matrix(refs2, preds2)) == base);
  }
}

TEST_CASE("class relabeling permutes per-class F1 and fixes the averages") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> any_class(0, kNumClasses - 1);
  std::vector<Emotion> refs(60), preds(60);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    refs[i] = kCanonicalOrder[any_class(rng)];
    preds[i] = kCanonicalOrder[any_class(rng)];
  }
  std::array<std::size_t, kNumClasses> perm{};
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Emotion> refs2(refs.size()), preds2(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    refs2[i] = kCanonicalOrder[perm[class_index(refs[i])]];
    preds2[i] = kCanonicalOrder[perm[class_index(preds[i])]];
  }
  const auto cm1 = confusion_matrix(refs, preds);
  const auto cm2 = confusion_matrix(refs2, preds2);
  const auto f1_base = per_class_f1(cm1);
  const auto f1_perm = per_class_f1(cm2);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    REQUIRE(f1_perm[perm[c]] == f1_base[c]);
  }
  REQUIRE(accuracy(cm2) == accuracy(cm1));
  REQUIRE(std::fabs(macro_f1(cm2) - macro_f1(cm1)) < 1e-12);
}

TEST_CASE("micro F1 equals accuracy for single-label multiclass") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<std::size_t> any_class(0, kNumClasses - 1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<Emotion> refs(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      refs[i] = kCanonicalOrder[any_class(rng)];
      preds[i] = kCanonicalOrder[any_class(rng)];
    }
    const auto cm = confusion_matrix(refs, preds);
    REQUIRE(micro_f1(cm) == accuracy(cm));  // exact
  }
}

TEST_CASE("report rendering") {
  const auto cm = confusion_matrix(kFixtureRefs, kFixturePreds);
  const auto report = score_report(cm);
  REQUIRE(report.support[class_index(Emotion::Anger)] == 2);
  REQUIRE(report.support[class_index(Emotion::Neutral)] == 2);

  const std::string text = render_report(report, cm, ReportFormat::text);
  REQUIRE(text.find("Anger (A)") != std::string::npos);
  REQUIRE(text.find("F1-Macro") != std::string::npos);
  REQUIRE(text.find("0.183333") != std::string::npos);
  REQUIRE(text.find("Accuracy") != std::string::npos);

  const std::string csv = render_report(report, cm, ReportFormat::csv);
  REQUIRE(csv.find("F1-Macro,0.183333") != std::string::npos);
  REQUIRE(csv.find("F1-A,0.666667") != std::string::npos);
  REQUIRE(csv.find("Accuracy,0.750000") != std::string::npos);

  // Deterministic output.
  REQUIRE(render_report(report, cm, ReportFormat::text) == text);

  const std::string confusion = render_confusion_csv(cm);
  REQUIRE(confusion.find("A,0.5000,0.0000,0.0000,0.0000,0.0000,0.5000,"
                         "0.0000,0.0000") != std::string::npos);
  REQUIRE(confusion.find("N,0.0000,0.0000,0.0000,0.0000,0.0000,1.0000,"
                         "0.0000,0.0000") != std::string::npos);
}
