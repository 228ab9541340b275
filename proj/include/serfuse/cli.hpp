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

// The serfuse executable: one subcommand per pipeline stage plus a
// synthetic-data generator. Every run that produces files also writes a
// manifest (resolved config, seed, input/output digests) beside its
// primary output. Exit codes: 0 success, 1 operational error, 2 usage
// error.

#ifndef SERFUSE_CLI_HPP_
#define SERFUSE_CLI_HPP_

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "serfuse/consensus.hpp"
#include "serfuse/csv_io.hpp"
#include "serfuse/evaluation.hpp"
#include "serfuse/feature_io.hpp"
#include "serfuse/fusion.hpp"
#include "serfuse/manifest.hpp"
#include "serfuse/synth.hpp"
#include "serfuse/trainer.hpp"
#include "serfuse/version.hpp"

namespace serfuse::cli {

/// Command-line misuse detected after parsing (maps to exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using serfuse::detail::write_text_file;

inline std::map<std::string, Emotion> labels_to_map(
    const std::vector<LabeledSample>& rows) {
  std::map<std::string, Emotion> out;
  for (const auto& row : rows) out.emplace(row.sample_id, row.label);
  return out;
}

/// Joins per-stream containers into SampleRecords, keeping the first
/// stream's file order. Every stream file must cover exactly the same
/// sample ids.
inline std::vector<SampleRecord> assemble_samples(
    std::vector<std::vector<FeatureSequence>> streams,
    const std::vector<std::string>& stream_names) {
  const auto& first = streams.front();
  std::vector<SampleRecord> samples;
  samples.reserve(first.size());
  for (const auto& seq : first) {
    SampleRecord rec;
    rec.sample_id = seq.sample_id;
    rec.streams.reserve(streams.size());
    samples.push_back(std::move(rec));
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (!index.emplace(first[i].sample_id, i).second) {
      throw SampleMismatch("duplicate sample \"" + first[i].sample_id +
                           "\" in " + stream_names.front());
    }
  }
  for (std::size_t s = 1; s < streams.size(); ++s) {
    if (streams[s].size() != first.size()) {
      throw SampleMismatch(stream_names[s] + " holds " +
                           std::to_string(streams[s].size()) +
                           " records, expected " +
                           std::to_string(first.size()));
    }
  }
  for (std::size_t i = 0; i < first.size(); ++i) {
    samples[i].streams.push_back(std::move(streams.front()[i]));
  }
  for (std::size_t s = 1; s < streams.size(); ++s) {
    // Reorder stream s to the first stream's order.
    std::map<std::string, FeatureSequence*> lookup;
    for (auto& seq : streams[s]) {
      if (!lookup.emplace(seq.sample_id, &seq).second) {
        throw SampleMismatch("duplicate sample \"" + seq.sample_id + "\" in " +
                             stream_names[s]);
      }
      if (!index.count(seq.sample_id)) {
        throw SampleMismatch("sample \"" + seq.sample_id + "\" appears in " +
                             stream_names[s] + " but not in " +
                             stream_names.front());
      }
    }
    for (auto& sample : samples) {
      sample.streams.push_back(std::move(*lookup.at(sample.sample_id)));
    }
  }
  return samples;
}

/// Attaches labels to samples and keeps only those with a usable
/// (non-X) label. X rows and samples missing from the labels file are
/// excluded; the caller reports the counts.
struct LabeledJoin {
  std::vector<SampleRecord> samples;
  std::size_t dropped_unlabeled = 0;
  std::size_t dropped_x = 0;
};

inline LabeledJoin join_labels(std::vector<SampleRecord> samples,
                               const std::map<std::string, Emotion>& labels) {
  LabeledJoin join;
  for (auto& sample : samples) {
    const auto it = labels.find(sample.sample_id);
    if (it == labels.end()) {
      join.dropped_unlabeled += 1;
      continue;
    }
    if (it->second == Emotion::NoConsensus) {
      join.dropped_x += 1;
      continue;
    }
    sample.label = it->second;
    join.samples.push_back(std::move(sample));
  }
  return join;
}

inline std::vector<std::vector<FeatureSequence>> load_streams(
    const std::vector<std::string>& paths) {
  std::vector<std::vector<FeatureSequence>> streams;
  streams.reserve(paths.size());
  for (const auto& path : paths) {
    streams.push_back(read_feature_container(path));
  }
  return streams;
}

inline std::vector<Prediction> posterior_predictions(
    const std::vector<std::pair<std::string, PosteriorVector>>& posteriors) {
  std::vector<Prediction> rows;
  rows.reserve(posteriors.size());
  for (const auto& [sample_id, probs] : posteriors) {
    Prediction row;
    row.sample_id = sample_id;
    row.probs = probs;
    row.predicted = kCanonicalOrder[argmax_class(probs)];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json path_list(const std::vector<std::string>& paths) {
  return nlohmann::json(paths);
}

}  // namespace detail

// --- synth ---------------------------------------------------------------

struct SynthOptions {
  std::string out_dir;
  SyntheticSpec spec;
  std::string manifest_path;
};

inline int run_synth(const SynthOptions& opt) {
  const SyntheticData data = generate_synthetic(opt.spec);
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);

  RunManifest manifest;
  manifest.subcommand = "synth";
  manifest.seed = opt.spec.seed;

  const struct {
    const char* name;
    const SyntheticSplit* split;
  } splits[] = {{"train", &data.train}, {"dev", &data.dev},
                {"test", &data.test}};
  for (const auto& part : splits) {
    for (std::size_t k = 0; k < part.split->streams.size(); ++k) {
      const fs::path path = dir / ("features_" + std::string(part.name) +
                                   "_s" + std::to_string(k + 1) + ".emf1");
      write_feature_container(part.split->streams[k], path);
      manifest.outputs.push_back(path);
    }
  }

  const fs::path labels_train = dir / "labels_train.csv";
  write_labels_csv(data.original_consensus, labels_train);
  manifest.outputs.push_back(labels_train);

  std::vector<LabeledSample> known;
  for (const auto& row : data.original_consensus) {
    if (row.label != Emotion::NoConsensus) known.push_back(row);
  }
  const fs::path labels_known = dir / "labels_train_known.csv";
  write_labels_csv(known, labels_known);
  manifest.outputs.push_back(labels_known);

  const fs::path truth_train = dir / "truth_train.csv";
  write_labels_csv(data.train.truth, truth_train);
  manifest.outputs.push_back(truth_train);

  const fs::path labels_dev = dir / "labels_dev.csv";
  write_labels_csv(data.dev.truth, labels_dev);
  manifest.outputs.push_back(labels_dev);
  const fs::path labels_test = dir / "labels_test.csv";
  write_labels_csv(data.test.truth, labels_test);
  manifest.outputs.push_back(labels_test);

  const fs::path annotations = dir / "annotations_train.csv";
  write_annotations_csv(data.annotations, annotations);
  manifest.outputs.push_back(annotations);

  manifest.config = nlohmann::json{
      {"out_dir", opt.out_dir},
      {"per_class_train", opt.spec.per_class_train},
      {"per_class_dev", opt.spec.per_class_dev},
      {"per_class_test", opt.spec.per_class_test},
      {"feature_dim", opt.spec.feature_dim},
      {"streams", opt.spec.streams},
      {"t_min", opt.spec.t_min},
      {"t_max", opt.spec.t_max},
      {"separation", opt.spec.separation},
      {"annotators", opt.spec.annotators},
      {"annotator_error", opt.spec.annotator_error},
      {"annotator_error_spread", opt.spec.annotator_error_spread},
      {"seed", opt.spec.seed},
  };
  const fs::path manifest_path = opt.manifest_path.empty()
                                     ? dir / "synth.manifest.json"
                                     : fs::path(opt.manifest_path);
  write_manifest(manifest, manifest_path);
  return 0;
}

// --- consensus -------------------------------------------------------------

struct ConsensusOptions {
  std::string annotations_path;
  std::string original_path;
  double threshold = 0.5;
  bool neutral_drop = true;
  std::string out_path;
  std::string report_path;
  std::string augmented_out_path;
  std::string manifest_path;
};

inline int run_consensus(const ConsensusOptions& opt) {
  const auto annotations = read_annotations_csv(opt.annotations_path);
  const auto original_rows = read_labels_csv(opt.original_path);
  const auto original = detail::labels_to_map(original_rows);
  const ConsensusConfig config{opt.threshold, opt.neutral_drop};
  const auto results = recompute_consensus(annotations, original, config);

  // Output CSV: sample_id,label,source (sorted by sample_id).
  std::ostringstream os;
  os << "sample_id,label,source\n";
  for (const auto& res : results) {
    os << res.sample_id << ',' << label_code(res.label) << ','
       << (res.source == ConsensusSource::original ? "original" : "recomputed")
       << '\n';
  }
  detail::write_text_file(opt.out_path, os.str());

  // Report: evaluator filtering stats plus the class-distribution table
  // in the train-augmentation view (original non-X counts before; newly
  // labeled previously-X samples added after).
  const auto scores = evaluator_scores(annotations, original);
  std::vector<std::string> discarded;
  for (const auto& [annotator, score] : scores) {
    if (score < opt.threshold) discarded.push_back(annotator);
  }

  std::map<Emotion, std::uint64_t> before;
  std::map<Emotion, std::uint64_t> after;
  std::size_t originally_x = 0;
  std::size_t newly_labeled = 0;
  std::size_t changed_nonx = 0;
  std::size_t unresolved_x = 0;
  for (const auto& res : results) {
    const Emotion orig = original.at(res.sample_id);
    if (orig != Emotion::NoConsensus) {
      before[orig] += 1;
      after[orig] += 1;
      if (res.label != orig && res.label != Emotion::NoConsensus) {
        changed_nonx += 1;
      }
    } else if (res.label != Emotion::NoConsensus) {
      after[res.label] += 1;
      newly_labeled += 1;
    } else {
      unresolved_x += 1;
    }
    if (orig == Emotion::NoConsensus) originally_x += 1;
  }

  std::set<std::string> annotator_ids;
  std::set<std::string> sample_ids;
  for (const auto& rec : annotations) {
    annotator_ids.insert(rec.annotator_id);
    sample_ids.insert(rec.sample_id);
  }

  std::ostringstream report;
  report << "Consensus recomputation report\n";
  report << "Annotations: " << annotations.size() << " votes, "
         << annotator_ids.size() << " annotators, " << sample_ids.size()
         << " samples\n";
  char thr[64];
  std::snprintf(thr, sizeof thr, "%.4f", opt.threshold);
  report << "Evaluator threshold: " << thr
         << (opt.neutral_drop ? " (neutral tie drop: on)\n"
                              : " (neutral tie drop: off)\n");
  report << "Discarded evaluators (" << discarded.size() << ")";
  for (std::size_t i = 0; i < discarded.size(); ++i) {
    report << (i == 0 ? ": " : ", ") << discarded[i];
  }
  report << '\n';
  report << "Samples: " << results.size() << " total, originally X "
         << originally_x << '\n';
  report << "Newly labeled (previously X): " << newly_labeled << '\n';
  report << "Changed non-X labels (reported, not applied): " << changed_nonx
         << '\n';
  report << "Unresolved X after recomputation: " << unresolved_x << "\n\n";
  report << "Class distribution (training-set augmentation view)\n";
  report << render_augmentation_report(augmentation_report(before, after));
  detail::write_text_file(opt.report_path, report.str());

  RunManifest manifest;
  manifest.subcommand = "consensus";
  manifest.inputs = {opt.annotations_path, opt.original_path};
  manifest.outputs = {opt.out_path, opt.report_path};

  if (!opt.augmented_out_path.empty()) {
    std::vector<LabeledSample> augmented;
    for (const auto& res : results) {
      const Emotion orig = original.at(res.sample_id);
      if (orig != Emotion::NoConsensus) {
        augmented.push_back({res.sample_id, orig});
      } else if (res.label != Emotion::NoConsensus) {
        augmented.push_back({res.sample_id, res.label});
      }
    }
    write_labels_csv(augmented, opt.augmented_out_path);
    manifest.outputs.push_back(opt.augmented_out_path);
  }

  manifest.config = nlohmann::json{
      {"annotations", opt.annotations_path},
      {"original", opt.original_path},
      {"threshold", opt.threshold},
      {"neutral_drop", opt.neutral_drop},
      {"out", opt.out_path},
      {"report", opt.report_path},
      {"augmented_out", opt.augmented_out_path},
  };
  write_manifest(manifest, opt.manifest_path.empty()
                               ? default_manifest_path(opt.out_path)
                               : std::filesystem::path(opt.manifest_path));
  return 0;
}

// --- train -----------------------------------------------------------------

struct TrainOptions {
  std::vector<std::string> features;
  std::vector<std::string> dev_features;
  std::string labels_path;
  std::string dev_labels_path;
  std::string preset;  // empty or A..E
  TrainConfig config;
  std::string out_path;
  std::string manifest_path;
};

inline int run_train(const TrainOptions& opt, std::ostream& out,
                     std::ostream& err) {
  const auto train_streams = detail::load_streams(opt.features);
  const auto dev_streams = detail::load_streams(opt.dev_features);
  auto train_samples =
      detail::assemble_samples(std::move(train_streams), opt.features);
  auto dev_samples =
      detail::assemble_samples(std::move(dev_streams), opt.dev_features);

  const auto labels = detail::labels_to_map(read_labels_csv(opt.labels_path));
  const auto dev_labels =
      detail::labels_to_map(read_labels_csv(opt.dev_labels_path));
  auto train_join = detail::join_labels(std::move(train_samples), labels);
  auto dev_join = detail::join_labels(std::move(dev_samples), dev_labels);
  if (train_join.dropped_unlabeled + train_join.dropped_x > 0) {
    err << "note: excluded " << train_join.dropped_unlabeled
        << " unlabeled and " << train_join.dropped_x
        << " X-labeled training samples\n";
  }
  if (train_join.samples.empty()) {
    throw EmptyDataset("no labeled training samples after joining \"" +
                       opt.labels_path + "\"");
  }
  if (dev_join.samples.empty()) {
    throw EmptyDataset("no labeled dev samples after joining \"" +
                       opt.dev_labels_path + "\"");
  }

  const TrainResult result =
      train(train_join.samples, dev_join.samples, opt.config);
  for (const auto& stats : result.history) {
    char line[160];
    std::snprintf(line, sizeof line,
                  "epoch %3d  loss %.6f  dev F1-Macro %.6f  lr %.3e%s\n",
                  stats.epoch, stats.train_loss, stats.dev_macro_f1,
                  stats.learning_rate_head,
                  stats.annealed ? "  (annealed)" : "");
    out << line;
  }
  if (result.early_stopped) out << "early stop\n";
  save_model(result.model, opt.out_path);

  RunManifest manifest;
  manifest.subcommand = "train";
  manifest.seed = opt.config.seed;
  for (const auto& path : opt.features) manifest.inputs.push_back(path);
  manifest.inputs.push_back(opt.labels_path);
  for (const auto& path : opt.dev_features) manifest.inputs.push_back(path);
  manifest.inputs.push_back(opt.dev_labels_path);
  manifest.outputs = {opt.out_path};
  manifest.config = train_config_to_json(opt.config);
  manifest.config["features"] = detail::path_list(opt.features);
  manifest.config["labels"] = opt.labels_path;
  manifest.config["dev_features"] = detail::path_list(opt.dev_features);
  manifest.config["dev_labels"] = opt.dev_labels_path;
  manifest.config["preset"] = opt.preset;
  manifest.config["out"] = opt.out_path;
  write_manifest(manifest, opt.manifest_path.empty()
                               ? default_manifest_path(opt.out_path)
                               : std::filesystem::path(opt.manifest_path));
  return 0;
}

// --- predict -----------------------------------------------------------------

struct PredictOptions {
  std::string model_path;
  std::vector<std::string> features;
  std::string out_path;
  std::string manifest_path;
};

inline int run_predict(const PredictOptions& opt) {
  const LinearHeadModel model = load_model(opt.model_path);
  if (opt.features.size() != model.stream_dims.size()) {
    throw DimensionMismatch("model expects " +
                            std::to_string(model.stream_dims.size()) +
                            " feature stream(s), got " +
                            std::to_string(opt.features.size()));
  }
  auto samples = detail::assemble_samples(
      detail::load_streams(opt.features), opt.features);
  const auto posteriors = predict(model, samples);
  write_predictions_csv(detail::posterior_predictions(posteriors),
                        opt.out_path);

  RunManifest manifest;
  manifest.subcommand = "predict";
  manifest.inputs.push_back(opt.model_path);
  for (const auto& path : opt.features) manifest.inputs.push_back(path);
  manifest.outputs = {opt.out_path};
  manifest.config = nlohmann::json{
      {"model", opt.model_path},
      {"features", detail::path_list(opt.features)},
      {"out", opt.out_path},
  };
  write_manifest(manifest, opt.manifest_path.empty()
                               ? default_manifest_path(opt.out_path)
                               : std::filesystem::path(opt.manifest_path));
  return 0;
}

// --- fuse-train ---------------------------------------------------------------

struct FuseTrainOptions {
  std::vector<std::string> inputs;
  std::string labels_path;
  SvmConfig config;
  std::string out_path;
  std::string manifest_path;
};

inline int run_fuse_train(const FuseTrainOptions& opt) {
  std::vector<std::vector<Prediction>> per_system;
  per_system.reserve(opt.inputs.size());
  for (const auto& path : opt.inputs) {
    per_system.push_back(read_predictions_csv(path));
  }
  const auto dataset =
      build_fusion_vectors(per_system, opt.inputs);
  const auto labels = detail::labels_to_map(read_labels_csv(opt.labels_path));
  const SvmFusionModel model = train_svm(dataset, labels, opt.config);
  save_svm(model, opt.out_path);

  RunManifest manifest;
  manifest.subcommand = "fuse-train";
  manifest.seed = opt.config.seed;
  for (const auto& path : opt.inputs) manifest.inputs.push_back(path);
  manifest.inputs.push_back(opt.labels_path);
  manifest.outputs = {opt.out_path};
  manifest.config = nlohmann::json{
      {"inputs", detail::path_list(opt.inputs)},
      {"labels", opt.labels_path},
      {"c", opt.config.c},
      {"iterations", opt.config.iterations},
      {"seed", opt.config.seed},
      {"out", opt.out_path},
  };
  write_manifest(manifest, opt.manifest_path.empty()
                               ? default_manifest_path(opt.out_path)
                               : std::filesystem::path(opt.manifest_path));
  return 0;
}

// --- fuse-predict --------------------------------------------------------------

struct FusePredictOptions {
  std::string model_path;
  std::vector<std::string> inputs;
  std::string out_path;
  std::string manifest_path;
};

inline int run_fuse_predict(const FusePredictOptions& opt) {
  const SvmFusionModel model = load_svm(opt.model_path);
  if (opt.inputs.size() != model.sources.size()) {
    throw DimensionMismatch("model fuses " +
                            std::to_string(model.sources.size()) +
                            " sub-systems, got " +
                            std::to_string(opt.inputs.size()) + " inputs");
  }
  std::vector<std::vector<Prediction>> per_system;
  per_system.reserve(opt.inputs.size());
  for (const auto& path : opt.inputs) {
    per_system.push_back(read_predictions_csv(path));
  }
  const auto dataset = build_fusion_vectors(per_system, opt.inputs);
  const auto predictions = svm_predict(model, dataset.vectors);

  // The predictions CSV carries probabilities; squash the decision scores
  // through a softmax (argmax is preserved, the pred column comes from
  // the raw-score argmax).
  std::vector<Prediction> rows;
  rows.reserve(predictions.size());
  for (const auto& pred : predictions) {
    Prediction row;
    row.sample_id = pred.sample_id;
    const auto probs = softmax(pred.scores);
    std::copy(probs.begin(), probs.end(), row.probs.begin());
    row.predicted = pred.label;
    rows.push_back(std::move(row));
  }
  write_predictions_csv(rows, opt.out_path);

  RunManifest manifest;
  manifest.subcommand = "fuse-predict";
  manifest.inputs.push_back(opt.model_path);
  for (const auto& path : opt.inputs) manifest.inputs.push_back(path);
  manifest.outputs = {opt.out_path};
  manifest.config = nlohmann::json{
      {"model", opt.model_path},
      {"inputs", detail::path_list(opt.inputs)},
      {"out", opt.out_path},
  };
  write_manifest(manifest, opt.manifest_path.empty()
                               ? default_manifest_path(opt.out_path)
                               : std::filesystem::path(opt.manifest_path));
  return 0;
}

// --- eval ----------------------------------------------------------------------

struct EvalOptions {
  std::string pred_path;
  std::string ref_path;
  std::string format = "text";
  std::string out_path;        // optional; stdout when empty
  std::string confusion_path;  // optional
  std::string manifest_path;   // optional
};

inline int run_eval(const EvalOptions& opt, std::ostream& out) {
  const auto predictions = read_predictions_csv(opt.pred_path);
  const auto ref_rows = read_labels_csv(opt.ref_path);

  std::map<std::string, Emotion> pred_map;
  for (const auto& pred : predictions) {
    pred_map.emplace(pred.sample_id, pred.predicted);
  }
  std::map<std::string, Emotion> ref_map;
  for (const auto& row : ref_rows) {
    if (row.label == Emotion::NoConsensus) {
      throw LabelX("reference \"" + opt.ref_path + "\" labels sample \"" +
                   row.sample_id + "\" as X");
    }
    ref_map.emplace(row.sample_id, row.label);
  }
  for (const auto& [sample_id, label] : ref_map) {
    if (!pred_map.count(sample_id)) {
      throw SampleMismatch("sample \"" + sample_id + "\" is in \"" +
                           opt.ref_path + "\" but not in \"" + opt.pred_path +
                           "\"");
    }
  }
  for (const auto& [sample_id, label] : pred_map) {
    if (!ref_map.count(sample_id)) {
      throw SampleMismatch("sample \"" + sample_id + "\" is in \"" +
                           opt.pred_path + "\" but not in \"" + opt.ref_path +
                           "\"");
    }
  }

  std::vector<Emotion> refs;
  std::vector<Emotion> preds;
  refs.reserve(ref_map.size());
  preds.reserve(ref_map.size());
  for (const auto& [sample_id, label] : ref_map) {
    refs.push_back(label);
    preds.push_back(pred_map.at(sample_id));
  }
  const auto cm = confusion_matrix(refs, preds);
  const auto report = score_report(cm);
  const ReportFormat format = opt.format == "csv" ? ReportFormat::csv
                                                  : ReportFormat::text;
  const std::string document = render_report(report, cm, format);
  if (opt.out_path.empty()) {
    out << document;
  } else {
    detail::write_text_file(opt.out_path, document);
  }
  if (!opt.confusion_path.empty()) {
    detail::write_text_file(opt.confusion_path, render_confusion_csv(cm));
  }

  const bool wants_manifest = !opt.out_path.empty() ||
                              !opt.confusion_path.empty() ||
                              !opt.manifest_path.empty();
  if (wants_manifest) {
    RunManifest manifest;
    manifest.subcommand = "eval";
    manifest.inputs = {opt.pred_path, opt.ref_path};
    if (!opt.out_path.empty()) manifest.outputs.push_back(opt.out_path);
    if (!opt.confusion_path.empty()) {
      manifest.outputs.push_back(opt.confusion_path);
    }
    manifest.config = nlohmann::json{
        {"pred", opt.pred_path},
        {"ref", opt.ref_path},
        {"format", opt.format},
        {"out", opt.out_path},
        {"confusion", opt.confusion_path},
    };
    std::filesystem::path manifest_path;
    if (!opt.manifest_path.empty()) {
      manifest_path = opt.manifest_path;
    } else if (!opt.out_path.empty()) {
      manifest_path = default_manifest_path(opt.out_path);
    } else {
      manifest_path = default_manifest_path(opt.confusion_path);
    }
    write_manifest(manifest, manifest_path);
  }
  return 0;
}

// --- argument wiring -------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"speech-emotion ensemble toolkit: consensus relabeling, "
               "linear-head training over pooled features, SVM score fusion "
               "and Macro-F1 scoring"};
  app.name("serfuse");
  app.set_version_flag("--version", std::string("serfuse ") + kVersion);
  app.require_subcommand(1);

  // synth
  SynthOptions synth;
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")
      ->required();
  synth_cmd->add_option("--per-class", synth.spec.per_class_train,
                        "train samples per class");
  synth_cmd->add_option("--per-class-dev", synth.spec.per_class_dev,
                        "dev samples per class");
  synth_cmd->add_option("--per-class-test", synth.spec.per_class_test,
                        "test samples per class");
  synth_cmd->add_option("--dim", synth.spec.feature_dim, "feature dimension");
  synth_cmd->add_option("--streams", synth.spec.streams, "encoder streams");
  synth_cmd->add_option("--t-min", synth.spec.t_min, "min frames per sample");
  synth_cmd->add_option("--t-max", synth.spec.t_max, "max frames per sample");
  synth_cmd->add_option("--separation", synth.spec.separation,
                        "class-cluster separation scale");
  synth_cmd->add_option("--annotators", synth.spec.annotators,
                        "annotators per sample");
  synth_cmd->add_option("--error-rate", synth.spec.annotator_error,
                        "annotator error rate");
  synth_cmd->add_option("--error-spread", synth.spec.annotator_error_spread,
                        "per-annotator error-rate spread (0 = uniform pool)");
  synth_cmd->add_option("--seed", synth.spec.seed, "random seed")
      ->envname("SERFUSE_SEED");
  synth_cmd->add_option("--manifest", synth.manifest_path,
                        "manifest location override");

  // consensus
  ConsensusOptions consensus;
  auto* consensus_cmd = app.add_subcommand(
      "consensus", "recompute consensus labels from annotator votes");
  consensus_cmd
      ->add_option("--annotations", consensus.annotations_path,
                   "annotations CSV")
      ->required();
  consensus_cmd
      ->add_option("--original", consensus.original_path,
                   "original consensus labels CSV (may contain X)")
      ->required();
  consensus_cmd->add_option("--threshold", consensus.threshold,
                            "evaluator score threshold in [0,1]");
  consensus_cmd->add_flag("--neutral-drop,!--no-neutral-drop",
                          consensus.neutral_drop,
                          "drop Neutral on two-way ties with it");
  consensus_cmd->add_option("--out", consensus.out_path, "output CSV")
      ->required();
  consensus_cmd->add_option("--report", consensus.report_path, "report txt")
      ->required();
  consensus_cmd->add_option("--augmented-out", consensus.augmented_out_path,
                            "training-ready augmented labels CSV");
  consensus_cmd->add_option("--manifest", consensus.manifest_path,
                            "manifest location override");

  // train
  TrainOptions train_opt;
  std::string train_loss = "nll";
  std::string train_pooling = "mean";
  std::string train_newbob = "on";
  std::string features2;
  std::string dev_features2;
  bool alpha_given = false;
  bool beta_given = false;
  auto* train_cmd =
      app.add_subcommand("train", "train a linear head on pooled features");
  train_cmd
      ->add_option("--features", train_opt.features,
                   "feature container per stream (repeatable)")
      ->required();
  train_cmd->add_option("--features2", features2,
                        "second feature stream (alias)");
  train_cmd->add_option("--labels", train_opt.labels_path, "labels CSV")
      ->required();
  train_cmd
      ->add_option("--dev-features", train_opt.dev_features,
                   "dev feature container per stream (repeatable)")
      ->required();
  train_cmd->add_option("--dev-features2", dev_features2,
                        "second dev feature stream (alias)");
  train_cmd
      ->add_option("--dev-labels", train_opt.dev_labels_path, "dev labels CSV")
      ->required();
  train_cmd->add_option("--preset", train_opt.preset,
                        "sub-system preset A..E (loss/pooling defaults)")
      ->check(CLI::IsMember({"A", "B", "C", "D", "E"}));
  train_cmd->add_option("--loss", train_loss, "nll or jeffreys")
      ->check(CLI::IsMember({"nll", "jeffreys"}));
  auto* alpha_opt = train_cmd->add_option("--alpha", train_opt.config.jeffreys.alpha,
                                          "Jeffreys alpha (>= 0)");
  auto* beta_opt = train_cmd->add_option("--beta", train_opt.config.jeffreys.beta,
                                         "Jeffreys beta (>= 0)");
  train_cmd->add_option("--epsilon", train_opt.config.jeffreys.epsilon,
                        "probability floor");
  train_cmd->add_option("--pooling", train_pooling, "mean or attention")
      ->check(CLI::IsMember({"mean", "attention"}));
  train_cmd->add_option("--batch-size", train_opt.config.batch_size,
                        "mini-batch size");
  train_cmd->add_option("--epochs", train_opt.config.max_epochs,
                        "maximum epochs");
  train_cmd->add_option("--lr-head", train_opt.config.learning_rate_head,
                        "classifier learning rate");
  train_cmd->add_option("--lr-pooling",
                        train_opt.config.learning_rate_pooling,
                        "attention-pooling learning rate");
  train_cmd->add_option("--newbob", train_newbob, "on or off")
      ->check(CLI::IsMember({"on", "off"}));
  train_cmd->add_option("--newbob-threshold",
                        train_opt.config.newbob.improvement_threshold,
                        "relative improvement threshold");
  train_cmd->add_option("--newbob-factor",
                        train_opt.config.newbob.anneal_factor,
                        "anneal factor in (0,1)");
  train_cmd->add_option("--newbob-patience", train_opt.config.newbob.patience,
                        "consecutive anneals before early stop");
  train_cmd->add_option("--seed", train_opt.config.seed, "random seed")
      ->envname("SERFUSE_SEED");
  train_cmd->add_option("--out", train_opt.out_path, "model JSON output")
      ->required();
  train_cmd->add_option("--manifest", train_opt.manifest_path,
                        "manifest location override");

  // predict
  PredictOptions predict_opt;
  std::string predict_features2;
  auto* predict_cmd =
      app.add_subcommand("predict", "emit posteriors for a feature set");
  predict_cmd->add_option("--model", predict_opt.model_path, "model JSON")
      ->required();
  predict_cmd
      ->add_option("--features", predict_opt.features,
                   "feature container per stream (repeatable)")
      ->required();
  predict_cmd->add_option("--features2", predict_features2,
                          "second feature stream (alias)");
  predict_cmd->add_option("--out", predict_opt.out_path, "predictions CSV")
      ->required();
  predict_cmd->add_option("--manifest", predict_opt.manifest_path,
                          "manifest location override");

  // fuse-train
  FuseTrainOptions fuse_train;
  auto* fuse_train_cmd = app.add_subcommand(
      "fuse-train", "train the SVM over concatenated sub-system posteriors");
  fuse_train_cmd
      ->add_option("--inputs", fuse_train.inputs,
                   "comma-separated prediction CSVs, in fusion order")
      ->required()
      ->delimiter(',');
  fuse_train_cmd
      ->add_option("--labels", fuse_train.labels_path, "labels CSV")
      ->required();
  fuse_train_cmd->add_option("--c", fuse_train.config.c,
                             "SVM C (inverse regularization)");
  fuse_train_cmd->add_option("--iterations", fuse_train.config.iterations,
                             "subgradient iterations");
  fuse_train_cmd->add_option("--seed", fuse_train.config.seed, "random seed")
      ->envname("SERFUSE_SEED");
  fuse_train_cmd->add_option("--out", fuse_train.out_path, "SVM JSON output")
      ->required();
  fuse_train_cmd->add_option("--manifest", fuse_train.manifest_path,
                             "manifest location override");

  // fuse-predict
  FusePredictOptions fuse_predict;
  auto* fuse_predict_cmd = app.add_subcommand(
      "fuse-predict", "classify concatenated sub-system posteriors");
  fuse_predict_cmd->add_option("--model", fuse_predict.model_path, "SVM JSON")
      ->required();
  fuse_predict_cmd
      ->add_option("--inputs", fuse_predict.inputs,
                   "comma-separated prediction CSVs, in fusion order")
      ->required()
      ->delimiter(',');
  fuse_predict_cmd
      ->add_option("--out", fuse_predict.out_path, "fused predictions CSV")
      ->required();
  fuse_predict_cmd->add_option("--manifest", fuse_predict.manifest_path,
                               "manifest location override");

  // eval
  EvalOptions eval_opt;
  auto* eval_cmd =
      app.add_subcommand("eval", "score predictions against references");
  eval_cmd->add_option("--pred", eval_opt.pred_path, "predictions CSV")
      ->required();
  eval_cmd->add_option("--ref", eval_opt.ref_path, "reference labels CSV")
      ->required();
  eval_cmd->add_option("--format", eval_opt.format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}));
  eval_cmd->add_option("--out", eval_opt.out_path,
                       "report file (stdout when omitted)");
  eval_cmd->add_option("--confusion", eval_opt.confusion_path,
                       "row-normalized confusion CSV");
  eval_cmd->add_option("--manifest", eval_opt.manifest_path,
                       "manifest location override");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << app.version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    if (app.get_subcommands().empty()) err << app.help();
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (consensus_cmd->parsed()) return run_consensus(consensus);
    if (train_cmd->parsed()) {
      if (!features2.empty()) train_opt.features.push_back(features2);
      if (!dev_features2.empty()) {
        train_opt.dev_features.push_back(dev_features2);
      }
      alpha_given = alpha_opt->count() > 0;
      beta_given = beta_opt->count() > 0;
      if (!train_opt.preset.empty()) {
        // Presets mirror the five sub-system configurations; explicit
        // flags win over preset defaults.
        const char preset = train_opt.preset[0];
        if (train_cmd->count("--loss") == 0) {
          train_loss = preset == 'B' ? "jeffreys" : "nll";
        }
        if (train_cmd->count("--pooling") == 0) {
          train_pooling = (preset == 'D' || preset == 'E') ? "attention"
                                                           : "mean";
        }
        if ((preset == 'C' || preset == 'D' || preset == 'E') &&
            train_opt.features.size() < 2) {
          throw UsageError("--preset " + train_opt.preset +
                           " expects at least two --features streams");
        }
      }
      train_opt.config.loss = parse_loss_kind(train_loss);
      train_opt.config.pooling = parse_pooling_kind(train_pooling);
      train_opt.config.newbob.enabled = train_newbob == "on";
      if (train_opt.config.loss == LossKind::jeffreys &&
          (!alpha_given || !beta_given)) {
        throw UsageError(
            "--loss jeffreys requires explicit --alpha and --beta");
      }
      if (train_opt.dev_features.size() != train_opt.features.size()) {
        throw UsageError("--dev-features must list one container per "
                         "--features stream");
      }
      return run_train(train_opt, out, err);
    }
    if (predict_cmd->parsed()) {
      if (!predict_features2.empty()) {
        predict_opt.features.push_back(predict_features2);
      }
      return run_predict(predict_opt);
    }
    if (fuse_train_cmd->parsed()) return run_fuse_train(fuse_train);
    if (fuse_predict_cmd->parsed()) return run_fuse_predict(fuse_predict);
    if (eval_cmd->parsed()) return run_eval(eval_opt, out);
    err << "usage error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace serfuse::cli

#endif  // SERFUSE_CLI_HPP_
