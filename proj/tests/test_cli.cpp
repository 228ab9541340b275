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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "serfuse/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = serfuse::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("serfuse_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void put(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("no arguments is a usage error") {
  const auto res = run_cli({});
  REQUIRE(res.code == 2);
}

TEST_CASE("unknown flags name the offender") {
  const auto res = run_cli({"eval", "--pred", "a.csv", "--ref", "b.csv",
                            "--frobnicate"});
  REQUIRE(res.code == 2);
  REQUIRE(res.err.find("--frobnicate") != std::string::npos);
}

TEST_CASE("version flag prints and succeeds") {
  const auto res = run_cli({"--version"});
  REQUIRE(res.code == 0);
  REQUIRE(res.out.find("serfuse") != std::string::npos);
}

TEST_CASE("missing files are operational errors") {
  const auto res = run_cli({"eval", "--pred", "/nonexistent/p.csv", "--ref",
                            "/nonexistent/r.csv"});
  REQUIRE(res.code == 1);
  REQUIRE(res.err.find("p.csv") != std::string::npos);
}

TEST_CASE("jeffreys loss requires explicit alpha and beta") {
  const auto dir = fresh_dir("jeffreys_flags");
  const auto res = run_cli({"train", "--features", (dir / "x.emf1").string(),
                            "--labels", (dir / "l.csv").string(),
                            "--dev-features", (dir / "x.emf1").string(),
                            "--dev-labels", (dir / "l.csv").string(),
                            "--loss", "jeffreys",
                            "--out", (dir / "m.json").string()});
  REQUIRE(res.code == 2);
  REQUIRE(res.err.find("--alpha") != std::string::npos);
}

TEST_CASE("eval reproduces the worked fixture from files") {
  const auto dir = fresh_dir("eval_fixture");
  put(dir / "ref.csv", "sample_id,label\ns1,A\ns2,A\ns3,N\ns4,N\n");
  put(dir / "pred.csv",
      "sample_id,pA,pC,pD,pF,pH,pN,pS,pU,pred\n"
      "s1,1.000000,0.000000,0.000000,0.000000,0.000000,0.000000,0.000000,"
      "0.000000,A\n"
      "s2,0.000000,0.000000,0.000000,0.000000,0.000000,1.000000,0.000000,"
      "0.000000,N\n"
      "s3,0.000000,0.000000,0.000000,0.000000,0.000000,1.000000,0.000000,"
      "0.000000,N\n"
      "s4,0.000000,0.000000,0.000000,0.000000,0.000000,1.000000,0.000000,"
      "0.000000,N\n");
  const auto res = run_cli({"eval", "--pred", (dir / "pred.csv").string(),
                            "--ref", (dir / "ref.csv").string()});
  REQUIRE(res.code == 0);
  REQUIRE(res.out.find("F1-Macro") != std::string::npos);
  REQUIRE(res.out.find("0.183333") != std::string::npos);
  REQUIRE(res.out.find("Accuracy") != std::string::npos);
  REQUIRE(res.out.find("0.750000") != std::string::npos);
}

TEST_CASE("full pipeline runs end to end at toy scale") {
  const auto dir = fresh_dir("pipeline");
  const auto path = [&](const std::string& name) {
    return (dir / name).string();
  };

  // synth
  auto res = run_cli({"synth", "--out-dir", dir.string(), "--per-class", "6",
                      "--per-class-dev", "4", "--per-class-test", "4",
                      "--dim", "5", "--streams", "2", "--t-min", "2",
                      "--t-max", "4", "--separation", "4.0", "--annotators",
                      "3", "--error-rate", "0.2", "--seed", "9"});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  REQUIRE(fs::exists(dir / "features_train_s1.emf1"));
  REQUIRE(fs::exists(dir / "synth.manifest.json"));

  // consensus
  res = run_cli({"consensus", "--annotations", path("annotations_train.csv"),
                 "--original", path("labels_train.csv"), "--threshold", "0.5",
                 "--out", path("consensus.csv"), "--report",
                 path("consensus_report.txt"), "--augmented-out",
                 path("labels_train_aug.csv")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  REQUIRE(fs::exists(dir / "consensus.csv"));
  REQUIRE(fs::exists(dir / "consensus.csv.manifest.json"));
  {
    std::ifstream in(dir / "consensus.csv");
    std::string header, prev_id, line;
    std::getline(in, header);
    REQUIRE(header == "sample_id,label,source");
    while (std::getline(in, line)) {
      const std::string id = line.substr(0, line.find(','));
      REQUIRE(prev_id < id);  // sorted by sample_id
      prev_id = id;
      REQUIRE((line.ends_with(",original") || line.ends_with(",recomputed")));
    }
  }

  // train two tiny sub-systems (A single-stream, D dual-stream attention)
  res = run_cli({"train", "--preset", "A", "--features",
                 path("features_train_s1.emf1"), "--labels",
                 path("labels_train_known.csv"), "--dev-features",
                 path("features_dev_s1.emf1"), "--dev-labels",
                 path("labels_dev.csv"), "--epochs", "3", "--seed", "1",
                 "--out", path("model_a.json")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);

  res = run_cli({"train", "--preset", "D", "--features",
                 path("features_train_s1.emf1"), "--features2",
                 path("features_train_s2.emf1"), "--labels",
                 path("labels_train_aug.csv"), "--dev-features",
                 path("features_dev_s1.emf1"), "--dev-features2",
                 path("features_dev_s2.emf1"), "--dev-labels",
                 path("labels_dev.csv"), "--epochs", "3", "--seed", "2",
                 "--out", path("model_d.json")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);

  // predict on the test split
  res = run_cli({"predict", "--model", path("model_a.json"), "--features",
                 path("features_test_s1.emf1"), "--out",
                 path("preds_a.csv")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  res = run_cli({"predict", "--model", path("model_d.json"), "--features",
                 path("features_test_s1.emf1"), "--features2",
                 path("features_test_s2.emf1"), "--out", path("preds_d.csv")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);

  // fuse on the test predictions (toy: train the SVM on the same split)
  res = run_cli({"fuse-train", "--inputs",
                 path("preds_a.csv") + "," + path("preds_d.csv"), "--labels",
                 path("labels_test.csv"), "--c", "1.0", "--iterations", "200",
                 "--seed", "3", "--out", path("svm.json")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  res = run_cli({"fuse-predict", "--model", path("svm.json"), "--inputs",
                 path("preds_a.csv") + "," + path("preds_d.csv"), "--out",
                 path("fused.csv")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);

  // eval the fused predictions
  res = run_cli({"eval", "--pred", path("fused.csv"), "--ref",
                 path("labels_test.csv"), "--format", "csv", "--out",
                 path("report.csv")});
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  REQUIRE(fs::exists(dir / "report.csv"));
  REQUIRE(fs::exists(dir / "report.csv.manifest.json"));

  std::ifstream report(dir / "report.csv");
  const std::string report_text((std::istreambuf_iterator<char>(report)),
                                std::istreambuf_iterator<char>());
  REQUIRE(report_text.find("F1-Macro") != std::string::npos);
}

TEST_CASE("stream files must cover the same samples") {
  const auto dir = fresh_dir("stream_sets");
  auto make = [](const std::vector<std::string>& ids) {
    std::vector<serfuse::FeatureSequence> records;
    for (const auto& id : ids) {
      serfuse::FeatureSequence seq;
      seq.sample_id = id;
      seq.rows = 1;
      seq.cols = 2;
      seq.values = {0.25, 0.5};
      records.push_back(std::move(seq));
    }
    return records;
  };
  serfuse::write_feature_container(make({"a", "b"}), dir / "s1.emf1");
  serfuse::write_feature_container(make({"a", "c"}), dir / "s2.emf1");
  serfuse::write_feature_container(make({"a", "a"}), dir / "dup.emf1");
  put(dir / "labels.csv", "sample_id,label\na,A\nb,H\n");

  auto res = run_cli({"train", "--features", (dir / "s1.emf1").string(),
                      "--features", (dir / "s2.emf1").string(), "--labels",
                      (dir / "labels.csv").string(), "--dev-features",
                      (dir / "s1.emf1").string(), "--dev-features",
                      (dir / "s2.emf1").string(), "--dev-labels",
                      (dir / "labels.csv").string(), "--epochs", "1", "--out",
                      (dir / "m.json").string()});
  REQUIRE(res.code == 1);
  REQUIRE(res.err.find("appears in") != std::string::npos);

  res = run_cli({"train", "--features", (dir / "s1.emf1").string(),
                 "--features", (dir / "dup.emf1").string(), "--labels",
                 (dir / "labels.csv").string(), "--dev-features",
                 (dir / "s1.emf1").string(), "--dev-features",
                 (dir / "dup.emf1").string(), "--dev-labels",
                 (dir / "labels.csv").string(), "--epochs", "1", "--out",
                 (dir / "m.json").string()});
  REQUIRE(res.code == 1);
  REQUIRE(res.err.find("duplicate sample") != std::string::npos);
}

TEST_CASE("predict validates the stream count against the model") {
  const auto dir = fresh_dir("stream_count");
  auto res = run_cli({"synth", "--out-dir", dir.string(), "--per-class", "3",
                      "--per-class-dev", "2", "--per-class-test", "2",
                      "--dim", "4", "--streams", "2", "--t-min", "2",
                      "--t-max", "3", "--seed", "4", "--error-rate", "0.0"});
  REQUIRE(res.code == 0);
  res = run_cli({"train", "--features",
                 (dir / "features_train_s1.emf1").string(), "--labels",
                 (dir / "labels_train_known.csv").string(), "--dev-features",
                 (dir / "features_dev_s1.emf1").string(), "--dev-labels",
                 (dir / "labels_dev.csv").string(), "--epochs", "1", "--out",
                 (dir / "m.json").string()});
  REQUIRE(res.code == 0);
  res = run_cli({"predict", "--model", (dir / "m.json").string(),
                 "--features", (dir / "features_test_s1.emf1").string(),
                 "--features2", (dir / "features_test_s2.emf1").string(),
                 "--out", (dir / "p.csv").string()});
  REQUIRE(res.code == 1);
  REQUIRE(res.err.find("stream") != std::string::npos);
}
