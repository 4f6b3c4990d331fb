// Copyright (c) 2026 The osvc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "osvc/pipeline.h"

#include <gtest/gtest.h>

#include <fstream>

#include "osvc/errors.h"
#include "osvc/tensor_file.h"
#include "osvc/wav_io.h"
#include "test_util.h"

namespace osvc {
namespace {

namespace fs = std::filesystem;

TEST(RunConfigTest, DefaultsValidateAndRoundTrip) {
  const RunConfig c = DeskRunConfig();
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.content.dim, 64);
  EXPECT_EQ(c.phase3.steps, 500);
  const RunConfig back = RunConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.Hash(), c.Hash());
  EXPECT_EQ(c.Hash().size(), 64u);
}

TEST(RunConfigTest, RelativePathsFollowConfigFile) {
  const fs::path dir = osvc::testing::TempDir("runcfg");
  std::ofstream(dir / "cfg.json")
      << R"({"corpus_dir": "c", "report_dir": "/abs/r", "seed": 9,
             "phase3": {"steps": 7}})";
  const RunConfig c = RunConfig::Load(dir / "cfg.json");
  EXPECT_EQ(c.corpus_dir, dir / "c");
  EXPECT_EQ(c.report_dir, fs::path("/abs/r"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.phase3.steps, 7);
  EXPECT_EQ(c.phase3.lr, DeskRunConfig().phase3.lr);
  EXPECT_EQ(c.ManifestPath(), dir / "c" / "manifest.jsonl");
  EXPECT_EQ(c.PhaseDir(2), c.checkpoint_dir / "phase2");
}

TEST(RunConfigTest, PresetsAndDims) {
  const RunConfig paper =
      RunConfig::FromJson({{"content", {{"kind", "toy_encoder"}, {"dim", 256}}},
                           {"model", {{"preset", "paper"}}}});
  EXPECT_EQ(paper.model.content_dim, 256);
  EXPECT_EQ(paper.toy_encoder.dim, 256);
  EXPECT_THROW(RunConfig::FromJson({{"model", {{"preset", "huge"}}}}),
               InvalidArgument);
  EXPECT_THROW(
      RunConfig::FromJson({{"content", {{"kind", "file"}, {"dim", 64}}}}),
      InvalidArgument);
  EXPECT_THROW(RunConfig::FromJson(nlohmann::json::array()), InvalidArgument);
  EXPECT_THROW(RunConfig::Load("/nonexistent/cfg.json"), InvalidArgument);
}

TEST(RunConfigTest, HashTracksContent) {
  RunConfig a = DeskRunConfig();
  RunConfig b = a;
  b.phase2.epochs += 1;
  EXPECT_NE(a.Hash(), b.Hash());
}

class FeaturePipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(osvc::testing::TempDir("pipeline"));
    corpus::CorpusConfig cc;
    cc.n_speakers = 4;
    cc.utterances_per_speaker = 4;
    cc.test_per_speaker = 1;
    manifest_ = new corpus::Manifest(corpus::BuildCorpus(cc, *dir_ / "corpus"));
    ToyEncoderConfig ec;
    ec.dim = 16;
    ec.epochs = 2;
    ec.conv_channels = 16;
    ec.gru_hidden = 16;
    encoder_ = new ToyEncoder(TrainToyEncoderOnManifest(*manifest_, ec));
    provider_.kind = "toy_encoder";
    provider_.dim = 16;
  }
  static void TearDownTestSuite() {
    delete encoder_;
    delete manifest_;
    delete dir_;
  }

  static fs::path* dir_;
  static corpus::Manifest* manifest_;
  static ToyEncoder* encoder_;
  static ContentProviderConfig provider_;
};
fs::path* FeaturePipelineTest::dir_ = nullptr;
corpus::Manifest* FeaturePipelineTest::manifest_ = nullptr;
ToyEncoder* FeaturePipelineTest::encoder_ = nullptr;
ContentProviderConfig FeaturePipelineTest::provider_;

TEST_F(FeaturePipelineTest, ExtractIsIdempotent) {
  const fs::path out = *dir_ / "feat_idem";
  const FeatureReport first =
      ExtractFeatures(*manifest_, out, provider_, encoder_);
  EXPECT_EQ(first.written.size(), manifest_->records.size());
  EXPECT_TRUE(first.failed.empty());
  const FeatureReport second =
      ExtractFeatures(*manifest_, out, provider_, encoder_);
  EXPECT_TRUE(second.written.empty());
  EXPECT_EQ(second.skipped.size(), manifest_->records.size());

  // A deleted artifact is rebuilt and nothing else.
  const std::string id = manifest_->records[2].utt_id;
  fs::remove(FeaturePathsFor(out, id).content);
  const FeatureReport third =
      ExtractFeatures(*manifest_, out, provider_, encoder_);
  ASSERT_EQ(third.written.size(), 1u);
  EXPECT_EQ(third.written[0], id);
}

TEST_F(FeaturePipelineTest, CorruptAudioIsReportedNotFatal) {
  const fs::path corpus_copy = *dir_ / "corpus_bad";
  fs::remove_all(corpus_copy);
  fs::copy(manifest_->root, corpus_copy, fs::copy_options::recursive);
  corpus::Manifest m = corpus::Manifest::Load(corpus_copy / "manifest.jsonl");
  std::ofstream(m.AudioPath(m.records[1]), std::ios::trunc) << "garbage";
  const FeatureReport r =
      ExtractFeatures(m, *dir_ / "feat_bad", provider_, encoder_);
  ASSERT_EQ(r.failed.size(), 1u);
  EXPECT_NE(r.failed[0].find(m.records[1].utt_id), std::string::npos);
  EXPECT_EQ(r.completed(), static_cast<int>(m.records.size()) - 1);
}

TEST_F(FeaturePipelineTest, LoadDatasetAlignsStreams) {
  const fs::path out = *dir_ / "feat_load";
  ExtractFeatures(*manifest_, out, provider_, encoder_);
  const Dataset d = LoadDataset(*manifest_, out, 16);
  ASSERT_EQ(d.utterances.size(), manifest_->records.size());
  for (const UtteranceData& u : d.utterances) {
    EXPECT_EQ(u.prosody.rows(), u.mel.rows());
    EXPECT_EQ(u.bn.rows(), u.mel.rows());
    EXPECT_EQ(u.bn.cols(), 16);
  }
  EXPECT_EQ(d.TrainSpeakers().size(), 3u);
  EXPECT_THROW(LoadDataset(*manifest_, out, 32), InvalidArgument);
}

TEST_F(FeaturePipelineTest, FileProviderReadsDirectory) {
  const fs::path bn_dir = *dir_ / "bn";
  fs::create_directories(bn_dir);
  for (const auto& r : manifest_->records) {
    const Matrix mel = dsp::ComputeMel(ReadWav(manifest_->AudioPath(r)));
    WriteTensorFile(bn_dir / (r.utt_id + ".tensor"),
                    MatrixRecord("content", Matrix::Ones(mel.rows(), 8)));
  }
  fs::remove(bn_dir / (manifest_->records[0].utt_id + ".tensor"));
  ContentProviderConfig file;
  file.kind = "file";
  file.dim = 8;
  file.directory = bn_dir.string();
  const FeatureReport r =
      ExtractFeatures(*manifest_, *dir_ / "feat_file", file, nullptr);
  EXPECT_EQ(r.failed.size(), 1u);
  EXPECT_EQ(r.written.size(), manifest_->records.size() - 1);
}

TEST_F(FeaturePipelineTest, EvalPairsUseParallelGroundTruth) {
  const fs::path out = *dir_ / "feat_pairs";
  ExtractFeatures(*manifest_, out, provider_, encoder_);
  const Dataset d = LoadDataset(*manifest_, out, 16);
  EvalPlan plan;
  plan.source_speakers = {0, 1};
  plan.items = {3};
  plan.sweep_items = {0, 1};
  EXPECT_EQ(plan.ResolveTarget(*manifest_), 3);
  const std::vector<EvalPair> pairs = BuildEvalPairs(*manifest_, d, plan);
  ASSERT_EQ(pairs.size(), 2u);
  const UtteranceData* truth = d.Find(3, 3);
  ASSERT_NE(truth, nullptr);
  EXPECT_EQ(pairs[0].ground_truth, truth->mel);
  EXPECT_EQ(pairs[1].source_bn, d.Find(1, 3)->bn);

  const AudioClip cat = ConcatenateTargetAudio(*manifest_, plan);
  const size_t expected =
      ReadWav(manifest_->AudioPath(*manifest_->Find(3, 0))).samples.size() +
      ReadWav(manifest_->AudioPath(*manifest_->Find(3, 1))).samples.size();
  EXPECT_EQ(cat.samples.size(), expected);
}

}  // namespace
}  // namespace osvc
