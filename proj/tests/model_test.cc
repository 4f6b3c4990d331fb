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

#include "osvc/model.h"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "osvc/errors.h"
#include "osvc/random.h"
#include "test_util.h"

namespace osvc {
namespace {

Matrix RandomMatrix(int rows, int cols, uint64_t seed, double scale = 1.0,
                    double offset = 0.0) {
  std::mt19937_64 rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = offset + scale * Normal(rng);
  }
  return m;
}

dsp::ProsodyFeatures ToyProsody(int frames) {
  dsp::ProsodyFeatures p;
  for (int t = 0; t < frames; ++t) {
    const bool voiced = t % 5 != 0;
    p.vuv.push_back(voiced ? 1.0 : 0.0);
    p.lf0.push_back(voiced ? 5.0 + 0.01 * t : 0.0);
    p.energy.push_back(std::sin(0.3 * t));
  }
  return p;
}

class PaperModelTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = new VcModel(ModelConfig::Paper(4), 3);
  }
  static void TearDownTestSuite() { delete model_; }
  static VcModel* model_;
};
VcModel* PaperModelTest::model_ = nullptr;

TEST_F(PaperModelTest, ContentShapesAndDeterminism) {
  const Matrix bn = RandomMatrix(81, 256, 1);
  const ContentResult a = model_->ContentForward(bn);
  EXPECT_EQ(a.repr.rows(), 81);
  EXPECT_EQ(a.repr.cols(), 256);
  EXPECT_EQ(a.mel.rows(), 81);
  EXPECT_EQ(a.mel.cols(), 80);
  EXPECT_EQ(model_->ContentEncode(bn), a.repr);
  EXPECT_EQ(model_->ContentEncode(bn), model_->ContentEncode(bn));
  EXPECT_THROW(model_->ContentEncode(RandomMatrix(10, 64, 2)), InvalidArgument);
}

TEST_F(PaperModelTest, SpeakerShapes) {
  const SpeakerEmbedding e =
      model_->SpeakerForward(RandomMatrix(150, 80, 3, 2.0, -4.0));
  EXPECT_EQ(e.embedding.size(), 128);
  EXPECT_EQ(e.logits.size(), 4);
  EXPECT_TRUE(e.embedding.allFinite());
  EXPECT_THROW(model_->SpeakerForward(Matrix(0, 80)), InvalidArgument);
}

TEST_F(PaperModelTest, ProsodyPassthroughAndValidation) {
  const Matrix bn = RandomMatrix(60, 256, 4);
  const dsp::ProsodyFeatures p = ToyProsody(60);
  const ProsodyRepr r = model_->ProsodyForward(bn, p);
  EXPECT_EQ(r.explicit_features, p.AsMatrix());
  EXPECT_EQ(r.implicit.size(), 128);
  EXPECT_EQ(model_->ProsodyForward(bn, p).implicit, r.implicit);
  EXPECT_THROW(model_->ProsodyForward(bn, ToyProsody(59)), InvalidArgument);
}

TEST_F(PaperModelTest, ConversionShapes) {
  const Matrix bn = RandomMatrix(81, 256, 5);
  const ConversionResult c = model_->ConversionForward(
      model_->ContentEncode(bn), model_->ProsodyForward(bn, ToyProsody(81)),
      model_->SpeakerForward(RandomMatrix(81, 80, 6, 2.0, -4.0)));
  EXPECT_EQ(c.mel_pre.rows(), 81);
  EXPECT_EQ(c.mel_pre.cols(), 80);
  EXPECT_EQ(c.mel_post.rows(), 81);
  EXPECT_EQ(c.mel_post.cols(), 80);
}

TEST(ModelTest, ZeroPostnetOutputIsIdentity) {
  VcModel model(ModelConfig::Tiny(2), 7);
  model.params().Get("conversion.postnet.out.weight")->value.setZero();
  model.params().Get("conversion.postnet.out.bias")->value.setZero();
  const Matrix bn = RandomMatrix(20, 6, 8);
  const ConversionResult c = model.ConversionForward(
      model.ContentEncode(bn), model.ProsodyForward(bn, ToyProsody(20)),
      model.SpeakerForward(RandomMatrix(20, 80, 9, 2.0, -4.0)));
  EXPECT_EQ(c.mel_post, c.mel_pre);
}

TEST(ModelTest, AdaptablePrefixesAreDisjointAndPopulated) {
  VcModel model(ModelConfig::Desk(6), 1);
  std::set<std::string> seen;
  for (const std::string& prefix : AdaptablePrefixes()) {
    const std::vector<std::string> names = model.params().Matching({prefix});
    EXPECT_FALSE(names.empty()) << prefix;
    for (const std::string& n : names) EXPECT_TRUE(seen.insert(n).second) << n;
  }
  EXPECT_TRUE(model.params().Contains("conversion.cbhg.highway.0.weight"));
  for (const std::string& n : model.params().Names()) {
    const bool known =
        n.rfind(kContentPrefix, 0) == 0 || n.rfind(kSpeakerPrefix, 0) == 0 ||
        n.rfind(kProsodyPrefix, 0) == 0 || n.rfind(kConversionPrefix, 0) == 0;
    EXPECT_TRUE(known) << n;
  }
}

TEST(ModelTest, NoProsodyModuleWithoutProsody) {
  ModelConfig c = ModelConfig::Tiny(2);
  c.use_prosody = false;
  c.Finalize();
  VcModel model(c, 1);
  EXPECT_TRUE(model.params().Matching({kProsodyPrefix}).empty());
  EXPECT_EQ(c.conversion_input_dim(),
            c.content_repr_dim() + c.speaker_encoder.output_dim());
}

TEST(ModelTest, TinyWidthsAreSmall) {
  const ModelConfig c = ModelConfig::Tiny(2);
  EXPECT_LE(c.content_cbhg.gru_hidden, 8);
  EXPECT_LE(c.speaker_encoder.gru_hidden, 8);
  for (int w : c.classifier_widths) EXPECT_LE(w, 8);
  EXPECT_LE(c.conversion_postnet.channels, 8);
}

TEST(ModelTest, ConfigJsonRoundTrip) {
  const ModelConfig c = ModelConfig::Desk(5, 32);
  const ModelConfig back = ModelConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  nlohmann::json bad = c.ToJson();
  bad["decoder_hidden"] = 0;
  EXPECT_THROW(ModelConfig::FromJson(bad), InvalidArgument);
}

TEST(ModelTest, CheckpointRoundTrip) {
  const auto dir = osvc::testing::TempDir("ckpt");
  VcModel model(ModelConfig::Tiny(3), 11);
  model.Save(dir, {{"phase", 2}, {"steps", 5}});
  nlohmann::json prov;
  const VcModel back = VcModel::Load(dir, &prov);
  EXPECT_EQ(back.params().Checksum(), model.params().Checksum());
  EXPECT_EQ(back.config().ToJson(), model.config().ToJson());
  EXPECT_EQ(prov["phase"], 2);
  EXPECT_EQ(ReadCheckpointInfo(dir)["provenance"]["steps"], 5);
  EXPECT_THROW(VcModel::Load(dir / "missing"), InvalidArgument);
}

}  // namespace
}  // namespace osvc
