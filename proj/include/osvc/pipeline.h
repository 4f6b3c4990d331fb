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

#ifndef OSVC_PIPELINE_H_
#define OSVC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "osvc/content.h"
#include "osvc/corpus.h"
#include "osvc/evaluation.h"
#include "osvc/model.h"
#include "osvc/training.h"

namespace osvc {

// Everything a run needs. Relative paths are resolved against the directory
// of the config file by RunConfig::Load.
// Stage tags mixed into the run seed: Mix(seed, stage).
enum Stage : uint64_t {
  kStageModelInit = 1,
  kStagePhase1 = 2,
  kStagePhase2 = 3,
  kStagePhase3 = 4,
};

struct RunConfig {
  std::filesystem::path corpus_dir = "corpus";
  std::filesystem::path features_dir = "features";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path report_dir = "reports";
  uint64_t seed = 1;

  corpus::CorpusConfig corpus;
  ContentProviderConfig content;
  ToyEncoderConfig toy_encoder;
  // Widths only; num_speakers is filled in from the corpus at training time.
  ModelConfig model = ModelConfig::Desk(6, 64);
  PhaseConfig phase1 = PhaseConfig::Defaults(1);
  PhaseConfig phase2 = PhaseConfig::Defaults(2);
  PhaseConfig phase3 = PhaseConfig::Defaults(3);

  void Validate() const;
  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& j,
                            const std::filesystem::path& base_dir = {});
  static RunConfig Load(const std::filesystem::path& path);
  // SHA-256 of the canonical JSON dump.
  std::string Hash() const;

  std::filesystem::path ManifestPath() const {
    return corpus_dir / "manifest.jsonl";
  }
  std::filesystem::path EncoderDir() const {
    return content.checkpoint.empty()
               ? checkpoint_dir / "encoder"
               : std::filesystem::path(content.checkpoint);
  }
  std::filesystem::path PhaseDir(int phase) const {
    return checkpoint_dir / ("phase" + std::to_string(phase));
  }
};

// Default toy-scale settings: D = 64 content features and 32-frame crops.
RunConfig DeskRunConfig();

// Labelled mels for the toy encoder; rows with split "train" go to `train`,
// the rest to `heldout`. Rows whose audio cannot be decoded are skipped and
// their ids appended to `skipped` (when given). Throws InvalidArgument on an
// empty manifest or a row without segment labels.
void LoadLabeledMels(const corpus::Manifest& manifest,
                     std::vector<LabeledMel>* train,
                     std::vector<LabeledMel>* heldout,
                     std::vector<std::string>* skipped = nullptr);

// Trains a toy encoder of width `config.dim` on the manifest.
ToyEncoder TrainToyEncoderOnManifest(const corpus::Manifest& manifest,
                                     const ToyEncoderConfig& config,
                                     ToyTrainReport* report = nullptr);

struct FeatureFiles {
  std::filesystem::path mel;
  std::filesystem::path prosody;
  std::filesystem::path content;
};
FeatureFiles FeaturePathsFor(const std::filesystem::path& features_dir,
                             const std::string& utt_id);

struct FeatureReport {
  std::vector<std::string> written;  // utterance ids whose files were rebuilt
  std::vector<std::string> skipped;  // already up to date
  std::vector<std::string> failed;   // "utt_id: reason"

  int completed() const {
    return static_cast<int>(written.size() + skipped.size());
  }
};

// Writes mel, prosody and content tensors for every manifest row. A row is
// skipped when features_dir/index.json records the same audio hash and
// content-provider key and all three files still hash to the recorded
// values. Undecodable audio is reported in `failed`; other rows proceed.
// `encoder` is required for the toy_encoder provider and ignored otherwise.
FeatureReport ExtractFeatures(const corpus::Manifest& manifest,
                              const std::filesystem::path& features_dir,
                              const ContentProviderConfig& provider,
                              const ToyEncoder* encoder);

// Reads the feature files of every manifest row. Throws DataError when a
// file is missing or malformed.
Dataset LoadDataset(const corpus::Manifest& manifest,
                    const std::filesystem::path& features_dir, int content_dim);

// Conversion pairs: each source speaker converts each test item towards the
// held-out target, which is adapted on one of its own items.
struct EvalPlan {
  std::vector<int> source_speakers = {0, 1, 2};
  std::vector<int> items = {7, 8, 9};
  int target_speaker = -1;  // -1: first held-out speaker
  int adapt_item = 0;
  std::vector<int> sweep_items = {0, 1, 2, 3, 4, 5, 6};

  int ResolveTarget(const corpus::Manifest& manifest) const;
};

// Source audio, content and ground truth for every pair of the plan. Ground
// truth is the target speaker's rendition of the same item.
std::vector<EvalPair> BuildEvalPairs(const corpus::Manifest& manifest,
                                     const Dataset& data, const EvalPlan& plan);

// Target-speaker audio made of the plan's sweep items back to back.
AudioClip ConcatenateTargetAudio(const corpus::Manifest& manifest,
                                 const EvalPlan& plan);

}  // namespace osvc

#endif  // OSVC_PIPELINE_H_
