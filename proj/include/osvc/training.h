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

#ifndef OSVC_TRAINING_H_
#define OSVC_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "osvc/content.h"
#include "osvc/model.h"
#include "osvc/nn/parameters.h"
#include "osvc/types.h"

namespace osvc {

// Features of one utterance, all frame-aligned.
struct UtteranceData {
  std::string utt_id;
  std::string speaker;
  int speaker_index = 0;
  int item = 0;
  std::string split;   // train | test | heldout
  MelSpectrogram mel;  // frames x 80
  Matrix prosody;      // frames x 3 raw (lf0, vuv, energy)
  ContentFeatures bn;  // frames x D

  int num_frames() const { return static_cast<int>(mel.rows()); }
};

struct Dataset {
  std::vector<UtteranceData> utterances;

  const UtteranceData* Find(int speaker_index, int item) const;
  // Sorted speaker indices that own at least one "train" utterance.
  std::vector<int> TrainSpeakers() const;
};

struct PhaseConfig {
  int phase = 2;
  int epochs = 120;  // phases 1 and 2
  int finetune_epochs =
      0;             // phase 1: extra epochs on the normalisation speaker
  int steps = 2000;  // phase 3
  int batch_size = 16;
  double lr = 0.001;
  int decay_interval = 20;  // epochs (phases 1, 2) or steps (phase 3)
  double decay_rate = 0.7;
  double gamma = 1.0;          // phase 3 weight-regularisation strength
  int crop_frames = 32;        // training window length
  int ref_frames = 128;        // speaker-reference window length
  bool train_content = false;  // phase 2: co-train the content module
  // Phase 3 parameter-name prefixes; empty means AdaptablePrefixes().
  std::vector<std::string> adaptable;

  void Validate() const;
  nlohmann::json ToJson() const;
  static PhaseConfig FromJson(const nlohmann::json& j, int phase);
  static PhaseConfig Defaults(int phase);
};

// initial * rate^floor(t / interval).
double LrSchedule(const PhaseConfig& phase, int t);

// mean|pre - target| + mean|post - target|.
double LossRecons(const Matrix& mel_pre, const Matrix& mel_post,
                  const Matrix& target);
// -log softmax(logits)[label].
double LossCe(const RowVector& logits, int label);

// Frozen copy of the adaptable tensors taken before adaptation.
class ParameterSnapshot {
 public:
  const std::map<std::string, Matrix>& tensors() const { return tensors_; }
  const std::vector<std::string>& prefixes() const { return prefixes_; }
  std::vector<std::string> Names() const;
  std::string Checksum() const;

 private:
  friend ParameterSnapshot SnapshotParams(const nn::ParameterSet&,
                                          const std::vector<std::string>&);
  std::map<std::string, Matrix> tensors_;
  std::vector<std::string> prefixes_;
};

// Deep copy of every parameter matching a prefix. Throws if none match.
ParameterSnapshot SnapshotParams(const nn::ParameterSet& params,
                                 const std::vector<std::string>& prefixes);

// Sum over snapshot tensors of squared differences (no averaging).
double LossWreg(const nn::ParameterSet& params,
                const ParameterSnapshot& snapshot);
// Adds gamma * d(LossWreg)/d(theta) = 2 * gamma * (theta - theta_f).
void AddWregGrad(nn::ParameterSet* params, const ParameterSnapshot& snapshot,
                 double gamma);

// One JSON object per line; a no-op when constructed without a path.
class StepLog {
 public:
  StepLog() = default;
  explicit StepLog(const std::filesystem::path& path);
  void Write(const nlohmann::json& line);
  int64_t lines() const { return lines_; }

 private:
  std::unique_ptr<std::ofstream> out_;
  int64_t lines_ = 0;
};

struct TrainResult {
  std::vector<double> losses;  // per step
  std::vector<double> epoch_losses;
  int64_t steps = 0;
  double final_loss = 0.0;
};

// Content module: content features of every training utterance to the
// normalisation speaker's parallel rendition, then fine-tuning on that
// speaker alone. Only content.* parameters change.
TrainResult Phase1Train(VcModel* model, const Dataset& data,
                        int normalization_speaker, const PhaseConfig& config,
                        uint64_t seed, StepLog* log = nullptr);

struct PairRecord {
  std::string target;
  std::string reference;
};

struct Phase2Result : TrainResult {
  std::vector<double> recons;                  // per step
  std::vector<double> ce;                      // per step
  std::vector<std::vector<PairRecord>> pairs;  // per step
  std::vector<int> speaker_classes;  // classifier index -> speaker index
};

// Speaker, prosody and conversion modules with L_recons + L_ce. The speaker
// reference is a different training utterance of the target's speaker.
Phase2Result Phase2Train(VcModel* model, const Dataset& data,
                         const PhaseConfig& config, uint64_t seed,
                         StepLog* log = nullptr);

struct Phase3Result : TrainResult {
  std::vector<double> recons;
  std::vector<double> wreg;
  std::string snapshot_checksum;
  double final_drift = 0.0;  // ||theta - theta_f||_2 after the last step
};

// One-utterance adaptation with L_recons + gamma * L_wReg; only parameters
// under `prefixes` (default: config.adaptable, then AdaptablePrefixes()) are
// updated.
Phase3Result Phase3Adapt(VcModel* model,
                         const std::vector<const UtteranceData*>& utterances,
                         const PhaseConfig& config, uint64_t seed,
                         StepLog* log = nullptr,
                         const std::vector<std::string>& prefixes = {});

}  // namespace osvc

#endif  // OSVC_TRAINING_H_
