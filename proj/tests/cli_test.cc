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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "json.hpp"
#include "test_util.h"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;
};

Result Osvc(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "osvc_cli_test.log";
  const std::string cmd =
      std::string(OSVC_BIN) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.output.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

nlohmann::json ReadJson(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

fs::path WriteConfig(const fs::path& dir) {
  nlohmann::json cfg = {
      {"seed", 3},
      {"corpus", {{"min_duration", 1.0}, {"max_duration", 1.2}}},
      {"content", {{"kind", "toy_encoder"}, {"dim", 8}}},
      {"toy_encoder", {{"epochs", 1}, {"conv_channels", 8}, {"gru_hidden", 8}}},
      {"phase1", {{"epochs", 1}, {"finetune_epochs", 0}}},
      {"phase2", {{"epochs", 1}}},
      {"phase3", {{"steps", 3}}}};
  std::ofstream(dir / "cfg.json") << cfg.dump(2);
  return dir / "cfg.json";
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Osvc("").code, 2);
  EXPECT_EQ(Osvc("frobnicate").code, 2);
  EXPECT_EQ(Osvc("train --phase 4").code, 2);
  EXPECT_EQ(Osvc("--config /nonexistent/cfg.json corpus").code, 2);
  const fs::path dir = osvc::testing::TempDir("cli_usage");
  std::ofstream(dir / "bad.json") << "{not json";
  EXPECT_EQ(Osvc("--config " + (dir / "bad.json").string() + " corpus").code,
            2);
}

TEST(CliTest, UnwritableCorpusDirectory) {
  const fs::path dir = osvc::testing::TempDir("cli_unwritable");
  std::ofstream(dir / "blocker") << "file, not a directory";
  std::ofstream(dir / "cfg.json") << R"({"corpus_dir": "blocker/corpus"})";
  const Result r = Osvc("--config " + (dir / "cfg.json").string() + " corpus");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("blocker"), std::string::npos);
}

TEST(CliTest, EndToEnd) {
  const fs::path dir = osvc::testing::TempDir("cli_e2e");
  const std::string cfg = "--config " + WriteConfig(dir).string() + " ";

  ASSERT_EQ(Osvc(cfg + "corpus").code, 0);
  const fs::path record = dir / "reports" / "runs" / "corpus.json";
  const std::string hash = ReadJson(record)["record_hash"];
  ASSERT_EQ(Osvc(cfg + "corpus").code, 0);
  EXPECT_EQ(ReadJson(record)["record_hash"], hash);

  // Training before features fails with a data error or a usage error.
  EXPECT_NE(Osvc(cfg + "train --phase 2").code, 0);

  ASSERT_EQ(Osvc(cfg + "features").code, 0);
  const Result again = Osvc(cfg + "features");
  ASSERT_EQ(again.code, 0);

  EXPECT_EQ(Osvc(cfg + "train --phase 2").code, 2);
  ASSERT_EQ(Osvc(cfg + "train --phase 1").code, 0);
  ASSERT_EQ(Osvc(cfg + "train --phase 2").code, 0);

  const fs::path adapt = dir / "corpus" / "wav" / "spk06_item000.wav";
  const fs::path source = dir / "corpus" / "wav" / "spk00_item007.wav";
  ASSERT_TRUE(fs::exists(adapt));
  ASSERT_TRUE(fs::exists(source));
  EXPECT_EQ(Osvc(cfg + "train --phase 3 --utterance " + adapt.string() +
                 " --utterance " + source.string())
                .code,
            2);
  ASSERT_EQ(Osvc(cfg + "train --phase 3 --utterance " + adapt.string()).code,
            0);

  const fs::path out = dir / "out.wav";
  ASSERT_EQ(Osvc(cfg + "convert --source " + source.string() +
                 " --target-ref " + adapt.string() + " --out " + out.string())
                .code,
            0);
  EXPECT_TRUE(fs::exists(out));
  EXPECT_TRUE(fs::exists(dir / "out.mel.tensor"));
  EXPECT_TRUE(fs::exists(dir / "out.png"));
  EXPECT_EQ(Osvc(cfg + "convert --source " + source.string() + " --out " +
                 out.string())
                .code,
            2);

  const Result mcd =
      Osvc(cfg + "eval mcd " + out.string() + " " + out.string());
  EXPECT_EQ(mcd.code, 0);
  EXPECT_NE(mcd.output.find("0.0000"), std::string::npos);

  ASSERT_EQ(Osvc(cfg + "eval prosody-corr").code, 0);
  const nlohmann::json report = ReadJson(dir / "reports" / "prosody_corr.json");
  EXPECT_EQ(report["systems"][0]["pairs"].size(), 9u);
  EXPECT_EQ(Osvc(cfg + "eval prosody-corr --sources " + source.string() +
                 " --converted " + out.string() + " " + out.string())
                .code,
            2);

  // A corrupt clip is reported as a data error with the rest completed.
  std::ofstream(adapt, std::ios::trunc) << "garbage";
  const Result corrupt = Osvc(cfg + "features");
  EXPECT_EQ(corrupt.code, 3);
  EXPECT_NE(corrupt.output.find(adapt.stem().string()), std::string::npos);
}

}  // namespace
