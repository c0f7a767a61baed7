// Copyright 2026 The mospred Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mospred/cli.h"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mospred/checkpoint.h"
#include "mospred/csv.h"
#include "mospred/run_config.h"
#include "test_util.h"

namespace mospred {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result Run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

TEST_CASE("run config parsing") {
  RunConfig c = RunConfig::Parse(
      "# comment\n"
      "seed = 7\n"
      "  train.lr=0.01   # trailing\n"
      "sweep.temperatures = 1, 2,10\n\n");
  CHECK(c.GetUint("seed", 0) == 7);
  CHECK(c.GetDouble("train.lr", 0.0) == 0.01);
  CHECK(c.GetDoubleList("sweep.temperatures", "") == std::vector<double>{1, 2, 10});
  CHECK(c.GetInt("missing", 3) == 3);
  CHECK(c.Has("missing"));  // defaults are recorded for provenance
  CHECK(c.WithPrefix("train.").at("lr") == "0.01");
  CHECK(RunConfig::Parse(c.Serialize()).values() == c.values());

  CHECK_THROWS_WITH_AS(RunConfig::Parse("a = 1\na = 2\n"), doctest::Contains("line 2"),
                       ConfigError);
  CHECK_THROWS_AS(RunConfig::Parse("just words\n"), ConfigError);
  RunConfig bad = RunConfig::Parse("seed = x\n");
  CHECK_THROWS_AS(bad.GetUint("seed", 0), ConfigError);
}

constexpr char kSynth[] =
    "synth.locales = en-US, fr-FR, ja-JP\n"
    "synth.locale.en-US.utterances = 30\n"
    "synth.locale.fr-FR.utterances = 30\n"
    "synth.locale.ja-JP.utterances = 12\n"
    "synth.min_duration_s = 0.4\n"
    "synth.max_duration_s = 0.6\n";

constexpr char kTrain[] =
    "frontend.t_max = 48\n"
    "model.d_model = 16\n"
    "model.blocks = 1\n"
    "model.heads = 2\n"
    "model.locale_emb_dim = 8\n"
    "train.total_steps = 40\n"
    "train.warmup_steps = 10\n"
    "train.snapshot_every = 20\n"
    "train.batch_size = 8\n"
    "train.replicas = 1\n"
    "split.zero_shot_threshold = 20\n"
    "split.dev_fraction = 0.2\n"
    "report.bootstrap_resamples = 50\n";

TEST_CASE("synth command") {
  testing::TempDir dir("cli_synth");
  testing::WriteText(dir / "synth.cfg", kSynth);
  const Result r = Run({"synth", "--config", (dir / "synth.cfg").string(), "--seed", "3",
                        "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "a" / "manifest.jsonl"));
  CHECK(fs::is_directory(dir / "a" / "wav"));
  CHECK(fs::exists(dir / "a" / "severity.csv"));
  CHECK(fs::exists(dir / "a" / "run_config.txt"));

  // Rerunning from the persisted config reproduces the manifest.
  const Result again =
      Run({"synth", "--config", (dir / "a" / "run_config.txt").string(), "--out",
           (dir / "b").string(), "--workers", "3"});
  REQUIRE(again.code == 0);
  CHECK(testing::ReadText(dir / "a" / "manifest.jsonl") ==
        testing::ReadText(dir / "b" / "manifest.jsonl"));

  const Result bad = Run({"synth", "--config", (dir / "synth.cfg").string(), "--set",
                          "synth.rater_noise_sigma=-0.5", "--out", (dir / "c").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("synth.rater_noise_sigma") != std::string::npos);
}

TEST_CASE("user errors exit with status 1") {
  testing::TempDir dir("cli_err");
  CHECK(Run({"bogus"}).code == 1);
  CHECK(Run({}).code == 1);
  CHECK(Run({"train", "--manifest", (dir / "none.jsonl").string(), "--out",
             (dir / "o").string()})
            .code == 1);
  testing::WriteText(dir / "bad.cfg", "oops\n");
  CHECK(Run({"synth", "--config", (dir / "bad.cfg").string()}).code == 1);
  CHECK(Run({"synth", "--set", "novalue", "--out", (dir / "x").string()}).code == 1);
}

TEST_CASE("train, eval and report") {
  testing::TempDir dir("cli_train");
  testing::WriteText(dir / "synth.cfg", kSynth);
  testing::WriteText(dir / "train.cfg", kTrain);
  REQUIRE(Run({"synth", "--config", (dir / "synth.cfg").string(), "--out",
               (dir / "data").string()})
              .code == 0);
  const std::string manifest = (dir / "data" / "manifest.jsonl").string();
  const std::string cfg = (dir / "train.cfg").string();

  const Result train = Run({"train", "--config", cfg, "--manifest", manifest, "--out",
                            (dir / "run").string(), "--set", "train.replicas=2"});
  REQUIRE_MESSAGE(train.code == 0, train.err);
  for (const char* rep : {"replica_0", "replica_1"}) {
    const fs::path d = dir / "run" / rep;
    CHECK(fs::exists(d / "best.ckpt"));
    CHECK(fs::exists(d / "snapshots" / "step_0000020.ckpt"));
    CHECK(fs::exists(d / "snapshots" / "step_0000040.ckpt"));
    CHECK(fs::exists(d / "metrics.csv"));
    CHECK(fs::exists(d / "report.csv"));
    CHECK(fs::exists(d / "scatter.svg"));
  }
  const ModelParameters best = LoadCheckpoint(dir / "run" / "replica_0" / "best.ckpt");
  CHECK(best.vocab.Contains("en-US"));
  CHECK_FALSE(best.vocab.Contains("ja-JP"));

  SUBCASE("eval aggregate round-trips through the report csv") {
    const Result ev = Run({"eval", "--config", cfg, "--manifest", manifest, "--checkpoint",
                           (dir / "run" / "replica_0" / "best.ckpt").string(), "--out",
                           (dir / "ev").string()});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    // Re-aggregate the csv rows by hand.
    const CsvTable t = ReadCsv(dir / "ev" / "report.csv");
    double sum = 0.0;
    int n = 0;
    for (const auto& row : t.rows) {
      if (row[t.Column("status")] != "ok") continue;
      sum += ParseDouble(row[t.Column("tau")]);
      ++n;
    }
    REQUIRE(n > 0);
    std::istringstream lines(ev.out);
    std::string line;
    bool seen = false;
    while (std::getline(lines, line)) {
      if (line.rfind("all\t", 0) != 0) continue;
      seen = true;
      const double printed = ParseDouble(line.substr(4, line.find('\t', 4) - 4));
      CHECK(printed == doctest::Approx(sum / n).epsilon(1e-12));
    }
    CHECK(seen);
  }
  SUBCASE("zero-shot split keeps only unseen locales") {
    const Result ev = Run({"eval", "--config", cfg, "--manifest", manifest, "--checkpoint",
                           (dir / "run" / "replica_0" / "best.ckpt").string(), "--split",
                           "zero_shot", "--out", (dir / "zs").string()});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    const auto rows = ReadPredictionsCsv(dir / "zs" / "predictions.csv");
    REQUIRE_FALSE(rows.empty());
    for (const auto& r : rows) CHECK(r.locale == "ja-JP");
  }
  SUBCASE("report averages replicas") {
    const Result rep = Run({"report", (dir / "run" / "replica_0").string(),
                            (dir / "run" / "replica_1").string(), "--out",
                            (dir / "merged").string()});
    REQUIRE_MESSAGE(rep.code == 0, rep.err);
    const EvalReport a = ReadReportCsv(dir / "run" / "replica_0" / "report.csv");
    const EvalReport b = ReadReportCsv(dir / "run" / "replica_1" / "report.csv");
    const EvalReport m = ReadReportCsv(dir / "merged" / "report.csv");
    for (size_t i = 0; i < m.locales.size(); ++i) {
      if (m.locales[i].skipped) continue;
      CHECK(m.locales[i].tau ==
            doctest::Approx((a.locales[i].tau + b.locales[i].tau) / 2).epsilon(1e-12));
    }
  }
  SUBCASE("preset and warm start are recorded") {
    const Result t = Run({"train", "--config", cfg, "--manifest", manifest, "--preset",
                          "voicemos", "--set", "train.total_steps=20", "--set",
                          "train.snapshot_every=10", "--warm-start",
                          (dir / "run" / "replica_0" / "best.ckpt").string(), "--out",
                          (dir / "vm").string()});
    REQUIRE_MESSAGE(t.code == 0, t.err);
    RunConfig saved = RunConfig::Load(dir / "vm" / "run_config.txt");
    CHECK(saved.GetString("train.preset", "") == "voicemos");
    CHECK(saved.GetInt("train.batch_size", 0) == 8);
    CHECK(saved.Has("train.warm_start"));
  }
}

}  // namespace
}  // namespace mospred
