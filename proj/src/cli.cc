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
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "mospred/checkpoint.h"
#include "mospred/csv.h"
#include "mospred/experiments.h"
#include "mospred/rng.h"
#include "mospred/stats.h"
#include "mospred/svg.h"
#include "mospred/wav.h"

namespace mospred {
namespace fs = std::filesystem;
namespace {

constexpr char kConfigFile[] = "run_config.txt";

// Calls a module's Validate() and reports failures as configuration errors.
template <typename Fn>
void Check(const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

std::string Join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::vector<std::string> SplitWords(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string FormatAxes(const AxisWeights& axes) {
  std::vector<std::string> parts;
  for (const auto& [axis, w] : axes) parts.push_back(AxisName(axis) + ":" + FormatDouble(w));
  return Join(parts, " ");
}

AxisWeights ParseAxes(const std::string& key, const std::string& text) {
  AxisWeights axes;
  for (const auto& part : SplitWords(text)) {
    const size_t colon = part.find(':');
    try {
      if (colon == std::string::npos) {
        axes[ParseAxisName(part)] = 1.0;
      } else {
        axes[ParseAxisName(part.substr(0, colon))] = ParseDouble(part.substr(colon + 1));
      }
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + key + "': bad axis '" + part + "'");
    }
  }
  if (axes.empty()) throw ConfigError("config key '" + key + "': no artifact axes");
  return axes;
}

Timestamp GetTime(RunConfig& cfg, const std::string& key, Timestamp fallback) {
  const std::string s = cfg.GetString(key, FormatRfc3339(fallback));
  try {
    return ParseRfc3339(s);
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

int GetInt32(RunConfig& cfg, const std::string& key, int fallback) {
  const int64_t v = cfg.GetInt(key, fallback);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError("config key '" + key + "' out of range");
  return static_cast<int>(v);
}

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  uint64_t seed = 0;
  int workers = 1;
  std::ostream* out = nullptr;
};

fs::path RequirePath(RunConfig& cfg, const std::string& key, const std::string& flag) {
  const std::string s = cfg.GetString(key, "");
  if (s.empty()) throw ConfigError(key + " is required (use " + flag + ")");
  return fs::path(s);
}

void PersistConfig(const Context& ctx) {
  RunConfig saved = ctx.cfg;
  saved.Erase("out");
  saved.Save(ctx.out_dir / kConfigFile);
}

void WriteEvaluationOutputs(const Evaluation& ev, const fs::path& dir) {
  WriteReportCsv(ev.report, dir / "report.csv");
  WritePredictionsCsv(ev.predictions, dir / "predictions.csv");
  std::vector<std::string> labels;
  std::vector<double> tau, lo, hi;
  for (const auto& l : ev.report.locales) {
    if (l.skipped) continue;
    labels.push_back(l.locale + (l.split == SplitKind::kZeroShot ? "*" : ""));
    tau.push_back(l.tau);
    lo.push_back(l.ci_low);
    hi.push_back(l.ci_high);
  }
  WriteSvg(IntervalChartSvg("Per-locale Kendall tau (* zero-shot)", "tau", labels, tau, lo, hi),
           dir / "per_locale.svg");
  std::vector<double> x, y;
  std::map<double, std::vector<double>> by_target;
  for (const auto& p : ev.predictions) {
    x.push_back(p.target);
    y.push_back(p.prediction);
    by_target[std::round(p.target * 8.0) / 8.0].push_back(p.prediction);
  }
  WriteSvg(ScatterSvg("Prediction vs target", "target", "prediction", x, y), dir / "scatter.svg");
  std::vector<std::string> box_labels;
  std::vector<std::vector<double>> groups;
  for (auto& [t, g] : by_target) {
    box_labels.push_back(FormatDouble(1.0 + 4.0 * t));
    groups.push_back(std::move(g));
  }
  WriteSvg(BoxPlotSvg("Predictions by rated MOS", "prediction", box_labels, groups),
           dir / "box.svg");
}

void PrintAggregates(const EvalReport& r, std::ostream& out) {
  out << "fine_tuned\t" << FormatDouble(r.fine_tuned.mean) << "\t" << r.fine_tuned.locales
      << "\n";
  out << "zero_shot\t" << FormatDouble(r.zero_shot.mean) << "\t" << r.zero_shot.locales << "\n";
  out << "all\t" << FormatDouble(r.all.mean) << "\t" << r.all.locales << "\n";
  out << "skipped\t" << r.skipped << "\n";
}

// ---------------------------------------------------------------------------

void CmdSynth(Context& ctx) {
  SynthConfig cfg = ResolveSynthConfig(ctx.cfg);
  fs::create_directories(ctx.out_dir);
  PersistConfig(ctx);
  const GeneratedDataset ds = GenDataset(cfg, ctx.out_dir, ctx.workers);
  *ctx.out << "wrote " << ds.manifest.size() << " utterances in " << cfg.locales.size()
           << " locales to " << ctx.out_dir.string() << "\n";
}

void CmdTrain(Context& ctx) {
  const fs::path manifest = RequirePath(ctx.cfg, "data.manifest", "--manifest");
  const std::string warm_path = ctx.cfg.GetString("train.warm_start", "");
  ExperimentSettings s = ResolveSettings(ctx.cfg);
  std::optional<ModelParameters> warm;
  if (!warm_path.empty()) {
    warm = LoadCheckpoint(warm_path);
    s.model = warm->config;
  }
  fs::create_directories(ctx.out_dir);
  PersistConfig(ctx);
  const PreparedData data = PrepareData(manifest, s);
  std::map<std::string, size_t> counts;
  for (const auto& [tag, stat] : LocaleStats(data.split.train)) counts[tag] = stat.count;

  const int replicas = s.train.replicas;
  std::vector<std::string> notes(replicas);
  ParallelFor(replicas, ctx.workers, [&](size_t r) {
    const fs::path dir = ctx.out_dir / ("replica_" + std::to_string(r));
    fs::create_directories(dir / "snapshots");
    const TrainedModel m = TrainOnLocales(data, data.split.fine_tuned_locales, s,
                                          ctx.seed + r, warm ? &*warm : nullptr);
    for (const Snapshot& snap : m.result.snapshots) {
      char name[32];
      std::snprintf(name, sizeof(name), "step_%07d.ckpt", snap.step);
      SaveCheckpoint(snap.params, dir / "snapshots" / name);
    }
    SaveCheckpoint(m.best, dir / "best.ckpt");
    WriteMetricsCsv(m.result.metrics, dir / "metrics.csv");
    const Evaluation ev = Evaluate(m.best, data.split.test, data.features, s.report);
    WriteEvaluationOutputs(ev, dir);
    try {
      const CorrelationSummary c = DataVsPerf(ev.report, counts);
      WriteCorrelationCsv(c, dir / "data_vs_perf.csv");
      std::vector<double> x, y;
      std::vector<std::string> labels;
      for (const auto& p : c.points) {
        x.push_back(p.log_count);
        y.push_back(p.score);
        labels.push_back(p.locale);
      }
      WriteSvg(ScatterSvg("Tau vs training data (r = " + FormatDouble(c.pearson) + ")",
                          "ln(train records)", "tau", x, y, labels),
               dir / "data_vs_perf.svg");
    } catch (const std::exception& e) {
      notes[r] = std::string("data-vs-performance skipped: ") + e.what();
    }
    std::ostringstream line;
    line << "replica " << r << ": best step " << m.best_step << ", dev tau "
         << FormatDouble(m.best_dev_score) << ", test all-locale tau "
         << FormatDouble(ev.report.all.mean);
    notes[r] = line.str() + (notes[r].empty() ? "" : "; " + notes[r]);
  });
  for (const auto& n : notes) *ctx.out << n << "\n";
}

void CmdEval(Context& ctx) {
  const fs::path ckpt = RequirePath(ctx.cfg, "eval.checkpoint", "--checkpoint");
  const fs::path manifest_path = RequirePath(ctx.cfg, "data.manifest", "--manifest");
  const std::string split = ctx.cfg.GetString("eval.split", "all");
  ExperimentSettings s = ResolveSettings(ctx.cfg);
  const ModelParameters params = LoadCheckpoint(ckpt);
  if (params.config.n_mels != s.frontend.n_mels || params.config.t_max != s.frontend.t_max) {
    throw ConfigError("checkpoint expects n_mels " + std::to_string(params.config.n_mels) +
                      " and t_max " + std::to_string(params.config.t_max) +
                      "; set frontend.n_mels / frontend.t_max to match");
  }
  Manifest manifest = LoadManifest(manifest_path);
  if (split == "zero_shot" || split == "fine_tuned") {
    const bool want_known = split == "fine_tuned";
    manifest = manifest.Filter([&](const RatingRecord& r) {
      return params.vocab.Contains(r.locale) == want_known;
    });
  } else if (split != "all") {
    throw ConfigError("eval.split must be all, fine_tuned or zero_shot (got '" + split + "')");
  }
  if (manifest.empty()) throw ConfigError("no records left after --split " + split);
  fs::create_directories(ctx.out_dir);
  PersistConfig(ctx);
  const FeatureBank features =
      BuildFeatureBank(manifest, s.frontend, s.feature_cache, ctx.workers);
  const Evaluation ev = Evaluate(params, manifest, features, s.report);
  WriteEvaluationOutputs(ev, ctx.out_dir);
  PrintAggregates(ev.report, *ctx.out);
}

void CmdTransfer(Context& ctx) {
  const fs::path manifest = RequirePath(ctx.cfg, "data.manifest", "--manifest");
  ExperimentSettings s = ResolveSettings(ctx.cfg, /*default_zero_shot_threshold=*/0);
  const PreparedData data = PrepareData(manifest, s);
  std::vector<std::string> locales = ctx.cfg.GetList(
      "transfer.locales", Join({data.split.fine_tuned_locales.begin(),
                                data.split.fine_tuned_locales.end()}, ","));
  fs::create_directories(ctx.out_dir);
  PersistConfig(ctx);
  const TransferMatrix m = RunTransferMatrix<ModelParameters>(
      locales,
      [&](const std::string& loc) { return TrainOnLocales(data, {loc}, s, ctx.seed).best; },
      [&](const ModelParameters& p, const std::string& loc) {
        return EvaluateLocale(p, data, loc);
      },
      ctx.workers);
  WriteMatrixCsv(m, ctx.out_dir / "matrix.csv");
  WriteSvg(HeatmapSvg("Transfer: rows fine-tune, columns test", m.locales, m.locales, m.tau),
           ctx.out_dir / "heatmap.svg");
  for (size_t i = 0; i < m.locales.size(); ++i) {
    for (size_t j = 0; j < m.locales.size(); ++j) {
      if (!m.errors[i][j].empty()) {
        *ctx.out << "missing " << m.locales[i] << " -> " << m.locales[j] << ": "
                 << m.errors[i][j] << "\n";
      }
    }
  }
  *ctx.out << "mean diagonal tau\t" << FormatDouble(m.MeanDiagonal()) << "\n";
  *ctx.out << "mean off-diagonal tau\t" << FormatDouble(m.MeanOffDiagonal()) << "\n";
}

// Training sets for the subset sweep: "top:k" (k largest fine-tuned locales),
// "all", or an explicit "a+b+c".
std::vector<TrainingSet> ResolveTrainingSets(const std::vector<std::string>& tokens,
                                             const PreparedData& data) {
  std::vector<std::pair<size_t, std::string>> by_size;
  for (const auto& [tag, stat] : LocaleStats(data.split.train)) by_size.push_back({stat.count, tag});
  std::sort(by_size.begin(), by_size.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<TrainingSet> sets;
  for (const auto& tok : tokens) {
    TrainingSet set;
    set.label = tok;
    if (tok == "all") {
      set.locales = data.split.fine_tuned_locales;
    } else if (tok.rfind("top:", 0) == 0) {
      int k = 0;
      try {
        k = std::stoi(tok.substr(4));
      } catch (const std::exception&) {
        throw ConfigError("sweep.sets: bad token '" + tok + "'");
      }
      if (k < 1) throw ConfigError("sweep.sets: bad token '" + tok + "'");
      for (int i = 0; i < k && i < static_cast<int>(by_size.size()); ++i) {
        set.locales.insert(by_size[i].second);
      }
    } else {
      std::istringstream in(tok);
      for (std::string t; std::getline(in, t, '+');) {
        if (!t.empty()) set.locales.insert(NormalizeLocale(t));
      }
    }
    if (set.locales.empty()) throw ConfigError("sweep.sets: token '" + tok + "' is empty");
    sets.push_back(set);
  }
  return sets;
}

void CmdSweep(Context& ctx) {
  const fs::path manifest = RequirePath(ctx.cfg, "data.manifest", "--manifest");
  const std::string param = ctx.cfg.GetString("sweep.param", "temperature");
  ExperimentSettings s = ResolveSettings(ctx.cfg);
  if (param == "temperature") {
    const std::vector<double> temps = ctx.cfg.GetDoubleList("sweep.temperatures", "1,2,10,100");
    const int64_t n_seeds = ctx.cfg.GetInt("sweep.seeds", 3);
    if (temps.empty() || n_seeds < 1) throw ConfigError("sweep needs temperatures and seeds");
    fs::create_directories(ctx.out_dir);
    PersistConfig(ctx);
    const PreparedData data = PrepareData(manifest, s);
    std::vector<uint64_t> seeds;
    for (int64_t k = 0; k < n_seeds; ++k) seeds.push_back(ctx.seed + k);
    const auto rows = RunTemperatureSweep(
        temps, seeds,
        [&](double t, uint64_t seed) {
          ExperimentSettings cell = s;
          cell.sampler.temperature = t;
          const TrainedModel m =
              TrainOnLocales(data, data.split.fine_tuned_locales, cell, seed);
          const Evaluation ev = Evaluate(m.best, data.split.test, data.features, cell.report);
          return std::map<std::string, double>{
              {"fine_tuned", MeanTau(ev.report, data.split.fine_tuned_locales)},
              {"zero_shot", MeanTau(ev.report, data.split.zero_shot_locales)}};
        },
        ctx.workers);
    const auto summary = SummarizeSweep(rows);
    WriteSweepCsv(summary, ctx.out_dir / "sweep.csv");
    WriteSweepRunsCsv(rows, ctx.out_dir / "sweep_runs.csv");
    std::vector<Series> series(2);
    series[0].name = "fine_tuned";
    series[1].name = "zero_shot";
    for (const auto& row : summary) {
      Series& target = row.aggregate == "fine_tuned" ? series[0] : series[1];
      target.x.push_back(row.temperature);
      target.y.push_back(row.mean);
      *ctx.out << FormatDouble(row.temperature) << "\t" << row.aggregate << "\t"
               << FormatDouble(row.mean) << "\n";
    }
    WriteSvg(LineChartSvg("Sampling temperature sweep", "temperature", "mean tau", series, true),
             ctx.out_dir / "sweep.svg");
  } else if (param == "subset") {
    const PreparedData data = PrepareData(manifest, s);
    const LocaleSet test_locales = data.split.test.Locales();
    const std::vector<std::string> targets = ctx.cfg.GetList(
        "sweep.targets", Join({test_locales.begin(), test_locales.end()}, ","));
    const std::vector<TrainingSet> sets =
        ResolveTrainingSets(ctx.cfg.GetList("sweep.sets", "top:1,top:2,top:4,all"), data);
    fs::create_directories(ctx.out_dir);
    PersistConfig(ctx);
    const auto points = RunSubsetGrowth<ModelParameters>(
        targets, sets,
        [&](const LocaleSet& locs) { return TrainOnLocales(data, locs, s, ctx.seed).best; },
        [&](const ModelParameters& p, const std::string& target) {
          return EvaluateLocale(p, data, target);
        },
        ctx.workers);
    WriteGrowthCsv(points, ctx.out_dir / "growth.csv");
    std::map<std::string, Series> by_target;
    for (const auto& p : points) {
      Series& ser = by_target[p.target];
      ser.name = p.target;
      if (!p.score) continue;
      ser.x.push_back(static_cast<double>(p.set_size));
      ser.y.push_back(*p.score);
      *ctx.out << p.target << "\t" << p.label << "\t" << FormatDouble(*p.score) << "\n";
    }
    std::vector<Series> series;
    for (auto& [t, ser] : by_target) series.push_back(std::move(ser));
    WriteSvg(LineChartSvg("Tau vs number of fine-tuning locales", "locales in training set",
                          "tau", series),
             ctx.out_dir / "growth.svg");
  } else {
    throw ConfigError("--param must be temperature or subset (got '" + param + "')");
  }
}

void CmdReport(Context& ctx, const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) throw ConfigError("report needs at least one run directory");
  ReportOptions options;
  options.bootstrap_resamples = GetInt32(ctx.cfg, "report.bootstrap_resamples", 1000);
  options.level = ctx.cfg.GetDouble("report.level", 0.95);
  options.seed = ctx.seed;
  ctx.cfg.Set("report.runs", Join(run_dirs, ","));
  std::vector<Evaluation> runs;
  for (const auto& d : run_dirs) {
    for (const char* f : {"report.csv", "predictions.csv"}) {
      if (!fs::exists(fs::path(d) / f)) throw ConfigError(d + " has no " + f);
    }
    Evaluation ev;
    ev.report = ReadReportCsv(fs::path(d) / "report.csv");
    ev.predictions = ReadPredictionsCsv(fs::path(d) / "predictions.csv");
    runs.push_back(std::move(ev));
  }
  fs::create_directories(ctx.out_dir);
  PersistConfig(ctx);
  const Evaluation merged = ReplicateAverage(runs, options);
  WriteEvaluationOutputs(merged, ctx.out_dir);
  PrintAggregates(merged.report, *ctx.out);
}

fs::path DefaultOutDir(const std::string& command) {
  const char* root = std::getenv(kOutRootEnv);
  return fs::path(root != nullptr && *root ? root : "mospred_runs") / command;
}

}  // namespace

ExperimentSettings ResolveSettings(RunConfig& cfg, int64_t default_zero_shot_threshold) {
  ExperimentSettings s;
  const uint64_t seed = cfg.GetUint("seed", 0);

  FrontendConfig& fe = s.frontend;
  fe.target_sr = GetInt32(cfg, "frontend.sample_rate", fe.target_sr);
  fe.n_mels = GetInt32(cfg, "frontend.n_mels", fe.n_mels);
  fe.window_ms = cfg.GetDouble("frontend.window_ms", fe.window_ms);
  fe.hop_ms = cfg.GetDouble("frontend.hop_ms", fe.hop_ms);
  fe.fft_size = GetInt32(cfg, "frontend.fft_size", fe.fft_size);
  fe.f_min = cfg.GetDouble("frontend.f_min", fe.f_min);
  fe.f_max = cfg.GetDouble("frontend.f_max", fe.f_max);
  fe.log_floor = cfg.GetDouble("frontend.log_floor", fe.log_floor);
  fe.t_max = GetInt32(cfg, "frontend.t_max", fe.t_max);
  Check("frontend", [&] { fe.Validate(); });

  Check("model.preset", [&] { s.model = ModelConfig::Preset(cfg.GetString("model.preset", "tiny")); });
  EncoderConfig& enc = s.model.encoder;
  enc.subsample_stride = GetInt32(cfg, "model.stride", enc.subsample_stride);
  enc.num_blocks = GetInt32(cfg, "model.blocks", enc.num_blocks);
  enc.d_model = GetInt32(cfg, "model.d_model", enc.d_model);
  enc.num_heads = GetInt32(cfg, "model.heads", enc.num_heads);
  enc.ffn_mult = GetInt32(cfg, "model.ffn_mult", enc.ffn_mult);
  s.model.locale_emb_dim = GetInt32(cfg, "model.locale_emb_dim", s.model.locale_emb_dim);
  s.model.n_mels = fe.n_mels;
  s.model.t_max = fe.t_max;
  Check("model", [&] { s.model.Validate(); });

  Check("train.preset",
        [&] { s.train = TrainConfig::Preset(cfg.GetString("train.preset", "desk-tiny")); });
  TrainConfig& tc = s.train;
  tc.learning_rate = cfg.GetDouble("train.lr", tc.learning_rate);
  tc.batch_size = GetInt32(cfg, "train.batch_size", tc.batch_size);
  tc.total_steps = GetInt32(cfg, "train.total_steps", tc.total_steps);
  tc.warmup_steps = GetInt32(cfg, "train.warmup_steps", tc.warmup_steps);
  tc.snapshot_every = GetInt32(cfg, "train.snapshot_every", tc.snapshot_every);
  tc.replicas = GetInt32(cfg, "train.replicas", tc.replicas);
  tc.clip_norm = cfg.GetDouble("train.clip_norm", tc.clip_norm);
  Check("train", [&] { tc.Validate(); });

  s.sampler.temperature = cfg.GetDouble("sampler.temperature", s.sampler.temperature);
  s.sampler.anyloc_fraction = cfg.GetDouble("sampler.anyloc_fraction", s.sampler.anyloc_fraction);
  s.sampler.batch_size = tc.batch_size;
  Check("sampler", [&] { s.sampler.Validate(); });

  s.split.time_cutoff = GetTime(cfg, "split.time_cutoff", s.split.time_cutoff);
  s.split.zero_shot_threshold = cfg.GetInt("split.zero_shot_threshold", default_zero_shot_threshold);
  s.split.dev_fraction = cfg.GetDouble("split.dev_fraction", s.split.dev_fraction);
  s.split.seed = cfg.GetUint("split.seed", seed);
  Check("split", [&] { s.split.Validate(); });

  s.report.bootstrap_resamples = GetInt32(cfg, "report.bootstrap_resamples", 1000);
  s.report.level = cfg.GetDouble("report.level", 0.95);
  s.report.seed = seed;
  if (s.report.bootstrap_resamples < 1 || !(s.report.level > 0.0 && s.report.level < 1.0)) {
    throw ConfigError("report: need bootstrap_resamples >= 1 and 0 < level < 1");
  }

  s.workers = GetInt32(cfg, "workers", 1);
  if (s.workers < 1) throw ConfigError("workers must be >= 1");
  const std::string cache = cfg.GetString("data.feature_cache", "");
  if (!cache.empty()) s.feature_cache = fs::path(cache);
  return s;
}

SynthConfig ResolveSynthConfig(RunConfig& cfg) {
  const uint64_t seed = cfg.GetUint("seed", 0);
  const int n = GetInt32(cfg, "synth.num_locales", 8);
  const int largest = GetInt32(cfg, "synth.largest_count", 60);
  SynthConfig base;
  Check("synth", [&] { base = BenchmarkConfig(n, largest, seed); });
  std::vector<std::string> tags;
  for (const auto& l : base.locales) tags.push_back(l.locale);
  tags = cfg.GetList("synth.locales", Join(tags, ","));

  SynthConfig sc;
  sc.seed = seed;
  for (size_t i = 0; i < tags.size(); ++i) {
    SynthLocaleSpec spec = base.locales[i % base.locales.size()];
    spec.locale = NormalizeLocale(tags[i]);
    const std::string p = "synth.locale." + spec.locale + ".";
    spec.base_pitch_hz = cfg.GetDouble(p + "pitch_hz", spec.base_pitch_hz);
    std::vector<std::string> f;
    for (double v : spec.formants_hz) f.push_back(FormatDouble(v));
    spec.formants_hz.clear();
    for (const auto& w : SplitWords(cfg.GetString(p + "formants_hz", Join(f, " ")))) {
      try {
        spec.formants_hz.push_back(ParseDouble(w));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + p + "formants_hz': bad number '" + w + "'");
      }
    }
    spec.syllable_rate_hz = cfg.GetDouble(p + "syllable_rate_hz", spec.syllable_rate_hz);
    spec.axes = ParseAxes(p + "axes", cfg.GetString(p + "axes", FormatAxes(spec.axes)));
    spec.num_utterances = GetInt32(cfg, p + "utterances", spec.num_utterances);
    Check(p.substr(0, p.size() - 1), [&] { spec.Validate(); });
    sc.locales.push_back(spec);
  }
  sc.min_duration_s = cfg.GetDouble("synth.min_duration_s", sc.min_duration_s);
  sc.max_duration_s = cfg.GetDouble("synth.max_duration_s", sc.max_duration_s);
  sc.severity_alpha = cfg.GetDouble("synth.severity_alpha", sc.severity_alpha);
  sc.severity_beta = cfg.GetDouble("synth.severity_beta", sc.severity_beta);
  sc.rater_noise_sigma = cfg.GetDouble("synth.rater_noise_sigma", sc.rater_noise_sigma);
  if (!(sc.rater_noise_sigma >= 0.0)) {
    throw ConfigError("synth.rater_noise_sigma must be >= 0 (got " +
                      FormatDouble(sc.rater_noise_sigma) + ")");
  }
  sc.mean_raters = cfg.GetDouble("synth.mean_raters", sc.mean_raters);
  sc.sample_rate = GetInt32(cfg, "synth.sample_rate", sc.sample_rate);
  sc.systems_per_locale = GetInt32(cfg, "synth.systems_per_locale", sc.systems_per_locale);
  sc.start = GetTime(cfg, "synth.start", sc.start);
  sc.end = GetTime(cfg, "synth.end", sc.end);
  Check("synth", [&] { sc.Validate(); });
  return sc;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mospred: multilingual MOS prediction experiments", "mospred"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset, warm_start, split, param, manifest, checkpoint;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::vector<std::string> overrides, run_dirs;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--seed", seed, "global seed");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--workers", workers, "parallel workers")->check(CLI::PositiveNumber);
    cmd->add_option("--set", overrides, "extra key=value override (repeatable)");
  };
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
  CLI::App* train = app.add_subcommand("train", "fine-tune replicas on a manifest");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
  CLI::App* transfer = app.add_subcommand("transfer", "cross-locale transfer matrix");
  CLI::App* sweep = app.add_subcommand("sweep", "temperature or training-subset sweep");
  CLI::App* report = app.add_subcommand("report", "merge replicate run directories");
  for (CLI::App* cmd : {synth, train, eval, transfer, sweep, report}) common(cmd);
  for (CLI::App* cmd : {train, eval, transfer, sweep}) {
    cmd->add_option("--manifest", manifest, "manifest JSONL");
  }
  train->add_option("--preset", preset, "training preset (squid-default, voicemos, desk-tiny)");
  train->add_option("--warm-start", warm_start, "checkpoint to continue from");
  eval->add_option("--checkpoint", checkpoint, "model checkpoint");
  eval->add_option("--split", split, "all, fine_tuned or zero_shot");
  sweep->add_option("--param", param, "temperature or subset");
  report->add_option("runs", run_dirs, "run directories")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    Context ctx;
    ctx.out = &out;
    if (!config_path.empty()) ctx.cfg = RunConfig::Load(config_path);
    if (seed) ctx.cfg.Set("seed", std::to_string(*seed));
    if (workers) ctx.cfg.Set("workers", std::to_string(*workers));
    auto absolute = [](const std::string& p) { return fs::absolute(p).lexically_normal().string(); };
    if (!manifest.empty()) ctx.cfg.Set("data.manifest", absolute(manifest));
    if (!preset.empty()) ctx.cfg.Set("train.preset", preset);
    if (!warm_start.empty()) ctx.cfg.Set("train.warm_start", absolute(warm_start));
    if (!checkpoint.empty()) ctx.cfg.Set("eval.checkpoint", absolute(checkpoint));
    if (!split.empty()) ctx.cfg.Set("eval.split", split);
    if (!param.empty()) ctx.cfg.Set("sweep.param", param);
    for (const auto& kv : overrides) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      ctx.cfg.Set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out_dir.empty()) ctx.cfg.Set("out", out_dir);
    ctx.out_dir = fs::path(ctx.cfg.GetString("out", DefaultOutDir(name).string()));
    ctx.seed = ctx.cfg.GetUint("seed", 0);
    ctx.workers = GetInt32(ctx.cfg, "workers", 1);
    if (ctx.workers < 1) throw ConfigError("workers must be >= 1");

    if (name == "synth") CmdSynth(ctx);
    else if (name == "train") CmdTrain(ctx);
    else if (name == "eval") CmdEval(ctx);
    else if (name == "transfer") CmdTransfer(ctx);
    else if (name == "sweep") CmdSweep(ctx);
    else CmdReport(ctx, run_dirs);
    return 0;
  } catch (const ConfigError& e) {
    err << "mospred " << name << ": config error: " << e.what() << "\n";
    return 1;
  } catch (const ManifestError& e) {
    err << "mospred " << name << ": manifest error: " << e.what() << "\n";
    return 1;
  } catch (const WavError& e) {
    err << "mospred " << name << ": audio error: " << e.what() << "\n";
    return 1;
  } catch (const CheckpointError& e) {
    err << "mospred " << name << ": checkpoint error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "mospred " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "mospred " << name << ": internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mospred
