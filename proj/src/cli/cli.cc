// Copyright 2026 The ncderev Authors
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

#include "ncderev/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ncderev/corpus.h"
#include "ncderev/diagnostics.h"
#include "ncderev/error.h"
#include "ncderev/features.h"
#include "ncderev/mixing.h"
#include "ncderev/mlp.h"
#include "ncderev/ncfir.h"
#include "ncderev/parallel.h"
#include "ncderev/stft.h"

#ifndef NCDEREV_VERSION
#define NCDEREV_VERSION "unknown"
#endif

namespace ncderev {

namespace fs = std::filesystem;
using Json = nlohmann::json;

Json DefaultConfig() {
  return Json::parse(R"({
    "seed": 1,
    "workdir": "work",
    "jobs": 1,
    "corpus": {
      "clean_dir": "",
      "synth_utterances": 0,
      "synth_duration_s": 2.5,
      "num_rirs": 0,
      "unique_rirs": true,
      "rt60_min": 0.4,
      "rt60_max": 1.99,
      "absorption": "sabine",
      "fractional_delay": false,
      "high_pass": true
    },
    "stft": {"frame_len": 400, "frame_shift": 160, "fft_size": 512, "window": "hann"},
    "features": {"n_mels": 40, "floor": 1e-10, "floor_relative": true},
    "fir": {"p": 10, "q": 10, "ridge": "auto", "split": "test", "write_filters": false},
    "sweep": {
      "split": "all",
      "grid": [[0, 0], [1, 0], [0, 1], [1, 1], [2, 2], [5, 5], [10, 10],
               [20, 0], [15, 5], [5, 15], [0, 20]]
    },
    "mlp": {
      "p": 10, "q": 10, "hidden": 128, "layers": 3,
      "learning_rate": 0.1, "batch_size": 200, "max_epochs": 20,
      "adapt_lr": true, "min_improvement": 0.001, "max_halvings": 5
    },
    "derev": {"split": "test"},
    "mix": {
      "split": "dev",
      "configs": [1, 2, 3, 4],
      "grid": [],
      "subsets": 2,
      "derev": "mlp",
      "enhancer": "causal-fir",
      "enhancer_order": 5,
      "adapt_utterances": 10
    },
    "diagnose": {
      "split": "test", "max_lag": 100, "tail_from": 10, "p": 10, "q": 10,
      "export_format": "pgm"
    }
  })");
}

void MergeConfig(Json& base, const Json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("config" + where + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where + "/" + key;
    if (!base.contains(key)) throw ConfigError("unknown config key " + path);
    Json& target = base[key];
    if (target.is_object()) {
      MergeConfig(target, value, path);
    } else {
      target = value;
    }
  }
}

namespace {

// ---------------------------------------------------------------------------
// Configuration access

class Settings {
 public:
  explicit Settings(Json json) : json_(std::move(json)) {}

  template <typename T>
  T Get(const std::string& pointer) const {
    try {
      return json_.at(Json::json_pointer(pointer)).get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError("config key " + pointer + ": " + e.what());
    }
  }
  const Json& json() const { return json_; }

  uint64_t seed() const { return Get<uint64_t>("/seed"); }
  fs::path workdir() const { return Get<std::string>("/workdir"); }
  int jobs() const {
    const int j = Get<int>("/jobs");
    if (j < 1) throw ConfigError("jobs must be >= 1");
    return j;
  }

  StftConfig stft() const {
    StftConfig c;
    c.frame_len = Get<size_t>("/stft/frame_len");
    c.frame_shift = Get<size_t>("/stft/frame_shift");
    c.fft_size = Get<size_t>("/stft/fft_size");
    c.window = ParseWindowType(Get<std::string>("/stft/window"));
    c.Validate();
    return c;
  }
  EnergyFloor floor() const {
    return {Get<bool>("/features/floor_relative"), Get<double>("/features/floor")};
  }
  MelFilterBank bank(int sample_rate) const {
    return MakeMelBank(stft().fft_size, sample_rate, Get<int>("/features/n_mels"));
  }
  Ridge ridge(const std::string& pointer) const {
    const Json& v = json_.at(Json::json_pointer(pointer));
    if (v.is_string()) {
      if (v.get<std::string>() == "auto") return Ridge::Auto();
      throw ConfigError("config key " + pointer + ": expected \"auto\" or a number");
    }
    const double r = Get<double>(pointer);
    if (r < 0.0) throw ConfigError("config key " + pointer + " must be >= 0");
    return r == 0.0 ? Ridge::None() : Ridge::Fixed(r);
  }

 private:
  Json json_;
};

// ---------------------------------------------------------------------------
// Workdir layout and manifest

struct Layout {
  fs::path root;

  fs::path corpus() const { return root / "corpus"; }
  fs::path clean_wav(const std::string& id) const { return corpus() / "clean" / (id + ".wav"); }
  fs::path reverb_wav(const std::string& id) const { return corpus() / "reverb" / (id + ".wav"); }
  fs::path manifest() const { return corpus() / "manifest.csv"; }
  fs::path features(const std::string& stream, const std::string& id) const {
    return root / "features" / stream / (id + ".ncft");
  }
  fs::path model() const { return root / "mlp" / "model.json"; }
};

struct ManifestRow {
  std::string id;
  size_t rir_id = 0;
  double rt60 = 0.0;
  double distance = 0.0;
  std::string split;
};

void RequireArtifact(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw DataError("missing upstream artifact " + path.string() + " (run " + producer +
                    " first)");
  }
}

std::vector<ManifestRow> ReadManifest(const Layout& layout) {
  RequireArtifact(layout.manifest(), "make-corpus");
  std::ifstream in(layout.manifest());
  std::string line;
  std::getline(in, line);
  if (line != "utterance,rir_id,rt60,distance,split") {
    throw DataError("unexpected manifest header in " + layout.manifest().string());
  }
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw DataError("malformed manifest row: " + line);
    try {
      rows.push_back({cells[0], std::stoul(cells[1]), std::stod(cells[2]),
                      std::stod(cells[3]), cells[4]});
    } catch (const std::logic_error&) {
      throw DataError("malformed manifest row: " + line);
    }
  }
  if (rows.empty()) throw DataError("empty manifest " + layout.manifest().string());
  std::sort(rows.begin(), rows.end(),
            [](const ManifestRow& a, const ManifestRow& b) { return a.id < b.id; });
  return rows;
}

std::vector<ManifestRow> SelectSplit(const std::vector<ManifestRow>& rows,
                                     const std::string& split) {
  if (split != "all" && split != "train" && split != "dev" && split != "test") {
    throw ConfigError("split must be all, train, dev or test, got " + split);
  }
  std::vector<ManifestRow> out;
  for (const auto& r : rows) {
    if (split == "all" || r.split == split) out.push_back(r);
  }
  if (out.empty()) throw DataError("no utterances in split " + split);
  return out;
}

FeatureMatrix LoadFeatures(const Layout& layout, const std::string& stream,
                           const std::string& id) {
  const fs::path path = layout.features(stream, id);
  RequireArtifact(path, "featurize");
  return ReadFeatures(path);
}

Waveform LoadWav(const fs::path& path) {
  RequireArtifact(path, "make-corpus");
  return ReadWav(path);
}

void Log(const std::string& line) { std::cout << line << '\n'; }

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void WriteRunRecord(const Layout& layout, const std::string& command, const Settings& s) {
  fs::create_directories(layout.root / "runs");
  Json record;
  record["command"] = command;
  record["tool"] = "ncderev";
  record["version"] = NCDEREV_VERSION;
  record["seed"] = s.seed();
  record["config"] = s.json();
  std::ofstream out(layout.root / "runs" / (command + ".json"));
  if (!out) throw DataError("cannot write run record under " + layout.root.string());
  out << record.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Commands

void MakeCorpus(const Settings& s, const Layout& layout) {
  const auto clean_dir = s.Get<std::string>("/corpus/clean_dir");
  const auto synth_count = s.Get<size_t>("/corpus/synth_utterances");
  fs::create_directories(layout.corpus() / "clean");
  fs::create_directories(layout.corpus() / "reverb");
  fs::create_directories(layout.corpus() / "rirs");

  std::vector<std::string> ids;
  if (!clean_dir.empty()) {
    if (!fs::is_directory(clean_dir)) throw ConfigError("clean_dir is not a directory: " + clean_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(clean_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".wav") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ids.push_back(f.stem().string());
      WriteWav(ReadWav(f), layout.clean_wav(ids.back()));
    }
  } else if (synth_count > 0) {
    SynthConfig synth;
    synth.duration_s = s.Get<double>("/corpus/synth_duration_s");
    const auto paths =
        WriteSyntheticUtterances(layout.corpus() / "clean", synth_count, s.seed(), synth);
    for (const auto& p : paths) ids.push_back(p.stem().string());
  }
  if (ids.empty()) {
    throw DataError("no clean utterances: set corpus.clean_dir to a directory of WAV files "
                    "or corpus.synth_utterances > 0");
  }
  // Read back so the reverberant signals derive from the stored 16-bit clean.
  std::vector<Waveform> clean(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) clean[i] = ReadWav(layout.clean_wav(ids[i]));

  RoomSampling sampling;
  sampling.rt60_min = s.Get<double>("/corpus/rt60_min");
  sampling.rt60_max = s.Get<double>("/corpus/rt60_max");
  sampling.sample_rate = clean[0].sample_rate;
  if (!(sampling.rt60_min > 0.0 && sampling.rt60_min <= sampling.rt60_max)) {
    throw ConfigError("need 0 < rt60_min <= rt60_max");
  }
  ImageMethodOptions options;
  options.absorption = ParseAbsorptionModel(s.Get<std::string>("/corpus/absorption"));
  options.fractional_delay = s.Get<bool>("/corpus/fractional_delay");
  options.high_pass = s.Get<bool>("/corpus/high_pass");
  size_t num_rirs = s.Get<size_t>("/corpus/num_rirs");
  if (num_rirs == 0) num_rirs = ids.size();

  auto corpus = BuildCorpus(ids, clean, sampling, options, s.seed(), num_rirs,
                            s.Get<bool>("/corpus/unique_rirs"), s.jobs());
  std::vector<bool> written(num_rirs, false);
  for (auto& e : corpus) {
    double peak = 0.0;
    for (double v : e.reverb.samples) peak = std::max(peak, std::abs(v));
    // Keep clear of 16-bit clipping.
    if (peak > 0.99) {
      for (double& v : e.reverb.samples) v *= 0.99 / peak;
    }
    WriteWav(e.reverb, layout.reverb_wav(e.id));
    if (!written[e.rir_index]) {
      char name[32];
      std::snprintf(name, sizeof(name), "rir%05zu.ncir", e.rir_index);
      WriteRir(ImageMethodRir(e.room, options), layout.corpus() / "rirs" / name);
      written[e.rir_index] = true;
    }
  }
  WriteManifestCsv(corpus, layout.manifest());
  size_t counts[3] = {0, 0, 0};
  for (const auto& e : corpus) ++counts[static_cast<int>(e.split)];
  Log("make-corpus: " + std::to_string(corpus.size()) + " utterances (train " +
      std::to_string(counts[0]) + ", dev " + std::to_string(counts[1]) + ", test " +
      std::to_string(counts[2]) + ")");
}

void Featurize(const Settings& s, const Layout& layout) {
  const auto rows = ReadManifest(layout);
  const StftConfig config = s.stft();
  const EnergyFloor floor = s.floor();
  std::vector<FeatureMatrix> clean(rows.size()), reverb(rows.size());
  ParallelFor(rows.size(), s.jobs(), [&](size_t i) {
    const Waveform c = LoadWav(layout.clean_wav(rows[i].id));
    const Waveform r = LoadWav(layout.reverb_wav(rows[i].id));
    const MelFilterBank bank = s.bank(c.sample_rate);
    clean[i] = ExtractFeatures(c, config, bank, floor);
    reverb[i] = ExtractFeatures(r, config, bank, floor);
  });
  fs::create_directories(layout.root / "features" / "clean");
  fs::create_directories(layout.root / "features" / "reverb");
  for (size_t i = 0; i < rows.size(); ++i) {
    WriteFeatures(clean[i], layout.features("clean", rows[i].id));
    WriteFeatures(reverb[i], layout.features("reverb", rows[i].id));
  }
  Log("featurize: " + std::to_string(rows.size()) + " utterances");
}

std::vector<SpectrogramPair> LoadSpectrogramPairs(const Settings& s, const Layout& layout,
                                                  const std::vector<ManifestRow>& rows) {
  const StftConfig config = s.stft();
  std::vector<SpectrogramPair> pairs(rows.size());
  ParallelFor(rows.size(), s.jobs(), [&](size_t i) {
    pairs[i].id = rows[i].id;
    pairs[i].reverb = Stft(LoadWav(layout.reverb_wav(rows[i].id)), config);
    pairs[i].clean = Stft(LoadWav(layout.clean_wav(rows[i].id)), config);
  });
  return pairs;
}

double CleanEnergy(const ComplexSpectrogram& clean) {
  double e = 0.0;
  for (const auto& v : clean.values()) e += std::norm(v);
  return e;
}

void FitFir(const Settings& s, const Layout& layout) {
  const auto rows = SelectSplit(ReadManifest(layout), s.Get<std::string>("/fir/split"));
  const int p = s.Get<int>("/fir/p"), q = s.Get<int>("/fir/q");
  const Ridge ridge = s.ridge("/fir/ridge");
  const bool write_filters = s.Get<bool>("/fir/write_filters");
  const auto pairs = LoadSpectrogramPairs(s, layout, rows);
  std::vector<SpectrogramFit> fits(pairs.size());
  ParallelFor(pairs.size(), s.jobs(), [&](size_t i) {
    try {
      fits[i] = DereverberateSpectrogram(pairs[i].reverb, pairs[i].clean, p, q, ridge, 1);
    } catch (const NumericalError& e) {
      throw NumericalError(pairs[i].id + ": " + e.what());
    }
  });
  const fs::path dir = layout.root / "fir";
  fs::create_directories(dir);
  if (write_filters) fs::create_directories(dir / "filters");
  std::ofstream out(dir / "summary.csv");
  out << "utterance_id,n_frames,p,q,normalized_error,baseline_error\n";
  double mean = 0.0, base = 0.0;
  char buf[160];
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double energy = CleanEnergy(pairs[i].clean);
    double baseline = 0.0;
    for (double b : fits[i].baseline) baseline += b;
    const double err = fits[i].total_error() / energy;
    std::snprintf(buf, sizeof(buf), ",%zu,%d,%d,%.17g,%.17g\n", pairs[i].clean.frames(), p, q,
                  err, baseline / energy);
    out << pairs[i].id << buf;
    mean += err;
    base += baseline / energy;
    if (write_filters) WriteFilterCsv(fits[i].filters, dir / "filters" / (pairs[i].id + ".csv"));
  }
  const double n = static_cast<double>(pairs.size());
  Log("fit-fir: " + std::to_string(pairs.size()) + " utterances, mean normalized error " +
      Format("%.6f", mean / n) + " (unfiltered " + Format("%.6f", base / n) + ")");
}

void SweepContext(const Settings& s, const Layout& layout) {
  const auto rows = SelectSplit(ReadManifest(layout), s.Get<std::string>("/sweep/split"));
  const auto grid = s.Get<std::vector<std::pair<int, int>>>("/sweep/grid");
  if (grid.empty()) throw ConfigError("sweep.grid is empty");
  const auto pairs = LoadSpectrogramPairs(s, layout, rows);
  const auto result = ContextSweep(pairs, grid, s.ridge("/fir/ridge"), s.jobs());
  fs::create_directories(layout.root / "sweep");
  WriteSweepCsv(result, layout.root / "sweep" / "context_sweep.csv");
  Log("sweep-context: " + std::to_string(result.size()) + " grid points over " +
      std::to_string(pairs.size()) + " utterances");
}

FeatureMatrix Concat(const std::vector<FeatureMatrix>& parts) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  FeatureMatrix out(rows, parts.empty() ? 0 : parts[0].cols());
  rows = 0;
  for (const auto& p : parts) {
    out.middleRows(rows, p.rows()) = p;
    rows += p.rows();
  }
  return out;
}

// Context-stacked reverberant inputs and clean targets for one split.
std::pair<FeatureMatrix, FeatureMatrix> TrainingData(const Layout& layout,
                                                     const std::vector<ManifestRow>& rows,
                                                     int p, int q) {
  std::vector<FeatureMatrix> inputs, targets;
  for (const auto& r : rows) {
    const FeatureMatrix clean = LoadFeatures(layout, "clean", r.id);
    const FeatureMatrix reverb = LoadFeatures(layout, "reverb", r.id);
    if (reverb.rows() < clean.rows()) throw DataError(r.id + ": reverberant features too short");
    inputs.push_back(StackContext(reverb, p, q).topRows(clean.rows()));
    targets.push_back(clean);
  }
  return {Concat(inputs), Concat(targets)};
}

void TrainMlp(const Settings& s, const Layout& layout) {
  const auto rows = ReadManifest(layout);
  std::vector<ManifestRow> train, dev;
  for (const auto& r : rows) {
    if (r.split == "train") train.push_back(r);
    if (r.split == "dev") dev.push_back(r);
  }
  if (train.empty()) throw DataError("no utterances in split train");
  const int p = s.Get<int>("/mlp/p"), q = s.Get<int>("/mlp/q");
  const auto [xt, yt] = TrainingData(layout, train, p, q);
  FeatureMatrix xv(0, xt.cols()), yv(0, yt.cols());
  if (!dev.empty()) std::tie(xv, yv) = TrainingData(layout, dev, p, q);

  TrainConfig config;
  config.learning_rate = s.Get<double>("/mlp/learning_rate");
  config.batch_size = s.Get<int>("/mlp/batch_size");
  config.max_epochs = s.Get<int>("/mlp/max_epochs");
  config.adapt_lr = s.Get<bool>("/mlp/adapt_lr");
  config.min_improvement = s.Get<double>("/mlp/min_improvement");
  config.max_halvings = s.Get<int>("/mlp/max_halvings");
  config.seed = DeriveSeed(s.seed(), 2);
  const auto dims = ContextLayerDims(p, q, s.Get<int>("/mlp/hidden"), s.Get<int>("/mlp/layers"),
                                     static_cast<int>(yt.cols()));
  const MlpModel init = InitModel(dims, DeriveSeed(s.seed(), 1));
  const TrainResult result = Train(init, xt, yt, xv, yv, config);
  fs::create_directories(layout.model().parent_path());
  SaveModel(result.model, layout.model());
  WriteLossTraceCsv(result.trace, layout.model().parent_path() / "loss_trace.csv");
  const EpochStats& best = result.trace[static_cast<size_t>(result.best_epoch)];
  Log("train-mlp: " + std::to_string(xt.rows()) + " training frames, best epoch " +
      std::to_string(result.best_epoch) + " valid mse " + Format("%.6f", best.valid_mse));
}

MlpModel RequireModel(const Layout& layout) {
  RequireArtifact(layout.model(), "train-mlp");
  return LoadModel(layout.model());
}

void Derev(const Settings& s, const Layout& layout) {
  const auto rows = SelectSplit(ReadManifest(layout), s.Get<std::string>("/derev/split"));
  const MlpModel model = RequireModel(layout);
  const int p = s.Get<int>("/mlp/p"), q = s.Get<int>("/mlp/q");
  std::vector<MsePair> derev(rows.size()), baseline(rows.size());
  ParallelFor(rows.size(), s.jobs(), [&](size_t i) {
    const FeatureMatrix clean = LoadFeatures(layout, "clean", rows[i].id);
    const FeatureMatrix reverb = LoadFeatures(layout, "reverb", rows[i].id);
    const FeatureMatrix est = DereverberateFeatures(model, reverb, p, q);
    derev[i] = {rows[i].id, AlignPairs(est, clean).first, clean};
    baseline[i] = {rows[i].id, AlignPairs(reverb, clean).first, clean};
  });
  const fs::path dir = layout.root / "derev";
  fs::create_directories(dir / "features");
  for (const auto& d : derev) WriteFeatures(d.estimate, dir / "features" / (d.id + ".ncft"));
  const MseReport out = MakeMseReport(derev);
  const MseReport base = MakeMseReport(baseline);
  WriteMseReportCsv(out, dir / "mse_report.csv");
  WriteMseReportCsv(base, dir / "baseline_mse_report.csv");
  std::ofstream summary(dir / "summary.csv");
  summary << "stream,corpus_mean_mse\n"
          << "reverb," << Format("%.17g", base.corpus_mean) << "\n"
          << "mlp_derev," << Format("%.17g", out.corpus_mean) << "\n";
  Log("derev: " + std::to_string(rows.size()) + " utterances, mse " +
      Format("%.6f", out.corpus_mean) + " (unprocessed " + Format("%.6f", base.corpus_mean) +
      ")");
}

void MixSweep(const Settings& s, const Layout& layout) {
  const auto all = ReadManifest(layout);
  const auto rows = SelectSplit(all, s.Get<std::string>("/mix/split"));
  // "passthrough" stands the inputs in for the dereverberated streams.
  const auto derev_kind = s.Get<std::string>("/mix/derev");
  if (derev_kind != "mlp" && derev_kind != "passthrough") {
    throw ConfigError("mix.derev must be mlp or passthrough, got " + derev_kind);
  }
  const bool passthrough = derev_kind == "passthrough";
  const MlpModel model = passthrough ? MlpModel{} : RequireModel(layout);
  const int p = s.Get<int>("/mlp/p"), q = s.Get<int>("/mlp/q");
  auto derev = [&](const FeatureMatrix& m) {
    return passthrough ? m : DereverberateFeatures(model, m, p, q);
  };
  const StftConfig config = s.stft();
  const EnergyFloor floor = s.floor();
  const EnhancerKind kind = ParseEnhancer(s.Get<std::string>("/mix/enhancer"));
  auto configs = s.Get<std::vector<int>>("/mix/configs");
  if (configs.empty()) throw ConfigError("mix.configs is empty");
  for (int id : configs) ConfigStreams(id);
  auto grid = s.Get<std::vector<double>>("/mix/grid");
  if (grid.empty()) grid = DefaultLambdaGrid();
  const auto num_subsets = s.Get<size_t>("/mix/subsets");
  if (num_subsets == 0) throw ConfigError("mix.subsets must be >= 1");
  if (rows.size() < num_subsets) {
    throw DataError("mix split has " + std::to_string(rows.size()) + " utterances, fewer than " +
                    std::to_string(num_subsets) + " subsets");
  }

  ReferenceEnhancer enhancer = ReferenceEnhancer::Identity();
  if (kind == EnhancerKind::kCausalFir) {
    std::vector<ManifestRow> adapt;
    for (const auto& r : all) {
      if (r.split == "train") adapt.push_back(r);
    }
    const auto limit = s.Get<size_t>("/mix/adapt_utterances");
    if (adapt.size() > limit) adapt.resize(limit);
    if (adapt.empty()) throw DataError("no train utterances to adapt the enhancer on");
    enhancer = ReferenceEnhancer::FitCausalFir(LoadSpectrogramPairs(s, layout, adapt),
                                               s.Get<int>("/mix/enhancer_order"),
                                               s.ridge("/fir/ridge"), s.jobs());
  }

  std::vector<MixUtterance> utts(rows.size());
  ParallelFor(rows.size(), s.jobs(), [&](size_t i) {
    const Waveform r = LoadWav(layout.reverb_wav(rows[i].id));
    const MelFilterBank bank = s.bank(r.sample_rate);
    const FeatureMatrix clean = LoadFeatures(layout, "clean", rows[i].id);
    const FeatureMatrix reverb = LoadFeatures(layout, "reverb", rows[i].id);
    // The enhancer runs on the STFT before featurization.
    const FeatureMatrix enhanced =
        kind == EnhancerKind::kIdentity
            ? reverb
            : Mvn(LogMel(enhancer.Apply(Stft(r, config)), bank, floor));
    auto align = [&](const FeatureMatrix& m) { return AlignPairs(m, clean).first; };
    MixUtterance& u = utts[i];
    u.id = rows[i].id;
    u.clean = clean;
    u.streams.reverb = align(reverb);
    u.streams.ref_enhanced = align(enhanced);
    u.streams.derev_of_reverb = align(derev(reverb));
    u.streams.derev_of_ref_enhanced = align(derev(enhanced));
  });

  // Subsets: contiguous groups of the split ordered by RT60.
  std::vector<size_t> order(rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return rows[a].rt60 < rows[b].rt60; });
  std::vector<MixSubset> subsets(num_subsets);
  for (size_t k = 0; k < num_subsets; ++k) {
    subsets[k].name = "rt60_" + std::to_string(k + 1);
    const size_t lo = k * rows.size() / num_subsets, hi = (k + 1) * rows.size() / num_subsets;
    for (size_t j = lo; j < hi; ++j) subsets[k].utterances.push_back(utts[order[j]]);
  }

  const fs::path dir = layout.root / "mix";
  fs::create_directories(dir);
  std::ofstream sweep(dir / "lambda_sweep.csv"), summary(dir / "lambda_summary.csv");
  sweep << "subset,config,lambda,mse\n";
  summary << "subset,config,optimal_lambda,mse\n";
  char buf[128];
  for (int id : configs) {
    const auto result = LambdaSweep(id, subsets, grid, s.jobs());
    for (const auto& row : result.rows) {
      std::snprintf(buf, sizeof(buf), ",%d,%.17g,%.17g\n", id, row.lambda, row.mse);
      sweep << row.subset << buf;
    }
    for (const auto& o : result.optima) {
      std::snprintf(buf, sizeof(buf), ",%d,%.17g,%.17g\n", id, o.lambda, o.mse);
      summary << o.subset << buf;
    }
    std::snprintf(buf, sizeof(buf), "average,%d,%.17g,\n", id, result.average_lambda);
    summary << buf;
    Log("mix-sweep: config " + std::to_string(id) + " average lambda " +
        Format("%.4f", result.average_lambda));
  }
}

void Diagnose(const Settings& s, const Layout& layout) {
  const auto rows = SelectSplit(ReadManifest(layout), s.Get<std::string>("/diagnose/split"));
  const auto max_lag = s.Get<size_t>("/diagnose/max_lag");
  const auto from = s.Get<size_t>("/diagnose/tail_from");
  const int p = s.Get<int>("/diagnose/p"), q = s.Get<int>("/diagnose/q");
  const ImageFormat format = ParseImageFormat(s.Get<std::string>("/diagnose/export_format"));
  const auto pairs = LoadSpectrogramPairs(s, layout, rows);
  std::vector<ComplexSpectrogram> clean(pairs.size()), reverb(pairs.size()),
      derev(pairs.size());
  ParallelFor(pairs.size(), s.jobs(), [&](size_t i) {
    clean[i] = pairs[i].clean;
    reverb[i] = pairs[i].reverb.Truncated(pairs[i].clean.frames());
    derev[i] = DereverberateSpectrogram(pairs[i].reverb, pairs[i].clean, p, q,
                                        s.ridge("/fir/ridge"), 1)
                   .estimate;
  });
  const fs::path dir = layout.root / "diagnostics";
  fs::create_directories(dir);
  std::ofstream tails(dir / "tail_mass.csv");
  tails << "stream,domain,from_lag,tail_mass,trajectories,skipped\n";
  const std::pair<const char*, const std::vector<ComplexSpectrogram>*> streams[] = {
      {"clean", &clean}, {"reverb", &reverb}, {"fir_derev", &derev}};
  char buf[128];
  for (const auto& [name, corpus] : streams) {
    for (const AutocorrDomain domain : {AutocorrDomain::kComplex, AutocorrDomain::kMagnitude}) {
      const char* dname = domain == AutocorrDomain::kComplex ? "complex" : "magnitude";
      const auto avg = AverageAutocorrelation(*corpus, max_lag, domain, s.jobs());
      WriteAutocorrCsv(avg.curve,
                       dir / ("autocorr_" + std::string(name) + "_" + dname + ".csv"));
      std::snprintf(buf, sizeof(buf), ",%s,%zu,%.17g,%zu,%zu\n", dname, from,
                    TailMass(avg.curve, from), avg.trajectories, avg.skipped);
      tails << name << buf;
    }
  }
  // Spectrogram and log-Mel images of the first utterance.
  const std::string ext = format == ImageFormat::kPgm ? ".pgm" : ".csv";
  const MelFilterBank bank = s.bank(clean[0].sample_rate());
  for (const auto& [name, corpus] : streams) {
    const ComplexSpectrogram& spec = (*corpus)[0];
    ExportMatrix(SpectrogramDb(spec), dir / ("spectrogram_" + std::string(name) + ext), format);
    ExportMatrix(LogMel(spec, bank, s.floor()), dir / ("logmel_" + std::string(name) + ext),
                 format);
  }
  Log("diagnose: " + std::to_string(rows.size()) + " utterances, artifacts in " + dir.string());
}

// ---------------------------------------------------------------------------
// Argument handling

struct Overrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> workdir;
  std::optional<int> jobs;
  std::vector<std::string> sets;
  std::map<std::string, std::optional<std::string>> strings;
  std::map<std::string, std::optional<double>> numbers;
  std::map<std::string, std::optional<int>> integers;
};

Json ParseValue(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception&) {
    return text;
  }
}

}  // namespace

int RunCli(const std::vector<std::string>& args) {
  CLI::App app{"Non-causal FIR and MLP dereverberation experiments", "ncderev"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NCDEREV_VERSION);
  std::string config_path;
  Overrides ov;

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Settings&, const Layout&);
  };
  const Command commands[] = {
      {"make-corpus", "Generate RIRs and the reverberant corpus with its manifest", MakeCorpus},
      {"featurize", "Extract normalized log-Mel features for every utterance", Featurize},
      {"fit-fir", "Fit per-bin non-causal FIR filters and report the fit errors", FitFir},
      {"sweep-context", "Mean fit error over a grid of (p, q) contexts", SweepContext},
      {"train-mlp", "Train the feature-mapping MLP on the train split", TrainMlp},
      {"derev", "Apply the trained MLP and report feature MSE", Derev},
      {"mix-sweep", "Tune the mixing weight of semi-enhanced features", MixSweep},
      {"diagnose", "Autocorrelation curves, tail masses and spectrogram images", Diagnose},
  };
  // Command-specific flags mapped onto config keys.
  struct Flag {
    const char* command;
    const char* flag;
    const char* key;
    char kind;  // s: string, d: double, i: integer
    const char* help;
  };
  const Flag flags[] = {
      {"make-corpus", "--clean-dir", "/corpus/clean_dir", 's', "Directory of clean 16-bit WAVs"},
      {"make-corpus", "--synth-utterances", "/corpus/synth_utterances", 'i',
       "Generate this many synthetic clean utterances"},
      {"make-corpus", "--num-rirs", "/corpus/num_rirs", 'i', "RIRs to sample (0: one per utterance)"},
      {"make-corpus", "--rt60-min", "/corpus/rt60_min", 'd', "Lower RT60 bound in seconds"},
      {"make-corpus", "--rt60-max", "/corpus/rt60_max", 'd', "Upper RT60 bound in seconds"},
      {"fit-fir", "--p", "/fir/p", 'i', "Causal context in frames"},
      {"fit-fir", "--q", "/fir/q", 'i', "Non-causal context in frames"},
      {"fit-fir", "--split", "/fir/split", 's', "all, train, dev or test"},
      {"sweep-context", "--split", "/sweep/split", 's', "all, train, dev or test"},
      {"train-mlp", "--epochs", "/mlp/max_epochs", 'i', "Maximum number of epochs"},
      {"train-mlp", "--hidden", "/mlp/hidden", 'i', "Hidden layer width"},
      {"train-mlp", "--learning-rate", "/mlp/learning_rate", 'd', "Initial learning rate"},
      {"train-mlp", "--batch-size", "/mlp/batch_size", 'i', "Mini-batch size"},
      {"derev", "--split", "/derev/split", 's', "all, train, dev or test"},
      {"mix-sweep", "--enhancer", "/mix/enhancer", 's', "identity or causal-fir"},
      {"mix-sweep", "--split", "/mix/split", 's', "all, train, dev or test"},
      {"diagnose", "--max-lag", "/diagnose/max_lag", 'i', "Largest autocorrelation lag"},
      {"diagnose", "--split", "/diagnose/split", 's', "all, train, dev or test"},
  };

  std::string chosen;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", ov.seed, "Random seed");
    sub->add_option("--workdir", ov.workdir, "Working directory for all artifacts");
    sub->add_option("--jobs", ov.jobs, "Worker threads");
    sub->add_option("--set", ov.sets, "Override any config key, e.g. mlp.hidden=256");
    for (const Flag& f : flags) {
      if (std::string(f.command) != c.name) continue;
      const std::string id = std::string(f.command) + f.flag;
      switch (f.kind) {
        case 's': sub->add_option(f.flag, ov.strings[id], f.help); break;
        case 'd': sub->add_option(f.flag, ov.numbers[id], f.help); break;
        default: sub->add_option(f.flag, ov.integers[id], f.help); break;
      }
    }
    sub->callback([&chosen, &c] { chosen = c.name; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Json config = DefaultConfig();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      Json file;
      try {
        file = Json::parse(in);
      } catch (const Json::exception& e) {
        throw ConfigError("cannot parse " + config_path + ": " + e.what());
      }
      MergeConfig(config, file);
    }
    for (const Flag& f : flags) {
      const std::string id = std::string(f.command) + f.flag;
      if (id.rfind(chosen + "--", 0) != 0) continue;
      Json& target = config[Json::json_pointer(f.key)];
      if (f.kind == 's' && ov.strings[id]) target = *ov.strings[id];
      if (f.kind == 'd' && ov.numbers[id]) target = *ov.numbers[id];
      if (f.kind == 'i' && ov.integers[id]) target = *ov.integers[id];
    }
    for (const std::string& assignment : ov.sets) {
      const auto eq = assignment.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value: " + assignment);
      std::string key = assignment.substr(0, eq);
      std::replace(key.begin(), key.end(), '.', '/');
      const Json::json_pointer ptr("/" + key);
      if (!config.contains(ptr)) throw ConfigError("unknown config key " + ptr.to_string());
      config[ptr] = ParseValue(assignment.substr(eq + 1));
    }
    if (ov.seed) config["seed"] = *ov.seed;
    if (ov.workdir) config["workdir"] = *ov.workdir;
    if (ov.jobs) config["jobs"] = *ov.jobs;

    const Settings settings(config);
    const Layout layout{settings.workdir()};
    settings.jobs();
    for (const Command& c : commands) {
      if (chosen != c.name) continue;
      fs::create_directories(layout.root);
      c.run(settings, layout);
      WriteRunRecord(layout, chosen, settings);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "ncderev " << chosen << ": configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "ncderev " << chosen << ": data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "ncderev " << chosen << ": numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "ncderev " << chosen << ": data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "ncderev " << chosen << ": " << e.what() << '\n';
    return 1;
  }
}

int RunCli(int argc, const char* const* argv) {
  return RunCli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace ncderev
