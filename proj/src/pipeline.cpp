// Copyright 2026 The seld Authors.
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


#include "seld/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "seld/common.hpp"
#include "seld/eval.hpp"
#include "seld/features.hpp"

namespace seld::pipeline {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using features::NegativeKind;

void Report(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

std::string Num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string Opt(const std::optional<double>& v) { return v ? Num(*v) : std::string(); }

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
  if (!f) Fail(ErrorCode::kIo, "failed writing " + path.string());
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    json j;
    f >> j;
    return j;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIo, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::string LayoutHash() {
  std::string all;
  for (const auto& n : features::DefaultLayout().names) all += n + "\n";
  return HexHash(Fnv1a64(all));
}

fs::path ModelPath(const fs::path& out, lasso::ModelKind kind, const std::string& cls) {
  return out / "models" / (std::string(lasso::KindName(kind)) + "_" + cls + ".json");
}

// Geometry id of a bound scene: the id without its "-<class>" suffix.
std::string GeometryId(const scene::SceneConfig& s) {
  const std::string suffix = "-" + s.Target().sound.class_id;
  if (s.id.size() > suffix.size() && s.id.compare(s.id.size() - suffix.size(), suffix.size(), suffix) == 0)
    return s.id.substr(0, s.id.size() - suffix.size());
  return s.id;
}

bool AllActive(const features::ActiveSet& a) {
  return std::all_of(a.source_active.begin(), a.source_active.end(), [](bool b) { return b; });
}

// Per scene training samples, kept separate so scenes can run in parallel.
struct SceneSamples {
  std::vector<std::vector<float>> fs_rows;
  std::map<std::string, std::vector<int>> fs_labels;  // 0: excluded
  std::vector<std::vector<float>> seg_rows;
  std::map<std::string, std::vector<int>> seg_labels;
  std::map<std::string, std::vector<NegativeKind>> seg_kinds;
};

SceneSamples TrainingSamples(const AnalyzedScene& s, const seg::ObservationModel& model,
                             const std::vector<std::string>& classes) {
  SceneSamples out;
  std::map<std::string, ClassTruth> truth;
  for (const auto& c : classes) truth[c] = TruthForClass(s, c);
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    const auto& blk = s.blocks[b];
    out.fs_rows.push_back(features::AssembleFeatureVector(features::ExtractBlock(s.rep, blk)));
    std::map<std::string, features::BlockLabel> label;
    for (const auto& c : classes) {
      label[c] = features::LabelBlock(blk.start_s, blk.end_s, truth[c].events);
      out.fs_labels[c].push_back(label[c] == features::BlockLabel::kPositive   ? 1
                                 : label[c] == features::BlockLabel::kNegative ? -1
                                                                               : 0);
    }
    const auto active = ActiveStreams(s, b);
    if (active.count() == 0) continue;
    auto masks = seg::ComputeSoftmasks(model, s.rep.cues, blk.frame_begin, blk.frame_end,
                                       active.stream_azimuths);
    for (const auto& m : masks)
      out.seg_rows.push_back(features::AssembleFeatureVector(features::ExtractBlock(s.rep, blk, m.weights)));
    for (const auto& c : classes) {
      if (label[c] == features::BlockLabel::kExcluded) {
        for (std::size_t i = 0; i < masks.size(); ++i) {
          out.seg_labels[c].push_back(0);
          out.seg_kinds[c].push_back(NegativeKind::kNone);
        }
        continue;
      }
      auto sl = features::LabelStreamSamples(label[c], active.stream_azimuths, truth[c].azimuth_deg);
      out.seg_labels[c].insert(out.seg_labels[c].end(), sl.labels.begin(), sl.labels.end());
      out.seg_kinds[c].insert(out.seg_kinds[c].end(), sl.kinds.begin(), sl.kinds.end());
    }
  }
  return out;
}

struct TrainingRows {
  lasso::SampleMatrix x;
  std::vector<int> y;
  std::vector<NegativeKind> kinds;
  std::vector<int> source_counts;
  std::vector<std::string> sample_class;
  std::vector<std::string> sample_file;
};

lasso::DetectionModel TrainDetector(const TrainingRows& all, const ExperimentConfig& cfg,
                                    lasso::ModelKind kind, const std::string& cls,
                                    const Progress& progress) {
  const auto keep = lasso::SubsampleByFile(all.sample_file, cfg.max_train_samples,
                                           DeriveSeed(cfg.seeds.Get("subsample"), Fnv1a64(cls)));
  TrainingRows r;
  for (std::size_t i : keep) {
    r.x.AppendRow(all.x.Row(i));
    r.y.push_back(all.y[i]);
    r.kinds.push_back(all.kinds[i]);
    r.source_counts.push_back(all.source_counts[i]);
    r.sample_class.push_back(all.sample_class[i]);
    r.sample_file.push_back(all.sample_file[i]);
  }
  const auto w = lasso::ComputeSampleWeights(r.y, r.kinds, r.source_counts, kind);
  const auto plan = lasso::BuildCvPlan(r.sample_class, r.sample_file, cfg.cv_folds, cfg.seeds.Get("cv"));
  const double lmax = lasso::LambdaMax(r.x, r.y, w);
  const auto lambdas = lasso::LambdaGrid(lmax, cfg.lambda_count, cfg.lambda_ratio);
  lasso::FitOptions opt;
  opt.early_stop = cfg.early_stop;
  const auto metric = kind == lasso::ModelKind::kSegregated ? lasso::CvMetric::kBacSw : lasso::CvMetric::kBac;
  auto cv = lasso::SelectLambdaCv(r.x, r.y, w, r.kinds, plan, lambdas, metric, opt, cfg.threads);
  cv.model.target_class = cls;
  cv.model.kind = kind;
  cv.model.layout_hash = LayoutHash();
  cv.model.config_hash = cfg.Hash();
  Report(progress, std::string(lasso::KindName(kind)) + " " + cls + ": " + std::to_string(r.x.rows) +
                       " samples, lambda " + Num(cv.model.lambda) + ", " +
                       std::to_string(cv.model.NonZero()) + " nonzero, cv " +
                       Num(cv.mean_score[cv.best_index]));
  return std::move(cv.model);
}

double Percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const std::vector<std::string>& MetricColumns() {
  static const std::vector<std::string> cols = {
      "sens", "spec_pp", "spec_npp", "spec_sw", "bac_sw", "dr_tw", "spec_tw", "bac_tw",
      "dr_fs", "spec_fs", "bac_fs", "bapr", "nep", "azm_err"};
  return cols;
}

}  // namespace

std::uint64_t Seeds::Get(const std::string& name) const {
  auto it = overrides.find(name);
  if (it != overrides.end()) return it->second;
  return DeriveSeed(master, Fnv1a64(name));
}

const std::vector<std::string>& Seeds::Names() {
  static const std::vector<std::string> names = {"catalog", "split",  "train_suite", "test_suite",
                                                 "binding", "glm",    "cv",          "perturb",
                                                 "subsample"};
  return names;
}

ExperimentConfig ExperimentConfig::FromJson(const std::string& text) {
  ExperimentConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kConfig, "config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dataset") c.dataset = v.get<std::string>();
      else if (key == "wav_root") c.wav_root = v.get<std::string>();
      else if (key == "target_classes") c.target_classes = v.get<std::vector<std::string>>();
      else if (key == "files_per_class") c.files_per_class = v.get<std::size_t>();
      else if (key == "train_fraction") c.train_fraction = v.get<double>();
      else if (key == "head") c.head = v.get<std::string>();
      else if (key == "head_radius_m") c.head_radius_m = v.get<double>();
      else if (key == "ir_path") c.ir_path = v.get<std::string>();
      else if (key == "scene_duration_s") c.scene_duration_s = v.get<double>();
      else if (key == "train_geometries") c.train_geometries = v.get<std::size_t>();
      else if (key == "test_geometries") c.test_geometries = v.get<std::size_t>();
      else if (key == "diffuse_snr_db") {
        if (!v.is_null()) c.diffuse_snr_db = v.get<double>();
      } else if (key == "bic_candidates") c.bic_candidates = v.get<std::vector<int>>();
      else if (key == "glm_stimulus_s") c.glm_stimulus_s = v.get<double>();
      else if (key == "lambda_count") c.lambda_count = v.get<std::size_t>();
      else if (key == "lambda_ratio") c.lambda_ratio = v.get<double>();
      else if (key == "cv_folds") c.cv_folds = v.get<std::size_t>();
      else if (key == "max_train_samples") c.max_train_samples = v.get<std::size_t>();
      else if (key == "early_stop") c.early_stop = v.get<bool>();
      else if (key == "azimuth_sigmas") c.azimuth_sigmas = v.get<std::vector<double>>();
      else if (key == "count_deltas") c.count_deltas = v.get<std::vector<int>>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "threads") c.threads = v.get<int>();
      else if (key == "seeds") {
        for (const auto& [name, sv] : v.items()) {
          if (name == "master") {
            c.seeds.master = sv.get<std::uint64_t>();
            continue;
          }
          const auto& names = Seeds::Names();
          if (std::find(names.begin(), names.end(), name) == names.end())
            Fail(ErrorCode::kConfig, "unknown seed name: " + name);
          c.seeds.overrides[name] = sv.get<std::uint64_t>();
        }
      } else {
        Fail(ErrorCode::kConfig, "unknown config key: " + key);
      }
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("config value has the wrong type: ") + e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const fs::path& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return FromJson(ss.str());
}

std::string ExperimentConfig::ToJson() const {
  json j;
  j["dataset"] = dataset;
  j["wav_root"] = wav_root;
  j["target_classes"] = target_classes;
  j["files_per_class"] = files_per_class;
  j["train_fraction"] = train_fraction;
  j["head"] = head;
  j["head_radius_m"] = head_radius_m;
  j["ir_path"] = ir_path;
  j["scene_duration_s"] = scene_duration_s;
  j["train_geometries"] = train_geometries;
  j["test_geometries"] = test_geometries;
  j["diffuse_snr_db"] = diffuse_snr_db ? json(*diffuse_snr_db) : json(nullptr);
  j["bic_candidates"] = bic_candidates;
  j["glm_stimulus_s"] = glm_stimulus_s;
  j["lambda_count"] = lambda_count;
  j["lambda_ratio"] = lambda_ratio;
  j["cv_folds"] = cv_folds;
  j["max_train_samples"] = max_train_samples;
  j["early_stop"] = early_stop;
  j["azimuth_sigmas"] = azimuth_sigmas;
  j["count_deltas"] = count_deltas;
  json s;
  s["master"] = seeds.master;
  for (const auto& [k, v] : seeds.overrides) s[k] = v;
  j["seeds"] = s;
  j["output_dir"] = output_dir;
  j["threads"] = threads;
  return j.dump(2);
}

void ExperimentConfig::Validate() const {
  auto bad = [](const std::string& why) { Fail(ErrorCode::kConfig, why); };
  if (dataset != "synthetic" && dataset != "wav") bad("dataset must be \"synthetic\" or \"wav\"");
  if (dataset == "wav" && wav_root.empty()) bad("wav dataset needs wav_root");
  if (dataset == "synthetic") {
    if (target_classes.empty()) bad("no target classes");
    for (const auto& c : target_classes) {
      if (!scene::IsSyntheticClass(c) || c == scene::kGeneral) bad("not a synthetic target class: " + c);
    }
    if (files_per_class < 2) bad("files_per_class must be at least 2");
  }
  std::set<std::string> uniq(target_classes.begin(), target_classes.end());
  if (uniq.size() != target_classes.size()) bad("duplicate target classes");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) bad("train_fraction must be in (0, 1)");
  if (head != "parametric" && head != "ir") bad("head must be \"parametric\" or \"ir\"");
  if (head == "ir" && ir_path.empty()) bad("ir head needs ir_path");
  if (!(head_radius_m > 0.0)) bad("head_radius_m must be positive");
  if (!(scene_duration_s >= features::kBlockLength)) bad("scene_duration_s must cover one block");
  if (train_geometries == 0) bad("train_geometries must be positive");
  if (diffuse_snr_db && std::isnan(*diffuse_snr_db)) bad("diffuse_snr_db must not be NaN");
  if (bic_candidates.empty()) bad("bic_candidates is empty");
  for (int n : bic_candidates)
    if (n < 1) bad("model orders must be >= 1");
  if (!(glm_stimulus_s >= kFrameLengthSeconds)) bad("glm_stimulus_s too short");
  if (lambda_count == 0) bad("lambda_count must be positive");
  if (!(lambda_ratio > 0.0 && lambda_ratio < 1.0)) bad("lambda_ratio must be in (0, 1)");
  if (cv_folds < 2) bad("cv_folds must be at least 2");
  if (max_train_samples == 0) bad("max_train_samples must be positive");
  for (double s : azimuth_sigmas)
    if (!(s >= 0.0) || !std::isfinite(s)) bad("azimuth sigmas must be finite and >= 0");
  if (output_dir.empty()) bad("output_dir is empty");
}

std::string ExperimentConfig::Hash() const {
  json j = json::parse(ToJson());
  j.erase("output_dir");
  j.erase("threads");
  // Seeds enter through their resolved values.
  json s;
  s["master"] = seeds.master;
  for (const auto& n : Seeds::Names()) s[n] = seeds.Get(n);
  j["seeds"] = s;
  return HexHash(Fnv1a64(std::string(kPipelineVersion) + "\n" + LayoutHash() + "\n" + j.dump()));
}

scene::HeadModel ExperimentConfig::MakeHead() const {
  if (head == "ir") return scene::HeadModel::LoadImpulseResponses(ir_path);
  return scene::HeadModel::Parametric(head_radius_m);
}

std::vector<perturb::PerturbationSpec> ExperimentConfig::PerturbationGrid() const {
  std::vector<perturb::PerturbationSpec> grid;
  const std::uint64_t seed = seeds.Get("perturb");
  std::uint64_t i = 0;
  bool has_identity = false;
  for (double sigma : azimuth_sigmas) {
    perturb::PerturbationSpec p;
    p.kind = sigma == 0.0 ? perturb::Kind::kNone : perturb::Kind::kAzimuth;
    has_identity |= sigma == 0.0;
    p.azimuth_sigma_deg = sigma;
    p.rng_seed = DeriveSeed(seed, i++);
    grid.push_back(p);
  }
  if (!has_identity) {
    perturb::PerturbationSpec p;
    p.rng_seed = DeriveSeed(seed, i++);
    grid.insert(grid.begin(), p);
  }
  for (int d : count_deltas) {
    perturb::PerturbationSpec p;
    p.kind = perturb::Kind::kCount;
    p.count_delta = d;
    p.rng_seed = DeriveSeed(seed, i++);
    grid.push_back(p);
  }
  return grid;
}

DatasetSplit PrepareDataset(const ExperimentConfig& cfg) {
  scene::SoundPool pool;
  if (cfg.dataset == "synthetic") {
    pool = scene::SyntheticCatalog(cfg.target_classes, cfg.files_per_class, cfg.seeds.Get("catalog"));
  } else {
    pool = scene::LoadWavDataset(cfg.wav_root);
    if (!cfg.target_classes.empty()) {
      for (const auto& c : cfg.target_classes)
        if (!pool.files.count(c)) Fail(ErrorCode::kIo, "dataset has no files for class " + c);
      pool.target_classes = cfg.target_classes;
    }
  }
  auto [train, test] = scene::SplitPool(pool, cfg.train_fraction, cfg.seeds.Get("split"));
  std::set<std::string> train_files;
  for (const auto& [c, files] : train.files)
    for (const auto& f : files) train_files.insert(f.FileId());
  for (const auto& [c, files] : test.files)
    for (const auto& f : files)
      if (train_files.count(f.FileId()))
        Fail(ErrorCode::kConfig, "file " + f.FileId() + " is in both train and test sets");
  return {train, test};
}

SuitePair BuildSuites(const ExperimentConfig& cfg, const DatasetSplit& split) {
  scene::SuiteOptions opt;
  opt.train_scenes = cfg.train_geometries;
  opt.duration_s = cfg.scene_duration_s;
  opt.target_classes = split.train.target_classes;
  SuitePair out;
  auto train = scene::BuildSceneSuite(scene::SuiteKind::kTrain, cfg.seeds.Get("train_suite"), opt);
  out.train = scene::BindSounds(train, split.train, true, cfg.seeds.Get("binding"));
  auto test = scene::BuildSceneSuite(scene::SuiteKind::kTest, cfg.seeds.Get("test_suite"), opt);
  if (cfg.test_geometries > 0 && cfg.test_geometries < test.size())
    test = scene::SelectSubset(test, cfg.test_geometries, cfg.seeds.Get("test_suite"));
  out.test = scene::BindSounds(test, split.test, true, DeriveSeed(cfg.seeds.Get("binding"), 1));
  if (cfg.diffuse_snr_db)
    for (auto& s : out.test) s.diffuse_snr_db = cfg.diffuse_snr_db;
  return out;
}

SegregationFit FitSegregation(const ExperimentConfig& cfg, const Progress& progress) {
  const auto head = cfg.MakeHead();
  Report(progress, "rendering observation-model training cues");
  auto cues = seg::RenderTrainingCues(head, seg::DefaultTrainingGrid(), cfg.seeds.Get("glm"),
                                      cfg.glm_stimulus_s, cfg.threads);
  SegregationFit fit;
  fit.selection = seg::SelectModelOrder(cues, cfg.bic_candidates);
  fit.model = seg::FitObservationModel(cues, fit.selection.order);
  Report(progress, "observation model order " + std::to_string(fit.selection.order));
  return fit;
}

AnalyzedScene AnalyzeScene(const scene::SceneConfig& cfg, const scene::HeadModel& head) {
  AnalyzedScene s;
  s.config = cfg;
  s.mix = scene::MixScene(cfg, head);
  s.rep = afe::Analyze(s.mix.signal.left, s.mix.signal.right);
  s.blocks = features::SegmentBlocks(s.mix.signal.duration_s(), s.rep.num_frames);
  s.block_energy = features::BlockEnergies(s.blocks, s.mix.source_frame_power);
  for (const auto& e : s.block_energy) s.max_energy.push_back(e.empty() ? 0.0 : *std::max_element(e.begin(), e.end()));
  return s;
}

features::ActiveSet ActiveStreams(const AnalyzedScene& s, std::size_t block) {
  std::vector<double> energy, az;
  for (std::size_t i = 0; i < s.config.sources.size(); ++i) {
    energy.push_back(s.block_energy[i].at(block));
    az.push_back(s.config.sources[i].azimuth_deg);
  }
  return features::DetectActiveSources(energy, s.max_energy, az);
}

ClassTruth TruthForClass(const AnalyzedScene& s, const std::string& class_id) {
  ClassTruth t;
  for (const auto& a : s.mix.signal.annotations) {
    if (a.class_id != class_id) continue;
    if (!t.present) t.azimuth_deg = a.azimuth_deg;
    t.present = true;
    t.events.insert(t.events.end(), a.events.begin(), a.events.end());
  }
  return t;
}

TrainSummary RunTrain(const ExperimentConfig& cfg, const Progress& progress) {
  cfg.Validate();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out / "models");
  const auto split = PrepareDataset(cfg);
  const auto suites = BuildSuites(cfg, split);
  const auto head = cfg.MakeHead();
  TrainSummary summary;
  summary.config_hash = cfg.Hash();
  summary.segregation = FitSegregation(cfg, progress);
  seg::SaveModel(out / "segregation_model.json", summary.segregation.model);
  scene::SaveSuite(out / "train_suite.json", suites.train);

  const auto& classes = split.train.target_classes;
  std::vector<SceneSamples> per_scene(suites.train.size());
  Report(progress, "rendering " + std::to_string(suites.train.size()) + " training scenes");
  ParallelFor(suites.train.size(), cfg.threads, [&](std::size_t i) {
    const AnalyzedScene s = AnalyzeScene(suites.train[i], head);
    per_scene[i] = TrainingSamples(s, summary.segregation.model, classes);
  });

  json models = json::array();
  for (const auto kind : {lasso::ModelKind::kSegregated, lasso::ModelKind::kFullstream}) {
    const bool segd = kind == lasso::ModelKind::kSegregated;
    for (const auto& cls : classes) {
      TrainingRows rows;
      for (std::size_t i = 0; i < per_scene.size(); ++i) {
        const auto& sc = suites.train[i];
        const auto& ps = per_scene[i];
        const auto& xs = segd ? ps.seg_rows : ps.fs_rows;
        const auto& ls = segd ? ps.seg_labels.at(cls) : ps.fs_labels.at(cls);
        for (std::size_t k = 0; k < xs.size(); ++k) {
          if (ls[k] == 0) continue;
          rows.x.AppendRow(xs[k]);
          rows.y.push_back(ls[k]);
          rows.kinds.push_back(segd ? ps.seg_kinds.at(cls)[k] : NegativeKind::kNone);
          rows.source_counts.push_back(static_cast<int>(sc.sources.size()));
          rows.sample_class.push_back(sc.Target().sound.class_id);
          rows.sample_file.push_back(sc.Target().sound.FileId());
        }
      }
      (segd ? summary.segregated_samples : summary.fullstream_samples) += rows.x.rows;
      auto model = TrainDetector(rows, cfg, kind, cls, progress);
      const fs::path path = ModelPath(out, kind, cls);
      lasso::SaveModel(path, model);
      models.push_back({{"class", cls},
                        {"kind", lasso::KindName(kind)},
                        {"file", fs::relative(path, out).string()},
                        {"samples", rows.x.rows},
                        {"lambda", model.lambda},
                        {"nonzero", model.NonZero()}});
      (segd ? summary.segregated : summary.fullstream)[cls] = std::move(model);
    }
  }

  json manifest;
  manifest["format"] = "seld-manifest/1";
  manifest["pipeline_version"] = kPipelineVersion;
  manifest["config_hash"] = summary.config_hash;
  // Runtime-only settings are left out so the manifest depends on results alone.
  json stored = json::parse(cfg.ToJson());
  stored.erase("output_dir");
  stored.erase("threads");
  manifest["config"] = stored;
  manifest["layout"] = {{"dimension", features::DefaultLayout().size()}, {"hash", LayoutHash()}};
  manifest["segregation"] = {{"file", "segregation_model.json"},
                             {"order", summary.segregation.selection.order},
                             {"candidates", summary.segregation.selection.candidates},
                             {"bic", summary.segregation.selection.bic}};
  json sp;
  for (const auto& [name, pool] : {std::pair{"train", &split.train}, std::pair{"test", &split.test}}) {
    json files = json::object();
    for (const auto& [cls, list] : pool->files) {
      json arr = json::array();
      for (const auto& f : list) arr.push_back(f.FileId());
      files[cls] = arr;
    }
    sp[name] = files;
  }
  manifest["split"] = sp;
  manifest["train_scenes"] = suites.train.size();
  manifest["models"] = models;
  WriteText(out / "manifest.json", manifest.dump(1) + "\n");
  Report(progress, "training finished");
  return summary;
}

TestSummary RunTest(const ExperimentConfig& cfg, const Progress& progress) {
  cfg.Validate();
  const fs::path out = cfg.output_dir;
  const std::string hash = cfg.Hash();
  const json manifest = ReadJsonFile(out / "manifest.json");
  if (manifest.value("config_hash", std::string()) != hash)
    Fail(ErrorCode::kMismatch, "models in " + out.string() + " were trained with a different config");
  const auto split = PrepareDataset(cfg);
  const auto suites = BuildSuites(cfg, split);
  const auto head = cfg.MakeHead();
  const auto classes = split.train.target_classes;
  const auto obs = seg::LoadModel(out / "segregation_model.json");
  std::map<std::string, lasso::DetectionModel> segm, fsm;
  for (const auto& c : classes) {
    segm[c] = lasso::LoadModel(ModelPath(out, lasso::ModelKind::kSegregated, c));
    fsm[c] = lasso::LoadModel(ModelPath(out, lasso::ModelKind::kFullstream, c));
    for (const auto* m : {&segm[c], &fsm[c]}) {
      if (m->config_hash != hash) Fail(ErrorCode::kMismatch, "model config hash mismatch for class " + c);
      if (m->layout_hash != LayoutHash()) Fail(ErrorCode::kMismatch, "model layout mismatch for class " + c);
    }
  }
  const auto grid = cfg.PerturbationGrid();
  scene::SaveSuite(out / "test_suite.json", suites.test);
  Report(progress, "testing " + std::to_string(suites.test.size()) + " scenes x " +
                       std::to_string(grid.size()) + " perturbations");

  std::vector<std::vector<std::string>> scene_rows(suites.test.size());
  ParallelFor(suites.test.size(), cfg.threads, [&](std::size_t si) {
    const AnalyzedScene s = AnalyzeScene(suites.test[si], head);
    const auto& sc = s.config;
    std::vector<std::size_t> valid;
    std::vector<std::vector<double>> gt;
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      auto a = ActiveStreams(s, b);
      if (!AllActive(a)) continue;
      valid.push_back(b);
      gt.push_back(a.stream_azimuths);
    }
    std::map<std::string, ClassTruth> truth;
    std::map<std::string, std::vector<features::BlockLabel>> labels;
    std::map<std::string, std::vector<int>> fs_pred;
    for (const auto& c : classes) truth[c] = TruthForClass(s, c);
    for (std::size_t v = 0; v < valid.size(); ++v) {
      const auto& blk = s.blocks[valid[v]];
      const auto x = features::AssembleFeatureVector(features::ExtractBlock(s.rep, blk));
      for (const auto& c : classes) {
        labels[c].push_back(features::LabelBlock(blk.start_s, blk.end_s, truth[c].events));
        fs_pred[c].push_back(fsm[c].Predict(x));
      }
    }
    const std::string target_class = sc.Target().sound.class_id;
    std::string snr = sc.snr_db.empty() ? "" : Num(sc.snr_db[0]);
    for (const auto& p : grid) {
      std::vector<std::vector<double>> streams(valid.size());
      std::map<std::string, std::vector<std::vector<int>>> seg_pred;
      for (std::size_t v = 0; v < valid.size(); ++v) {
        const auto& blk = s.blocks[valid[v]];
        streams[v] = perturb::Apply(p, gt[v], DeriveSeed(sc.rng_seed, blk.index));
        auto masks = seg::ComputeSoftmasks(obs, s.rep.cues, blk.frame_begin, blk.frame_end, streams[v]);
        for (const auto& c : classes) seg_pred[c].emplace_back();
        for (const auto& m : masks) {
          const auto x = features::AssembleFeatureVector(features::ExtractBlock(s.rep, blk, m.weights));
          for (const auto& c : classes) seg_pred[c].back().push_back(segm[c].Predict(x));
        }
      }
      for (const auto& c : classes) {
        eval::StreamConfusion conf;
        std::vector<std::vector<int>> tw_pred;
        std::vector<int> truth_blocks, fs_p;
        std::vector<eval::LocalizedBlock> loc;
        for (std::size_t v = 0; v < valid.size(); ++v) {
          const auto lab = labels[c][v];
          if (lab == features::BlockLabel::kExcluded) continue;
          const int t = lab == features::BlockLabel::kPositive ? 1 : -1;
          auto sl = features::LabelStreamSamples(lab, streams[v], truth[c].azimuth_deg);
          for (std::size_t k = 0; k < streams[v].size(); ++k)
            conf.Add(sl.labels[k], seg_pred[c][v][k], sl.kinds[k]);
          tw_pred.push_back(seg_pred[c][v]);
          truth_blocks.push_back(t);
          fs_p.push_back(fs_pred[c][v]);
          loc.push_back({streams[v], seg_pred[c][v], truth[c].azimuth_deg, t > 0});
        }
        const auto sw = eval::ComputeStreamwise(conf);
        const auto twc = eval::TimewiseAggregate(tw_pred, truth_blocks);
        const auto tw = eval::ComputeDetection(twc);
        const auto fsc = eval::FullstreamCounts(fs_p, truth_blocks);
        const auto fsd = eval::ComputeDetection(fsc);
        const auto ls = eval::ComputeLocalized(loc);
        std::string role = !truth[c].present ? "absent" : (c == target_class ? "target" : "distractor");
        const std::size_t positives = static_cast<std::size_t>(
            std::count(truth_blocks.begin(), truth_blocks.end(), 1));
        std::vector<std::string> f = {
            sc.id, GeometryId(sc), c, role, target_class, std::to_string(sc.sources.size()),
            sc.mode ? std::string(scene::ModeName(*sc.mode)) : "", snr, Num(sc.azimuth_gap_deg),
            sc.target_position, Num(sc.Target().azimuth_deg),
            truth[c].present ? Num(truth[c].azimuth_deg) : "", p.Label(), Num(p.Value()),
            std::to_string(truth_blocks.size()), std::to_string(positives), Num(conf.tp),
            Num(conf.fn), Num(conf.tn_pp), Num(conf.fp_pp), Num(conf.tn_npp), Num(conf.fp_npp),
            Opt(sw.sens), Opt(sw.spec_pp), Opt(sw.spec_npp), Opt(sw.spec_sw), Opt(sw.bac_sw),
            Num(twc.tp), Num(twc.fn), Num(twc.tn), Num(twc.fp), Opt(tw.dr), Opt(tw.spec),
            Opt(tw.bac), Num(fsc.tp), Num(fsc.fn), Num(fsc.tn), Num(fsc.fp), Opt(fsd.dr),
            Opt(fsd.spec), Opt(fsd.bac), std::to_string(ls.blocks), Opt(ls.bapr), Opt(ls.nep),
            Opt(ls.azm_err)};
        for (std::size_t b = 0; b < eval::kPlacementBins; ++b) f.push_back(Opt(ls.Placement(b)));
        std::string line;
        for (std::size_t k = 0; k < f.size(); ++k) line += (k ? "," : "") + f[k];
        scene_rows[si].push_back(line);
      }
    }
    Report(progress, "tested " + sc.id);
  });

  std::string header =
      "scene_id,geometry_id,class,role,target_class,n_sources,mode,snr_db,gap_deg,"
      "target_position,target_azimuth_deg,class_azimuth_deg,perturbation,perturbation_value,"
      "blocks,positive_blocks,tp,fn,tn_pp,fp_pp,tn_npp,fp_npp,sens,spec_pp,spec_npp,spec_sw,"
      "bac_sw,tp_tw,fn_tw,tn_tw,fp_tw,dr_tw,spec_tw,bac_tw,tp_fs,fn_fs,tn_fs,fp_fs,dr_fs,"
      "spec_fs,bac_fs,loc_blocks,bapr,nep,azm_err";
  for (std::size_t b = 0; b < eval::kPlacementBins; ++b) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), ",place_%03zu", b * 10);
    header += buf;
  }
  std::string text = "# config_hash=" + hash + " pipeline=" + std::string(kPipelineVersion) + "\n" + header + "\n";
  TestSummary summary;
  for (const auto& rows : scene_rows)
    for (const auto& r : rows) {
      text += r + "\n";
      ++summary.rows;
    }
  summary.metrics_csv = out / "metrics.csv";
  summary.scenes = suites.test.size();
  WriteText(summary.metrics_csv, text);
  Report(progress, "wrote " + summary.metrics_csv.string());
  return summary;
}

std::size_t MetricTable::Column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) Fail(ErrorCode::kMismatch, "metrics table has no column " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

double MetricTable::Number(std::size_t row, const std::string& column) const {
  const std::string& t = Text(row, column);
  if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(t);
}

const std::string& MetricTable::Text(std::size_t row, const std::string& column) const {
  return rows.at(row).at(Column(column));
}

MetricTable ReadMetrics(const std::vector<fs::path>& csvs) {
  if (csvs.empty()) Fail(ErrorCode::kInvalidArgument, "no metrics files given");
  MetricTable t;
  for (const auto& path : csvs) {
    std::ifstream f(path);
    if (!f) Fail(ErrorCode::kIo, "cannot open " + path.string());
    std::string line, hash;
    std::vector<std::string> cols;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        auto pos = line.find("config_hash=");
        if (pos != std::string::npos) hash = line.substr(pos + 12, line.find(' ', pos) - pos - 12);
        continue;
      }
      if (cols.empty()) {
        cols = SplitCsv(line);
        continue;
      }
      auto row = SplitCsv(line);
      if (row.size() != cols.size()) Fail(ErrorCode::kIo, "ragged row in " + path.string());
      t.rows.push_back(std::move(row));
    }
    if (hash.empty()) Fail(ErrorCode::kIo, path.string() + " carries no config hash");
    if (t.columns.empty()) {
      t.columns = cols;
      t.config_hash = hash;
    } else if (cols != t.columns || hash != t.config_hash) {
      Fail(ErrorCode::kMismatch, "metrics files come from different configs");
    }
  }
  if (t.rows.empty()) Fail(ErrorCode::kInvalidArgument, "metrics files contain no rows");
  return t;
}

ReportSummary EmitReport(const std::vector<fs::path>& csvs, const fs::path& out_dir) {
  const MetricTable t = ReadMetrics(csvs);
  fs::create_directories(out_dir);
  // Group key -> row indices over all roles. Localized statistics and
  // placement only count target-role rows.
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  auto add = [&](const std::string& g, const std::string& v, std::size_t row) {
    auto key = std::make_pair(g, v);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(row);
  };
  auto localized = [](const std::string& m) { return m == "bapr" || m == "nep" || m == "azm_err"; };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string pert = t.Text(r, "perturbation") + "=" + t.Text(r, "perturbation_value");
    add("perturbation", pert, r);
    add("perturbation_x_mode", pert + "|" + t.Text(r, "mode"), r);
    if (t.Text(r, "perturbation") != "none") continue;
    add("all", "all", r);
    add("n_sources", t.Text(r, "n_sources"), r);
    add("snr_db", t.Text(r, "snr_db").empty() ? "single" : t.Text(r, "snr_db"), r);
    add("mode", t.Text(r, "mode"), r);
  }
  std::string summary = "# config_hash=" + t.config_hash + "\ngroup,value,metric,n,excluded,mean,p25,p75,skew_flag\n";
  std::string placement = "# config_hash=" + t.config_hash + "\ngroup,value,bin_lo_deg,n,mean,p25,p75\n";
  for (const auto& key : keys) {
    const auto& rows = groups[key];
    for (const auto& m : MetricColumns()) {
      std::vector<double> v;
      std::size_t considered = 0;
      for (std::size_t r : rows) {
        if (localized(m) && t.Text(r, "role") != "target") continue;
        ++considered;
        double x = t.Number(r, m);
        if (std::isfinite(x)) v.push_back(x);
      }
      const std::size_t excluded = considered - v.size();
      if (v.empty()) {
        summary += key.first + "," + key.second + "," + m + ",0," + std::to_string(excluded) + ",,,,\n";
        continue;
      }
      double mean = 0.0;
      for (double x : v) mean += x / v.size();
      const double p25 = Percentile(v, 0.25), p75 = Percentile(v, 0.75);
      const bool skew = mean < p25 || mean > p75;
      summary += key.first + "," + key.second + "," + m + "," + std::to_string(v.size()) + "," +
                 std::to_string(excluded) + "," + Num(mean) + "," + Num(p25) + "," + Num(p75) + "," +
                 (skew ? "1" : "0") + "\n";
    }
    for (std::size_t b = 0; b < eval::kPlacementBins; ++b) {
      char col[24];
      std::snprintf(col, sizeof(col), "place_%03zu", b * 10);
      std::vector<double> v;
      for (std::size_t r : rows) {
        if (t.Text(r, "role") != "target") continue;
        double x = t.Number(r, col);
        if (std::isfinite(x)) v.push_back(x);
      }
      if (v.empty()) continue;
      double mean = 0.0;
      for (double x : v) mean += x / v.size();
      placement += key.first + "," + key.second + "," + std::to_string(b * 10) + "," +
                   std::to_string(v.size()) + "," + Num(mean) + "," + Num(Percentile(v, 0.25)) + "," +
                   Num(Percentile(v, 0.75)) + "\n";
    }
  }
  ReportSummary rs;
  rs.summary_csv = out_dir / "summary.csv";
  rs.placement_csv = out_dir / "placement.csv";
  rs.groups = keys.size();
  WriteText(rs.summary_csv, summary);
  WriteText(rs.placement_csv, placement);
  return rs;
}

std::vector<fs::path> WriteSuites(const ExperimentConfig& cfg) {
  cfg.Validate();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  const auto suites = BuildSuites(cfg, PrepareDataset(cfg));
  std::vector<fs::path> paths = {out / "train_suite.json", out / "test_suite.json"};
  scene::SaveSuite(paths[0], suites.train);
  scene::SaveSuite(paths[1], suites.test);
  return paths;
}

}  // namespace seld::pipeline
