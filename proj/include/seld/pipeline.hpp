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


// End-to-end experiments: configuration, training, testing under the
// perturbation grid, and report aggregation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seld/lasso.hpp"
#include "seld/perturb.hpp"
#include "seld/scene_sim.hpp"
#include "seld/segregation.hpp"

namespace seld::pipeline {

inline constexpr const char* kPipelineVersion = "seld-pipeline/1";

struct Seeds {
  std::uint64_t master = 1;
  // Unset entries derive from `master`.
  std::map<std::string, std::uint64_t> overrides;

  std::uint64_t Get(const std::string& name) const;
  static const std::vector<std::string>& Names();
};

struct ExperimentConfig {
  // Dataset: "synthetic" catalog or a "wav" directory tree.
  std::string dataset = "synthetic";
  std::string wav_root;
  std::vector<std::string> target_classes = scene::SyntheticTargetClasses();
  std::size_t files_per_class = 8;
  double train_fraction = 0.75;

  // Head model: "parametric" or "ir" (JSON impulse-response set).
  std::string head = "parametric";
  double head_radius_m = 0.0875;
  std::string ir_path;

  // Scene suites. Geometries are expanded once per target class.
  double scene_duration_s = 10.0;
  std::size_t train_geometries = 20;
  std::size_t test_geometries = 15;  // 0: the full test grid
  std::optional<double> diffuse_snr_db;

  // Segregation model.
  std::vector<int> bic_candidates = {1, 2, 3, 4, 5, 6, 7, 8};
  double glm_stimulus_s = 1.0;

  // Detectors.
  std::size_t lambda_count = 100;
  double lambda_ratio = 1e-4;
  std::size_t cv_folds = 6;
  std::size_t max_train_samples = 200000;
  bool early_stop = true;

  // Perturbation grid for testing.
  std::vector<double> azimuth_sigmas = {0, 5, 10, 20, 45, 1000};
  std::vector<int> count_deltas = {-2, -1, 1, 2};

  Seeds seeds;
  std::string output_dir = "seld_out";
  int threads = 1;

  static ExperimentConfig FromJson(const std::string& text);
  static ExperimentConfig Load(const std::filesystem::path& path);
  std::string ToJson() const;
  void Validate() const;
  // Hash over everything that affects results (not output_dir/threads).
  std::string Hash() const;
  scene::HeadModel MakeHead() const;
  std::vector<perturb::PerturbationSpec> PerturbationGrid() const;
};

using Progress = std::function<void(const std::string&)>;

// Dataset pools after the file-level split.
struct DatasetSplit {
  scene::SoundPool train;
  scene::SoundPool test;
};
DatasetSplit PrepareDataset(const ExperimentConfig& cfg);

struct SuitePair {
  std::vector<scene::SceneConfig> train;
  std::vector<scene::SceneConfig> test;
};
// Scene suites with sounds bound from the split pools.
SuitePair BuildSuites(const ExperimentConfig& cfg, const DatasetSplit& split);

struct SegregationFit {
  seg::ObservationModel model;
  seg::OrderSelection selection;
};
SegregationFit FitSegregation(const ExperimentConfig& cfg, const Progress& progress = {});

// One rendered and analyzed scene with its block grid and ground truth.
struct AnalyzedScene {
  scene::SceneConfig config;
  scene::MixedScene mix;
  afe::Representations rep;
  std::vector<features::Block> blocks;
  std::vector<std::vector<double>> block_energy;  // [source][block]
  std::vector<double> max_energy;                 // per source
};
AnalyzedScene AnalyzeScene(const scene::SceneConfig& cfg, const scene::HeadModel& head);

// Ground-truth streams of a block (active, co-located merged).
features::ActiveSet ActiveStreams(const AnalyzedScene& scene, std::size_t block);

// Events and azimuth of the sources carrying `class_id` in a scene.
struct ClassTruth {
  bool present = false;
  double azimuth_deg = 0.0;
  std::vector<EventAnnotation> events;
};
ClassTruth TruthForClass(const AnalyzedScene& scene, const std::string& class_id);

struct TrainSummary {
  std::string config_hash;
  std::map<std::string, lasso::DetectionModel> segregated;  // by class
  std::map<std::string, lasso::DetectionModel> fullstream;
  SegregationFit segregation;
  std::size_t segregated_samples = 0;
  std::size_t fullstream_samples = 0;
};
TrainSummary RunTrain(const ExperimentConfig& cfg, const Progress& progress = {});

struct TestSummary {
  std::filesystem::path metrics_csv;
  std::size_t rows = 0;
  std::size_t scenes = 0;
};
TestSummary RunTest(const ExperimentConfig& cfg, const Progress& progress = {});

// Metric table as read back from one or more metrics CSVs.
struct MetricTable {
  std::string config_hash;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t Column(const std::string& name) const;
  // NaN for empty (undefined) cells.
  double Number(std::size_t row, const std::string& column) const;
  const std::string& Text(std::size_t row, const std::string& column) const;
};
MetricTable ReadMetrics(const std::vector<std::filesystem::path>& csvs);

struct ReportSummary {
  std::filesystem::path summary_csv;
  std::filesystem::path placement_csv;
  std::size_t groups = 0;
};
ReportSummary EmitReport(const std::vector<std::filesystem::path>& csvs,
                         const std::filesystem::path& out_dir);

// Writes the bound train and test suites as scene-config files.
std::vector<std::filesystem::path> WriteSuites(const ExperimentConfig& cfg);

}  // namespace seld::pipeline
