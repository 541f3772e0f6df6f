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


// L1-penalized logistic regression for one-vs-all detectors: the
// weighting scheme for multi-conditional samples, lambda paths by
// coordinate descent, file-level cross-validation and model files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seld/features.hpp"

namespace seld::lasso {

enum class ModelKind { kFullstream, kSegregated };
std::string_view KindName(ModelKind kind);
ModelKind ParseKind(std::string_view name);

// Row-major sample matrix.
struct SampleMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  std::span<const float> Row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
  void AppendRow(std::span<const float> row);
};

struct DetectionModel {
  std::string target_class;
  ModelKind kind = ModelKind::kSegregated;
  double lambda = 0.0;
  double intercept = 0.0;
  // Coefficients on standardized features: z_j = (x_j - mean_j) / scale_j.
  std::vector<double> weights;
  std::vector<double> mean;
  std::vector<double> scale;
  std::string layout_hash;
  std::string config_hash;
  std::vector<double> cv_lambdas;
  std::vector<double> cv_scores;

  double Margin(std::span<const float> x) const;
  // A margin of exactly zero counts as positive.
  int Predict(std::span<const float> x) const { return Margin(x) >= 0.0 ? 1 : -1; }
  std::size_t NonZero() const;
  // Coefficients and intercept on the raw feature scale.
  std::vector<double> RawWeights() const;
  double RawIntercept() const;
};

// Positives, pp negatives and npp negatives get total masses 0.5 / 0.25 /
// 0.25 (segregated) or positives / negatives 0.5 / 0.5 (fullstream).
// Within each, every source count present receives the same mass, shared
// equally by its samples. Weights are scaled to mean 1.
std::vector<double> ComputeSampleWeights(std::span<const int> labels,
                                         std::span<const features::NegativeKind> kinds,
                                         std::span<const int> source_counts, ModelKind kind);

struct FitOptions {
  // Largest weighted objective change of one coordinate update, relative to
  // the null deviance.
  double tolerance = 1e-7;
  double kkt_tolerance = 5e-6;  // optimality bound enforced at every path point
  std::size_t max_sweeps = 100000;  // per lambda
  bool early_stop = true;        // stop when the deviance ratio saturates
};

struct PathPoint {
  double lambda = 0.0;
  double intercept = 0.0;
  std::vector<double> weights;  // standardized scale
  double deviance_ratio = 0.0;
  bool fitted = true;  // false for points copied after an early stop
};

struct LassoPath {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<PathPoint> points;
  double lambda_max = 0.0;
};

// Smallest lambda with an all-zero solution, on standardized features.
// `rows` selects a subset (empty: all rows).
double LambdaMax(const SampleMatrix& x, std::span<const int> y, std::span<const double> w,
                 std::span<const std::size_t> rows = {});

// `count` values log-spaced from lambda_max down to ratio * lambda_max.
std::vector<double> LambdaGrid(double lambda_max, std::size_t count = 100, double ratio = 1e-4);

// y holds +1/-1 labels. Throws on non-finite features or a single class.
LassoPath FitLassoPath(const SampleMatrix& x, std::span<const int> y, std::span<const double> w,
                       std::span<const double> lambdas, const FitOptions& options = {},
                       std::span<const std::size_t> rows = {});

DetectionModel ModelFromPath(const LassoPath& path, std::size_t index);

// Sample fold assignment. Files of each class are shuffled and dealt to
// folds in turn, so fold sizes per class differ by at most one file.
struct CvPlan {
  std::size_t folds = 6;
  std::vector<int> sample_fold;
};

CvPlan BuildCvPlan(std::span<const std::string> sample_class,
                   std::span<const std::string> sample_file, std::size_t folds,
                   std::uint64_t seed);

enum class CvMetric { kBac, kBacSw };

// Weighted balanced accuracy of predictions.
double ScorePredictions(std::span<const int> y, std::span<const int> prediction,
                        std::span<const double> w,
                        std::span<const features::NegativeKind> kinds, CvMetric metric);

struct CvResult {
  std::vector<double> lambdas;
  std::vector<double> mean_score;
  std::size_t best_index = 0;
  DetectionModel model;
};

CvResult SelectLambdaCv(const SampleMatrix& x, std::span<const int> y, std::span<const double> w,
                        std::span<const features::NegativeKind> kinds, const CvPlan& plan,
                        std::span<const double> lambdas, CvMetric metric,
                        const FitOptions& options = {}, int threads = 1);

// Caps the sample count while drawing as evenly as possible from every
// file. Returns sorted row indices.
std::vector<std::size_t> SubsampleByFile(std::span<const std::string> sample_file,
                                         std::size_t cap, std::uint64_t seed);

void SaveModel(const std::filesystem::path& path, const DetectionModel& model);
DetectionModel LoadModel(const std::filesystem::path& path);

}  // namespace seld::lasso
