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


// Spatial stream segregation: an azimuth-to-cue regression model with a
// sine basis per frequency channel, BIC order selection, and per-stream
// probabilistic softmasks over time-frequency bins.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "seld/afe.hpp"
#include "seld/scene_sim.hpp"

namespace seld::seg {

// Observations are (ITD in milliseconds, ILD in dB) per bin; the model's
// coefficients and covariances use these units. Public cue predictions are
// returned in seconds.
struct ObservationModel {
  int order = 0;
  std::size_t num_observations = 0;
  Eigen::MatrixXd beta_itd;  // channels x (order + 1), ms
  Eigen::MatrixXd beta_ild;  // channels x (order + 1), dB
  std::vector<Eigen::Matrix2d> covariance;  // one per channel
  std::string head_description;

  std::size_t num_channels() const { return covariance.size(); }
  double Bic() const;
};

// Cue observations paired with the azimuth that produced them. Rows are
// observations, columns channels.
struct TrainingCues {
  std::vector<double> azimuth_deg;
  Eigen::MatrixXd itd_s;
  Eigen::MatrixXd ild_db;
  std::string head_description;
};

// 5 degree steps over (-90, 90].
std::vector<double> DefaultTrainingGrid();

// Renders `stimulus_s` of white noise from every grid azimuth through the
// head model and extracts per-frame cues.
TrainingCues RenderTrainingCues(const scene::HeadModel& head, const std::vector<double>& grid,
                                std::uint64_t seed, double stimulus_s = 1.0, int threads = 1);

// Least squares per channel; throws kNumeric on a rank-deficient design.
ObservationModel FitObservationModel(const TrainingCues& cues, int order);

struct OrderSelection {
  int order = 0;
  std::vector<int> candidates;
  std::vector<double> bic;
};
OrderSelection SelectModelOrder(const TrainingCues& cues, const std::vector<int>& candidates);

struct CuePrediction {
  std::vector<double> itd_s;
  std::vector<double> ild_db;
};
// Azimuths behind the ear axis are folded onto their frontal mirror image
// before evaluating the sine series, so mirrored azimuths share predictions.
CuePrediction PredictCues(const ObservationModel& model, double azimuth_deg);

struct SoftMask {
  double azimuth_deg = 0.0;
  Eigen::MatrixXd weights;  // frames x channels
};

// Masks for frames [frame_begin, frame_end) of `cues`; weights at every bin
// sum to one across the returned masks.
std::vector<SoftMask> ComputeSoftmasks(const ObservationModel& model,
                                       const afe::BinauralCues& cues,
                                       std::size_t frame_begin, std::size_t frame_end,
                                       const std::vector<double>& stream_azimuths);

void SaveModel(const std::filesystem::path& path, const ObservationModel& model);
ObservationModel LoadModel(const std::filesystem::path& path);

}  // namespace seld::seg
