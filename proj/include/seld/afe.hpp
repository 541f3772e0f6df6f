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


// Auditory front-end: gammatone filterbank with inner-hair-cell stage,
// ratemaps, amplitude modulation spectrograms, spectral features and
// per-bin binaural cues. Every representation lives on the shared
// 20 ms / 10 ms frame grid.

#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace seld::afe {

inline constexpr std::size_t kRatemapChannels = 32;
inline constexpr std::size_t kAmsChannels = 16;
inline constexpr std::size_t kModulationFilters = 8;
inline constexpr std::size_t kSpectralFeatures = 14;
inline constexpr double kLowFrequencyHz = 80.0;
inline constexpr double kHighFrequencyHz = 8000.0;
inline constexpr double kMaxItdSeconds = 1.1e-3;
inline constexpr double kEnergyFloor = 1e-12;

// ERB-rate scale E(f) = 21.4 log10(0.00437 f + 1) and its inverse.
double ErbRate(double hz);
double InverseErbRate(double erb_rate);
// Equivalent rectangular bandwidth at `hz`.
double Erb(double hz);
// `n` center frequencies linearly spaced on the ERB-rate scale.
std::vector<double> ErbSpacedFrequencies(std::size_t n, double lo_hz, double hi_hz);

// Inner-hair-cell signals, one row per channel.
struct Cochleagram {
  std::vector<double> center_frequencies_hz;
  std::vector<std::vector<float>> channels;
};

Cochleagram ComputeCochleagram(std::span<const float> signal, std::size_t n_channels,
                               double lo_hz = kLowFrequencyHz,
                               double hi_hz = kHighFrequencyHz);

// frames x channels.
Eigen::MatrixXd Ratemap(const Cochleagram& coch);
// frames x (channel * 8 + modulation filter).
Eigen::MatrixXd Ams(const Cochleagram& coch16);
std::vector<double> ModulationCenterFrequencies();

struct BinauralCues {
  Eigen::MatrixXd itd_s;   // frames x channels, positive: right ear lags
  Eigen::MatrixXd ild_db;  // frames x channels, 10 log10(E_left / E_right)
};

BinauralCues ComputeBinauralCues(const Cochleagram& left, const Cochleagram& right);

using SpectralVector = std::array<double, kSpectralFeatures>;
const std::array<std::string_view, kSpectralFeatures>& SpectralFeatureNames();

// Spectral features of one (nonnegative) ratemap frame; `previous` feeds
// flux and variation and may equal `frame`.
SpectralVector SpectralFeatures(std::span<const double> frame,
                                std::span<const double> previous,
                                std::span<const double> center_frequencies_hz);

// All representations of a binaural signal, computed channel by channel so
// no full-rate cochleagram is held in memory.
struct Representations {
  std::size_t num_frames = 0;
  std::vector<double> ratemap_cf;
  std::vector<double> ams_cf;
  Eigen::MatrixXd ratemap_left, ratemap_right;
  Eigen::MatrixXd ams_left, ams_right;
  BinauralCues cues;
};

Representations Analyze(std::span<const float> left, std::span<const float> right);

// Binaural cues only (32 channels), used for observation-model training.
BinauralCues AnalyzeCues(std::span<const float> left, std::span<const float> right);

}  // namespace seld::afe
