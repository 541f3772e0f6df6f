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


// Block segmentation, active-source detection, mask application, L-moment
// feature vectors and block/stream labels.

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seld/afe.hpp"
#include "seld/wav.hpp"

namespace seld::features {

inline constexpr double kBlockLength = 0.5;
inline constexpr double kBlockShift = 0.333;
inline constexpr double kPositiveOccupancy = 0.75;

struct Block {
  std::size_t index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  // Frames lying completely inside [start_s, end_s).
  std::size_t frame_begin = 0;
  std::size_t frame_end = 0;
  std::size_t num_frames() const { return frame_end - frame_begin; }
};

// 500 ms blocks every 333 ms; a trailing partial block is dropped. Throws
// kInvalidArgument when the input is shorter than one block.
std::vector<Block> SegmentBlocks(double duration_s, std::size_t num_frames);

// Mean frame power of each source inside each block: [source][block].
std::vector<std::vector<double>> BlockEnergies(
    const std::vector<Block>& blocks, const std::vector<std::vector<double>>& source_frame_power);

struct ActiveSet {
  std::vector<bool> source_active;
  // One stream per distinct active azimuth, in order of first appearance.
  std::vector<double> stream_azimuths;
  std::size_t count() const { return stream_azimuths.size(); }
};

// A source is active when its block energy exceeds its scene maximum block
// energy by more than -40 dB (strictly). Co-located sources share a stream.
ActiveSet DetectActiveSources(std::span<const double> block_energy,
                              std::span<const double> scene_max_energy,
                              std::span<const double> source_azimuths);

// L/R-averaged block representations, optionally masked.
struct BlockData {
  Eigen::MatrixXd ratemap;   // frames x 32
  Eigen::MatrixXd ams;       // frames x 128
  Eigen::MatrixXd spectral;  // frames x 14
};

// `mask` is frames x 32 over the block's frames, or empty for the unmasked
// (fullstream) representation. AMS channels use the mean of adjacent mask
// channel pairs.
BlockData ExtractBlock(const afe::Representations& rep, const Block& block,
                       const Eigen::MatrixXd& mask = {});

struct LMoments {
  double l_mean = 0.0;
  double l_scale = 0.0;
  double l_skewness = 0.0;
  double l_kurtosis = 0.0;
};

// Unbiased sample L-moments from probability-weighted moments. Needs at
// least four values; ratios are 0 when the L-scale is 0.
LMoments LStatistics(std::span<const double> series);

struct FeatureLayout {
  std::vector<std::string> names;
  std::size_t size() const { return names.size(); }
};

// (32 ratemap + 16x8 AMS + 14 spectral) series x 3 derivative orders x 4
// L-statistics = 2088 coordinates.
const FeatureLayout& DefaultLayout();

// Needs blocks of at least six frames so the second derivative has four
// values.
std::vector<float> AssembleFeatureVector(const BlockData& block);

enum class BlockLabel { kPositive, kNegative, kExcluded };

// Occupancy is the union of target events intersected with the block,
// relative to the block length.
double BlockOccupancy(double start_s, double end_s, const std::vector<EventAnnotation>& events);
BlockLabel LabelBlock(double start_s, double end_s, const std::vector<EventAnnotation>& events);

enum class NegativeKind { kNone, kPresentPositive, kNonPresentPositive };

struct StreamLabels {
  std::vector<int> labels;  // +1 / -1 per stream
  std::vector<NegativeKind> kinds;
};

// Index of the stream closest to `target_azimuth`; ties go to the smaller
// absolute azimuth, then the smaller signed azimuth.
std::size_t ClosestStream(const std::vector<double>& stream_azimuths, double target_azimuth);

StreamLabels LabelStreamSamples(BlockLabel block_label, const std::vector<double>& stream_azimuths,
                                double target_azimuth);

}  // namespace seld::features
