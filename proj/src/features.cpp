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


#include "seld/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "seld/common.hpp"

namespace seld::features {
namespace {

constexpr double kEps = 1e-9;

// Appends the four L-statistics of the series and of its first two
// differences.
void AppendSeries(std::vector<double>& series, std::vector<float>& out) {
  for (int d = 0; d < 3; ++d) {
    LMoments lm = LStatistics(series);
    out.push_back(static_cast<float>(lm.l_mean));
    out.push_back(static_cast<float>(lm.l_scale));
    out.push_back(static_cast<float>(lm.l_skewness));
    out.push_back(static_cast<float>(lm.l_kurtosis));
    for (std::size_t i = 0; i + 1 < series.size(); ++i) series[i] = series[i + 1] - series[i];
    series.pop_back();
  }
}

FeatureLayout BuildLayout() {
  static const char* kStats[] = {"l_mean", "l_scale", "l_skewness", "l_kurtosis"};
  FeatureLayout layout;
  auto add = [&](const std::string& series) {
    for (int d = 0; d < 3; ++d)
      for (const char* s : kStats) layout.names.push_back(series + "/d" + std::to_string(d) + "/" + s);
  };
  char buf[48];
  for (std::size_t c = 0; c < afe::kRatemapChannels; ++c) {
    std::snprintf(buf, sizeof(buf), "ratemap/ch%02zu", c);
    add(buf);
  }
  for (std::size_t c = 0; c < afe::kAmsChannels; ++c)
    for (std::size_t m = 0; m < afe::kModulationFilters; ++m) {
      std::snprintf(buf, sizeof(buf), "ams/ch%02zu/mod%zu", c, m);
      add(buf);
    }
  for (auto name : afe::SpectralFeatureNames()) add("spectral/" + std::string(name));
  return layout;
}

}  // namespace

std::vector<Block> SegmentBlocks(double duration_s, std::size_t num_frames) {
  if (duration_s + kEps < kBlockLength)
    Fail(ErrorCode::kInvalidArgument, "input shorter than one 500 ms block");
  std::vector<Block> blocks;
  for (std::size_t b = 0;; ++b) {
    const double start = b * kBlockShift;
    const double end = start + kBlockLength;
    if (end > duration_s + kEps) break;
    Block blk;
    blk.index = b;
    blk.start_s = start;
    blk.end_s = end;
    blk.frame_begin = static_cast<std::size_t>(std::ceil(start / kFrameShiftSeconds - kEps));
    const double last = std::floor((end - kFrameLengthSeconds) / kFrameShiftSeconds + kEps);
    blk.frame_end = std::min(num_frames, static_cast<std::size_t>(last) + 1);
    if (blk.frame_end <= blk.frame_begin) break;
    blocks.push_back(blk);
  }
  return blocks;
}

std::vector<std::vector<double>> BlockEnergies(
    const std::vector<Block>& blocks, const std::vector<std::vector<double>>& source_frame_power) {
  std::vector<std::vector<double>> out(source_frame_power.size(),
                                       std::vector<double>(blocks.size(), 0.0));
  for (std::size_t s = 0; s < source_frame_power.size(); ++s) {
    const auto& p = source_frame_power[s];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].frame_end > p.size())
        Fail(ErrorCode::kMismatch, "frame power shorter than the block grid");
      double acc = 0.0;
      for (std::size_t j = blocks[b].frame_begin; j < blocks[b].frame_end; ++j) acc += p[j];
      out[s][b] = acc / blocks[b].num_frames();
    }
  }
  return out;
}

ActiveSet DetectActiveSources(std::span<const double> block_energy,
                              std::span<const double> scene_max_energy,
                              std::span<const double> source_azimuths) {
  if (block_energy.size() != scene_max_energy.size() ||
      block_energy.size() != source_azimuths.size())
    Fail(ErrorCode::kMismatch, "per-source inputs differ in length");
  ActiveSet set;
  const double ratio = DbToPower(kActivityThresholdDb);
  for (std::size_t s = 0; s < block_energy.size(); ++s) {
    const bool active = scene_max_energy[s] > 0.0 && block_energy[s] > scene_max_energy[s] * ratio;
    set.source_active.push_back(active);
    if (!active) continue;
    const double az = WrapAzimuth(source_azimuths[s]);
    bool seen = false;
    for (double a : set.stream_azimuths)
      if (AzimuthDistance(a, az) < kEps) seen = true;
    if (!seen) set.stream_azimuths.push_back(az);
  }
  return set;
}

BlockData ExtractBlock(const afe::Representations& rep, const Block& block,
                       const Eigen::MatrixXd& mask) {
  const auto f0 = static_cast<Eigen::Index>(block.frame_begin);
  const auto n = static_cast<Eigen::Index>(block.num_frames());
  if (block.frame_end > rep.num_frames) Fail(ErrorCode::kMismatch, "block outside representation");
  BlockData out;
  out.ratemap = 0.5 * (rep.ratemap_left.middleRows(f0, n) + rep.ratemap_right.middleRows(f0, n));
  out.ams = 0.5 * (rep.ams_left.middleRows(f0, n) + rep.ams_right.middleRows(f0, n));
  if (mask.size() != 0) {
    if (mask.rows() != n || mask.cols() != out.ratemap.cols())
      Fail(ErrorCode::kMismatch, "mask does not match the block grid");
    out.ratemap.array() *= mask.array();
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(afe::kAmsChannels); ++c) {
      Eigen::VectorXd m = 0.5 * (mask.col(2 * c) + mask.col(2 * c + 1));
      for (Eigen::Index f = 0; f < static_cast<Eigen::Index>(afe::kModulationFilters); ++f)
        out.ams.col(c * afe::kModulationFilters + f).array() *= m.array();
    }
  }
  out.spectral.resize(n, afe::kSpectralFeatures);
  std::vector<double> cur(out.ratemap.cols()), prev(out.ratemap.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index c = 0; c < out.ratemap.cols(); ++c) cur[c] = out.ratemap(k, c);
    auto v = afe::SpectralFeatures(cur, k == 0 ? std::span<const double>(cur) : prev, rep.ratemap_cf);
    for (std::size_t i = 0; i < v.size(); ++i) out.spectral(k, i) = v[i];
    std::swap(cur, prev);
  }
  return out;
}

LMoments LStatistics(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) Fail(ErrorCode::kInvalidArgument, "L-statistics need at least four values");
  std::vector<double> x(series.begin(), series.end());
  std::sort(x.begin(), x.end());
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0;
  const double m = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double j = static_cast<double>(i);  // i-th order statistic, zero based
    b0 += x[i];
    b1 += j / (m - 1) * x[i];
    b2 += j * (j - 1) / ((m - 1) * (m - 2)) * x[i];
    b3 += j * (j - 1) * (j - 2) / ((m - 1) * (m - 2) * (m - 3)) * x[i];
  }
  b0 /= m;
  b1 /= m;
  b2 /= m;
  b3 /= m;
  LMoments lm;
  lm.l_mean = b0;
  lm.l_scale = 2 * b1 - b0;
  const double l3 = 6 * b2 - 6 * b1 + b0;
  const double l4 = 20 * b3 - 30 * b2 + 12 * b1 - b0;
  if (lm.l_scale != 0.0) {
    lm.l_skewness = l3 / lm.l_scale;
    lm.l_kurtosis = l4 / lm.l_scale;
  }
  return lm;
}

const FeatureLayout& DefaultLayout() {
  static const FeatureLayout layout = BuildLayout();
  return layout;
}

std::vector<float> AssembleFeatureVector(const BlockData& block) {
  const Eigen::Index n = block.ratemap.rows();
  if (n < 6) Fail(ErrorCode::kInvalidArgument, "block needs at least six frames");
  if (block.ams.rows() != n || block.spectral.rows() != n)
    Fail(ErrorCode::kMismatch, "block representations differ in frame count");
  std::vector<float> out;
  out.reserve(DefaultLayout().size());
  std::vector<double> series(n);
  for (const Eigen::MatrixXd* m : {&block.ratemap, &block.ams, &block.spectral}) {
    for (Eigen::Index c = 0; c < m->cols(); ++c) {
      series.assign(m->col(c).data(), m->col(c).data() + n);
      AppendSeries(series, out);
    }
  }
  if (out.size() != DefaultLayout().size()) Fail(ErrorCode::kMismatch, "unexpected feature layout");
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!std::isfinite(out[i]))
      Fail(ErrorCode::kNumeric, "non-finite feature value: " + DefaultLayout().names[i]);
  return out;
}

double BlockOccupancy(double start_s, double end_s, const std::vector<EventAnnotation>& events) {
  std::vector<std::pair<double, double>> iv;
  for (const auto& e : events) {
    double a = std::max(start_s, e.onset_s), b = std::min(end_s, e.offset_s);
    if (b > a) iv.emplace_back(a, b);
  }
  std::sort(iv.begin(), iv.end());
  double covered = 0.0, cur_a = 0.0, cur_b = -1.0;
  for (auto [a, b] : iv) {
    if (a > cur_b) {
      if (cur_b > cur_a) covered += cur_b - cur_a;
      cur_a = a;
      cur_b = b;
    } else {
      cur_b = std::max(cur_b, b);
    }
  }
  if (cur_b > cur_a) covered += cur_b - cur_a;
  return covered / (end_s - start_s);
}

BlockLabel LabelBlock(double start_s, double end_s, const std::vector<EventAnnotation>& events) {
  const double occ = BlockOccupancy(start_s, end_s, events);
  if (occ <= 0.0) return BlockLabel::kNegative;
  if (occ >= kPositiveOccupancy - kEps) return BlockLabel::kPositive;
  for (const auto& e : events) {
    const double len = e.offset_s - e.onset_s;
    if (len <= 0.0) continue;
    const double inside = std::min(end_s, e.offset_s) - std::max(start_s, e.onset_s);
    if (inside / len >= kPositiveOccupancy - kEps) return BlockLabel::kPositive;
  }
  return BlockLabel::kExcluded;
}

std::size_t ClosestStream(const std::vector<double>& az, double target) {
  if (az.empty()) Fail(ErrorCode::kInvalidArgument, "no streams");
  std::size_t best = 0;
  for (std::size_t i = 1; i < az.size(); ++i) {
    const double di = AzimuthDistance(az[i], target), db = AzimuthDistance(az[best], target);
    if (di < db - kEps) {
      best = i;
    } else if (di < db + kEps) {
      const double ai = std::abs(az[i]), ab = std::abs(az[best]);
      if (ai < ab - kEps || (ai < ab + kEps && az[i] < az[best])) best = i;
    }
  }
  return best;
}

StreamLabels LabelStreamSamples(BlockLabel block_label, const std::vector<double>& stream_azimuths,
                                double target_azimuth) {
  if (stream_azimuths.empty()) Fail(ErrorCode::kInvalidArgument, "no streams");
  if (block_label == BlockLabel::kExcluded)
    Fail(ErrorCode::kInvalidArgument, "excluded blocks carry no stream labels");
  StreamLabels out;
  const std::size_t m = stream_azimuths.size();
  if (block_label == BlockLabel::kNegative) {
    out.labels.assign(m, -1);
    out.kinds.assign(m, NegativeKind::kNonPresentPositive);
    return out;
  }
  out.labels.assign(m, -1);
  out.kinds.assign(m, NegativeKind::kPresentPositive);
  const std::size_t c = ClosestStream(stream_azimuths, target_azimuth);
  out.labels[c] = 1;
  out.kinds[c] = NegativeKind::kNone;
  return out;
}

}  // namespace seld::features
