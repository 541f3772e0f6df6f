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


#include "seld/eval.hpp"

#include <algorithm>

#include "seld/common.hpp"

namespace seld::eval {
namespace {

std::optional<double> Ratio(double num, double den) {
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

void StreamConfusion::Add(int truth, int prediction, features::NegativeKind kind, double weight) {
  if (truth > 0) {
    (prediction > 0 ? tp : fn) += weight;
    return;
  }
  if (kind == features::NegativeKind::kPresentPositive) {
    (prediction > 0 ? fp_pp : tn_pp) += weight;
  } else if (kind == features::NegativeKind::kNonPresentPositive) {
    (prediction > 0 ? fp_npp : tn_npp) += weight;
  } else {
    Fail(ErrorCode::kInvalidArgument, "negative stream sample without a negative kind");
  }
}

StreamConfusion& StreamConfusion::operator+=(const StreamConfusion& o) {
  tp += o.tp;
  fn += o.fn;
  tn_pp += o.tn_pp;
  fp_pp += o.fp_pp;
  tn_npp += o.tn_npp;
  fp_npp += o.fp_npp;
  return *this;
}

StreamwiseMetrics ComputeStreamwise(const StreamConfusion& c) {
  StreamwiseMetrics m;
  m.sens = Ratio(c.tp, c.tp + c.fn);
  m.spec_pp = Ratio(c.tn_pp, c.tn_pp + c.fp_pp);
  m.spec_npp = Ratio(c.tn_npp, c.tn_npp + c.fp_npp);
  if (m.spec_pp && m.spec_npp) m.spec_sw = 0.5 * *m.spec_pp + 0.5 * *m.spec_npp;
  if (m.sens && m.spec_sw) m.bac_sw = 0.5 * *m.sens + 0.5 * *m.spec_sw;
  return m;
}

DetectionCounts& DetectionCounts::operator+=(const DetectionCounts& o) {
  tp += o.tp;
  fn += o.fn;
  tn += o.tn;
  fp += o.fp;
  return *this;
}

DetectionMetrics ComputeDetection(const DetectionCounts& c) {
  DetectionMetrics m;
  m.dr = Ratio(c.tp, c.tp + c.fn);
  m.spec = Ratio(c.tn, c.tn + c.fp);
  if (m.dr && m.spec) m.bac = 0.5 * (*m.dr + *m.spec);
  return m;
}

DetectionCounts TimewiseAggregate(const std::vector<std::vector<int>>& stream_predictions,
                                  const std::vector<int>& truth) {
  if (stream_predictions.size() != truth.size())
    Fail(ErrorCode::kMismatch, "predictions and truth differ in block count");
  DetectionCounts c;
  for (std::size_t b = 0; b < truth.size(); ++b) {
    const bool any = std::any_of(stream_predictions[b].begin(), stream_predictions[b].end(),
                                 [](int p) { return p > 0; });
    if (truth[b] > 0) (any ? c.tp : c.fn) += 1.0;
    else (any ? c.fp : c.tn) += 1.0;
  }
  return c;
}

DetectionCounts FullstreamCounts(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.size() != truth.size())
    Fail(ErrorCode::kMismatch, "predictions and truth differ in block count");
  DetectionCounts c;
  for (std::size_t b = 0; b < truth.size(); ++b) {
    if (truth[b] > 0) (predictions[b] > 0 ? c.tp : c.fn) += 1.0;
    else (predictions[b] > 0 ? c.fp : c.tn) += 1.0;
  }
  return c;
}

std::size_t PlacementBin(double distance_deg) {
  auto bin = static_cast<std::size_t>(std::max(0.0, distance_deg) / 10.0);
  return std::min(bin, kPlacementBins - 1);
}

std::optional<double> LocalizedStats::Placement(std::size_t bin) const {
  return Ratio(placement_fired.at(bin), placement_total.at(bin));
}

LocalizedStats ComputeLocalized(const std::vector<LocalizedBlock>& blocks) {
  LocalizedStats s;
  double best = 0.0, excess = 0.0, dist_sum = 0.0, fired_total = 0.0;
  for (const auto& b : blocks) {
    if (b.stream_azimuths.size() != b.predictions.size())
      Fail(ErrorCode::kMismatch, "stream azimuths and predictions differ in length");
    if (!b.target_present || b.stream_azimuths.empty()) continue;
    std::size_t fired = 0;
    for (int p : b.predictions) fired += p > 0;
    if (fired == 0) continue;
    ++s.blocks;
    const std::size_t closest = features::ClosestStream(b.stream_azimuths, b.target_azimuth);
    const bool closest_fired = b.predictions[closest] > 0;
    if (closest_fired && fired == 1) best += 1.0;
    excess += static_cast<double>(fired) - (closest_fired ? 1.0 : 0.0);
    for (std::size_t i = 0; i < b.stream_azimuths.size(); ++i) {
      const double d = AzimuthDistance(b.stream_azimuths[i], b.target_azimuth);
      const std::size_t bin = PlacementBin(d);
      s.placement_total[bin] += 1.0;
      if (b.predictions[i] > 0) {
        s.placement_fired[bin] += 1.0;
        dist_sum += d;
        fired_total += 1.0;
      }
    }
  }
  if (s.blocks > 0) {
    s.bapr = best / s.blocks;
    s.nep = excess / s.blocks;
    s.azm_err = dist_sum / fired_total;
  }
  return s;
}

}  // namespace seld::eval
