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


// Detection metrics: stream-wise balanced accuracy, time-wise aggregation
// over streams, fullstream rates and localized detection statistics.
// Undefined metrics (zero denominators) are returned as empty optionals.

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "seld/features.hpp"

namespace seld::eval {

struct StreamConfusion {
  double tp = 0, fn = 0;
  double tn_pp = 0, fp_pp = 0;
  double tn_npp = 0, fp_npp = 0;

  void Add(int truth, int prediction, features::NegativeKind kind, double weight = 1.0);
  StreamConfusion& operator+=(const StreamConfusion& other);
};

struct StreamwiseMetrics {
  std::optional<double> sens, spec_pp, spec_npp, spec_sw, bac_sw;
};

StreamwiseMetrics ComputeStreamwise(const StreamConfusion& conf);

struct DetectionCounts {
  double tp = 0, fn = 0, tn = 0, fp = 0;
  DetectionCounts& operator+=(const DetectionCounts& other);
};

struct DetectionMetrics {
  std::optional<double> dr, spec, bac;
};

DetectionMetrics ComputeDetection(const DetectionCounts& counts);

// Block-level OR over streams. `truth` holds +1/-1 per block.
DetectionCounts TimewiseAggregate(const std::vector<std::vector<int>>& stream_predictions,
                                  const std::vector<int>& truth);
DetectionCounts FullstreamCounts(const std::vector<int>& predictions, const std::vector<int>& truth);

inline constexpr std::size_t kPlacementBins = 18;  // 10 degree bins over [0, 180]

struct LocalizedBlock {
  std::vector<double> stream_azimuths;
  std::vector<int> predictions;
  double target_azimuth = 0.0;
  bool target_present = false;
};

struct LocalizedStats {
  std::optional<double> bapr, nep, azm_err;
  std::size_t blocks = 0;  // blocks with the target present and detected
  std::array<double, kPlacementBins> placement_fired{};
  std::array<double, kPlacementBins> placement_total{};

  std::optional<double> Placement(std::size_t bin) const;
};

std::size_t PlacementBin(double distance_deg);

// Uses only blocks where the target is present and at least one stream
// fired.
LocalizedStats ComputeLocalized(const std::vector<LocalizedBlock>& blocks);

}  // namespace seld::eval
