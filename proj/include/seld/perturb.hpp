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


// Perturbation of segregation inputs: Gaussian azimuth noise per block and
// stream, and source-count errors. Rendered audio and labels are never
// touched.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace seld::perturb {

enum class Kind { kNone, kAzimuth, kCount };

struct PerturbationSpec {
  Kind kind = Kind::kNone;
  double azimuth_sigma_deg = 0.0;
  // kCount: either a fixed delta (grid evaluation) or a uniform draw from
  // [-count_error_range, +count_error_range] per block.
  int count_delta = 0;
  int count_error_range = 0;
  bool random_delta = false;
  std::uint64_t rng_seed = 0;

  std::string Label() const;
  double Value() const;
  void Validate() const;
};

std::vector<double> PerturbAzimuths(const std::vector<double>& azimuths, double sigma_deg,
                                    std::mt19937_64& rng);

// Adds `delta` streams (uniform azimuths in [0, 360)) or removes -delta
// streams picked uniformly at random, keeping at least one.
std::vector<double> ApplyCountDelta(const std::vector<double>& azimuths, int delta,
                                    std::mt19937_64& rng);

// Draws delta uniformly from [-range, +range], then applies it.
std::vector<double> PerturbSourceCount(const std::vector<double>& azimuths, int range,
                                       std::mt19937_64& rng);

// Counter-based: the outcome depends only on (spec, block_key).
std::vector<double> Apply(const PerturbationSpec& spec, const std::vector<double>& azimuths,
                          std::uint64_t block_key);

// Sigma {0, 5, 10, 20, 45, 1000} followed by count deltas {-2, -1, +1, +2}.
std::vector<PerturbationSpec> DefaultGrid(std::uint64_t seed);

}  // namespace seld::perturb
