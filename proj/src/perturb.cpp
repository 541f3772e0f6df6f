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


#include "seld/perturb.hpp"

#include <cmath>

#include "seld/common.hpp"

namespace seld::perturb {

std::string PerturbationSpec::Label() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kAzimuth: return "azimuth_sigma";
    case Kind::kCount: return random_delta ? "count_range" : "count_delta";
  }
  return "?";
}

double PerturbationSpec::Value() const {
  switch (kind) {
    case Kind::kNone: return 0.0;
    case Kind::kAzimuth: return azimuth_sigma_deg;
    case Kind::kCount: return random_delta ? count_error_range : count_delta;
  }
  return 0.0;
}

void PerturbationSpec::Validate() const {
  if (!(azimuth_sigma_deg >= 0.0) || !std::isfinite(azimuth_sigma_deg))
    Fail(ErrorCode::kConfig, "azimuth sigma must be finite and >= 0");
  if (count_error_range < 0) Fail(ErrorCode::kConfig, "count error range must be >= 0");
}

std::vector<double> PerturbAzimuths(const std::vector<double>& azimuths, double sigma_deg,
                                    std::mt19937_64& rng) {
  if (!(sigma_deg >= 0.0)) Fail(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  std::vector<double> out;
  std::normal_distribution<double> dist(0.0, sigma_deg > 0.0 ? sigma_deg : 1.0);
  for (double a : azimuths) out.push_back(WrapAzimuth(sigma_deg > 0.0 ? a + dist(rng) : a));
  return out;
}

std::vector<double> ApplyCountDelta(const std::vector<double>& azimuths, int delta,
                                    std::mt19937_64& rng) {
  std::vector<double> out = azimuths;
  for (int i = 0; i < -delta && out.size() > 1; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
  }
  std::uniform_real_distribution<double> uni(0.0, 360.0);
  for (int i = 0; i < delta; ++i) out.push_back(WrapAzimuth(uni(rng)));
  return out;
}

std::vector<double> PerturbSourceCount(const std::vector<double>& azimuths, int range,
                                       std::mt19937_64& rng) {
  if (range < 0) Fail(ErrorCode::kInvalidArgument, "count error range must be >= 0");
  const int delta = std::uniform_int_distribution<int>(-range, range)(rng);
  return ApplyCountDelta(azimuths, delta, rng);
}

std::vector<double> Apply(const PerturbationSpec& spec, const std::vector<double>& azimuths,
                          std::uint64_t block_key) {
  std::mt19937_64 rng(DeriveSeed(spec.rng_seed, block_key));
  switch (spec.kind) {
    case Kind::kNone: return azimuths;
    case Kind::kAzimuth: return PerturbAzimuths(azimuths, spec.azimuth_sigma_deg, rng);
    case Kind::kCount:
      return spec.random_delta ? PerturbSourceCount(azimuths, spec.count_error_range, rng)
                               : ApplyCountDelta(azimuths, spec.count_delta, rng);
  }
  return azimuths;
}

std::vector<PerturbationSpec> DefaultGrid(std::uint64_t seed) {
  std::vector<PerturbationSpec> grid;
  std::uint64_t i = 0;
  for (double sigma : {0.0, 5.0, 10.0, 20.0, 45.0, 1000.0}) {
    PerturbationSpec p;
    p.kind = sigma == 0.0 ? Kind::kNone : Kind::kAzimuth;
    p.azimuth_sigma_deg = sigma;
    p.rng_seed = DeriveSeed(seed, i++);
    grid.push_back(p);
  }
  for (int delta : {-2, -1, 1, 2}) {
    PerturbationSpec p;
    p.kind = Kind::kCount;
    p.count_delta = delta;
    p.rng_seed = DeriveSeed(seed, i++);
    grid.push_back(p);
  }
  return grid;
}

}  // namespace seld::perturb
