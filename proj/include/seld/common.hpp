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

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace seld {

// Pipeline-wide sample rate and frame grid. All representations share the
// 20 ms / 10 ms frame grid.
inline constexpr double kSampleRate = 44100.0;
inline constexpr std::size_t kFrameLength = 882;  // 20 ms
inline constexpr std::size_t kFrameShift = 441;   // 10 ms
inline constexpr double kFrameShiftSeconds = 0.01;
inline constexpr double kFrameLengthSeconds = 0.02;

// Activity rule shared by SNR gating and active-source detection:
// power more than 40 dB below the peak counts as inactive.
inline constexpr double kActivityThresholdDb = -40.0;

enum class ErrorCode : int {
  kInvalidArgument = 1,
  kIo = 2,
  kConfig = 3,
  kNumeric = 4,
  kMismatch = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& what);

// Wraps an azimuth in degrees to (-180, 180].
double WrapAzimuth(double deg);

// Circular distance between two azimuths, in [0, 180].
double AzimuthDistance(double a_deg, double b_deg);

// Number of 20 ms / 10 ms frames that fit into `num_samples`; zero if the
// signal is shorter than one frame.
std::size_t FrameCount(std::size_t num_samples);

// Counter-based seed derivation so per-item randomness is independent of
// scheduling order.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t index);

// 64-bit FNV-1a, used for config hashes embedded in output files.
std::uint64_t Fnv1a64(std::string_view bytes);
std::string HexHash(std::uint64_t h);

// Runs fn(i) for i in [0, n) on up to `threads` workers. threads <= 0 means
// hardware concurrency. Exceptions from workers are rethrown (first one).
void ParallelFor(std::size_t n, int threads,
                 const std::function<void(std::size_t)>& fn);

inline double DbToPower(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace seld
