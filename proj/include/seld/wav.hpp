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

#include <filesystem>
#include <string>
#include <vector>

namespace seld {

// One annotated event of a sound file, times in seconds.
struct EventAnnotation {
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string label;
};

struct WavData {
  double sample_rate = 0.0;
  std::vector<float> samples;  // mono
};

// Reads a mono RIFF/WAVE file with 16-bit PCM or 32-bit float samples.
WavData ReadWav(const std::filesystem::path& path);

// Writes mono or interleaved multi-channel 32-bit float WAV.
void WriteWavFloat(const std::filesystem::path& path, double sample_rate,
                   const std::vector<float>& interleaved, int channels = 1);
void WriteWavPcm16(const std::filesystem::path& path, double sample_rate,
                   const std::vector<float>& mono);

// Band-limited (windowed-sinc) resampling.
std::vector<float> Resample(const std::vector<float>& in, double from_rate,
                            double to_rate);

// Sidecar annotation CSV: `onset_s,offset_s,class` per line, optional header.
std::vector<EventAnnotation> ReadAnnotations(const std::filesystem::path& path);
void WriteAnnotations(const std::filesystem::path& path,
                      const std::vector<EventAnnotation>& events);

}  // namespace seld
