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


#include "seld/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "seld/common.hpp"

namespace seld {
namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void WriteWavBytes(const std::filesystem::path& path, double sample_rate,
                   int channels, int bits, std::uint16_t format,
                   const std::string& data) {
  std::string out;
  out.reserve(44 + data.size());
  out += "RIFF";
  PutU32(out, static_cast<std::uint32_t>(36 + data.size()));
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, format);
  PutU16(out, static_cast<std::uint16_t>(channels));
  auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));
  PutU32(out, rate);
  PutU32(out, rate * channels * bits / 8);
  PutU16(out, static_cast<std::uint16_t>(channels * bits / 8));
  PutU16(out, static_cast<std::uint16_t>(bits));
  out += "data";
  PutU32(out, static_cast<std::uint32_t>(data.size()));
  out += data;
  std::ofstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace

WavData ReadWav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    Fail(ErrorCode::kIo, "not a RIFF/WAVE file: " + path.string());
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = ReadU32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + size > bytes.size()) size = static_cast<std::uint32_t>(bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0 && size >= 16) {
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 26) format = ReadU16(bytes.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!data || rate == 0) Fail(ErrorCode::kIo, "missing fmt/data chunk: " + path.string());
  if (channels != 1) Fail(ErrorCode::kIo, "only mono WAV supported: " + path.string());

  WavData out;
  out.sample_rate = rate;
  if (format == 1 && bits == 16) {
    out.samples.resize(data_size / 2);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      auto v = static_cast<std::int16_t>(ReadU16(data + 2 * i));
      out.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format == 3 && bits == 32) {
    out.samples.resize(data_size / 4);
    std::memcpy(out.samples.data(), data, out.samples.size() * 4);
  } else {
    Fail(ErrorCode::kIo, "unsupported WAV encoding (need PCM16 or float32): " + path.string());
  }
  return out;
}

void WriteWavFloat(const std::filesystem::path& path, double sample_rate,
                   const std::vector<float>& interleaved, int channels) {
  std::string data(interleaved.size() * 4, '\0');
  std::memcpy(data.data(), interleaved.data(), data.size());
  WriteWavBytes(path, sample_rate, channels, 32, 3, data);
}

void WriteWavPcm16(const std::filesystem::path& path, double sample_rate,
                   const std::vector<float>& mono) {
  std::string data;
  data.reserve(mono.size() * 2);
  for (float s : mono) {
    long v = std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f);
    PutU16(data, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  WriteWavBytes(path, sample_rate, 1, 16, 1, data);
}

std::vector<float> Resample(const std::vector<float>& in, double from_rate,
                            double to_rate) {
  if (from_rate <= 0 || to_rate <= 0) Fail(ErrorCode::kInvalidArgument, "bad sample rate");
  if (from_rate == to_rate || in.empty()) return in;
  const double ratio = to_rate / from_rate;
  const double cutoff = std::min(1.0, ratio);  // relative to input Nyquist
  constexpr int kHalfTaps = 16;
  const double half_width = kHalfTaps / cutoff;
  auto n_out = static_cast<std::size_t>(std::floor(in.size() * ratio));
  std::vector<float> out(n_out);
  const auto n_in = static_cast<long>(in.size());
  for (std::size_t j = 0; j < n_out; ++j) {
    double t = j / ratio;
    long lo = static_cast<long>(std::ceil(t - half_width));
    long hi = static_cast<long>(std::floor(t + half_width));
    double acc = 0.0;
    for (long i = std::max(0L, lo); i <= std::min(n_in - 1, hi); ++i) {
      double x = (t - i) * cutoff;
      double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      double u = (t - i) / half_width;
      double win = 0.5 + 0.5 * std::cos(std::numbers::pi * u);
      acc += in[i] * cutoff * sinc * win;
    }
    out[j] = static_cast<float>(acc);
  }
  return out;
}

std::vector<EventAnnotation> ReadAnnotations(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open annotations " + path.string());
  std::vector<EventAnnotation> events;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string on, off, label;
    std::getline(ss, on, ',');
    std::getline(ss, off, ',');
    std::getline(ss, label);
    if (on == "onset_s") continue;  // header
    try {
      EventAnnotation e{std::stod(on), std::stod(off), label};
      if (!(e.offset_s > e.onset_s)) Fail(ErrorCode::kIo, "event offset <= onset in " + path.string());
      events.push_back(e);
    } catch (const std::invalid_argument&) {
      Fail(ErrorCode::kIo, "malformed annotation line in " + path.string() + ": " + line);
    }
  }
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.onset_s < b.onset_s; });
  return events;
}

void WriteAnnotations(const std::filesystem::path& path,
                      const std::vector<EventAnnotation>& events) {
  std::ofstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot write " + path.string());
  f << "onset_s,offset_s,class\n";
  f.precision(9);
  for (const auto& e : events) f << e.onset_s << ',' << e.offset_s << ',' << e.label << '\n';
}

}  // namespace seld
