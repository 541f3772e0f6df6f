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


#include "seld/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <unordered_map>

#include "json.hpp"
#include "seld/common.hpp"

namespace seld::scene {
namespace {

using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t SampleCount(double duration_s) {
  return static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
}

// Raised-cosine fade in/out over `fade` samples at both ends of [i0, i1).
void ApplyFades(std::vector<float>& x, std::size_t i0, std::size_t i1, std::size_t fade) {
  std::size_t len = i1 - i0;
  fade = std::min(fade, len / 2);
  for (std::size_t k = 0; k < fade; ++k) {
    float g = static_cast<float>(0.5 - 0.5 * std::cos(kPi * (k + 0.5) / fade));
    x[i0 + k] *= g;
    x[i1 - 1 - k] *= g;
  }
}

void RenderTonalAlarm(std::vector<float>& x, std::size_t i0, std::size_t i1,
                      double gain, std::mt19937_64& rng) {
  const double f1 = Uniform(rng, 600.0, 1400.0);
  const double f2 = f1 * 1.26;
  const double on = Uniform(rng, 0.08, 0.15);
  const double off = Uniform(rng, 0.04, 0.08);
  std::size_t pos = i0;
  int beep = 0;
  while (pos < i1) {
    std::size_t end = std::min(i1, pos + SampleCount(on));
    double f = (beep % 2 == 0) ? f1 : f2;
    for (std::size_t i = pos; i < end; ++i) {
      double ph = 2.0 * kPi * f * (i - pos) / kSampleRate;
      x[i] = static_cast<float>(gain * (std::sin(ph) + 0.5 * std::sin(2 * ph) +
                                        0.25 * std::sin(3 * ph)) / 1.15);
    }
    ApplyFades(x, pos, end, SampleCount(0.003));
    pos = end + SampleCount(off);
    ++beep;
  }
}

void RenderNoiseBurst(std::vector<float>& x, std::size_t i0, std::size_t i1,
                      double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double tau = (i1 - i0) / kSampleRate / 4.0;
  for (std::size_t i = i0; i < i1; ++i) {
    double t = (i - i0) / kSampleRate;
    x[i] = static_cast<float>(3.0 * gain * noise(rng) * std::exp(-t / tau));
  }
}

void RenderAmNoise(std::vector<float>& x, std::size_t i0, std::size_t i1,
                   double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double fc = Uniform(rng, 600.0, 1500.0);
  const double fm = Uniform(rng, 4.0, 12.0);
  const double phase = Uniform(rng, 0.0, 2.0 * kPi);
  const double a = std::exp(-2.0 * kPi * fc / kSampleRate);
  const double norm = std::sqrt((1.0 + a) / (1.0 - a));  // unit-variance output
  double y = 0.0;
  for (std::size_t i = i0; i < i1; ++i) {
    double t = (i - i0) / kSampleRate;
    y = (1.0 - a) * noise(rng) + a * y;
    double env = 1.0 + 0.9 * std::sin(2.0 * kPi * fm * t + phase);
    x[i] = static_cast<float>(gain * norm * y * env);
  }
}

void RenderChirp(std::vector<float>& x, std::size_t i0, std::size_t i1,
                 double gain, std::mt19937_64& rng) {
  double f0 = Uniform(rng, 300.0, 700.0);
  double f1 = Uniform(rng, 2500.0, 5000.0);
  if (Uniform(rng, 0.0, 1.0) < 0.5) std::swap(f0, f1);
  const double dur = (i1 - i0) / kSampleRate;
  const double k = std::log(f1 / f0);
  for (std::size_t i = i0; i < i1; ++i) {
    double t = (i - i0) / kSampleRate;
    double ph = 2.0 * kPi * f0 * dur / k * (std::exp(k * t / dur) - 1.0);
    x[i] = static_cast<float>(gain * std::sqrt(2.0) * std::sin(ph));
  }
}

void RenderGeneral(std::vector<float>& x, std::size_t i0, std::size_t i1,
                   double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double fm = Uniform(rng, 0.5, 2.0);
  const double phase = Uniform(rng, 0.0, 2.0 * kPi);
  for (std::size_t i = i0; i < i1; ++i) {
    double t = (i - i0) / kSampleRate;
    double env = 1.0 + 0.5 * std::sin(2.0 * kPi * fm * t + phase);
    x[i] = static_cast<float>(gain * noise(rng) * env);
  }
}

struct ClassSpec {
  std::string_view name;
  double min_len, max_len;
  void (*render)(std::vector<float>&, std::size_t, std::size_t, double, std::mt19937_64&);
};

constexpr ClassSpec kClasses[] = {
    {kTonalAlarm, 0.4, 1.5, RenderTonalAlarm},
    {kNoiseBurst, 0.05, 0.3, RenderNoiseBurst},
    {kAmNoise, 0.8, 2.5, RenderAmNoise},
    {kChirp, 0.3, 1.0, RenderChirp},
    {kGeneral, 0.5, 3.0, RenderGeneral},
};

const ClassSpec* FindClass(std::string_view id) {
  for (const auto& c : kClasses)
    if (c.name == id) return &c;
  return nullptr;
}

// Brown-Duda style ear model. theta is the angle between the source and the
// ear axis in degrees, in [0, 180].
double EarDelaySeconds(double theta_deg, double radius, double c) {
  double th = theta_deg * kPi / 180.0;
  if (theta_deg < 90.0) return -(radius / c) * std::cos(th);
  return (radius / c) * (th - kPi / 2.0);
}

double ShadowMagnitude(double omega, double theta_deg, double radius, double c) {
  constexpr double kAlphaMin = 0.1;
  constexpr double kThetaMin = 150.0;
  const double alpha = (1.0 + kAlphaMin / 2.0) +
                       (1.0 - kAlphaMin / 2.0) * std::cos(theta_deg / kThetaMin * kPi);
  const double x = omega / (2.0 * c / radius);
  return std::sqrt((1.0 + alpha * alpha * x * x) / (1.0 + x * x));
}

struct EarFilter {
  long first_lag = 0;  // y[n] = sum_j taps[j] * x[n - (first_lag + j)]
  std::vector<float> taps;
};

// Zero-phase shadow magnitude combined with the ear's fractional delay,
// designed as a windowed inverse DTFT.
EarFilter DesignEarFilter(double theta_deg, double radius, double c) {
  constexpr double kHalfLength = 24.0;
  constexpr int kGrid = 1024;
  const double delay = EarDelaySeconds(theta_deg, radius, c) * kSampleRate;
  std::vector<double> mag(kGrid), omega(kGrid);
  for (int k = 0; k < kGrid; ++k) {
    double w = kPi * (k + 0.5) / kGrid;
    omega[k] = w;
    mag[k] = ShadowMagnitude(w * kSampleRate, theta_deg, radius, c);
  }
  EarFilter f;
  f.first_lag = static_cast<long>(std::floor(delay - kHalfLength));
  long last = static_cast<long>(std::ceil(delay + kHalfLength));
  for (long m = f.first_lag; m <= last; ++m) {
    double t = m - delay;
    double u = t / kHalfLength;
    if (std::abs(u) >= 1.0) {
      f.taps.push_back(0.0f);
      continue;
    }
    double s = 0.0;
    for (int k = 0; k < kGrid; ++k) s += mag[k] * std::cos(omega[k] * t);
    s /= kGrid;
    double win = 0.42 + 0.5 * std::cos(kPi * u) + 0.08 * std::cos(2 * kPi * u);
    f.taps.push_back(static_cast<float>(s * win));
  }
  return f;
}

const EarFilter& CachedEarFilter(double theta_deg, double radius, double c) {
  static std::mutex mutex;
  static std::map<std::tuple<long long, long long, long long>, EarFilter> cache;
  auto key = std::make_tuple(std::llround(theta_deg * 1e9), std::llround(radius * 1e12),
                             std::llround(c * 1e9));
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, DesignEarFilter(theta_deg, radius, c)).first;
  return it->second;
}

std::vector<float> ApplyFir(std::span<const float> x, long first_lag,
                            std::span<const float> taps) {
  const long n = static_cast<long>(x.size());
  std::vector<float> y(x.size(), 0.0f);
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const float h = taps[j];
    if (h == 0.0f) continue;
    const long lag = first_lag + static_cast<long>(j);
    long lo = std::max(0L, lag);
    long hi = std::min(n, n + lag);
    const float* src = x.data() - lag;
    float* dst = y.data();
    for (long i = lo; i < hi; ++i) dst[i] += h * src[i];
  }
  return y;
}

std::vector<float> Convolve(std::span<const float> x, std::span<const float> ir) {
  return ApplyFir(x, 0, ir);
}

const char* RoleName(SourceRole r) { return r == SourceRole::kTarget ? "target" : "distractor"; }

SourceRole ParseRole(const std::string& s) {
  if (s == "target") return SourceRole::kTarget;
  if (s == "distractor") return SourceRole::kDistractor;
  Fail(ErrorCode::kConfig, "unknown source role: " + s);
}

bool SameMultiset(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (AzimuthDistance(a[i], b[i]) > 1e-9) return false;
  return true;
}

std::vector<double> Mirrored(const std::vector<double>& az, bool about_ear_axis) {
  std::vector<double> out;
  for (double a : az) out.push_back(WrapAzimuth(about_ear_axis ? 180.0 - a : -a));
  return out;
}

SoundRef PlaceholderSound(const std::string& cls, std::uint64_t seed) {
  SoundRef r;
  r.class_id = cls;
  r.seed = seed;
  r.length_s = 4.0 + 4.0 * static_cast<double>(seed % 1000) / 1000.0;
  return r;
}

// Fills class placeholders: target class rotates with the scene index,
// distractors take distinct other classes.
void AssignPlaceholderClasses(SceneConfig& s, std::size_t index,
                              const std::vector<std::string>& classes,
                              std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, 7000 + index));
  const std::string& target = classes[index % classes.size()];
  std::vector<std::string> others;
  for (const auto& c : classes)
    if (c != target) others.push_back(c);
  others.emplace_back(kGeneral);
  std::shuffle(others.begin(), others.end(), rng);
  std::size_t next = 0;
  for (std::size_t i = 0; i < s.sources.size(); ++i) {
    auto& src = s.sources[i];
    std::uint64_t sseed = DeriveSeed(seed, 100000 + 16 * index + i);
    if (src.role == SourceRole::kTarget) {
      src.sound = PlaceholderSound(target, sseed);
    } else {
      const std::string& c = next < others.size() ? others[next++] : std::string(kGeneral);
      src.sound = PlaceholderSound(c, sseed);
    }
  }
}

}  // namespace

std::vector<std::string> SyntheticTargetClasses() {
  return {std::string(kTonalAlarm), std::string(kNoiseBurst), std::string(kAmNoise),
          std::string(kChirp)};
}

bool IsSyntheticClass(std::string_view class_id) { return FindClass(class_id) != nullptr; }

MonoSound SynthClassSound(std::string_view class_id, std::uint64_t seed, double duration_s) {
  const ClassSpec* spec = FindClass(class_id);
  if (!spec) Fail(ErrorCode::kInvalidArgument, "unknown synthetic class: " + std::string(class_id));
  if (!(duration_s > 0.0)) Fail(ErrorCode::kInvalidArgument, "duration must be positive");
  MonoSound out;
  out.samples.assign(SampleCount(duration_s), 0.0f);
  std::mt19937_64 rng(DeriveSeed(seed, Fnv1a64(class_id)));
  double t = Uniform(rng, 0.1, 0.8);
  while (t < duration_s) {
    double len = Uniform(rng, spec->min_len, spec->max_len);
    double end = std::min(t + len, duration_s);
    std::size_t i0 = SampleCount(t), i1 = std::min(SampleCount(end), out.samples.size());
    if (end - t < 0.03 || i1 <= i0) break;
    double gain = Uniform(rng, 0.05, 0.15);
    spec->render(out.samples, i0, i1, gain, rng);
    ApplyFades(out.samples, i0, i1, SampleCount(0.005));
    out.events.push_back({i0 / kSampleRate, i1 / kSampleRate, std::string(class_id)});
    t = end + Uniform(rng, 0.25, 1.2);
  }
  return out;
}

MonoSound LoopToDuration(const MonoSound& sound, double duration_s) {
  const std::size_t n = SampleCount(duration_s);
  const std::size_t len = sound.samples.size();
  if (len == 0) Fail(ErrorCode::kInvalidArgument, "cannot loop an empty sound");
  MonoSound out;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = sound.samples[i % len];
  const double period = len / kSampleRate;
  const double total = n / kSampleRate;
  for (std::size_t k = 0; k * period < total; ++k) {
    for (const auto& e : sound.events) {
      double on = e.onset_s + k * period;
      double off = std::min(e.offset_s + k * period, total);
      if (on < total && off > on) out.events.push_back({on, off, e.label});
    }
  }
  return out;
}

std::string SoundRef::FileId() const {
  if (!IsSynthetic()) return path;
  return "synthetic:" + class_id + ":" + std::to_string(seed);
}

MonoSound LoadSound(const SoundRef& ref) {
  if (ref.IsSynthetic()) {
    double len = ref.length_s > 0.0 ? ref.length_s : 6.0;
    return SynthClassSound(ref.class_id, ref.seed, len);
  }
  WavData wav = ReadWav(ref.path);
  MonoSound out;
  out.samples = Resample(wav.samples, wav.sample_rate, kSampleRate);
  auto sidecar = std::filesystem::path(ref.path).replace_extension(".csv");
  if (std::filesystem::exists(sidecar)) {
    out.events = ReadAnnotations(sidecar);
    for (auto& e : out.events) e.label = ref.class_id;
  }
  return out;
}

std::string_view ModeName(SceneMode mode) {
  switch (mode) {
    case SceneMode::kBisected: return "bisected";
    case SceneMode::kTargetAtZero: return "target_at_zero";
    case SceneMode::kFrontLeft: return "front_left";
    case SceneMode::kEarCentered: return "ear_centered";
  }
  return "?";
}

SceneMode ParseMode(std::string_view name) {
  for (SceneMode m : kAllSceneModes)
    if (ModeName(m) == name) return m;
  Fail(ErrorCode::kConfig, "unknown scene mode: " + std::string(name));
}

std::size_t SceneConfig::TargetIndex() const {
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (sources[i].role == SourceRole::kTarget) return i;
  Fail(ErrorCode::kConfig, "scene " + id + " has no target source");
}

void SceneConfig::Validate() const {
  auto bad = [&](const std::string& why) { Fail(ErrorCode::kConfig, "scene " + id + ": " + why); };
  if (sources.empty() || sources.size() > 4) bad("source count must be 1..4");
  std::size_t targets = 0;
  for (const auto& s : sources) {
    if (s.role == SourceRole::kTarget) ++targets;
    if (!(s.azimuth_deg > -180.0 && s.azimuth_deg <= 180.0)) bad("azimuth outside (-180, 180]");
  }
  if (targets != 1) bad("exactly one target source required");
  if (snr_db.size() != sources.size() - 1) bad("one SNR per distractor required");
  for (double snr : snr_db)
    if (!std::isfinite(snr)) bad("SNR must be finite");
  if (!(duration_s > 0.0)) bad("duration must be positive");
  const auto& target = Target();
  for (const auto& s : sources)
    if (s.role == SourceRole::kDistractor && s.sound.class_id == target.sound.class_id)
      bad("distractor shares the target class");
  if (!mode) return;
  std::vector<double> az;
  for (const auto& s : sources) az.push_back(s.azimuth_deg);
  const bool nose_symmetric = SameMultiset(az, Mirrored(az, false));
  const bool ear_symmetric = SameMultiset(az, Mirrored(az, true));
  switch (*mode) {
    case SceneMode::kTargetAtZero:
      if (std::abs(target.azimuth_deg) > 1e-9) bad("target_at_zero requires target at 0");
      break;
    case SceneMode::kBisected:
      if (!nose_symmetric) bad("bisected scenes must be symmetric about the nose");
      break;
    case SceneMode::kEarCentered:
      if (!ear_symmetric) bad("ear_centered scenes must be symmetric about +90");
      for (double a : az)
        if (a < -1e-9) bad("ear_centered sources must lie in the left hemisphere");
      break;
    case SceneMode::kFrontLeft:
      if (std::abs(target.azimuth_deg) < 1e-9) bad("front_left target must not be at 0");
      if (sources.size() > 1 && (nose_symmetric || ear_symmetric))
        bad("front_left scenes must not be symmetric about nose or ear");
      break;
  }
}

double BinauralSignal::duration_s() const { return left.size() / kSampleRate; }

HeadModel HeadModel::Parametric(double radius_m) {
  HeadModel h;
  h.head_radius_m = radius_m;
  h.Validate();
  return h;
}

HeadModel HeadModel::LoadImpulseResponses(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open impulse responses " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIo, "malformed impulse-response file: " + std::string(e.what()));
  }
  HeadModel h;
  h.kind = Kind::kImpulseResponseSet;
  h.ir_sample_rate = j.at("sample_rate").get<double>();
  h.ir_grid_step_deg = j.value("grid_step_deg", 0.0);
  for (const auto& e : j.at("irs")) {
    ImpulseResponse ir;
    ir.azimuth_deg = WrapAzimuth(e.at("azimuth_deg").get<double>());
    ir.left = e.at("left").get<std::vector<float>>();
    ir.right = e.at("right").get<std::vector<float>>();
    h.irs.push_back(std::move(ir));
  }
  if (h.ir_grid_step_deg <= 0.0 && h.irs.size() > 1) {
    double step = 360.0;
    for (std::size_t a = 0; a < h.irs.size(); ++a)
      for (std::size_t b = a + 1; b < h.irs.size(); ++b) {
        double d = AzimuthDistance(h.irs[a].azimuth_deg, h.irs[b].azimuth_deg);
        if (d > 1e-9) step = std::min(step, d);
      }
    h.ir_grid_step_deg = step;
  }
  h.Validate();
  return h;
}

void HeadModel::Validate() const {
  if (kind == Kind::kParametricSphere) {
    if (!(head_radius_m > 0.0)) Fail(ErrorCode::kConfig, "head radius must be positive");
    if (!(speed_of_sound > 0.0)) Fail(ErrorCode::kConfig, "speed of sound must be positive");
    return;
  }
  if (irs.empty()) Fail(ErrorCode::kConfig, "impulse-response set is empty");
  if (ir_sample_rate != kSampleRate)
    Fail(ErrorCode::kConfig, "impulse responses must be sampled at 44100 Hz");
  for (const auto& ir : irs)
    if (ir.left.empty() || ir.left.size() != ir.right.size())
      Fail(ErrorCode::kConfig, "impulse response channels must be non-empty and equal length");
}

std::string HeadModel::Describe() const {
  if (kind == Kind::kParametricSphere)
    return "parametric_sphere(radius=" + std::to_string(head_radius_m) + ")";
  return "impulse_response_set(n=" + std::to_string(irs.size()) + ")";
}

double WoodworthItd(double azimuth_deg, double radius_m, double speed_of_sound) {
  double a = WrapAzimuth(azimuth_deg);
  if (a > 90.0) a = 180.0 - a;
  if (a < -90.0) a = -180.0 - a;
  double rad = a * kPi / 180.0;
  return radius_m / speed_of_sound * (std::sin(rad) + rad);
}

BinauralSignal RenderSource(std::span<const float> mono, double azimuth_deg,
                            const HeadModel& head) {
  for (float v : mono)
    if (!std::isfinite(v)) Fail(ErrorCode::kInvalidArgument, "signal contains non-finite samples");
  if (!std::isfinite(azimuth_deg)) Fail(ErrorCode::kInvalidArgument, "azimuth must be finite");
  const double az = WrapAzimuth(azimuth_deg);
  BinauralSignal out;
  if (head.kind == HeadModel::Kind::kParametricSphere) {
    const double theta_left = AzimuthDistance(az, 90.0);
    const double theta_right = AzimuthDistance(az, -90.0);
    const auto& fl = CachedEarFilter(theta_left, head.head_radius_m, head.speed_of_sound);
    const auto& fr = CachedEarFilter(theta_right, head.head_radius_m, head.speed_of_sound);
    out.left = ApplyFir(mono, fl.first_lag, fl.taps);
    out.right = ApplyFir(mono, fr.first_lag, fr.taps);
    return out;
  }
  const ImpulseResponse* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& ir : head.irs) {
    double d = AzimuthDistance(ir.azimuth_deg, az);
    if (d < best_d) {
      best_d = d;
      best = &ir;
    }
  }
  if (!best || best_d > head.ir_grid_step_deg + 1e-9)
    Fail(ErrorCode::kInvalidArgument,
         "no impulse response within the grid step of azimuth " + std::to_string(az));
  out.left = Convolve(mono, best->left);
  out.right = Convolve(mono, best->right);
  return out;
}

std::vector<double> FramePower(std::span<const float> left, std::span<const float> right) {
  const std::size_t frames = FrameCount(left.size());
  const std::size_t segments = frames + 1;
  std::vector<double> seg(segments, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    double acc = 0.0;
    const std::size_t i0 = s * kFrameShift;
    for (std::size_t i = i0; i < i0 + kFrameShift && i < left.size(); ++i)
      acc += 0.5 * (double(left[i]) * left[i] + double(right[i]) * right[i]);
    seg[s] = acc;
  }
  std::vector<double> p(frames);
  for (std::size_t k = 0; k < frames; ++k) p[k] = (seg[k] + seg[k + 1]) / kFrameLength;
  return p;
}

double ActiveMeanPower(std::span<const float> left, std::span<const float> right) {
  std::vector<double> p = FramePower(left, right);
  if (p.empty()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < left.size(); ++i)
      acc += 0.5 * (double(left[i]) * left[i] + double(right[i]) * right[i]);
    return left.empty() ? 0.0 : acc / left.size();
  }
  double peak = *std::max_element(p.begin(), p.end());
  if (peak <= 0.0) return 0.0;
  const double threshold = peak * DbToPower(kActivityThresholdDb);
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : p)
    if (v > threshold) {
      sum += v;
      ++count;
    }
  return sum / count;
}

MixedScene MixScene(const SceneConfig& cfg, const HeadModel& head) {
  cfg.Validate();
  const std::size_t n = SampleCount(cfg.duration_s);
  const std::size_t t_idx = cfg.TargetIndex();
  std::vector<BinauralSignal> rendered(cfg.sources.size());
  std::vector<double> power(cfg.sources.size());
  MixedScene out;
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    const auto& src = cfg.sources[i];
    MonoSound sound = LoopToDuration(LoadSound(src.sound), cfg.duration_s);
    rendered[i] = RenderSource(sound.samples, src.azimuth_deg, head);
    power[i] = ActiveMeanPower(rendered[i].left, rendered[i].right);
    if (!(power[i] > 0.0))
      Fail(ErrorCode::kNumeric, "scene " + cfg.id + ": source " + std::to_string(i) +
                                    " has zero active-period energy");
    SourceAnnotation ann;
    ann.class_id = src.sound.class_id;
    ann.file_id = src.sound.FileId();
    ann.azimuth_deg = src.azimuth_deg;
    ann.role = src.role;
    ann.events = std::move(sound.events);
    out.signal.annotations.push_back(std::move(ann));
  }
  out.source_gain.assign(cfg.sources.size(), 1.0);
  std::size_t d = 0;
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    if (i == t_idx) continue;
    out.source_gain[i] = std::sqrt(power[t_idx] / (power[i] * DbToPower(cfg.snr_db[d++])));
  }
  out.signal.left.assign(n, 0.0f);
  out.signal.right.assign(n, 0.0f);
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    const float g = static_cast<float>(out.source_gain[i]);
    for (std::size_t k = 0; k < n; ++k) {
      out.signal.left[k] += g * rendered[i].left[k];
      out.signal.right[k] += g * rendered[i].right[k];
    }
    std::vector<double> fp = FramePower(rendered[i].left, rendered[i].right);
    for (double& v : fp) v *= out.source_gain[i] * out.source_gain[i];
    out.source_frame_power.push_back(std::move(fp));
  }
  if (cfg.diffuse_snr_db && std::isfinite(*cfg.diffuse_snr_db)) {
    auto ann = std::move(out.signal.annotations);
    out.signal = AddDiffuseNoise(out.signal, *cfg.diffuse_snr_db, head,
                                 DeriveSeed(cfg.rng_seed, 0xd1ff));
    out.signal.annotations = std::move(ann);
  }
  return out;
}

BinauralSignal RenderDiffuseNoise(std::size_t num_samples, const HeadModel& head,
                                  std::uint64_t seed) {
  BinauralSignal out;
  out.left.assign(num_samples, 0.0f);
  out.right.assign(num_samples, 0.0f);
  std::vector<float> noise(num_samples);
  for (int k = 0; k < 360; ++k) {
    std::mt19937_64 rng(DeriveSeed(seed, k));
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : noise) v = dist(rng);
    BinauralSignal r = RenderSource(noise, WrapAzimuth(k - 179.0), head);
    for (std::size_t i = 0; i < num_samples; ++i) {
      out.left[i] += r.left[i];
      out.right[i] += r.right[i];
    }
  }
  return out;
}

BinauralSignal AddDiffuseNoise(const BinauralSignal& scene, double snr_db,
                               const HeadModel& head, std::uint64_t seed) {
  if (std::isnan(snr_db)) Fail(ErrorCode::kInvalidArgument, "diffuse SNR must not be NaN");
  if (std::isinf(snr_db) && snr_db > 0) return scene;
  if (!std::isfinite(snr_db)) Fail(ErrorCode::kInvalidArgument, "diffuse SNR must be finite");
  const double p_points = ActiveMeanPower(scene.left, scene.right);
  if (!(p_points > 0.0)) Fail(ErrorCode::kNumeric, "scene has zero active-period energy");
  BinauralSignal noise = RenderDiffuseNoise(scene.size(), head, seed);
  const double p_noise = ActiveMeanPower(noise.left, noise.right);
  const float g = static_cast<float>(std::sqrt(p_points / (p_noise * DbToPower(snr_db))));
  BinauralSignal out = scene;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.left[i] += g * noise.left[i];
    out.right[i] += g * noise.right[i];
  }
  return out;
}

SoundPool SyntheticCatalog(const std::vector<std::string>& target_classes,
                           std::size_t files_per_class, std::uint64_t seed) {
  SoundPool pool;
  pool.target_classes = target_classes;
  std::vector<std::string> all = target_classes;
  all.emplace_back(kGeneral);
  for (const auto& cls : all) {
    if (!IsSyntheticClass(cls)) Fail(ErrorCode::kConfig, "unknown synthetic class: " + cls);
    auto& files = pool.files[cls];
    for (std::size_t j = 0; j < files_per_class; ++j)
      files.push_back(PlaceholderSound(cls, DeriveSeed(seed ^ Fnv1a64(cls), j)));
  }
  return pool;
}

SoundPool LoadWavDataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) Fail(ErrorCode::kIo, "dataset directory not found: " + root.string());
  SoundPool pool;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    std::string cls = d.filename().string();
    std::vector<fs::path> wavs;
    for (const auto& e : fs::directory_iterator(d))
      if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) continue;
    for (const auto& w : wavs) {
      SoundRef r;
      r.class_id = cls;
      r.path = w.string();
      pool.files[cls].push_back(r);
    }
    if (cls != pool.general_class) pool.target_classes.push_back(cls);
  }
  if (pool.target_classes.empty()) Fail(ErrorCode::kIo, "dataset has no class directories with WAV files");
  return pool;
}

std::pair<SoundPool, SoundPool> SplitPool(const SoundPool& pool, double train_fraction,
                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    Fail(ErrorCode::kConfig, "train fraction must be in (0, 1)");
  SoundPool train, test;
  train.target_classes = test.target_classes = pool.target_classes;
  train.general_class = test.general_class = pool.general_class;
  for (const auto& [cls, files] : pool.files) {
    if (files.size() < 2) Fail(ErrorCode::kConfig, "class " + cls + " needs at least two files to split");
    std::vector<std::size_t> idx(files.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(DeriveSeed(seed, Fnv1a64(cls)));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * files.size()));
    n_train = std::clamp<std::size_t>(n_train, 1, files.size() - 1);
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + n_train), te(idx.begin() + n_train, idx.end());
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    for (auto i : tr) train.files[cls].push_back(files[i]);
    for (auto i : te) test.files[cls].push_back(files[i]);
  }
  return {train, test};
}

std::vector<SceneConfig> BuildSceneSuite(SuiteKind kind, std::uint64_t seed,
                                         const SuiteOptions& options) {
  if (options.target_classes.empty()) Fail(ErrorCode::kConfig, "no target classes");
  std::vector<SceneConfig> out;
  char id[32];
  if (kind == SuiteKind::kTrain) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < options.train_scenes; ++i) {
      SceneConfig s;
      std::snprintf(id, sizeof(id), "train-%03zu", i);
      s.id = id;
      s.duration_s = options.duration_s;
      s.rng_seed = DeriveSeed(seed, i);
      const int count = std::uniform_int_distribution<int>(1, 4)(rng);
      for (int k = 0; k < count; ++k) {
        SourceSpec src;
        src.role = k == 0 ? SourceRole::kTarget : SourceRole::kDistractor;
        src.azimuth_deg = WrapAzimuth(22.5 * std::uniform_int_distribution<int>(0, 15)(rng));
        if (k > 0) s.snr_db.push_back(Uniform(rng, -20.0, 20.0));
        s.sources.push_back(src);
      }
      AssignPlaceholderClasses(s, i, options.target_classes, seed);
      s.Validate();
      out.push_back(std::move(s));
    }
    return out;
  }

  // Test grid.
  const double gaps[] = {0, 10, 20, 45, 60, 90, 120, 180};
  const double snrs[] = {-20, -10, 0, 10, 20};
  auto emit = [&](SceneMode mode, std::vector<double> az, std::size_t target, double gap,
                  double snr, const char* position) {
    SceneConfig s;
    std::snprintf(id, sizeof(id), "test-%03zu", out.size());
    s.id = id;
    s.duration_s = options.duration_s;
    s.rng_seed = DeriveSeed(seed, out.size());
    s.mode = mode;
    s.azimuth_gap_deg = gap;
    s.target_position = position;
    for (std::size_t k = 0; k < az.size(); ++k) {
      SourceSpec src;
      src.azimuth_deg = WrapAzimuth(az[k]);
      src.role = k == target ? SourceRole::kTarget : SourceRole::kDistractor;
      if (k != target) s.snr_db.push_back(snr);
      s.sources.push_back(src);
    }
    AssignPlaceholderClasses(s, out.size(), options.target_classes, seed);
    s.Validate();
    out.push_back(std::move(s));
  };
  // Single-source scenes: one per mode at the mode's anchor azimuth.
  emit(SceneMode::kBisected, {0.0}, 0, 0, 0, "end");
  emit(SceneMode::kTargetAtZero, {0.0}, 0, 0, 0, "end");
  emit(SceneMode::kFrontLeft, {45.0}, 0, 0, 0, "end");
  emit(SceneMode::kEarCentered, {90.0}, 0, 0, 0, "end");
  for (int n = 2; n <= 4; ++n) {
    for (double gap : gaps) {
      const double span = (n - 1) * gap;
      if (span > 180.0) continue;  // would wrap past the rear
      for (SceneMode mode : kAllSceneModes) {
        for (const char* position : {"end", "center"}) {
          const bool center = std::string_view(position) == "center";
          if (center && n != 3) continue;
          // A centered target in a bisected 3-source scene sits at 0 and
          // duplicates target_at_zero/center.
          if (center && mode == SceneMode::kBisected) continue;
          std::vector<double> az(n);
          std::size_t target = 0;
          switch (mode) {
            case SceneMode::kBisected:
              for (int k = 0; k < n; ++k) az[k] = (k - (n - 1) / 2.0) * gap;
              target = n - 1;
              break;
            case SceneMode::kTargetAtZero:
              if (center) {
                az = {-gap, 0.0, gap};
                target = 1;
              } else {
                for (int k = 0; k < n; ++k) az[k] = k * gap;
                target = 0;
              }
              break;
            case SceneMode::kFrontLeft:
              for (int k = 0; k < n; ++k) az[k] = 45.0 + (k - (n - 1) / 2.0) * gap;
              target = center ? 1 : n - 1;
              break;
            case SceneMode::kEarCentered:
              for (int k = 0; k < n; ++k) az[k] = 90.0 + (k - (n - 1) / 2.0) * gap;
              target = center ? 1 : 0;
              break;
          }
          for (double snr : snrs) emit(mode, az, target, gap, snr, position);
        }
      }
    }
  }
  return out;
}

std::vector<SceneConfig> SelectSubset(const std::vector<SceneConfig>& suite, std::size_t n,
                                      std::uint64_t seed) {
  if (n >= suite.size()) return suite;
  std::vector<std::size_t> singles;
  std::map<SceneMode, std::vector<std::size_t>> by_mode;
  std::vector<std::size_t> other;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    if (suite[i].sources.size() == 1) singles.push_back(i);
    else if (suite[i].mode) by_mode[*suite[i].mode].push_back(i);
    else other.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  auto take = [&](std::vector<std::size_t> group, std::size_t k) {
    std::shuffle(group.begin(), group.end(), rng);
    for (std::size_t i = 0; i < std::min(k, group.size()); ++i) chosen.push_back(group[i]);
  };
  const std::size_t n_single = std::min(singles.size(), std::max<std::size_t>(1, n / 5));
  take(singles, n_single);
  std::size_t rest = n - n_single;
  const std::size_t groups = by_mode.size();
  std::size_t g = 0;
  for (auto& [mode, members] : by_mode) {
    std::size_t k = rest / groups + (g < rest % groups ? 1 : 0);
    take(members, k);
    ++g;
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<SceneConfig> out;
  for (auto i : chosen) out.push_back(suite[i]);
  return out;
}

std::vector<SceneConfig> BindSounds(const std::vector<SceneConfig>& scenes, const SoundPool& pool,
                                    bool all_targets, std::uint64_t seed) {
  if (pool.target_classes.empty()) Fail(ErrorCode::kConfig, "sound pool has no target classes");
  for (const auto& c : pool.target_classes)
    if (!pool.files.count(c) || pool.files.at(c).empty())
      Fail(ErrorCode::kConfig, "sound pool has no files for class " + c);
  std::map<std::string, std::size_t> rotation;
  std::vector<SceneConfig> out;
  std::size_t instance = 0;
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const SceneConfig& s = scenes[si];
    std::vector<std::string> targets;
    if (all_targets) {
      targets = pool.target_classes;
    } else {
      const auto& tc = s.Target().sound.class_id;
      bool known = std::find(pool.target_classes.begin(), pool.target_classes.end(), tc) !=
                   pool.target_classes.end();
      targets = {known ? tc : pool.target_classes[si % pool.target_classes.size()]};
    }
    for (const auto& tc : targets) {
      SceneConfig inst = s;
      if (all_targets) inst.id = s.id + "-" + tc;
      std::mt19937_64 rng(DeriveSeed(seed, instance));
      inst.rng_seed = DeriveSeed(s.rng_seed, instance);
      std::vector<std::string> others;
      for (const auto& c : pool.target_classes)
        if (c != tc) others.push_back(c);
      if (pool.files.count(pool.general_class) && !pool.files.at(pool.general_class).empty())
        others.push_back(pool.general_class);
      if (others.empty()) others.push_back(pool.general_class);
      std::shuffle(others.begin(), others.end(), rng);
      std::size_t next = 0;
      for (auto& src : inst.sources) {
        if (src.role == SourceRole::kTarget) {
          const auto& files = pool.files.at(tc);
          src.sound = files[rotation[tc]++ % files.size()];
        } else {
          const std::string& cls = others[next++ % others.size()];
          auto it = pool.files.find(cls);
          if (it == pool.files.end() || it->second.empty())
            Fail(ErrorCode::kConfig, "sound pool has no files for class " + cls);
          src.sound = it->second[std::uniform_int_distribution<std::size_t>(0, it->second.size() - 1)(rng)];
        }
      }
      inst.Validate();
      out.push_back(std::move(inst));
      ++instance;
    }
  }
  return out;
}

void SaveSuite(const std::filesystem::path& path, const std::vector<SceneConfig>& scenes) {
  json arr = json::array();
  for (const auto& s : scenes) {
    json js;
    js["id"] = s.id;
    js["duration_s"] = s.duration_s;
    js["rng_seed"] = s.rng_seed;
    js["mode"] = s.mode ? json(std::string(ModeName(*s.mode))) : json(nullptr);
    js["diffuse_snr_db"] = s.diffuse_snr_db ? json(*s.diffuse_snr_db) : json(nullptr);
    js["azimuth_gap_deg"] = s.azimuth_gap_deg;
    js["target_position"] = s.target_position;
    js["snr_db"] = s.snr_db;
    json srcs = json::array();
    for (const auto& src : s.sources) {
      srcs.push_back({{"role", RoleName(src.role)},
                      {"azimuth_deg", src.azimuth_deg},
                      {"sound",
                       {{"class", src.sound.class_id},
                        {"seed", src.sound.seed},
                        {"length_s", src.sound.length_s},
                        {"path", src.sound.path}}}});
    }
    js["sources"] = srcs;
    arr.push_back(js);
  }
  std::ofstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot write suite " + path.string());
  f << json{{"format", "seld-scene-suite/1"}, {"scenes", arr}}.dump(1) << '\n';
}

std::vector<SceneConfig> LoadSuite(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open suite " + path.string());
  std::vector<SceneConfig> out;
  try {
    json j;
    f >> j;
    for (const auto& js : j.at("scenes")) {
      SceneConfig s;
      s.id = js.at("id").get<std::string>();
      s.duration_s = js.at("duration_s").get<double>();
      s.rng_seed = js.at("rng_seed").get<std::uint64_t>();
      if (!js.at("mode").is_null()) s.mode = ParseMode(js.at("mode").get<std::string>());
      if (!js.at("diffuse_snr_db").is_null()) s.diffuse_snr_db = js.at("diffuse_snr_db").get<double>();
      s.azimuth_gap_deg = js.value("azimuth_gap_deg", 0.0);
      s.target_position = js.value("target_position", std::string());
      s.snr_db = js.at("snr_db").get<std::vector<double>>();
      for (const auto& jsrc : js.at("sources")) {
        SourceSpec src;
        src.role = ParseRole(jsrc.at("role").get<std::string>());
        src.azimuth_deg = jsrc.at("azimuth_deg").get<double>();
        const auto& snd = jsrc.at("sound");
        src.sound.class_id = snd.at("class").get<std::string>();
        src.sound.seed = snd.value("seed", std::uint64_t{0});
        src.sound.length_s = snd.value("length_s", 0.0);
        src.sound.path = snd.value("path", std::string());
        s.sources.push_back(src);
      }
      s.Validate();
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, "malformed suite file " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace seld::scene
