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


#include "seld/afe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seld/common.hpp"

namespace seld::afe {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kIhcCutoffHz = 1000.0;
constexpr double kRatemapTau = 0.008;
constexpr std::size_t kAmsDecimation = 9;
constexpr int kMaxLag = 48;  // floor(1.1 ms * 44.1 kHz)

// Filter states decaying through silent input would otherwise sink into the
// subnormal range, where arithmetic is an order of magnitude slower. The
// floor is 300 dB below full scale, so products of two values stay normal
// in single precision.
inline double Flush(double v) { return std::abs(v) < 1e-15 ? 0.0 : v; }

// 4th-order complex gammatone (cascade of four complex one-pole stages),
// followed by half-wave rectification and a 2nd-order low-pass.
std::vector<float> GammatoneIhc(std::span<const float> x, double fc) {
  const double lambda = std::exp(-2.0 * kPi * 1.019 * Erb(fc) / kSampleRate);
  const double ar = lambda * std::cos(2.0 * kPi * fc / kSampleRate);
  const double ai = lambda * std::sin(2.0 * kPi * fc / kSampleRate);
  const double g = 1.0 - lambda;
  const double lp = 1.0 - std::exp(-2.0 * kPi * kIhcCutoffHz / kSampleRate);
  double sr[4] = {0, 0, 0, 0}, si[4] = {0, 0, 0, 0};
  double y1 = 0.0, y2 = 0.0;
  std::vector<float> out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    double in_r = g * x[n], in_i = 0.0;
    for (int s = 0; s < 4; ++s) {
      double nr = in_r + ar * sr[s] - ai * si[s];
      double ni = in_i + ar * si[s] + ai * sr[s];
      sr[s] = nr;
      si[s] = ni;
      in_r = g * nr;
      in_i = g * ni;
    }
    double bm = 2.0 * sr[3];
    double hw = bm > 0.0 ? bm : 0.0;
    y1 += lp * (hw - y1);
    y2 += lp * (y1 - y2);
    if (n % 64 == 0) {
      for (int s = 0; s < 4; ++s) {
        sr[s] = Flush(sr[s]);
        si[s] = Flush(si[s]);
      }
      y1 = Flush(y1);
      y2 = Flush(y2);
    }
    out[n] = static_cast<float>(y2);
  }
  return out;
}

// Sums of `v` over consecutive segments of `seg` samples; `count` segments.
std::vector<double> SegmentSums(std::span<const double> v, std::size_t seg, std::size_t count) {
  std::vector<double> s(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    double acc = 0.0;
    for (std::size_t i = k * seg; i < (k + 1) * seg && i < v.size(); ++i) acc += v[i];
    s[k] = acc;
  }
  return s;
}

void RatemapColumn(std::span<const float> ihc, std::size_t frames, Eigen::MatrixXd& out,
                   std::size_t col) {
  const double alpha = std::exp(-1.0 / (kRatemapTau * kSampleRate));
  std::vector<double> smooth(ihc.size());
  double y = 0.0;
  for (std::size_t n = 0; n < ihc.size(); ++n) {
    y = Flush(alpha * y + (1.0 - alpha) * ihc[n]);
    smooth[n] = y;
  }
  auto seg = SegmentSums(smooth, kFrameShift, frames + 1);
  for (std::size_t k = 0; k < frames; ++k) out(k, col) = (seg[k] + seg[k + 1]) / kFrameLength;
}

void AmsColumns(std::span<const float> ihc, std::size_t frames, Eigen::MatrixXd& out,
                std::size_t channel) {
  const std::size_t m = ihc.size() / kAmsDecimation;
  const double fs = kSampleRate / kAmsDecimation;
  std::vector<double> env(m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kAmsDecimation; ++j) acc += ihc[i * kAmsDecimation + j];
    env[i] = acc / kAmsDecimation;
  }
  const std::size_t shift = kFrameShift / kAmsDecimation;  // 49
  const auto centers = ModulationCenterFrequencies();
  std::vector<double> mag(m);
  for (std::size_t f = 0; f < kModulationFilters; ++f) {
    // Constant 0 dB peak-gain biquad band-pass, one octave wide.
    const double w0 = 2.0 * kPi * centers[f] / fs;
    const double alpha = std::sin(w0) / (2.0 * std::numbers::sqrt2);
    const double a0 = 1.0 + alpha;
    const double b0 = alpha / a0, b2 = -alpha / a0;
    const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double yv = Flush(b0 * env[i] + b2 * x2 - a1 * y1 - a2 * y2);
      x2 = x1;
      x1 = env[i];
      y2 = y1;
      y1 = yv;
      mag[i] = std::abs(yv);
    }
    auto seg = SegmentSums(mag, shift, frames + 1);
    for (std::size_t k = 0; k < frames; ++k)
      out(k, channel * kModulationFilters + f) = (seg[k] + seg[k + 1]) / (2.0 * shift);
  }
}

int FloorHalf(int d) { return d >= 0 ? d / 2 : -((-d + 1) / 2); }

// Normalized cross-correlation per frame, each lag normalized by the energy
// of its own windows. The lag is split symmetrically between the ears so
// that swapping the inputs mirrors the function exactly.
void CueColumn(std::span<const float> l, std::span<const float> r, std::size_t frames,
               BinauralCues& cues, std::size_t col) {
  const long n = static_cast<long>(l.size());
  const std::size_t segments = frames + 1;
  constexpr int kLags = 2 * kMaxLag + 1;
  std::vector<double> pl(n + 1, 0.0), pr(n + 1, 0.0);
  for (long i = 0; i < n; ++i) {
    pl[i + 1] = pl[i] + double(l[i]) * l[i];
    pr[i + 1] = pr[i] + double(r[i]) * r[i];
  }
  std::vector<double> xc(segments * kLags, 0.0), el(segments * kLags, 0.0),
      er(segments * kLags, 0.0);
  using Vec = Eigen::Map<const Eigen::VectorXf>;
  for (std::size_t s = 0; s < segments; ++s) {
    const long s0 = static_cast<long>(s * kFrameShift), s1 = s0 + static_cast<long>(kFrameShift);
    for (int d = -kMaxLag; d <= kMaxLag; ++d) {
      const long ol = -FloorHalf(d), orr = d - FloorHalf(d);
      const long lo = std::max({s0, -ol, -orr});
      const long hi = std::min({s1, n - ol, n - orr});
      if (hi <= lo) continue;
      const std::size_t idx = s * kLags + (d + kMaxLag);
      xc[idx] = Vec(l.data() + lo + ol, hi - lo).dot(Vec(r.data() + lo + orr, hi - lo));
      el[idx] = pl[hi + ol] - pl[lo + ol];
      er[idx] = pr[hi + orr] - pr[lo + orr];
    }
  }
  double c[kLags];
  for (std::size_t k = 0; k < frames; ++k) {
    for (int j = 0; j < kLags; ++j) {
      const std::size_t a = k * kLags + j, b = (k + 1) * kLags + j;
      c[j] = (xc[a] + xc[b]) / std::sqrt((el[a] + el[b]) * (er[a] + er[b]) + kEnergyFloor);
    }
    int best = 0;
    for (int a = 1; a <= kMaxLag; ++a) {
      if (c[kMaxLag + a] > c[kMaxLag + best]) best = a;
      if (c[kMaxLag - a] > c[kMaxLag + best]) best = -a;
    }
    double itd = 0.0;
    if (c[kMaxLag + best] > 0.0) {
      double delta = 0.0;
      if (best > -kMaxLag && best < kMaxLag) {
        const double y0 = c[kMaxLag + best - 1], y1 = c[kMaxLag + best], y2 = c[kMaxLag + best + 1];
        const double denom = y0 - 2.0 * y1 + y2;
        if (denom < 0.0) delta = std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
      }
      itd = std::clamp((best + delta) / kSampleRate, -kMaxItdSeconds, kMaxItdSeconds);
    }
    const std::size_t z0 = k * kLags + kMaxLag, z1 = (k + 1) * kLags + kMaxLag;
    const double e_l = el[z0] + el[z1], e_r = er[z0] + er[z1];
    cues.itd_s(k, col) = itd;
    cues.ild_db(k, col) = 10.0 * (std::log10(std::max(e_l, kEnergyFloor)) -
                                  std::log10(std::max(e_r, kEnergyFloor)));
  }
}

std::size_t RequireFrames(std::size_t n) {
  std::size_t frames = FrameCount(n);
  if (frames == 0) Fail(ErrorCode::kInvalidArgument, "signal shorter than one 20 ms frame");
  return frames;
}

void CheckFinite(std::span<const float> x) {
  for (float v : x)
    if (!std::isfinite(v)) Fail(ErrorCode::kInvalidArgument, "signal contains non-finite samples");
}

}  // namespace

double ErbRate(double hz) { return 21.4 * std::log10(0.00437 * hz + 1.0); }
double InverseErbRate(double e) { return (std::pow(10.0, e / 21.4) - 1.0) / 0.00437; }
double Erb(double hz) { return 24.7 * (0.00437 * hz + 1.0); }

std::vector<double> ErbSpacedFrequencies(std::size_t n, double lo_hz, double hi_hz) {
  if (n < 2) Fail(ErrorCode::kInvalidArgument, "need at least two channels");
  if (!(lo_hz > 0.0 && lo_hz < hi_hz)) Fail(ErrorCode::kInvalidArgument, "need 0 < f_lo < f_hi");
  const double e0 = ErbRate(lo_hz), e1 = ErbRate(hi_hz);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = InverseErbRate(e0 + (e1 - e0) * i / (n - 1));
  f.front() = lo_hz;
  f.back() = hi_hz;
  return f;
}

Cochleagram ComputeCochleagram(std::span<const float> signal, std::size_t n_channels,
                               double lo_hz, double hi_hz) {
  CheckFinite(signal);
  Cochleagram c;
  c.center_frequencies_hz = ErbSpacedFrequencies(n_channels, lo_hz, hi_hz);
  for (double fc : c.center_frequencies_hz) c.channels.push_back(GammatoneIhc(signal, fc));
  return c;
}

Eigen::MatrixXd Ratemap(const Cochleagram& coch) {
  if (coch.channels.empty()) Fail(ErrorCode::kInvalidArgument, "empty cochleagram");
  const std::size_t frames = RequireFrames(coch.channels[0].size());
  Eigen::MatrixXd out(frames, coch.channels.size());
  for (std::size_t c = 0; c < coch.channels.size(); ++c) RatemapColumn(coch.channels[c], frames, out, c);
  return out;
}

std::vector<double> ModulationCenterFrequencies() {
  std::vector<double> f(kModulationFilters);
  for (std::size_t i = 0; i < kModulationFilters; ++i) f[i] = 2.0 * std::pow(2.0, double(i));
  return f;
}

Eigen::MatrixXd Ams(const Cochleagram& coch16) {
  if (coch16.channels.size() != kAmsChannels)
    Fail(ErrorCode::kInvalidArgument, "AMS expects a 16-channel cochleagram");
  const std::size_t frames = RequireFrames(coch16.channels[0].size());
  Eigen::MatrixXd out(frames, kAmsChannels * kModulationFilters);
  for (std::size_t c = 0; c < kAmsChannels; ++c) AmsColumns(coch16.channels[c], frames, out, c);
  return out;
}

BinauralCues ComputeBinauralCues(const Cochleagram& left, const Cochleagram& right) {
  if (left.channels.size() != right.channels.size() || left.channels.empty() ||
      left.channels[0].size() != right.channels[0].size())
    Fail(ErrorCode::kMismatch, "left and right cochleagrams are not aligned");
  const std::size_t frames = RequireFrames(left.channels[0].size());
  BinauralCues cues{Eigen::MatrixXd(frames, left.channels.size()),
                    Eigen::MatrixXd(frames, left.channels.size())};
  for (std::size_t c = 0; c < left.channels.size(); ++c)
    CueColumn(left.channels[c], right.channels[c], frames, cues, c);
  return cues;
}

const std::array<std::string_view, kSpectralFeatures>& SpectralFeatureNames() {
  static const std::array<std::string_view, kSpectralFeatures> names = {
      "centroid", "spread",    "brightness", "hfc",      "crest",   "decrease", "entropy",
      "flatness", "irregularity", "kurtosis", "skewness", "rolloff", "flux",     "variation"};
  return names;
}

SpectralVector SpectralFeatures(std::span<const double> x, std::span<const double> prev,
                                std::span<const double> cf) {
  const std::size_t n = x.size();
  if (n < 2 || prev.size() != n || cf.size() != n)
    Fail(ErrorCode::kMismatch, "spectral feature inputs have mismatched sizes");
  SpectralVector v{};
  double sum = 0.0, peak = 0.0;
  for (double e : x) {
    sum += e;
    peak = std::max(peak, e);
  }
  if (sum <= 0.0) {
    v[0] = InverseErbRate(0.5 * (ErbRate(cf.front()) + ErbRate(cf.back())));
    v[7] = 1.0;
    return v;
  }
  // Scale-free features are computed on the peak-normalized frame so that
  // heavily masked frames (values near the double underflow range) stay
  // finite.
  std::vector<double> xn(n);
  double nsum = 0.0, nsum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xn[i] = x[i] / peak;
    nsum += xn[i];
    nsum_sq += xn[i] * xn[i];
  }
  // Centroid and spread treat the frame as a distribution over frequency.
  double centroid = 0.0;
  for (std::size_t i = 0; i < n; ++i) centroid += cf[i] * xn[i];
  centroid /= nsum;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = cf[i] - centroid;
    m2 += d * d * xn[i];
    m3 += d * d * d * xn[i];
    m4 += d * d * d * d * xn[i];
  }
  m2 /= nsum;
  m3 /= nsum;
  m4 /= nsum;
  const double spread = std::sqrt(m2);
  v[0] = centroid;
  v[1] = spread;
  double bright = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (cf[i] > 1500.0) bright += xn[i];
  v[2] = bright / nsum;
  double hfc = 0.0;
  for (std::size_t i = 0; i < n; ++i) hfc += (i + 1.0) * x[i];
  v[3] = hfc / n;
  v[4] = n / nsum;
  double dec = 0.0, dec_norm = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    dec += (xn[i] - xn[0]) / i;
    dec_norm += xn[i];
  }
  // The denominator is floored at 1e-3 of the peak: a frame with all of its
  // energy in the lowest channel would otherwise send the ratio to infinity.
  v[5] = dec / std::max(dec_norm, 1e-3);
  double ent = 0.0, log_sum = 0.0;
  bool has_zero = false;
  for (std::size_t i = 0; i < n; ++i) {
    double p = xn[i] / nsum;
    if (p > 0.0) ent -= p * std::log(p);
    if (x[i] > 0.0) log_sum += std::log(xn[i]);
    else has_zero = true;
  }
  v[6] = ent;
  v[7] = has_zero ? 0.0 : std::exp(log_sum / n) / (nsum / n);
  double irr = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) irr += (xn[i] - xn[i + 1]) * (xn[i] - xn[i + 1]);
  v[8] = irr / nsum_sq;
  // Higher moments of a (numerically) single-channel frame are undefined;
  // report zero as for a flat distribution.
  const double span = cf.back() - cf.front();
  const bool spread_ok = m2 > 1e-12 * span * span;
  v[9] = spread_ok ? m4 / (m2 * m2) : 0.0;
  v[10] = spread_ok ? m3 / (m2 * spread) : 0.0;
  double cum = 0.0;
  v[11] = cf.back();
  for (std::size_t i = 0; i < n; ++i) {
    cum += xn[i];
    if (cum >= 0.95 * nsum) {
      v[11] = cf[i];
      break;
    }
  }
  double flux = 0.0, prev_peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    flux += (x[i] - prev[i]) * (x[i] - prev[i]);
    prev_peak = std::max(prev_peak, prev[i]);
  }
  v[12] = std::sqrt(flux);
  if (prev_peak > 0.0 && x.data() != prev.data()) {
    double dot = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = prev[i] / prev_peak;
      dot += xn[i] * q;
      pn += q * q;
    }
    v[13] = 1.0 - dot / std::sqrt(nsum_sq * pn);
  }
  return v;
}

Representations Analyze(std::span<const float> left, std::span<const float> right) {
  if (left.size() != right.size()) Fail(ErrorCode::kMismatch, "ear signals differ in length");
  CheckFinite(left);
  CheckFinite(right);
  Representations rep;
  rep.num_frames = RequireFrames(left.size());
  const std::size_t frames = rep.num_frames;
  rep.ratemap_cf = ErbSpacedFrequencies(kRatemapChannels, kLowFrequencyHz, kHighFrequencyHz);
  rep.ams_cf = ErbSpacedFrequencies(kAmsChannels, kLowFrequencyHz, kHighFrequencyHz);
  rep.ratemap_left.resize(frames, kRatemapChannels);
  rep.ratemap_right.resize(frames, kRatemapChannels);
  rep.cues.itd_s.resize(frames, kRatemapChannels);
  rep.cues.ild_db.resize(frames, kRatemapChannels);
  for (std::size_t c = 0; c < kRatemapChannels; ++c) {
    auto l = GammatoneIhc(left, rep.ratemap_cf[c]);
    auto r = GammatoneIhc(right, rep.ratemap_cf[c]);
    RatemapColumn(l, frames, rep.ratemap_left, c);
    RatemapColumn(r, frames, rep.ratemap_right, c);
    CueColumn(l, r, frames, rep.cues, c);
  }
  rep.ams_left.resize(frames, kAmsChannels * kModulationFilters);
  rep.ams_right.resize(frames, kAmsChannels * kModulationFilters);
  for (std::size_t c = 0; c < kAmsChannels; ++c) {
    AmsColumns(GammatoneIhc(left, rep.ams_cf[c]), frames, rep.ams_left, c);
    AmsColumns(GammatoneIhc(right, rep.ams_cf[c]), frames, rep.ams_right, c);
  }
  return rep;
}

BinauralCues AnalyzeCues(std::span<const float> left, std::span<const float> right) {
  if (left.size() != right.size()) Fail(ErrorCode::kMismatch, "ear signals differ in length");
  CheckFinite(left);
  CheckFinite(right);
  const std::size_t frames = RequireFrames(left.size());
  const auto cf = ErbSpacedFrequencies(kRatemapChannels, kLowFrequencyHz, kHighFrequencyHz);
  BinauralCues cues{Eigen::MatrixXd(frames, kRatemapChannels),
                    Eigen::MatrixXd(frames, kRatemapChannels)};
  for (std::size_t c = 0; c < kRatemapChannels; ++c)
    CueColumn(GammatoneIhc(left, cf[c]), GammatoneIhc(right, cf[c]), frames, cues, c);
  return cues;
}

}  // namespace seld::afe
