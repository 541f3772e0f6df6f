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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Criteria 8-10 and 12 train and test the
// default desk-scale configuration end to end.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "seld/afe.hpp"
#include "seld/common.hpp"
#include "seld/eval.hpp"
#include "seld/features.hpp"
#include "seld/lasso.hpp"
#include "seld/pipeline.hpp"
#include "seld/scene_sim.hpp"
#include "seld/segregation.hpp"

namespace {

namespace fs = std::filesystem;
using namespace seld;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

// State shared between criteria; built on first use.
struct Context {
  pipeline::ExperimentConfig cfg;
  bool reuse = false;
  std::optional<seg::ObservationModel> model;
  std::optional<pipeline::SuitePair> suites;
  std::optional<pipeline::MetricTable> metrics;

  const seg::ObservationModel& Model() {
    if (!model) model = pipeline::FitSegregation(cfg).model;
    return *model;
  }
  const pipeline::SuitePair& Suites() {
    if (!suites) suites = pipeline::BuildSuites(cfg, pipeline::PrepareDataset(cfg));
    return *suites;
  }
  const pipeline::MetricTable& Metrics() {
    if (!metrics) {
      const fs::path csv = fs::path(cfg.output_dir) / "metrics.csv";
      bool fresh = true;
      if (reuse && fs::exists(csv)) {
        auto table = pipeline::ReadMetrics({csv});
        if (table.config_hash == cfg.Hash()) {
          metrics = std::move(table);
          fresh = false;
        }
      }
      if (fresh) {
        auto log = [](const std::string& m) { std::fprintf(stderr, "[acceptance] %s\n", m.c_str()); };
        pipeline::RunTrain(cfg, log);
        metrics = pipeline::ReadMetrics({pipeline::RunTest(cfg, log).metrics_csv});
      }
    }
    return *metrics;
  }
};

// Candidate stream azimuths: the scene's own distinct source azimuths padded
// with fixed fillers, truncated to `m`.
std::vector<double> Candidates(const scene::SceneConfig& sc, std::size_t m) {
  std::vector<double> az;
  auto add = [&](double a) {
    for (double b : az)
      if (AzimuthDistance(a, b) < 1e-9) return;
    az.push_back(a);
  };
  for (const auto& s : sc.sources) add(s.azimuth_deg);
  for (double a : {0.0, -60.0, 135.0, -150.0, 30.0}) add(a);
  az.resize(m);
  return az;
}

Outcome MaskNormalization(Context& ctx) {
  const auto& model = ctx.Model();
  const auto head = ctx.cfg.MakeHead();
  const auto& test = ctx.Suites().test;
  std::vector<double> worst(test.size(), 0.0);
  std::vector<std::size_t> checked(test.size(), 0);
  ParallelFor(test.size(), ctx.cfg.threads, [&](std::size_t i) {
    const auto mix = scene::MixScene(test[i], head);
    const auto cues = afe::AnalyzeCues(mix.signal.left, mix.signal.right);
    const auto blocks =
        features::SegmentBlocks(mix.signal.duration_s(), static_cast<std::size_t>(cues.itd_s.rows()));
    for (const auto& b : blocks) {
      for (std::size_t m = 1; m <= 4; ++m) {
        auto masks = seg::ComputeSoftmasks(model, cues, b.frame_begin, b.frame_end,
                                           Candidates(test[i], m));
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(b.num_frames(), afe::kRatemapChannels);
        for (const auto& mk : masks) sum += mk.weights;
        const double dev = (sum.array() - 1.0).abs().maxCoeff();
        worst[i] = std::isfinite(dev) ? std::max(worst[i], dev) : INFINITY;
        ++checked[i];
      }
    }
  });
  const double w = *std::max_element(worst.begin(), worst.end());
  std::size_t n = 0;
  for (auto c : checked) n += c;
  return {w <= 1e-9, Format("scenes=%.0f block_masks=%.0f max|sum-1|=%.3g", test.size(), n, w)};
}

Outcome EarAxisSymmetry(Context& ctx) {
  const auto& model = ctx.Model();
  const auto head = ctx.cfg.MakeHead();
  // Ear-centered scenes are symmetric about +90 degrees; every source has a
  // mirrored partner (or sits on the axis).
  std::vector<scene::SceneConfig> scenes;
  for (const auto& sc : ctx.Suites().test)
    if (sc.mode == scene::SceneMode::kEarCentered && sc.sources.size() > 1) scenes.push_back(sc);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const auto& sc : scenes) {
    const auto mix = scene::MixScene(sc, head);
    const auto cues = afe::AnalyzeCues(mix.signal.left, mix.signal.right);
    std::vector<double> az;
    for (const auto& s : sc.sources) az.push_back(s.azimuth_deg);
    for (double a : {60.0, 10.0})
      if (std::find(az.begin(), az.end(), a) == az.end()) {
        az.push_back(a);
        az.push_back(180.0 - a);
      }
    const auto masks = seg::ComputeSoftmasks(model, cues, 0, cues.itd_s.rows(), az);
    for (std::size_t i = 0; i < az.size(); ++i)
      for (std::size_t j = i + 1; j < az.size(); ++j)
        if (std::abs(WrapAzimuth(az[i] + az[j]) - 180.0) < 1e-9) {
          worst = std::max(worst, (masks[i].weights - masks[j].weights).cwiseAbs().maxCoeff());
          ++pairs;
        }
  }
  return {!scenes.empty() && pairs > 0 && worst <= 1e-9,
          Format("scenes=%.0f mirrored_pairs=%.0f max|diff|=%.3g", scenes.size(), pairs, worst)};
}

// Single-source test scenes, each paired with competitors at least 60
// degrees away (front-back mirrors of the source excluded). The gate is the
// mean mask weight over all active bins; per-class means are reported.
Outcome SegregationQuality(Context& ctx) {
  const auto& model = ctx.Model();
  const auto head = ctx.cfg.MakeHead();
  std::vector<scene::SceneConfig> scenes;
  for (const auto& sc : ctx.Suites().test)
    if (sc.sources.size() == 1) scenes.push_back(sc);
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::vector<std::map<std::string, Acc>> per_scene(scenes.size());
  ParallelFor(scenes.size(), ctx.cfg.threads, [&](std::size_t i) {
    const double truth = scenes[i].sources[0].azimuth_deg;
    const std::string& cls = scenes[i].sources[0].sound.class_id;
    const auto mix = scene::MixScene(scenes[i], head);
    const auto rep = afe::Analyze(mix.signal.left, mix.signal.right);
    const Eigen::MatrixXd energy = rep.ratemap_left + rep.ratemap_right;
    const double floor = energy.maxCoeff() * DbToPower(kActivityThresholdDb);
    for (double offset : {60.0, -60.0, 90.0, -90.0, 180.0}) {
      const double other = WrapAzimuth(truth + offset);
      if (AzimuthDistance(other, 180.0 - truth) < 1e-9) continue;
      const auto masks = seg::ComputeSoftmasks(model, rep.cues, 0, rep.num_frames, {truth, other});
      Acc& acc = per_scene[i][cls];
      for (Eigen::Index f = 0; f < energy.rows(); ++f)
        for (Eigen::Index k = 0; k < energy.cols(); ++k)
          if (energy(f, k) > floor) {
            acc.sum += masks[0].weights(f, k);
            ++acc.n;
          }
    }
  });
  std::map<std::string, Acc> per_class;
  Acc all;
  for (const auto& m : per_scene)
    for (const auto& [cls, acc] : m) {
      per_class[cls].sum += acc.sum;
      per_class[cls].n += acc.n;
      all.sum += acc.sum;
      all.n += acc.n;
    }
  const double mean = all.n ? all.sum / all.n : 0.0;
  std::string detail = Format("scenes=%.0f mean_mask=%.4f", scenes.size(), mean);
  for (const auto& [cls, acc] : per_class) detail += " " + cls + Format("=%.4f", acc.sum / acc.n);
  return {!scenes.empty() && mean >= 0.8, detail};
}

Outcome GlmFidelity(Context& ctx) {
  const auto& model = ctx.Model();
  double sq = 0.0, worst_channel = 0.0;
  std::size_t n = 0;
  std::vector<double> channel_sq(model.num_channels(), 0.0);
  for (int a = -90; a <= 90; a += 5) {
    const auto p = seg::PredictCues(model, a);
    const double ref = testing::ReferenceWoodworth(a, ctx.cfg.head_radius_m);
    for (std::size_t k = 0; k < p.itd_s.size(); ++k) {
      const double e = p.itd_s[k] - ref;
      sq += e * e;
      channel_sq[k] += e * e;
      ++n;
    }
  }
  const std::size_t grid = n / model.num_channels();
  for (double s : channel_sq) worst_channel = std::max(worst_channel, std::sqrt(s / grid));
  const double rms = std::sqrt(sq / n);
  return {rms < 50e-6, Format("order=%.0f rms=%.2fus worst_channel_rms=%.2fus", model.order,
                              rms * 1e6, worst_channel * 1e6)};
}

struct Logistic {
  lasso::SampleMatrix x;
  Eigen::MatrixXd xd;
  std::vector<int> y;
  Eigen::VectorXd y01;
  std::vector<double> w;
};

Logistic MakeLogistic(std::size_t n, std::size_t d, std::uint64_t seed, bool weighted) {
  Logistic p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  p.x.cols = d;
  p.xd.resize(n, d);
  p.y01.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> row(d);
    double eta = 0.2;
    for (std::size_t j = 0; j < d; ++j) {
      const float v = static_cast<float>(g(rng) * (0.5 + j) - 0.3 * j);
      row[j] = v;
      p.xd(i, j) = v;
      if (j < 5) eta += (j % 2 ? 0.7 : -0.5) * (v + 0.3 * j) / (0.5 + j);
    }
    p.x.AppendRow(row);
    const int label = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : -1;
    p.y.push_back(label);
    p.y01[i] = label > 0 ? 1.0 : 0.0;
    p.w.push_back(weighted ? 0.25 + u(rng) : 1.0);
  }
  return p;
}

Eigen::VectorXd AsVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

Outcome LassoCorrectness(Context&) {
  const lasso::FitOptions exact{.early_stop = false};
  // (a) The oracle lambda_max and anything above it give all-zero weights.
  bool zero_ok = true;
  double lmax_rel = 0.0;
  for (std::uint64_t seed : {11, 12, 13}) {
    auto p = MakeLogistic(300, 12, seed, seed != 11);
    auto s = testing::Standardize(p.xd, AsVector(p.w));
    const double ref = testing::ReferenceLambdaMax(s, p.y01);
    lmax_rel = std::max(lmax_rel, std::abs(lasso::LambdaMax(p.x, p.y, p.w) - ref) / ref);
    std::vector<double> lams = {10.0 * ref, 1.5 * ref, ref};
    auto path = lasso::FitLassoPath(p.x, p.y, p.w, lams, exact);
    for (const auto& pt : path.points)
      for (double b : pt.weights) zero_ok = zero_ok && b == 0.0;
  }
  // (b) A vanishing penalty reproduces unpenalized IRLS; (c) KKT at every
  // path point.
  double coef_err = 0.0, kkt = 0.0;
  std::size_t points = 0;
  for (std::uint64_t seed : {21, 22}) {
    auto p = MakeLogistic(200, 10, seed, seed == 22);
    auto s = testing::Standardize(p.xd, AsVector(p.w));
    auto grid = lasso::LambdaGrid(lasso::LambdaMax(p.x, p.y, p.w), 100, 1e-6);
    auto path = lasso::FitLassoPath(p.x, p.y, p.w, grid, exact);
    for (const auto& pt : path.points) {
      kkt = std::max(kkt, testing::KktResidual(s, p.y01, pt.intercept, pt.weights, pt.lambda));
      ++points;
    }
    auto model = lasso::ModelFromPath(path, grid.size() - 1);
    auto ref = testing::IrlsLogistic(p.xd, p.y01, AsVector(p.w));
    auto raw = model.RawWeights();
    for (std::size_t j = 0; j < raw.size(); ++j)
      coef_err = std::max(coef_err, std::abs(raw[j] - ref[j + 1]));
    coef_err = std::max(coef_err, std::abs(model.RawIntercept() - ref[0]));
  }
  const bool pass = zero_ok && lmax_rel < 1e-6 && coef_err <= 1e-3 && kkt <= 1e-5;
  return {pass, Format("zero_at_lambda_max=%.0f max|coef-irls|=%.3g max_kkt=%.3g", zero_ok,
                       coef_err, kkt) +
                    Format(" path_points=%.0f", points)};
}

Outcome LMomentOracle(Context&) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> len(4, 12);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(len(rng));
    for (double& v : x) v = std::exp(g(rng)) - 1.0;
    const auto ref = testing::BruteForceLMoments(x);
    const auto lm = features::LStatistics(x);
    const double got[4] = {lm.l_mean, lm.l_scale, lm.l_skewness * lm.l_scale,
                           lm.l_kurtosis * lm.l_scale};
    for (int r = 0; r < 4; ++r)
      worst = std::max(worst, std::abs(got[r] - ref[r]) / std::max(1.0, std::abs(ref[r])));
  }
  return {worst <= 1e-12, Format("samples=200 max_error=%.3g", worst)};
}

Outcome MetricArithmetic(Context&) {
  using features::NegativeKind;
  bool ok = true;
  auto near = [&](std::optional<double> v, double want) {
    ok = ok && v && std::abs(*v - want) < 1e-12;
  };
  eval::StreamConfusion c;
  c.Add(1, 1, NegativeKind::kNone);
  c.Add(1, -1, NegativeKind::kNone);
  c.Add(1, 1, NegativeKind::kNone);
  c.Add(1, 1, NegativeKind::kNone);
  c.Add(-1, 1, NegativeKind::kPresentPositive);
  c.Add(-1, -1, NegativeKind::kPresentPositive);
  c.Add(-1, -1, NegativeKind::kNonPresentPositive);
  c.Add(-1, -1, NegativeKind::kNonPresentPositive);
  c.Add(-1, -1, NegativeKind::kNonPresentPositive);
  c.Add(-1, 1, NegativeKind::kNonPresentPositive);
  const auto sw = eval::ComputeStreamwise(c);
  near(sw.sens, 0.75);
  near(sw.spec_pp, 0.5);
  near(sw.spec_npp, 0.75);
  near(sw.spec_sw, 0.625);
  near(sw.bac_sw, 0.5 * 0.75 + 0.25 * 0.5 + 0.25 * 0.75);
  // (-, +, -) on a positive block is a time-wise detection; on a negative
  // block a false positive.
  const auto tw = eval::TimewiseAggregate({{-1, 1, -1}, {-1, 1, -1}, {-1, -1}, {-1, -1, -1}, {1}},
                                          {1, -1, 1, -1, 1});
  ok = ok && tw.tp == 2 && tw.fn == 1 && tw.fp == 1 && tw.tn == 1;
  const auto det = eval::ComputeDetection(tw);
  near(det.dr, 2.0 / 3);
  near(det.spec, 0.5);
  near(det.bac, 0.5 * (2.0 / 3 + 0.5));
  const auto fsc = eval::FullstreamCounts({1, -1, -1, 1}, {1, 1, -1, -1});
  ok = ok && fsc.tp == 1 && fsc.fn == 1 && fsc.tn == 1 && fsc.fp == 1;
  const auto loc = eval::ComputeLocalized({
      {{0.0, 90.0}, {1, -1}, 5.0, true},
      {{0.0, 90.0}, {1, 1}, 5.0, true},
      {{-30.0, 30.0, 120.0}, {-1, -1, 1}, 30.0, true},
      {{0.0, 90.0}, {-1, -1}, 5.0, true},
      {{0.0, 90.0}, {1, 1}, 5.0, false},
  });
  ok = ok && loc.blocks == 3;
  near(loc.bapr, 1.0 / 3);
  near(loc.nep, 2.0 / 3);
  near(loc.azm_err, (5.0 + 5.0 + 85.0 + 90.0) / 4);
  return {ok, "stream-wise, time-wise, fullstream and localized fixtures"};
}

// Mean of a numeric column over rows passing `keep`, skipping empty cells.
double MeanOf(const pipeline::MetricTable& t, const std::string& col,
              const std::function<bool(std::size_t)>& keep, std::size_t* count = nullptr) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!keep(r)) continue;
    const double v = t.Number(r, col);
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (count) *count = n;
  return n ? sum / n : NAN;
}

std::function<bool(std::size_t)> TargetRows(const pipeline::MetricTable& t, const std::string& pert,
                                            double value) {
  return [&t, pert, value](std::size_t r) {
    return t.Text(r, "role") == "target" && t.Text(r, "perturbation") == pert &&
           std::abs(t.Number(r, "perturbation_value") - value) < 1e-9;
  };
}

Outcome ModeOrdering(Context& ctx) {
  const auto& t = ctx.Metrics();
  std::map<std::string, double> mean;
  for (const char* mode : {"bisected", "target_at_zero", "front_left", "ear_centered"}) {
    auto base = TargetRows(t, "none", 0.0);
    mean[mode] = MeanOf(t, "bapr", [&](std::size_t r) { return base(r) && t.Text(r, "mode") == mode; });
  }
  const double ear = mean["ear_centered"];
  const bool pass = mean["bisected"] - ear >= 0.05 && mean["target_at_zero"] - ear >= 0.05;
  return {pass, Format("bapr bisected=%.4f target_at_zero=%.4f ear_centered=%.4f", mean["bisected"],
                       mean["target_at_zero"], ear) +
                    Format(" front_left=%.4f", mean["front_left"])};
}

Outcome PerturbationTrend(Context& ctx) {
  const auto& t = ctx.Metrics();
  std::vector<double> bapr, azm;
  std::string detail;
  for (double sigma : {0.0, 5.0, 10.0, 20.0, 45.0}) {
    auto keep = sigma == 0.0 ? TargetRows(t, "none", 0.0) : TargetRows(t, "azimuth_sigma", sigma);
    bapr.push_back(MeanOf(t, "bapr", keep));
    azm.push_back(MeanOf(t, "azm_err", keep));
    detail += Format(" s%.0f:bapr=%.4f,azm=%.2f", sigma, bapr.back(), azm.back());
  }
  bool pass = true;
  for (std::size_t k = 1; k < bapr.size(); ++k) {
    pass = pass && bapr[k] <= bapr[k - 1] + 0.02;
    pass = pass && azm[k] > azm[k - 1];
  }
  return {pass, detail.substr(1)};
}

// Rows of every role under one perturbation condition. Time-wise negatives
// only occur in rows where the class is absent from the scene.
std::function<bool(std::size_t)> ConditionRows(const pipeline::MetricTable& t, const std::string& pert,
                                               double value) {
  return [&t, pert, value](std::size_t r) {
    return t.Text(r, "perturbation") == pert && std::abs(t.Number(r, "perturbation_value") - value) < 1e-9;
  };
}

// Pooled rate tp/(tp+fn) or tn/(tn+fp) over the kept rows.
double PooledRate(const pipeline::MetricTable& t, const std::function<bool(std::size_t)>& keep,
                  const std::string& hit, const std::string& miss) {
  double h = 0.0, m = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (keep(r)) {
      h += t.Number(r, hit);
      m += t.Number(r, miss);
    }
  return h + m > 0.0 ? h / (h + m) : NAN;
}

Outcome CountSensitivity(Context& ctx) {
  const auto& t = ctx.Metrics();
  const auto none = ConditionRows(t, "none", 0.0);
  const auto minus2 = ConditionRows(t, "count_delta", -2.0);
  const auto plus2 = ConditionRows(t, "count_delta", 2.0);
  const double dr0 = PooledRate(t, none, "tp_tw", "fn_tw");
  const double dr_m2 = PooledRate(t, minus2, "tp_tw", "fn_tw");
  const double sp0 = PooledRate(t, none, "tn_tw", "fp_tw");
  const double sp_p2 = PooledRate(t, plus2, "tn_tw", "fp_tw");
  const bool pass = dr0 - dr_m2 >= 0.1 && sp0 - sp_p2 >= 0.1;
  return {pass, Format("dr_tw none=%.4f minus2=%.4f", dr0, dr_m2) +
                    Format(" spec_tw none=%.4f plus2=%.4f", sp0, sp_p2)};
}

// Active-period mean power computed here from the scaled ear signals.
double ActivePower(const std::vector<float>& l, const std::vector<float>& r, double gain) {
  const float g = static_cast<float>(gain);
  std::vector<double> frames;
  for (std::size_t s = 0; s + kFrameLength <= l.size(); s += kFrameShift) {
    double acc = 0.0;
    for (std::size_t k = s; k < s + kFrameLength; ++k) {
      const double a = g * l[k], b = g * r[k];
      acc += a * a + b * b;
    }
    frames.push_back(acc / (2.0 * kFrameLength));
  }
  const double peak = *std::max_element(frames.begin(), frames.end());
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : frames)
    if (v > peak * DbToPower(kActivityThresholdDb)) {
      sum += v;
      ++n;
    }
  return sum / n;
}

Outcome SnrProtocol(Context& ctx) {
  const auto head = ctx.cfg.MakeHead();
  std::vector<scene::SceneConfig> scenes = ctx.Suites().train;
  scenes.insert(scenes.end(), ctx.Suites().test.begin(), ctx.Suites().test.end());
  std::vector<double> worst(scenes.size(), 0.0);
  std::vector<std::size_t> pairs(scenes.size(), 0);
  ParallelFor(scenes.size(), ctx.cfg.threads, [&](std::size_t i) {
    const auto& sc = scenes[i];
    const auto mix = scene::MixScene(sc, head);
    std::vector<double> power;
    for (std::size_t s = 0; s < sc.sources.size(); ++s) {
      auto mono = scene::LoopToDuration(scene::LoadSound(sc.sources[s].sound), sc.duration_s);
      auto ears = scene::RenderSource(mono.samples, sc.sources[s].azimuth_deg, head);
      power.push_back(ActivePower(ears.left, ears.right, mix.source_gain[s]));
    }
    const std::size_t t = sc.TargetIndex();
    std::size_t d = 0;
    for (std::size_t s = 0; s < sc.sources.size(); ++s) {
      if (s == t) continue;
      const double measured = 10.0 * std::log10(power[t] / power[s]);
      const double e = std::abs(measured - sc.snr_db[d++]);
      worst[i] = std::isfinite(e) ? std::max(worst[i], e) : INFINITY;
      ++pairs[i];
    }
  });
  std::size_t n = 0;
  for (auto p : pairs) n += p;
  const double w = *std::max_element(worst.begin(), worst.end());
  return {w <= 0.1, Format("scenes=%.0f source_pairs=%.0f max_error=%.4gdB", scenes.size(), n, w)};
}

Outcome EndToEndSanity(Context& ctx) {
  const auto& t = ctx.Metrics();
  std::map<std::string, double> bac;
  double worst = 1.0;
  std::string detail;
  for (const auto& cls : ctx.cfg.target_classes) {
    auto keep = [&](std::size_t r) {
      return t.Text(r, "class") == cls && t.Text(r, "perturbation") == "none" &&
             t.Number(r, "n_sources") == 1.0;
    };
    const double dr = PooledRate(t, keep, "tp_fs", "fn_fs");
    const double spec = PooledRate(t, keep, "tn_fs", "fp_fs");
    const double b = 0.5 * (dr + spec);
    worst = std::isnan(b) ? -1.0 : std::min(worst, b);
    detail += " " + cls + Format("=%.4f", b);
  }
  return {worst >= 0.85, "fullstream_bac" + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seld acceptance checks"};
  Context ctx;
  std::string out = "acceptance_run";
  std::set<int> only;
  app.add_option("-o,--out", out, "Directory for the end-to-end run");
  app.add_option("-j,--threads", ctx.cfg.threads, "Worker threads");
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--reuse", ctx.reuse, "Reuse an existing run with the same config hash");
  CLI11_PARSE(app, argc, argv);
  ctx.cfg.output_dir = out;

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria = {
      {"softmask normalization", MaskNormalization},
      {"ear-axis symmetry", EarAxisSymmetry},
      {"segregation quality", SegregationQuality},
      {"observation model ITD fidelity", GlmFidelity},
      {"lasso correctness", LassoCorrectness},
      {"L-moment oracle", LMomentOracle},
      {"metric arithmetic", MetricArithmetic},
      {"scene mode ordering", ModeOrdering},
      {"azimuth perturbation trend", PerturbationTrend},
      {"source count sensitivity", CountSensitivity},
      {"SNR protocol", SnrProtocol},
      {"end-to-end sanity", EndToEndSanity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
