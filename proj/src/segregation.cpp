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


#include "seld/segregation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "json.hpp"
#include "seld/common.hpp"

namespace seld::seg {
namespace {

using json = nlohmann::json;
constexpr double kRidge = 1e-10;

double FoldFrontal(double azimuth_deg) {
  double a = WrapAzimuth(azimuth_deg);
  if (a > 90.0) return 180.0 - a;
  if (a < -90.0) return -180.0 - a;
  return a;
}

Eigen::MatrixXd Design(const std::vector<double>& azimuth_deg, int order) {
  Eigen::MatrixXd x(azimuth_deg.size(), order + 1);
  for (std::size_t i = 0; i < azimuth_deg.size(); ++i) {
    const double phi = FoldFrontal(azimuth_deg[i]) * std::numbers::pi / 180.0;
    x(i, 0) = 1.0;
    for (int n = 1; n <= order; ++n) x(i, n) = std::sin(n * phi);
  }
  return x;
}

}  // namespace

double ObservationModel::Bic() const {
  const double n = static_cast<double>(num_observations);
  const double k = 2.0 * (order + 1) + 3.0;  // coefficients plus covariance entries
  double bic = 0.0;
  for (const auto& r : covariance) bic += n * std::log(r.determinant()) + k * std::log(n);
  return bic;
}

std::vector<double> DefaultTrainingGrid() {
  std::vector<double> g;
  for (int a = -85; a <= 90; a += 5) g.push_back(a);
  return g;
}

TrainingCues RenderTrainingCues(const scene::HeadModel& head, const std::vector<double>& grid,
                                std::uint64_t seed, double stimulus_s, int threads) {
  if (grid.empty()) Fail(ErrorCode::kInvalidArgument, "training grid is empty");
  head.Validate();
  const std::size_t n = static_cast<std::size_t>(std::llround(stimulus_s * kSampleRate));
  const std::size_t frames = FrameCount(n);
  if (frames == 0) Fail(ErrorCode::kInvalidArgument, "training stimulus shorter than one frame");
  std::vector<afe::BinauralCues> per(grid.size());
  ParallelFor(grid.size(), threads, [&](std::size_t i) {
    std::mt19937_64 rng(DeriveSeed(seed, i));
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> noise(n);
    for (auto& v : noise) v = dist(rng);
    auto sig = scene::RenderSource(noise, grid[i], head);
    per[i] = afe::AnalyzeCues(sig.left, sig.right);
  });
  TrainingCues out;
  out.head_description = head.Describe();
  out.itd_s.resize(grid.size() * frames, afe::kRatemapChannels);
  out.ild_db.resize(grid.size() * frames, afe::kRatemapChannels);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.itd_s.middleRows(i * frames, frames) = per[i].itd_s;
    out.ild_db.middleRows(i * frames, frames) = per[i].ild_db;
    for (std::size_t k = 0; k < frames; ++k) out.azimuth_deg.push_back(grid[i]);
  }
  return out;
}

ObservationModel FitObservationModel(const TrainingCues& cues, int order) {
  if (order < 1) Fail(ErrorCode::kInvalidArgument, "model order must be at least 1");
  const std::size_t n = cues.azimuth_deg.size();
  if (n == 0 || static_cast<std::size_t>(cues.itd_s.rows()) != n ||
      cues.ild_db.rows() != cues.itd_s.rows() || cues.ild_db.cols() != cues.itd_s.cols())
    Fail(ErrorCode::kMismatch, "training cue matrices do not match the azimuth list");
  const Eigen::MatrixXd x = Design(cues.azimuth_deg, order);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols())
    Fail(ErrorCode::kNumeric, "rank-deficient design: training grid too sparse for order " +
                                  std::to_string(order));
  ObservationModel m;
  m.order = order;
  m.num_observations = n;
  m.head_description = cues.head_description;
  const auto channels = cues.itd_s.cols();
  m.beta_itd.resize(channels, order + 1);
  m.beta_ild.resize(channels, order + 1);
  for (Eigen::Index l = 0; l < channels; ++l) {
    Eigen::MatrixXd y(n, 2);
    y.col(0) = cues.itd_s.col(l) * 1e3;
    y.col(1) = cues.ild_db.col(l);
    Eigen::MatrixXd beta = qr.solve(y);
    m.beta_itd.row(l) = beta.col(0).transpose();
    m.beta_ild.row(l) = beta.col(1).transpose();
    Eigen::MatrixXd res = y - x * beta;
    m.covariance.push_back((res.transpose() * res) / static_cast<double>(n));
  }
  return m;
}

OrderSelection SelectModelOrder(const TrainingCues& cues, const std::vector<int>& candidates) {
  if (candidates.empty()) Fail(ErrorCode::kInvalidArgument, "no candidate orders");
  OrderSelection sel;
  sel.candidates = candidates;
  double best = std::numeric_limits<double>::infinity();
  for (int order : candidates) {
    double bic = FitObservationModel(cues, order).Bic();
    sel.bic.push_back(bic);
    if (bic < best || sel.order == 0) {
      best = bic;
      sel.order = order;
    }
  }
  return sel;
}

CuePrediction PredictCues(const ObservationModel& model, double azimuth_deg) {
  const Eigen::RowVectorXd basis = Design({azimuth_deg}, model.order).row(0);
  CuePrediction p;
  for (std::size_t l = 0; l < model.num_channels(); ++l) {
    p.itd_s.push_back(basis.dot(model.beta_itd.row(l)) * 1e-3);
    p.ild_db.push_back(basis.dot(model.beta_ild.row(l)));
  }
  return p;
}

std::vector<SoftMask> ComputeSoftmasks(const ObservationModel& model,
                                       const afe::BinauralCues& cues,
                                       std::size_t frame_begin, std::size_t frame_end,
                                       const std::vector<double>& stream_azimuths) {
  if (stream_azimuths.empty()) Fail(ErrorCode::kInvalidArgument, "no stream azimuths");
  const std::size_t channels = model.num_channels();
  if (static_cast<std::size_t>(cues.itd_s.cols()) != channels ||
      cues.ild_db.cols() != cues.itd_s.cols() || cues.ild_db.rows() != cues.itd_s.rows())
    Fail(ErrorCode::kMismatch, "cue grid does not match the observation model");
  if (frame_begin > frame_end || frame_end > static_cast<std::size_t>(cues.itd_s.rows()))
    Fail(ErrorCode::kInvalidArgument, "frame range outside the cue matrix");
  const std::size_t m = stream_azimuths.size();
  const std::size_t frames = frame_end - frame_begin;
  std::vector<SoftMask> masks(m);
  std::vector<CuePrediction> pred;
  for (std::size_t i = 0; i < m; ++i) {
    masks[i].azimuth_deg = stream_azimuths[i];
    masks[i].weights.resize(frames, channels);
    pred.push_back(PredictCues(model, stream_azimuths[i]));
  }
  std::vector<double> lp(m);
  for (std::size_t l = 0; l < channels; ++l) {
    const Eigen::Matrix2d inv =
        (model.covariance[l] + kRidge * Eigen::Matrix2d::Identity()).inverse();
    for (std::size_t k = 0; k < frames; ++k) {
      const double itd = cues.itd_s(frame_begin + k, l) * 1e3;
      const double ild = cues.ild_db(frame_begin + k, l);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        const double d0 = itd - pred[i].itd_s[l] * 1e3, d1 = ild - pred[i].ild_db[l];
        lp[i] = -0.5 * (d0 * d0 * inv(0, 0) + 2.0 * d0 * d1 * inv(0, 1) + d1 * d1 * inv(1, 1));
        if (std::isnan(lp[i])) lp[i] = -std::numeric_limits<double>::infinity();
        peak = std::max(peak, lp[i]);
      }
      if (!std::isfinite(peak)) {
        for (std::size_t i = 0; i < m; ++i) masks[i].weights(k, l) = 1.0 / m;
        continue;
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += (lp[i] = std::exp(lp[i] - peak));
      for (std::size_t i = 0; i < m; ++i) masks[i].weights(k, l) = lp[i] / sum;
    }
  }
  return masks;
}

void SaveModel(const std::filesystem::path& path, const ObservationModel& model) {
  json j;
  j["format"] = "seld-observation-model/1";
  j["order"] = model.order;
  j["num_observations"] = model.num_observations;
  j["head"] = model.head_description;
  j["units"] = {{"itd", "ms"}, {"ild", "dB"}};
  json ch = json::array();
  for (std::size_t l = 0; l < model.num_channels(); ++l) {
    std::vector<double> bt(model.beta_itd.cols()), bd(model.beta_ild.cols());
    for (Eigen::Index n = 0; n < model.beta_itd.cols(); ++n) {
      bt[n] = model.beta_itd(l, n);
      bd[n] = model.beta_ild(l, n);
    }
    const auto& r = model.covariance[l];
    ch.push_back({{"beta_itd", bt},
                  {"beta_ild", bd},
                  {"covariance", {r(0, 0), r(0, 1), r(1, 0), r(1, 1)}}});
  }
  j["channels"] = ch;
  std::ofstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot write observation model " + path.string());
  f << j.dump(1) << '\n';
}

ObservationModel LoadModel(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open observation model " + path.string());
  ObservationModel m;
  try {
    json j;
    f >> j;
    m.order = j.at("order").get<int>();
    m.num_observations = j.at("num_observations").get<std::size_t>();
    m.head_description = j.value("head", std::string());
    const auto& ch = j.at("channels");
    m.beta_itd.resize(ch.size(), m.order + 1);
    m.beta_ild.resize(ch.size(), m.order + 1);
    for (std::size_t l = 0; l < ch.size(); ++l) {
      auto bt = ch[l].at("beta_itd").get<std::vector<double>>();
      auto bd = ch[l].at("beta_ild").get<std::vector<double>>();
      auto cv = ch[l].at("covariance").get<std::vector<double>>();
      if (bt.size() != std::size_t(m.order + 1) || bd.size() != bt.size() || cv.size() != 4)
        Fail(ErrorCode::kConfig, "observation model channel has the wrong shape");
      for (int n = 0; n <= m.order; ++n) {
        m.beta_itd(l, n) = bt[n];
        m.beta_ild(l, n) = bd[n];
      }
      Eigen::Matrix2d r;
      r << cv[0], cv[1], cv[2], cv[3];
      m.covariance.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, "malformed observation model " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace seld::seg
