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


#include <random>
#include <set>

#include "doctest.h"
#include "seld/common.hpp"
#include "oracles.hpp"
#include "seld/afe.hpp"
#include "seld/features.hpp"

namespace seld::features {
namespace {

TEST_SUITE("features") {
  TEST_CASE("L-statistics agree with subsample enumeration") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> len(4, 12);
    std::lognormal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(len(rng));
      for (auto& v : x) v = dist(rng);
      auto ref = testing::BruteForceLMoments(x);
      auto lm = LStatistics(x);
      CHECK(lm.l_mean == doctest::Approx(ref[0]).epsilon(1e-12));
      CHECK(lm.l_scale == doctest::Approx(ref[1]).epsilon(1e-12));
      CHECK(lm.l_skewness == doctest::Approx(ref[2] / ref[1]).epsilon(1e-10));
      CHECK(lm.l_kurtosis == doctest::Approx(ref[3] / ref[1]).epsilon(1e-10));
    }
  }

  TEST_CASE("L-statistics of a constant series") {
    std::vector<double> x(7, 3.5);
    auto lm = LStatistics(x);
    CHECK(lm.l_mean == doctest::Approx(3.5));
    CHECK(lm.l_scale == 0.0);
    CHECK(lm.l_skewness == 0.0);
    CHECK(lm.l_kurtosis == 0.0);
    CHECK_THROWS_AS(LStatistics(std::vector<double>{1, 2, 3}), seld::Error);
  }

  TEST_CASE("feature layout covers every series, derivative and statistic") {
    const auto& layout = DefaultLayout();
    CHECK(layout.size() == (32 + 128 + 14) * 3 * 4);
    std::set<std::string> uniq(layout.names.begin(), layout.names.end());
    CHECK(uniq.size() == layout.size());
  }

  TEST_CASE("block grid of a 10 s scene") {
    auto blocks = SegmentBlocks(10.0, FrameCount(441000));
    CHECK(blocks.size() == 29);
    CHECK(blocks[1].start_s == doctest::Approx(0.333));
    for (const auto& b : blocks) {
      CHECK(b.end_s - b.start_s == doctest::Approx(0.5));
      CHECK(b.frame_begin * 0.01 >= b.start_s - 1e-9);
      CHECK((b.frame_end - 1) * 0.01 + 0.02 <= b.end_s + 1e-9);
      CHECK(b.num_frames() >= 48);
    }
    CHECK_THROWS_AS(SegmentBlocks(0.4, 39), seld::Error);
  }

  TEST_CASE("block labels from event occupancy") {
    const std::vector<EventAnnotation> ev = {{1.0, 1.4, "x"}, {2.1, 2.2, "x"}};
    CHECK(BlockOccupancy(1.0, 1.5, ev) == doctest::Approx(0.8));
    CHECK(LabelBlock(1.0, 1.5, ev) == BlockLabel::kPositive);
    CHECK(LabelBlock(1.2, 1.7, ev) == BlockLabel::kExcluded);
    CHECK(LabelBlock(3.0, 3.5, ev) == BlockLabel::kNegative);
    // A short event lying fully inside the block.
    CHECK(LabelBlock(2.0, 2.5, ev) == BlockLabel::kPositive);
    // Overlapping events are counted once.
    CHECK(BlockOccupancy(0.0, 1.0, {{0.0, 0.6, ""}, {0.4, 0.8, ""}}) == doctest::Approx(0.8));
  }

  TEST_CASE("stream labels and negative kinds") {
    auto pos = LabelStreamSamples(BlockLabel::kPositive, {0.0, 40.0, -40.0}, 30.0);
    CHECK(pos.labels == std::vector<int>{-1, 1, -1});
    CHECK(pos.kinds[0] == NegativeKind::kPresentPositive);
    CHECK(pos.kinds[1] == NegativeKind::kNone);
    auto neg = LabelStreamSamples(BlockLabel::kNegative, {0.0, 40.0}, 30.0);
    CHECK(neg.labels == std::vector<int>{-1, -1});
    CHECK(neg.kinds[1] == NegativeKind::kNonPresentPositive);
    CHECK_THROWS_AS(LabelStreamSamples(BlockLabel::kExcluded, {0.0}, 0.0), seld::Error);
    // Ties go to the smaller magnitude, then to the smaller azimuth.
    CHECK(ClosestStream({20.0, -20.0}, 0.0) == 1);
    CHECK(ClosestStream({10.0, 30.0}, 20.0) == 0);
    CHECK(ClosestStream({170.0, -170.0}, 180.0) == 1);
  }

  TEST_CASE("active sources use a strict threshold and merge co-located streams") {
    std::vector<double> energy = {1.0, 1e-4, 5.0, 2.0}, peak = {1.0, 1.0, 5.0, 4.0};
    auto a = DetectActiveSources(energy, peak, std::vector<double>{10.0, 20.0, 10.0, -30.0});
    CHECK(a.source_active == std::vector<bool>{true, false, true, true});
    CHECK(a.stream_azimuths == std::vector<double>{10.0, -30.0});
  }

  TEST_CASE("a unit mask leaves block features unchanged") {
    std::mt19937_64 rng(3);
    std::normal_distribution<float> g(0.0f, 0.1f);
    std::vector<float> l(44100), r(44100);
    for (std::size_t i = 0; i < l.size(); ++i) {
      l[i] = g(rng);
      r[i] = 0.5f * l[i] + 0.1f * g(rng);
    }
    auto rep = afe::Analyze(l, r);
    auto blocks = SegmentBlocks(1.0, rep.num_frames);
    const auto& b = blocks[0];
    auto plain = ExtractBlock(rep, b);
    auto ones = ExtractBlock(rep, b, Eigen::MatrixXd::Ones(b.num_frames(), 32));
    CHECK((plain.ratemap - ones.ratemap).cwiseAbs().maxCoeff() == 0.0);
    CHECK((plain.ams - ones.ams).cwiseAbs().maxCoeff() == 0.0);
    auto x = AssembleFeatureVector(plain);
    CHECK(x.size() == DefaultLayout().size());
    auto half = ExtractBlock(rep, b, Eigen::MatrixXd::Constant(b.num_frames(), 32, 0.5));
    CHECK((half.ratemap - 0.5 * plain.ratemap).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(ExtractBlock(rep, b, Eigen::MatrixXd::Ones(3, 32)), seld::Error);
  }
}

}  // namespace
}  // namespace seld::features
