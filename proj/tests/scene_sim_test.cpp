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


#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "seld/common.hpp"
#include "seld/scene_sim.hpp"

namespace seld::scene {
namespace {

std::vector<float> Noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.1f);
  std::vector<float> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

// Lag (in samples, positive: right lags) maximizing the broadband
// cross-correlation of the two ear signals.
int PeakLag(const BinauralSignal& s, int max_lag) {
  double best = -1e300;
  int arg = 0;
  const int n = static_cast<int>(s.size());
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (int i = max_lag; i < n - max_lag; ++i) acc += double(s.left[i]) * s.right[i + lag];
    if (acc > best) {
      best = acc;
      arg = lag;
    }
  }
  return arg;
}

SceneConfig TwoSourceScene(double snr_db) {
  SceneConfig c;
  c.id = "unit";
  c.duration_s = 3.0;
  c.rng_seed = 11;
  c.sources.push_back({{"tonal_alarm", 1, 3.0, ""}, 30.0, SourceRole::kTarget});
  c.sources.push_back({{"general", 2, 3.0, ""}, -60.0, SourceRole::kDistractor});
  c.snr_db = {snr_db};
  return c;
}

TEST_SUITE("scene_sim") {
  TEST_CASE("analytic ITD agrees with an independent spherical-head formula") {
    for (double az = -180.0; az <= 180.0; az += 5.0)
      CHECK(WoodworthItd(az, 0.0875, 343.0) ==
            doctest::Approx(testing::ReferenceWoodworth(az)).epsilon(1e-12));
    CHECK(WoodworthItd(90.0, 0.0875, 343.0) > 6.5e-4);
    CHECK(WoodworthItd(-30.0, 0.0875, 343.0) < 0.0);
  }

  TEST_CASE("rendered interaural delay follows the spherical-head ITD") {
    const auto head = HeadModel::Parametric();
    const auto x = Noise(22050, 3);
    for (double az : {-90.0, -45.0, 0.0, 20.0, 60.0, 90.0, 135.0}) {
      auto s = RenderSource(x, az, head);
      const double expect = testing::ReferenceWoodworth(az) * kSampleRate;
      CHECK(std::abs(PeakLag(s, 48) - expect) <= 1.0);
    }
  }

  TEST_CASE("mirrored azimuths swap the ear signals exactly") {
    const auto head = HeadModel::Parametric();
    const auto x = Noise(4410, 5);
    for (double az : {15.0, 70.0, 120.0}) {
      auto a = RenderSource(x, az, head);
      auto b = RenderSource(x, -az, head);
      CHECK(a.left == b.right);
      CHECK(a.right == b.left);
    }
    auto front = RenderSource(x, 0.0, head);
    CHECK(front.left == front.right);
  }

  TEST_CASE("a source on the left is louder at the left ear") {
    const auto head = HeadModel::Parametric();
    auto s = RenderSource(Noise(8820, 9), 60.0, head);
    double el = 0, er = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      el += s.left[i] * s.left[i];
      er += s.right[i] * s.right[i];
    }
    CHECK(el > er * 1.5);
  }

  TEST_CASE("mixing honors the configured SNR over active periods") {
    const auto head = HeadModel::Parametric();
    for (double snr : {-20.0, 0.0, 12.5}) {
      auto mix = MixScene(TwoSourceScene(snr), head);
      auto mean_active = [](const std::vector<double>& p) {
        const double peak = *std::max_element(p.begin(), p.end());
        double s = 0;
        int n = 0;
        for (double v : p)
          if (v > peak * 1e-4) {
            s += v;
            ++n;
          }
        return s / n;
      };
      const double ratio = mean_active(mix.source_frame_power[0]) / mean_active(mix.source_frame_power[1]);
      CHECK(10 * std::log10(ratio) == doctest::Approx(snr).epsilon(1e-6));
      CHECK(mix.signal.annotations.size() == 2);
    }
  }

  TEST_CASE("diffuse noise reaches the requested SNR and +inf is a no-op") {
    const auto head = HeadModel::Parametric();
    auto mix = MixScene(TwoSourceScene(0.0), head);
    auto same = AddDiffuseNoise(mix.signal, std::numeric_limits<double>::infinity(), head, 1);
    CHECK(same.left == mix.signal.left);
    CHECK_THROWS_AS(AddDiffuseNoise(mix.signal, std::nan(""), head, 1), seld::Error);
    auto noise = RenderDiffuseNoise(mix.signal.size(), head, 4);
    // The diffuse field is nearly incoherent between the ears.
    double lr = 0, ll = 0, rr = 0;
    for (std::size_t i = 0; i < noise.size(); ++i) {
      lr += double(noise.left[i]) * noise.right[i];
      ll += double(noise.left[i]) * noise.left[i];
      rr += double(noise.right[i]) * noise.right[i];
    }
    CHECK(std::abs(lr / std::sqrt(ll * rr)) < 0.5);
  }

  TEST_CASE("synthetic sounds are deterministic with exact silence between events") {
    for (const auto& cls : SyntheticTargetClasses()) {
      auto a = SynthClassSound(cls, 17, 6.0);
      auto b = SynthClassSound(cls, 17, 6.0);
      CHECK(a.samples == b.samples);
      REQUIRE(!a.events.empty());
      for (const auto& e : a.events) {
        CHECK(e.onset_s >= 0.0);
        CHECK(e.offset_s <= 6.0 + 1e-9);
        CHECK(e.offset_s > e.onset_s);
      }
      // Before the first onset the signal is exactly zero.
      const auto first = static_cast<std::size_t>(a.events.front().onset_s * kSampleRate) - 1;
      for (std::size_t i = 0; i < first; ++i) REQUIRE(a.samples[i] == 0.0f);
    }
    CHECK(SynthClassSound("chirp", 1, 6.0).samples != SynthClassSound("chirp", 2, 6.0).samples);
    CHECK_THROWS_AS(SynthClassSound("violin", 1, 1.0), seld::Error);
  }

  TEST_CASE("scene invariants are enforced") {
    auto c = TwoSourceScene(0.0);
    CHECK_NOTHROW(c.Validate());
    c.mode = SceneMode::kBisected;  // 30 and -60 are not mirror images
    CHECK_THROWS_AS(c.Validate(), seld::Error);
    c.sources[1].azimuth_deg = -30.0;
    CHECK_NOTHROW(c.Validate());
    auto d = TwoSourceScene(0.0);
    d.snr_db.clear();
    CHECK_THROWS_AS(d.Validate(), seld::Error);
    auto e = TwoSourceScene(0.0);
    e.sources[1].sound.class_id = "tonal_alarm";
    CHECK_THROWS_AS(e.Validate(), seld::Error);
  }

  TEST_CASE("test grid size, validity and determinism") {
    SuiteOptions opt;
    opt.duration_s = 10.0;
    auto grid = BuildSceneSuite(SuiteKind::kTest, 3, opt);
    CHECK(grid.size() == 474);
    std::map<std::size_t, std::size_t> by_count;
    for (const auto& s : grid) {
      CHECK_NOTHROW(s.Validate());
      by_count[s.sources.size()]++;
      if (s.sources.size() > 1) {
        CHECK(s.mode.has_value());
        CHECK((s.sources.size() - 1) * s.azimuth_gap_deg <= 180.0 + 1e-9);
      }
    }
    CHECK(by_count[1] == 4);
    auto again = BuildSceneSuite(SuiteKind::kTest, 3, opt);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(grid[i].id == again[i].id);
    auto sub = SelectSubset(grid, 15, 9);
    CHECK(sub.size() == 15);
    std::set<SceneMode> modes;
    for (const auto& s : sub)
      if (s.mode) modes.insert(*s.mode);
    CHECK(modes.size() == 4);
  }

  TEST_CASE("training suite samples one to four sources") {
    SuiteOptions opt;
    opt.train_scenes = 40;
    opt.duration_s = 5.0;
    auto suite = BuildSceneSuite(SuiteKind::kTrain, 8, opt);
    CHECK(suite.size() == 40);
    std::set<std::size_t> counts;
    for (const auto& s : suite) {
      CHECK_NOTHROW(s.Validate());
      counts.insert(s.sources.size());
      for (double snr : s.snr_db) CHECK((snr >= -20.0 && snr <= 20.0));
    }
    CHECK(counts.size() == 4);
  }

  TEST_CASE("file-level split is disjoint and binding expands every class") {
    auto pool = SyntheticCatalog(SyntheticTargetClasses(), 8, 5);
    auto [train, test] = SplitPool(pool, 0.75, 6);
    std::set<std::string> ids;
    for (const auto& [c, files] : train.files) {
      if (c != "general") CHECK(files.size() == 6);
      for (const auto& f : files) ids.insert(f.FileId());
    }
    for (const auto& [c, files] : test.files)
      for (const auto& f : files) CHECK(ids.count(f.FileId()) == 0);
    SuiteOptions opt;
    opt.train_scenes = 5;
    opt.duration_s = 4.0;
    auto bound = BindSounds(BuildSceneSuite(SuiteKind::kTrain, 1, opt), train, true, 2);
    CHECK(bound.size() == 5 * SyntheticTargetClasses().size());
    for (const auto& s : bound) {
      CHECK_NOTHROW(s.Validate());
      for (const auto& src : s.sources) {
        const auto& files = train.files.at(src.sound.class_id);
        bool found = false;
        for (const auto& f : files) found |= f.FileId() == src.sound.FileId();
        CHECK(found);
      }
    }
  }

  TEST_CASE("suite files round trip") {
    SuiteOptions opt;
    opt.duration_s = 4.0;
    auto grid = BuildSceneSuite(SuiteKind::kTest, 1, opt);
    grid.resize(20);
    grid[3].diffuse_snr_db = 7.5;
    const auto path = std::filesystem::temp_directory_path() / "seld_suite_test.json";
    SaveSuite(path, grid);
    auto back = LoadSuite(path);
    REQUIRE(back.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(back[i].id == grid[i].id);
      CHECK(back[i].snr_db == grid[i].snr_db);
      CHECK(back[i].rng_seed == grid[i].rng_seed);
      CHECK(back[i].sources.size() == grid[i].sources.size());
      CHECK(back[i].mode == grid[i].mode);
    }
    CHECK(back[3].diffuse_snr_db == grid[3].diffuse_snr_db);
    std::filesystem::remove(path);
  }

  TEST_CASE("impulse-response heads render by convolution") {
    HeadModel h;
    h.kind = HeadModel::Kind::kImpulseResponseSet;
    h.ir_sample_rate = kSampleRate;
    h.ir_grid_step_deg = 90.0;
    for (double az : {-90.0, 0.0, 90.0, 180.0}) {
      ImpulseResponse ir;
      ir.azimuth_deg = az;
      ir.left = {1.0f, 0.0f, 0.0f};
      ir.right = {0.0f, 0.0f, 0.5f};
      h.irs.push_back(ir);
    }
    std::vector<float> x = {1.0f, 2.0f, 3.0f, 0.0f, 0.0f};
    auto s = RenderSource(x, 10.0, h);
    CHECK(s.left[0] == 1.0f);
    CHECK(s.right[2] == 0.5f);
    CHECK(s.right[3] == 1.0f);
    h.irs.resize(2);  // only -90 and 0 remain
    CHECK_THROWS_AS(RenderSource(x, 170.0, h), seld::Error);
  }
}

}  // namespace
}  // namespace seld::scene
