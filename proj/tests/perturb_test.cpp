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


#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "seld/common.hpp"
#include "seld/perturb.hpp"

namespace seld::perturb {
namespace {

double NormalCdf(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); }

TEST_SUITE("perturb") {
  TEST_CASE("zero sigma is the identity") {
    std::mt19937_64 rng(1);
    std::vector<double> az = {0.0, 45.0, -170.0, 180.0};
    CHECK(PerturbAzimuths(az, 0.0, rng) == az);
    PerturbationSpec none;
    CHECK(Apply(none, az, 99) == az);
  }

  TEST_CASE("azimuth noise is Gaussian before wrapping") {
    const int n = 100000;
    // Kolmogorov-Smirnov critical value at the 1% level is 1.628 / sqrt(n).
    for (double sigma : {5.0, 10.0, 20.0, 45.0}) {
      std::mt19937_64 rng(2);
      std::vector<double> d;
      d.reserve(n);
      for (int i = 0; i < n; ++i) d.push_back(WrapAzimuth(PerturbAzimuths({30.0}, sigma, rng)[0] - 30.0));
      CHECK(testing::KolmogorovSmirnov(d, [&](double x) { return NormalCdf(x, sigma); }) <
            1.628 / std::sqrt(double(n)));
    }
  }

  TEST_CASE("a very large sigma wraps to a uniform azimuth") {
    std::mt19937_64 rng(3);
    std::vector<double> counts(36, 0.0);
    const int n = 100000;
    bool in_range = true;
    for (int i = 0; i < n; ++i) {
      double a = PerturbAzimuths({45.0}, 1000.0, rng)[0];
      in_range = in_range && a > -180.0 && a <= 180.0;
      counts[std::min(35, static_cast<int>((a + 180.0) / 10.0))] += 1.0;
    }
    CHECK(in_range);
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - n / 36.0) * (c - n / 36.0) / (n / 36.0);
    CHECK(chi2 < 57.34);  // 99th percentile of chi-square with 35 dof
  }

  TEST_CASE("count deltas remove or add streams") {
    std::mt19937_64 rng(4);
    std::vector<double> az = {-40.0, 0.0, 40.0};
    auto fewer = ApplyCountDelta(az, -2, rng);
    REQUIRE(fewer.size() == 1);
    CHECK(std::find(az.begin(), az.end(), fewer[0]) != az.end());
    CHECK(ApplyCountDelta(az, -5, rng).size() == 1);
    auto more = ApplyCountDelta(az, 2, rng);
    REQUIRE(more.size() == 5);
    CHECK(std::equal(az.begin(), az.end(), more.begin()));
    for (double a : more) CHECK((a > -180.0 && a <= 180.0));
    for (int i = 0; i < 200; ++i) {
      auto r = PerturbSourceCount(az, 2, rng);
      CHECK((r.size() >= 1 && r.size() <= 5));
    }
  }

  TEST_CASE("block keys make perturbations reproducible") {
    PerturbationSpec p;
    p.kind = Kind::kAzimuth;
    p.azimuth_sigma_deg = 10.0;
    p.rng_seed = 77;
    std::vector<double> az = {10.0, 20.0};
    CHECK(Apply(p, az, 5) == Apply(p, az, 5));
    CHECK(Apply(p, az, 5) != Apply(p, az, 6));
  }

  TEST_CASE("default grid and validation") {
    auto g = DefaultGrid(1);
    REQUIRE(g.size() == 10);
    CHECK(g[0].kind == Kind::kNone);
    CHECK(g[0].Label() == "none");
    CHECK(g[5].azimuth_sigma_deg == 1000.0);
    CHECK(g[6].count_delta == -2);
    CHECK(g[9].Label() == "count_delta");
    PerturbationSpec bad;
    bad.azimuth_sigma_deg = -1.0;
    CHECK_THROWS_AS(bad.Validate(), seld::Error);
  }
}

}  // namespace
}  // namespace seld::perturb
