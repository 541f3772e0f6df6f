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


#include "doctest.h"
#include "seld/common.hpp"
#include "seld/eval.hpp"

namespace seld::eval {
namespace {

using features::NegativeKind;

TEST_SUITE("eval") {
  TEST_CASE("stream-wise confusion and balanced accuracy") {
    StreamConfusion c;
    c.Add(1, 1, NegativeKind::kNone);
    c.Add(1, -1, NegativeKind::kNone);
    c.Add(1, 1, NegativeKind::kNone);
    c.Add(-1, -1, NegativeKind::kPresentPositive);
    c.Add(-1, 1, NegativeKind::kPresentPositive);
    c.Add(-1, -1, NegativeKind::kNonPresentPositive);
    c.Add(-1, -1, NegativeKind::kNonPresentPositive, 2.0);
    auto m = ComputeStreamwise(c);
    CHECK(*m.sens == doctest::Approx(2.0 / 3));
    CHECK(*m.spec_pp == doctest::Approx(0.5));
    CHECK(*m.spec_npp == doctest::Approx(1.0));
    CHECK(*m.spec_sw == doctest::Approx(0.75));
    CHECK(*m.bac_sw == doctest::Approx(0.5 * 2.0 / 3 + 0.5 * 0.75));
    StreamConfusion d = c;
    d += c;
    CHECK(d.tp == 4);
    CHECK(*ComputeStreamwise(d).bac_sw == doctest::Approx(*m.bac_sw));
  }

  TEST_CASE("missing negatives leave the balanced accuracy undefined") {
    StreamConfusion c;
    c.Add(1, 1, NegativeKind::kNone);
    c.Add(-1, -1, NegativeKind::kNonPresentPositive);
    auto m = ComputeStreamwise(c);
    CHECK(m.sens.has_value());
    CHECK_FALSE(m.spec_pp.has_value());
    CHECK_FALSE(m.bac_sw.has_value());
    CHECK_FALSE(ComputeStreamwise(StreamConfusion{}).sens.has_value());
  }

  TEST_CASE("time-wise aggregation fires if any stream fires") {
    // (-, +, -) on a positive block counts as a detection.
    auto c = TimewiseAggregate({{-1, 1, -1}}, {1});
    CHECK(c.tp == 1);
    CHECK(c.fn == 0);
    auto d = TimewiseAggregate({{-1, -1, -1}, {-1, 1}, {-1, -1}, {1, 1}}, {1, -1, -1, 1});
    CHECK(d.tp == 1);
    CHECK(d.fn == 1);
    CHECK(d.fp == 1);
    CHECK(d.tn == 1);
    auto m = ComputeDetection(d);
    CHECK(*m.dr == doctest::Approx(0.5));
    CHECK(*m.spec == doctest::Approx(0.5));
    CHECK(*m.bac == doctest::Approx(0.5));
    CHECK_THROWS_AS(TimewiseAggregate({{1}}, {1, -1}), seld::Error);
  }

  TEST_CASE("full-stream counts") {
    auto c = FullstreamCounts({1, 1, -1, -1, 1}, {1, -1, -1, 1, 1});
    CHECK(c.tp == 2);
    CHECK(c.fp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fn == 1);
    auto m = ComputeDetection(FullstreamCounts({1, 1}, {1, 1}));
    CHECK(*m.dr == 1.0);
    CHECK_FALSE(m.spec.has_value());
    CHECK_FALSE(m.bac.has_value());
  }

  TEST_CASE("localization metrics") {
    std::vector<LocalizedBlock> blocks = {
        // Only the closest stream fires: a best-azimuth prediction.
        {{0.0, 90.0}, {1, -1}, 10.0, true},
        // Closest and one other fire: one excess prediction.
        {{0.0, 90.0}, {1, 1}, 10.0, true},
        // Only a wrong stream fires: one excess, not best.
        {{0.0, 90.0, -90.0}, {-1, -1, 1}, 10.0, true},
        // Nothing fires: ignored.
        {{0.0, 90.0}, {-1, -1}, 10.0, true},
        // Target absent: ignored.
        {{0.0, 90.0}, {1, 1}, 10.0, false},
    };
    auto s = ComputeLocalized(blocks);
    CHECK(s.blocks == 3);
    CHECK(*s.bapr == doctest::Approx(1.0 / 3));
    CHECK(*s.nep == doctest::Approx(2.0 / 3));
    // Fired distances: 10, 10, 80, 100.
    CHECK(*s.azm_err == doctest::Approx(50.0));
    CHECK(PlacementBin(10.0) == 1);
    CHECK(PlacementBin(180.0) == 17);
    CHECK(*s.Placement(1) == doctest::Approx(2.0 / 3));
    CHECK(*s.Placement(8) == doctest::Approx(1.0 / 3));
    CHECK_FALSE(s.Placement(4).has_value());
    auto none = ComputeLocalized({});
    CHECK_FALSE(none.bapr.has_value());
  }
}

}  // namespace
}  // namespace seld::eval
