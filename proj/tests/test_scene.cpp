// SPDX-License-Identifier: Apache-2.0
//
// cfmimo: channel laboratory for co-located, distributed and cell-free massive MIMO arrays
// Copyright (C) 2026 The cfmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "cfmimo/io.hpp"
#include "cfmimo/scene.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cfmimo;

namespace
{
    const double kLambda = kSpeedOfLight / kDefaultCarrier;

    Trajectory l_route()
    {
        return Trajectory({{0, 0, 0}, {30, 0, 0}, {30, 40, 0}}, {kmh_to_ms(30), kmh_to_ms(60)}, {0, 20, 50, 70},
                          {{0, 0, 0}, {0, 0.5, 0}});
    }
}

TEST_CASE("array apertures follow from the element pitch")
{
    CHECK(kLambda == doctest::Approx(0.0936851).epsilon(1e-6));
    const auto c1 = build_config(ArrayConfig::conf1);
    const auto c2 = build_config(ArrayConfig::conf2);
    const auto c3 = build_config(ArrayConfig::conf3);
    REQUIRE(c1.size() == 32);
    REQUIRE(c2.size() == 32);
    REQUIRE(c3.size() == 32);
    CHECK(c1.aperture() == doctest::Approx(31 * 0.64 * kLambda).epsilon(1e-12));
    CHECK(c1.aperture() == doctest::Approx(1.859).epsilon(1e-3));
    CHECK(c3.aperture() == doctest::Approx(31 * 16 * kLambda).epsilon(1e-12));
    CHECK(c2.aperture() == doctest::Approx(c3.aperture()).epsilon(1e-12));

    // Inner edges of the two conf2 groups
    const double gap = (c2.positions[15] - c2.positions[16]).norm();
    CHECK(gap == doctest::Approx(31 * 16 * kLambda - 2 * 15 * 0.64 * kLambda).epsilon(1e-12));

    // Antenna 1 at the origin, array extends westwards at BS height
    CHECK(c3.positions[0].isApprox(Vec3(0, 0, kBsHeight)));
    CHECK(c3.positions[31].x() < 0.0);
    for (const auto &p : c2.positions)
        CHECK(p.z() == kBsHeight);
}

TEST_CASE("far-field distance")
{
    CHECK(far_field_distance(1.859, kLambda) == doctest::Approx(2 * 1.859 * 1.859 / kLambda));
    CHECK(far_field_distance(0.0, kLambda) == 0.0);
    CHECK_THROWS_AS(far_field_distance(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(far_field_distance(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("array construction rejects bad input")
{
    CHECK_THROWS_AS(build_config(ArrayConfig::custom), std::invalid_argument);
    CHECK_THROWS_AS(build_config(ArrayConfig::conf1, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_config(ArrayConfig::conf1, kDefaultCarrier, Vec3::Zero(), Vec3(0, 0, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(custom_layout({}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(custom_layout({Vec3(1, 2, 3), Vec3(1, 2, 3)}, 0.1), std::invalid_argument);
    CHECK(custom_layout({Vec3(1, 2, 3)}, 0.1).size() == 1);
    CHECK(parse_array_config("conf2") == ArrayConfig::conf2);
    CHECK(to_string(ArrayConfig::conf3) == "conf3");
    CHECK_THROWS_AS(parse_array_config("conf4"), std::invalid_argument);
}

TEST_CASE("trajectory kinematics")
{
    const Trajectory t = l_route();
    CHECK(t.length() == doctest::Approx(70.0));
    CHECK(t.duration() == doctest::Approx(30 / kmh_to_ms(30) + 40 / kmh_to_ms(60)));

    const UeState s0 = t.state_at(0.0);
    CHECK(s0.position.isApprox(Vec3::Zero()));
    CHECK(s0.region == 1);
    CHECK(s0.velocity.isApprox(Vec3(kmh_to_ms(30), 0, 0)));

    const UeState s1 = t.state_at(30 / kmh_to_ms(30) + 1.0);
    CHECK(s1.position.isApprox(Vec3(30, kmh_to_ms(60), 0)));
    CHECK(s1.heading.isApprox(Vec3::UnitY()));
    CHECK(s1.region == 2);

    const UeState end = t.state_at(t.duration());
    CHECK(end.position.isApprox(Vec3(30, 40, 0)));
    CHECK(end.region == 3);

    CHECK_THROWS_AS(t.state_at(-1e-3), std::out_of_range);
    CHECK_THROWS_AS(t.state_at(t.duration() + 1.0), std::out_of_range);

    // Region index is piecewise constant and non-decreasing
    int last = 1;
    for (double tt = 0.0; tt <= t.duration(); tt += 0.01)
    {
        const int r = t.state_at(tt).region;
        CHECK(r >= last);
        last = r;
    }
    CHECK(t.time_at_arc(35.0) == doctest::Approx(30 / kmh_to_ms(30) + 5 / kmh_to_ms(60)));
}

TEST_CASE("user antennas are mounted in the vehicle frame")
{
    const Trajectory t = l_route();
    const UeState s = t.state_at(30 / kmh_to_ms(30) + 1.0); // heading +y, left is -x
    CHECK(t.antenna_position(s, 0).isApprox(s.position));
    CHECK(t.antenna_position(s, 1).isApprox(s.position + Vec3(-0.5, 0, 0)));
    CHECK_THROWS_AS(t.antenna_position(s, 2), std::out_of_range);
}

TEST_CASE("trajectory validation")
{
    const std::vector<Vec3> wp{{0, 0, 0}, {10, 0, 0}};
    const std::vector<Vec3> mount{{0, 0, 0}};
    CHECK_THROWS_AS(Trajectory({{0, 0, 0}}, {}, {0, 1}, mount), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(wp, {kmh_to_ms(70)}, {0, 10}, mount), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(wp, {kmh_to_ms(10)}, {0, 10}, mount), std::invalid_argument);
    CHECK_NOTHROW(Trajectory(wp, {kmh_to_ms(10)}, {0, 10}, mount, SpeedLimits::unrestricted()));
    CHECK_THROWS_AS(Trajectory(wp, {kmh_to_ms(30)}, {0, 9}, mount), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(wp, {kmh_to_ms(30)}, {0, 6, 4, 10}, mount), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(wp, {kmh_to_ms(30)}, {0, 10}, {}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory({{0, 0, 0}, {0, 0, 0}}, {kmh_to_ms(30)}, {0, 1}, mount), std::invalid_argument);
}

TEST_CASE("stationary trajectory")
{
    const Trajectory t = Trajectory::stationary(Vec3(1, 2, 3), 2.0, {{0, 0, 0}});
    CHECK(t.duration() == 2.0);
    CHECK(t.regions() == 1);
    const UeState s = t.state_at(1.5);
    CHECK(s.position.isApprox(Vec3(1, 2, 3)));
    CHECK(s.velocity.norm() == 0.0);
    CHECK(s.region == 1);
    CHECK_THROWS_AS(Trajectory::stationary(Vec3::Zero(), 0.0, {{0, 0, 0}}), std::invalid_argument);
}

TEST_CASE("segment-box intersection")
{
    const Box b{Vec3(0, 0, 0), Vec3(1, 1, 1)};
    CHECK(segment_intersects(b, Vec3(-1, 0.5, 0.5), Vec3(2, 0.5, 0.5)));
    CHECK_FALSE(segment_intersects(b, Vec3(-1, 2, 0.5), Vec3(2, 2, 0.5)));
    CHECK_FALSE(segment_intersects(b, Vec3(-2, 0.5, 0.5), Vec3(-1, 0.5, 0.5))); // stops short
    CHECK(segment_intersects(b, Vec3(0.5, 0.5, 0.5), Vec3(0.6, 0.6, 0.6)));    // inside
    CHECK(segment_intersects(b, Vec3(-1, -1, 0.5), Vec3(2, 2, 0.5)));          // diagonal
}

TEST_CASE("line-of-sight blocking")
{
    Scene s;
    const Vec3 a(0, 0, 10), b(0, 50, 2);
    CHECK_FALSE(los_blocked(s, a, b));
    s.blockers.push_back({Vec3(-5, 20, 0), Vec3(5, 25, 20)});
    CHECK(los_blocked(s, a, b));
    CHECK(los_blocked(s, b, a));
    s.blockers[0].hi.z() = 3.0; // low wall: the ray passes above it
    CHECK_FALSE(los_blocked(s, a, b));

    // Symmetry on random segments
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-30, 30);
    s.blockers = {{Vec3(-5, -5, 0), Vec3(5, 5, 8)}};
    for (int i = 0; i < 500; ++i)
    {
        const Vec3 p(u(rng), u(rng), std::abs(u(rng)));
        const Vec3 q(u(rng), u(rng), std::abs(u(rng)));
        CHECK(los_blocked(s, p, q) == los_blocked(s, q, p));
    }
}

TEST_CASE("default scene blocks regions 3 to 5")
{
    const auto path = std::filesystem::path(CFMIMO_SOURCE_DIR) / "scenes" / "default.json";
    for (ArrayConfig c : {ArrayConfig::conf1, ArrayConfig::conf2, ArrayConfig::conf3})
    {
        const Scene s = load_scene(path, c, kDefaultCarrier);
        CHECK(s.trajectory.regions() == 8);
        CHECK(s.trajectory.length() == doctest::Approx(320.0));
        for (double v : s.trajectory.speeds())
        {
            CHECK(v >= kmh_to_ms(15) - 1e-12);
            CHECK(v <= kmh_to_ms(60) + 1e-12);
        }

        const UeState mid = s.trajectory.state_at(0.5 * s.trajectory.duration());
        CHECK(mid.region >= 3);
        CHECK(mid.region <= 5);

        // Region 4: every antenna of every configuration is shadowed
        const auto &edges = s.trajectory.region_edges();
        for (int i = 0; i <= 20; ++i)
        {
            const double arc = edges[3] + (edges[4] - edges[3]) * (0.01 + 0.98 * i / 20.0);
            const UeState st = s.trajectory.state_at(s.trajectory.time_at_arc(arc));
            REQUIRE(st.region == 4);
            for (std::size_t k = 0; k < s.trajectory.users(); ++k)
                for (const auto &p : s.layout.positions)
                    CHECK(los_blocked(s, s.trajectory.antenna_position(st, k), p));
        }

        // Regions 1 and 2 start in line of sight for every antenna
        const UeState r1 = s.trajectory.state_at(0.0);
        for (const auto &p : s.layout.positions)
            CHECK_FALSE(los_blocked(s, r1.position, p));
    }
}
