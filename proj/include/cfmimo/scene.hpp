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

#pragma once

#include "cfmimo/constants.hpp"

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace cfmimo
{
    using Vec3 = Eigen::Vector3d;

    enum class ArrayConfig
    {
        conf1, // 32 elements, 0.64 lambda pitch (co-located)
        conf2, // two 16-element groups at the aperture ends (distributed)
        conf3, // 32 elements, 16 lambda pitch (radio stripe)
        custom
    };

    ArrayConfig parse_array_config(std::string_view label);
    std::string to_string(ArrayConfig c);

    inline constexpr double kBsHeight = 15.0;       // [m]
    inline constexpr double kCompactPitch = 0.64;   // [lambda]
    inline constexpr double kStripePitch = 16.0;    // [lambda]
    inline constexpr int kArrayElements = 32;

    struct ArrayLayout
    {
        std::vector<Vec3> positions; // [m]; index 0 is antenna 1 (easternmost)
        double wavelength = 0.0;     // [m]
        ArrayConfig label = ArrayConfig::custom;

        std::size_t size() const { return positions.size(); }
        double aperture() const; // max pairwise distance
    };

    // Horizontal linear array with antenna 1 at `origin`, extending along `direction`
    // (default: westwards, i.e. -x). Throws std::invalid_argument for ArrayConfig::custom.
    ArrayLayout build_config(ArrayConfig label, double f_carrier = kDefaultCarrier,
                             const Vec3 &origin = Vec3(0.0, 0.0, kBsHeight),
                             const Vec3 &direction = Vec3(-1.0, 0.0, 0.0));

    // Validates A >= 1 and distinct positions
    ArrayLayout custom_layout(std::vector<Vec3> positions, double wavelength);

    // 2 D^2 / lambda
    double far_field_distance(double aperture, double wavelength);

    struct UeState
    {
        Vec3 position;   // vehicle reference point [m]
        Vec3 velocity;   // [m/s]
        Vec3 heading;    // unit vector of travel (x-axis of the vehicle frame)
        double arc = 0.; // distance travelled [m]
        int region = 1;  // 1-based region index
    };

    struct SpeedLimits
    {
        double min_ms = kmh_to_ms(15.0);
        double max_ms = kmh_to_ms(60.0);

        static SpeedLimits unrestricted() { return {0.0, 1e9}; }
    };

    class Trajectory
    {
    public:
        Trajectory() = default;

        // `speeds` holds one speed [m/s] per segment; `region_edges` holds R+1 increasing arc
        // lengths starting at 0 and ending at the total length. `mount_offsets` are the user
        // antenna positions in the vehicle frame (along-track, left, up) [m].
        Trajectory(std::vector<Vec3> waypoints, std::vector<double> speeds, std::vector<double> region_edges,
                   std::vector<Vec3> mount_offsets, SpeedLimits limits = {});

        // A vehicle parked at `position` for `duration` seconds, one region
        static Trajectory stationary(const Vec3 &position, double duration, std::vector<Vec3> mount_offsets,
                                     const Vec3 &heading = Vec3::UnitX());

        double length() const { return cum_length_.empty() ? 0.0 : cum_length_.back(); }
        double duration() const { return cum_time_.empty() ? dwell_ : cum_time_.back(); }
        std::size_t users() const { return mounts_.size(); }
        int regions() const { return static_cast<int>(region_edges_.size()) - 1; }

        const std::vector<Vec3> &waypoints() const { return waypoints_; }
        const std::vector<double> &speeds() const { return speeds_; }
        const std::vector<double> &region_edges() const { return region_edges_; }
        const std::vector<Vec3> &mount_offsets() const { return mounts_; }

        // Throws std::out_of_range for t outside [0, duration]
        UeState state_at(double t) const;

        int region_of_arc(double arc) const;
        double time_at_arc(double arc) const;

        // World position of user antenna k for a vehicle state
        Vec3 antenna_position(const UeState &state, std::size_t user) const;

    private:
        std::vector<Vec3> waypoints_;
        std::vector<double> speeds_;
        std::vector<double> region_edges_;
        std::vector<Vec3> mounts_;
        std::vector<double> cum_length_; // arc length at each waypoint
        std::vector<double> cum_time_;   // time at each waypoint
        double dwell_ = 0.0;             // stationary trajectories only
        Vec3 dwell_heading_ = Vec3::UnitX();
    };

    // Axis-aligned blocking box
    struct Box
    {
        Vec3 lo, hi;
    };

    // Slab test of the closed segment p -> q against the box
    bool segment_intersects(const Box &box, const Vec3 &p, const Vec3 &q);

    struct Scatterer
    {
        Vec3 position;
        std::complex<double> gain{1.0, 0.0}; // complex gain scale
    };

    struct Scene
    {
        ArrayLayout layout;
        Trajectory trajectory;
        std::vector<Box> blockers;
        std::vector<Scatterer> scatterers;
        double carrier_frequency = kDefaultCarrier;

        // Throws std::invalid_argument for an inconsistent scene
        void validate() const;
    };

    // True iff the segment between the points crosses any blocker
    bool los_blocked(const Scene &scene, const Vec3 &p_tx, const Vec3 &p_rx);
}
