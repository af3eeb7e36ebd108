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

#include "cfmimo/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfmimo
{
    ArrayConfig parse_array_config(std::string_view label)
    {
        if (label == "conf1" || label == "1")
            return ArrayConfig::conf1;
        if (label == "conf2" || label == "2")
            return ArrayConfig::conf2;
        if (label == "conf3" || label == "3")
            return ArrayConfig::conf3;
        if (label == "custom")
            return ArrayConfig::custom;
        throw std::invalid_argument("Unknown array configuration '" + std::string(label) + "'.");
    }

    std::string to_string(ArrayConfig c)
    {
        switch (c)
        {
        case ArrayConfig::conf1:
            return "conf1";
        case ArrayConfig::conf2:
            return "conf2";
        case ArrayConfig::conf3:
            return "conf3";
        case ArrayConfig::custom:
            return "custom";
        }
        return "custom";
    }

    double ArrayLayout::aperture() const
    {
        double d = 0.0;
        for (std::size_t i = 0; i < positions.size(); ++i)
            for (std::size_t j = i + 1; j < positions.size(); ++j)
                d = std::max(d, (positions[i] - positions[j]).norm());
        return d;
    }

    ArrayLayout build_config(ArrayConfig label, double f_carrier, const Vec3 &origin, const Vec3 &direction)
    {
        if (!(f_carrier > 0.0))
            throw std::invalid_argument("Carrier frequency must be positive.");
        if (direction.norm() == 0.0 || direction.z() != 0.0)
            throw std::invalid_argument("Array direction must be a non-zero horizontal vector.");

        const double lambda = kSpeedOfLight / f_carrier;
        const Vec3 u = direction.normalized();

        std::vector<double> offsets; // along-array distance from antenna 1 [m]
        offsets.reserve(kArrayElements);
        switch (label)
        {
        case ArrayConfig::conf1:
            for (int i = 0; i < kArrayElements; ++i)
                offsets.push_back(i * kCompactPitch * lambda);
            break;
        case ArrayConfig::conf3:
            for (int i = 0; i < kArrayElements; ++i)
                offsets.push_back(i * kStripePitch * lambda);
            break;
        case ArrayConfig::conf2:
        {
            // Both groups sit at the ends of the radio-stripe aperture
            const int group = kArrayElements / 2;
            const double end = (kArrayElements - 1) * kStripePitch * lambda;
            for (int i = 0; i < group; ++i)
                offsets.push_back(i * kCompactPitch * lambda);
            for (int i = 0; i < group; ++i)
                offsets.push_back(end - (group - 1 - i) * kCompactPitch * lambda);
            break;
        }
        case ArrayConfig::custom:
            throw std::invalid_argument("build_config needs one of conf1, conf2, conf3.");
        }

        ArrayLayout layout;
        layout.wavelength = lambda;
        layout.label = label;
        for (double d : offsets)
            layout.positions.push_back(origin + d * u);
        return layout;
    }

    ArrayLayout custom_layout(std::vector<Vec3> positions, double wavelength)
    {
        if (positions.empty())
            throw std::invalid_argument("Array needs at least one antenna.");
        if (!(wavelength > 0.0))
            throw std::invalid_argument("Wavelength must be positive.");
        for (std::size_t i = 0; i < positions.size(); ++i)
        {
            if (!positions[i].allFinite())
                throw std::invalid_argument("Antenna positions must be finite.");
            for (std::size_t j = 0; j < i; ++j)
                if (positions[i] == positions[j])
                    throw std::invalid_argument("Antenna positions must be distinct.");
        }
        ArrayLayout layout;
        layout.positions = std::move(positions);
        layout.wavelength = wavelength;
        layout.label = ArrayConfig::custom;
        return layout;
    }

    double far_field_distance(double aperture, double wavelength)
    {
        if (!(wavelength > 0.0))
            throw std::invalid_argument("Wavelength must be positive.");
        if (aperture < 0.0)
            throw std::invalid_argument("Aperture cannot be negative.");
        return 2.0 * aperture * aperture / wavelength;
    }

    // ---------- Trajectory ----------

    Trajectory::Trajectory(std::vector<Vec3> waypoints, std::vector<double> speeds, std::vector<double> region_edges,
                           std::vector<Vec3> mount_offsets, SpeedLimits limits)
        : waypoints_(std::move(waypoints)), speeds_(std::move(speeds)), region_edges_(std::move(region_edges)),
          mounts_(std::move(mount_offsets))
    {
        if (waypoints_.size() < 2)
            throw std::invalid_argument("Trajectory needs at least two waypoints.");
        if (speeds_.size() != waypoints_.size() - 1)
            throw std::invalid_argument("Trajectory needs exactly one speed per segment.");
        if (mounts_.empty())
            throw std::invalid_argument("Trajectory needs at least one user antenna mount.");

        cum_length_.assign(1, 0.0);
        cum_time_.assign(1, 0.0);
        for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i)
        {
            const double len = (waypoints_[i + 1] - waypoints_[i]).norm();
            if (!(len > 0.0))
                throw std::invalid_argument("Trajectory segments must have non-zero length.");
            const double v = speeds_[i];
            if (!(v > 0.0) || v < limits.min_ms - 1e-12 || v > limits.max_ms + 1e-12)
                throw std::invalid_argument("Segment speed outside the allowed range.");
            cum_length_.push_back(cum_length_.back() + len);
            cum_time_.push_back(cum_time_.back() + len / v);
        }

        if (region_edges_.size() < 2)
            throw std::invalid_argument("Trajectory needs at least one region.");
        if (region_edges_.front() != 0.0)
            throw std::invalid_argument("Region edges must start at arc length 0.");
        for (std::size_t i = 1; i < region_edges_.size(); ++i)
            if (!(region_edges_[i] > region_edges_[i - 1]))
                throw std::invalid_argument("Region edges must be strictly increasing.");
        if (std::abs(region_edges_.back() - length()) > 1e-6 * std::max(1.0, length()))
            throw std::invalid_argument("Region edges must partition the trajectory length.");
        region_edges_.back() = length();
    }

    Trajectory Trajectory::stationary(const Vec3 &position, double duration, std::vector<Vec3> mount_offsets,
                                      const Vec3 &heading)
    {
        if (!(duration > 0.0))
            throw std::invalid_argument("Stationary duration must be positive.");
        if (mount_offsets.empty())
            throw std::invalid_argument("Trajectory needs at least one user antenna mount.");
        Trajectory t;
        t.waypoints_ = {position};
        t.region_edges_ = {0.0, 0.0};
        t.mounts_ = std::move(mount_offsets);
        t.dwell_ = duration;
        Vec3 h(heading.x(), heading.y(), 0.0);
        t.dwell_heading_ = h.norm() > 0.0 ? h.normalized() : Vec3::UnitX();
        return t;
    }

    UeState Trajectory::state_at(double t) const
    {
        const double T = duration();
        if (!(t >= 0.0) || t > T * (1.0 + 1e-12) + 1e-12)
            throw std::out_of_range("Time outside the trajectory duration.");

        UeState s;
        if (cum_time_.empty())
        {
            s.position = waypoints_.front();
            s.velocity = Vec3::Zero();
            s.heading = dwell_heading_;
            s.arc = 0.0;
            s.region = 1;
            return s;
        }

        t = std::min(t, T);
        auto it = std::upper_bound(cum_time_.begin(), cum_time_.end(), t);
        std::size_t seg = static_cast<std::size_t>(std::distance(cum_time_.begin(), it));
        seg = std::clamp<std::size_t>(seg, 1, speeds_.size()) - 1;

        const Vec3 dir = (waypoints_[seg + 1] - waypoints_[seg]).normalized();
        const double dt = t - cum_time_[seg];
        const double seg_len = cum_length_[seg + 1] - cum_length_[seg];
        const double along = std::min(speeds_[seg] * dt, seg_len);

        s.position = waypoints_[seg] + along * dir;
        s.velocity = speeds_[seg] * dir;
        Vec3 h(dir.x(), dir.y(), 0.0);
        s.heading = h.norm() > 0.0 ? h.normalized() : Vec3::UnitX();
        s.arc = cum_length_[seg] + along;
        s.region = region_of_arc(s.arc);
        return s;
    }

    int Trajectory::region_of_arc(double arc) const
    {
        if (cum_time_.empty())
            return 1;
        auto it = std::upper_bound(region_edges_.begin(), region_edges_.end(), arc);
        int r = static_cast<int>(std::distance(region_edges_.begin(), it));
        return std::clamp(r, 1, regions());
    }

    double Trajectory::time_at_arc(double arc) const
    {
        if (cum_time_.empty())
            return 0.0;
        arc = std::clamp(arc, 0.0, length());
        auto it = std::upper_bound(cum_length_.begin(), cum_length_.end(), arc);
        std::size_t seg = static_cast<std::size_t>(std::distance(cum_length_.begin(), it));
        seg = std::clamp<std::size_t>(seg, 1, speeds_.size()) - 1;
        return cum_time_[seg] + (arc - cum_length_[seg]) / speeds_[seg];
    }

    Vec3 Trajectory::antenna_position(const UeState &state, std::size_t user) const
    {
        if (user >= mounts_.size())
            throw std::out_of_range("User index out of range.");
        const Vec3 up = Vec3::UnitZ();
        const Vec3 left = up.cross(state.heading);
        const Vec3 &m = mounts_[user];
        return state.position + m.x() * state.heading + m.y() * left + m.z() * up;
    }

    // ---------- Blocking ----------

    bool segment_intersects(const Box &box, const Vec3 &p, const Vec3 &q)
    {
        const Vec3 d = q - p;
        double t0 = 0.0, t1 = 1.0;
        for (int i = 0; i < 3; ++i)
        {
            if (d[i] == 0.0)
            {
                if (p[i] < box.lo[i] || p[i] > box.hi[i])
                    return false;
                continue;
            }
            double ta = (box.lo[i] - p[i]) / d[i];
            double tb = (box.hi[i] - p[i]) / d[i];
            if (ta > tb)
                std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1)
                return false;
        }
        return true;
    }

    bool los_blocked(const Scene &scene, const Vec3 &p_tx, const Vec3 &p_rx)
    {
        // Canonical endpoint order keeps the test exactly symmetric
        const bool swap = std::lexicographical_compare(p_rx.data(), p_rx.data() + 3, p_tx.data(), p_tx.data() + 3);
        const Vec3 &a = swap ? p_rx : p_tx;
        const Vec3 &b = swap ? p_tx : p_rx;
        for (const auto &box : scene.blockers)
            if (segment_intersects(box, a, b))
                return true;
        return false;
    }

    void Scene::validate() const
    {
        if (!(carrier_frequency > 0.0))
            throw std::invalid_argument("Carrier frequency must be positive.");
        if (layout.positions.empty())
            throw std::invalid_argument("Scene has no antennas.");
        if (trajectory.users() == 0)
            throw std::invalid_argument("Scene has no users.");
        for (const auto &b : blockers)
            if (!(b.lo.array() <= b.hi.array()).all())
                throw std::invalid_argument("Blocker box has lo > hi.");
    }
}
