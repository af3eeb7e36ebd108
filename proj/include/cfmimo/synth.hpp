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

#include "cfmimo/channel_tensor.hpp"
#include "cfmimo/scene.hpp"

#include <cstdint>
#include <vector>

namespace cfmimo
{
    struct SynthParams
    {
        double pathloss_exponent = 2.0;
        double scatter_gain_min = 0.03; // log-uniform magnitude range of the per-run scatterer draw
        double scatter_gain_max = 0.3;
        bool add_noise = true;
        double measurement_snr_db = 30.0; // per link snapshot, relative to its mean tone power
        std::uint64_t seed = 1;
    };

    // Snapshot window and tone grid of a synthesis run
    struct SynthWindow
    {
        Index first_snapshot = 0; // absolute snapshot index; time = m * T_R
        Index snapshots = 1;
        Index tones = kDefaultTones;
        double tone_spacing = kDefaultToneSpacing;
        double repetition = kDefaultRepetition;
    };

    // One propagation path of a link at one instant
    struct PathSample
    {
        std::complex<double> amplitude; // alpha_p
        double delay = 0.0;             // tau_p [s]
    };

    // Per-run complex scatterer gains: scene scale times a log-uniform magnitude with uniform phase
    std::vector<std::complex<double>> draw_scatterer_gains(const Scene &scene, const SynthParams &params);

    // Paths from a transmit point to a receive antenna (LOS unless blocked, plus every
    // single-bounce scatterer). Throws std::domain_error for a zero path length.
    std::vector<PathSample> trace_paths(const Scene &scene, const SynthParams &params,
                                        const std::vector<std::complex<double>> &scatter_gains, const Vec3 &p_ue,
                                        const Vec3 &p_bs);

    // Adds the multitone response of `paths` to the Q tones of `out`
    void accumulate_paths(const std::vector<PathSample> &paths, double f_carrier, double tone_spacing,
                          Eigen::Ref<Eigen::VectorXcd> out);

    // Ground-truth time-variant transfer function of the scene over a snapshot window
    ChannelTensor synthesize_ctf(const Scene &scene, const SynthParams &params, const SynthWindow &window);

    // Zero-mean unit-variance circular Gaussian entries, reproducible from seed
    ChannelTensor iid_rayleigh(Index antennas, Index users, Index snapshots, Index tones, std::uint64_t seed,
                               MeasurementGrid grid = {});

    // Counter-based seed for per-index random streams
    std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                              std::uint64_t d = 0);
}
