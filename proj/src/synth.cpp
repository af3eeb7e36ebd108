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

#include "cfmimo/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cfmimo
{
    namespace
    {
        std::uint64_t splitmix64(std::uint64_t x)
        {
            x += 0x9E3779B97F4A7C15ull;
            x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
            x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
            return x ^ (x >> 31);
        }

        // exp(-j 2 pi x) with x reduced to its fractional part first
        std::complex<double> unit_phasor(double cycles)
        {
            const double frac = cycles - std::floor(cycles);
            return std::polar(1.0, -kTwoPi * frac);
        }

        double path_amplitude(double lambda, double distance, double exponent)
        {
            return lambda / (4.0 * std::numbers::pi) * std::pow(distance, -0.5 * exponent);
        }

        // Per-link measurement noise seeded by the absolute snapshot index
        void add_link_noise(Eigen::Ref<Eigen::VectorXcd> tones, double snr_db, std::uint64_t seed)
        {
            const double p = tones.squaredNorm() / static_cast<double>(tones.size());
            if (!(p > 0.0))
                return;
            const double sigma = std::sqrt(p / db_to_linear(snr_db) / 2.0);
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> n(0.0, sigma);
            for (Index q = 0; q < tones.size(); ++q)
            {
                const double re = n(rng);
                const double im = n(rng);
                tones[q] += std::complex<double>(re, im);
            }
        }
    }

    std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d)
    {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ a);
        h = splitmix64(h ^ b);
        h = splitmix64(h ^ c);
        return splitmix64(h ^ d);
    }

    std::vector<std::complex<double>> draw_scatterer_gains(const Scene &scene, const SynthParams &params)
    {
        if (!(params.scatter_gain_min > 0.0) || params.scatter_gain_max < params.scatter_gain_min)
            throw std::invalid_argument("Scatterer gain range must satisfy 0 < min <= max.");
        std::mt19937_64 rng(stream_seed(params.seed, 0x5ca77e5ull));
        std::uniform_real_distribution<double> log_mag(std::log(params.scatter_gain_min),
                                                       std::log(params.scatter_gain_max));
        std::uniform_real_distribution<double> phase(0.0, kTwoPi);
        std::vector<std::complex<double>> gains;
        gains.reserve(scene.scatterers.size());
        for (const auto &s : scene.scatterers)
        {
            const double mag = std::exp(log_mag(rng));
            gains.push_back(s.gain * std::polar(mag, phase(rng)));
        }
        return gains;
    }

    std::vector<PathSample> trace_paths(const Scene &scene, const SynthParams &params,
                                        const std::vector<std::complex<double>> &scatter_gains, const Vec3 &p_ue,
                                        const Vec3 &p_bs)
    {
        const double lambda = kSpeedOfLight / scene.carrier_frequency;
        std::vector<PathSample> paths;
        paths.reserve(1 + scene.scatterers.size());

        const double d_los = (p_bs - p_ue).norm();
        if (!(d_los > 0.0))
            throw std::domain_error("Degenerate geometry: zero transmitter-receiver distance.");
        if (!los_blocked(scene, p_ue, p_bs))
            paths.push_back({path_amplitude(lambda, d_los, params.pathloss_exponent), d_los / kSpeedOfLight});

        for (std::size_t i = 0; i < scene.scatterers.size(); ++i)
        {
            const Vec3 &s = scene.scatterers[i].position;
            const double d1 = (s - p_ue).norm();
            const double d2 = (p_bs - s).norm();
            if (!(d1 > 0.0) || !(d2 > 0.0))
                throw std::domain_error("Degenerate geometry: scatterer coincides with a terminal.");
            const double d = d1 + d2;
            paths.push_back({scatter_gains.at(i) * path_amplitude(lambda, d, params.pathloss_exponent),
                             d / kSpeedOfLight});
        }
        return paths;
    }

    void accumulate_paths(const std::vector<PathSample> &paths, double f_carrier, double tone_spacing,
                          Eigen::Ref<Eigen::VectorXcd> out)
    {
        const Index Q = out.size();
        const double q_first = static_cast<double>(tone_offset(0, Q));
        for (const auto &p : paths)
        {
            std::complex<double> phasor =
                p.amplitude * unit_phasor(f_carrier * p.delay) * unit_phasor(q_first * tone_spacing * p.delay);
            const std::complex<double> step = unit_phasor(tone_spacing * p.delay);
            for (Index q = 0; q < Q; ++q)
            {
                out[q] += phasor;
                phasor *= step;
            }
        }
    }

    ChannelTensor synthesize_ctf(const Scene &scene, const SynthParams &params, const SynthWindow &window)
    {
        scene.validate();
        if (window.snapshots < 1)
            throw std::invalid_argument("Synthesis needs at least one snapshot.");
        if (window.first_snapshot < 0)
            throw std::invalid_argument("First snapshot index cannot be negative.");

        MeasurementGrid grid{scene.carrier_frequency, window.tone_spacing, window.repetition};
        const Index A = static_cast<Index>(scene.layout.size());
        const Index K = static_cast<Index>(scene.trajectory.users());
        ChannelTensor H(A, K, window.snapshots, window.tones, grid);

        const auto gains = draw_scatterer_gains(scene, params);

        for (Index m = 0; m < window.snapshots; ++m)
        {
            const Index m_abs = window.first_snapshot + m;
            const double t = static_cast<double>(m_abs) * window.repetition;
            const UeState state = scene.trajectory.state_at(t);
            for (Index k = 0; k < K; ++k)
            {
                const Vec3 p_ue = scene.trajectory.antenna_position(state, static_cast<std::size_t>(k));
                for (Index a = 0; a < A; ++a)
                {
                    const auto paths = trace_paths(scene, params, gains, p_ue, scene.layout.positions[a]);
                    auto link = H.link(m, a, k);
                    accumulate_paths(paths, scene.carrier_frequency, window.tone_spacing, link);
                    if (params.add_noise)
                        add_link_noise(link, params.measurement_snr_db,
                                       stream_seed(params.seed, 1, static_cast<std::uint64_t>(m_abs),
                                                   static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(k)));
                }
            }
        }
        return H;
    }

    ChannelTensor iid_rayleigh(Index antennas, Index users, Index snapshots, Index tones, std::uint64_t seed,
                               MeasurementGrid grid)
    {
        ChannelTensor H(antennas, users, snapshots, tones, grid);
        const double sigma = std::sqrt(0.5);
        for (Index m = 0; m < snapshots; ++m)
            for (Index a = 0; a < antennas; ++a)
                for (Index k = 0; k < users; ++k)
                {
                    std::mt19937_64 rng(stream_seed(seed, 2, static_cast<std::uint64_t>(m),
                                                    static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(k)));
                    std::normal_distribution<double> n(0.0, sigma);
                    auto link = H.link(m, a, k);
                    for (Index q = 0; q < tones; ++q)
                    {
                        const double re = n(rng);
                        const double im = n(rng);
                        link[q] = {re, im};
                    }
                }
        return H;
    }
}
