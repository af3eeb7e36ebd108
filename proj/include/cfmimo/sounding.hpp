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

#include <cstdint>

namespace cfmimo
{
    // Unit-amplitude multitone X[q] = exp(j phi_q), q = -(Q-1)/2 .. (Q-1)/2
    struct MultitoneSpec
    {
        Index tones = kDefaultTones;
        double tone_spacing = kDefaultToneSpacing;
        Eigen::VectorXd phases; // Q angles [rad]; storage index iq <-> q = iq - (Q-1)/2

        static MultitoneSpec zero_phase(Index tones = kDefaultTones, double tone_spacing = kDefaultToneSpacing);

        double period() const { return 1.0 / tone_spacing; }
        double bandwidth() const { return static_cast<double>(tones) * tone_spacing; }
        Eigen::VectorXcd weights() const;

        // Throws std::invalid_argument for even/zero Q, non-positive spacing or a phase count mismatch
        void validate() const;
    };

    // One period of x[n] = sum_q X[q] exp(j 2 pi q n / (Q * oversample))
    Eigen::VectorXcd synth_multitone(const MultitoneSpec &spec, Index oversample = 1);

    // Peak modulus over RMS modulus of the given samples
    template <typename Derived>
    double crest_factor(const Eigen::MatrixBase<Derived> &x)
    {
        const double ms = x.squaredNorm() / static_cast<double>(x.size());
        if (!(ms > 0.0))
            throw std::invalid_argument("Crest factor of an all-zero signal is undefined.");
        return x.cwiseAbs().maxCoeff() / std::sqrt(ms);
    }

    inline constexpr Index kCrestOversample = 8;

    // Crest factor of the continuous waveform, rendered at 8x oversampling
    double crest_factor(const MultitoneSpec &spec);

    struct PhaseSearch
    {
        Eigen::VectorXd phases;
        double crest = 0.0;
        bool reached = false; // crest <= target
        int iterations = 0;
    };

    // Clip-and-refit search with random restarts. Returns the first phase set at or below
    // `target_c`, otherwise the best one seen within `max_iter` iterations.
    PhaseSearch optimize_phases(Index tones, double target_c, int max_iter, std::uint64_t seed);

    // Same, starting from `initial`; returns it unchanged if it already meets the target
    PhaseSearch optimize_phases(const Eigen::VectorXd &initial, double target_c, int max_iter, std::uint64_t seed);

    // Three concatenated periods; user k transmits after a k * 3T delay
    struct SoundingFrame
    {
        Eigen::VectorXcd samples; // 3Q samples at rate Q * delta_f
        double user_offset = 0.0; // [s]
    };

    SoundingFrame make_frame(const MultitoneSpec &spec, Index user);

    // Complex per-(a,k,q) RF chain response. Storage Q x (A*K), column a*K + k.
    struct RfCalibration
    {
        Eigen::MatrixXcd response;
        Index antennas = 0, users = 0;

        static RfCalibration uniform(Index antennas, Index users, Index tones, std::complex<double> value = 1.0);

        Index tones() const { return response.rows(); }
        auto link(Index a, Index k) { return response.col(a * users + k); }
        auto link(Index a, Index k) const { return response.col(a * users + k); }
    };

    enum class DemodWindow
    {
        two_periods, // 2Q-point transform over copies 2 and 3, even bins kept
        one_period   // Q-point transform over copy 2 only
    };

    struct ReceptionOptions
    {
        bool add_noise = true;
        double snr_db = 25.0;        // per link snapshot, referenced to the mean received signal power
        std::uint64_t seed = 1;
        Index first_snapshot = 0;    // absolute index of snapshot 0, keys the noise streams
        DemodWindow window = DemodWindow::two_periods;
    };

    // Time-domain records: one timeline of K frames (K * 3Q samples) per (m, a).
    // Storage (K*3Q) x (M*A), column m*A + a; user k occupies rows [k*3Q, (k+1)*3Q).
    struct ReceivedRecords
    {
        Eigen::MatrixXcd samples;
        Index antennas = 0, users = 0, snapshots = 0, tones = 0;
        MeasurementGrid grid;

        Index frame_length() const { return 3 * tones; }
        auto frame(Index m, Index a, Index k)
        {
            return samples.col(m * antennas + a).segment(k * frame_length(), frame_length());
        }
        auto frame(Index m, Index a, Index k) const
        {
            return samples.col(m * antennas + a).segment(k * frame_length(), frame_length());
        }
    };

    // Each user's periodic frame passed through truth * rf per tone, plus complex white noise.
    // Throws std::invalid_argument on dimension mismatch.
    ReceivedRecords simulate_reception(const MultitoneSpec &spec, const ChannelTensor &truth, const RfCalibration &rf,
                                       const ReceptionOptions &opt);

    // Drops the first period and transforms; returns Y[m][a][k][q] in a tensor of the same shape.
    // Throws DataError when a frame is shorter than 3Q samples.
    ChannelTensor demodulate(const ReceivedRecords &rx, DemodWindow window = DemodWindow::two_periods);

    // Demodulated tones of a single received frame
    Eigen::VectorXcd demodulate_frame(const Eigen::Ref<const Eigen::VectorXcd> &frame, Index tones,
                                      DemodWindow window = DemodWindow::two_periods);

    // Loopback through a unit channel: Y / X for every (a, k)
    RfCalibration measure_calibration(const MultitoneSpec &spec, const RfCalibration &rf,
                                      DemodWindow window = DemodWindow::two_periods);

    // H = Y / (X * H_rf). Throws std::invalid_argument for a zero calibration entry.
    ChannelTensor estimate_ctf(const ChannelTensor &Y, const MultitoneSpec &spec, const RfCalibration &calibration);

    // Full chain over a tensor in chunks of `chunk` snapshots to bound memory
    ChannelTensor sound_ctf(const ChannelTensor &truth, const MultitoneSpec &spec, const RfCalibration &rf,
                            const RfCalibration &calibration, ReceptionOptions opt, Index chunk = 64);

    // 10 log10 of ||est - truth||^2 / ||truth||^2
    double nmse_db(const ChannelTensor &estimate, const ChannelTensor &truth);
}
