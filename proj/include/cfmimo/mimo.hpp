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

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace cfmimo
{
    // Storage index of the centre tone q = 0
    inline Index center_tone(Index tones) { return (tones - 1) / 2; }

    // H_m[a][k] = H(m, a, k, iq); throws std::out_of_range for a bad index
    Eigen::MatrixXcd channel_matrix(const ChannelTensor &ctf, Index m, Index iq);

    // One A x K matrix per snapshot at storage tone iq
    std::vector<Eigen::MatrixXcd> assemble(const ChannelTensor &ctf, Index iq);

    // Writes the matrices back into tone iq of `ctf`
    void disassemble(const std::vector<Eigen::MatrixXcd> &seq, Index iq, ChannelTensor &ctf);

    // sigma^2/P^(P) used when regularization is requested but not given
    inline constexpr double kDefaultRegularization = 6.309573444801933e-12; // 10^-11.2

    // W = H (H^H H + reg I)^-1, computed as the least-squares solution of the stacked system
    // [H; sqrt(reg) I] X = [I; 0] with W = X^H. reg = 0 gives ZF. Throws std::domain_error
    // when the stacked matrix is rank deficient.
    Eigen::MatrixXcd beamform(const Eigen::MatrixXcd &H, double reg = 0.0);

    // Cubic Lagrange weights for samples at -2, -1, 0, 1 evaluated at x
    std::array<double, 4> lagrange_weights(double x);

    // Channel matrix at m T_R + dt from the cubic through snapshots m-2 .. m+1.
    // Throws std::out_of_range for a stencil outside the tensor, std::invalid_argument for dt outside [0, T_R).
    Eigen::MatrixXcd age_channel(const ChannelTensor &ctf, Index m, double dt, Index iq);

    enum class NoiseModel
    {
        filtered, // (sigma^2/P) ||w_k||^2
        fixed     // sigma^2/P, independent of the precoder
    };

    NoiseModel parse_noise_model(std::string_view s);
    std::string to_string(NoiseModel n);

    inline constexpr double kDefaultNoiseRatioDb = -112.0;

    // Per-user SINR of channel H under beamformer W
    Eigen::VectorXd sinr(const Eigen::MatrixXcd &H, const Eigen::MatrixXcd &W, double noise_ratio,
                         NoiseModel model = NoiseModel::filtered);

    struct SinrSample
    {
        Index m = 0; // absolute snapshot index
        Index k = 0;
        double dt = 0.0; // [s]
        double sinr = 0.0;
    };

    struct SinrParams
    {
        Index tone = -1; // storage index; -1 selects the centre tone
        std::vector<double> ages{10e-6, 100e-6, 500e-6};
        double regularization = kDefaultRegularization;
        double noise_ratio = 6.309573444801933e-12; // -112 dB
        NoiseModel noise_model = NoiseModel::filtered;
    };

    // SINR with aged CSI for every snapshot whose stencil fits in [m_begin, m_end).
    // `first_snapshot` is added to the reported indices.
    std::vector<SinrSample> sinr_series(const ChannelTensor &ctf, const SinrParams &p, Index m_begin, Index m_end,
                                        Index first_snapshot = 0);

    enum class HardeningPolicy
    {
        block_fixed, // ZF from the block's first snapshot applied across the block
        per_symbol   // fresh ZF at every snapshot
    };

    HardeningPolicy parse_hardening_policy(std::string_view s);
    std::string to_string(HardeningPolicy h);

    struct HardeningSample
    {
        Index k = 0, l = 0;
        double gamma = 0.0;
        double mean = 0.0; // mu
    };

    // mu = mean, gamma = sample std (1/(n-1)) / mu. Throws std::invalid_argument for fewer
    // than two samples and DataError for mu = 0.
    HardeningSample hardening_from_signal(const Eigen::Ref<const Eigen::VectorXd> &signal);

    // One sample per user and block of `block` snapshots starting at snapshot 0
    std::vector<HardeningSample> hardening(const ChannelTensor &ctf, Index iq, Index block,
                                           HardeningPolicy policy = HardeningPolicy::block_fixed,
                                           double regularization = 0.0);

    // Right-continuous empirical CDF
    class Ecdf
    {
    public:
        // Throws std::invalid_argument for an empty or non-finite sample set
        explicit Ecdf(std::vector<double> samples);

        double operator()(double x) const;
        double median() const; // midpoint of the two central order statistics for even n
        Index size() const { return static_cast<Index>(sorted_.size()); }
        const std::vector<double> &sorted() const { return sorted_; }

    private:
        std::vector<double> sorted_;
    };
}
