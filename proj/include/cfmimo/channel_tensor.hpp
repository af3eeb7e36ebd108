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
#include <stdexcept>

namespace cfmimo
{
    using Index = Eigen::Index;

    // Sampling metadata shared by every channel tensor
    struct MeasurementGrid
    {
        double carrier_frequency = kDefaultCarrier; // f [Hz]
        double tone_spacing = kDefaultToneSpacing;  // Delta f [Hz]
        double repetition = kDefaultRepetition;     // T_R [s]

        double wavelength() const { return kSpeedOfLight / carrier_frequency; }
        double period() const { return 1.0 / tone_spacing; }
    };

    // Signed tone index q in [-(Q-1)/2, (Q-1)/2] of storage position iq
    inline Index tone_offset(Index iq, Index tones) { return iq - (tones - 1) / 2; }

    // Time-variant transfer function H[m][a][k][q] (snapshot, antenna, user, tone).
    //
    // Storage is a Q x (M*A*K) column-major matrix so that the memory order matches
    // [m][a][k][q] row-major, i.e. the tones of one link snapshot are contiguous.
    template <typename Scalar>
    class BasicChannelTensor
    {
    public:
        using Complex = std::complex<Scalar>;
        using Storage = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

        BasicChannelTensor() = default;

        BasicChannelTensor(Index antennas, Index users, Index snapshots, Index tones, MeasurementGrid grid = {})
            : A_(antennas), K_(users), M_(snapshots), Q_(tones), grid_(grid)
        {
            if (antennas < 1 || users < 1 || snapshots < 1 || tones < 1)
                throw std::invalid_argument("Channel tensor dimensions must be positive.");
            if (tones % 2 == 0)
                throw std::invalid_argument("Number of tones must be odd.");
            if (!(grid.tone_spacing > 0.0) || !(grid.repetition > 0.0) || !(grid.carrier_frequency > 0.0))
                throw std::invalid_argument("Tone spacing, repetition rate and carrier must be positive.");
            data_ = Storage::Zero(Q_, M_ * A_ * K_);
        }

        Index antennas() const { return A_; }
        Index users() const { return K_; }
        Index snapshots() const { return M_; }
        Index tones() const { return Q_; }
        const MeasurementGrid &grid() const { return grid_; }
        MeasurementGrid &grid() { return grid_; }

        Index column(Index m, Index a, Index k) const { return (m * A_ + a) * K_ + k; }

        Complex &operator()(Index m, Index a, Index k, Index q) { return data_(q, column(m, a, k)); }
        const Complex &operator()(Index m, Index a, Index k, Index q) const { return data_(q, column(m, a, k)); }

        // All Q tones of one link snapshot
        auto link(Index m, Index a, Index k) { return data_.col(column(m, a, k)); }
        auto link(Index m, Index a, Index k) const { return data_.col(column(m, a, k)); }

        Storage &data() { return data_; }
        const Storage &data() const { return data_; }

        bool all_finite() const { return data_.allFinite(); }

        template <typename Other>
        BasicChannelTensor<Other> cast() const
        {
            BasicChannelTensor<Other> out(A_, K_, M_, Q_, grid_);
            out.data() = data_.template cast<std::complex<Other>>();
            return out;
        }

        bool same_shape(const BasicChannelTensor &o) const
        {
            return A_ == o.A_ && K_ == o.K_ && M_ == o.M_ && Q_ == o.Q_;
        }

    private:
        Index A_ = 0, K_ = 0, M_ = 0, Q_ = 0;
        MeasurementGrid grid_;
        Storage data_;
    };

    using ChannelTensor = BasicChannelTensor<double>;
    using ChannelTensorF = BasicChannelTensor<float>;
}
