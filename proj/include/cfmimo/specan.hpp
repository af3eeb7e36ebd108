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

#include <optional>
#include <vector>

namespace cfmimo
{
    // Discrete prolate spheroidal sequences, columns ordered by decreasing concentration.
    // Unit energy; even sequences have a positive sum, odd ones a positive first lobe.
    Eigen::MatrixXd dpss(Index length, double nw, Index count, Eigen::VectorXd *concentration = nullptr);

    struct DpsTapers
    {
        Eigen::MatrixXd time;        // M x I
        Eigen::MatrixXd freq;        // Q x J
        Eigen::VectorXd time_concentration, freq_concentration;
        double nw = 2.0;

        Index block_length() const { return time.rows(); }
        Index tones() const { return freq.rows(); }
        Index I() const { return time.cols(); }
        Index J() const { return freq.cols(); }

        // 2-D taper w = i*J + j as an M x Q matrix
        Eigen::MatrixXd taper(Index w) const;
    };

    inline constexpr Index kDefaultBlock = 256;
    inline constexpr double kDefaultNw = 2.0;

    DpsTapers gen_tapers(Index M = kDefaultBlock, Index Q = kDefaultTones, Index I = 2, Index J = 1,
                         double nw = kDefaultNw);

    // Local scattering function of one stationarity block
    struct LsfBlock
    {
        Eigen::MatrixXd values; // Q x M; row n = delay bin, column p + M/2 for Doppler p in [-M/2, M/2)
        Index l = 0;
        double tau_res = 0.0;   // 1 / (Q delta_f) [s]
        double nu_res = 0.0;    // 1 / (M T_R) [Hz]

        Index tones() const { return values.rows(); }
        Index block_length() const { return values.cols(); }
        double &at(Index n, Index p) { return values(n, p + block_length() / 2); }
        double at(Index n, Index p) const { return values(n, p + block_length() / 2); }
    };

    // Taper-averaged periodogram of block l of link (a, k). Throws std::out_of_range if the
    // block exceeds the tensor and std::invalid_argument if the tapers do not fit.
    LsfBlock compute_lsf(const ChannelTensor &ctf, Index a, Index k, Index l, const DpsTapers &tapers);

    struct ThresholdInfo
    {
        double noise_floor = 0.0;
        double threshold = 0.0;
        double peak = 0.0;
    };

    inline constexpr double kNoiseThresholdDb = 3.0;
    inline constexpr double kSensitivityDb = 45.0;

    // Median of the largest-delay decile of bins (all Doppler shifts)
    double noise_floor(const LsfBlock &lsf);

    // Zeroes bins below max(floor * 10^(noise_db/10), peak * 10^(-sensitivity_db/10))
    LsfBlock apply_thresholds(const LsfBlock &lsf, double noise_db = kNoiseThresholdDb,
                              double sensitivity_db = kSensitivityDb, ThresholdInfo *info = nullptr);

    // PDP[n] = (1/M) sum_p C ; DSD[p + M/2] = (1/Q) sum_n C
    Eigen::VectorXd pdp(const LsfBlock &lsf);
    Eigen::VectorXd dsd(const LsfBlock &lsf);

    struct SpreadEntry
    {
        double power_delay = 0.0;   // sum_n PDP
        double power_doppler = 0.0; // sum_p DSD
        double mean_delay = 0.0;    // [s]
        double rms_delay = 0.0;     // [s]
        double mean_doppler = 0.0;  // [Hz]
        double rms_doppler = 0.0;   // [Hz]
        double power = 0.0;         // mean of C over all bins
    };

    // Empty when either profile is all zero. `dsd_profile` is indexed p + M/2.
    std::optional<SpreadEntry> moments(const Eigen::VectorXd &pdp_profile, const Eigen::VectorXd &dsd_profile,
                                       double tau_res, double nu_res);

    std::optional<SpreadEntry> moments(const LsfBlock &lsf);

    struct AnalysisParams
    {
        Index block = kDefaultBlock;
        double nw = kDefaultNw;
        Index time_tapers = 2;
        Index freq_tapers = 1;
        double noise_db = kNoiseThresholdDb;
        double sensitivity_db = kSensitivityDb;
    };

    // Result row of one (a, k, l)
    struct SpreadRow
    {
        Index a = 0, k = 0, l = 0;
        Index first_snapshot = 0; // absolute snapshot index of the block start
        int region = 0;           // 1-based, 0 when unknown
        double arc = 0.0;         // distance travelled at the block centre [m]
        double raw_power = 0.0;   // mean of the unthresholded LSF
        bool valid = false;       // thresholded profiles non-zero
        SpreadEntry values;       // moments of the thresholded LSF
    };

    // Per-region average power and its normalization by the best antenna-averaged region
    struct PowerMetrics
    {
        std::vector<int> regions;   // region labels in column order
        Eigen::MatrixXd average;    // A x S, linear
        Eigen::MatrixXd normalized; // A x S, linear; max_s mean_a = 1
        std::vector<Index> blocks;  // |L(s)|
    };

    // Region averages of raw_power over the rows of one user, regions taken from the rows
    // (region 0 ignored). Throws DataError if an antenna has no block in a listed region and
    // std::invalid_argument if no row carries a region.
    PowerMetrics region_power(const std::vector<SpreadRow> &rows, Index antennas, Index user);
}
