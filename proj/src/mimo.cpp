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

#include "cfmimo/mimo.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfmimo
{
    Eigen::MatrixXcd channel_matrix(const ChannelTensor &ctf, Index m, Index iq)
    {
        if (iq < 0 || iq >= ctf.tones())
            throw std::out_of_range("Tone index out of range.");
        if (m < 0 || m >= ctf.snapshots())
            throw std::out_of_range("Snapshot index out of range.");
        Eigen::MatrixXcd H(ctf.antennas(), ctf.users());
        for (Index a = 0; a < ctf.antennas(); ++a)
            for (Index k = 0; k < ctf.users(); ++k)
                H(a, k) = ctf(m, a, k, iq);
        return H;
    }

    std::vector<Eigen::MatrixXcd> assemble(const ChannelTensor &ctf, Index iq)
    {
        std::vector<Eigen::MatrixXcd> seq;
        seq.reserve(static_cast<std::size_t>(ctf.snapshots()));
        for (Index m = 0; m < ctf.snapshots(); ++m)
            seq.push_back(channel_matrix(ctf, m, iq));
        return seq;
    }

    void disassemble(const std::vector<Eigen::MatrixXcd> &seq, Index iq, ChannelTensor &ctf)
    {
        if (iq < 0 || iq >= ctf.tones())
            throw std::out_of_range("Tone index out of range.");
        if (static_cast<Index>(seq.size()) != ctf.snapshots())
            throw std::invalid_argument("Sequence length differs from the snapshot count.");
        for (Index m = 0; m < ctf.snapshots(); ++m)
        {
            const auto &H = seq[static_cast<std::size_t>(m)];
            if (H.rows() != ctf.antennas() || H.cols() != ctf.users())
                throw std::invalid_argument("Channel matrix shape differs from the tensor.");
            for (Index a = 0; a < ctf.antennas(); ++a)
                for (Index k = 0; k < ctf.users(); ++k)
                    ctf(m, a, k, iq) = H(a, k);
        }
    }

    Eigen::MatrixXcd beamform(const Eigen::MatrixXcd &H, double reg)
    {
        const Index A = H.rows(), K = H.cols();
        if (K < 1 || A < 1)
            throw std::invalid_argument("Channel matrix must be non-empty.");
        if (!(reg >= 0.0))
            throw std::invalid_argument("Regularization must be non-negative.");
        if (!H.allFinite())
            throw std::invalid_argument("Channel matrix has non-finite entries.");

        const Index rows = reg > 0.0 ? A + K : A;
        Eigen::MatrixXcd B(rows, K), R = Eigen::MatrixXcd::Zero(rows, A);
        B.topRows(A) = H;
        R.topRows(A).setIdentity();
        if (reg > 0.0)
            B.bottomRows(K) = std::sqrt(reg) * Eigen::MatrixXcd::Identity(K, K);

        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(B);
        if (qr.rank() < K)
            throw std::domain_error("Channel matrix is rank deficient; zero forcing is undefined.");
        return qr.solve(R).adjoint();
    }

    std::array<double, 4> lagrange_weights(double x)
    {
        return {-(x + 1.0) * x * (x - 1.0) / 6.0, (x + 2.0) * x * (x - 1.0) / 2.0,
                -(x + 2.0) * (x + 1.0) * (x - 1.0) / 2.0, (x + 2.0) * (x + 1.0) * x / 6.0};
    }

    Eigen::MatrixXcd age_channel(const ChannelTensor &ctf, Index m, double dt, Index iq)
    {
        const double TR = ctf.grid().repetition;
        if (!(dt >= 0.0) || !(dt < TR))
            throw std::invalid_argument("Aging delay must lie in [0, T_R).");
        if (m < 2 || m + 1 >= ctf.snapshots())
            throw std::out_of_range("Interpolation stencil m-2 .. m+1 exceeds the tensor.");
        if (dt == 0.0)
            return channel_matrix(ctf, m, iq);

        const auto w = lagrange_weights(dt / TR);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(ctf.antennas(), ctf.users());
        for (int s = 0; s < 4; ++s)
            H += w[s] * channel_matrix(ctf, m - 2 + s, iq);
        return H;
    }

    NoiseModel parse_noise_model(std::string_view s)
    {
        if (s == "filtered")
            return NoiseModel::filtered;
        if (s == "fixed")
            return NoiseModel::fixed;
        throw std::invalid_argument("Unknown noise model '" + std::string(s) + "'.");
    }

    std::string to_string(NoiseModel n) { return n == NoiseModel::fixed ? "fixed" : "filtered"; }

    Eigen::VectorXd sinr(const Eigen::MatrixXcd &H, const Eigen::MatrixXcd &W, double noise_ratio, NoiseModel model)
    {
        if (H.rows() != W.rows() || H.cols() != W.cols())
            throw std::invalid_argument("Beamformer and channel matrix differ in shape.");
        const Eigen::MatrixXcd G = W.adjoint() * H; // G(k, k') = w_k^H h_k'
        const Index K = H.cols();
        Eigen::VectorXd out(K);
        for (Index k = 0; k < K; ++k)
        {
            double interference = 0.0;
            for (Index j = 0; j < K; ++j)
                if (j != k)
                    interference += std::norm(G(k, j));
            const double noise =
                model == NoiseModel::filtered ? noise_ratio * W.col(k).squaredNorm() : noise_ratio;
            out[k] = std::norm(G(k, k)) / (noise + interference);
        }
        return out;
    }

    std::vector<SinrSample> sinr_series(const ChannelTensor &ctf, const SinrParams &p, Index m_begin, Index m_end,
                                        Index first_snapshot)
    {
        const Index iq = p.tone < 0 ? center_tone(ctf.tones()) : p.tone;
        m_begin = std::max<Index>(m_begin, 0);
        m_end = std::min(m_end, ctf.snapshots());
        std::vector<SinrSample> out;
        for (Index m = m_begin + 2; m + 2 <= m_end; ++m)
        {
            const Eigen::MatrixXcd H = channel_matrix(ctf, m, iq);
            for (double dt : p.ages)
            {
                const Eigen::MatrixXcd W = beamform(age_channel(ctf, m, dt, iq), p.regularization);
                const Eigen::VectorXd s = sinr(H, W, p.noise_ratio, p.noise_model);
                for (Index k = 0; k < s.size(); ++k)
                    out.push_back({first_snapshot + m, k, dt, s[k]});
            }
        }
        return out;
    }

    HardeningPolicy parse_hardening_policy(std::string_view s)
    {
        if (s == "block_fixed")
            return HardeningPolicy::block_fixed;
        if (s == "per_symbol")
            return HardeningPolicy::per_symbol;
        throw std::invalid_argument("Unknown hardening policy '" + std::string(s) + "'.");
    }

    std::string to_string(HardeningPolicy h) { return h == HardeningPolicy::per_symbol ? "per_symbol" : "block_fixed"; }

    HardeningSample hardening_from_signal(const Eigen::Ref<const Eigen::VectorXd> &signal)
    {
        const Index n = signal.size();
        if (n < 2)
            throw std::invalid_argument("Hardening needs at least two samples.");
        HardeningSample h;
        h.mean = signal.mean();
        if (!(h.mean > 0.0))
            throw DataError("Mean signal power is zero; hardening coefficient undefined.");
        const double var = (signal.array() - h.mean).square().sum() / static_cast<double>(n - 1);
        h.gamma = std::sqrt(var) / h.mean;
        return h;
    }

    std::vector<HardeningSample> hardening(const ChannelTensor &ctf, Index iq, Index block, HardeningPolicy policy,
                                           double regularization)
    {
        if (block < 2)
            throw std::invalid_argument("Hardening block must hold at least two snapshots.");
        const Index L = ctf.snapshots() / block;
        if (L < 1)
            throw std::out_of_range("Channel tensor is shorter than one hardening block.");
        const Index K = ctf.users();
        std::vector<HardeningSample> out;
        Eigen::MatrixXd signal(block, K);
        for (Index l = 0; l < L; ++l)
        {
            Eigen::MatrixXcd W;
            for (Index i = 0; i < block; ++i)
            {
                const Eigen::MatrixXcd H = channel_matrix(ctf, l * block + i, iq);
                if (i == 0 || policy == HardeningPolicy::per_symbol)
                    W = beamform(H, regularization);
                for (Index k = 0; k < K; ++k)
                    signal(i, k) = std::norm(W.col(k).dot(H.col(k)));
            }
            for (Index k = 0; k < K; ++k)
            {
                HardeningSample h = hardening_from_signal(signal.col(k));
                h.k = k;
                h.l = l;
                out.push_back(h);
            }
        }
        return out;
    }

    Ecdf::Ecdf(std::vector<double> samples) : sorted_(std::move(samples))
    {
        if (sorted_.empty())
            throw std::invalid_argument("Empirical CDF needs at least one sample.");
        for (double v : sorted_)
            if (!std::isfinite(v))
                throw std::invalid_argument("Empirical CDF samples must be finite.");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double Ecdf::operator()(double x) const
    {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(std::distance(sorted_.begin(), it)) / static_cast<double>(sorted_.size());
    }

    double Ecdf::median() const
    {
        const std::size_t n = sorted_.size();
        return n % 2 == 1 ? sorted_[n / 2] : 0.5 * (sorted_[n / 2 - 1] + sorted_[n / 2]);
    }
}
