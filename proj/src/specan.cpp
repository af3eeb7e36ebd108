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

#include "cfmimo/specan.hpp"

#include "dft.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cfmimo
{
    namespace
    {
        // Fraction of the sequence energy inside |f| < W
        double concentration_ratio(const Eigen::VectorXd &v, double W)
        {
            const Index N = v.size();
            double lambda = 2.0 * W * v.squaredNorm();
            for (Index d = 1; d < N; ++d)
            {
                const double r = v.head(N - d).dot(v.tail(N - d));
                lambda += 2.0 * r * std::sin(kTwoPi * W * static_cast<double>(d)) / (std::numbers::pi * d);
            }
            return lambda;
        }

        double median_of(std::vector<double> v)
        {
            const std::size_t n = v.size();
            auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
            std::nth_element(v.begin(), mid, v.end());
            const double hi = *mid;
            if (n % 2 == 1)
                return hi;
            const double lo = *std::max_element(v.begin(), mid);
            return 0.5 * (lo + hi);
        }
    }

    Eigen::MatrixXd dpss(Index length, double nw, Index count, Eigen::VectorXd *concentration)
    {
        if (length < 1 || count < 1 || count > length)
            throw std::invalid_argument("DPS sequence count must lie in [1, length].");
        if (!(nw > 0.0) || nw >= 0.5 * static_cast<double>(length))
            throw std::invalid_argument("Time-bandwidth product must lie in (0, length/2).");

        const Index N = length;
        const double W = nw / static_cast<double>(N);
        Eigen::MatrixXd out(N, count);
        if (N == 1)
        {
            out.setOnes();
            if (concentration)
                *concentration = Eigen::VectorXd::Constant(1, 2.0 * W);
            return out;
        }

        Eigen::VectorXd diag(N), off(N - 1);
        const double c = std::cos(kTwoPi * W);
        for (Index i = 0; i < N; ++i)
        {
            const double x = 0.5 * static_cast<double>(N - 1 - 2 * i);
            diag[i] = x * x * c;
        }
        for (Index i = 0; i + 1 < N; ++i)
            off[i] = 0.5 * static_cast<double>(i + 1) * static_cast<double>(N - 1 - i);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("DPS eigenproblem did not converge.");

        const double thresh = std::max(1e-7, 1.0 / static_cast<double>(N));
        for (Index s = 0; s < count; ++s)
        {
            Eigen::VectorXd v = es.eigenvectors().col(N - 1 - s).normalized();
            if (s % 2 == 0)
            {
                if (v.sum() < 0.0)
                    v = -v;
            }
            else
            {
                for (Index i = 0; i < N; ++i)
                    if (v[i] * v[i] > thresh)
                    {
                        if (v[i] < 0.0)
                            v = -v;
                        break;
                    }
            }
            out.col(s) = v;
        }

        if (concentration)
        {
            concentration->resize(count);
            for (Index s = 0; s < count; ++s)
                (*concentration)[s] = concentration_ratio(out.col(s), W);
        }
        return out;
    }

    DpsTapers gen_tapers(Index M, Index Q, Index I, Index J, double nw)
    {
        if (I < 1 || I > M || J < 1 || J > Q)
            throw std::invalid_argument("Taper counts must satisfy 1 <= I <= M and 1 <= J <= Q.");
        DpsTapers t;
        t.nw = nw;
        t.time = dpss(M, nw, I, &t.time_concentration);
        t.freq = dpss(Q, nw, J, &t.freq_concentration);
        return t;
    }

    Eigen::MatrixXd DpsTapers::taper(Index w) const
    {
        if (w < 0 || w >= I() * J())
            throw std::out_of_range("Taper index out of range.");
        return time.col(w / J()) * freq.col(w % J()).transpose();
    }

    LsfBlock compute_lsf(const ChannelTensor &ctf, Index a, Index k, Index l, const DpsTapers &tapers)
    {
        const Index M = tapers.block_length();
        const Index Q = ctf.tones();
        if (tapers.tones() != Q)
            throw std::invalid_argument("Frequency tapers do not match the number of tones.");
        if (M < 2 || M % 2 != 0)
            throw std::invalid_argument("Block length must be even and at least 2.");
        if (a < 0 || a >= ctf.antennas() || k < 0 || k >= ctf.users())
            throw std::out_of_range("Antenna or user index out of range.");
        if (l < 0 || (l + 1) * M > ctf.snapshots())
            throw std::out_of_range("Stationarity block exceeds the channel tensor.");

        LsfBlock out;
        out.l = l;
        out.tau_res = 1.0 / (static_cast<double>(Q) * ctf.grid().tone_spacing);
        out.nu_res = 1.0 / (static_cast<double>(M) * ctf.grid().repetition);
        out.values = Eigen::MatrixXd::Zero(Q, M);

        // Block samples, Q x M
        Eigen::MatrixXcd Hb(Q, M);
        for (Index m = 0; m < M; ++m)
            Hb.col(m) = ctf.link(l * M + m, a, k);

        Eigen::MatrixXcd Z(Q, M);
        detail::cvec row(static_cast<std::size_t>(M)), col(static_cast<std::size_t>(Q)), tmp;
        const Index tapers_total = tapers.I() * tapers.J();
        for (Index i = 0; i < tapers.I(); ++i)
            for (Index j = 0; j < tapers.J(); ++j)
            {
                Z = tapers.freq.col(j).asDiagonal() * Hb * tapers.time.col(i).asDiagonal();
                // Doppler: forward transform over time
                for (Index q = 0; q < Q; ++q)
                {
                    for (Index m = 0; m < M; ++m)
                        row[m] = Z(q, m);
                    detail::dft_forward(tmp, row);
                    for (Index b = 0; b < M; ++b)
                        Z(q, b) = tmp[b];
                }
                // Delay: inverse-sign transform over frequency
                for (Index b = 0; b < M; ++b)
                {
                    for (Index q = 0; q < Q; ++q)
                        col[q] = Z(q, b);
                    detail::dft_inverse(tmp, col);
                    const Index p = b < M / 2 ? b : b - M;
                    for (Index n = 0; n < Q; ++n)
                        out.values(n, p + M / 2) += std::norm(tmp[n]);
                }
            }
        out.values /= static_cast<double>(tapers_total);
        return out;
    }

    double noise_floor(const LsfBlock &lsf)
    {
        const Index Q = lsf.tones(), M = lsf.block_length();
        const Index rows = std::max<Index>(1, Q / 10);
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(rows * M));
        for (Index n = Q - rows; n < Q; ++n)
            for (Index c = 0; c < M; ++c)
                v.push_back(lsf.values(n, c));
        return median_of(std::move(v));
    }

    LsfBlock apply_thresholds(const LsfBlock &lsf, double noise_db, double sensitivity_db, ThresholdInfo *info)
    {
        ThresholdInfo ti;
        ti.noise_floor = noise_floor(lsf);
        ti.peak = lsf.values.maxCoeff();
        ti.threshold = std::max(ti.noise_floor * db_to_linear(noise_db), ti.peak * db_to_linear(-sensitivity_db));
        LsfBlock out = lsf;
        out.values = (lsf.values.array() < ti.threshold).select(0.0, lsf.values);
        if (info)
            *info = ti;
        return out;
    }

    Eigen::VectorXd pdp(const LsfBlock &lsf)
    {
        return lsf.values.rowwise().sum() / static_cast<double>(lsf.block_length());
    }

    Eigen::VectorXd dsd(const LsfBlock &lsf)
    {
        return lsf.values.colwise().sum().transpose() / static_cast<double>(lsf.tones());
    }

    std::optional<SpreadEntry> moments(const Eigen::VectorXd &pdp_profile, const Eigen::VectorXd &dsd_profile,
                                       double tau_res, double nu_res)
    {
        if ((pdp_profile.array() < 0.0).any() || (dsd_profile.array() < 0.0).any())
            throw std::invalid_argument("Profiles must be non-negative.");
        SpreadEntry e;
        e.power_delay = pdp_profile.sum();
        e.power_doppler = dsd_profile.sum();
        if (!(e.power_delay > 0.0) || !(e.power_doppler > 0.0))
            return std::nullopt;

        const Index Q = pdp_profile.size();
        const Index M = dsd_profile.size();
        for (Index n = 0; n < Q; ++n)
            e.mean_delay += static_cast<double>(n) * tau_res * pdp_profile[n];
        e.mean_delay /= e.power_delay;
        double var = 0.0;
        for (Index n = 0; n < Q; ++n)
        {
            const double d = static_cast<double>(n) * tau_res - e.mean_delay;
            var += d * d * pdp_profile[n];
        }
        e.rms_delay = std::sqrt(std::max(0.0, var / e.power_delay));

        for (Index c = 0; c < M; ++c)
            e.mean_doppler += static_cast<double>(c - M / 2) * nu_res * dsd_profile[c];
        e.mean_doppler /= e.power_doppler;
        var = 0.0;
        for (Index c = 0; c < M; ++c)
        {
            const double d = static_cast<double>(c - M / 2) * nu_res - e.mean_doppler;
            var += d * d * dsd_profile[c];
        }
        e.rms_doppler = std::sqrt(std::max(0.0, var / e.power_doppler));

        e.power = e.power_delay / static_cast<double>(Q);
        return e;
    }

    std::optional<SpreadEntry> moments(const LsfBlock &lsf)
    {
        return moments(pdp(lsf), dsd(lsf), lsf.tau_res, lsf.nu_res);
    }

    PowerMetrics region_power(const std::vector<SpreadRow> &rows, Index antennas, Index user)
    {
        if (antennas < 1)
            throw std::invalid_argument("Antenna count must be positive.");
        // region -> (sum per antenna, count per antenna)
        std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXi>> acc;
        std::map<int, std::vector<Index>> blocks;
        for (const auto &r : rows)
        {
            if (r.k != user || r.region <= 0)
                continue;
            if (r.a < 0 || r.a >= antennas)
                throw std::out_of_range("Row antenna index out of range.");
            auto [it, fresh] = acc.try_emplace(r.region, Eigen::VectorXd::Zero(antennas),
                                               Eigen::VectorXi::Zero(antennas));
            it->second.first[r.a] += r.raw_power;
            it->second.second[r.a] += 1;
            auto &b = blocks[r.region];
            if (std::find(b.begin(), b.end(), r.l) == b.end())
                b.push_back(r.l);
        }
        if (acc.empty())
            throw std::invalid_argument("No rows with a region for this user.");

        PowerMetrics pm;
        const Index S = static_cast<Index>(acc.size());
        pm.average.resize(antennas, S);
        Index s = 0;
        for (const auto &[region, sums] : acc)
        {
            if ((sums.second.array() == 0).any())
                throw DataError("Region " + std::to_string(region) + " has no block for some antenna.");
            pm.regions.push_back(region);
            pm.blocks.push_back(static_cast<Index>(blocks[region].size()));
            pm.average.col(s++) = sums.first.cwiseQuotient(sums.second.cast<double>());
        }
        const double best = pm.average.colwise().mean().maxCoeff();
        if (!(best > 0.0))
            throw DataError("All region powers are zero.");
        pm.normalized = pm.average / best;
        return pm;
    }
}
