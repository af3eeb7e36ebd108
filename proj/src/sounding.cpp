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

#include "cfmimo/sounding.hpp"
#include "cfmimo/synth.hpp"

#include "dft.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cfmimo
{
    namespace
    {
        // DFT bin holding signed tone q in an N-point transform
        Index bin_of(Index q, Index N) { return ((q % N) + N) % N; }

        Eigen::VectorXd random_phases(Index Q, std::mt19937_64 &rng)
        {
            std::uniform_real_distribution<double> u(0.0, kTwoPi);
            Eigen::VectorXd ph(Q);
            for (Index i = 0; i < Q; ++i)
                ph[i] = u(rng);
            return ph;
        }

        // One period of sum_q X[q] G[q] exp(j 2 pi q n / Q)
        void render_period(const Eigen::VectorXcd &X, const Eigen::Ref<const Eigen::VectorXcd> &G,
                           detail::cvec &spectrum, detail::cvec &period)
        {
            const Index Q = X.size();
            spectrum.assign(static_cast<std::size_t>(Q), {0.0, 0.0});
            for (Index iq = 0; iq < Q; ++iq)
                spectrum[bin_of(tone_offset(iq, Q), Q)] = X[iq] * G[iq];
            detail::dft_inverse(period, spectrum);
        }
    }

    MultitoneSpec MultitoneSpec::zero_phase(Index tones, double tone_spacing)
    {
        MultitoneSpec s;
        s.tones = tones;
        s.tone_spacing = tone_spacing;
        s.phases = Eigen::VectorXd::Zero(tones);
        s.validate();
        return s;
    }

    Eigen::VectorXcd MultitoneSpec::weights() const
    {
        Eigen::VectorXcd X(tones);
        for (Index i = 0; i < tones; ++i)
            X[i] = std::polar(1.0, phases[i]);
        return X;
    }

    void MultitoneSpec::validate() const
    {
        if (tones < 1 || tones % 2 == 0)
            throw std::invalid_argument("Number of tones must be odd and positive.");
        if (!(tone_spacing > 0.0))
            throw std::invalid_argument("Tone spacing must be positive.");
        if (phases.size() != tones)
            throw std::invalid_argument("Phase vector length must equal the number of tones.");
        if (!phases.allFinite())
            throw std::invalid_argument("Phases must be finite.");
    }

    Eigen::VectorXcd synth_multitone(const MultitoneSpec &spec, Index oversample)
    {
        spec.validate();
        if (oversample < 1)
            throw std::invalid_argument("Oversampling factor must be at least 1.");
        const Index N = spec.tones * oversample;
        detail::cvec X(static_cast<std::size_t>(N), {0.0, 0.0}), x;
        for (Index iq = 0; iq < spec.tones; ++iq)
            X[bin_of(tone_offset(iq, spec.tones), N)] = std::polar(1.0, spec.phases[iq]);
        detail::dft_inverse(x, X);
        return Eigen::Map<Eigen::VectorXcd>(x.data(), N);
    }

    double crest_factor(const MultitoneSpec &spec) { return crest_factor(synth_multitone(spec, kCrestOversample)); }

    PhaseSearch optimize_phases(Index tones, double target_c, int max_iter, std::uint64_t seed)
    {
        if (tones < 1 || tones % 2 == 0)
            throw std::invalid_argument("Number of tones must be odd and positive.");
        std::mt19937_64 rng(stream_seed(seed, 0xc2e57ull));
        return optimize_phases(random_phases(tones, rng), target_c, max_iter, seed);
    }

    PhaseSearch optimize_phases(const Eigen::VectorXd &initial, double target_c, int max_iter, std::uint64_t seed)
    {
        if (!(target_c > 1.0))
            throw std::invalid_argument("Crest-factor target must exceed 1.");
        MultitoneSpec spec;
        spec.tones = initial.size();
        spec.phases = initial;
        spec.validate();

        const Index Q = spec.tones;
        const Index N = Q * kCrestOversample;
        constexpr int restart_every = 500;

        PhaseSearch best{initial, crest_factor(spec), false, 0};
        if (best.crest <= target_c)
        {
            best.reached = true;
            return best;
        }

        std::mt19937_64 rng(stream_seed(seed, 0xc2e58ull));
        Eigen::VectorXd ph = initial;
        detail::cvec X(static_cast<std::size_t>(N)), x, Y;
        for (int it = 1; it <= max_iter; ++it)
        {
            std::fill(X.begin(), X.end(), std::complex<double>(0.0, 0.0));
            for (Index iq = 0; iq < Q; ++iq)
                X[bin_of(tone_offset(iq, Q), N)] = std::polar(1.0, ph[iq]);
            detail::dft_inverse(x, X);

            double peak = 0.0, power = 0.0;
            for (const auto &v : x)
            {
                const double a = std::abs(v);
                peak = std::max(peak, a);
                power += a * a;
            }
            const double rms = std::sqrt(power / static_cast<double>(N));
            const double c = peak / rms;
            best.iterations = it;
            if (c < best.crest)
            {
                best.crest = c;
                best.phases = ph;
                if (c <= target_c)
                {
                    best.reached = true;
                    return best;
                }
            }

            if (it % restart_every == 0)
            {
                ph = random_phases(Q, rng);
                continue;
            }

            // Clip at the RMS level, then keep only the in-band phases
            for (auto &v : x)
            {
                const double a = std::abs(v);
                if (a > rms)
                    v *= rms / a;
            }
            detail::dft_forward(Y, x);
            for (Index iq = 0; iq < Q; ++iq)
                ph[iq] = std::arg(Y[bin_of(tone_offset(iq, Q), N)]);
        }
        return best;
    }

    SoundingFrame make_frame(const MultitoneSpec &spec, Index user)
    {
        if (user < 0)
            throw std::invalid_argument("User index cannot be negative.");
        const Eigen::VectorXcd x = synth_multitone(spec, 1);
        SoundingFrame f;
        f.samples.resize(3 * spec.tones);
        f.samples << x, x, x;
        f.user_offset = static_cast<double>(user) * 3.0 * spec.period();
        return f;
    }

    RfCalibration RfCalibration::uniform(Index antennas, Index users, Index tones, std::complex<double> value)
    {
        if (antennas < 1 || users < 1 || tones < 1)
            throw std::invalid_argument("Calibration dimensions must be positive.");
        RfCalibration c;
        c.antennas = antennas;
        c.users = users;
        c.response = Eigen::MatrixXcd::Constant(tones, antennas * users, value);
        return c;
    }

    ReceivedRecords simulate_reception(const MultitoneSpec &spec, const ChannelTensor &truth, const RfCalibration &rf,
                                       const ReceptionOptions &opt)
    {
        spec.validate();
        const Index A = truth.antennas(), K = truth.users(), M = truth.snapshots(), Q = truth.tones();
        if (spec.tones != Q)
            throw std::invalid_argument("Multitone and channel tensor disagree on the number of tones.");
        if (rf.antennas != A || rf.users != K || rf.tones() != Q)
            throw std::invalid_argument("RF response dimensions do not match the channel tensor.");

        ReceivedRecords rx;
        rx.antennas = A;
        rx.users = K;
        rx.snapshots = M;
        rx.tones = Q;
        rx.grid = truth.grid();
        rx.samples.resize(K * 3 * Q, M * A);

        const Eigen::VectorXcd X = spec.weights();
        const double snr = db_to_linear(opt.snr_db);
        detail::cvec spectrum, period;
        Eigen::VectorXcd G(Q);
        for (Index m = 0; m < M; ++m)
            for (Index a = 0; a < A; ++a)
                for (Index k = 0; k < K; ++k)
                {
                    G = truth.link(m, a, k).cwiseProduct(rf.link(a, k));
                    render_period(X, G, spectrum, period);
                    auto frame = rx.frame(m, a, k);
                    for (Index c = 0; c < 3; ++c)
                        for (Index n = 0; n < Q; ++n)
                            frame[c * Q + n] = period[n];

                    if (!opt.add_noise)
                        continue;
                    double p = G.squaredNorm(); // mean power of the received periodic signal
                    if (!(p > 0.0))
                        p = static_cast<double>(Q);
                    const std::uint64_t m_abs = static_cast<std::uint64_t>(opt.first_snapshot + m);
                    std::mt19937_64 rng(stream_seed(opt.seed, 3, m_abs, static_cast<std::uint64_t>(a),
                                                    static_cast<std::uint64_t>(k)));
                    std::normal_distribution<double> n01(0.0, std::sqrt(p / snr / 2.0));
                    for (Index n = 0; n < frame.size(); ++n)
                    {
                        const double re = n01(rng);
                        const double im = n01(rng);
                        frame[n] += std::complex<double>(re, im);
                    }
                }
        return rx;
    }

    Eigen::VectorXcd demodulate_frame(const Eigen::Ref<const Eigen::VectorXcd> &frame, Index tones,
                                      DemodWindow window)
    {
        if (tones < 1 || tones % 2 == 0)
            throw std::invalid_argument("Number of tones must be odd and positive.");
        if (frame.size() < 3 * tones)
            throw DataError("Received record shorter than three multitone periods.");

        const Index copies = window == DemodWindow::two_periods ? 2 : 1;
        const Index N = copies * tones;
        detail::cvec y(frame.data() + tones, frame.data() + tones + N), Yb;
        detail::dft_forward(Yb, y);
        const double scale = 1.0 / std::sqrt(static_cast<double>(N));
        Eigen::VectorXcd Y(tones);
        for (Index iq = 0; iq < tones; ++iq)
            Y[iq] = scale * Yb[bin_of(copies * tone_offset(iq, tones), N)];
        return Y;
    }

    ChannelTensor demodulate(const ReceivedRecords &rx, DemodWindow window)
    {
        ChannelTensor Y(rx.antennas, rx.users, rx.snapshots, rx.tones, rx.grid);
        if (rx.samples.rows() < rx.users * rx.frame_length())
            throw DataError("Received record shorter than three multitone periods.");
        for (Index m = 0; m < rx.snapshots; ++m)
            for (Index a = 0; a < rx.antennas; ++a)
                for (Index k = 0; k < rx.users; ++k)
                    Y.link(m, a, k) = demodulate_frame(rx.frame(m, a, k), rx.tones, window);
        return Y;
    }

    RfCalibration measure_calibration(const MultitoneSpec &spec, const RfCalibration &rf, DemodWindow window)
    {
        spec.validate();
        if (rf.tones() != spec.tones)
            throw std::invalid_argument("RF response and multitone disagree on the number of tones.");
        const Index Q = spec.tones;
        const Eigen::VectorXcd X = spec.weights();
        RfCalibration cal = rf;
        detail::cvec spectrum, period;
        Eigen::VectorXcd frame(3 * Q);
        for (Index a = 0; a < rf.antennas; ++a)
            for (Index k = 0; k < rf.users; ++k)
            {
                render_period(X, rf.link(a, k), spectrum, period);
                for (Index c = 0; c < 3; ++c)
                    for (Index n = 0; n < Q; ++n)
                        frame[c * Q + n] = period[n];
                cal.link(a, k) = demodulate_frame(frame, Q, window).cwiseQuotient(X);
            }
        return cal;
    }

    ChannelTensor estimate_ctf(const ChannelTensor &Y, const MultitoneSpec &spec, const RfCalibration &calibration)
    {
        spec.validate();
        const Index A = Y.antennas(), K = Y.users(), Q = Y.tones();
        if (spec.tones != Q || calibration.antennas != A || calibration.users != K || calibration.tones() != Q)
            throw std::invalid_argument("Calibration dimensions do not match the demodulated tensor.");
        if ((calibration.response.array() == std::complex<double>(0.0, 0.0)).any())
            throw std::invalid_argument("Calibration response contains a zero entry.");

        const Eigen::VectorXcd X = spec.weights();
        ChannelTensor H(A, K, Y.snapshots(), Q, Y.grid());
        for (Index m = 0; m < Y.snapshots(); ++m)
            for (Index a = 0; a < A; ++a)
                for (Index k = 0; k < K; ++k)
                    H.link(m, a, k) = Y.link(m, a, k).cwiseQuotient(X.cwiseProduct(calibration.link(a, k)));
        return H;
    }

    ChannelTensor sound_ctf(const ChannelTensor &truth, const MultitoneSpec &spec, const RfCalibration &rf,
                            const RfCalibration &calibration, ReceptionOptions opt, Index chunk)
    {
        if (chunk < 1)
            throw std::invalid_argument("Chunk length must be positive.");
        const Index A = truth.antennas(), K = truth.users(), M = truth.snapshots(), Q = truth.tones();
        const Index base = opt.first_snapshot;
        ChannelTensor out(A, K, M, Q, truth.grid());
        for (Index m0 = 0; m0 < M; m0 += chunk)
        {
            const Index n = std::min(chunk, M - m0);
            ChannelTensor part(A, K, n, Q, truth.grid());
            part.data() = truth.data().middleCols(m0 * A * K, n * A * K);
            opt.first_snapshot = base + m0;
            const auto rx = simulate_reception(spec, part, rf, opt);
            const auto est = estimate_ctf(demodulate(rx, opt.window), spec, calibration);
            out.data().middleCols(m0 * A * K, n * A * K) = est.data();
        }
        return out;
    }

    double nmse_db(const ChannelTensor &estimate, const ChannelTensor &truth)
    {
        if (!estimate.same_shape(truth))
            throw std::invalid_argument("Tensors differ in shape.");
        const double ref = truth.data().squaredNorm();
        if (!(ref > 0.0))
            throw std::invalid_argument("Reference tensor has zero energy.");
        return linear_to_db((estimate.data() - truth.data()).squaredNorm() / ref);
    }
}
