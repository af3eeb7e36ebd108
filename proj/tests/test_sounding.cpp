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
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace cfmimo;

namespace
{
    // Two-path transfer function sampled on the tone grid
    ChannelTensor two_path(Index A, Index K, Index M, Index Q)
    {
        ChannelTensor H(A, K, M, Q);
        const std::vector<PathSample> paths{{{0.7, 0.2}, 50e-9}, {{-0.3, 0.4}, 310e-9}};
        for (Index m = 0; m < M; ++m)
            for (Index a = 0; a < A; ++a)
                for (Index k = 0; k < K; ++k)
                {
                    auto link = H.link(m, a, k);
                    std::vector<PathSample> p = paths;
                    p[1].delay += 1e-9 * static_cast<double>(m + 2 * a + 3 * k);
                    accumulate_paths(p, kDefaultCarrier, kDefaultToneSpacing, link);
                }
        return H;
    }

    double rel_err(const ChannelTensor &a, const ChannelTensor &b)
    {
        return (a.data() - b.data()).norm() / b.data().norm();
    }
}

TEST_CASE("zero-phase multitone peaks at sqrt(Q)")
{
    const MultitoneSpec s = MultitoneSpec::zero_phase(481);
    CHECK(crest_factor(s) == doctest::Approx(std::sqrt(481.0)).epsilon(0.01));
    CHECK(s.bandwidth() == doctest::Approx(115.44e6));
    CHECK(s.period() == doctest::Approx(1.0 / 240e3));
}

TEST_CASE("multitone synthesis matches the direct sum")
{
    MultitoneSpec s = MultitoneSpec::zero_phase(15);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 2 * std::numbers::pi);
    for (Index i = 0; i < 15; ++i)
        s.phases[i] = u(rng);
    for (Index over : {1, 4})
    {
        const Eigen::VectorXcd x = synth_multitone(s, over);
        const Index N = 15 * over;
        REQUIRE(x.size() == N);
        for (Index n = 0; n < N; ++n)
        {
            std::complex<double> ref = 0.0;
            for (Index iq = 0; iq < 15; ++iq)
                ref += std::polar(1.0, s.phases[iq] + 2 * std::numbers::pi * static_cast<double>(tone_offset(iq, 15)) *
                                                         static_cast<double>(n) / static_cast<double>(N));
            CHECK(std::abs(x[n] - ref) < 1e-10);
        }
    }
    CHECK_THROWS_AS(MultitoneSpec::zero_phase(16).validate(), std::invalid_argument);
    CHECK_THROWS_AS(crest_factor(Eigen::VectorXcd::Zero(4)), std::invalid_argument);
}

TEST_CASE("phase optimizer lowers the crest factor")
{
    const PhaseSearch r = optimize_phases(61, 1.6, 3000, 1);
    CHECK(r.reached);
    CHECK(r.crest <= 1.6);
    MultitoneSpec s = MultitoneSpec::zero_phase(61);
    s.phases = r.phases;
    CHECK(crest_factor(s) == doctest::Approx(r.crest).epsilon(1e-12));

    // Already below target: returned unchanged
    const PhaseSearch same = optimize_phases(r.phases, 2.0, 100, 1);
    CHECK(same.iterations == 0);
    CHECK(same.phases == r.phases);

    // Reproducible from the seed
    CHECK(optimize_phases(61, 1.3, 50, 4).phases == optimize_phases(61, 1.3, 50, 4).phases);
    CHECK_THROWS_AS(optimize_phases(61, 1.0, 10, 1), std::invalid_argument);
}

TEST_CASE("frames repeat the period three times")
{
    const MultitoneSpec s = MultitoneSpec::zero_phase(11);
    const SoundingFrame f = make_frame(s, 2);
    REQUIRE(f.samples.size() == 33);
    CHECK(f.samples.segment(0, 11) == f.samples.segment(11, 11));
    CHECK(f.samples.segment(0, 11) == f.samples.segment(22, 11));
    CHECK(f.user_offset == doctest::Approx(2 * 3 / 240e3));
}

TEST_CASE("reception and demodulation agree with a naive DFT")
{
    const Index Q = 21;
    MultitoneSpec s = MultitoneSpec::zero_phase(Q);
    for (Index i = 0; i < Q; ++i)
        s.phases[i] = 0.37 * static_cast<double>(i * i);
    const ChannelTensor truth = two_path(1, 1, 1, Q);
    const RfCalibration rf = RfCalibration::uniform(1, 1, Q, {0.8, -0.1});
    ReceptionOptions opt;
    opt.add_noise = false;
    const ReceivedRecords rx = simulate_reception(s, truth, rf, opt);

    // Time-domain oracle: x[n] = sum_q X_q H_q r_q exp(j 2 pi q n / Q), three periods
    const Eigen::VectorXcd X = s.weights();
    Eigen::VectorXcd ref(3 * Q);
    for (Index n = 0; n < 3 * Q; ++n)
    {
        ref[n] = 0.0;
        for (Index iq = 0; iq < Q; ++iq)
            ref[n] += X[iq] * truth(0, 0, 0, iq) * rf.response(iq, 0) *
                      std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(tone_offset(iq, Q) * n) /
                                          static_cast<double>(Q));
    }
    CHECK((rx.frame(0, 0, 0) - ref).norm() < 1e-12 * ref.norm());

    // Frequency-domain oracle over periods 2 and 3
    const Eigen::VectorXcd Yb = testing::naive_dft(ref.segment(Q, 2 * Q), -1) / std::sqrt(2.0 * Q);
    const Eigen::VectorXcd Y = demodulate_frame(rx.frame(0, 0, 0), Q, DemodWindow::two_periods);
    for (Index iq = 0; iq < Q; ++iq)
    {
        const Index q = tone_offset(iq, Q);
        CHECK(std::abs(Y[iq] - Yb[(2 * q + 2 * Q) % (2 * Q)]) < 1e-10);
        CHECK(std::abs(Y[iq] - std::sqrt(2.0 * Q) * X[iq] * truth(0, 0, 0, iq) * rf.response(iq, 0)) < 1e-10);
    }
    const Eigen::VectorXcd Y1 = demodulate_frame(rx.frame(0, 0, 0), Q, DemodWindow::one_period);
    for (Index iq = 0; iq < Q; ++iq)
        CHECK(std::abs(Y1[iq] - std::sqrt(static_cast<double>(Q)) * X[iq] * truth(0, 0, 0, iq) * rf.response(iq, 0)) <
              1e-10);

    CHECK_THROWS_AS(demodulate_frame(ref.head(3 * Q - 1), Q), DataError);
}

TEST_CASE("loopback calibration")
{
    const Index Q = 31;
    const MultitoneSpec s = MultitoneSpec::zero_phase(Q);
    RfCalibration rf = RfCalibration::uniform(2, 2, Q);
    for (Index c = 0; c < 4; ++c)
        for (Index iq = 0; iq < Q; ++iq)
            rf.response(iq, c) = std::polar(1.0 + 0.1 * static_cast<double>(c), 0.05 * static_cast<double>(iq));
    const RfCalibration two = measure_calibration(s, rf, DemodWindow::two_periods);
    const RfCalibration one = measure_calibration(s, rf, DemodWindow::one_period);
    CHECK((two.response - std::sqrt(2.0 * Q) * rf.response).norm() < 1e-10 * two.response.norm());
    CHECK((one.response - std::sqrt(1.0 * Q) * rf.response).norm() < 1e-10 * one.response.norm());

    ChannelTensor Y(2, 2, 1, Q);
    RfCalibration zero = two;
    zero.response(3, 1) = 0.0;
    CHECK_THROWS_AS(estimate_ctf(Y, s, zero), std::invalid_argument);
}

TEST_CASE("noiseless sounding reproduces the truth")
{
    const Index Q = 41;
    const MultitoneSpec s = MultitoneSpec::zero_phase(Q);
    const ChannelTensor truth = two_path(3, 2, 5, Q);
    RfCalibration rf = RfCalibration::uniform(3, 2, Q);
    rf.response *= std::complex<double>(0.3, 0.9);
    ReceptionOptions opt;
    opt.add_noise = false;
    for (DemodWindow w : {DemodWindow::two_periods, DemodWindow::one_period})
    {
        opt.window = w;
        const RfCalibration cal = measure_calibration(s, rf, w);
        const ChannelTensor est = sound_ctf(truth, s, rf, cal, opt, 2);
        CHECK(rel_err(est, truth) < 1e-10);
    }
    CHECK(nmse_db(truth, truth) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("noisy sounding NMSE follows the receive SNR")
{
    const Index Q = 61;
    const MultitoneSpec s = MultitoneSpec::zero_phase(Q);
    const ChannelTensor truth = two_path(2, 1, 100, Q);
    const RfCalibration rf = RfCalibration::uniform(2, 1, Q);
    ReceptionOptions opt;
    opt.snr_db = 25.0;
    opt.window = DemodWindow::two_periods;
    const ChannelTensor est2 = sound_ctf(truth, s, rf, measure_calibration(s, rf, opt.window), opt);
    // Two averaged periods: NMSE = 1 / (2 SNR)
    CHECK(nmse_db(est2, truth) == doctest::Approx(-25.0 - 10 * std::log10(2.0)).epsilon(0.02));

    opt.window = DemodWindow::one_period;
    const ChannelTensor est1 = sound_ctf(truth, s, rf, measure_calibration(s, rf, opt.window), opt);
    CHECK(nmse_db(est1, truth) == doctest::Approx(-25.0).epsilon(0.02));

    // Same seed and first snapshot, same noise; chunking does not matter
    opt.window = DemodWindow::two_periods;
    const ChannelTensor again = sound_ctf(truth, s, rf, measure_calibration(s, rf, opt.window), opt, 7);
    CHECK(again.data() == est2.data());
}
