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
#include "cfmimo/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace cfmimo;

namespace
{
    Eigen::MatrixXcd random_matrix(Index A, Index K, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n(0.0, std::sqrt(0.5));
        Eigen::MatrixXcd H(A, K);
        for (Index i = 0; i < H.size(); ++i)
            H(i) = {n(rng), n(rng)};
        return H;
    }

    double condition(const Eigen::MatrixXcd &H)
    {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(H);
        const auto &s = svd.singularValues();
        return s[0] / s[s.size() - 1];
    }

    // Independent cubic Lagrange interpolation of f at node times t0 + {-2,-1,0,1} h
    std::complex<double> lagrange4(const std::array<std::complex<double>, 4> &f, double x)
    {
        const double nodes[4] = {-2, -1, 0, 1};
        std::complex<double> s = 0.0;
        for (int i = 0; i < 4; ++i)
        {
            double w = 1.0;
            for (int j = 0; j < 4; ++j)
                if (j != i)
                    w *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            s += w * f[i];
        }
        return s;
    }
}

TEST_CASE("channel matrices round-trip through the tensor")
{
    const ChannelTensor ctf = iid_rayleigh(3, 2, 5, 7, 1);
    const auto seq = assemble(ctf, 4);
    REQUIRE(seq.size() == 5);
    for (Index m = 0; m < 5; ++m)
    {
        REQUIRE(seq[m].rows() == 3);
        REQUIRE(seq[m].cols() == 2);
        for (Index a = 0; a < 3; ++a)
            for (Index k = 0; k < 2; ++k)
                CHECK(seq[m](a, k) == ctf(m, a, k, 4));
    }
    ChannelTensor copy(3, 2, 5, 7);
    disassemble(seq, 4, copy);
    for (Index m = 0; m < 5; ++m)
        CHECK(channel_matrix(copy, m, 4) == channel_matrix(ctf, m, 4));
    CHECK_THROWS_AS(channel_matrix(ctf, 5, 0), std::out_of_range);
    CHECK_THROWS_AS(channel_matrix(ctf, 0, 7), std::out_of_range);
    CHECK(center_tone(481) == 240);
}

TEST_CASE("zero forcing inverts the channel")
{
    for (std::uint64_t seed = 0; seed < 50; ++seed)
    {
        const Eigen::MatrixXcd H = random_matrix(32, 2, seed);
        REQUIRE(condition(H) < 1e6);
        const Eigen::MatrixXcd W = beamform(H);
        CHECK((W.adjoint() * H - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
        // Closed form H (H^H H)^-1
        const Eigen::MatrixXcd ref = H * (H.adjoint() * H).inverse();
        CHECK((W - ref).norm() < 1e-10 * ref.norm());
    }
    // Ill-conditioned but below 1e6
    Eigen::MatrixXcd H = random_matrix(8, 2, 3);
    H.col(1) = H.col(0) + 1e-4 * H.col(1);
    REQUIRE(condition(H) < 1e6);
    CHECK((beamform(H).adjoint() * H - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXcd h = Eigen::MatrixXcd::Constant(1, 1, {0.3, -0.4});
    const Eigen::MatrixXcd w = beamform(h);
    CHECK(std::abs(w(0, 0) - h(0, 0) / std::norm(h(0, 0))) < 1e-15);
    CHECK(std::abs((w.adjoint() * h)(0, 0) - 1.0) < 1e-15);

    Eigen::MatrixXcd rank1 = random_matrix(4, 2, 1);
    rank1.col(1) = 2.0 * rank1.col(0);
    CHECK_THROWS_AS(beamform(rank1), std::domain_error);
    CHECK_THROWS_AS(beamform(random_matrix(2, 3, 1)), std::domain_error);
}

TEST_CASE("regularized ZF converges to ZF")
{
    const Eigen::MatrixXcd H = random_matrix(16, 4, 7);
    const Eigen::MatrixXcd zf = beamform(H);
    double last = std::numeric_limits<double>::infinity();
    for (int e = 0; e >= -12; --e)
    {
        const double reg = std::pow(10.0, e);
        const Eigen::MatrixXcd W = beamform(H, reg);
        const Eigen::MatrixXcd ref = H * (H.adjoint() * H + reg * Eigen::MatrixXcd::Identity(4, 4)).inverse();
        CHECK((W - ref).norm() < 1e-9 * ref.norm());
        const double d = (W - zf).norm();
        CHECK(d < last);
        last = d;
    }
    CHECK(last < 1e-10 * zf.norm());
    // RZF stays defined for a rank-deficient channel
    Eigen::MatrixXcd rank1 = random_matrix(4, 2, 1);
    rank1.col(1) = rank1.col(0);
    CHECK_NOTHROW(beamform(rank1, 1e-3));
}

TEST_CASE("cubic aging interpolation")
{
    const auto w0 = lagrange_weights(0.0);
    CHECK(w0[0] == 0.0);
    CHECK(w0[1] == 0.0);
    CHECK(w0[2] == 1.0);
    CHECK(w0[3] == 0.0);
    for (double x : {0.01, 0.1, 0.5, 0.9})
    {
        const auto w = lagrange_weights(x);
        CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(-2 * w[0] - w[1] + w[3] == doctest::Approx(x).epsilon(1e-14));
    }

    // dt = 0 reproduces the snapshot exactly
    const ChannelTensor r = iid_rayleigh(4, 2, 10, 3, 2);
    for (Index m = 2; m + 1 < 10; ++m)
        CHECK(age_channel(r, m, 0.0, 1) == channel_matrix(r, m, 1));

    // Linear-in-time channel is reproduced for any dt
    ChannelTensor lin(2, 1, 8, 1);
    for (Index m = 0; m < 8; ++m)
    {
        lin(m, 0, 0, 0) = {1.0 + 0.5 * m, -0.25 * m};
        lin(m, 1, 0, 0) = {-3.0 + 2.0 * m, 0.1};
    }
    for (double dt : {0.0, 1e-5, 3e-4, 7.5e-4})
    {
        const double x = 4.0 + dt / kDefaultRepetition;
        const Eigen::MatrixXcd H = age_channel(lin, 4, dt, 0);
        CHECK(std::abs(H(0, 0) - std::complex<double>(1.0 + 0.5 * x, -0.25 * x)) < 1e-12);
        CHECK(std::abs(H(1, 0) - std::complex<double>(-3.0 + 2.0 * x, 0.1)) < 1e-12);
    }

    // Sinusoid: error equals the independent Lagrange evaluation and the cubic remainder
    ChannelTensor sine(1, 1, 8, 1);
    const double nu = 100.0;
    for (Index m = 0; m < 8; ++m)
        sine(m, 0, 0, 0) = std::polar(1.0, 2 * std::numbers::pi * nu * static_cast<double>(m) * kDefaultRepetition);
    const std::complex<double> aged = age_channel(sine, 4, 500e-6, 0)(0, 0);
    const std::array<std::complex<double>, 4> f{sine(2, 0, 0, 0), sine(3, 0, 0, 0), sine(4, 0, 0, 0), sine(5, 0, 0, 0)};
    CHECK(std::abs(aged - lagrange4(f, 0.5)) < 1e-14);
    const double err = std::abs(aged - std::polar(1.0, 2 * std::numbers::pi * nu * 4.5e-3));
    const double w = 2 * std::numbers::pi * nu * kDefaultRepetition;
    CHECK(err == doctest::Approx(std::pow(w, 4) * 2.5 * 1.5 * 0.5 * 0.5 / 24).epsilon(0.1));

    CHECK_THROWS_AS(age_channel(r, 1, 0.0, 0), std::out_of_range);
    CHECK_THROWS_AS(age_channel(r, 9, 0.0, 0), std::out_of_range);
    CHECK_THROWS_AS(age_channel(r, 4, 1e-3, 0), std::invalid_argument);
    CHECK_THROWS_AS(age_channel(r, 4, -1e-6, 0), std::invalid_argument);
}

TEST_CASE("SINR with fresh and aged CSI")
{
    const Eigen::MatrixXcd H = random_matrix(32, 2, 11);
    const Eigen::MatrixXcd W = beamform(H);
    const double ratio = std::pow(10.0, -11.2);
    const Eigen::VectorXd f = sinr(H, W, ratio, NoiseModel::filtered);
    const Eigen::VectorXd p = sinr(H, W, ratio, NoiseModel::fixed);
    for (Index k = 0; k < 2; ++k)
    {
        const double signal = std::norm(W.col(k).dot(H.col(k)));
        const double interference = std::norm(W.col(k).dot(H.col(1 - k)));
        CHECK(interference < 1e-20 * signal);
        CHECK(f[k] == doctest::Approx(signal / (interference + ratio * W.col(k).squaredNorm())));
        CHECK(p[k] == doctest::Approx(signal / (interference + ratio)));
        CHECK(10 * std::log10(p[k]) == doctest::Approx(112.0).epsilon(1e-6));
    }

    // Mismatched CSI adds interference
    const Eigen::MatrixXcd Wold = beamform(H + 0.1 * random_matrix(32, 2, 12));
    const Eigen::VectorXd aged = sinr(H, Wold, ratio);
    CHECK(aged.maxCoeff() < f.minCoeff());

    CHECK(parse_noise_model("fixed") == NoiseModel::fixed);
    CHECK(to_string(NoiseModel::filtered) == "filtered");
    CHECK_THROWS_AS(parse_noise_model("other"), std::invalid_argument);
    CHECK_THROWS_AS(sinr(H, beamform(random_matrix(31, 2, 1)), ratio), std::invalid_argument);
}

TEST_CASE("SINR series covers every snapshot with a full stencil")
{
    ChannelTensor ctf = iid_rayleigh(8, 2, 12, 5, 3);
    SinrParams p;
    p.ages = {0.0, 500e-6};
    const auto s = sinr_series(ctf, p, 0, 12, 100);
    // m = 2 .. 10 (m + 1 must exist), two users, two ages
    CHECK(s.size() == 9 * 2 * 2);
    CHECK(s.front().m == 102);
    CHECK(s.back().m == 110);
    for (const auto &x : s)
        if (x.dt == 0.0)
            CHECK(10 * std::log10(x.sinr) > 100.0);
}

TEST_CASE("hardening coefficient")
{
    const Eigen::VectorXd v = (Eigen::VectorXd(4) << 1, 1, 1, 3).finished();
    const HardeningSample h = hardening_from_signal(v);
    CHECK(h.mean == doctest::Approx(1.5));
    CHECK(h.gamma == doctest::Approx(1.0 / 1.5));
    CHECK(hardening_from_signal(7.0 * v).gamma == doctest::Approx(h.gamma).epsilon(1e-14));
    CHECK_THROWS_AS(hardening_from_signal(Eigen::VectorXd::Zero(4)), DataError);
    CHECK_THROWS_AS(hardening_from_signal(Eigen::VectorXd::Ones(1)), std::invalid_argument);

    // Static channel: any fixed beamformer gives gamma = 0
    ChannelTensor stat(8, 2, 64, 3);
    const Eigen::MatrixXcd H = random_matrix(8, 2, 5);
    for (Index m = 0; m < 64; ++m)
        for (Index a = 0; a < 8; ++a)
            for (Index k = 0; k < 2; ++k)
                stat(m, a, k, 1) = H(a, k);
    for (const auto &x : hardening(stat, 1, 32))
        CHECK(x.gamma < 1e-12);

    // Fresh ZF per symbol makes the effective gain exactly one
    const ChannelTensor r = iid_rayleigh(8, 2, 64, 1, 6);
    for (const auto &x : hardening(r, 0, 32, HardeningPolicy::per_symbol))
    {
        CHECK(x.gamma < 1e-10);
        CHECK(x.mean == doctest::Approx(1.0));
    }
    const auto fixed = hardening(r, 0, 32);
    CHECK(fixed.size() == 4);
    CHECK(fixed[3].l == 1);
    CHECK(fixed[3].k == 1);
    CHECK(fixed[0].gamma > 0.1);

    // Scaling the channel leaves gamma unchanged
    ChannelTensor scaled = r;
    scaled.data() *= 1e-4;
    const auto hs = hardening(scaled, 0, 32);
    for (std::size_t i = 0; i < hs.size(); ++i)
        CHECK(hs[i].gamma == doctest::Approx(fixed[i].gamma).epsilon(1e-9));

    CHECK(parse_hardening_policy("per_symbol") == HardeningPolicy::per_symbol);
    CHECK_THROWS_AS(parse_hardening_policy("x"), std::invalid_argument);
    CHECK_THROWS_AS(hardening(r, 0, 65), std::out_of_range);
}

TEST_CASE("empirical CDF")
{
    const Ecdf F({3.0, 1.0, 2.0, 2.0});
    CHECK(F(0.5) == 0.0);
    CHECK(F(1.0) == 0.25);
    CHECK(F(2.0) == 0.75);
    CHECK(F(2.5) == 0.75);
    CHECK(F(3.0) == 1.0);
    CHECK(F.median() == 2.0);
    CHECK(Ecdf({4.0, 1.0, 2.0}).median() == 2.0);
    CHECK(Ecdf({4.0, 1.0}).median() == 2.5);
    CHECK_THROWS_AS(Ecdf(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(Ecdf({1.0, std::nan("")}), std::invalid_argument);
}
