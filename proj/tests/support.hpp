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

// Shared helpers for the unit tests: scratch directories and independent reference
// implementations used as oracles.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace testing
{
    namespace fs = std::filesystem;

    class TempDir
    {
    public:
        explicit TempDir(const std::string &tag)
        {
            std::random_device rd;
            path_ = fs::temp_directory_path() / ("cfmimo_" + tag + "_" + std::to_string(rd()));
            fs::create_directories(path_);
        }
        ~TempDir()
        {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
        TempDir(const TempDir &) = delete;
        TempDir &operator=(const TempDir &) = delete;

        const fs::path &path() const { return path_; }
        fs::path operator/(const std::string &name) const { return path_ / name; }

    private:
        fs::path path_;
    };

    inline std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    inline void spit(const fs::path &p, const std::string &s)
    {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out << s;
    }

    // O(N^2) DFT with an explicit sign
    inline Eigen::VectorXcd naive_dft(const Eigen::VectorXcd &x, int sign)
    {
        const Eigen::Index n = x.size();
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const double arg = sign * 2.0 * std::numbers::pi * static_cast<double>((k * i) % n) / static_cast<double>(n);
                y[k] += x[i] * std::polar(1.0, arg);
            }
        return y;
    }

    // Bitwise reflected CRC-32 (polynomial 0xEDB88320)
    inline std::uint32_t crc32_bitwise(const std::string &bytes)
    {
        std::uint32_t c = 0xFFFFFFFFu;
        for (unsigned char b : bytes)
        {
            c ^= b;
            for (int i = 0; i < 8; ++i)
                c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
        }
        return c ^ 0xFFFFFFFFu;
    }

    // Dense time-bandwidth concentration matrix sin(2 pi W (i-j)) / (pi (i-j))
    inline Eigen::MatrixXd sinc_kernel(Eigen::Index n, double w)
    {
        Eigen::MatrixXd a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
            {
                const double d = static_cast<double>(i - j);
                a(i, j) = i == j ? 2.0 * w : std::sin(2.0 * std::numbers::pi * w * d) / (std::numbers::pi * d);
            }
        return a;
    }

    inline std::string tiny_scene_json()
    {
        return R"({
  "array": {"positions": [[0, 0, 10], [-2, 0, 10], [-4, 0, 10], [-6, 0, 10]]},
  "trajectory": {
    "waypoints": [[10, 40, 1.5], [10, 0.5, 1.5]],
    "speeds_kmh": [36],
    "regions": 2,
    "mounts": [[0, 0.3, 0], [0, -0.3, 0]]
  },
  "blockers": [{"lo": [0, 5, 0], "hi": [20, 8, 30]}],
  "scatterers": [{"position": [30, 20, 5], "gain": 0.5}, {"position": [-20, 10, 5], "gain": 0.5}]
})";
    }

    inline std::string tiny_config_json(const std::string &scene_file)
    {
        return std::string(R"({
  "scene": ")") + scene_file + R"(",
  "bs": "custom",
  "seed": 7,
  "sounding": {"tones": 31, "tone_spacing": 240000.0, "repetition": 0.001, "crest_target": 2.0, "crest_max_iter": 200},
  "synth": {"blocks_per_region": 1},
  "analysis": {"block": 32},
  "mimo": {"ages_us": [10, 100, 500], "hardening_block": 32}
})";
    }
}
