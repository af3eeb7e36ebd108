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

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cfmimo
{
    inline constexpr double kSpeedOfLight = 299792458.0; // [m/s]
    inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

    // Measurement defaults of the sounding campaign
    inline constexpr double kDefaultCarrier = 3.2e9;     // [Hz]
    inline constexpr int kDefaultTones = 481;            // odd
    inline constexpr double kDefaultToneSpacing = 240e3; // [Hz]
    inline constexpr double kDefaultRepetition = 1e-3;   // [s]

    inline double kmh_to_ms(double v) { return v / 3.6; }
    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

    // Exceptions raised at the data and configuration boundaries. Precondition
    // violations inside the numerical core use std::invalid_argument / std::out_of_range.
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class DataError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}
