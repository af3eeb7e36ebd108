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

#include "cfmimo/collinearity.hpp"
#include "cfmimo/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfmimo
{
    // `per_region` evenly spaced blocks of `block` snapshots inside every region; each block
    // lies wholly within its region. Regions too short for a block contribute none.
    std::vector<Segment> plan_segments(const Trajectory &trajectory, Index per_region, Index block, double repetition);

    // One contiguous segment covering [start, start + duration) clipped to the trajectory
    Segment contiguous_segment(const Trajectory &trajectory, double start, std::optional<double> duration,
                               double repetition);

    // Synthesizes the segments chunk by chunk into a CTF file plus its sidecar
    void synthesize_to_file(const Scene &scene, const nlohmann::json &scene_json, const RunConfig &cfg,
                            const std::vector<Segment> &segments, const std::filesystem::path &out,
                            Index chunk = 256);

    // Trajectory position of an absolute snapshot; region 0 / arc 0 without a scene
    struct Locator
    {
        std::optional<Trajectory> trajectory;
        double repetition = kDefaultRepetition;

        int region_at(double t) const;
        double arc_at(double t) const;
    };

    Locator make_locator(const RunMeta &meta, double repetition);

    // Block l of the file: its first absolute snapshot and its offset in the file
    struct BlockInfo
    {
        Index l = 0;
        Index file_offset = 0;
        Index first_snapshot = 0;
        int region = 0;
        double arc = 0.0;
    };

    std::vector<BlockInfo> block_layout(const RunMeta &meta, const Locator &loc, Index block);

    struct BlockAnalysis
    {
        std::vector<SpreadRow> rows;             // all (a, k) of the block
        std::vector<Eigen::MatrixXd> collinear;  // per user, A x A on the thresholded LSFs
    };

    // Analyses the first `block` snapshots of `ctf` for every antenna and user
    BlockAnalysis analyze_block(const ChannelTensor &ctf, const DpsTapers &tapers, const AnalysisParams &p,
                                const BlockInfo &info);

    struct AnalysisResult
    {
        std::vector<SpreadRow> rows;
        std::vector<CollinearityAverage> collinearity; // per user
    };

    AnalysisResult analyze_file(const std::filesystem::path &ctf, const AnalysisParams &p);

    // Writes spreads.csv, power_k<k>.csv and collinearity_k<k>.csv to `dir`
    void write_analysis(const AnalysisResult &r, const std::string &config, Index antennas, Index users,
                        double repetition, const std::filesystem::path &dir);

    struct MimoRow
    {
        SinrSample s;
        int region = 0;
    };

    struct HardeningRow
    {
        HardeningSample h;
        Index first_snapshot = 0;
        int region = 0;
    };

    struct MimoResult
    {
        std::vector<MimoRow> sinr;
        std::vector<HardeningRow> hardening;
    };

    MimoResult mimo_file(const std::filesystem::path &ctf, const RunConfig &cfg);

    // Writes sinr.csv, hardening.csv, ecdf_sinr_<us>us.csv per delay and ecdf_hardening.csv
    void write_mimo(const MimoResult &r, const std::string &config, const std::vector<double> &ages,
                    double repetition, const std::filesystem::path &dir);

    // Max / Min / Mean / Std table of one spreads.csv column per region and configuration.
    // Std is the mean over blocks of the across-antenna standard deviation.
    struct RegionStats
    {
        double max = 0.0, min = 0.0, mean = 0.0, std = 0.0;
        Index samples = 0;
    };

    // config -> region -> stats for column `metric` of user `user`
    using StatsTable = std::map<std::string, std::map<int, RegionStats>>;

    StatsTable region_statistics(const std::vector<CsvTable> &spreads, const std::string &metric, Index user);

    // Writes delay_spread_table.csv, doppler_spread_table.csv, power_table.csv and, when
    // sinr.csv files exist, sinr_median_table.csv, reading every input directory.
    void write_report(const std::vector<std::filesystem::path> &inputs, const std::filesystem::path &out, Index user);
}
