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
#include "cfmimo/mimo.hpp"
#include "cfmimo/scene.hpp"
#include "cfmimo/sounding.hpp"
#include "cfmimo/specan.hpp"
#include "cfmimo/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace cfmimo
{
    // ---------- CTF container ----------

    inline constexpr std::size_t kCtfHeaderBytes = 48;
    inline constexpr std::uint32_t kPayloadFloat32 = 0;

    struct CtfHeader
    {
        std::uint32_t antennas = 0, users = 0, snapshots = 0, tones = 0;
        double carrier_frequency = 0.0, tone_spacing = 0.0, repetition = 0.0;
        std::uint32_t payload_kind = kPayloadFloat32;

        std::uint64_t link_values() const { return std::uint64_t(antennas) * users * tones; }
        std::uint64_t payload_bytes() const { return 8ull * link_values() * snapshots; }
        MeasurementGrid grid() const { return {carrier_frequency, tone_spacing, repetition}; }
    };

    // Streams snapshots into a CTF file; the CRC footer is written by finish()
    class CtfWriter
    {
    public:
        CtfWriter(const std::filesystem::path &path, const CtfHeader &header);
        ~CtfWriter();
        CtfWriter(const CtfWriter &) = delete;
        CtfWriter &operator=(const CtfWriter &) = delete;

        // Appends all snapshots of `chunk`; its A, K, Q must match the header
        void append(const ChannelTensor &chunk);
        void finish();

    private:
        std::ofstream out_;
        CtfHeader header_;
        std::uint64_t written_ = 0; // snapshots
        std::uint32_t crc_ = 0;
        bool finished_ = false;
        std::filesystem::path path_;
    };

    // Random access to snapshot ranges of a CTF file
    class CtfReader
    {
    public:
        // Parses and validates the header and the file length. Throws DataError.
        explicit CtfReader(const std::filesystem::path &path);

        const CtfHeader &header() const { return header_; }

        // Recomputes the payload CRC; throws DataError on mismatch
        void verify();

        ChannelTensor read(Index first_snapshot, Index count);

    private:
        std::ifstream in_;
        CtfHeader header_;
        std::uint32_t stored_crc_ = 0;
    };

    void write_ctf(const ChannelTensor &tensor, const std::filesystem::path &path);

    // Whole-file read with CRC validation
    ChannelTensor read_ctf(const std::filesystem::path &path);

    // ---------- Configuration ----------

    struct RunConfig
    {
        std::filesystem::path scene;
        ArrayConfig bs = ArrayConfig::conf1;
        std::uint64_t seed = 1;

        // sounding
        Index tones = kDefaultTones;
        double tone_spacing = kDefaultToneSpacing;
        double repetition = kDefaultRepetition;
        double carrier = kDefaultCarrier;
        double sounding_snr_db = 25.0;
        double crest_target = 1.5;
        int crest_max_iter = 20000;
        DemodWindow window = DemodWindow::two_periods;

        // synthesis
        SynthParams synth;
        Index blocks_per_region = 2; // 0 = contiguous window [start, start + duration)
        double start = 0.0;
        std::optional<double> duration;

        // analysis
        AnalysisParams analysis;

        // mimo
        SinrParams mimo;
        HardeningPolicy hardening_policy = HardeningPolicy::block_fixed;
        Index hardening_block = kDefaultBlock;
    };

    // Keys absent from the JSON keep their defaults. Throws ConfigError.
    RunConfig parse_run_config(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
    RunConfig load_run_config(const std::filesystem::path &path);

    // Scene from JSON with the array built for `bs`. Throws ConfigError.
    Scene parse_scene(const nlohmann::json &j, ArrayConfig bs, double carrier);
    Scene load_scene(const std::filesystem::path &path, ArrayConfig bs, double carrier);

    // ---------- Run metadata sidecar ----------

    struct Segment
    {
        Index first_snapshot = 0;
        Index snapshots = 0;
    };

    struct RunMeta
    {
        std::string bs = "custom";
        std::uint64_t seed = 1;
        nlohmann::json scene;           // embedded scene description, null if unknown
        std::vector<Segment> segments;  // concatenated in file order
        bool sounded = false;           // estimate from the sounding chain rather than ground truth
    };

    std::filesystem::path meta_path(const std::filesystem::path &ctf);
    void write_meta(const RunMeta &meta, const std::filesystem::path &ctf);

    // Missing sidecar: one segment covering the file, no scene
    RunMeta read_meta(const std::filesystem::path &ctf, Index snapshots);

    // ---------- CSV ----------

    // Shortest round-trip representation; "nan" for NaN
    std::string fmt(double v);

    void write_waveform_csv(const std::filesystem::path &path, const Eigen::VectorXcd &x, double sample_period);
    void write_spreads_csv(const std::filesystem::path &path, const std::string &config,
                           const std::vector<SpreadRow> &rows, double repetition);
    void write_power_csv(const std::filesystem::path &path, const std::string &config, Index user,
                         const PowerMetrics &pm);
    void write_matrix_csv(const std::filesystem::path &path, const Eigen::MatrixXd &m);

    // Minimal reader for the CSVs written here: header names and string cells
    struct CsvTable
    {
        std::vector<std::string> header;
        std::vector<std::vector<std::string>> rows;

        // Throws DataError for a missing column
        std::size_t column(const std::string &name) const;
    };

    CsvTable read_csv(const std::filesystem::path &path);
}
