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

// cfmimo command-line front end: synth, sound, analyze, mimo, report.
// Exit codes: 0 success, 1 usage, 2 configuration, 3 data or format.

#include "cfmimo/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace cfmimo;
namespace fs = std::filesystem;

namespace
{
    enum Exit : int
    {
        ok = 0,
        usage = 1,
        config = 2,
        data = 3
    };

    // "10us", "0.5ms", "1e-5s" or a bare number of microseconds
    double parse_age(std::string s)
    {
        double scale = 1e-6;
        const auto ends = [&](std::string_view suffix)
        { return s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0; };
        if (ends("us"))
            s.resize(s.size() - 2);
        else if (ends("ms"))
        {
            s.resize(s.size() - 2);
            scale = 1e-3;
        }
        else if (ends("s"))
        {
            s.resize(s.size() - 1);
            scale = 1.0;
        }
        std::size_t used = 0;
        double v = 0.0;
        try
        {
            v = std::stod(s, &used);
        }
        catch (const std::logic_error &)
        {
            used = 0;
        }
        if (used == 0 || used != s.size())
            throw ConfigError("Cannot parse aging delay '" + s + "'.");
        return v * scale;
    }

    RunConfig config_or_default(const std::string &path)
    {
        return path.empty() ? RunConfig{} : load_run_config(path);
    }

    int cmd_synth(const std::string &cfg_path, const std::string &bs, const std::string &out,
                  std::optional<std::uint64_t> seed, std::optional<double> start, std::optional<double> duration,
                  std::optional<Index> per_region, std::optional<Index> tones)
    {
        RunConfig cfg = load_run_config(cfg_path);
        if (!bs.empty())
            cfg.bs = parse_array_config(bs);
        if (seed)
            cfg.seed = cfg.synth.seed = *seed;
        if (start)
            cfg.start = *start;
        if (duration)
            cfg.duration = *duration;
        if (per_region)
            cfg.blocks_per_region = *per_region;
        if (tones)
        {
            if (*tones < 1 || *tones % 2 == 0)
                throw ConfigError("--tones must be odd and positive.");
            cfg.tones = *tones;
        }
        if (cfg.scene.empty())
            throw ConfigError("Configuration names no scene file.");

        std::ifstream in(cfg.scene);
        if (!in)
            throw ConfigError("Cannot open scene '" + cfg.scene.string() + "'.");
        nlohmann::json scene_json;
        try
        {
            scene_json = nlohmann::json::parse(in);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError("Malformed scene '" + cfg.scene.string() + "': " + e.what());
        }
        const Scene scene = parse_scene(scene_json, cfg.bs, cfg.carrier);

        std::vector<Segment> segments;
        if (cfg.blocks_per_region > 0 && !cfg.duration && cfg.start == 0.0)
            segments = plan_segments(scene.trajectory, cfg.blocks_per_region, cfg.analysis.block, cfg.repetition);
        else
            segments = {contiguous_segment(scene.trajectory, cfg.start, cfg.duration, cfg.repetition)};

        synthesize_to_file(scene, scene_json, cfg, segments, out);
        Index total = 0;
        for (const auto &s : segments)
            total += s.snapshots;
        std::cerr << "synth: " << to_string(cfg.bs) << ", " << scene.layout.size() << " antennas, "
                  << scene.trajectory.users() << " users, " << total << " snapshots in " << segments.size()
                  << " segment(s) -> " << out << '\n';
        return ok;
    }

    int cmd_sound(const std::string &cfg_path, const std::string &in_path, const std::string &out,
                  const std::string &waveform, std::optional<double> snr_db, bool noiseless)
    {
        const RunConfig cfg = config_or_default(cfg_path);
        CtfReader reader(in_path);
        reader.verify();
        const CtfHeader h = reader.header();
        const RunMeta meta = read_meta(in_path, h.snapshots);

        const PhaseSearch ps = optimize_phases(h.tones, cfg.crest_target, cfg.crest_max_iter, cfg.seed);
        MultitoneSpec spec;
        spec.tones = h.tones;
        spec.tone_spacing = h.tone_spacing;
        spec.phases = ps.phases;
        std::cerr << "sound: crest factor " << ps.crest << " after " << ps.iterations << " iterations"
                  << (ps.reached ? "" : " (target not reached)") << '\n';
        if (!waveform.empty())
            write_waveform_csv(waveform, synth_multitone(spec), 1.0 / (static_cast<double>(h.tones) * h.tone_spacing));

        const RfCalibration rf = RfCalibration::uniform(h.antennas, h.users, h.tones);
        const RfCalibration cal = measure_calibration(spec, rf, cfg.window);
        ReceptionOptions opt;
        opt.add_noise = !noiseless;
        opt.snr_db = snr_db.value_or(cfg.sounding_snr_db);
        opt.seed = cfg.seed;
        opt.window = cfg.window;

        CtfWriter writer(out, h);
        Index offset = 0;
        constexpr Index chunk = 64;
        for (const auto &s : meta.segments)
        {
            for (Index m = 0; m < s.snapshots; m += chunk)
            {
                const Index n = std::min(chunk, s.snapshots - m);
                opt.first_snapshot = s.first_snapshot + m;
                writer.append(sound_ctf(reader.read(offset + m, n), spec, rf, cal, opt));
            }
            offset += s.snapshots;
        }
        writer.finish();
        RunMeta sounded = meta;
        sounded.sounded = true;
        write_meta(sounded, out);
        return ok;
    }

    int cmd_analyze(const std::string &cfg_path, const std::string &in_path, const std::string &out,
                    const std::string &label)
    {
        const RunConfig cfg = config_or_default(cfg_path);
        const AnalysisResult r = analyze_file(in_path, cfg.analysis);
        CtfReader reader(in_path);
        const CtfHeader &h = reader.header();
        const std::string name = label.empty() ? read_meta(in_path, h.snapshots).bs : label;
        write_analysis(r, name, h.antennas, h.users, h.repetition, out);
        std::cerr << "analyze: " << r.rows.size() << " spread rows -> " << out << '\n';
        return ok;
    }

    int cmd_mimo(const std::string &cfg_path, const std::string &in_path, const std::string &out,
                 const std::string &label, const std::vector<std::string> &ages, const std::string &noise_model,
                 const std::string &policy)
    {
        RunConfig cfg = config_or_default(cfg_path);
        if (!ages.empty())
        {
            cfg.mimo.ages.clear();
            for (const auto &a : ages)
                cfg.mimo.ages.push_back(parse_age(a));
        }
        if (!noise_model.empty())
            cfg.mimo.noise_model = parse_noise_model(noise_model);
        if (!policy.empty())
            cfg.hardening_policy = parse_hardening_policy(policy);
        const MimoResult r = mimo_file(in_path, cfg);
        CtfReader reader(in_path);
        const CtfHeader &h = reader.header();
        const std::string name = label.empty() ? read_meta(in_path, h.snapshots).bs : label;
        write_mimo(r, name, cfg.mimo.ages, h.repetition, out);
        std::cerr << "mimo: " << r.sinr.size() << " SINR samples, " << r.hardening.size() << " hardening blocks -> "
                  << out << '\n';
        return ok;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"cfmimo: channel laboratory for co-located, distributed and cell-free massive MIMO arrays"};
    app.require_subcommand(1);

    std::string cfg_path, bs, in_path, out, waveform, label, noise_model, policy;
    std::optional<std::uint64_t> seed;
    std::optional<double> start, duration, snr_db;
    std::optional<Index> per_region, tones;
    std::vector<std::string> ages, inputs;
    bool noiseless = false;
    Index user = 0;

    auto *synth = app.add_subcommand("synth", "Synthesize the ground-truth CTF of a scene");
    synth->add_option("--config", cfg_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    synth->add_option("--bs", bs, "Array configuration: conf1, conf2, conf3, custom");
    synth->add_option("--out", out, "Output CTF file")->required();
    synth->add_option("--seed", seed, "Random seed");
    synth->add_option("--start", start, "Start of a contiguous window [s]");
    synth->add_option("--duration", duration, "Length of a contiguous window [s]");
    synth->add_option("--blocks-per-region", per_region, "Sampled blocks per region; 0 for a contiguous run");
    synth->add_option("--tones", tones, "Number of tones Q");

    auto *sound = app.add_subcommand("sound", "Simulate the multitone sounder on a ground-truth CTF");
    sound->add_option("--config", cfg_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    sound->add_option("--in", in_path, "Ground-truth CTF file")->required()->check(CLI::ExistingFile);
    sound->add_option("--out", out, "Estimated CTF file")->required();
    sound->add_option("--waveform", waveform, "Export one period of the sounding signal as CSV");
    sound->add_option("--snr", snr_db, "Receive SNR [dB]");
    sound->add_flag("--noiseless", noiseless, "Disable receiver noise");

    auto *analyze = app.add_subcommand("analyze", "LSF, spreads, region power and collinearity");
    analyze->add_option("--config", cfg_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    analyze->add_option("--in", in_path, "CTF file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", out, "Output directory")->required();
    analyze->add_option("--label", label, "Configuration label in the CSVs (default: from the sidecar)");

    auto *mimo = app.add_subcommand("mimo", "SINR under channel aging and channel hardening");
    mimo->add_option("--config", cfg_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    mimo->add_option("--in", in_path, "CTF file")->required()->check(CLI::ExistingFile);
    mimo->add_option("--out", out, "Output directory")->required();
    mimo->add_option("--label", label, "Configuration label in the CSVs (default: from the sidecar)");
    mimo->add_option("--age", ages, "Aging delays, e.g. 10us,100us,500us")->delimiter(',');
    mimo->add_option("--noise-model", noise_model, "filtered or fixed");
    mimo->add_option("--hardening-policy", policy, "block_fixed or per_symbol");

    auto *report = app.add_subcommand("report", "Per-region summary tables from analyze/mimo outputs");
    report->add_option("--in", inputs, "Output directories of analyze (and mimo)")->required()->check(CLI::ExistingDirectory);
    report->add_option("--out", out, "Output directory")->required();
    report->add_option("--user", user, "User index k")->check(CLI::NonNegativeNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try
    {
        if (*synth)
            return cmd_synth(cfg_path, bs, out, seed, start, duration, per_region, tones);
        if (*sound)
            return cmd_sound(cfg_path, in_path, out, waveform, snr_db, noiseless);
        if (*analyze)
            return cmd_analyze(cfg_path, in_path, out, label);
        if (*mimo)
            return cmd_mimo(cfg_path, in_path, out, label, ages, noise_model, policy);
        std::vector<fs::path> dirs(inputs.begin(), inputs.end());
        write_report(dirs, out, user);
        return ok;
    }
    catch (const ConfigError &e)
    {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config;
    }
    catch (const DataError &e)
    {
        std::cerr << "data error: " << e.what() << '\n';
        return data;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    }
}
