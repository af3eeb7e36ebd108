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

#include "cfmimo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cfmimo
{
    namespace fs = std::filesystem;

    namespace
    {
        std::string age_label(double dt)
        {
            const double us = dt * 1e6;
            const double r = std::round(us);
            return std::abs(us - r) < 1e-6 ? std::to_string(static_cast<long long>(r)) : fmt(us);
        }

        std::ofstream open_csv(const fs::path &path)
        {
            std::ofstream out(path, std::ios::trunc);
            if (!out)
                throw DataError("Cannot write '" + path.string() + "'.");
            return out;
        }

        double to_number(const std::string &s)
        {
            if (s == "nan")
                return std::numeric_limits<double>::quiet_NaN();
            if (s == "inf")
                return std::numeric_limits<double>::infinity();
            if (s == "-inf")
                return -std::numeric_limits<double>::infinity();
            try
            {
                std::size_t used = 0;
                const double v = std::stod(s, &used);
                if (used != s.size())
                    throw DataError("Malformed number '" + s + "' in CSV.");
                return v;
            }
            catch (const std::logic_error &)
            {
                throw DataError("Malformed number '" + s + "' in CSV.");
            }
        }

        void write_ecdf(std::ofstream &out, int region, const std::vector<double> &values)
        {
            const Ecdf F(values);
            const auto &s = F.sorted();
            for (std::size_t i = 0; i < s.size(); ++i)
            {
                if (i + 1 < s.size() && s[i + 1] == s[i])
                    continue; // one row per distinct value
                out << region << ',' << fmt(s[i]) << ',' << fmt(F(s[i])) << '\n';
            }
        }

        // Regions present in the rows plus pooled region 0
        template <typename Row, typename Value>
        std::map<int, std::vector<double>> by_region(const std::vector<Row> &rows, Value value)
        {
            std::map<int, std::vector<double>> out;
            for (const auto &r : rows)
            {
                const double v = value(r);
                out[0].push_back(v);
                if (r.region > 0)
                    out[r.region].push_back(v);
            }
            return out;
        }
    }

    std::vector<Segment> plan_segments(const Trajectory &trajectory, Index per_region, Index block, double repetition)
    {
        if (per_region < 1 || block < 1 || !(repetition > 0.0))
            throw std::invalid_argument("Segment planning needs positive block count, length and repetition.");
        std::vector<Segment> out;
        const double T = trajectory.duration();
        const Index last = static_cast<Index>(std::floor(T / repetition + 1e-9)); // last valid snapshot
        const auto &edges = trajectory.region_edges();
        for (int s = 1; s <= trajectory.regions(); ++s)
        {
            double t0 = 0.0, t1 = T;
            if (trajectory.length() > 0.0)
            {
                t0 = trajectory.time_at_arc(edges[s - 1]);
                t1 = trajectory.time_at_arc(edges[s]);
            }
            const Index m0 = static_cast<Index>(std::ceil(t0 / repetition - 1e-9));
            Index m1 = static_cast<Index>(std::ceil(t1 / repetition - 1e-9)); // exclusive
            if (s == trajectory.regions())
                m1 = last + 1;
            const Index span = m1 - m0;
            const Index n = std::min(per_region, span / block);
            if (n < 1)
                continue;
            const double gap = static_cast<double>(span - n * block) / static_cast<double>(n + 1);
            for (Index j = 0; j < n; ++j)
                out.push_back({m0 + static_cast<Index>(std::floor(gap * static_cast<double>(j + 1))) + j * block,
                               block});
        }
        if (out.empty())
            throw std::invalid_argument("Trajectory too short for a single block.");
        return out;
    }

    Segment contiguous_segment(const Trajectory &trajectory, double start, std::optional<double> duration,
                               double repetition)
    {
        if (!(repetition > 0.0) || !(start >= 0.0))
            throw std::invalid_argument("Start must be non-negative and repetition positive.");
        const Index last = static_cast<Index>(std::floor(trajectory.duration() / repetition + 1e-9));
        const Index m0 = static_cast<Index>(std::llround(start / repetition));
        if (m0 > last)
            throw std::invalid_argument("Start lies beyond the trajectory duration.");
        Index n = last - m0 + 1;
        if (duration)
            n = std::min(n, static_cast<Index>(std::llround(*duration / repetition)));
        if (n < 1)
            throw std::invalid_argument("Window holds no snapshot.");
        return {m0, n};
    }

    void synthesize_to_file(const Scene &scene, const nlohmann::json &scene_json, const RunConfig &cfg,
                            const std::vector<Segment> &segments, const fs::path &out, Index chunk)
    {
        if (segments.empty())
            throw std::invalid_argument("Nothing to synthesize.");
        Index total = 0;
        for (const auto &s : segments)
            total += s.snapshots;
        CtfHeader h;
        h.antennas = static_cast<std::uint32_t>(scene.layout.size());
        h.users = static_cast<std::uint32_t>(scene.trajectory.users());
        h.snapshots = static_cast<std::uint32_t>(total);
        h.tones = static_cast<std::uint32_t>(cfg.tones);
        h.carrier_frequency = scene.carrier_frequency;
        h.tone_spacing = cfg.tone_spacing;
        h.repetition = cfg.repetition;

        CtfWriter w(out, h);
        for (const auto &s : segments)
            for (Index m = 0; m < s.snapshots; m += chunk)
            {
                SynthWindow win{s.first_snapshot + m, std::min(chunk, s.snapshots - m), cfg.tones, cfg.tone_spacing,
                                cfg.repetition};
                w.append(synthesize_ctf(scene, cfg.synth, win));
            }
        w.finish();

        RunMeta meta;
        meta.bs = to_string(scene.layout.label);
        meta.seed = cfg.seed;
        meta.scene = scene_json;
        meta.segments = segments;
        write_meta(meta, out);
    }

    int Locator::region_at(double t) const
    {
        if (!trajectory)
            return 0;
        return trajectory->state_at(std::clamp(t, 0.0, trajectory->duration())).region;
    }

    double Locator::arc_at(double t) const
    {
        if (!trajectory)
            return 0.0;
        return trajectory->state_at(std::clamp(t, 0.0, trajectory->duration())).arc;
    }

    Locator make_locator(const RunMeta &meta, double repetition)
    {
        Locator loc;
        loc.repetition = repetition;
        if (meta.scene.is_null())
            return loc;
        ArrayConfig bs = ArrayConfig::conf1;
        try
        {
            bs = parse_array_config(meta.bs);
        }
        catch (const std::invalid_argument &)
        {
        }
        try
        {
            loc.trajectory = parse_scene(meta.scene, bs, kDefaultCarrier).trajectory;
        }
        catch (const ConfigError &e)
        {
            throw DataError(std::string("Scene embedded in the sidecar is invalid: ") + e.what());
        }
        return loc;
    }

    std::vector<BlockInfo> block_layout(const RunMeta &meta, const Locator &loc, Index block)
    {
        std::vector<BlockInfo> out;
        Index offset = 0, l = 0;
        for (const auto &s : meta.segments)
        {
            for (Index j = 0; (j + 1) * block <= s.snapshots; ++j)
            {
                BlockInfo b;
                b.l = l++;
                b.file_offset = offset + j * block;
                b.first_snapshot = s.first_snapshot + j * block;
                const double tc = (static_cast<double>(b.first_snapshot) + 0.5 * static_cast<double>(block)) *
                                  loc.repetition;
                b.region = loc.region_at(tc);
                b.arc = loc.arc_at(tc);
                out.push_back(b);
            }
            offset += s.snapshots;
        }
        return out;
    }

    BlockAnalysis analyze_block(const ChannelTensor &ctf, const DpsTapers &tapers, const AnalysisParams &p,
                                const BlockInfo &info)
    {
        const Index A = ctf.antennas(), K = ctf.users();
        BlockAnalysis out;
        for (Index k = 0; k < K; ++k)
        {
            std::vector<Eigen::MatrixXd> thresholded;
            thresholded.reserve(static_cast<std::size_t>(A));
            for (Index a = 0; a < A; ++a)
            {
                const LsfBlock lsf = compute_lsf(ctf, a, k, 0, tapers);
                LsfBlock thr = apply_thresholds(lsf, p.noise_db, p.sensitivity_db);
                SpreadRow row;
                row.a = a;
                row.k = k;
                row.l = info.l;
                row.first_snapshot = info.first_snapshot;
                row.region = info.region;
                row.arc = info.arc;
                row.raw_power = lsf.values.mean();
                if (auto m = moments(thr))
                {
                    row.valid = true;
                    row.values = *m;
                }
                out.rows.push_back(row);
                thresholded.push_back(std::move(thr.values));
            }
            out.collinear.push_back(collinearity_matrix(thresholded));
        }
        return out;
    }

    AnalysisResult analyze_file(const fs::path &ctf, const AnalysisParams &p)
    {
        CtfReader reader(ctf);
        reader.verify();
        const CtfHeader &h = reader.header();
        const RunMeta meta = read_meta(ctf, h.snapshots);
        const Locator loc = make_locator(meta, h.repetition);
        const auto blocks = block_layout(meta, loc, p.block);
        if (blocks.empty())
            throw DataError("CTF file holds no complete stationarity block.");
        const DpsTapers tapers = gen_tapers(p.block, h.tones, p.time_tapers, p.freq_tapers, p.nw);

        AnalysisResult r;
        for (std::uint32_t k = 0; k < h.users; ++k)
            r.collinearity.emplace_back(h.antennas);
        for (const auto &b : blocks)
        {
            const ChannelTensor block = reader.read(b.file_offset, p.block);
            BlockAnalysis ba = analyze_block(block, tapers, p, b);
            r.rows.insert(r.rows.end(), ba.rows.begin(), ba.rows.end());
            for (std::size_t k = 0; k < ba.collinear.size(); ++k)
                r.collinearity[k].add(ba.collinear[k]);
        }
        return r;
    }

    void write_analysis(const AnalysisResult &r, const std::string &config, Index antennas, Index users,
                        double repetition, const fs::path &dir)
    {
        fs::create_directories(dir);
        write_spreads_csv(dir / "spreads.csv", config, r.rows, repetition);
        const bool has_regions =
            std::any_of(r.rows.begin(), r.rows.end(), [](const SpreadRow &row) { return row.region > 0; });
        for (Index k = 0; k < users; ++k)
        {
            const std::string suffix = "_k" + std::to_string(k) + ".csv";
            if (has_regions)
                write_power_csv(dir / ("power" + suffix), config, k, region_power(r.rows, antennas, k));
            write_matrix_csv(dir / ("collinearity" + suffix), r.collinearity.at(static_cast<std::size_t>(k)).mean());
        }
    }

    MimoResult mimo_file(const fs::path &ctf, const RunConfig &cfg)
    {
        CtfReader reader(ctf);
        reader.verify();
        const CtfHeader &h = reader.header();
        const RunMeta meta = read_meta(ctf, h.snapshots);
        const Locator loc = make_locator(meta, h.repetition);
        const Index iq = cfg.mimo.tone < 0 ? center_tone(h.tones) : cfg.mimo.tone;
        if (iq >= static_cast<Index>(h.tones))
            throw DataError("Evaluated tone lies outside the CTF file.");
        for (double dt : cfg.mimo.ages)
            if (!(dt < h.repetition))
                throw ConfigError("Aging delays must be shorter than the repetition rate of the file.");

        SinrParams sp = cfg.mimo;
        sp.tone = 0;
        MimoResult r;
        Index offset = 0, l = 0;
        constexpr Index chunk = 256;
        for (const auto &s : meta.segments)
        {
            // Single-tone copy of the segment
            ChannelTensor one(h.antennas, h.users, s.snapshots, 1, h.grid());
            for (Index m = 0; m < s.snapshots; m += chunk)
            {
                const Index n = std::min(chunk, s.snapshots - m);
                const ChannelTensor part = reader.read(offset + m, n);
                one.data().row(0).segment(m * h.antennas * h.users, n * h.antennas * h.users) = part.data().row(iq);
            }

            for (const auto &x : sinr_series(one, sp, 0, s.snapshots, s.first_snapshot))
                r.sinr.push_back({x, loc.region_at(static_cast<double>(x.m) * h.repetition)});

            if (s.snapshots >= cfg.hardening_block)
                for (const auto &x : hardening(one, 0, cfg.hardening_block, cfg.hardening_policy, sp.regularization))
                {
                    HardeningRow row;
                    row.h = x;
                    row.h.l = l + x.l;
                    row.first_snapshot = s.first_snapshot + x.l * cfg.hardening_block;
                    row.region = loc.region_at(
                        (static_cast<double>(row.first_snapshot) + 0.5 * static_cast<double>(cfg.hardening_block)) *
                        h.repetition);
                    r.hardening.push_back(row);
                }
            l += s.snapshots / cfg.hardening_block;
            offset += s.snapshots;
        }
        return r;
    }

    void write_mimo(const MimoResult &r, const std::string &config, const std::vector<double> &ages,
                    double repetition, const fs::path &dir)
    {
        fs::create_directories(dir);
        {
            std::ofstream out = open_csv(dir / "sinr.csv");
            out << "config,m,time_s,region,k,dt_us,sinr,sinr_db\n";
            for (const auto &x : r.sinr)
                out << config << ',' << x.s.m << ',' << fmt(static_cast<double>(x.s.m) * repetition) << ','
                    << x.region << ',' << x.s.k << ',' << age_label(x.s.dt) << ',' << fmt(x.s.sinr) << ','
                    << fmt(linear_to_db(x.s.sinr)) << '\n';
        }
        {
            std::ofstream out = open_csv(dir / "hardening.csv");
            out << "config,k,l,first_snapshot,region,gamma,mean\n";
            for (const auto &x : r.hardening)
                out << config << ',' << x.h.k << ',' << x.h.l << ',' << x.first_snapshot << ',' << x.region << ','
                    << fmt(x.h.gamma) << ',' << fmt(x.h.mean) << '\n';
        }
        for (double dt : ages)
        {
            std::vector<MimoRow> rows;
            for (const auto &x : r.sinr)
                if (x.s.dt == dt)
                    rows.push_back(x);
            std::ofstream out = open_csv(dir / ("ecdf_sinr_" + age_label(dt) + "us.csv"));
            out << "region,sinr_db,probability\n";
            if (rows.empty())
                continue;
            for (const auto &[region, v] : by_region(rows, [](const MimoRow &x) { return linear_to_db(x.s.sinr); }))
                write_ecdf(out, region, v);
        }
        {
            std::ofstream out = open_csv(dir / "ecdf_hardening.csv");
            out << "region,gamma,probability\n";
            if (!r.hardening.empty())
                for (const auto &[region, v] : by_region(r.hardening, [](const HardeningRow &x) { return x.h.gamma; }))
                    write_ecdf(out, region, v);
        }
    }

    StatsTable region_statistics(const std::vector<CsvTable> &spreads, const std::string &metric, Index user)
    {
        const bool need_valid = metric != "power_db" && metric != "power";
        StatsTable out;
        for (const auto &t : spreads)
        {
            const std::size_t c_cfg = t.column("config"), c_k = t.column("k"), c_l = t.column("l"),
                              c_region = t.column("region"), c_valid = t.column("valid"), c_v = t.column(metric);
            // config -> region -> l -> values over antennas
            std::map<std::string, std::map<int, std::map<long, std::vector<double>>>> groups;
            for (const auto &row : t.rows)
            {
                if (static_cast<Index>(to_number(row[c_k])) != user)
                    continue;
                const int region = static_cast<int>(to_number(row[c_region]));
                if (region <= 0 || (need_valid && row[c_valid] != "1"))
                    continue;
                const double v = to_number(row[c_v]);
                if (!std::isfinite(v))
                    continue;
                groups[row[c_cfg]][region][static_cast<long>(to_number(row[c_l]))].push_back(v);
            }
            for (const auto &[cfg, regions] : groups)
                for (const auto &[region, blocks] : regions)
                {
                    RegionStats st;
                    st.max = -std::numeric_limits<double>::infinity();
                    st.min = std::numeric_limits<double>::infinity();
                    double sum = 0.0, std_sum = 0.0;
                    for (const auto &[l, v] : blocks)
                    {
                        double bs = 0.0;
                        for (double x : v)
                        {
                            st.max = std::max(st.max, x);
                            st.min = std::min(st.min, x);
                            sum += x;
                            bs += x;
                        }
                        const double bm = bs / static_cast<double>(v.size());
                        double var = 0.0;
                        for (double x : v)
                            var += (x - bm) * (x - bm);
                        std_sum += std::sqrt(var / static_cast<double>(v.size()));
                        st.samples += static_cast<Index>(v.size());
                    }
                    st.mean = sum / static_cast<double>(st.samples);
                    st.std = std_sum / static_cast<double>(blocks.size());
                    out[cfg][region] = st;
                }
        }
        return out;
    }

    void write_report(const std::vector<fs::path> &inputs, const fs::path &out, Index user)
    {
        if (inputs.empty())
            throw std::invalid_argument("Report needs at least one input directory.");
        std::vector<CsvTable> spreads, sinr, hard;
        for (const auto &d : inputs)
        {
            spreads.push_back(read_csv(d / "spreads.csv"));
            if (fs::exists(d / "sinr.csv"))
                sinr.push_back(read_csv(d / "sinr.csv"));
            if (fs::exists(d / "hardening.csv"))
                hard.push_back(read_csv(d / "hardening.csv"));
        }
        fs::create_directories(out);

        const auto emit = [&](const std::string &file, const std::string &metric)
        {
            const StatsTable t = region_statistics(spreads, metric, user);
            std::set<int> regions;
            for (const auto &[cfg, m] : t)
                for (const auto &[r, st] : m)
                    regions.insert(r);
            std::ofstream o = open_csv(out / file);
            o << "metric,config,stat";
            for (int r : regions)
                o << ",R" << r;
            o << '\n';
            static const char *names[] = {"Max", "Min", "Mean", "Std"};
            for (const auto &[cfg, m] : t)
                for (int s = 0; s < 4; ++s)
                {
                    o << metric << ',' << cfg << ',' << names[s];
                    for (int r : regions)
                    {
                        const auto it = m.find(r);
                        if (it == m.end())
                        {
                            o << ",nan";
                            continue;
                        }
                        const RegionStats &st = it->second;
                        const double v = s == 0 ? st.max : s == 1 ? st.min : s == 2 ? st.mean : st.std;
                        o << ',' << fmt(v);
                    }
                    o << '\n';
                }
        };
        emit("delay_spread_table.csv", "rms_delay_ns");
        emit("doppler_spread_table.csv", "rms_doppler_hz");
        emit("power_table.csv", "power_db");

        // Median tables: config (and delay) x region
        const auto medians = [&](const std::vector<CsvTable> &tables, const std::string &value,
                                 const std::string &key, const fs::path &file)
        {
            std::map<std::pair<std::string, std::string>, std::map<int, std::vector<double>>> groups;
            std::set<int> regions;
            for (const auto &t : tables)
            {
                const std::size_t c_cfg = t.column("config"), c_k = t.column("k"), c_region = t.column("region"),
                                  c_v = t.column(value);
                const std::size_t c_key = key.empty() ? 0 : t.column(key);
                for (const auto &row : t.rows)
                {
                    if (static_cast<Index>(to_number(row[c_k])) != user)
                        continue;
                    const int region = static_cast<int>(to_number(row[c_region]));
                    if (region <= 0)
                        continue;
                    regions.insert(region);
                    groups[{row[c_cfg], key.empty() ? std::string() : row[c_key]}][region].push_back(
                        to_number(row[c_v]));
                }
            }
            std::ofstream o = open_csv(out / file);
            o << "config" << (key.empty() ? "" : "," + key);
            for (int r : regions)
                o << ",R" << r;
            o << '\n';
            for (const auto &[id, m] : groups)
            {
                o << id.first << (key.empty() ? "" : "," + id.second);
                for (int r : regions)
                {
                    const auto it = m.find(r);
                    o << ',' << (it == m.end() ? std::string("nan") : fmt(Ecdf(it->second).median()));
                }
                o << '\n';
            }
        };
        if (!sinr.empty())
            medians(sinr, "sinr_db", "dt_us", "sinr_median_table.csv");
        if (!hard.empty())
            medians(hard, "gamma", "", "hardening_median_table.csv");
    }
}
