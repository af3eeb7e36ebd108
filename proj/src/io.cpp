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

#include "cfmimo/io.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

namespace cfmimo
{
    namespace fs = std::filesystem;
    using nlohmann::json;

    namespace
    {
        constexpr char kMagic[4] = {'C', 'T', 'F', '1'};

        std::uint32_t crc_update(std::uint32_t crc, const unsigned char *data, std::size_t n)
        {
            uLong c = crc;
            while (n > 0)
            {
                const uInt step = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
                c = crc32(c, data, step);
                data += step;
                n -= step;
            }
            return static_cast<std::uint32_t>(c);
        }

        void put_u32(unsigned char *p, std::uint32_t v)
        {
            for (int i = 0; i < 4; ++i)
                p[i] = static_cast<unsigned char>(v >> (8 * i));
        }

        void put_u64(unsigned char *p, std::uint64_t v)
        {
            for (int i = 0; i < 8; ++i)
                p[i] = static_cast<unsigned char>(v >> (8 * i));
        }

        std::uint32_t get_u32(const unsigned char *p)
        {
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i)
                v |= std::uint32_t(p[i]) << (8 * i);
            return v;
        }

        std::uint64_t get_u64(const unsigned char *p)
        {
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i)
                v |= std::uint64_t(p[i]) << (8 * i);
            return v;
        }

        std::array<unsigned char, kCtfHeaderBytes> encode_header(const CtfHeader &h)
        {
            std::array<unsigned char, kCtfHeaderBytes> b{};
            std::memcpy(b.data(), kMagic, 4);
            put_u32(&b[4], h.antennas);
            put_u32(&b[8], h.users);
            put_u32(&b[12], h.snapshots);
            put_u32(&b[16], h.tones);
            put_u64(&b[20], std::bit_cast<std::uint64_t>(h.carrier_frequency));
            put_u64(&b[28], std::bit_cast<std::uint64_t>(h.tone_spacing));
            put_u64(&b[36], std::bit_cast<std::uint64_t>(h.repetition));
            put_u32(&b[44], h.payload_kind);
            return b;
        }

        void check_header(const CtfHeader &h)
        {
            if (h.payload_kind != kPayloadFloat32)
                throw DataError("Unsupported CTF payload kind " + std::to_string(h.payload_kind) + ".");
            if (h.antennas == 0 || h.users == 0 || h.snapshots == 0 || h.tones == 0)
                throw DataError("CTF header has a zero dimension.");
            if (h.tones % 2 == 0)
                throw DataError("CTF header has an even number of tones.");
            if (!(h.carrier_frequency > 0.0) || !(h.tone_spacing > 0.0) || !(h.repetition > 0.0) ||
                !std::isfinite(h.carrier_frequency) || !std::isfinite(h.tone_spacing) || !std::isfinite(h.repetition))
                throw DataError("CTF header has a non-positive sampling parameter.");
        }

        void encode_links(const ChannelTensor::Storage &data, std::vector<unsigned char> &buf)
        {
            buf.resize(static_cast<std::size_t>(data.size()) * 8);
            unsigned char *p = buf.data();
            const std::complex<double> *v = data.data();
            for (Index i = 0; i < data.size(); ++i, p += 8)
            {
                put_u32(p, std::bit_cast<std::uint32_t>(static_cast<float>(v[i].real())));
                put_u32(p + 4, std::bit_cast<std::uint32_t>(static_cast<float>(v[i].imag())));
            }
        }

        double number(const json &j, const char *key, double def)
        {
            if (!j.contains(key) || j.at(key).is_null())
                return def;
            if (!j.at(key).is_number())
                throw ConfigError(std::string("Key '") + key + "' must be a number.");
            return j.at(key).get<double>();
        }

        Index integer(const json &j, const char *key, Index def)
        {
            if (!j.contains(key) || j.at(key).is_null())
                return def;
            if (!j.at(key).is_number_integer())
                throw ConfigError(std::string("Key '") + key + "' must be an integer.");
            return j.at(key).get<Index>();
        }

        std::string text(const json &j, const char *key, const std::string &def)
        {
            if (!j.contains(key) || j.at(key).is_null())
                return def;
            if (!j.at(key).is_string())
                throw ConfigError(std::string("Key '") + key + "' must be a string.");
            return j.at(key).get<std::string>();
        }

        bool boolean(const json &j, const char *key, bool def)
        {
            if (!j.contains(key) || j.at(key).is_null())
                return def;
            if (!j.at(key).is_boolean())
                throw ConfigError(std::string("Key '") + key + "' must be a boolean.");
            return j.at(key).get<bool>();
        }

        const json &section(const json &j, const char *key)
        {
            static const json empty = json::object();
            if (!j.contains(key))
                return empty;
            if (!j.at(key).is_object())
                throw ConfigError(std::string("Section '") + key + "' must be an object.");
            return j.at(key);
        }

        Vec3 vec3(const json &j, const std::string &what)
        {
            if (!j.is_array() || j.size() != 3)
                throw ConfigError(what + " must be an array of three numbers.");
            Vec3 v;
            for (int i = 0; i < 3; ++i)
            {
                if (!j[i].is_number())
                    throw ConfigError(what + " must be an array of three numbers.");
                v[i] = j[i].get<double>();
            }
            if (!v.allFinite())
                throw ConfigError(what + " must be finite.");
            return v;
        }

        std::vector<Vec3> vec3_list(const json &j, const std::string &what)
        {
            if (!j.is_array())
                throw ConfigError(what + " must be an array of points.");
            std::vector<Vec3> out;
            for (const auto &e : j)
                out.push_back(vec3(e, what));
            return out;
        }

        std::vector<double> numbers(const json &j, const std::string &what)
        {
            if (!j.is_array())
                throw ConfigError(what + " must be an array of numbers.");
            std::vector<double> out;
            for (const auto &e : j)
            {
                if (!e.is_number())
                    throw ConfigError(what + " must be an array of numbers.");
                out.push_back(e.get<double>());
            }
            return out;
        }

        json parse_file(const fs::path &path)
        {
            std::ifstream in(path);
            if (!in)
                throw ConfigError("Cannot open '" + path.string() + "'.");
            try
            {
                return json::parse(in);
            }
            catch (const json::exception &e)
            {
                throw ConfigError("Malformed JSON in '" + path.string() + "': " + e.what());
            }
        }

        std::ofstream open_out(const fs::path &path)
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw DataError("Cannot write '" + path.string() + "'.");
            return out;
        }
    }

    // ---------- CTF ----------

    CtfWriter::CtfWriter(const fs::path &path, const CtfHeader &header) : header_(header), path_(path)
    {
        check_header(header_);
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw DataError("Cannot write '" + path.string() + "'.");
        const auto b = encode_header(header_);
        out_.write(reinterpret_cast<const char *>(b.data()), static_cast<std::streamsize>(b.size()));
        crc_ = static_cast<std::uint32_t>(crc32(0L, Z_NULL, 0));
    }

    CtfWriter::~CtfWriter() = default;

    void CtfWriter::append(const ChannelTensor &chunk)
    {
        if (finished_)
            throw std::logic_error("CTF writer already finished.");
        if (chunk.antennas() != header_.antennas || chunk.users() != header_.users || chunk.tones() != header_.tones)
            throw std::invalid_argument("Chunk dimensions do not match the CTF header.");
        if (written_ + static_cast<std::uint64_t>(chunk.snapshots()) > header_.snapshots)
            throw std::invalid_argument("More snapshots appended than declared in the CTF header.");
        std::vector<unsigned char> buf;
        encode_links(chunk.data(), buf);
        crc_ = crc_update(crc_, buf.data(), buf.size());
        out_.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out_)
            throw DataError("Write failure on '" + path_.string() + "'.");
        written_ += static_cast<std::uint64_t>(chunk.snapshots());
    }

    void CtfWriter::finish()
    {
        if (finished_)
            return;
        if (written_ != header_.snapshots)
            throw std::logic_error("CTF writer finished before all declared snapshots were appended.");
        unsigned char f[4];
        put_u32(f, crc_);
        out_.write(reinterpret_cast<const char *>(f), 4);
        out_.close();
        if (!out_)
            throw DataError("Write failure on '" + path_.string() + "'.");
        finished_ = true;
    }

    CtfReader::CtfReader(const fs::path &path)
    {
        in_.open(path, std::ios::binary);
        if (!in_)
            throw DataError("Cannot open '" + path.string() + "'.");
        std::error_code ec;
        const auto size = fs::file_size(path, ec);
        if (ec)
            throw DataError("Cannot stat '" + path.string() + "'.");
        if (size < kCtfHeaderBytes)
            throw DataError("Truncated CTF header in '" + path.string() + "'.");

        std::array<unsigned char, kCtfHeaderBytes> b{};
        in_.read(reinterpret_cast<char *>(b.data()), static_cast<std::streamsize>(b.size()));
        if (std::memcmp(b.data(), kMagic, 4) != 0)
            throw DataError("Bad CTF magic in '" + path.string() + "'.");
        header_.antennas = get_u32(&b[4]);
        header_.users = get_u32(&b[8]);
        header_.snapshots = get_u32(&b[12]);
        header_.tones = get_u32(&b[16]);
        header_.carrier_frequency = std::bit_cast<double>(get_u64(&b[20]));
        header_.tone_spacing = std::bit_cast<double>(get_u64(&b[28]));
        header_.repetition = std::bit_cast<double>(get_u64(&b[36]));
        header_.payload_kind = get_u32(&b[44]);
        check_header(header_);

        const std::uint64_t expected = kCtfHeaderBytes + header_.payload_bytes() + 4;
        if (size < expected)
            throw DataError("Truncated CTF payload in '" + path.string() + "'.");
        if (size > expected)
            throw DataError("Trailing bytes after the CTF footer in '" + path.string() + "'.");

        unsigned char f[4];
        in_.seekg(static_cast<std::streamoff>(expected - 4));
        in_.read(reinterpret_cast<char *>(f), 4);
        stored_crc_ = get_u32(f);
    }

    void CtfReader::verify()
    {
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(kCtfHeaderBytes));
        std::vector<unsigned char> buf(1u << 22);
        std::uint64_t left = header_.payload_bytes();
        std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, Z_NULL, 0));
        while (left > 0)
        {
            const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(left, buf.size()));
            in_.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(n));
            if (!in_)
                throw DataError("Read failure in CTF payload.");
            crc = crc_update(crc, buf.data(), n);
            left -= n;
        }
        if (crc != stored_crc_)
            throw DataError("CTF payload CRC mismatch.");
    }

    ChannelTensor CtfReader::read(Index first_snapshot, Index count)
    {
        if (first_snapshot < 0 || count < 1 || first_snapshot + count > static_cast<Index>(header_.snapshots))
            throw std::out_of_range("Snapshot range outside the CTF file.");
        ChannelTensor t(header_.antennas, header_.users, count, header_.tones, header_.grid());
        const std::uint64_t per = header_.link_values() * 8;
        std::vector<unsigned char> buf(static_cast<std::size_t>(per * static_cast<std::uint64_t>(count)));
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(kCtfHeaderBytes + per * static_cast<std::uint64_t>(first_snapshot)));
        in_.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in_)
            throw DataError("Read failure in CTF payload.");
        std::complex<double> *v = t.data().data();
        const unsigned char *p = buf.data();
        for (Index i = 0; i < t.data().size(); ++i, p += 8)
            v[i] = {std::bit_cast<float>(get_u32(p)), std::bit_cast<float>(get_u32(p + 4))};
        return t;
    }

    void write_ctf(const ChannelTensor &tensor, const fs::path &path)
    {
        CtfHeader h;
        h.antennas = static_cast<std::uint32_t>(tensor.antennas());
        h.users = static_cast<std::uint32_t>(tensor.users());
        h.snapshots = static_cast<std::uint32_t>(tensor.snapshots());
        h.tones = static_cast<std::uint32_t>(tensor.tones());
        h.carrier_frequency = tensor.grid().carrier_frequency;
        h.tone_spacing = tensor.grid().tone_spacing;
        h.repetition = tensor.grid().repetition;
        CtfWriter w(path, h);
        w.append(tensor);
        w.finish();
    }

    ChannelTensor read_ctf(const fs::path &path)
    {
        CtfReader r(path);
        r.verify();
        return r.read(0, r.header().snapshots);
    }

    // ---------- Configuration ----------

    RunConfig parse_run_config(const json &j, const fs::path &base_dir)
    {
        if (!j.is_object())
            throw ConfigError("Run configuration must be a JSON object.");
        RunConfig c;
        try
        {
            const std::string scene = text(j, "scene", "");
            if (!scene.empty())
            {
                fs::path p(scene);
                c.scene = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
            }
            c.bs = parse_array_config(text(j, "bs", "conf1"));
            const Index seed = integer(j, "seed", 1);
            if (seed < 0)
                throw ConfigError("Seed must be non-negative.");
            c.seed = static_cast<std::uint64_t>(seed);
            c.synth.seed = c.seed;

            const json &s = section(j, "sounding");
            c.tones = integer(s, "tones", c.tones);
            c.tone_spacing = number(s, "tone_spacing", c.tone_spacing);
            c.repetition = number(s, "repetition", c.repetition);
            c.carrier = number(s, "carrier", c.carrier);
            c.sounding_snr_db = number(s, "snr_db", c.sounding_snr_db);
            c.crest_target = number(s, "crest_target", c.crest_target);
            c.crest_max_iter = static_cast<int>(integer(s, "crest_max_iter", c.crest_max_iter));
            const std::string window = text(s, "window", "two_periods");
            if (window == "two_periods")
                c.window = DemodWindow::two_periods;
            else if (window == "one_period")
                c.window = DemodWindow::one_period;
            else
                throw ConfigError("Unknown demodulation window '" + window + "'.");

            const json &y = section(j, "synth");
            c.synth.pathloss_exponent = number(y, "pathloss_exponent", c.synth.pathloss_exponent);
            c.synth.scatter_gain_min = number(y, "scatter_gain_min", c.synth.scatter_gain_min);
            c.synth.scatter_gain_max = number(y, "scatter_gain_max", c.synth.scatter_gain_max);
            c.synth.measurement_snr_db = number(y, "measurement_snr_db", c.synth.measurement_snr_db);
            c.synth.add_noise = boolean(y, "add_noise", c.synth.add_noise);
            c.blocks_per_region = integer(y, "blocks_per_region", c.blocks_per_region);
            c.start = number(y, "start", c.start);
            if (y.contains("duration") && !y.at("duration").is_null())
                c.duration = number(y, "duration", 0.0);

            const json &a = section(j, "analysis");
            c.analysis.block = integer(a, "block", c.analysis.block);
            c.analysis.nw = number(a, "nw", c.analysis.nw);
            c.analysis.time_tapers = integer(a, "time_tapers", c.analysis.time_tapers);
            c.analysis.freq_tapers = integer(a, "freq_tapers", c.analysis.freq_tapers);
            c.analysis.noise_db = number(a, "noise_db", c.analysis.noise_db);
            c.analysis.sensitivity_db = number(a, "sensitivity_db", c.analysis.sensitivity_db);

            const json &m = section(j, "mimo");
            c.mimo.tone = integer(m, "tone", -1);
            if (m.contains("ages_us"))
            {
                c.mimo.ages.clear();
                for (double us : numbers(m.at("ages_us"), "mimo.ages_us"))
                    c.mimo.ages.push_back(us * 1e-6);
            }
            c.mimo.noise_ratio = db_to_linear(number(m, "noise_ratio_db", kDefaultNoiseRatioDb));
            c.mimo.noise_model = parse_noise_model(text(m, "noise_model", "filtered"));
            c.mimo.regularization = number(m, "regularization", c.mimo.regularization);
            c.hardening_policy = parse_hardening_policy(text(m, "hardening_policy", "block_fixed"));
            c.hardening_block = integer(m, "hardening_block", c.hardening_block);
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(e.what());
        }
        catch (const json::exception &e)
        {
            throw ConfigError(e.what());
        }

        if (c.tones < 1 || c.tones % 2 == 0)
            throw ConfigError("sounding.tones must be odd and positive.");
        if (!(c.tone_spacing > 0.0) || !(c.repetition > 0.0) || !(c.carrier > 0.0))
            throw ConfigError("Tone spacing, repetition and carrier must be positive.");
        if (!(c.crest_target > 1.0) || c.crest_max_iter < 0)
            throw ConfigError("Crest-factor target must exceed 1 and the iteration budget be non-negative.");
        if (c.blocks_per_region < 0)
            throw ConfigError("synth.blocks_per_region cannot be negative.");
        if (!(c.start >= 0.0) || (c.duration && !(*c.duration > 0.0)))
            throw ConfigError("synth.start must be >= 0 and synth.duration > 0.");
        if (c.analysis.block < 2 || c.analysis.block % 2 != 0)
            throw ConfigError("analysis.block must be even and at least 2.");
        if (!(c.analysis.nw > 0.0) || c.analysis.time_tapers < 1 || c.analysis.freq_tapers < 1)
            throw ConfigError("analysis.nw must be positive and taper counts at least 1.");
        if (c.mimo.tone >= c.tones)
            throw ConfigError("mimo.tone must index one of the sounding tones.");
        for (double dt : c.mimo.ages)
            if (!(dt >= 0.0) || !(dt < c.repetition))
                throw ConfigError("mimo.ages_us entries must lie in [0, T_R).");
        if (!(c.mimo.regularization >= 0.0))
            throw ConfigError("mimo.regularization must be non-negative.");
        if (c.hardening_block < 2)
            throw ConfigError("mimo.hardening_block must be at least 2.");
        return c;
    }

    RunConfig load_run_config(const fs::path &path)
    {
        return parse_run_config(parse_file(path), path.parent_path());
    }

    Scene parse_scene(const json &j, ArrayConfig bs, double carrier)
    {
        if (!j.is_object())
            throw ConfigError("Scene description must be a JSON object.");
        Scene scene;
        scene.carrier_frequency = carrier;
        try
        {
            const json &arr = section(j, "array");
            if (bs == ArrayConfig::custom)
            {
                if (!arr.contains("positions"))
                    throw ConfigError("A custom array needs array.positions.");
                scene.layout = custom_layout(vec3_list(arr.at("positions"), "array.positions"),
                                             kSpeedOfLight / carrier);
            }
            else
            {
                const Vec3 origin = arr.contains("origin") ? vec3(arr.at("origin"), "array.origin")
                                                           : Vec3(0.0, 0.0, kBsHeight);
                const Vec3 dir = arr.contains("direction") ? vec3(arr.at("direction"), "array.direction")
                                                           : Vec3(-1.0, 0.0, 0.0);
                scene.layout = build_config(bs, carrier, origin, dir);
            }

            if (!j.contains("trajectory"))
                throw ConfigError("Scene needs a trajectory.");
            const json &t = section(j, "trajectory");
            if (!t.contains("mounts"))
                throw ConfigError("trajectory.mounts is required.");
            auto mounts = vec3_list(t.at("mounts"), "trajectory.mounts");
            if (t.contains("stationary"))
            {
                const json &st = section(t, "stationary");
                const Vec3 heading = st.contains("heading") ? vec3(st.at("heading"), "heading") : Vec3::UnitX();
                scene.trajectory = Trajectory::stationary(vec3(st.at("position"), "stationary.position"),
                                                          number(st, "duration", 1.0), std::move(mounts), heading);
            }
            else
            {
                auto wp = vec3_list(t.at("waypoints"), "trajectory.waypoints");
                std::vector<double> speeds;
                for (double v : numbers(t.at("speeds_kmh"), "trajectory.speeds_kmh"))
                    speeds.push_back(kmh_to_ms(v));
                SpeedLimits limits;
                if (t.contains("speed_limits_kmh"))
                {
                    const auto lim = numbers(t.at("speed_limits_kmh"), "trajectory.speed_limits_kmh");
                    if (lim.size() != 2)
                        throw ConfigError("trajectory.speed_limits_kmh needs two values.");
                    limits = {kmh_to_ms(lim[0]), kmh_to_ms(lim[1])};
                }
                double length = 0.0;
                for (std::size_t i = 1; i < wp.size(); ++i)
                    length += (wp[i] - wp[i - 1]).norm();
                std::vector<double> edges;
                if (t.contains("region_edges"))
                    edges = numbers(t.at("region_edges"), "trajectory.region_edges");
                else
                {
                    const Index R = integer(t, "regions", 8);
                    if (R < 1)
                        throw ConfigError("trajectory.regions must be positive.");
                    for (Index r = 0; r <= R; ++r)
                        edges.push_back(length * static_cast<double>(r) / static_cast<double>(R));
                }
                scene.trajectory = Trajectory(std::move(wp), std::move(speeds), std::move(edges), std::move(mounts),
                                              limits);
            }

            if (j.contains("blockers"))
                for (const auto &b : j.at("blockers"))
                    scene.blockers.push_back({vec3(b.at("lo"), "blocker.lo"), vec3(b.at("hi"), "blocker.hi")});
            if (j.contains("scatterers"))
                for (const auto &s : j.at("scatterers"))
                {
                    Scatterer sc;
                    sc.position = vec3(s.at("position"), "scatterer.position");
                    if (s.contains("gain"))
                    {
                        const json &g = s.at("gain");
                        if (g.is_number())
                            sc.gain = g.get<double>();
                        else if (g.is_array() && g.size() == 2)
                            sc.gain = {g[0].get<double>(), g[1].get<double>()};
                        else
                            throw ConfigError("scatterer.gain must be a number or [re, im].");
                    }
                    scene.scatterers.push_back(sc);
                }
            scene.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(e.what());
        }
        catch (const json::exception &e)
        {
            throw ConfigError(e.what());
        }
        return scene;
    }

    Scene load_scene(const fs::path &path, ArrayConfig bs, double carrier)
    {
        return parse_scene(parse_file(path), bs, carrier);
    }

    // ---------- Sidecar ----------

    fs::path meta_path(const fs::path &ctf)
    {
        fs::path p = ctf;
        p += ".meta.json";
        return p;
    }

    void write_meta(const RunMeta &meta, const fs::path &ctf)
    {
        json j;
        j["bs"] = meta.bs;
        j["seed"] = meta.seed;
        j["sounded"] = meta.sounded;
        j["scene"] = meta.scene;
        j["segments"] = json::array();
        for (const auto &s : meta.segments)
            j["segments"].push_back({{"first_snapshot", s.first_snapshot}, {"snapshots", s.snapshots}});
        std::ofstream out = open_out(meta_path(ctf));
        out << j.dump(2) << '\n';
    }

    RunMeta read_meta(const fs::path &ctf, Index snapshots)
    {
        RunMeta meta;
        const fs::path p = meta_path(ctf);
        if (!fs::exists(p))
        {
            meta.segments.push_back({0, snapshots});
            return meta;
        }
        json j;
        try
        {
            std::ifstream in(p);
            j = json::parse(in);
            meta.bs = j.value("bs", std::string("custom"));
            meta.seed = j.value("seed", std::uint64_t{1});
            meta.sounded = j.value("sounded", false);
            meta.scene = j.value("scene", json());
            Index total = 0;
            for (const auto &s : j.at("segments"))
            {
                Segment seg{s.at("first_snapshot").get<Index>(), s.at("snapshots").get<Index>()};
                if (seg.first_snapshot < 0 || seg.snapshots < 1)
                    throw DataError("Invalid segment in '" + p.string() + "'.");
                total += seg.snapshots;
                meta.segments.push_back(seg);
            }
            if (total != snapshots)
                throw DataError("Segments in '" + p.string() + "' do not cover the CTF snapshots.");
        }
        catch (const json::exception &e)
        {
            throw DataError("Malformed sidecar '" + p.string() + "': " + e.what());
        }
        return meta;
    }

    // ---------- CSV ----------

    std::string fmt(double v)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, end);
    }

    void write_waveform_csv(const fs::path &path, const Eigen::VectorXcd &x, double sample_period)
    {
        std::ofstream out = open_out(path);
        out << "n,t_s,re,im,abs\n";
        for (Index n = 0; n < x.size(); ++n)
            out << n << ',' << fmt(static_cast<double>(n) * sample_period) << ',' << fmt(x[n].real()) << ','
                << fmt(x[n].imag()) << ',' << fmt(std::abs(x[n])) << '\n';
    }

    void write_spreads_csv(const fs::path &path, const std::string &config, const std::vector<SpreadRow> &rows,
                           double repetition)
    {
        std::ofstream out = open_out(path);
        out << "config,a,k,l,first_snapshot,time_s,arc_m,region,valid,power,power_db,mean_delay_ns,rms_delay_ns,"
               "mean_doppler_hz,rms_doppler_hz,thr_power\n";
        for (const auto &r : rows)
        {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const auto &v = r.values;
            out << config << ',' << r.a << ',' << r.k << ',' << r.l << ',' << r.first_snapshot << ','
                << fmt(static_cast<double>(r.first_snapshot) * repetition) << ',' << fmt(r.arc) << ',' << r.region
                << ',' << (r.valid ? 1 : 0) << ',' << fmt(r.raw_power) << ','
                << fmt(r.raw_power > 0.0 ? linear_to_db(r.raw_power) : -std::numeric_limits<double>::infinity())
                << ',' << fmt(r.valid ? v.mean_delay * 1e9 : nan) << ',' << fmt(r.valid ? v.rms_delay * 1e9 : nan)
                << ',' << fmt(r.valid ? v.mean_doppler : nan) << ',' << fmt(r.valid ? v.rms_doppler : nan) << ','
                << fmt(r.valid ? v.power : nan) << '\n';
        }
    }

    void write_power_csv(const fs::path &path, const std::string &config, Index user, const PowerMetrics &pm)
    {
        std::ofstream out = open_out(path);
        out << "config,k,region,a,blocks,power,power_db,normalized,normalized_db\n";
        for (std::size_t s = 0; s < pm.regions.size(); ++s)
            for (Index a = 0; a < pm.average.rows(); ++a)
            {
                const Index c = static_cast<Index>(s);
                out << config << ',' << user << ',' << pm.regions[s] << ',' << a << ',' << pm.blocks[s] << ','
                    << fmt(pm.average(a, c)) << ',' << fmt(linear_to_db(pm.average(a, c))) << ','
                    << fmt(pm.normalized(a, c)) << ',' << fmt(linear_to_db(pm.normalized(a, c))) << '\n';
            }
    }

    void write_matrix_csv(const fs::path &path, const Eigen::MatrixXd &m)
    {
        std::ofstream out = open_out(path);
        out << "a";
        for (Index j = 0; j < m.cols(); ++j)
            out << ',' << j;
        out << '\n';
        for (Index i = 0; i < m.rows(); ++i)
        {
            out << i;
            for (Index j = 0; j < m.cols(); ++j)
                out << ',' << fmt(m(i, j));
            out << '\n';
        }
    }

    std::size_t CsvTable::column(const std::string &name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw DataError("Missing CSV column '" + name + "'.");
    }

    CsvTable read_csv(const fs::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw DataError("Cannot open '" + path.string() + "'.");
        auto split = [](const std::string &line)
        {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                cells.push_back(cell);
            if (!line.empty() && line.back() == ',')
                cells.emplace_back();
            return cells;
        };
        CsvTable t;
        std::string line;
        if (!std::getline(in, line))
            throw DataError("Empty CSV file '" + path.string() + "'.");
        t.header = split(line);
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            auto cells = split(line);
            if (cells.size() != t.header.size())
                throw DataError("Ragged CSV row in '" + path.string() + "'.");
            t.rows.push_back(std::move(cells));
        }
        return t;
    }
}
