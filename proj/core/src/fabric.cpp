/*
 * Copyright 2026 The FPSA Toolchain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "fpsa/fabric.hpp"

namespace fpsa {

namespace {

std::string trim(const std::string &s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string &key, const std::string &v)
{
    std::istringstream is(v);
    T out{};
    is >> out;
    if (!is || !is.eof())
        throw ParseError("arch: bad value for '" + key + "': '" + v + "'");
    return out;
}

} // namespace

char ArchSpec::tile(int x, int y) const
{
    int rows = int(pattern.size());
    int r = ((height - 1 - y) % rows + rows) % rows;
    const std::string &row = pattern[size_t(r)];
    return row[size_t(x % int(row.size()))];
}

ArchSpec parse_arch(const std::string &text)
{
    ArchSpec a;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool have_grid = false, have_ch = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("arch line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key == "name") {
            a.name = val;
        } else if (key == "grid") {
            auto x = val.find('x');
            if (x == std::string::npos)
                throw ParseError("arch: grid must be WxH");
            a.width = parse_number<int>(key, trim(val.substr(0, x)));
            a.height = parse_number<int>(key, trim(val.substr(x + 1)));
            have_grid = true;
        } else if (key == "row") {
            a.pattern.push_back(val);
        } else if (key == "channel_width" || key == "Ch") {
            a.channel_width = parse_number<int>(key, val);
            have_ch = true;
        } else if (key == "segment_length") {
            a.segment_length = parse_number<int>(key, val);
        } else if (key == "fc" || key == "Fc") {
            a.fc = parse_number<double>(key, val);
        } else if (key == "fs" || key == "Fs") {
            a.fs = parse_number<int>(key, val);
        } else if (key == "d_sw") {
            a.d_sw = parse_number<double>(key, val);
        } else if (key == "d_wire") {
            a.d_wire = parse_number<double>(key, val);
        } else if (key == "in_pins") {
            a.in_pins = parse_number<int>(key, val);
        } else if (key == "smb_bits") {
            a.smb_bits = parse_number<int64_t>(key, val);
        } else if (key == "clb_entries") {
            a.clb_entries = parse_number<int64_t>(key, val);
        } else if (key == "smb_read_ports") {
            a.smb_read_ports = parse_number<int>(key, val);
        } else {
            throw ParseError("arch line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (!have_grid || a.width < 1 || a.height < 1)
        throw ParseError("arch: grid = WxH with W, H >= 1 is required");
    if (!have_ch || a.channel_width < 1)
        throw ParseError("arch: channel width must be >= 1");
    if (a.pattern.empty())
        throw ParseError("arch: at least one row pattern is required");
    for (const auto &r : a.pattern) {
        if (r.empty() || r.size() != a.pattern[0].size())
            throw ParseError("arch: pattern rows must be non-empty and equally long");
        for (char c : r)
            if (std::string("PSCI.").find(c) == std::string::npos)
                throw ParseError(std::string("arch: unknown tile letter '") + c + "'");
    }
    if (a.segment_length != 1)
        throw ParseError("arch: only segment_length = 1 is modeled");
    if (a.fs != 3)
        throw ParseError("arch: only the disjoint switch box with Fs = 3 is modeled");
    if (!(a.fc > 0.0 && a.fc <= 1.0))
        throw ParseError("arch: Fc must be in (0, 1]");
    if (a.in_pins < 1 || a.d_sw < 0.0 || a.d_wire < 0.0 || a.smb_bits < 1 || a.clb_entries < 1 ||
        a.smb_read_ports < 1)
        throw ParseError("arch: in_pins, capacities and ports must be positive and delays non-negative");
    return a;
}

ArchSpec load_arch(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open arch file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_arch(ss.str());
}

std::string arch_to_string(const ArchSpec &a)
{
    std::ostringstream os;
    os << "name = " << a.name << "\ngrid = " << a.width << "x" << a.height << "\n";
    for (const auto &r : a.pattern)
        os << "row = " << r << "\n";
    os << "channel_width = " << a.channel_width << "\nsegment_length = " << a.segment_length << "\nfc = " << a.fc
       << "\nfs = " << a.fs << "\nd_sw = " << a.d_sw << "\nd_wire = " << a.d_wire << "\nin_pins = " << a.in_pins
       << "\nsmb_bits = " << a.smb_bits << "\nclb_entries = " << a.clb_entries
       << "\nsmb_read_ports = " << a.smb_read_ports << "\n";
    return os.str();
}

int32_t FabricModel::chanx(int x, int y, int t) const
{
    return int32_t((int64_t(y) * arch.width + x) * arch.channel_width + t);
}

int32_t FabricModel::chany(int x, int y, int t) const
{
    int64_t base = int64_t(arch.width) * (arch.height + 1) * arch.channel_width;
    return int32_t(base + (int64_t(y) * (arch.width + 1) + x) * arch.channel_width + t);
}

int64_t FabricModel::count_sites(char kind) const
{
    return std::count_if(sites.begin(), sites.end(), [&](const Site &s) { return s.kind == kind; });
}

FabricModel build_fabric(const ArchSpec &arch)
{
    FabricModel f;
    f.arch = arch;
    const int W = arch.width, H = arch.height, Ch = arch.channel_width;
    if (Ch < 1)
        throw ParseError("arch: channel width must be >= 1");

    for (int y = 0; y <= H; ++y)
        for (int x = 0; x < W; ++x)
            for (int t = 0; t < Ch; ++t)
                f.nodes.push_back({RRKind::ChanX, int16_t(x), int16_t(y), t, -1, arch.d_wire});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x <= W; ++x)
            for (int t = 0; t < Ch; ++t)
                f.nodes.push_back({RRKind::ChanY, int16_t(x), int16_t(y), t, -1, arch.d_wire});

    f.site_at.assign(size_t(W * H), -1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            char k = arch.tile(x, y);
            if (k == '.')
                continue;
            Site s{x, y, k, int32_t(f.nodes.size()), -1};
            int32_t sid = int32_t(f.sites.size());
            f.nodes.push_back({RRKind::Opin, int16_t(x), int16_t(y), 0, sid, 0.0});
            s.first_ipin = int32_t(f.nodes.size());
            for (int p = 0; p < arch.in_pins; ++p)
                f.nodes.push_back({RRKind::Ipin, int16_t(x), int16_t(y), p, sid, 0.0});
            f.site_at[size_t(y * W + x)] = sid;
            f.sites.push_back(s);
        }

    std::vector<std::vector<RREdge>> adj(f.nodes.size());
    const int nfc = std::max(1, int(std::ceil(arch.fc * Ch - 1e-9)));
    for (const auto &s : f.sites) {
        int32_t side_wire[4][2] = {{s.x, s.y}, {s.x, s.y + 1}, {s.x, s.y}, {s.x + 1, s.y}};
        auto wire = [&](int side, int t) {
            return side < 2 ? f.chanx(side_wire[side][0], side_wire[side][1], t)
                            : f.chany(side_wire[side][0], side_wire[side][1], t);
        };
        // Connection offsets are staggered per side and per pin group so
        // that, with a disjoint switch box, every track class is reachable.
        for (int side = 0; side < 4; ++side)
            for (int j = 0; j < nfc; ++j) {
                adj[size_t(s.opin)].push_back({wire(side, (j * Ch / nfc + side) % Ch), arch.d_sw});
                f.cb_edges++;
            }
        for (int p = 0; p < arch.in_pins; ++p)
            for (int j = 0; j < nfc; ++j) {
                int t = (j * Ch / nfc + p / 4) % Ch;
                adj[size_t(wire(p % 4, t))].push_back({s.first_ipin + p, arch.d_sw});
                f.cb_edges++;
            }
    }
    // Disjoint switch boxes: track t meets only track t on the other sides.
    for (int y = 0; y <= H; ++y)
        for (int x = 0; x <= W; ++x)
            for (int t = 0; t < Ch; ++t) {
                int32_t side[4];
                int k = 0;
                if (x > 0)
                    side[k++] = f.chanx(x - 1, y, t);
                if (x < W)
                    side[k++] = f.chanx(x, y, t);
                if (y > 0)
                    side[k++] = f.chany(x, y - 1, t);
                if (y < H)
                    side[k++] = f.chany(x, y, t);
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b)
                        if (a != b) {
                            adj[size_t(side[a])].push_back({side[b], arch.d_sw});
                            f.sb_edges++;
                        }
            }

    f.edge_begin.assign(f.nodes.size() + 1, 0);
    for (size_t i = 0; i < adj.size(); ++i)
        f.edge_begin[i + 1] = f.edge_begin[i] + int64_t(adj[i].size());
    f.edges.reserve(size_t(f.edge_begin.back()));
    for (auto &a : adj)
        f.edges.insert(f.edges.end(), a.begin(), a.end());
    return f;
}

bool fabric_connected(const FabricModel &f)
{
    if (f.sites.empty())
        return true;
    std::vector<char> seen(f.nodes.size(), 0);
    std::queue<int32_t> q;
    q.push(f.sites[0].opin);
    seen[size_t(f.sites[0].opin)] = 1;
    while (!q.empty()) {
        int32_t n = q.front();
        q.pop();
        for (int64_t e = f.edge_begin[size_t(n)]; e < f.edge_begin[size_t(n) + 1]; ++e) {
            int32_t m = f.edges[size_t(e)].to;
            if (!seen[size_t(m)]) {
                seen[size_t(m)] = 1;
                q.push(m);
            }
        }
    }
    for (const auto &s : f.sites) {
        for (int p = 0; p < f.arch.in_pins; ++p)
            if (!seen[size_t(s.first_ipin + p)])
                return false;
        bool out = false;
        for (int64_t e = f.edge_begin[size_t(s.opin)]; e < f.edge_begin[size_t(s.opin) + 1]; ++e)
            out |= bool(seen[size_t(f.edges[size_t(e)].to)]);
        if (!out)
            return false;
    }
    return true;
}

char site_kind_for(BlockKind k)
{
    switch (k) {
    case BlockKind::PE:
        return 'P';
    case BlockKind::SMB:
        return 'S';
    case BlockKind::CLB:
        return 'C';
    }
    return '.';
}

} // namespace fpsa
