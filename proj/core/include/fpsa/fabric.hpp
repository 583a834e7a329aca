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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpsa/mapper.hpp"

namespace fpsa {

// Island-style architecture description (plain key = value text).
struct ArchSpec
{
    std::string name = "fabric";
    int width = 0;
    int height = 0;
    std::vector<std::string> pattern; // rows of P/S/C/I/., tiled over the grid, top row first
    int channel_width = 0;
    int segment_length = 1;
    double fc = 0.5;
    int fs = 3;
    double d_sw = 0.1;   // ns per CB/SB switch
    double d_wire = 0.05; // ns per wire segment
    int in_pins = 16;
    int64_t smb_bits = 16384;
    int64_t clb_entries = 128;
    int smb_read_ports = 2;

    char tile(int x, int y) const; // y = 0 is the bottom row
};

ArchSpec parse_arch(const std::string &text);
ArchSpec load_arch(const std::string &path);
std::string arch_to_string(const ArchSpec &a);

enum class RRKind : uint8_t
{
    Opin,
    Ipin,
    ChanX,
    ChanY,
};

struct RRNode
{
    RRKind kind = RRKind::ChanX;
    int16_t x = 0;
    int16_t y = 0;
    int32_t index = 0; // track for wires, pin number for IPINs
    int32_t site = -1; // owning site for pins
    double delay = 0.0;
};

struct RREdge
{
    int32_t to = 0;
    double delay = 0.0;
};

struct Site
{
    int x = 0;
    int y = 0;
    char kind = '.';
    int32_t opin = -1;
    int32_t first_ipin = -1; // in_pins consecutive IPIN nodes
};

struct FabricModel
{
    ArchSpec arch;
    std::vector<Site> sites;
    std::vector<int32_t> site_at; // [y * width + x] -> site or -1
    std::vector<RRNode> nodes;
    std::vector<int64_t> edge_begin; // CSR offsets, size nodes + 1
    std::vector<RREdge> edges;
    int64_t sb_edges = 0;
    int64_t cb_edges = 0;

    int32_t chanx(int x, int y, int t) const;
    int32_t chany(int x, int y, int t) const;
    int64_t count_sites(char kind) const;
};

FabricModel build_fabric(const ArchSpec &arch);

// Every IPIN reachable from every OPIN.
bool fabric_connected(const FabricModel &f);

char site_kind_for(BlockKind k);

struct SAParams
{
    double t0 = 0.0;          // <= 0: derived from the spread of random move costs
    double alpha = 0.9;
    int64_t moves_per_temp = 0; // <= 0: 10 * blocks, at least 100
    double t_min = 1e-3;
    double quench_fraction = 0.1; // zero-temperature moves, fraction of all moves
};

struct Placement
{
    std::vector<int32_t> site_of; // per netlist block
    uint64_t seed = 0;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int64_t moves = 0;
    int64_t quench_moves = 0;
    int64_t quench_uphill_accepted = 0;
};

double net_hpwl(const Net &net, const Placement &p, const FabricModel &f);
double placement_cost(const Netlist &nl, const Placement &p, const FabricModel &f);

// Throws InfeasibleError with per-kind deficits when sites are missing.
Placement place(const Netlist &nl, const FabricModel &f, uint64_t seed, const SAParams &sa = {});

struct RouteParams
{
    bool congestion = true; // false: independent per-net shortest paths
    int max_iterations = 60;
    double pres_fac = 0.5;
    double pres_mult = 1.6;
    double hist_fac = 0.3;
};

struct RoutedNet
{
    int32_t net = 0;
    std::vector<int32_t> nodes;       // tree nodes, source first
    std::vector<int32_t> parent;      // per tree node, index into nodes or -1
    std::vector<int32_t> sink_blocks; // netlist sink blocks
    std::vector<int32_t> sink_nodes;  // IPIN reached per sink
    std::vector<double> sink_delay;   // ns, driver to sink
};

struct RoutedDesign
{
    std::vector<RoutedNet> nets;
    int iterations = 0;
    std::vector<int32_t> overuse; // nodes over capacity after the last iteration
};

RoutedDesign route(const Netlist &nl, const Placement &p, const FabricModel &f, const RouteParams &rp = {});

// Nodes used by more than one net.
std::vector<int32_t> shared_nodes(const RoutedDesign &r, const FabricModel &f);

struct CriticalPath
{
    double ns = 0.0;
    int32_t net = -1;
    std::vector<double> per_stage; // max sink delay of nets in each stage
};

CriticalPath critical_path(const RoutedDesign &r, const Netlist &nl);

} // namespace fpsa
