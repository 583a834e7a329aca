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

#include "fpsa/synthesizer.hpp"

namespace fpsa {

struct GroupEntry
{
    int32_t group = 0;
    std::vector<int32_t> members; // core-op ids, ascending
    int64_t duplication = 1;

    int64_t reuse() const { return int64_t(members.size()); }
    int64_t iterations() const { return ceil_div(reuse(), duplication); }
};

struct WeightGroupTable
{
    std::vector<GroupEntry> groups; // indexed by weight group id

    int64_t pes() const;
    int64_t max_iterations() const;
    int64_t total_reuse() const;
    // Duplication of the group with the largest reuse (lowest id on ties).
    int64_t global_duplication() const;
};

WeightGroupTable group_core_ops(const CoreOpGraph &gco);

// One PE per group, then extra PEs to the group with the most iterations.
// target_dup <= 0 means no duplication cap. Throws InfeasibleError when
// the budget cannot hold every group once.
WeightGroupTable allocate(WeightGroupTable table, int64_t pe_budget, int64_t target_dup);

struct PEInstance
{
    int32_t group = 0;
    int32_t copy = 0;
};

struct BufferedEdge
{
    int32_t from = 0;
    int32_t to = 0;
    int port = 0; // read port of the producer's buffer
    auto operator<=>(const BufferedEdge &) const = default;
};

struct Schedule
{
    int64_t gamma = 64;
    int read_ports = 2;
    std::vector<PEInstance> pes;
    std::vector<int32_t> pe_of; // per core-op
    std::vector<int64_t> start;
    std::vector<int64_t> end;
    std::vector<int32_t> stage;
    std::vector<BufferedEdge> buffered; // sorted by (from, to)

    const BufferedEdge *find_buffered(int32_t from, int32_t to) const;
    bool is_buffered(int32_t from, int32_t to) const { return find_buffered(from, to) != nullptr; }
    int32_t num_stages() const;
    int64_t makespan() const;
};

// Greedy list scheduling in topological order under the five timing
// constraint families. Core-ops of a group are bound round-robin to its PEs.
Schedule schedule(const CoreOpGraph &gco, const WeightGroupTable &table, int64_t gamma, int read_ports = 2);

struct Violation
{
    std::string formula; // RC, NBD, BD, BC, SW
    std::vector<int32_t> ops;
    std::vector<int64_t> values;
    std::string message;
};

std::vector<Violation> check_schedule(const CoreOpGraph &gco, const Schedule &sched);

enum class BlockKind
{
    PE,
    SMB,
    CLB,
};

const char *to_string(BlockKind k);

struct ControlEntry
{
    int64_t cycle = 0;
    std::string action; // reset, start-window, emit-window
    int port = -1;
    auto operator<=>(const ControlEntry &) const = default;
};

struct Block
{
    int32_t id = 0;
    BlockKind kind = BlockKind::PE;
    std::string name;
    int32_t pe_instance = -1;   // PE: schedule PE instance
    int32_t group = -1;         // PE: weight group held
    int32_t producer = -1;      // SMB: PE block whose outputs it buffers
    int64_t capacity_bits = 0;  // SMB
    int32_t clb = -1;           // controlling CLB block id (PE, SMB)
    std::vector<ControlEntry> control;
    std::vector<int32_t> controls; // CLB: blocks driven
    int32_t stage = 0;
    int64_t active_cycles = 0;
};

struct Net
{
    int32_t id = 0;
    std::string kind; // data, buffer, control
    int32_t driver = 0;
    std::vector<int32_t> sinks;
    int64_t width = 1;
    int32_t stage = 0;
};

struct NetlistParams
{
    int64_t smb_bits = 16384;
    int64_t clb_entries = 128;
};

struct Netlist
{
    std::vector<Block> blocks;
    std::vector<Net> nets;
    int32_t num_stages = 1;

    int64_t count(BlockKind k) const;
    int64_t count_nets(const std::string &kind) const;
};

Netlist emit_netlist(const CoreOpGraph &gco, const WeightGroupTable &table, const Schedule &sched,
                     const PEConfig &cfg, const NetlistParams &params = {});

} // namespace fpsa
