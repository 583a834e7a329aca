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
#include <limits>
#include <map>
#include <set>

#include "fpsa/mapper.hpp"

namespace fpsa {

const char *to_string(BlockKind k)
{
    switch (k) {
    case BlockKind::PE:
        return "PE";
    case BlockKind::SMB:
        return "SMB";
    case BlockKind::CLB:
        return "CLB";
    }
    return "?";
}

int64_t Netlist::count(BlockKind k) const
{
    return std::count_if(blocks.begin(), blocks.end(), [&](const Block &b) { return b.kind == k; });
}

int64_t Netlist::count_nets(const std::string &kind) const
{
    return std::count_if(nets.begin(), nets.end(), [&](const Net &n) { return n.kind == kind; });
}

Netlist emit_netlist(const CoreOpGraph &gco, const WeightGroupTable &table, const Schedule &sched,
                     const PEConfig &cfg, const NetlistParams &params)
{
    auto violations = check_schedule(gco, sched);
    if (!violations.empty())
        throw ValidationError("", "refusing to emit a netlist for a schedule with " +
                                          std::to_string(violations.size()) + " violation(s), first " +
                                          violations[0].formula + ": " + violations[0].message);
    if (int64_t(sched.pes.size()) != table.pes())
        throw ValidationError("", "schedule and allocation disagree on the PE count");

    Netlist nl;
    nl.num_stages = std::max<int32_t>(1, sched.num_stages());
    const size_t n = gco.coreops.size();

    // PE blocks, one per allocated PE instance.
    std::vector<std::vector<int32_t>> ops_on(sched.pes.size());
    for (size_t v = 0; v < n; ++v)
        ops_on[size_t(sched.pe_of[v])].push_back(int32_t(v));
    for (size_t p = 0; p < sched.pes.size(); ++p) {
        Block b;
        b.id = int32_t(nl.blocks.size());
        b.kind = BlockKind::PE;
        b.pe_instance = int32_t(p);
        b.group = sched.pes[p].group;
        b.name = "pe" + std::to_string(p) + ":" + gco.groups[size_t(b.group)].id + "#" +
                 std::to_string(sched.pes[p].copy);
        b.stage = std::numeric_limits<int32_t>::max();
        for (int32_t v : ops_on[p]) {
            b.control.push_back({sched.start[size_t(v)], "reset", -1});
            b.control.push_back({sched.start[size_t(v)], "start-window", -1});
            b.active_cycles += sched.end[size_t(v)] - sched.start[size_t(v)];
            b.stage = std::min(b.stage, sched.stage[size_t(v)]);
        }
        if (ops_on[p].empty())
            b.stage = 0;
        std::sort(b.control.begin(), b.control.end());
        nl.blocks.push_back(std::move(b));
    }

    // SMB bundles, one per producer PE with buffered outputs.
    std::map<int32_t, std::vector<const BufferedEdge *>> by_pe;
    for (const auto &be : sched.buffered)
        by_pe[sched.pe_of[size_t(be.from)]].push_back(&be);
    std::map<int32_t, std::vector<int32_t>> smbs_of; // producer PE -> SMB block ids
    for (const auto &[pe, edges] : by_pe) {
        std::set<int32_t> producers;
        for (const auto *be : edges)
            producers.insert(be->from);
        int64_t bits = 0;
        for (int32_t u : producers)
            bits += gco.out_width(gco.coreops[size_t(u)]) * cfg.bits_io;
        int64_t count = std::max<int64_t>(1, ceil_div(bits, params.smb_bits));
        std::vector<ControlEntry> ctl;
        for (const auto *be : edges)
            ctl.push_back({sched.start[size_t(be->to)], "emit-window", be->port});
        std::sort(ctl.begin(), ctl.end());
        ctl.erase(std::unique(ctl.begin(), ctl.end()), ctl.end());
        for (int64_t k = 0; k < count; ++k) {
            Block b;
            b.id = int32_t(nl.blocks.size());
            b.kind = BlockKind::SMB;
            b.name = "smb" + std::to_string(pe) + "." + std::to_string(k);
            b.producer = pe;
            b.capacity_bits = std::min(params.smb_bits, bits - k * params.smb_bits);
            b.control = ctl;
            b.active_cycles = int64_t(ctl.size()) * sched.gamma;
            b.stage = nl.blocks[size_t(pe)].stage;
            smbs_of[pe].push_back(b.id);
            nl.blocks.push_back(std::move(b));
        }
    }

    // CLBs: control tables packed in block order, prefix position decides the CLB.
    int64_t entries = 0;
    for (const auto &b : nl.blocks)
        entries += int64_t(b.control.size());
    int64_t n_clb = std::max<int64_t>(1, ceil_div(entries, params.clb_entries));
    int32_t first_clb = int32_t(nl.blocks.size());
    int64_t pos = 0;
    const size_t controlled = nl.blocks.size();
    for (int64_t k = 0; k < n_clb; ++k) {
        Block b;
        b.id = int32_t(nl.blocks.size());
        b.kind = BlockKind::CLB;
        b.name = "clb" + std::to_string(k);
        b.stage = 0;
        nl.blocks.push_back(std::move(b));
    }
    for (size_t i = 0; i < controlled; ++i) {
        Block &b = nl.blocks[i];
        b.clb = first_clb + int32_t(std::min<int64_t>(pos / params.clb_entries, n_clb - 1));
        pos += int64_t(b.control.size());
        nl.blocks[size_t(b.clb)].controls.push_back(b.id);
    }
    int64_t span = sched.makespan();
    for (int64_t k = 0; k < n_clb; ++k)
        nl.blocks[size_t(first_clb + k)].active_cycles = span;

    // Data nets: producer PE -> direct consumer PEs and its SMBs.
    auto succ = gco.successors();
    for (size_t p = 0; p < sched.pes.size(); ++p) {
        std::set<int32_t> sinks;
        int64_t width = 0;
        for (int32_t u : ops_on[p]) {
            width = std::max(width, gco.out_width(gco.coreops[size_t(u)]));
            for (int32_t v : succ[size_t(u)])
                if (!sched.is_buffered(u, v))
                    sinks.insert(sched.pe_of[size_t(v)]);
        }
        auto it = smbs_of.find(int32_t(p));
        if (it != smbs_of.end())
            sinks.insert(it->second.begin(), it->second.end());
        sinks.erase(int32_t(p));
        if (sinks.empty())
            continue;
        nl.nets.push_back({int32_t(nl.nets.size()), "data", int32_t(p), {sinks.begin(), sinks.end()}, width,
                           nl.blocks[p].stage});
    }
    // Buffer nets: each SMB instance -> PEs reading the buffered values.
    for (const auto &[pe, edges] : by_pe) {
        std::set<int32_t> readers;
        int64_t width = 0;
        for (const auto *be : edges) {
            readers.insert(sched.pe_of[size_t(be->to)]);
            width = std::max(width, gco.out_width(gco.coreops[size_t(be->from)]));
        }
        for (int32_t smb : smbs_of[pe])
            nl.nets.push_back({int32_t(nl.nets.size()), "buffer", smb, {readers.begin(), readers.end()}, width,
                               nl.blocks[size_t(smb)].stage + 1});
    }
    // Control nets: one per CLB.
    for (int64_t k = 0; k < n_clb; ++k) {
        const Block &clb = nl.blocks[size_t(first_clb + k)];
        if (!clb.controls.empty())
            nl.nets.push_back({int32_t(nl.nets.size()), "control", clb.id, clb.controls, 1, 0});
    }
    return nl;
}

} // namespace fpsa
