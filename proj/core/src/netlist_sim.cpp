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


#include "fpsa/netlist_sim.hpp"

#include <sstream>

namespace fpsa {

SimEngine sim_engine_from_string(const std::string &s)
{
    if (s == "window")
        return SimEngine::Window;
    if (s == "cycle")
        return SimEngine::Cycle;
    throw ConfigError("simulation engine must be window or cycle, got '" + s + "'");
}

const char *to_string(SimEngine e) { return e == SimEngine::Window ? "window" : "cycle"; }

PEWeights pe_weights(const WeightGroup &wg) { return {wg.rows, wg.cols, wg.weights, wg.divisor}; }

namespace {

void check_binding(const CoreOpGraph &gco, const Schedule &sched, const Netlist &nl, std::vector<int32_t> &block_of_pe)
{
    const size_t n = gco.coreops.size();
    if (sched.pe_of.size() != n || sched.start.size() != n || sched.end.size() != n)
        throw ValidationError("", "schedule does not cover the core-op graph");
    block_of_pe.assign(sched.pes.size(), -1);
    for (const auto &b : nl.blocks) {
        if (b.kind != BlockKind::PE)
            continue;
        if (b.pe_instance < 0 || size_t(b.pe_instance) >= sched.pes.size())
            throw ValidationError(b.name, "PE block refers to an unknown PE instance");
        if (sched.pes[size_t(b.pe_instance)].group != b.group)
            throw ValidationError(b.name, "PE block holds a different weight group than scheduled");
        block_of_pe[size_t(b.pe_instance)] = b.id;
    }
    std::vector<char> has_smb(nl.blocks.size(), 0);
    for (const auto &b : nl.blocks)
        if (b.kind == BlockKind::SMB && b.producer >= 0)
            has_smb[size_t(b.producer)] = 1;

    for (size_t v = 0; v < n; ++v) {
        const auto &op = gco.coreops[v];
        int32_t pe = sched.pe_of[v];
        if (pe < 0 || size_t(pe) >= sched.pes.size() || block_of_pe[size_t(pe)] < 0)
            throw ValidationError("coreop " + std::to_string(v), "no PE block executes this core-op");
        if (sched.pes[size_t(pe)].group != op.group)
            throw ValidationError("coreop " + std::to_string(v), "bound to a PE holding another weight group");
        if (sched.end[v] - sched.start[v] < gco.gamma)
            throw ValidationError("coreop " + std::to_string(v), "window shorter than the sampling window");
        for (int32_t u : gco.predecessors(int32_t(v))) {
            if (sched.is_buffered(u, int32_t(v))) {
                if (!has_smb[size_t(block_of_pe[size_t(sched.pe_of[size_t(u)])])])
                    throw ValidationError("coreop " + std::to_string(v),
                                          "buffered input from core-op " + std::to_string(u) + " has no SMB");
                if (sched.start[v] <= sched.end[size_t(u)])
                    throw ValidationError("coreop " + std::to_string(v), "starts before its buffered input is stored");
            } else if (sched.start[v] > sched.start[size_t(u)] + 1 || sched.end[v] < sched.end[size_t(u)] + 1) {
                throw ValidationError("coreop " + std::to_string(v),
                                      "window does not cover the train of core-op " + std::to_string(u));
            }
        }
    }
}

} // namespace

NetlistSimResult run_netlist_sim(const CoreOpGraph &gco, const Schedule &sched, const Netlist &nl,
                                 const CountMap &inputs, const NetlistSimOptions &opt)
{
    std::vector<int32_t> block_of_pe;
    check_binding(gco, sched, nl, block_of_pe);
    if (opt.variation && opt.engine != SimEngine::Window)
        throw ConfigError("weight variation is only supported by the window engine");
    std::vector<std::vector<double>> noisy(opt.variation ? sched.pes.size() : 0);
    if (opt.variation) {
        std::mt19937_64 rng(opt.variation_seed);
        for (size_t p = 0; p < sched.pes.size(); ++p)
            noisy[p] = perturb_weights(pe_weights(gco.groups[size_t(sched.pes[p].group)]), *opt.variation, rng);
    }

    std::vector<const std::vector<int64_t> *> in_vals;
    for (const auto &port : gco.inputs) {
        auto it = inputs.find(port.name);
        if (it == inputs.end())
            throw ValidationError(port.name, "missing input vector");
        if (int64_t(it->second.size()) != element_count(port.shape))
            throw ValidationError(port.name, "input vector has the wrong length");
        in_vals.push_back(&it->second);
    }

    const int64_t gamma = gco.gamma;
    const size_t n = gco.coreops.size();
    NetlistSimResult res;
    res.coreop_counts.resize(n);
    res.cycles = sched.makespan();
    // Cycle engine: output trains over each core-op's window, [col][cycle].
    std::vector<std::vector<std::vector<uint8_t>>> trains(opt.engine == SimEngine::Cycle ? n : 0);
    std::vector<char> stored(n, 0);
    std::ostringstream trace;

    auto count_of = [&](const RowSource &s) -> int64_t {
        switch (s.kind) {
        case RowSource::Kind::CoreOp:
            return res.coreop_counts[size_t(s.node)][size_t(s.index)];
        case RowSource::Kind::Input:
            return (*in_vals[size_t(s.node)])[size_t(s.index)];
        case RowSource::Kind::Const:
            return s.index;
        }
        return 0;
    };

    for (size_t v = 0; v < n; ++v) {
        const auto &op = gco.coreops[v];
        PEWeights w = pe_weights(gco.groups[size_t(op.group)]);
        for (const auto &s : op.rows)
            if (s.kind == RowSource::Kind::CoreOp && sched.is_buffered(s.node, int32_t(v))) {
                ++res.smb_reads;
                if (!stored[size_t(s.node)]) {
                    stored[size_t(s.node)] = 1;
                    res.smb_writes += gco.out_width(gco.coreops[size_t(s.node)]);
                }
            }

        if (opt.engine == SimEngine::Window) {
            std::vector<int64_t> x(op.rows.size());
            for (size_t r = 0; r < op.rows.size(); ++r)
                x[r] = count_of(op.rows[r]);
            res.coreop_counts[v] = opt.variation ? pe_oracle_perturbed(w, noisy[size_t(sched.pe_of[v])], x, gamma)
                                                 : pe_oracle(w, x, gamma);
            continue;
        }

        const int64_t s_v = sched.start[v], len = sched.end[v] - s_v;
        // Rows fed by a count (input, constant or SMB) get an evenly spaced
        // train from the window start; unbuffered rows see the producer's
        // spikes one cycle after they fire.
        std::vector<SpikeTrain> coded(op.rows.size());
        std::vector<char> live(op.rows.size(), 0);
        for (size_t r = 0; r < op.rows.size(); ++r) {
            const auto &s = op.rows[r];
            if (s.kind == RowSource::Kind::CoreOp && !sched.is_buffered(s.node, int32_t(v)))
                live[r] = 1;
            else
                coded[r] = encode_count(count_of(s), gamma);
        }
        IntegerPE pe(w);
        std::vector<uint8_t> spikes(op.rows.size()), out;
        auto &tr = trains[v];
        tr.assign(size_t(w.cols), std::vector<uint8_t>(size_t(len), 0));
        std::vector<int64_t> cnt(static_cast<size_t>(w.cols), 0);
        for (int64_t k = 0; k < len; ++k) {
            for (size_t r = 0; r < op.rows.size(); ++r) {
                if (!live[r]) {
                    spikes[r] = k < gamma ? coded[r].bits[size_t(k)] : 0;
                    continue;
                }
                const auto &s = op.rows[r];
                int64_t idx = s_v + k - 1 - sched.start[size_t(s.node)];
                const auto &src = trains[size_t(s.node)][size_t(s.index)];
                spikes[r] = idx >= 0 && idx < int64_t(src.size()) ? src[size_t(idx)] : 0;
            }
            pe.step(spikes, opt.mode, out);
            for (int64_t c = 0; c < w.cols; ++c) {
                tr[size_t(c)][size_t(k)] = out[size_t(c)];
                cnt[size_t(c)] += out[size_t(c)];
                if (opt.trace)
                    trace << block_of_pe[size_t(sched.pe_of[v])] << ',' << c << ',' << s_v + k << ','
                          << pe.acc[size_t(2 * c)] - pe.acc[size_t(2 * c + 1)] << ',' << int(out[size_t(c)]) << '\n';
            }
        }
        for (auto &c : cnt)
            c = clamp_count(c, gamma);
        res.coreop_counts[v] = std::move(cnt);
    }
    res.outputs = collect_outputs(gco, inputs, res.coreop_counts);
    if (opt.trace)
        res.trace_csv = "pe,column,cycle,U,spike\n" + trace.str();
    return res;
}

} // namespace fpsa
