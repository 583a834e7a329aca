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


#include "fpsa/perf.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace fpsa {

double BlockCosts::parts_latency_ns() const
{
    double t = 0.0;
    for (const auto &p : pe_parts)
        t += p.unit.latency_ns;
    return t;
}

double BlockCosts::parts_area_um2() const
{
    double a = 0.0;
    for (const auto &p : pe_parts)
        a += p.area_total_um2;
    return a;
}

double BlockCosts::parts_energy_pj() const
{
    double e = 0.0;
    for (const auto &p : pe_parts)
        e += p.energy_total_pj;
    return e;
}

void BlockCosts::check() const
{
    for (const BlockCost *b : {&pe, &clb, &smb})
        if (!(b->energy_pj > 0.0 && b->area_um2 > 0.0 && b->latency_ns > 0.0))
            throw ConfigError("block costs must be positive");
}

ReferencePE prime_reference() { return {"PRIME", 34802.204, 3064.7, 2.0 * 256 * 256}; }

ReferencePE fpsa_reference(const PEConfig &cfg, const BlockCosts &costs)
{
    return {"FPSA", costs.pe.area_um2, pe_window_ns(cfg, costs), 2.0 * cfg.rows * cfg.cols_logical()};
}

double pe_window_ns(const PEConfig &cfg, const BlockCosts &costs) { return double(cfg.gamma()) * costs.pe.latency_ns; }

double computation_bound(int64_t n_pe, const PEConfig &cfg, const BlockCosts &costs)
{
    if (n_pe <= 0)
        return 0.0;
    return double(n_pe) * 2.0 * cfg.rows * cfg.cols_logical() / (pe_window_ns(cfg, costs) * 1e-9);
}

Utilization utilization_bounds(const CoreOpGraph &gco, const WeightGroupTable &table, const PEConfig &cfg)
{
    Utilization u;
    u.spatial = spatial_fit(gco, cfg);
    int64_t pes = table.pes(), iters = table.max_iterations();
    if (pes > 0 && iters > 0)
        u.temporal = double(table.total_reuse()) / (double(iters) * double(pes));
    return u;
}

bool PerfReport::bounds_ordered() const
{
    const double eps = 1e-9;
    return achieved <= temporal_bound * (1 + eps) && temporal_bound <= spatial_bound * (1 + eps) &&
           spatial_bound <= peak_ops * (1 + eps);
}

PerfReport analyze(const CoreOpGraph &gco, const WeightGroupTable &table, const Schedule &sched, const Netlist &nl,
                   const CriticalPath *comm, const BlockCosts &costs, const PEConfig &cfg)
{
    costs.check();
    if (sched.start.size() != gco.coreops.size())
        throw ValidationError("", "schedule does not cover the core-op graph");
    PerfReport r;
    r.pes = nl.count(BlockKind::PE);
    r.smbs = nl.count(BlockKind::SMB);
    r.clbs = nl.count(BlockKind::CLB);

    for (const auto &op : gco.coreops) {
        const auto &wg = gco.groups[size_t(op.group)];
        r.ops_per_inference += 2.0 * double(wg.rows) * double(wg.cols);
    }

    const double t_pe = costs.pe.latency_ns;
    auto wire_ns = [&](int32_t st) {
        if (!comm || comm->per_stage.empty())
            return 0.0;
        return comm->per_stage[size_t(std::clamp<int32_t>(st, 0, int32_t(comm->per_stage.size()) - 1))];
    };

    std::map<int32_t, std::pair<int64_t, int64_t>> span; // stage -> [first start, last end]
    std::vector<double> busy(sched.pes.size(), 0.0);
    for (size_t v = 0; v < gco.coreops.size(); ++v) {
        int32_t st = sched.stage[v];
        auto it = span.find(st);
        if (it == span.end())
            span[st] = {sched.start[v], sched.end[v]};
        else {
            it->second.first = std::min(it->second.first, sched.start[v]);
            it->second.second = std::max(it->second.second, sched.end[v]);
        }
        busy[size_t(sched.pe_of[v])] += double(sched.end[v] - sched.start[v]) * std::max(t_pe, wire_ns(st));
    }

    double compute_total = 0.0, comm_total = 0.0, slowest = 0.0;
    for (const auto &[st, se] : span) {
        StageTime s;
        s.stage = st;
        s.cycles = se.second - se.first;
        s.compute_ns = double(s.cycles) * t_pe;
        s.comm_ns = double(s.cycles) * wire_ns(st);
        s.time_ns = std::max(s.compute_ns, s.comm_ns);
        compute_total += s.compute_ns;
        comm_total += s.comm_ns;
        r.latency_us += s.time_ns * 1e-3;
        slowest = std::max(slowest, s.time_ns);
        r.stages.push_back(s);
    }
    r.bottleneck_ns = std::max(slowest, busy.empty() ? 0.0 : *std::max_element(busy.begin(), busy.end()));
    r.throughput = r.bottleneck_ns > 0.0 ? 1e9 / r.bottleneck_ns : 0.0;
    r.comm_share = compute_total + comm_total > 0.0 ? comm_total / (compute_total + comm_total) : 0.0;

    // Routing is overlaid on the blocks and adds no area.
    double area_um2 = 0.0, energy_pj = 0.0;
    for (const auto &b : nl.blocks) {
        const BlockCost &c = b.kind == BlockKind::PE ? costs.pe : b.kind == BlockKind::SMB ? costs.smb : costs.clb;
        area_um2 += c.area_um2;
        energy_pj += c.energy_pj * double(b.active_cycles);
    }
    r.area_mm2 = area_um2 * 1e-6;
    r.energy_uj = energy_pj * 1e-6;

    auto u = utilization_bounds(gco, table, cfg);
    r.spatial_fraction = u.spatial;
    r.temporal_fraction = u.temporal;
    r.peak_ops = computation_bound(table.pes(), cfg, costs);
    r.spatial_bound = r.peak_ops * u.spatial;
    r.temporal_bound = r.spatial_bound * u.temporal;
    r.achieved = r.ops_per_inference * r.throughput;
    r.density = r.area_mm2 > 0.0 ? r.achieved / r.area_mm2 : 0.0;
    return r;
}

std::vector<SweepPoint> scalability_sweep(const CoreOpGraph &gco, const PEConfig &cfg, const ArchSpec &arch,
                                          const std::vector<int64_t> &duplications, const BlockCosts &costs,
                                          const SweepOptions &opt)
{
    const WeightGroupTable base = group_core_ops(gco);
    FabricModel fabric = build_fabric(arch);
    const int64_t budget = fabric.count_sites(site_kind_for(BlockKind::PE));

    int64_t anchor_reuse = 0;
    for (const auto &g : base.groups)
        anchor_reuse = std::max(anchor_reuse, g.reuse());

    std::vector<SweepPoint> out;
    for (int64_t dup : duplications) {
        SweepPoint pt;
        pt.duplication = dup;
        try {
            if (dup < 1)
                throw ConfigError("duplication must be >= 1");
            WeightGroupTable table = allocate(base, budget, dup);
            if (table.global_duplication() < std::min(dup, anchor_reuse))
                throw InfeasibleError("duplication " + std::to_string(dup) + " needs more than " +
                                      std::to_string(budget) + " PE sites");
            Schedule sched = schedule(gco, table, cfg.gamma(), opt.read_ports);
            auto viol = check_schedule(gco, sched);
            if (!viol.empty())
                throw InfeasibleError("schedule violates " + viol.front().formula + ": " + viol.front().message);
            Netlist nl = emit_netlist(gco, table, sched, cfg, opt.np);
            CriticalPath cp;
            if (opt.route) {
                Placement pl = place(nl, fabric, opt.place_seed, opt.sa);
                RoutedDesign rd = route(nl, pl, fabric, opt.rp);
                cp = critical_path(rd, nl);
            }
            pt.report = analyze(gco, table, sched, nl, opt.route ? &cp : nullptr, costs, cfg);
            pt.feasible = true;
        } catch (const Error &e) {
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepPoint> &pts)
{
    std::ostringstream os;
    os.precision(9);
    os << "duplication,area_mm2,peak,spatial,temporal,achieved\n";
    for (const auto &p : pts) {
        if (!p.feasible) {
            os << p.duplication << ",,,,,\n";
            continue;
        }
        const auto &r = p.report;
        os << p.duplication << ',' << r.area_mm2 << ',' << r.peak_ops << ',' << r.spatial_bound << ','
           << r.temporal_bound << ',' << r.achieved << '\n';
    }
    return os.str();
}

ChainTiming chain_timing(int stages, int64_t gamma, Transfer mode)
{
    if (stages < 1 || gamma < 1)
        throw ConfigError("chain needs at least one stage and gamma >= 1");
    ChainTiming c;
    int64_t s = 0, e = 0;
    for (int k = 0; k < stages; ++k) {
        if (k > 0) {
            // Trains: the consumer may start one cycle after its producer.
            // Counts: the consumer waits for the producer's whole window.
            s = mode == Transfer::Train ? s + 1 : s + gamma;
            e = std::max(s + gamma, mode == Transfer::Train ? e + 1 : e);
        } else {
            e = gamma;
        }
        c.start.push_back(s);
    }
    c.total_cycles = e;
    return c;
}

} // namespace fpsa
