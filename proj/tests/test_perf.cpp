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


#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fpsa/fabric.hpp"
#include "fpsa/mapper.hpp"
#include "fpsa/model_ir.hpp"
#include "fpsa/perf.hpp"
#include "fpsa/synthesizer.hpp"

namespace fpsa {
namespace {

PEConfig desk_pe() { return PEConfig{256, 128, 8, 6, 2, 16}; }

CoreOpGraph lowered(const std::string &model, double scale = 1.0)
{
    auto cfg = desk_pe();
    return lower(quantize(builtin_model(model, {scale, 1, true}), cfg), cfg);
}

// Independent 4x4 core-ops: the first `big` share group 0, then one op per extra group.
CoreOpGraph fanout_graph(int big, int extra)
{
    CoreOpGraph gco;
    gco.inputs.push_back({"x", {4}});
    for (int g = 0; g <= extra; ++g) {
        WeightGroup wg;
        wg.id = wg.layer = "g" + std::to_string(g);
        wg.rows = wg.cols = 4;
        wg.weights.assign(16, 1);
        gco.groups.push_back(wg);
    }
    for (int i = 0; i < big + extra; ++i) {
        CoreOp op;
        op.id = i;
        op.group = i < big ? 0 : i - big + 1;
        op.role = "mul";
        for (int64_t r = 0; r < 4; ++r)
            op.rows.push_back(RowSource::input(0, r));
        gco.coreops.push_back(op);
    }
    OutputPort out{"y", {}};
    for (int i = 0; i < big + extra; ++i)
        out.elems.push_back(RowSource::coreop(i, 0));
    gco.outputs.push_back(out);
    return gco;
}

TEST(Costs, SubBlockSums)
{
    BlockCosts c;
    EXPECT_DOUBLE_EQ(c.parts_latency_ns(), 0.070 + 1.463 + 0.910);
    EXPECT_NEAR(c.parts_latency_ns(), c.pe.latency_ns, 1e-12);
    EXPECT_NEAR(c.parts_area_um2(), 22051.414, 1e-6);
    EXPECT_NEAR(c.parts_energy_pj(), 30.084, 1e-9);
    EXPECT_NE(c.parts_energy_pj(), c.pe.energy_pj);
    EXPECT_NO_THROW(c.check());
    c.smb.area_um2 = 0.0;
    EXPECT_THROW(c.check(), ConfigError);
}

TEST(Density, Golden)
{
    PEConfig cfg; // 256 x 256 logical, 6-bit activations
    BlockCosts costs;
    EXPECT_NEAR(pe_window_ns(cfg, costs), 156.352, 1e-9);
    EXPECT_NEAR(pe_window_ns(cfg, costs), 156.4, 0.001 * 156.4);
    auto fpsa = fpsa_reference(cfg, costs);
    auto prime = prime_reference();
    EXPECT_DOUBLE_EQ(fpsa.ops, 131072.0);
    double d_fpsa = fpsa.density_ops_per_mm2() / 1e12, d_prime = prime.density_ops_per_mm2() / 1e12;
    EXPECT_NEAR(d_fpsa, 38.0163, 1e-3);
    EXPECT_NEAR(d_fpsa, 38.004, 0.005 * 38.004);
    EXPECT_NEAR(d_prime, 1.2289, 1e-3);
    EXPECT_NEAR(d_prime, 1.229, 0.005 * 1.229);
    EXPECT_NEAR(d_fpsa / d_prime, 30.92, 0.01 * 30.92);
    EXPECT_NEAR(1.0 - fpsa.area_um2 / prime.area_um2, 0.3663, 0.001);
}

TEST(Bound, Computation)
{
    PEConfig cfg;
    BlockCosts costs;
    EXPECT_EQ(computation_bound(0, cfg, costs), 0.0);
    EXPECT_NEAR(computation_bound(1, cfg, costs) / 1e12, 0.8383, 1e-4);
    EXPECT_NEAR(computation_bound(10, cfg, costs), 10 * computation_bound(1, cfg, costs), 1e-3);
}

TEST(Bound, TemporalBalanced)
{
    auto gco = fanout_graph(1, 3);
    auto u = utilization_bounds(gco, group_core_ops(gco), desk_pe());
    EXPECT_DOUBLE_EQ(u.temporal, 1.0);
}

TEST(Bound, TemporalGrowsWithDuplication)
{
    auto gco = fanout_graph(100, 1);
    auto base = group_core_ops(gco);
    auto t1 = allocate(base, 100, 1), t4 = allocate(base, 100, 4);
    auto u1 = utilization_bounds(gco, t1, desk_pe()), u4 = utilization_bounds(gco, t4, desk_pe());
    EXPECT_DOUBLE_EQ(u1.temporal, 101.0 / 200.0);
    EXPECT_DOUBLE_EQ(u4.temporal, 101.0 / 125.0);
    // Temporal bound in OPS is the fraction times the peak, which scales with PEs.
    double b1 = u1.temporal * double(t1.pes()), b4 = u4.temporal * double(t4.pes());
    EXPECT_DOUBLE_EQ(b4 / b1, 4.0);
}

TEST(Bound, MlpSpatialEqualsTemporal)
{
    auto gco = lowered("mlp");
    auto table = group_core_ops(gco);
    auto u = utilization_bounds(gco, table, desk_pe());
    EXPECT_DOUBLE_EQ(u.temporal, 1.0);
    auto sched = schedule(gco, table, desk_pe().gamma());
    auto nl = emit_netlist(gco, table, sched, desk_pe());
    auto r = analyze(gco, table, sched, nl, nullptr, BlockCosts{}, desk_pe());
    EXPECT_DOUBLE_EQ(r.spatial_bound, r.temporal_bound);
    EXPECT_TRUE(r.bounds_ordered());
}

TEST(Analyze, SinglePeWithoutRouting)
{
    PEConfig cfg;
    CoreOpGraph gco;
    gco.gamma = cfg.gamma();
    gco.inputs.push_back({"x", {256}});
    WeightGroup wg;
    wg.id = wg.layer = "fc";
    wg.rows = wg.cols = 256;
    wg.weights.assign(256 * 256, 1);
    gco.groups.push_back(wg);
    CoreOp op;
    op.group = 0;
    op.role = "mul";
    for (int64_t r = 0; r < 256; ++r)
        op.rows.push_back(RowSource::input(0, r));
    gco.coreops.push_back(op);
    gco.outputs.push_back({"y", {RowSource::coreop(0, 0)}});

    auto table = group_core_ops(gco);
    auto sched = schedule(gco, table, cfg.gamma());
    Netlist nl; // a lone PE, no control logic
    Block pe;
    pe.kind = BlockKind::PE;
    pe.active_cycles = cfg.gamma();
    nl.blocks.push_back(pe);
    auto r = analyze(gco, table, sched, nl, nullptr, BlockCosts{}, cfg);
    EXPECT_NEAR(r.latency_us * 1e3, 156.352, 1e-9);
    EXPECT_NEAR(r.area_mm2, 0.02205, 1e-5);
    EXPECT_NEAR(r.throughput, 1e9 / 156.352, 1e-3);
    EXPECT_DOUBLE_EQ(r.peak_ops, computation_bound(1, cfg, BlockCosts{}));
    EXPECT_DOUBLE_EQ(r.achieved, r.peak_ops);
    EXPECT_NEAR(r.energy_uj, 64 * 29.094e-6, 1e-12);
    EXPECT_EQ(r.comm_share, 0.0);
    EXPECT_TRUE(r.bounds_ordered());
}

TEST(Analyze, SlowestStageSetsThroughput)
{
    // a -> b on distinct PEs through a buffer: one window per stage.
    auto gco = fanout_graph(0, 1);
    gco.coreops[0].group = 0;
    CoreOp b = gco.coreops[0];
    b.id = 1;
    b.group = 1;
    b.rows.clear();
    for (int64_t r = 0; r < 4; ++r)
        b.rows.push_back(RowSource::coreop(0, r));
    gco.coreops.push_back(b);
    gco.outputs[0].elems = {RowSource::coreop(1, 0)};
    auto cfg = desk_pe();
    auto table = group_core_ops(gco);

    Schedule sched;
    sched.gamma = cfg.gamma();
    sched.pes = {{0, 0}, {1, 0}};
    sched.pe_of = {0, 1};
    sched.start = {0, 65};
    sched.end = {64, 129};
    sched.stage = {0, 1};
    sched.buffered = {{0, 1, 0}};
    ASSERT_TRUE(check_schedule(gco, sched).empty());
    Netlist nl;
    for (int i = 0; i < 2; ++i) {
        Block pe;
        pe.id = i;
        pe.pe_instance = i;
        pe.stage = i;
        nl.blocks.push_back(pe);
    }

    auto plain = analyze(gco, table, sched, nl, nullptr, BlockCosts{}, cfg);
    ASSERT_EQ(plain.stages.size(), 2u);
    EXPECT_NEAR(plain.bottleneck_ns, 156.352, 1e-9);
    CriticalPath cp;
    cp.per_stage = {0.0, 700.0 / 64.0};
    auto r = analyze(gco, table, sched, nl, &cp, BlockCosts{}, cfg);
    EXPECT_NEAR(r.stages[0].time_ns, 156.352, 1e-9);
    EXPECT_NEAR(r.stages[1].time_ns, 700.0, 1e-9);
    EXPECT_NEAR(r.latency_us, (156.352 + 700.0) * 1e-3, 1e-12);
    EXPECT_NEAR(r.throughput, 1e9 / 700.0, 1e-6);
    EXPECT_GT(r.comm_share, 0.0);
    EXPECT_LT(r.achieved, plain.achieved);
    EXPECT_TRUE(r.bounds_ordered());
}

TEST(Analyze, LenetRoutedBoundsHoldAndDeterministic)
{
    auto cfg = desk_pe();
    auto gco = lowered("lenet");
    auto arch = load_arch(FPSA_SOURCE_DIR "/arch/desk.arch");
    auto run = [&] {
        auto table = allocate(group_core_ops(gco), 64, 1);
        auto sched = schedule(gco, table, cfg.gamma());
        auto nl = emit_netlist(gco, table, sched, cfg);
        auto fabric = build_fabric(arch);
        auto rd = route(nl, place(nl, fabric, 1, SAParams{}), fabric, RouteParams{});
        auto cp = critical_path(rd, nl);
        return analyze(gco, table, sched, nl, &cp, BlockCosts{}, cfg);
    };
    auto a = run(), b = run();
    EXPECT_TRUE(a.bounds_ordered());
    EXPECT_GT(a.achieved, 0.0);
    EXPECT_DOUBLE_EQ(a.density, a.achieved / a.area_mm2);
    EXPECT_EQ(a.achieved, b.achieved);
    EXPECT_EQ(a.latency_us, b.latency_us);
    EXPECT_EQ(a.energy_uj, b.energy_uj);
}

TEST(Sweep, ToyCnnSuperLinear)
{
    auto cfg = desk_pe();
    auto arch = load_arch(FPSA_SOURCE_DIR "/arch/desk.arch");
    auto pts = scalability_sweep(lowered("toy-cnn"), cfg, arch, {1, 2, 4}, BlockCosts{});
    ASSERT_EQ(pts.size(), 3u);
    for (const auto &p : pts) {
        ASSERT_TRUE(p.feasible) << p.error;
        EXPECT_TRUE(p.report.bounds_ordered()) << p.duplication;
    }
    double perf = pts[2].report.achieved / pts[0].report.achieved;
    double area = pts[2].report.area_mm2 / pts[0].report.area_mm2;
    EXPECT_GT(perf, area);

    std::istringstream in(sweep_csv(pts));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "duplication,area_mm2,peak,spatial,temporal,achieved");
    int rows = 0;
    while (std::getline(in, line))
        rows += !line.empty();
    EXPECT_EQ(rows, 3);
}

TEST(Sweep, InvalidPointReportedAndExcessDuplicationFlattens)
{
    auto arch = load_arch(FPSA_SOURCE_DIR "/arch/desk.arch");
    SweepOptions no_route;
    no_route.route = false;
    auto pts = scalability_sweep(lowered("toy-cnn"), desk_pe(), arch, {0, 1024, 100000}, BlockCosts{}, no_route);
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_FALSE(pts[0].feasible);
    EXPECT_FALSE(pts[0].error.empty());
    EXPECT_NE(sweep_csv(pts).find("\n0,,,,,"), std::string::npos);
    ASSERT_TRUE(pts[1].feasible && pts[2].feasible);
    EXPECT_EQ(pts[1].report.achieved, pts[2].report.achieved);
    EXPECT_LE(pts[2].report.achieved, pts[2].report.peak_ops);
}

TEST(Chain, TrainHopsOneCycleCountHopsWindow)
{
    for (int64_t g : {16, 64}) {
        auto train = chain_timing(3, g, Transfer::Train);
        auto count = chain_timing(3, g, Transfer::Count);
        EXPECT_EQ(train.start, (std::vector<int64_t>{0, 1, 2}));
        EXPECT_EQ(count.start, (std::vector<int64_t>{0, g, 2 * g}));
        EXPECT_EQ(train.total_cycles, g + 2);
        EXPECT_EQ(count.total_cycles, 3 * g);
        double hop_ratio = double(train.start[1] - train.start[0]) / double(count.start[1] - count.start[0]);
        EXPECT_DOUBLE_EQ(hop_ratio, 1.0 / double(g));
        // Growth past the first window: 2 cycles against 2 windows.
        double growth = double(train.total_cycles - g) / double(count.total_cycles - g);
        EXPECT_DOUBLE_EQ(growth, 1.0 / double(g));
        EXPECT_LE(growth, 1.0 / double(g) + 3.0 / double(g));
    }
    EXPECT_THROW(chain_timing(0, 64, Transfer::Train), ConfigError);
}

} // namespace
} // namespace fpsa
