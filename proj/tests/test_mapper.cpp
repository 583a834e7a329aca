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

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "fpsa/mapper.hpp"

namespace fpsa {
namespace {

constexpr int64_t kGamma = 64;

// Hand-built core-op graph: each entry is (group, producer list); producer -1
// is the graph input. Every group is rows x cols with identity-ish weights.
CoreOpGraph make_graph(int ngroups, const std::vector<std::pair<int, std::vector<int>>> &ops, int64_t width = 4)
{
    CoreOpGraph gco;
    gco.gamma = kGamma;
    for (int g = 0; g < ngroups; ++g) {
        WeightGroup wg;
        wg.id = "g" + std::to_string(g);
        wg.layer = wg.id;
        wg.rows = width;
        wg.cols = width;
        wg.weights.assign(size_t(width * width), 0);
        for (int64_t i = 0; i < width; ++i)
            wg.weights[size_t(i * width + i)] = 1;
        gco.groups.push_back(wg);
    }
    gco.inputs.push_back({"x", {width}});
    for (size_t i = 0; i < ops.size(); ++i) {
        CoreOp op;
        op.id = int32_t(i);
        op.group = ops[i].first;
        op.role = "mul";
        for (int64_t r = 0; r < width; ++r) {
            int src = ops[i].second[size_t(r) % ops[i].second.size()];
            op.rows.push_back(src < 0 ? RowSource::input(0, r) : RowSource::coreop(src, r));
        }
        gco.coreops.push_back(op);
    }
    OutputPort out{"y", {}};
    for (int64_t r = 0; r < width; ++r)
        out.elems.push_back(RowSource::coreop(int32_t(ops.size() - 1), r));
    gco.outputs.push_back(out);
    return gco;
}

WeightGroupTable reuse_table(const std::vector<int> &reuse)
{
    WeightGroupTable t;
    int32_t next = 0;
    for (size_t g = 0; g < reuse.size(); ++g) {
        GroupEntry e;
        e.group = int32_t(g);
        for (int i = 0; i < reuse[g]; ++i)
            e.members.push_back(next++);
        t.groups.push_back(e);
    }
    return t;
}

PEConfig desk_pe() { return PEConfig{256, 128, 8, 6, 2, 16}; }

CoreOpGraph lowered(const std::string &model, double scale = 1.0)
{
    auto cfg = desk_pe();
    return lower(quantize(builtin_model(model, {scale, 1, true}), cfg), cfg);
}

std::set<std::string> formulas(const std::vector<Violation> &v)
{
    std::set<std::string> s;
    for (const auto &x : v)
        s.insert(x.formula);
    return s;
}

TEST(Group, FcOnlyModelHasNoReuse)
{
    auto t = group_core_ops(lowered("mlp-500-100"));
    for (const auto &g : t.groups)
        EXPECT_EQ(g.reuse(), 1);
}

TEST(Group, ConvOver28x28)
{
    ComputationalGraph g;
    g.name = "c";
    g.inputs.push_back({"x", {1, 28, 28}, 8});
    TensorOp c;
    c.id = "conv";
    c.kind = OpKind::Conv2d;
    c.attrs = {3, 3, 1, 1, 4, 0};
    c.inputs = {"x"};
    c.weights.shape = {4, 1, 3, 3};
    c.weights.values.assign(36, 0.5f);
    g.nodes.push_back(c);
    auto cfg = desk_pe();
    auto t = group_core_ops(lower(quantize(g, cfg), cfg));
    ASSERT_EQ(t.groups.size(), 1u);
    EXPECT_EQ(t.groups[0].reuse(), 784);
}

TEST(Group, ToyCnnMatchesBruteForce)
{
    auto gco = lowered("toy-cnn");
    std::map<int32_t, std::vector<int32_t>> count;
    for (const auto &op : gco.coreops)
        count[op.group].push_back(op.id);
    auto t = group_core_ops(gco);
    ASSERT_EQ(t.groups.size(), gco.groups.size());
    for (const auto &g : t.groups)
        EXPECT_EQ(g.members, count[g.group]);
    EXPECT_EQ(t.total_reuse(), int64_t(gco.coreops.size()));
}

TEST(Allocate, UnitReuse)
{
    auto t = allocate(reuse_table({1, 1, 1}), 3, 0);
    for (const auto &g : t.groups) {
        EXPECT_EQ(g.duplication, 1);
        EXPECT_EQ(g.iterations(), 1);
    }
    EXPECT_EQ(t.pes(), 3);
}

TEST(Allocate, DominantGroupGetsTheSparePE)
{
    auto t = allocate(reuse_table({100, 1}), 3, 0);
    EXPECT_EQ(t.groups[0].duplication, 2);
    EXPECT_EQ(t.groups[1].duplication, 1);
    EXPECT_EQ(t.max_iterations(), 50);
}

TEST(Allocate, MatchesExhaustiveMinMax)
{
    std::vector<int> reuse{37, 12, 5, 1, 20};
    for (int64_t budget = 5; budget <= 14; ++budget) {
        int64_t best = INT64_MAX;
        // Exhaustive over duplication vectors with sum <= budget.
        std::vector<int64_t> d(reuse.size(), 1);
        std::function<void(size_t, int64_t)> rec = [&](size_t i, int64_t left) {
            if (i == reuse.size()) {
                int64_t m = 0;
                for (size_t k = 0; k < reuse.size(); ++k)
                    m = std::max(m, ceil_div(reuse[k], d[k]));
                best = std::min(best, m);
                return;
            }
            for (int64_t x = 1; x <= 1 + left; ++x) {
                d[i] = x;
                rec(i + 1, left - (x - 1));
            }
        };
        rec(0, budget - int64_t(reuse.size()));
        EXPECT_EQ(allocate(reuse_table(reuse), budget, 0).max_iterations(), best) << "budget " << budget;
    }
}

TEST(Allocate, Infeasible)
{
    EXPECT_THROW(allocate(reuse_table({4, 4, 4}), 2, 0), InfeasibleError);
}

TEST(Allocate, TargetDuplicationCapsAnchor)
{
    auto t = allocate(reuse_table({64, 16}), 1000, 4);
    EXPECT_EQ(t.global_duplication(), 4);
    EXPECT_EQ(t.groups[0].iterations(), 16);
}

TEST(Allocate, BudgetMonotone)
{
    auto base = group_core_ops(lowered("lenet"));
    int64_t n = int64_t(base.groups.size());
    int64_t prev = INT64_MAX;
    for (int64_t b = n; b < n + 60; ++b) {
        int64_t it = allocate(base, b, 0).max_iterations();
        EXPECT_LE(it, prev);
        prev = it;
    }
}

TEST(Allocate, DoublingDominantDuplicationHalvesIterations)
{
    auto t1 = allocate(reuse_table({784, 1}), 1000, 1);
    auto t2 = allocate(reuse_table({784, 1}), 1000, 2);
    auto t4 = allocate(reuse_table({784, 1}), 1000, 4);
    EXPECT_EQ(t1.groups[0].iterations(), 784);
    EXPECT_EQ(t2.groups[0].iterations(), 392);
    EXPECT_EQ(t4.groups[0].iterations(), 196);
}

TEST(Schedule, ChainOnDistinctPEs)
{
    auto gco = make_graph(2, {{0, {-1}}, {1, {0}}});
    auto table = allocate(group_core_ops(gco), 2, 0);
    auto s = schedule(gco, table, kGamma);
    EXPECT_NE(s.pe_of[0], s.pe_of[1]);
    EXPECT_EQ(s.start[1], s.start[0] + 1);
    EXPECT_EQ(s.end[1], s.end[0] + 1);
    EXPECT_FALSE(s.is_buffered(0, 1));
    EXPECT_TRUE(check_schedule(gco, s).empty());
}

TEST(Schedule, ChainOnSamePEIsBuffered)
{
    auto gco = make_graph(1, {{0, {-1}}, {0, {0}}});
    auto table = allocate(group_core_ops(gco), 1, 0);
    auto s = schedule(gco, table, kGamma);
    EXPECT_EQ(s.pe_of[0], s.pe_of[1]);
    EXPECT_TRUE(s.is_buffered(0, 1));
    EXPECT_GT(s.start[1], s.end[0]);
    EXPECT_TRUE(check_schedule(gco, s).empty());
}

TEST(Schedule, DiamondOnTwoPEs)
{
    auto gco = make_graph(2, {{0, {-1}}, {0, {0}}, {1, {0}}, {1, {1, 2}}});
    auto table = allocate(group_core_ops(gco), 2, 0);
    EXPECT_EQ(table.pes(), 2);
    auto s = schedule(gco, table, kGamma);
    auto v = check_schedule(gco, s);
    EXPECT_TRUE(v.empty()) << v.front().formula << ": " << v.front().message;
    for (size_t i = 0; i < 4; ++i)
        EXPECT_GE(s.end[i] - s.start[i], kGamma);
}

TEST(Schedule, WideFanOutClonesBufferPorts)
{
    // One producer read by five consumers on its own PE forces buffering.
    auto gco = make_graph(1, {{0, {-1}}, {0, {0}}, {0, {0}}, {0, {0}}, {0, {0}}, {0, {0}}});
    auto table = allocate(group_core_ops(gco), 1, 0);
    auto s = schedule(gco, table, kGamma, 2);
    EXPECT_TRUE(check_schedule(gco, s).empty());
    for (const auto &b : s.buffered)
        EXPECT_LT(b.port, 2);
}

TEST(Schedule, BuiltinModelsSatisfyAllConstraints)
{
    std::vector<std::pair<std::string, double>> models{
            {"toy-cnn", 1.0}, {"lenet", 1.0}, {"mlp-500-100", 1.0}, {"vgg17-cifar", 0.125}, {"vgg16", 0.0625}};
    for (const auto &[name, scale] : models) {
        auto gco = lowered(name, scale);
        auto base = group_core_ops(gco);
        for (int64_t dup : {1, 2, 4}) {
            auto table = allocate(base, 1 << 20, dup);
            auto s = schedule(gco, table, kGamma);
            auto v = check_schedule(gco, s);
            EXPECT_TRUE(v.empty()) << name << " dup " << dup << ": " << v.front().formula << " " << v.front().message;
        }
    }
}

TEST(Schedule, Deterministic)
{
    auto gco = lowered("lenet");
    auto table = allocate(group_core_ops(gco), 1 << 20, 2);
    auto a = schedule(gco, table, kGamma), b = schedule(gco, table, kGamma);
    EXPECT_EQ(a.start, b.start);
    EXPECT_EQ(a.end, b.end);
    EXPECT_EQ(a.pe_of, b.pe_of);
    EXPECT_EQ(a.buffered, b.buffered);
}

Schedule two_op_schedule()
{
    Schedule s;
    s.gamma = kGamma;
    s.pes = {{0, 0}, {1, 0}};
    s.pe_of = {0, 1};
    s.start = {0, 1};
    s.end = {64, 65};
    s.stage = {0, 0};
    return s;
}

TEST(CheckSchedule, ValidHandBuilt)
{
    auto gco = make_graph(2, {{0, {-1}}, {1, {0}}});
    EXPECT_TRUE(check_schedule(gco, two_op_schedule()).empty());
}

TEST(CheckSchedule, OverlapOnOnePE)
{
    auto gco = make_graph(2, {{0, {-1}}, {0, {-1}}});
    auto s = two_op_schedule();
    s.pes = {{0, 0}};
    s.pe_of = {0, 0};
    auto v = check_schedule(gco, s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].formula, "RC");
    EXPECT_EQ(v[0].ops, (std::vector<int32_t>{0, 1}));
}

TEST(CheckSchedule, WindowTooShort)
{
    auto gco = make_graph(2, {{0, {-1}}, {1, {0}}});
    auto s = two_op_schedule();
    s.end[1] = s.start[1] + kGamma - 1;
    auto f = formulas(check_schedule(gco, s));
    EXPECT_TRUE(f.count("SW"));
}

TEST(CheckSchedule, UnbufferedConsumerMustCoverProducer)
{
    auto gco = make_graph(2, {{0, {-1}}, {1, {0}}});
    auto s = two_op_schedule();
    s.start[1] = 5;
    s.end[1] = 69;
    EXPECT_TRUE(formulas(check_schedule(gco, s)).count("NBD"));
}

TEST(CheckSchedule, BufferedConsumerMustWait)
{
    auto gco = make_graph(2, {{0, {-1}}, {1, {0}}});
    auto s = two_op_schedule();
    s.buffered.push_back({0, 1, 0});
    EXPECT_TRUE(formulas(check_schedule(gco, s)).count("BD"));
    s.start[1] = 65;
    s.end[1] = 129;
    EXPECT_TRUE(check_schedule(gco, s).empty());
}

TEST(Netlist, TwoCoreOpsNoBuffers)
{
    auto gco = make_graph(2, {{0, {-1}}, {1, {0}}});
    auto table = allocate(group_core_ops(gco), 2, 0);
    auto s = schedule(gco, table, kGamma);
    auto nl = emit_netlist(gco, table, s, desk_pe());
    EXPECT_EQ(nl.count(BlockKind::PE), 2);
    EXPECT_EQ(nl.count(BlockKind::SMB), 0);
    EXPECT_EQ(nl.count(BlockKind::CLB), 1);
    EXPECT_EQ(nl.count_nets("data"), 1);
}

TEST(Netlist, SmbCapacityArithmetic)
{
    auto gco = make_graph(1, {{0, {-1}}, {0, {0}}}, 256);
    PEConfig cfg{256, 512, 8, 6, 2, 16};
    auto table = allocate(group_core_ops(gco), 1, 0);
    auto s = schedule(gco, table, kGamma);
    ASSERT_TRUE(s.is_buffered(0, 1));
    auto nl = emit_netlist(gco, table, s, cfg);
    EXPECT_EQ(nl.count(BlockKind::SMB), 1);
    for (const auto &b : nl.blocks)
        if (b.kind == BlockKind::SMB) {
            EXPECT_GE(b.capacity_bits, 256 * 6);
            EXPECT_LE(b.capacity_bits, 16384);
        }
}

TEST(Netlist, LenetBufferedEdgesCrossAnSmb)
{
    auto gco = lowered("lenet");
    auto table = allocate(group_core_ops(gco), 1 << 20, 1);
    auto s = schedule(gco, table, kGamma);
    auto nl = emit_netlist(gco, table, s, desk_pe());
    std::map<int32_t, int32_t> pe_block; // schedule PE instance -> block id
    std::map<int32_t, std::set<int32_t>> smbs_of; // producer PE block -> SMB ids
    for (const auto &b : nl.blocks) {
        if (b.kind == BlockKind::PE)
            pe_block[b.pe_instance] = b.id;
        if (b.kind == BlockKind::SMB)
            smbs_of[b.producer].insert(b.id);
    }
    ASSERT_FALSE(s.buffered.empty());
    for (const auto &e : s.buffered) {
        int32_t prod = pe_block.at(s.pe_of[size_t(e.from)]);
        int32_t cons = pe_block.at(s.pe_of[size_t(e.to)]);
        bool found = false;
        for (const auto &n : nl.nets)
            if (smbs_of[prod].count(n.driver) &&
                std::find(n.sinks.begin(), n.sinks.end(), cons) != n.sinks.end())
                found = true;
        EXPECT_TRUE(found) << "edge " << e.from << "->" << e.to;
    }
    for (const auto &b : nl.blocks) {
        if (b.kind != BlockKind::CLB) {
            EXPECT_GE(b.clb, 0) << b.name;
        }
    }
}

TEST(Netlist, RefusesInvalidSchedule)
{
    auto gco = make_graph(2, {{0, {-1}}, {1, {0}}});
    auto table = allocate(group_core_ops(gco), 2, 0);
    auto s = two_op_schedule();
    s.end[1] = 10;
    EXPECT_THROW(emit_netlist(gco, table, s, desk_pe()), ValidationError);
}

TEST(Netlist, DeterministicCounts)
{
    auto gco = lowered("toy-cnn");
    auto table = allocate(group_core_ops(gco), 1 << 20, 2);
    auto s = schedule(gco, table, kGamma);
    auto a = emit_netlist(gco, table, s, desk_pe()), b = emit_netlist(gco, table, s, desk_pe());
    EXPECT_EQ(a.blocks.size(), b.blocks.size());
    EXPECT_EQ(a.nets.size(), b.nets.size());
    EXPECT_EQ(a.count(BlockKind::CLB), b.count(BlockKind::CLB));
}

} // namespace
} // namespace fpsa
