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
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "fpsa/synthesizer.hpp"

namespace fpsa {
namespace {

PEConfig square256() { return PEConfig{256, 512, 8, 6, 2, 16}; }

ComputationalGraph fc_graph(int in, int out, std::vector<float> w, bool bias = false)
{
    ComputationalGraph g;
    g.name = "fc";
    g.inputs.push_back({"x", {in}, 8});
    TensorOp op;
    op.id = "fc";
    op.kind = OpKind::FullyConnected;
    op.attrs.out_features = out;
    op.inputs = {"x"};
    op.weights.shape = {out, in};
    op.weights.values = std::move(w);
    op.weights.has_bias = bias;
    if (bias)
        op.weights.bias.assign(size_t(out), 0.1f);
    g.nodes.push_back(op);
    return g;
}

ComputationalGraph pool_graph(Shape in_shape, int kh, int kw, int stride)
{
    ComputationalGraph g;
    g.name = "pool";
    g.inputs.push_back({"x", in_shape, 8});
    TensorOp op;
    op.id = "pool";
    op.kind = OpKind::MaxPool;
    op.attrs.kernel_h = kh;
    op.attrs.kernel_w = kw;
    op.attrs.stride = stride;
    op.inputs = {"x"};
    g.nodes.push_back(op);
    return g;
}

ComputationalGraph conv_graph(int hw, bool with_pool)
{
    ComputationalGraph g;
    g.name = "conv";
    g.inputs.push_back({"x", {2, hw, hw}, 8});
    TensorOp c;
    c.id = "conv";
    c.kind = OpKind::Conv2d;
    c.attrs = {3, 3, 1, 1, 4, 0};
    c.inputs = {"x"};
    c.weights.shape = {4, 2, 3, 3};
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (int i = 0; i < 4 * 2 * 9; ++i)
        c.weights.values.push_back(u(rng));
    g.nodes.push_back(c);
    TensorOp r;
    r.id = "relu";
    r.kind = OpKind::Relu;
    r.inputs = {"conv"};
    g.nodes.push_back(r);
    if (with_pool) {
        TensorOp p;
        p.id = "pool";
        p.kind = OpKind::MaxPool;
        p.attrs.kernel_h = 1;
        p.attrs.kernel_w = 1;
        p.attrs.stride = 1;
        p.inputs = {"relu"};
        g.nodes.push_back(p);
    }
    return g;
}

CoreOpGraph single_group(int64_t rows, int64_t cols)
{
    CoreOpGraph gco;
    WeightGroup wg;
    wg.id = "g0";
    wg.layer = "l";
    wg.rows = rows;
    wg.cols = cols;
    wg.weights.assign(size_t(rows * cols), 1);
    gco.groups.push_back(wg);
    CoreOp op;
    op.role = "mul";
    for (int64_t r = 0; r < rows; ++r)
        op.rows.push_back(RowSource::input(0, r));
    gco.coreops.push_back(op);
    gco.inputs.push_back({"x", {rows}});
    return gco;
}

TEST(Quantize, UnitRangeMapsToFullGrid)
{
    std::vector<float> w;
    for (int i = 0; i < 16; ++i)
        w.push_back(-1.0f + 2.0f * float(i) / 15.0f);
    auto q = quantize(fc_graph(4, 4, w), square256());
    const auto &ql = *q.nodes[0].quant;
    EXPECT_NEAR(ql.weight_scale, 1.0 / 127.0, 1e-12);
    EXPECT_EQ(*std::min_element(ql.weights.begin(), ql.weights.end()), -127);
    EXPECT_EQ(*std::max_element(ql.weights.begin(), ql.weights.end()), 127);
    ASSERT_TRUE(q.quant.has_value());
    EXPECT_EQ(q.quant->gamma, 64);
}

TEST(Quantize, ZeroTensorWarns)
{
    Diagnostics diag;
    auto q = quantize(fc_graph(3, 2, std::vector<float>(6, 0.0f)), square256(), &diag);
    const auto &ql = *q.nodes[0].quant;
    EXPECT_EQ(ql.weight_scale, 1.0);
    EXPECT_TRUE(std::all_of(ql.weights.begin(), ql.weights.end(), [](int32_t v) { return v == 0; }));
    ASSERT_FALSE(diag.warnings.empty());
    EXPECT_NE(diag.warnings.front().find("all-zero"), std::string::npos);
}

TEST(Quantize, RoundTripErrorWithinHalfStep)
{
    std::mt19937 rng(11);
    std::normal_distribution<float> n(0.0f, 0.4f);
    std::vector<float> w(64 * 32);
    for (auto &v : w)
        v = n(rng);
    auto q = quantize(fc_graph(64, 32, w), square256());
    const auto &ql = *q.nodes[0].quant;
    for (size_t i = 0; i < w.size(); ++i)
        EXPECT_LE(std::abs(double(ql.weights[i]) * ql.weight_scale - double(w[i])), ql.weight_scale / 2 + 1e-7);
}

TEST(Quantize, RejectsBadConfig)
{
    PEConfig odd{256, 511, 8, 6, 2, 16};
    EXPECT_THROW(odd.check(), ConfigError);
    PEConfig narrow{256, 512, 6, 6, 2, 16};
    EXPECT_THROW(narrow.check(), ConfigError);
    EXPECT_NO_THROW(square256().check());
}

TEST(DecomposeConstants, ReconstructsTotals)
{
    const int64_t G = 64, Q = 127;
    std::vector<int64_t> totals{0, 1, 63, 64, -65, 127 * 64, 127 * 64 + 5, -3 * 127 * 64 - 1};
    auto cr = decompose_constants(totals, G, Q);
    EXPECT_EQ(int(cr.counts.size()), const_rows_needed(totals, G, Q));
    for (size_t j = 0; j < totals.size(); ++j) {
        int64_t sum = 0;
        for (size_t r = 0; r < cr.counts.size(); ++r) {
            EXPECT_LE(std::abs(cr.weights[r][j]), Q);
            EXPECT_GE(cr.counts[r], 0);
            EXPECT_LE(cr.counts[r], G);
            sum += cr.counts[r] * cr.weights[r][j];
        }
        EXPECT_EQ(sum, totals[j]) << "column " << j;
    }
    EXPECT_EQ(const_rows_needed({0, 0}, G, Q), 0);
}

TEST(Lower, TwoElementMax)
{
    auto g = quantize(pool_graph({1, 1, 2}, 1, 2, 2), square256());
    auto gco = lower(g, square256());
    CountMap in{{"x", {5, 3}}};
    auto out = collect_outputs(gco, in, evaluate_coreops(gco, in));
    ASSERT_EQ(out.begin()->second.size(), 1u);
    EXPECT_EQ(out.begin()->second[0], 5);
    in["x"] = {3, 5};
    out = collect_outputs(gco, in, evaluate_coreops(gco, in));
    EXPECT_EQ(out.begin()->second[0], 5);
    EXPECT_EQ(verify_lowering(g, gco, 50, 2), 0);
}

TEST(Lower, UnitMaxPoolAddsNoCoreOps)
{
    auto cfg = square256();
    auto plain = lower(quantize(conv_graph(6, false), cfg), cfg);
    auto pooled = lower(quantize(conv_graph(6, true), cfg), cfg);
    EXPECT_EQ(plain.coreops.size(), pooled.coreops.size());
}

TEST(Lower, FcTilingOnFullSizeCrossbar)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> w(500 * 784);
    for (auto &v : w)
        v = u(rng);
    auto cfg = square256();
    auto g = quantize(fc_graph(784, 500, w, true), cfg);
    auto gco = lower(g, cfg);
    std::map<std::string, int> roles;
    for (const auto &op : gco.coreops)
        roles[op.role]++;
    EXPECT_EQ(roles["mul"], 8);
    // Four partials per output on one 256-row reducer: at most 64 outputs each.
    EXPECT_EQ(roles["reduce"], 8);
    EXPECT_NO_THROW(check_coreop_graph(gco, cfg));
    EXPECT_EQ(verify_lowering(g, gco, 3, 1), 0);
}

TEST(Lower, ConvGroupsIndependentOfSpatialExtent)
{
    auto cfg = square256();
    auto small = lower(quantize(conv_graph(4, false), cfg), cfg);
    auto large = lower(quantize(conv_graph(8, false), cfg), cfg);
    EXPECT_EQ(small.groups.size(), large.groups.size());
    EXPECT_EQ(small.coreops.size() * 4, large.coreops.size());
    std::map<int32_t, int> reuse;
    for (const auto &op : large.coreops)
        reuse[op.group]++;
    for (const auto &[g, n] : reuse)
        EXPECT_EQ(n, 64) << "group " << g;
}

TEST(Lower, EveryCoreOpFitsItsPE)
{
    PEConfig cfg{256, 128, 8, 6, 2, 16};
    for (const auto &name : {"toy-cnn", "lenet", "mlp-500-100"}) {
        auto gco = lower(quantize(builtin_model(name), cfg), cfg);
        EXPECT_NO_THROW(check_coreop_graph(gco, cfg)) << name;
        for (const auto &op : gco.coreops) {
            EXPECT_LE(gco.in_width(op), cfg.rows);
            EXPECT_LE(gco.out_width(op), cfg.cols_logical());
        }
    }
}

TEST(VerifyLowering, ToyCnnIsExact)
{
    PEConfig cfg{256, 128, 8, 6, 2, 16};
    auto g = quantize(builtin_model("toy-cnn"), cfg);
    EXPECT_EQ(verify_lowering(g, lower(g, cfg), 100, 1), 0);
}

TEST(VerifyLowering, LenetIsExact)
{
    PEConfig cfg{256, 128, 8, 6, 2, 16};
    auto g = quantize(builtin_model("lenet"), cfg);
    EXPECT_EQ(verify_lowering(g, lower(g, cfg), 20, 1), 0);
}

TEST(VerifyLowering, ScaledVgg17IsExact)
{
    PEConfig cfg{256, 128, 8, 6, 2, 16};
    auto g = quantize(builtin_model("vgg17-cifar", {0.125, 1, true}), cfg);
    EXPECT_EQ(verify_lowering(g, lower(g, cfg), 2, 1), 0);
}

TEST(VerifyLowering, SingleRelu)
{
    ComputationalGraph g;
    g.name = "relu";
    g.inputs.push_back({"x", {5}, 8});
    TensorOp r;
    r.id = "r";
    r.kind = OpKind::Relu;
    r.inputs = {"x"};
    g.nodes.push_back(r);
    auto cfg = square256();
    auto q = quantize(g, cfg);
    EXPECT_EQ(verify_lowering(q, lower(q, cfg), 10, 1), 0);
}

TEST(SpatialFit, PerfectAndWorstFit)
{
    auto cfg = square256();
    EXPECT_DOUBLE_EQ(spatial_fit(single_group(256, 256), cfg), 1.0);
    EXPECT_DOUBLE_EQ(spatial_fit(single_group(1, 1), cfg), 1.0 / 65536.0);
}

TEST(SpatialFit, LenetMatchesBruteForce)
{
    auto cfg = square256();
    auto gco = lower(quantize(builtin_model("lenet"), cfg), cfg);
    double cells = 0;
    for (const auto &op : gco.coreops)
        cells += double(gco.in_width(op)) * double(gco.out_width(op));
    double expect = cells / (double(gco.coreops.size()) * cfg.rows * cfg.cols_logical());
    double fit = spatial_fit(gco, cfg);
    EXPECT_GT(fit, 0.0);
    EXPECT_LT(fit, 1.0);
    EXPECT_NEAR(fit, expect, 1e-12);
}

TEST(RandomInputs, WithinWindowAndDeterministic)
{
    PEConfig cfg{256, 128, 8, 6, 2, 16};
    auto gco = lower(quantize(builtin_model("toy-cnn"), cfg), cfg);
    auto a = random_inputs(gco, 9);
    EXPECT_EQ(a, random_inputs(gco, 9));
    for (const auto &[name, v] : a)
        for (int64_t x : v) {
            EXPECT_GE(x, 0);
            EXPECT_LE(x, gco.gamma);
        }
}

} // namespace
} // namespace fpsa
