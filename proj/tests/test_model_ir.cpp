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
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "fpsa/model_ir.hpp"

namespace fpsa {
namespace {

ComputationalGraph single_fc(int in, int out, bool bias)
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
    op.weights.values.assign(size_t(out * in), 0.5f);
    op.weights.has_bias = bias;
    if (bias)
        op.weights.bias.assign(size_t(out), 0.25f);
    g.nodes.push_back(op);
    return g;
}

std::filesystem::path temp_dir(const std::string &tag)
{
    auto p = std::filesystem::temp_directory_path() / ("fpsa_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

TEST(GraphStats, SingleFcWithBias)
{
    auto st = graph_stats(single_fc(10, 10, true));
    EXPECT_EQ(st.weight_count, 110);
    EXPECT_EQ(st.op_count, 200);
}

TEST(GraphStats, FractionsSumToOne)
{
    for (const auto &name : builtin_model_names()) {
        auto st = graph_stats(builtin_model(name, {1.0, 1, false}));
        double w = 0, o = 0;
        for (const auto &l : st.layers) {
            w += l.weight_fraction;
            o += l.op_fraction;
        }
        EXPECT_NEAR(w, 1.0, 1e-9) << name;
        EXPECT_NEAR(o, 1.0, 1e-9) << name;
    }
}

TEST(GraphStats, InvariantUnderNodeReordering)
{
    auto g = builtin_model("lenet", {1.0, 1, false});
    auto ref = graph_stats(g);
    std::reverse(g.nodes.begin(), g.nodes.end());
    auto st = graph_stats(g);
    EXPECT_EQ(st.weight_count, ref.weight_count);
    EXPECT_EQ(st.op_count, ref.op_count);
}

TEST(BuiltinModel, MlpWeightCount)
{
    EXPECT_EQ(graph_stats(builtin_model("mlp-500-100")).weight_count, 443610);
}

TEST(BuiltinModel, Vgg16Totals)
{
    auto st = graph_stats(builtin_model("vgg16", {1.0, 1, false}));
    EXPECT_NEAR(double(st.weight_count), 138.3e6, 138.3e6 * 0.005);
    EXPECT_NEAR(double(st.op_count), 30.9e9, 30.9e9 * 0.02);
}

TEST(BuiltinModel, Vgg16LayerShares)
{
    auto st = graph_stats(builtin_model("vgg16", {1.0, 1, false}));
    double conv1_w = 0, conv1_o = 0, fc_w = 0, fc_o = 0;
    for (const auto &l : st.layers) {
        if (l.id == "conv1_1" || l.id == "conv1_2") {
            conv1_w += l.weight_fraction;
            conv1_o += l.op_fraction;
        }
        if (l.id.rfind("fc", 0) == 0) {
            fc_w += l.weight_fraction;
            fc_o += l.op_fraction;
        }
    }
    EXPECT_NEAR(conv1_w * 100, 0.028, 0.005);
    EXPECT_NEAR(conv1_o * 100, 12.5, 1.0);
    EXPECT_NEAR(fc_w * 100, 89.3, 1.0);
    EXPECT_NEAR(fc_o * 100, 0.8, 0.3);
}

TEST(BuiltinModel, ToyCnnIsSmall)
{
    auto g = builtin_model("toy-cnn");
    EXPECT_EQ(g.nodes.front().kind, OpKind::Conv2d);
    auto shapes = infer_shapes(g);
    EXPECT_EQ(shapes.at(g.output_ids().front()), (Shape{10}));
}

TEST(BuiltinModel, Errors)
{
    EXPECT_THROW(builtin_model("resnet"), ConfigError);
    EXPECT_THROW(builtin_model("lenet", {0.0}), ConfigError);
    EXPECT_THROW(builtin_model("lenet", {0.01}), ConfigError);
}

TEST(BuiltinModel, ScaleShrinksChannels)
{
    auto full = graph_stats(builtin_model("vgg17-cifar", {1.0, 1, false}));
    auto quarter = graph_stats(builtin_model("vgg17-cifar", {0.25, 1, false}));
    EXPECT_LT(quarter.weight_count, full.weight_count / 8);
}

TEST(Validate, CycleNamesTheNodes)
{
    auto g = single_fc(4, 4, false);
    TensorOp r;
    r.id = "r";
    r.kind = OpKind::Relu;
    r.inputs = {"fc"};
    g.nodes.push_back(r);
    g.nodes[0].inputs = {"r"};
    try {
        validate(g);
        FAIL() << "cycle not detected";
    } catch (const ValidationError &e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("cycle detected"), std::string::npos) << msg;
        EXPECT_NE(msg.find("fc"), std::string::npos) << msg;
        EXPECT_NE(msg.find("r"), std::string::npos) << msg;
    }
}

TEST(Validate, WeightShapeMismatch)
{
    auto g = single_fc(4, 3, false);
    g.nodes[0].weights.shape = {3, 5};
    EXPECT_THROW(validate(g), ValidationError);
}

TEST(Validate, UnknownInput)
{
    auto g = single_fc(4, 3, false);
    g.nodes[0].inputs = {"nope"};
    EXPECT_THROW(validate(g), ValidationError);
}

TEST(Validate, WeightsOnlyOnWeightedKinds)
{
    auto g = single_fc(4, 3, false);
    TensorOp r;
    r.id = "r";
    r.kind = OpKind::Relu;
    r.inputs = {"fc"};
    r.weights.shape = {3, 3};
    g.nodes.push_back(r);
    EXPECT_THROW(validate(g), ValidationError);
}

TEST(TopologicalOrder, DependenciesFirst)
{
    auto g = builtin_model("lenet", {1.0, 1, false});
    std::reverse(g.nodes.begin(), g.nodes.end());
    auto order = topological_order(g);
    std::map<std::string, size_t> pos;
    for (size_t i = 0; i < order.size(); ++i)
        pos[g.nodes[order[i]].id] = i;
    for (const auto &op : g.nodes)
        for (const auto &in : op.inputs)
            if (pos.count(in)) {
                EXPECT_LT(pos[in], pos[op.id]);
            }
}

TEST(ModelIo, SingleLayerRoundTrip)
{
    auto dir = temp_dir("io1");
    auto path = (dir / "fc.json").string();
    save_model(single_fc(6, 2, true), path);
    auto g = load_model(path);
    ASSERT_EQ(g.nodes.size(), 1u);
    EXPECT_EQ(g.nodes[0].weights.shape, (Shape{2, 6}));
    EXPECT_EQ(infer_shapes(g).at("fc"), (Shape{2}));
    EXPECT_EQ(g.nodes[0].weights.bias, std::vector<float>(2, 0.25f));
}

TEST(ModelIo, LenetRoundTripIsIdentity)
{
    auto dir = temp_dir("io2");
    auto path = (dir / "lenet.json").string();
    auto g = builtin_model("lenet");
    save_model(g, path);
    auto h = load_model(path);
    ASSERT_EQ(g.nodes.size(), h.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        EXPECT_EQ(g.nodes[i].id, h.nodes[i].id);
        EXPECT_EQ(g.nodes[i].kind, h.nodes[i].kind);
        EXPECT_EQ(g.nodes[i].inputs, h.nodes[i].inputs);
        EXPECT_EQ(g.nodes[i].weights.shape, h.nodes[i].weights.shape);
        EXPECT_EQ(g.nodes[i].weights.values, h.nodes[i].weights.values);
        EXPECT_EQ(g.nodes[i].weights.bias, h.nodes[i].weights.bias);
    }
    auto path2 = (dir / "lenet2.json").string();
    save_model(h, path2);
    auto slurp = [](const std::string &p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(path + ".weights.bin"), slurp(path2 + ".weights.bin"));
}

TEST(ModelIo, CyclicFileIsRejected)
{
    auto dir = temp_dir("io3");
    auto path = dir / "cyc.json";
    std::ofstream(path) << R"({"name":"c","inputs":[{"name":"x","shape":[4],"bits":8}],
        "nodes":[{"id":"a","kind":"relu"},{"id":"b","kind":"relu"}],
        "edges":[["x",0,"a",0],["a",0,"b",0],["b",0,"a",0]]})";
    EXPECT_THROW(load_model(path.string()), ValidationError);
}

TEST(ModelIo, MalformedFile)
{
    auto dir = temp_dir("io4");
    auto path = dir / "bad.json";
    std::ofstream(path) << "{ not json";
    EXPECT_THROW(load_model(path.string()), ParseError);
    EXPECT_THROW(load_model((dir / "missing.json").string()), ParseError);
}

TEST(ModelIo, UnknownKind)
{
    auto dir = temp_dir("io5");
    auto path = dir / "k.json";
    std::ofstream(path) << R"({"name":"k","inputs":[{"name":"x","shape":[4]}],
        "nodes":[{"id":"a","kind":"softmax"}],"edges":[["x",0,"a",0]]})";
    EXPECT_THROW(load_model(path.string()), ParseError);
}

} // namespace
} // namespace fpsa
