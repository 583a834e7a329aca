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

#include "fpsa/model_ir.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

namespace fpsa {

namespace {

struct KindName
{
    OpKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
        {OpKind::Conv2d, "conv2d"},   {OpKind::FullyConnected, "fully-connected"},
        {OpKind::MaxPool, "max-pool"}, {OpKind::AvgPool, "avg-pool"},
        {OpKind::Relu, "relu"},        {OpKind::Add, "elementwise-add"},
        {OpKind::Concat, "concat"},    {OpKind::Flatten, "flatten"},
};

int64_t window_out(int64_t in, int k, int stride, int pad)
{
    return (in + 2 * pad - k) / stride + 1;
}

} // namespace

std::string_view to_string(OpKind kind)
{
    for (const auto &kn : kKindNames)
        if (kn.kind == kind)
            return kn.name;
    return "?";
}

OpKind op_kind_from_string(std::string_view name)
{
    for (const auto &kn : kKindNames)
        if (kn.name == name)
            return kn.kind;
    throw ParseError("unsupported op kind '" + std::string(name) + "'");
}

bool has_weights(OpKind kind) { return kind == OpKind::Conv2d || kind == OpKind::FullyConnected; }

int64_t element_count(const Shape &shape)
{
    if (shape.empty())
        return 0;
    int64_t n = 1;
    for (auto d : shape)
        n *= d;
    return n;
}

std::string shape_string(const Shape &shape)
{
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i)
        os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

const TensorOp *ComputationalGraph::find(std::string_view id) const
{
    for (const auto &n : nodes)
        if (n.id == id)
            return &n;
    return nullptr;
}

const InputDecl *ComputationalGraph::find_input(std::string_view name) const
{
    for (const auto &in : inputs)
        if (in.name == name)
            return &in;
    return nullptr;
}

std::vector<std::string> ComputationalGraph::output_ids() const
{
    if (!outputs.empty())
        return outputs;
    std::set<std::string> consumed;
    for (const auto &n : nodes)
        for (const auto &src : n.inputs)
            consumed.insert(src);
    std::vector<std::string> out;
    for (const auto &n : nodes)
        if (!consumed.count(n.id))
            out.push_back(n.id);
    return out;
}

std::vector<size_t> topological_order(const ComputationalGraph &g)
{
    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        if (!index.emplace(g.nodes[i].id, i).second)
            throw ValidationError(g.nodes[i].id, "duplicate node id");
        if (g.find_input(g.nodes[i].id))
            throw ValidationError(g.nodes[i].id, "node id collides with a graph input name");
    }

    std::vector<int> indeg(g.nodes.size(), 0);
    std::vector<std::vector<size_t>> users(g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        for (const auto &src : g.nodes[i].inputs) {
            auto it = index.find(src);
            if (it == index.end()) {
                if (!g.find_input(src))
                    throw ValidationError(g.nodes[i].id, "unknown input '" + src + "'");
                continue;
            }
            indeg[i]++;
            users[it->second].push_back(i);
        }
    }

    std::priority_queue<size_t, std::vector<size_t>, std::greater<>> ready;
    for (size_t i = 0; i < g.nodes.size(); ++i)
        if (indeg[i] == 0)
            ready.push(i);
    std::vector<size_t> order;
    while (!ready.empty()) {
        size_t n = ready.top();
        ready.pop();
        order.push_back(n);
        for (size_t u : users[n])
            if (--indeg[u] == 0)
                ready.push(u);
    }
    if (order.size() == g.nodes.size())
        return order;

    // Walk backwards through unresolved producers until a node repeats.
    size_t start = 0;
    while (indeg[start] == 0)
        ++start;
    std::vector<size_t> path;
    std::vector<int> seen(g.nodes.size(), -1);
    size_t cur = start;
    while (seen[cur] < 0) {
        seen[cur] = int(path.size());
        path.push_back(cur);
        for (const auto &src : g.nodes[cur].inputs) {
            auto it = index.find(src);
            if (it != index.end() && indeg[it->second] > 0) {
                cur = it->second;
                break;
            }
        }
    }
    std::string cycle;
    for (size_t k = path.size(); k-- > size_t(seen[cur]);)
        cycle += g.nodes[path[k]].id + " -> ";
    cycle += g.nodes[cur].id;
    throw ValidationError(g.nodes[cur].id, "cycle detected: " + cycle);
}

std::map<std::string, Shape> infer_shapes(const ComputationalGraph &g)
{
    std::map<std::string, Shape> shapes;
    for (const auto &in : g.inputs) {
        if (in.shape.empty() || element_count(in.shape) <= 0)
            throw ValidationError(in.name, "graph input has empty shape");
        shapes[in.name] = in.shape;
    }

    for (size_t idx : topological_order(g)) {
        const TensorOp &op = g.nodes[idx];
        auto fail = [&](const std::string &msg) { throw ValidationError(op.id, msg); };
        std::vector<Shape> ins;
        for (const auto &src : op.inputs)
            ins.push_back(shapes.at(src));

        size_t want_inputs = op.kind == OpKind::Add ? 2 : 1;
        if (op.kind == OpKind::Concat) {
            if (ins.empty())
                fail("concat needs at least one input");
        } else if (ins.size() != want_inputs) {
            fail(std::string(to_string(op.kind)) + " expects " + std::to_string(want_inputs) + " input(s), got " +
                 std::to_string(ins.size()));
        }

        if (has_weights(op.kind) != !op.weights.shape.empty())
            fail("weights must be present exactly for conv2d and fully-connected");
        if (op.weights.materialized() && int64_t(op.weights.values.size()) != op.weights.weight_elements())
            fail("weight data size does not match weight shape " + shape_string(op.weights.shape));
        if (op.weights.materialized() && op.weights.has_bias &&
            int64_t(op.weights.bias.size()) != op.weights.bias_elements())
            fail("bias size does not match output width");

        Shape out;
        const auto &a = op.attrs;
        switch (op.kind) {
        case OpKind::Conv2d: {
            const Shape &x = ins[0];
            const Shape &w = op.weights.shape;
            if (x.size() != 3)
                fail("conv2d input must be [C,H,W], got " + shape_string(x));
            if (w.size() != 4)
                fail("conv2d kernel must be [outC,inC,kH,kW], got " + shape_string(w));
            if (w[1] != x[0])
                fail("kernel input channels " + std::to_string(w[1]) + " != input channels " + std::to_string(x[0]));
            if (a.out_channels != w[0] || a.kernel_h != w[2] || a.kernel_w != w[3])
                fail("conv2d attributes disagree with kernel shape " + shape_string(w));
            if (a.stride < 1 || a.pad < 0)
                fail("invalid stride/padding");
            out = {w[0], window_out(x[1], a.kernel_h, a.stride, a.pad), window_out(x[2], a.kernel_w, a.stride, a.pad)};
            if (out[1] <= 0 || out[2] <= 0)
                fail("kernel larger than padded input");
            break;
        }
        case OpKind::FullyConnected: {
            const Shape &x = ins[0];
            const Shape &w = op.weights.shape;
            if (x.size() != 1)
                fail("fully-connected input must be a vector, got " + shape_string(x) + " (insert flatten)");
            if (w.size() != 2 || w[1] != x[0])
                fail("fc weight shape " + shape_string(w) + " does not match input " + shape_string(x));
            if (a.out_features != w[0])
                fail("out_features disagrees with weight shape");
            out = {w[0]};
            break;
        }
        case OpKind::MaxPool:
        case OpKind::AvgPool: {
            const Shape &x = ins[0];
            if (x.size() != 3)
                fail("pool input must be [C,H,W]");
            if (a.kernel_h < 1 || a.kernel_w < 1 || a.stride < 1 || a.pad != 0)
                fail("pool needs kernel >= 1, stride >= 1 and no padding");
            out = {x[0], window_out(x[1], a.kernel_h, a.stride, 0), window_out(x[2], a.kernel_w, a.stride, 0)};
            if (out[1] <= 0 || out[2] <= 0)
                fail("pool window larger than input");
            break;
        }
        case OpKind::Relu:
            out = ins[0];
            break;
        case OpKind::Add:
            if (ins[0] != ins[1])
                fail("elementwise-add shapes differ: " + shape_string(ins[0]) + " vs " + shape_string(ins[1]));
            out = ins[0];
            break;
        case OpKind::Concat: {
            out = ins[0];
            for (size_t k = 1; k < ins.size(); ++k) {
                if (ins[k].size() != out.size())
                    fail("concat rank mismatch");
                for (size_t d = 1; d < out.size(); ++d)
                    if (ins[k][d] != out[d])
                        fail("concat spatial mismatch");
                out[0] += ins[k][0];
            }
            break;
        }
        case OpKind::Flatten:
            out = {element_count(ins[0])};
            break;
        }
        shapes[op.id] = out;
    }

    for (const auto &id : g.outputs)
        if (!shapes.count(id))
            throw ValidationError(id, "declared output does not exist");
    return shapes;
}

void validate(const ComputationalGraph &g) { (void)infer_shapes(g); }

ModelStats graph_stats(const ComputationalGraph &g)
{
    auto shapes = infer_shapes(g);
    ModelStats st;
    for (const auto &op : g.nodes) {
        LayerShare ls;
        ls.id = op.id;
        if (op.kind == OpKind::Conv2d) {
            const Shape &o = shapes.at(op.id);
            const Shape &w = op.weights.shape;
            ls.weights = op.weights.weight_elements() + op.weights.bias_elements();
            ls.ops = 2 * o[0] * o[1] * o[2] * w[1] * w[2] * w[3];
        } else if (op.kind == OpKind::FullyConnected) {
            ls.weights = op.weights.weight_elements() + op.weights.bias_elements();
            ls.ops = 2 * op.weights.weight_elements();
        }
        st.weight_count += ls.weights;
        st.op_count += ls.ops;
        st.layers.push_back(ls);
    }
    for (auto &ls : st.layers) {
        ls.weight_fraction = st.weight_count ? double(ls.weights) / double(st.weight_count) : 0.0;
        ls.op_fraction = st.op_count ? double(ls.ops) / double(st.op_count) : 0.0;
    }
    return st;
}

} // namespace fpsa
