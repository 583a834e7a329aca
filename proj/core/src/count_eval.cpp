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
#include <random>

#include "fpsa/synthesizer.hpp"

namespace fpsa {

namespace {

using Counts = std::vector<int64_t>;

Counts eval_weighted(const TensorOp &op, const Counts &x, const Shape &in_shape, const Shape &out_shape, int off_in,
                     int64_t G)
{
    const QuantizedLayer &q = *op.quant;
    const int64_t M = op.weights.shape[0];
    const int64_t N = op.weights.weight_elements() / M;
    const int64_t P = q.tile_rows, K = q.tiles, D = q.divisor, H = G / 2;
    int64_t OH = 1, OW = 1;
    if (op.kind == OpKind::Conv2d) {
        OH = out_shape[1];
        OW = out_shape[2];
    }
    Counts y(static_cast<size_t>(M * OH * OW));
    Counts d(static_cast<size_t>(N));
    for (int64_t oy = 0; oy < OH; ++oy)
        for (int64_t ox = 0; ox < OW; ++ox) {
            if (op.kind == OpKind::Conv2d) {
                const auto &a = op.attrs;
                const int64_t IH = in_shape[1], IW = in_shape[2];
                for (int64_t c = 0; c < in_shape[0]; ++c)
                    for (int64_t ky = 0; ky < a.kernel_h; ++ky)
                        for (int64_t kx = 0; kx < a.kernel_w; ++kx) {
                            int64_t iy = oy * a.stride - a.pad + ky, ix = ox * a.stride - a.pad + kx;
                            bool pad = iy < 0 || iy >= IH || ix < 0 || ix >= IW;
                            d[size_t((c * a.kernel_h + ky) * a.kernel_w + kx)] =
                                    pad ? 0 : x[size_t((c * IH + iy) * IW + ix)] - off_in;
                        }
            } else {
                for (int64_t i = 0; i < N; ++i)
                    d[size_t(i)] = x[size_t(i)] - off_in;
            }
            for (int64_t j = 0; j < M; ++j) {
                const int32_t *w = q.weights.data() + j * N;
                int64_t bias = q.bias.empty() ? 0 : int64_t(q.bias[size_t(j)]) * G;
                int64_t out;
                if (K == 1) {
                    int64_t acc = bias;
                    for (int64_t i = 0; i < N; ++i)
                        acc += w[i] * d[size_t(i)];
                    out = clamp_count(floor_div(acc, D) + op.offset, G);
                } else {
                    int64_t sum = 0;
                    for (int64_t k = 0; k < K; ++k) {
                        int64_t acc = k == K - 1 ? bias : 0;
                        for (int64_t i = k * P; i < std::min(N, (k + 1) * P); ++i)
                            acc += w[i] * d[size_t(i)];
                        sum += clamp_count(floor_div(acc, D) + H, G);
                    }
                    out = clamp_count(sum - K * H + op.offset, G);
                }
                y[size_t((j * OH + oy) * OW + ox)] = out;
            }
        }
    return y;
}

Counts eval_pool(const TensorOp &op, const Counts &x, const Shape &is, const Shape &os)
{
    const auto &a = op.attrs;
    const int64_t C = is[0], IH = is[1], IW = is[2], OH = os[1], OW = os[2];
    const int64_t n = int64_t(a.kernel_h) * a.kernel_w;
    Counts y(static_cast<size_t>(C * OH * OW));
    for (int64_t c = 0; c < C; ++c)
        for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
                int64_t mx = 0, sum = 0;
                for (int64_t ky = 0; ky < a.kernel_h; ++ky)
                    for (int64_t kx = 0; kx < a.kernel_w; ++kx) {
                        int64_t v = x[size_t((c * IH + oy * a.stride + ky) * IW + ox * a.stride + kx)];
                        mx = std::max(mx, v);
                        sum += v;
                    }
                y[size_t((c * OH + oy) * OW + ox)] = op.kind == OpKind::MaxPool ? mx : floor_div(sum, n);
            }
    return y;
}

} // namespace

CountMap evaluate_reference(const ComputationalGraph &g, const CountMap &inputs)
{
    if (!g.is_quantized())
        throw ValidationError("", "reference evaluation needs a quantized graph");
    const int64_t G = g.quant->gamma;
    auto shapes = infer_shapes(g);
    std::map<std::string, Counts> val;
    std::map<std::string, int> off;
    for (const auto &in : g.inputs) {
        auto it = inputs.find(in.name);
        if (it == inputs.end() || int64_t(it->second.size()) != element_count(in.shape))
            throw ValidationError(in.name, "missing or mis-sized input counts");
        val[in.name] = it->second;
        off[in.name] = 0;
    }
    for (size_t idx : topological_order(g)) {
        const TensorOp &op = g.nodes[idx];
        const Counts &x = val.at(op.inputs[0]);
        const int off_in = off.at(op.inputs[0]);
        Counts y;
        switch (op.kind) {
        case OpKind::Conv2d:
        case OpKind::FullyConnected:
            y = eval_weighted(op, x, shapes.at(op.inputs[0]), shapes.at(op.id), off_in, G);
            break;
        case OpKind::MaxPool:
        case OpKind::AvgPool:
            y = eval_pool(op, x, shapes.at(op.inputs[0]), shapes.at(op.id));
            break;
        case OpKind::Relu:
            y.resize(x.size());
            for (size_t i = 0; i < x.size(); ++i)
                y[i] = clamp_count(x[i] - off_in, G);
            break;
        case OpKind::Add: {
            const Counts &b = val.at(op.inputs[1]);
            int64_t shift = int64_t(op.offset) - off_in - off.at(op.inputs[1]);
            y.resize(x.size());
            for (size_t i = 0; i < x.size(); ++i)
                y[i] = clamp_count(x[i] + b[i] + shift, G);
            break;
        }
        case OpKind::Concat:
            for (const auto &src : op.inputs)
                y.insert(y.end(), val.at(src).begin(), val.at(src).end());
            break;
        case OpKind::Flatten:
            y = x;
            break;
        }
        val[op.id] = std::move(y);
        off[op.id] = op.offset;
    }
    CountMap out;
    for (const auto &id : g.output_ids())
        out[id] = val.at(id);
    return out;
}

std::vector<std::vector<int64_t>> evaluate_coreops(const CoreOpGraph &gco, const CountMap &inputs)
{
    std::vector<const Counts *> in(gco.inputs.size());
    for (size_t i = 0; i < gco.inputs.size(); ++i) {
        auto it = inputs.find(gco.inputs[i].name);
        if (it == inputs.end() || int64_t(it->second.size()) != element_count(gco.inputs[i].shape))
            throw ValidationError(gco.inputs[i].name, "missing or mis-sized input counts");
        in[i] = &it->second;
    }
    std::vector<Counts> val(gco.coreops.size());
    Counts x;
    for (const auto &op : gco.coreops) {
        const WeightGroup &wg = gco.groups[size_t(op.group)];
        x.resize(op.rows.size());
        for (size_t r = 0; r < op.rows.size(); ++r) {
            const RowSource &s = op.rows[r];
            switch (s.kind) {
            case RowSource::Kind::CoreOp:
                x[r] = val[size_t(s.node)][size_t(s.index)];
                break;
            case RowSource::Kind::Input:
                x[r] = (*in[size_t(s.node)])[size_t(s.index)];
                break;
            case RowSource::Kind::Const:
                x[r] = s.index;
                break;
            }
        }
        Counts acc(static_cast<size_t>(wg.cols), 0);
        for (int64_t r = 0; r < wg.rows; ++r) {
            if (x[size_t(r)] == 0)
                continue;
            const int32_t *w = wg.weights.data() + r * wg.cols;
            for (int64_t c = 0; c < wg.cols; ++c)
                acc[size_t(c)] += w[c] * x[size_t(r)];
        }
        for (auto &a : acc)
            a = clamp_count(floor_div(a, wg.divisor), gco.gamma);
        val[size_t(op.id)] = std::move(acc);
    }
    return val;
}

CountMap collect_outputs(const CoreOpGraph &gco, const CountMap &inputs, const std::vector<std::vector<int64_t>> &values)
{
    CountMap out;
    for (const auto &port : gco.outputs) {
        Counts y;
        y.reserve(port.elems.size());
        for (const auto &s : port.elems) {
            switch (s.kind) {
            case RowSource::Kind::CoreOp:
                y.push_back(values[size_t(s.node)][size_t(s.index)]);
                break;
            case RowSource::Kind::Input:
                y.push_back(inputs.at(gco.inputs[size_t(s.node)].name)[size_t(s.index)]);
                break;
            case RowSource::Kind::Const:
                y.push_back(s.index);
                break;
            }
        }
        out[port.name] = std::move(y);
    }
    return out;
}

CountMap random_inputs(const CoreOpGraph &gco, uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int64_t> u(0, gco.gamma);
    CountMap m;
    for (const auto &in : gco.inputs) {
        Counts v(size_t(element_count(in.shape)));
        for (auto &e : v)
            e = u(rng);
        m[in.name] = std::move(v);
    }
    return m;
}

int64_t verify_lowering(const ComputationalGraph &g, const CoreOpGraph &gco, int n_samples, uint64_t seed)
{
    int64_t worst = 0;
    for (int s = 0; s < n_samples; ++s) {
        CountMap in = random_inputs(gco, seed + uint64_t(s) * 0x9e3779b97f4a7c15ULL);
        CountMap ref = evaluate_reference(g, in);
        CountMap got = collect_outputs(gco, in, evaluate_coreops(gco, in));
        for (const auto &[name, r] : ref) {
            auto it = got.find(name);
            if (it == got.end() || it->second.size() != r.size())
                return gco.gamma + 1;
            for (size_t i = 0; i < r.size(); ++i)
                worst = std::max(worst, std::abs(r[i] - it->second[i]));
        }
    }
    return worst;
}

} // namespace fpsa
