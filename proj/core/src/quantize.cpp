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
#include <cmath>
#include <set>

#include "fpsa/synthesizer.hpp"

namespace fpsa {

void PEConfig::check() const
{
    if (rows < 2)
        throw ConfigError("crossbar needs at least 2 rows");
    if (cols_phys < 2 || cols_phys % 2 != 0)
        throw ConfigError("physical column count must be even and >= 2");
    if (bits_w < 2 || bits_w > 16)
        throw ConfigError("bits_w must be in [2, 16]");
    if (bits_io < 1 || bits_io > 12)
        throw ConfigError("bits_io must be in [1, 12]");
    if (gamma() - 1 > qmax())
        throw ConfigError("bits_w too small for bits_io: constant rows need gamma - 1 <= qmax");
    if (cells_per_weight < 1 || levels < 2)
        throw ConfigError("cells_per_weight >= 1 and levels >= 2 required");
}

int const_rows_needed(const std::vector<int64_t> &totals, int64_t gamma, int64_t qmax)
{
    int64_t big = 0;
    bool small = false;
    for (int64_t t : totals) {
        int64_t r = t - floor_div(t, gamma) * gamma;
        int64_t q = floor_div(t, gamma);
        big = std::max(big, ceil_div(std::abs(q), qmax));
        small |= r != 0;
    }
    return int(big) + (small ? 1 : 0);
}

ConstRows decompose_constants(const std::vector<int64_t> &totals, int64_t gamma, int64_t qmax)
{
    int n = const_rows_needed(totals, gamma, qmax);
    ConstRows cr;
    bool small = false;
    for (int64_t t : totals)
        small |= (t - floor_div(t, gamma) * gamma) != 0;
    int big = n - (small ? 1 : 0);
    cr.counts.assign(size_t(big), gamma);
    if (small)
        cr.counts.push_back(1);
    cr.weights.assign(size_t(n), std::vector<int32_t>(totals.size(), 0));
    for (size_t j = 0; j < totals.size(); ++j) {
        int64_t q = floor_div(totals[j], gamma);
        int64_t r = totals[j] - q * gamma;
        for (int b = 0; b < big && q != 0; ++b) {
            int64_t step = std::clamp(q, -qmax, qmax);
            cr.weights[size_t(b)][j] = int32_t(step);
            q -= step;
        }
        if (small)
            cr.weights[size_t(big)][j] = int32_t(r);
    }
    return cr;
}

namespace {

struct TensorInfo
{
    int offset = 0;
    double scale = 0.0;
};

// Per-column constant totals of every row tile for a given tile height.
std::vector<std::vector<int64_t>> tile_totals(const QuantizedLayer &q, int64_t n_in, int64_t n_out, int64_t P,
                                              int off_in, int off_out, int64_t gamma)
{
    int64_t K = ceil_div(n_in, P);
    int64_t H = gamma / 2;
    std::vector<std::vector<int64_t>> totals(static_cast<size_t>(K), std::vector<int64_t>(size_t(n_out), 0));
    for (int64_t j = 0; j < n_out; ++j) {
        const int32_t *w = q.weights.data() + j * n_in;
        for (int64_t k = 0; k < K; ++k) {
            int64_t sum = 0;
            for (int64_t i = k * P; i < std::min(n_in, (k + 1) * P); ++i)
                sum += w[i];
            int64_t t = -int64_t(off_in) * sum;
            if (K == 1)
                t += int64_t(off_out) * q.divisor;
            else
                t += H * q.divisor;
            if (k == K - 1 && !q.bias.empty())
                t += int64_t(q.bias[size_t(j)]) * gamma;
            totals[size_t(k)][size_t(j)] = t;
        }
    }
    return totals;
}

void choose_tiling(QuantizedLayer &q, const std::string &id, int64_t n_in, int64_t n_out, int off_in, int off_out,
                   const PEConfig &cfg)
{
    const int64_t R = cfg.rows, G = cfg.gamma(), qmax = cfg.qmax();
    for (int64_t P = std::min<int64_t>(n_in, R); P >= 1; --P) {
        auto totals = tile_totals(q, n_in, n_out, P, off_in, off_out, G);
        int64_t K = int64_t(totals.size());
        bool ok = true;
        for (int64_t k = 0; k < K && ok; ++k) {
            int64_t len = std::min(n_in, (k + 1) * P) - k * P;
            ok = len + const_rows_needed(totals[size_t(k)], G, qmax) <= R;
        }
        if (!ok)
            continue;
        if (K > 1) {
            int64_t red_const = -K * (G / 2) + off_out;
            if (K + const_rows_needed({red_const}, G, qmax) > R)
                throw ValidationError(id, "too many row tiles for one reduction core-op");
        }
        q.tile_rows = P;
        q.tiles = int(K);
        return;
    }
    throw ValidationError(id, "constant rows do not fit the crossbar");
}

} // namespace

ComputationalGraph quantize(const ComputationalGraph &g, const PEConfig &cfg, Diagnostics *diag)
{
    cfg.check();
    ComputationalGraph out = g;
    auto shapes = infer_shapes(g);
    const int64_t G = cfg.gamma(), qmax = cfg.qmax();
    const int H = int(G / 2);

    std::map<std::string, std::vector<OpKind>> consumers;
    for (const auto &op : g.nodes)
        for (const auto &src : op.inputs)
            consumers[src].push_back(op.kind);
    auto outs = g.output_ids();
    std::set<std::string> output_set(outs.begin(), outs.end());
    auto offset_for = [&](const std::string &id) {
        auto it = consumers.find(id);
        if (output_set.count(id) || it == consumers.end())
            return H;
        for (OpKind k : it->second)
            if (k != OpKind::Relu)
                return H;
        return 0;
    };
    auto warn = [&](std::string msg) {
        if (diag)
            diag->warn(std::move(msg));
    };

    std::map<std::string, TensorInfo> info;
    for (const auto &in : g.inputs)
        info[in.name] = {0, 1.0 / double(G)};

    for (size_t idx : topological_order(g)) {
        TensorOp &op = out.nodes[idx];
        const TensorInfo in0 = info.at(op.inputs[0]);
        TensorInfo res = in0;
        switch (op.kind) {
        case OpKind::Conv2d:
        case OpKind::FullyConnected: {
            const auto &W = op.weights;
            if (!W.materialized())
                throw ValidationError(op.id, "weights are not materialized");
            int64_t n_out = W.shape[0];
            int64_t n_in = W.weight_elements() / n_out;
            QuantizedLayer q;
            float absmax = 0.0f;
            for (float v : W.values)
                absmax = std::max(absmax, std::fabs(v));
            q.weight_scale = absmax > 0.0f ? double(absmax) / double(qmax) : 1.0;
            if (absmax == 0.0f)
                warn("layer '" + op.id + "': all-zero weight tensor, scale set to 1");
            q.weights.resize(W.values.size());
            for (size_t i = 0; i < W.values.size(); ++i)
                q.weights[i] = int32_t(std::clamp<double>(std::nearbyint(W.values[i] / q.weight_scale), -double(qmax),
                                                          double(qmax)));
            double max_norm = 0.0;
            for (int64_t j = 0; j < n_out; ++j) {
                double s = 0.0;
                for (int64_t i = 0; i < n_in; ++i) {
                    double w = q.weights[size_t(j * n_in + i)];
                    s += w * w;
                }
                max_norm = std::max(max_norm, std::sqrt(s));
            }
            q.divisor = std::max<int64_t>(1, int64_t(std::ceil(max_norm)));
            if (W.has_bias) {
                q.bias.resize(size_t(n_out));
                double unit = q.weight_scale * in0.scale * double(G);
                for (int64_t j = 0; j < n_out; ++j)
                    q.bias[size_t(j)] = int32_t(std::clamp<double>(std::nearbyint(W.bias[size_t(j)] / unit),
                                                                   -double(qmax), double(qmax)));
            }
            res.offset = offset_for(op.id);
            res.scale = q.weight_scale * in0.scale * double(q.divisor);
            choose_tiling(q, op.id, n_in, n_out, in0.offset, res.offset, cfg);
            op.quant = std::move(q);
            break;
        }
        case OpKind::Add: {
            const TensorInfo in1 = info.at(op.inputs[1]);
            if (std::fabs(in0.scale - in1.scale) > 1e-12 * std::max(in0.scale, in1.scale))
                warn("node '" + op.id + "': elementwise-add operands have different scales; using the larger");
            res.scale = std::max(in0.scale, in1.scale);
            res.offset = offset_for(op.id);
            break;
        }
        case OpKind::Concat:
            for (const auto &src : op.inputs) {
                if (info.at(src).offset != in0.offset)
                    throw ValidationError(op.id, "concat operands carry different count offsets");
                res.scale = std::max(res.scale, info.at(src).scale);
            }
            break;
        case OpKind::Relu:
            res.offset = 0;
            break;
        case OpKind::MaxPool:
        case OpKind::AvgPool:
        case OpKind::Flatten:
            break;
        }
        op.offset = res.offset;
        op.act_scale = res.scale;
        info[op.id] = res;
    }
    out.quant = QuantSettings{int(G), cfg.bits_w, cfg.bits_io, cfg.rows, cfg.cols_logical()};
    return out;
}

} // namespace fpsa
