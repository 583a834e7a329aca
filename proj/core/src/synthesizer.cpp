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
#include <set>
#include <unordered_map>

#include "fpsa/synthesizer.hpp"

namespace fpsa {

std::vector<int32_t> CoreOpGraph::predecessors(int32_t id) const
{
    std::vector<int32_t> p;
    for (const auto &r : coreops[size_t(id)].rows)
        if (r.kind == RowSource::Kind::CoreOp)
            p.push_back(r.node);
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p;
}

std::vector<std::vector<int32_t>> CoreOpGraph::successors() const
{
    std::vector<std::vector<int32_t>> s(coreops.size());
    for (const auto &op : coreops)
        for (int32_t p : predecessors(op.id))
            s[size_t(p)].push_back(op.id);
    return s;
}

namespace {

using Signals = std::vector<RowSource>;

class Lowerer
{
  public:
    Lowerer(const ComputationalGraph &g, const PEConfig &cfg)
            : g_(g), cfg_(cfg), R_(cfg.rows), Cl_(cfg.cols_logical()), G_(cfg.gamma()), H_(cfg.gamma() / 2)
    {
        out_.gamma = G_;
    }

    CoreOpGraph run()
    {
        if (!g_.is_quantized())
            throw ValidationError("", "lower() needs a quantized graph");
        shapes_ = infer_shapes(g_);
        for (size_t i = 0; i < g_.inputs.size(); ++i) {
            const auto &in = g_.inputs[i];
            out_.inputs.push_back({in.name, in.shape});
            Signals s(size_t(element_count(in.shape)));
            for (size_t e = 0; e < s.size(); ++e)
                s[e] = RowSource::input(int32_t(i), int64_t(e));
            sig_[in.name] = std::move(s);
            offset_[in.name] = 0;
        }
        for (size_t idx : topological_order(g_))
            lower_node(g_.nodes[idx]);
        for (const auto &id : g_.output_ids())
            out_.outputs.push_back({id, sig_.at(id)});
        return std::move(out_);
    }

  private:
    struct GroupRef
    {
        int32_t group;
        std::vector<int64_t> const_counts;
    };

    // Registers (or reuses) the weight group with the given key. Data rows
    // come first, followed by the constant rows realizing `totals`.
    const GroupRef &group(const std::string &key, const std::string &layer, int64_t data_rows, int64_t cols,
                          const std::vector<int32_t> &data_weights, const std::vector<int64_t> &totals,
                          int64_t divisor)
    {
        auto it = cache_.find(key);
        if (it != cache_.end())
            return it->second;
        ConstRows cr = decompose_constants(totals, G_, cfg_.qmax());
        WeightGroup wg;
        wg.id = key;
        wg.layer = layer;
        wg.rows = data_rows + int64_t(cr.counts.size());
        wg.cols = cols;
        wg.divisor = divisor;
        wg.weights = data_weights;
        for (const auto &row : cr.weights)
            wg.weights.insert(wg.weights.end(), row.begin(), row.end());
        if (wg.rows > R_ || wg.cols > Cl_)
            throw ValidationError(layer, "core-op " + key + " exceeds the crossbar");
        out_.groups.push_back(std::move(wg));
        return cache_.emplace(key, GroupRef{int32_t(out_.groups.size() - 1), cr.counts}).first->second;
    }

    int32_t emit(const GroupRef &ref, const std::string &role, Signals rows)
    {
        for (int64_t c : ref.const_counts)
            rows.push_back(RowSource::constant(c));
        CoreOp op;
        op.id = int32_t(out_.coreops.size());
        op.group = ref.group;
        op.role = role;
        op.rows = std::move(rows);
        out_.coreops.push_back(std::move(op));
        return out_.coreops.back().id;
    }

    // Largest chunk width with `per_col` rows per column plus constants.
    int64_t chunk_width(int64_t per_col, int64_t total_const) const
    {
        int64_t nconst = const_rows_needed({total_const}, G_, cfg_.qmax());
        int64_t w = std::min<int64_t>(Cl_, (R_ - nconst) / per_col);
        if (w < 1)
            throw ValidationError("", "crossbar too small for a " + std::to_string(per_col) + "-input reduction");
        return w;
    }

    // Element-wise core-ops: output e = clamp(sum_k coeff[k] * in[k][e] + total).
    Signals elementwise(const std::string &layer, const std::string &tag, const std::string &role,
                        const std::vector<const Signals *> &ins,
                        const std::vector<int32_t> &coeff, int64_t total, int64_t divisor)
    {
        int64_t n = int64_t(ins[0]->size());
        int64_t per = int64_t(ins.size());
        int64_t width = chunk_width(per, total);
        Signals outs(static_cast<size_t>(n));
        for (int64_t base = 0; base < n; base += width) {
            int64_t w = std::min(width, n - base);
            std::vector<int32_t> wts(static_cast<size_t>(w * per * w), 0);
            Signals rows;
            for (int64_t c = 0; c < w; ++c)
                for (int64_t k = 0; k < per; ++k) {
                    wts[size_t((c * per + k) * w + c)] = coeff[size_t(k)];
                    rows.push_back((*ins[size_t(k)])[size_t(base + c)]);
                }
            const auto &ref = group(layer + "/" + tag + "/" + std::to_string(base) + "/" + std::to_string(w), layer, w * per, w, wts,
                                    std::vector<int64_t>(size_t(w), total), divisor);
            int32_t id = emit(ref, role, std::move(rows));
            for (int64_t c = 0; c < w; ++c)
                outs[size_t(base + c)] = RowSource::coreop(id, c);
        }
        return outs;
    }

    void lower_node(const TensorOp &op)
    {
        const Signals &x = sig_.at(op.inputs[0]);
        int off_in = offset_.at(op.inputs[0]);
        Signals y;
        switch (op.kind) {
        case OpKind::Conv2d:
        case OpKind::FullyConnected:
            y = lower_weighted(op, x, off_in);
            break;
        case OpKind::MaxPool:
            y = lower_pool(op, x, true);
            break;
        case OpKind::AvgPool:
            y = lower_pool(op, x, false);
            break;
        case OpKind::Relu:
            y = off_in == 0 ? x : elementwise(op.id, "relu", "relu", {&x}, {1}, -off_in, 1);
            break;
        case OpKind::Add: {
            const Signals &b = sig_.at(op.inputs[1]);
            int64_t total = int64_t(op.offset) - off_in - offset_.at(op.inputs[1]);
            y = elementwise(op.id, "add", "add", {&x, &b}, {1, 1}, total, 1);
            break;
        }
        case OpKind::Concat:
            for (const auto &src : op.inputs) {
                const Signals &s = sig_.at(src);
                y.insert(y.end(), s.begin(), s.end());
            }
            break;
        case OpKind::Flatten:
            y = x;
            break;
        }
        sig_[op.id] = std::move(y);
        offset_[op.id] = op.offset;
    }

    Signals lower_weighted(const TensorOp &op, const Signals &x, int off_in)
    {
        const QuantizedLayer &q = *op.quant;
        const Shape &ws = op.weights.shape;
        const int64_t M = ws[0];
        const int64_t N = op.weights.weight_elements() / M;
        const int64_t P = q.tile_rows, K = q.tiles;
        const int64_t T = ceil_div(M, Cl_);

        int64_t OH = 1, OW = 1;
        const Shape *in_shape = nullptr;
        if (op.kind == OpKind::Conv2d) {
            const Shape &os = shapes_.at(op.id);
            OH = os[1];
            OW = os[2];
            in_shape = &shapes_.at(op.inputs[0]);
        }

        // Constant totals per (row tile, column), matching the quantized layer.
        std::vector<std::vector<int64_t>> totals(static_cast<size_t>(K), std::vector<int64_t>(size_t(M)));
        for (int64_t j = 0; j < M; ++j)
            for (int64_t k = 0; k < K; ++k) {
                int64_t sum = 0;
                for (int64_t i = k * P; i < std::min(N, (k + 1) * P); ++i)
                    sum += q.weights[size_t(j * N + i)];
                int64_t t = -int64_t(off_in) * sum + (K == 1 ? int64_t(op.offset) * q.divisor : H_ * q.divisor);
                if (k == K - 1 && !q.bias.empty())
                    t += int64_t(q.bias[size_t(j)]) * G_;
                totals[size_t(k)][size_t(j)] = t;
            }

        Signals y(static_cast<size_t>(M * OH * OW));
        Signals src(static_cast<size_t>(N));
        std::vector<Signals> partial(static_cast<size_t>(K), Signals(size_t(M)));
        for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
                if (in_shape) {
                    const int64_t C = (*in_shape)[0], IH = (*in_shape)[1], IW = (*in_shape)[2];
                    const auto &a = op.attrs;
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t ky = 0; ky < a.kernel_h; ++ky)
                            for (int64_t kx = 0; kx < a.kernel_w; ++kx) {
                                int64_t iy = oy * a.stride - a.pad + ky, ix = ox * a.stride - a.pad + kx;
                                size_t i = size_t((c * a.kernel_h + ky) * a.kernel_w + kx);
                                src[i] = (iy < 0 || iy >= IH || ix < 0 || ix >= IW)
                                                 ? RowSource::constant(off_in)
                                                 : x[size_t((c * IH + iy) * IW + ix)];
                            }
                } else {
                    src = x;
                }

                for (int64_t t = 0; t < T; ++t) {
                    int64_t c0 = t * Cl_, c1 = std::min(M, c0 + Cl_);
                    for (int64_t k = 0; k < K; ++k) {
                        int64_t r0 = k * P, r1 = std::min(N, r0 + P);
                        std::string key = op.id + "/mul/" + std::to_string(k) + "/" + std::to_string(t);
                        const GroupRef *ref;
                        auto it = cache_.find(key);
                        if (it != cache_.end()) {
                            ref = &it->second;
                        } else {
                            std::vector<int32_t> wts;
                            wts.reserve(size_t((r1 - r0) * (c1 - c0)));
                            for (int64_t i = r0; i < r1; ++i)
                                for (int64_t j = c0; j < c1; ++j)
                                    wts.push_back(q.weights[size_t(j * N + i)]);
                            std::vector<int64_t> tot(totals[size_t(k)].begin() + c0, totals[size_t(k)].begin() + c1);
                            ref = &group(key, op.id, r1 - r0, c1 - c0, wts, tot, q.divisor);
                        }
                        int32_t id = emit(*ref, "mul", Signals(src.begin() + r0, src.begin() + r1));
                        for (int64_t j = c0; j < c1; ++j) {
                            auto s = RowSource::coreop(id, j - c0);
                            if (K == 1)
                                y[size_t((j * OH + oy) * OW + ox)] = s;
                            else
                                partial[size_t(k)][size_t(j)] = s;
                        }
                    }
                }

                if (K > 1) {
                    std::vector<const Signals *> ins;
                    for (const auto &p : partial)
                        ins.push_back(&p);
                    Signals red = elementwise(op.id, "reduce", "reduce", ins, std::vector<int32_t>(size_t(K), 1),
                                              int64_t(op.offset) - K * H_, 1);
                    for (int64_t j = 0; j < M; ++j)
                        y[size_t((j * OH + oy) * OW + ox)] = red[size_t(j)];
                }
            }
        return y;
    }

    Signals lower_pool(const TensorOp &op, const Signals &x, bool is_max)
    {
        const Shape &is = shapes_.at(op.inputs[0]);
        const Shape &os = shapes_.at(op.id);
        const int64_t C = is[0], IH = is[1], IW = is[2], OH = os[1], OW = os[2];
        const auto &a = op.attrs;
        const int64_t n = int64_t(a.kernel_h) * a.kernel_w;
        Signals y(static_cast<size_t>(C * OH * OW));

        for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
                std::vector<Signals> win(static_cast<size_t>(C));
                for (int64_t c = 0; c < C; ++c)
                    for (int64_t ky = 0; ky < a.kernel_h; ++ky)
                        for (int64_t kx = 0; kx < a.kernel_w; ++kx)
                            win[size_t(c)].push_back(
                                    x[size_t((c * IH + oy * a.stride + ky) * IW + ox * a.stride + kx)]);
                Signals res(static_cast<size_t>(C));
                if (is_max)
                    max_ladder(op.id, win, res);
                else
                    avg(op.id, win, n, res);
                for (int64_t c = 0; c < C; ++c)
                    y[size_t((c * OH + oy) * OW + ox)] = res[size_t(c)];
            }
        return y;
    }

    // Pairwise tournament: max(a, b) = relu(a - b) + b, two core-op stages per level.
    void max_ladder(const std::string &layer, std::vector<Signals> win, Signals &res)
    {
        for (int level = 0; win[0].size() > 1; ++level) {
            Signals as, bs;
            for (auto &w : win)
                for (size_t p = 0; p + 1 < w.size(); p += 2) {
                    as.push_back(w[p]);
                    bs.push_back(w[p + 1]);
                }
            std::string tag = "max" + std::to_string(level);
            Signals diff = elementwise(layer, tag + "a", "max-a", {&as, &bs}, {1, -1}, 0, 1);
            Signals mx = elementwise(layer, tag + "b", "max-b", {&diff, &bs}, {1, 1}, 0, 1);
            size_t k = 0;
            for (auto &w : win) {
                Signals next;
                for (size_t p = 0; p + 1 < w.size(); p += 2)
                    next.push_back(mx[k++]);
                if (w.size() % 2)
                    next.push_back(w.back());
                w = std::move(next);
            }
        }
        for (size_t c = 0; c < win.size(); ++c)
            res[c] = win[c][0];
    }

    void avg(const std::string &layer, const std::vector<Signals> &win, int64_t n, Signals &res)
    {
        if (n > R_)
            throw ValidationError(layer, "avg-pool window larger than the crossbar");
        int64_t C = int64_t(win.size());
        int64_t width = std::min<int64_t>(Cl_, R_ / n);
        for (int64_t base = 0; base < C; base += width) {
            int64_t w = std::min(width, C - base);
            std::vector<int32_t> wts(static_cast<size_t>(w * n * w), 0);
            Signals rows;
            for (int64_t c = 0; c < w; ++c)
                for (int64_t e = 0; e < n; ++e) {
                    wts[size_t((c * n + e) * w + c)] = 1;
                    rows.push_back(win[size_t(base + c)][size_t(e)]);
                }
            const auto &ref = group(layer + "/avg/" + std::to_string(w), layer, w * n, w, wts,
                                    std::vector<int64_t>(size_t(w), 0), n);
            int32_t id = emit(ref, "avg", std::move(rows));
            for (int64_t c = 0; c < w; ++c)
                res[size_t(base + c)] = RowSource::coreop(id, c);
        }
    }

    const ComputationalGraph &g_;
    const PEConfig &cfg_;
    const int64_t R_, Cl_, G_, H_;
    CoreOpGraph out_;
    std::map<std::string, Shape> shapes_;
    std::map<std::string, Signals> sig_;
    std::map<std::string, int> offset_;
    std::unordered_map<std::string, GroupRef> cache_;
};

} // namespace

CoreOpGraph lower(const ComputationalGraph &g, const PEConfig &cfg)
{
    cfg.check();
    CoreOpGraph gco = Lowerer(g, cfg).run();
    check_coreop_graph(gco, cfg);
    return gco;
}

void check_coreop_graph(const CoreOpGraph &gco, const PEConfig &cfg)
{
    auto fail = [](int32_t id, const std::string &msg) {
        throw ValidationError("coreop " + std::to_string(id), msg);
    };
    for (const auto &wg : gco.groups) {
        if (wg.rows > cfg.rows || wg.cols > cfg.cols_logical())
            throw ValidationError(wg.id, "weight group exceeds the crossbar");
        for (int32_t w : wg.weights)
            if (std::abs(int64_t(w)) > cfg.qmax())
                throw ValidationError(wg.id, "weight outside the bits_w range");
        if (wg.divisor < 1)
            throw ValidationError(wg.id, "divisor must be positive");
    }
    for (size_t i = 0; i < gco.coreops.size(); ++i) {
        const auto &op = gco.coreops[i];
        if (op.id != int32_t(i))
            fail(op.id, "core-op ids must equal their index");
        if (op.group < 0 || size_t(op.group) >= gco.groups.size())
            fail(op.id, "unknown weight group");
        if (int64_t(op.rows.size()) != gco.groups[size_t(op.group)].rows)
            fail(op.id, "row count differs from its weight group");
        for (const auto &r : op.rows) {
            switch (r.kind) {
            case RowSource::Kind::CoreOp:
                if (r.node < 0 || r.node >= op.id)
                    fail(op.id, "row refers to a later core-op");
                if (r.index < 0 || r.index >= gco.out_width(gco.coreops[size_t(r.node)]))
                    fail(op.id, "row refers past the producer's width");
                break;
            case RowSource::Kind::Input:
                if (r.node < 0 || size_t(r.node) >= gco.inputs.size() || r.index < 0 ||
                    r.index >= element_count(gco.inputs[size_t(r.node)].shape))
                    fail(op.id, "row refers to a missing input element");
                break;
            case RowSource::Kind::Const:
                if (r.index < 0 || r.index > gco.gamma)
                    fail(op.id, "constant row outside [0, gamma]");
                break;
            }
        }
    }
}

double spatial_fit(const CoreOpGraph &gco, const PEConfig &cfg)
{
    if (gco.coreops.empty())
        return 0.0;
    double used = 0.0;
    for (const auto &op : gco.coreops) {
        const auto &wg = gco.groups[size_t(op.group)];
        used += double(wg.rows) * double(wg.cols);
    }
    return used / (double(gco.coreops.size()) * double(cfg.rows) * double(cfg.cols_logical()));
}

} // namespace fpsa
