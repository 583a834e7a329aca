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

#include "fpsa/spiking.hpp"

#include <cmath>
#include <string>

namespace fpsa {

double NeuronParams::eta() const { return (c / tau) * std::log((v_dd - v_re) / (v_dd - v_th)); }

void NeuronParams::check() const
{
    if (!(v_re < v_th && v_th < v_dd))
        throw ConfigError("neuron voltages must satisfy V_re < V_th < V_dd");
    if (!(c > 0.0) || !(tau > 0.0))
        throw ConfigError("C and tau must be positive");
}

ResetMode reset_mode_from_string(const std::string &s)
{
    if (s == "carry")
        return ResetMode::Carry;
    if (s == "hard")
        return ResetMode::Hard;
    throw ConfigError("reset mode must be carry or hard, got '" + s + "'");
}

const char *to_string(ResetMode m) { return m == ResetMode::Carry ? "carry" : "hard"; }

int64_t SpikeTrain::count() const
{
    int64_t n = 0;
    for (auto b : bits)
        n += b;
    return n;
}

SpikeTrain encode_count(int64_t x, int64_t gamma)
{
    if (x < 0 || x > gamma)
        throw ConfigError("spike count " + std::to_string(x) + " outside [0, " + std::to_string(gamma) + "]");
    SpikeTrain s;
    s.bits.resize(size_t(gamma));
    for (int64_t t = 1; t <= gamma; ++t)
        s.bits[size_t(t - 1)] = (t * x) / gamma > ((t - 1) * x) / gamma;
    return s;
}

std::vector<SpikeTrain> encode_counts(const std::vector<int64_t> &x, int64_t gamma)
{
    std::vector<SpikeTrain> out;
    out.reserve(x.size());
    for (int64_t v : x)
        out.push_back(encode_count(v, gamma));
    return out;
}

SpikeTrain subtract_trains(const SpikeTrain &pos, const SpikeTrain &neg)
{
    if (pos.gamma() != neg.gamma())
        throw ConfigError("subtracted trains differ in window length");
    SpikeTrain out;
    out.bits.resize(pos.bits.size());
    int64_t debt = 0;
    for (size_t t = 0; t < pos.bits.size(); ++t) {
        debt += neg.bits[t];
        if (pos.bits[t]) {
            if (debt > 0)
                --debt;
            else
                out.bits[t] = 1;
        }
    }
    return out;
}

std::vector<int64_t> pe_oracle(const PEWeights &pe, const std::vector<int64_t> &x, int64_t gamma)
{
    std::vector<int64_t> acc(static_cast<size_t>(pe.cols), 0);
    for (int64_t r = 0; r < pe.rows; ++r) {
        if (x[size_t(r)] == 0)
            continue;
        for (int64_t c = 0; c < pe.cols; ++c)
            acc[size_t(c)] += int64_t(pe.w[size_t(r * pe.cols + c)]) * x[size_t(r)];
    }
    for (auto &a : acc)
        a = clamp_count(floor_div(a, pe.divisor), gamma);
    return acc;
}

CrossbarState make_crossbar(const PEWeights &pe, const NeuronParams &np)
{
    np.check();
    CrossbarState st;
    st.rows = pe.rows;
    st.cols = pe.cols;
    const double unit = np.eta() / double(pe.divisor);
    st.g_pos.assign(pe.w.size(), 0.0);
    st.g_neg.assign(pe.w.size(), 0.0);
    for (size_t i = 0; i < pe.w.size(); ++i) {
        if (pe.w[i] > 0)
            st.g_pos[i] = double(pe.w[i]) * unit;
        else if (pe.w[i] < 0)
            st.g_neg[i] = -double(pe.w[i]) * unit;
    }
    reset_window(st, np);
    return st;
}

void reset_window(CrossbarState &st, const NeuronParams &np)
{
    st.headroom.assign(size_t(2 * st.cols), np.v_dd - np.v_re);
    st.integral.assign(size_t(2 * st.cols), 0.0);
    st.debt.assign(size_t(st.cols), 0);
    st.crossings.assign(size_t(2 * st.cols), {});
}

StepOutput step_pe(CrossbarState &st, const std::vector<uint8_t> &spikes, const NeuronParams &np, ResetMode mode)
{
    StepOutput o;
    o.pos.assign(size_t(st.cols), 0);
    o.neg.assign(size_t(st.cols), 0);
    o.out.assign(size_t(st.cols), 0);
    std::vector<double> G(static_cast<size_t>(2 * st.cols), 0.0);
    for (int64_t r = 0; r < st.rows; ++r) {
        if (!spikes[size_t(r)])
            continue;
        for (int64_t c = 0; c < st.cols; ++c) {
            G[size_t(2 * c)] += st.g_pos[size_t(r * st.cols + c)];
            G[size_t(2 * c + 1)] += st.g_neg[size_t(r * st.cols + c)];
        }
    }
    const double gap_th = np.v_dd - np.v_th;
    const double carry_gain = (np.v_dd - np.v_re) / gap_th;
    for (int64_t p = 0; p < 2 * st.cols; ++p) {
        double &h = st.headroom[size_t(p)];
        const double g = G[size_t(p)];
        const double h_prev = h;
        const double before = st.integral[size_t(p)];
        if (g > 0.0) {
            h *= std::exp(-np.tau * g / np.c);
            st.integral[size_t(p)] += g;
        }
        // Relative tolerance absorbs rounding of exactly-on-threshold drives.
        if (h > gap_th * (1.0 + 1e-9))
            continue;
        if (st.record_crossings) {
            // Crossing at C / tau * ln(h_prev / (V_dd - V_th)) into this cycle's
            // drive; negative when a carried surplus already exceeds threshold.
            st.crossings[size_t(p)].push_back(before + (np.c / np.tau) * std::log(h_prev / gap_th));
        }
        if (mode == ResetMode::Carry)
            h = std::min(h * carry_gain, np.v_dd - np.v_re);
        else
            h = np.v_dd - np.v_re;
        (p % 2 == 0 ? o.pos : o.neg)[size_t(p / 2)] = 1;
    }
    for (int64_t c = 0; c < st.cols; ++c) {
        st.debt[size_t(c)] += o.neg[size_t(c)];
        if (o.pos[size_t(c)]) {
            if (st.debt[size_t(c)] > 0)
                --st.debt[size_t(c)];
            else
                o.out[size_t(c)] = 1;
        }
    }
    return o;
}

IntegerPE::IntegerPE(const PEWeights &w) : pe(&w) { reset(); }

void IntegerPE::reset()
{
    acc.assign(size_t(2 * pe->cols), 0);
    debt.assign(size_t(pe->cols), 0);
}

void IntegerPE::step(const std::vector<uint8_t> &spikes, ResetMode mode, std::vector<uint8_t> &out)
{
    const int64_t C = pe->cols, D = pe->divisor;
    for (int64_t r = 0; r < pe->rows; ++r) {
        if (!spikes[size_t(r)])
            continue;
        const int32_t *w = pe->w.data() + r * C;
        for (int64_t c = 0; c < C; ++c) {
            if (w[c] > 0)
                acc[size_t(2 * c)] += w[c];
            else
                acc[size_t(2 * c + 1)] -= w[c];
        }
    }
    out.assign(size_t(3 * C), 0); // [out | pos | neg]
    for (int64_t p = 0; p < 2 * C; ++p) {
        int64_t &a = acc[size_t(p)];
        if (a < D)
            continue;
        a = mode == ResetMode::Carry ? a - D : 0;
        out[size_t(C + p / 2 + (p % 2) * C)] = 1;
    }
    for (int64_t c = 0; c < C; ++c) {
        debt[size_t(c)] += out[size_t(2 * C + c)];
        if (out[size_t(C + c)]) {
            if (debt[size_t(c)] > 0)
                --debt[size_t(c)];
            else
                out[size_t(c)] = 1;
        }
    }
}

namespace {

WindowResult collect(int64_t cols, int64_t gamma)
{
    WindowResult r;
    r.counts.assign(size_t(cols), 0);
    r.pos_counts.assign(size_t(cols), 0);
    r.neg_counts.assign(size_t(cols), 0);
    r.trains.assign(size_t(cols), SpikeTrain{std::vector<uint8_t>(size_t(gamma), 0)});
    return r;
}

int64_t window_length(const PEWeights &pe, const std::vector<SpikeTrain> &inputs)
{
    if (int64_t(inputs.size()) != pe.rows)
        throw ConfigError("input train count differs from crossbar rows");
    int64_t gamma = inputs.empty() ? 0 : inputs[0].gamma();
    for (const auto &s : inputs)
        if (s.gamma() != gamma)
            throw ConfigError("input trains differ in window length");
    return gamma;
}

} // namespace

WindowResult run_window(const PEWeights &pe, const std::vector<SpikeTrain> &inputs, ResetMode mode)
{
    const int64_t gamma = window_length(pe, inputs);
    const int64_t C = pe.cols;
    WindowResult r = collect(C, gamma);
    IntegerPE sim(pe);
    std::vector<uint8_t> s(static_cast<size_t>(pe.rows)), out;
    for (int64_t t = 0; t < gamma; ++t) {
        for (int64_t i = 0; i < pe.rows; ++i)
            s[size_t(i)] = inputs[size_t(i)].bits[size_t(t)];
        sim.step(s, mode, out);
        for (int64_t c = 0; c < C; ++c) {
            r.trains[size_t(c)].bits[size_t(t)] = out[size_t(c)];
            r.counts[size_t(c)] += out[size_t(c)];
            r.pos_counts[size_t(c)] += out[size_t(C + c)];
            r.neg_counts[size_t(c)] += out[size_t(2 * C + c)];
        }
    }
    return r;
}

WindowResult run_window_analog(const PEWeights &pe, const std::vector<SpikeTrain> &inputs, const NeuronParams &np,
                               ResetMode mode)
{
    const int64_t gamma = window_length(pe, inputs);
    WindowResult r = collect(pe.cols, gamma);
    CrossbarState st = make_crossbar(pe, np);
    std::vector<uint8_t> s(static_cast<size_t>(pe.rows));
    for (int64_t t = 0; t < gamma; ++t) {
        for (int64_t i = 0; i < pe.rows; ++i)
            s[size_t(i)] = inputs[size_t(i)].bits[size_t(t)];
        StepOutput o = step_pe(st, s, np, mode);
        for (int64_t c = 0; c < pe.cols; ++c) {
            r.trains[size_t(c)].bits[size_t(t)] = o.out[size_t(c)];
            r.counts[size_t(c)] += o.out[size_t(c)];
            r.pos_counts[size_t(c)] += o.pos[size_t(c)];
            r.neg_counts[size_t(c)] += o.neg[size_t(c)];
        }
    }
    return r;
}

std::vector<int64_t> simulate_pe(const PEWeights &pe, const std::vector<int64_t> &x, int64_t gamma, ResetMode mode)
{
    return run_window(pe, encode_counts(x, gamma), mode).counts;
}

} // namespace fpsa
