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

#pragma once

#include <cstdint>
#include <vector>

#include "fpsa/common.hpp"

namespace fpsa {

struct NeuronParams
{
    double v_dd = 1.0;
    double v_re = 0.0;
    double v_th = 0.63212055882855767; // 1 - 1/e
    double c = 1.0;
    double tau = 1.0; // charging time per cycle

    // Conductance-cycles integrated per output spike.
    double eta() const;
    void check() const;
};

enum class ResetMode
{
    Carry,
    Hard,
};

ResetMode reset_mode_from_string(const std::string &s);
const char *to_string(ResetMode m);

struct SpikeTrain
{
    std::vector<uint8_t> bits; // bits[t - 1] is cycle t

    int64_t gamma() const { return int64_t(bits.size()); }
    int64_t count() const;
};

// Evenly spaced rate code: s(t) = 1 iff floor(t*x/gamma) > floor((t-1)*x/gamma).
SpikeTrain encode_count(int64_t x, int64_t gamma);
std::vector<SpikeTrain> encode_counts(const std::vector<int64_t> &x, int64_t gamma);

// Debt-counter subtracter. Negative spikes of a cycle are applied before
// the positive spike of the same cycle; debt never reaches back in time.
SpikeTrain subtract_trains(const SpikeTrain &pos, const SpikeTrain &neg);

// Integer crossbar weights with the divisor that maps them to conductance:
// g = |w| * eta / divisor on the positive or negative physical column.
struct PEWeights
{
    int64_t rows = 0;
    int64_t cols = 0; // logical columns
    std::vector<int32_t> w; // row-major [row][col]
    int64_t divisor = 1;
};

// Ideal relu VMM with one-spike-per-cycle saturation.
std::vector<int64_t> pe_oracle(const PEWeights &pe, const std::vector<int64_t> &x, int64_t gamma);

// Analog crossbar state per physical column, with even index 2j the positive
// and 2j+1 the negative column of logical column j. The membrane is stored as
// headroom V_dd - U so that a carried surplus of several thresholds stays
// representable; U = V_dd - headroom.
struct CrossbarState
{
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<double> g_pos, g_neg; // [row][col], siemens
    std::vector<double> headroom;     // V_dd - U per physical column
    std::vector<int64_t> debt;        // subtracter debt per logical column
    std::vector<double> integral;     // sum of 1/R since reset of the window
    // Integral value at the sub-cycle threshold crossing of each spike,
    // per physical column, filled when record_crossings is set.
    bool record_crossings = false;
    std::vector<std::vector<double>> crossings;
};

CrossbarState make_crossbar(const PEWeights &pe, const NeuronParams &np);
void reset_window(CrossbarState &st, const NeuronParams &np);

struct StepOutput
{
    std::vector<uint8_t> pos, neg; // neuron spikes per logical column
    std::vector<uint8_t> out;      // after the subtracter
};

// One spiking-clock cycle: U <- V_dd - (V_dd - U) exp(-tau G / C) with
// G = sum of conductances of spiking rows; threshold, reset, subtract.
StepOutput step_pe(CrossbarState &st, const std::vector<uint8_t> &spikes, const NeuronParams &np, ResetMode mode);

// Integer cycle engine: integrals kept in units of eta / divisor, so the
// threshold is exactly `divisor`.
struct IntegerPE
{
    const PEWeights *pe = nullptr;
    std::vector<int64_t> acc;  // per physical column
    std::vector<int64_t> debt; // per logical column

    explicit IntegerPE(const PEWeights &w);
    void reset();
    void step(const std::vector<uint8_t> &spikes, ResetMode mode, std::vector<uint8_t> &out);
};

struct WindowResult
{
    std::vector<int64_t> counts;     // after the subtracter
    std::vector<int64_t> pos_counts; // positive physical column spikes
    std::vector<int64_t> neg_counts;
    std::vector<SpikeTrain> trains;  // output train per logical column
};

// Feeds gamma cycles of input trains through a PE and counts spikes.
WindowResult run_window(const PEWeights &pe, const std::vector<SpikeTrain> &inputs, ResetMode mode);
WindowResult run_window_analog(const PEWeights &pe, const std::vector<SpikeTrain> &inputs, const NeuronParams &np,
                               ResetMode mode);

// Convenience: evenly spaced encoding of counts followed by run_window.
std::vector<int64_t> simulate_pe(const PEWeights &pe, const std::vector<int64_t> &x, int64_t gamma,
                                 ResetMode mode = ResetMode::Carry);

} // namespace fpsa
