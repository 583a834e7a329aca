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
#include <map>
#include <string>
#include <vector>

#include "fpsa/model_ir.hpp"

namespace fpsa {

// Crossbar processing element geometry and precision.
struct PEConfig
{
    int rows = 256;
    int cols_phys = 512; // two physical columns per logical column
    int bits_w = 8;
    int bits_io = 6;
    int cells_per_weight = 2; // variation model: cells per weight per sign bank
    int levels = 16;          // conductance levels per cell

    int cols_logical() const { return cols_phys / 2; }
    int64_t gamma() const { return int64_t(1) << bits_io; }
    int64_t qmax() const { return (int64_t(1) << (bits_w - 1)) - 1; }
    // Throws ConfigError on an inconsistent configuration.
    void check() const;
};

// Quantize weights to a symmetric bits_w grid with one scale per layer,
// choose divisors, count offsets and row tiling. Returns a new graph.
ComputationalGraph quantize(const ComputationalGraph &g, const PEConfig &cfg, Diagnostics *diag = nullptr);

// Constant rows (count value per row) and per-column weights realizing
// per-column totals sum_r w[r][j] * count[r] exactly with |w| <= qmax.
struct ConstRows
{
    std::vector<int64_t> counts;              // one entry per constant row
    std::vector<std::vector<int32_t>> weights; // [row][column]
};
ConstRows decompose_constants(const std::vector<int64_t> &totals, int64_t gamma, int64_t qmax);
int const_rows_needed(const std::vector<int64_t> &totals, int64_t gamma, int64_t qmax);

struct RowSource
{
    enum class Kind
    {
        CoreOp,
        Input,
        Const,
    };
    Kind kind = Kind::Const;
    int32_t node = -1;  // core-op id, or graph-input index
    int64_t index = 0;  // output column, input element, or constant count

    static RowSource coreop(int32_t id, int64_t col) { return {Kind::CoreOp, id, col}; }
    static RowSource input(int32_t in, int64_t elem) { return {Kind::Input, in, elem}; }
    static RowSource constant(int64_t count) { return {Kind::Const, -1, count}; }
    bool operator==(const RowSource &) const = default;
};

// One crossbar weight matrix shared by every member core-op.
struct WeightGroup
{
    std::string id;
    std::string layer;
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<int32_t> weights; // row-major [row][col]
    int64_t divisor = 1;

    int32_t at(int64_t r, int64_t c) const { return weights[size_t(r * cols + c)]; }
};

// y_j = clamp(floor(sum_r W[r][j] * x_r / divisor), 0, gamma)
struct CoreOp
{
    int32_t id = 0;
    int32_t group = 0;
    std::string role; // mul, reduce, max-a, max-b, avg, add, relu
    std::vector<RowSource> rows;
};

struct InputPort
{
    std::string name;
    Shape shape;
};

struct OutputPort
{
    std::string name;
    std::vector<RowSource> elems;
};

struct CoreOpGraph
{
    int64_t gamma = 64;
    std::vector<WeightGroup> groups;
    std::vector<CoreOp> coreops; // ids equal indices; stored in dependency order
    std::vector<InputPort> inputs;
    std::vector<OutputPort> outputs;

    int64_t in_width(const CoreOp &op) const { return int64_t(op.rows.size()); }
    int64_t out_width(const CoreOp &op) const { return groups[size_t(op.group)].cols; }
    // Distinct producer core-ops in ascending id order.
    std::vector<int32_t> predecessors(int32_t id) const;
    std::vector<std::vector<int32_t>> successors() const;
};

CoreOpGraph lower(const ComputationalGraph &g, const PEConfig &cfg);

// Throws ValidationError if a core-op exceeds the crossbar, a weight leaves
// the bits_w range, a row refers forward, or a port width disagrees.
void check_coreop_graph(const CoreOpGraph &gco, const PEConfig &cfg);

// Mean fraction of crossbar cells occupied, averaged over core-ops.
double spatial_fit(const CoreOpGraph &gco, const PEConfig &cfg);

using CountMap = std::map<std::string, std::vector<int64_t>>;

// Count-level evaluation of a quantized graph directly from its layers.
CountMap evaluate_reference(const ComputationalGraph &g, const CountMap &inputs);
// Count-level evaluation of every core-op; returns per-core-op outputs.
std::vector<std::vector<int64_t>> evaluate_coreops(const CoreOpGraph &gco, const CountMap &inputs);
CountMap collect_outputs(const CoreOpGraph &gco, const CountMap &inputs,
                         const std::vector<std::vector<int64_t>> &values);
CountMap random_inputs(const CoreOpGraph &gco, uint64_t seed);

int64_t verify_lowering(const ComputationalGraph &g, const CoreOpGraph &gco, int n_samples, uint64_t seed);

} // namespace fpsa
