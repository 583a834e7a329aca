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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpsa/common.hpp"

namespace fpsa {

enum class OpKind
{
    Conv2d,
    FullyConnected,
    MaxPool,
    AvgPool,
    Relu,
    Add,
    Concat,
    Flatten,
};

std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);
bool has_weights(OpKind kind);

// Feature maps are [C, H, W]; vectors are [N].
using Shape = std::vector<int64_t>;
int64_t element_count(const Shape &shape);
std::string shape_string(const Shape &shape);

struct OpAttrs
{
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int pad = 0;
    int out_channels = 0; // conv2d
    int out_features = 0; // fully-connected
};

// Real-valued weights. A graph may be "shape-only" (values empty) for
// statistics over models too large to materialize.
struct WeightTensor
{
    Shape shape; // conv: [outC, inC, kH, kW]; fc: [out, in]
    std::vector<float> values;
    bool has_bias = false;
    std::vector<float> bias;

    bool materialized() const { return !values.empty(); }
    int64_t weight_elements() const { return element_count(shape); }
    int64_t bias_elements() const { return has_bias && !shape.empty() ? shape[0] : 0; }
};

// Integer form of a weighted layer at count level. Output of a layer with
// a single row tile is clamp(floor(acc / divisor) + offset, 0, gamma). With
// several tiles every tile produces a saturating partial
// clamp(floor(acc_k / divisor) + gamma/2, 0, gamma) and the layer output is
// clamp(sum_k partial_k - tiles * gamma/2 + offset, 0, gamma).
struct QuantizedLayer
{
    double weight_scale = 1.0;
    std::vector<int32_t> weights; // same layout as WeightTensor::shape
    std::vector<int32_t> bias;    // added as bias * gamma to the last tile
    int64_t divisor = 1;
    int64_t tile_rows = 0; // data rows per row tile
    int tiles = 1;
};

struct TensorOp
{
    std::string id;
    OpKind kind = OpKind::Relu;
    OpAttrs attrs;
    std::vector<std::string> inputs; // producer node id or graph input name, in slot order
    WeightTensor weights;

    // Filled in by quantize().
    std::optional<QuantizedLayer> quant;
    int offset = 0;          // count offset carried by this op's output tensor
    double act_scale = 0.0;  // real value of one count on the output tensor
};

struct InputDecl
{
    std::string name;
    Shape shape;
    int bits = 8;
};

struct QuantSettings
{
    int gamma = 64;
    int bits_w = 8;
    int bits_io = 6;
    int rows = 256;
    int cols = 256;
};

struct ComputationalGraph
{
    std::string name;
    std::vector<InputDecl> inputs;
    std::vector<TensorOp> nodes;
    std::vector<std::string> outputs; // empty: every node without consumers
    std::optional<QuantSettings> quant;

    const TensorOp *find(std::string_view id) const;
    const InputDecl *find_input(std::string_view name) const;
    std::vector<std::string> output_ids() const;
    bool is_quantized() const { return quant.has_value(); }
};

// Throws ValidationError naming the offending node (cycles, shape mismatch,
// attribute/kind mismatch, weight shape mismatch).
void validate(const ComputationalGraph &g);

// Node indices in dependency order; ties broken by declaration order.
std::vector<size_t> topological_order(const ComputationalGraph &g);

// Output shape of every node and graph input, keyed by name.
std::map<std::string, Shape> infer_shapes(const ComputationalGraph &g);

struct LayerShare
{
    std::string id;
    int64_t weights = 0;
    int64_t ops = 0;
    double weight_fraction = 0.0;
    double op_fraction = 0.0;
};

struct ModelStats
{
    int64_t weight_count = 0; // weights + biases
    int64_t op_count = 0;     // 2 ops per multiply-accumulate
    std::vector<LayerShare> layers;
};

ModelStats graph_stats(const ComputationalGraph &g);

// model JSON + sidecar little-endian float32 weight file
ComputationalGraph load_model(const std::string &path);
void save_model(const ComputationalGraph &g, const std::string &path);

struct BuiltinOptions
{
    double scale = 1.0;
    uint64_t seed = 1;
    bool materialize = true;
};

std::vector<std::string> builtin_model_names();
ComputationalGraph builtin_model(std::string_view name, const BuiltinOptions &opts = {});

} // namespace fpsa
