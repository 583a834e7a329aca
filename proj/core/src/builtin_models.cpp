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

#include <cmath>
#include <random>

#include "fpsa/model_ir.hpp"

namespace fpsa {

namespace {

class Builder
{
  public:
    Builder(std::string name, Shape input, const BuiltinOptions &opts) : rng_(opts.seed), opts_(opts)
    {
        g_.name = std::move(name);
        g_.inputs.push_back({"data", input, 8});
        shape_ = std::move(input);
        last_ = "data";
    }

    // Scaled width; the classifier and the input keep their canonical size.
    int width(int canonical) const
    {
        auto w = std::llround(canonical * opts_.scale);
        if (w < 1)
            throw ConfigError("scale " + std::to_string(opts_.scale) + " produces a zero-width layer in " + g_.name);
        return int(w);
    }

    void conv(const std::string &id, int out_c, int k, int pad, bool relu = true)
    {
        TensorOp op = make(id, OpKind::Conv2d);
        op.attrs.kernel_h = op.attrs.kernel_w = k;
        op.attrs.pad = pad;
        op.attrs.out_channels = out_c;
        fill(op, {out_c, shape_[0], k, k}, shape_[0] * k * k);
        shape_ = {out_c, shape_[1] + 2 * pad - k + 1, shape_[2] + 2 * pad - k + 1};
        push(std::move(op));
        if (relu)
            this->relu("relu_" + id);
    }

    void fc(const std::string &id, int out, bool relu)
    {
        if (shape_.size() != 1)
            flatten("flatten_" + id);
        TensorOp op = make(id, OpKind::FullyConnected);
        op.attrs.out_features = out;
        fill(op, {out, shape_[0]}, shape_[0]);
        shape_ = {out};
        push(std::move(op));
        if (relu)
            this->relu("relu_" + id);
    }

    void max_pool(const std::string &id, int k)
    {
        TensorOp op = make(id, OpKind::MaxPool);
        op.attrs.kernel_h = op.attrs.kernel_w = k;
        op.attrs.stride = k;
        shape_ = {shape_[0], shape_[1] / k, shape_[2] / k};
        push(std::move(op));
    }

    void relu(const std::string &id) { push(make(id, OpKind::Relu)); }

    void flatten(const std::string &id)
    {
        push(make(id, OpKind::Flatten));
        shape_ = {element_count(shape_)};
    }

    ComputationalGraph finish()
    {
        g_.outputs = {last_};
        validate(g_);
        return std::move(g_);
    }

  private:
    TensorOp make(const std::string &id, OpKind kind)
    {
        TensorOp op;
        op.id = id;
        op.kind = kind;
        op.inputs = {last_};
        return op;
    }

    void push(TensorOp op)
    {
        last_ = op.id;
        g_.nodes.push_back(std::move(op));
    }

    // He-style initialization: N(0, 2/fan_in), small uniform biases.
    void fill(TensorOp &op, Shape shape, int64_t fan_in)
    {
        op.weights.shape = std::move(shape);
        op.weights.has_bias = true;
        if (!opts_.materialize)
            return;
        std::normal_distribution<float> w(0.0f, float(std::sqrt(2.0 / double(fan_in))));
        std::uniform_real_distribution<float> b(-0.05f, 0.05f);
        op.weights.values.resize(size_t(op.weights.weight_elements()));
        for (auto &v : op.weights.values)
            v = w(rng_);
        op.weights.bias.resize(size_t(op.weights.bias_elements()));
        for (auto &v : op.weights.bias)
            v = b(rng_);
    }

    ComputationalGraph g_;
    Shape shape_;
    std::string last_;
    std::mt19937_64 rng_;
    BuiltinOptions opts_;
};

ComputationalGraph make_mlp(const BuiltinOptions &o)
{
    Builder b("mlp-500-100", {784}, o);
    b.fc("fc1", b.width(500), true);
    b.fc("fc2", b.width(100), true);
    b.fc("fc3", 10, false);
    return b.finish();
}

ComputationalGraph make_lenet(const BuiltinOptions &o)
{
    Builder b("lenet", {1, 28, 28}, o);
    b.conv("conv1", b.width(20), 5, 0);
    b.max_pool("pool1", 2);
    b.conv("conv2", b.width(50), 5, 0);
    b.max_pool("pool2", 2);
    b.fc("fc1", b.width(500), true);
    b.fc("fc2", 10, false);
    return b.finish();
}

ComputationalGraph make_vgg16(const BuiltinOptions &o)
{
    Builder b("vgg16", {3, 224, 224}, o);
    const int blocks[5][2] = {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}};
    for (int s = 0; s < 5; ++s) {
        for (int l = 0; l < blocks[s][1]; ++l)
            b.conv("conv" + std::to_string(s + 1) + "_" + std::to_string(l + 1), b.width(blocks[s][0]), 3, 1);
        b.max_pool("pool" + std::to_string(s + 1), 2);
    }
    b.fc("fc6", b.width(4096), true);
    b.fc("fc7", b.width(4096), true);
    b.fc("fc8", 1000, false);
    return b.finish();
}

ComputationalGraph make_vgg17_cifar(const BuiltinOptions &o)
{
    Builder b("vgg17-cifar", {3, 32, 32}, o);
    const int stages[4] = {32, 64, 128, 128};
    int n = 0;
    for (int s = 0; s < 4; ++s) {
        for (int l = 0; l < 4; ++l)
            b.conv("conv" + std::to_string(++n), b.width(stages[s]), 3, 1);
        if (s < 3)
            b.max_pool("pool" + std::to_string(s + 1), 2);
    }
    b.fc("fc", 10, false);
    return b.finish();
}

ComputationalGraph make_toy_cnn(const BuiltinOptions &o)
{
    Builder b("toy-cnn", {1, 8, 8}, o);
    b.conv("conv1", b.width(4), 3, 0);
    b.max_pool("pool1", 2);
    b.fc("fc1", 10, false);
    return b.finish();
}

} // namespace

std::vector<std::string> builtin_model_names() { return {"mlp-500-100", "lenet", "vgg16", "vgg17-cifar", "toy-cnn"}; }

ComputationalGraph builtin_model(std::string_view name, const BuiltinOptions &opts)
{
    if (!(opts.scale > 0.0) || !std::isfinite(opts.scale))
        throw ConfigError("model scale must be positive");
    if (name == "mlp-500-100" || name == "mlp")
        return make_mlp(opts);
    if (name == "lenet")
        return make_lenet(opts);
    if (name == "vgg16")
        return make_vgg16(opts);
    if (name == "vgg17-cifar")
        return make_vgg17_cifar(opts);
    if (name == "toy-cnn")
        return make_toy_cnn(opts);
    throw ConfigError("unknown built-in model '" + std::string(name) + "'");
}

} // namespace fpsa
