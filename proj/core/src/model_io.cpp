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

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "fpsa/model_ir.hpp"

namespace fpsa {

using nlohmann::json;

namespace {

void append_floats(std::vector<char> &blob, const std::vector<float> &vals)
{
    for (float f : vals) {
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int b = 0; b < 4; ++b)
            blob.push_back(char((bits >> (8 * b)) & 0xff));
    }
}

std::vector<float> read_floats(const std::vector<char> &blob, int64_t offset, int64_t length, const std::string &node)
{
    if (offset < 0 || length < 0 || (offset + length) * 4 > int64_t(blob.size()))
        throw ValidationError(node, "weight reference outside sidecar file");
    std::vector<float> out(static_cast<size_t>(length));
    for (int64_t i = 0; i < length; ++i) {
        uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= uint32_t(uint8_t(blob[size_t((offset + i) * 4 + b)])) << (8 * b);
        std::memcpy(&out[size_t(i)], &bits, 4);
    }
    return out;
}

std::string sidecar_path(const std::string &model_path, const std::string &ref)
{
    return (std::filesystem::path(model_path).parent_path() / ref).string();
}

} // namespace

ComputationalGraph load_model(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open model file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception &e) {
        throw ParseError("malformed model file '" + path + "': " + e.what());
    }

    ComputationalGraph g;
    std::vector<char> blob;
    try {
        g.name = j.value("name", std::string("model"));
        for (const auto &ji : j.at("inputs"))
            g.inputs.push_back({ji.at("name").get<std::string>(), ji.at("shape").get<Shape>(), ji.value("bits", 8)});

        if (j.contains("weights_file")) {
            std::ifstream wf(sidecar_path(path, j.at("weights_file").get<std::string>()), std::ios::binary);
            if (!wf)
                throw ParseError("cannot open weight sidecar for '" + path + "'");
            blob.assign(std::istreambuf_iterator<char>(wf), {});
        }

        for (const auto &jn : j.at("nodes")) {
            TensorOp op;
            op.id = jn.at("id").get<std::string>();
            op.kind = op_kind_from_string(jn.at("kind").get<std::string>());
            if (jn.contains("attrs")) {
                const auto &a = jn.at("attrs");
                op.attrs.kernel_h = a.value("kernel_h", 0);
                op.attrs.kernel_w = a.value("kernel_w", 0);
                op.attrs.stride = a.value("stride", 1);
                op.attrs.pad = a.value("pad", 0);
                op.attrs.out_channels = a.value("out_channels", 0);
                op.attrs.out_features = a.value("out_features", 0);
            }
            if (jn.contains("weights_ref") && !jn.at("weights_ref").is_null()) {
                const auto &w = jn.at("weights_ref");
                op.weights.shape = w.at("shape").get<Shape>();
                if (w.contains("offset"))
                    op.weights.values = read_floats(blob, w.at("offset"), w.at("length"), op.id);
                if (w.contains("bias")) {
                    op.weights.has_bias = true;
                    const auto &b = w.at("bias");
                    if (b.contains("offset"))
                        op.weights.bias = read_floats(blob, b.at("offset"), b.at("length"), op.id);
                }
            }
            g.nodes.push_back(std::move(op));
        }

        // Edges [src, src_slot, dst, dst_slot]; every op has one output slot.
        std::map<std::string, std::map<int, std::string>> slots;
        for (const auto &e : j.at("edges")) {
            if (!e.is_array() || e.size() != 4)
                throw ParseError("edge must be [src, slot, dst, slot]");
            auto src = e[0].get<std::string>();
            auto dst = e[2].get<std::string>();
            if (e[1].get<int>() != 0)
                throw ValidationError(src, "only output slot 0 exists");
            if (!slots[dst].emplace(e[3].get<int>(), src).second)
                throw ValidationError(dst, "input slot bound twice");
        }
        for (auto &op : g.nodes) {
            auto &s = slots[op.id];
            int expect = 0;
            for (const auto &[slot, src] : s) {
                if (slot != expect++)
                    throw ValidationError(op.id, "input slots are not contiguous from 0");
                op.inputs.push_back(src);
            }
            slots.erase(op.id);
        }
        for (const auto &[dst, _] : slots)
            if (!dst.empty())
                throw ValidationError(dst, "edge targets unknown node");
        if (j.contains("outputs"))
            g.outputs = j.at("outputs").get<std::vector<std::string>>();
    } catch (const json::exception &e) {
        throw ParseError("malformed model file '" + path + "': " + e.what());
    }
    validate(g);
    return g;
}

void save_model(const ComputationalGraph &g, const std::string &path)
{
    json j;
    j["name"] = g.name;
    j["inputs"] = json::array();
    for (const auto &in : g.inputs)
        j["inputs"].push_back({{"name", in.name}, {"shape", in.shape}, {"bits", in.bits}});

    std::vector<char> blob;
    j["nodes"] = json::array();
    j["edges"] = json::array();
    for (const auto &op : g.nodes) {
        json jn{{"id", op.id}, {"kind", std::string(to_string(op.kind))}};
        const auto &a = op.attrs;
        json attrs = json::object();
        if (op.kind == OpKind::Conv2d || op.kind == OpKind::MaxPool || op.kind == OpKind::AvgPool) {
            attrs["kernel_h"] = a.kernel_h;
            attrs["kernel_w"] = a.kernel_w;
            attrs["stride"] = a.stride;
            attrs["pad"] = a.pad;
        }
        if (op.kind == OpKind::Conv2d)
            attrs["out_channels"] = a.out_channels;
        if (op.kind == OpKind::FullyConnected)
            attrs["out_features"] = a.out_features;
        jn["attrs"] = attrs;
        if (has_weights(op.kind)) {
            json w{{"shape", op.weights.shape}};
            if (op.weights.materialized()) {
                w["offset"] = blob.size() / 4;
                w["length"] = op.weights.values.size();
                append_floats(blob, op.weights.values);
            }
            if (op.weights.has_bias) {
                json b = json::object();
                if (!op.weights.bias.empty()) {
                    b["offset"] = blob.size() / 4;
                    b["length"] = op.weights.bias.size();
                    append_floats(blob, op.weights.bias);
                }
                w["bias"] = b;
            }
            jn["weights_ref"] = w;
        }
        j["nodes"].push_back(jn);
        for (size_t s = 0; s < op.inputs.size(); ++s)
            j["edges"].push_back({op.inputs[s], 0, op.id, s});
    }
    if (!g.outputs.empty())
        j["outputs"] = g.outputs;

    auto bin_name = std::filesystem::path(path).filename().string() + ".weights.bin";
    j["weights_file"] = bin_name;
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write model file '" + path + "'");
    out << j.dump(2) << '\n';
    std::ofstream wf(sidecar_path(path, bin_name), std::ios::binary);
    wf.write(blob.data(), std::streamsize(blob.size()));
    if (!out || !wf)
        throw Error("failed writing model '" + path + "'");
}

} // namespace fpsa
