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


#include "fpsa/serialize.hpp"

#include <algorithm>

#include "json.hpp"

namespace fpsa {

using nlohmann::json;

namespace {

json parse_json(const std::string &text, const char *what)
{
    try {
        return json::parse(text);
    } catch (const json::exception &e) {
        throw ParseError(std::string("malformed ") + what + ": " + e.what());
    }
}

template <typename F>
auto guarded(const char *what, F &&f) -> decltype(f())
{
    try {
        return f();
    } catch (const json::exception &e) {
        throw ParseError(std::string("malformed ") + what + ": " + e.what());
    }
}

json row_json(const RowSource &s) { return json::array({int(s.kind), s.node, s.index}); }

RowSource row_from(const json &j)
{
    int k = j.at(0).get<int>();
    if (k < 0 || k > 2)
        throw ParseError("row source kind out of range");
    return {RowSource::Kind(k), j.at(1).get<int32_t>(), j.at(2).get<int64_t>()};
}

BlockKind block_kind_from(const std::string &s)
{
    if (s == "PE")
        return BlockKind::PE;
    if (s == "SMB")
        return BlockKind::SMB;
    if (s == "CLB")
        return BlockKind::CLB;
    throw ParseError("unknown block kind '" + s + "'");
}

} // namespace

std::string dump_quantized_graph(const ComputationalGraph &g)
{
    if (!g.quant)
        throw ValidationError("", "graph is not quantized");
    const auto &q = *g.quant;
    json j;
    j["name"] = g.name;
    j["quant"] = {{"gamma", q.gamma}, {"bits_w", q.bits_w}, {"bits_io", q.bits_io}, {"rows", q.rows}, {"cols", q.cols}};
    j["inputs"] = json::array();
    for (const auto &in : g.inputs)
        j["inputs"].push_back({{"name", in.name}, {"shape", in.shape}, {"bits", in.bits}});
    j["outputs"] = g.outputs;
    j["nodes"] = json::array();
    for (const auto &op : g.nodes) {
        const auto &a = op.attrs;
        json jn{{"id", op.id},
                {"kind", std::string(to_string(op.kind))},
                {"attrs",
                 {{"kernel_h", a.kernel_h},
                  {"kernel_w", a.kernel_w},
                  {"stride", a.stride},
                  {"pad", a.pad},
                  {"out_channels", a.out_channels},
                  {"out_features", a.out_features}}},
                {"inputs", op.inputs},
                {"weight_shape", op.weights.shape},
                {"has_bias", op.weights.has_bias},
                {"offset", op.offset},
                {"act_scale", op.act_scale}};
        if (op.quant) {
            const auto &ql = *op.quant;
            jn["quant"] = {{"weight_scale", ql.weight_scale}, {"weights", ql.weights}, {"bias", ql.bias},
                           {"divisor", ql.divisor},           {"tile_rows", ql.tile_rows}, {"tiles", ql.tiles}};
        }
        j["nodes"].push_back(std::move(jn));
    }
    return j.dump();
}

ComputationalGraph parse_quantized_graph(const std::string &text)
{
    json j = parse_json(text, "quantized graph");
    return guarded("quantized graph", [&] {
        ComputationalGraph g;
        g.name = j.at("name").get<std::string>();
        const auto &jq = j.at("quant");
        g.quant = QuantSettings{jq.at("gamma"), jq.at("bits_w"), jq.at("bits_io"), jq.at("rows"), jq.at("cols")};
        for (const auto &ji : j.at("inputs"))
            g.inputs.push_back({ji.at("name"), ji.at("shape").get<Shape>(), ji.at("bits")});
        g.outputs = j.at("outputs").get<std::vector<std::string>>();
        for (const auto &jn : j.at("nodes")) {
            TensorOp op;
            op.id = jn.at("id").get<std::string>();
            op.kind = op_kind_from_string(jn.at("kind").get<std::string>());
            const auto &a = jn.at("attrs");
            op.attrs = {a.at("kernel_h"), a.at("kernel_w"),     a.at("stride"),
                        a.at("pad"),      a.at("out_channels"), a.at("out_features")};
            op.inputs = jn.at("inputs").get<std::vector<std::string>>();
            op.weights.shape = jn.at("weight_shape").get<Shape>();
            op.weights.has_bias = jn.at("has_bias");
            op.offset = jn.at("offset");
            op.act_scale = jn.at("act_scale");
            if (jn.contains("quant")) {
                const auto &ql = jn.at("quant");
                QuantizedLayer l;
                l.weight_scale = ql.at("weight_scale");
                l.weights = ql.at("weights").get<std::vector<int32_t>>();
                l.bias = ql.at("bias").get<std::vector<int32_t>>();
                l.divisor = ql.at("divisor");
                l.tile_rows = ql.at("tile_rows");
                l.tiles = ql.at("tiles");
                op.quant = std::move(l);
            }
            g.nodes.push_back(std::move(op));
        }
        return g;
    });
}

std::string dump_coreop_graph(const CoreOpGraph &g)
{
    json j;
    j["gamma"] = g.gamma;
    j["groups"] = json::array();
    for (const auto &wg : g.groups)
        j["groups"].push_back({{"id", wg.id},
                               {"layer", wg.layer},
                               {"rows", wg.rows},
                               {"cols", wg.cols},
                               {"divisor", wg.divisor},
                               {"weights", wg.weights}});
    j["coreops"] = json::array();
    for (const auto &op : g.coreops) {
        json rows = json::array();
        for (const auto &s : op.rows)
            rows.push_back(row_json(s));
        j["coreops"].push_back({{"group", op.group}, {"role", op.role}, {"rows", std::move(rows)}});
    }
    j["inputs"] = json::array();
    for (const auto &in : g.inputs)
        j["inputs"].push_back({{"name", in.name}, {"shape", in.shape}});
    j["outputs"] = json::array();
    for (const auto &out : g.outputs) {
        json elems = json::array();
        for (const auto &s : out.elems)
            elems.push_back(row_json(s));
        j["outputs"].push_back({{"name", out.name}, {"elems", std::move(elems)}});
    }
    return j.dump();
}

CoreOpGraph parse_coreop_graph(const std::string &text)
{
    json j = parse_json(text, "core-op graph");
    return guarded("core-op graph", [&] {
        CoreOpGraph g;
        g.gamma = j.at("gamma");
        for (const auto &jg : j.at("groups"))
            g.groups.push_back({jg.at("id"), jg.at("layer"), jg.at("rows"), jg.at("cols"),
                                jg.at("weights").get<std::vector<int32_t>>(), jg.at("divisor")});
        for (const auto &jc : j.at("coreops")) {
            CoreOp op;
            op.id = int32_t(g.coreops.size());
            op.group = jc.at("group");
            if (op.group < 0 || size_t(op.group) >= g.groups.size())
                throw ParseError("core-op refers to an unknown weight group");
            op.role = jc.at("role");
            for (const auto &r : jc.at("rows"))
                op.rows.push_back(row_from(r));
            g.coreops.push_back(std::move(op));
        }
        for (const auto &ji : j.at("inputs"))
            g.inputs.push_back({ji.at("name"), ji.at("shape").get<Shape>()});
        for (const auto &jo : j.at("outputs")) {
            OutputPort p;
            p.name = jo.at("name");
            for (const auto &e : jo.at("elems"))
                p.elems.push_back(row_from(e));
            g.outputs.push_back(std::move(p));
        }
        return g;
    });
}

std::string dump_table(const WeightGroupTable &t)
{
    json j = json::array();
    for (const auto &g : t.groups)
        j.push_back({{"group", g.group}, {"duplication", g.duplication}, {"members", g.members}});
    return json{{"groups", j}}.dump();
}

WeightGroupTable parse_table(const std::string &text)
{
    json j = parse_json(text, "weight group table");
    return guarded("weight group table", [&] {
        WeightGroupTable t;
        for (const auto &jg : j.at("groups"))
            t.groups.push_back({jg.at("group"), jg.at("members").get<std::vector<int32_t>>(), jg.at("duplication")});
        return t;
    });
}

std::string dump_schedule(const Schedule &s)
{
    json pes = json::array(), buf = json::array();
    for (const auto &p : s.pes)
        pes.push_back({p.group, p.copy});
    for (const auto &b : s.buffered)
        buf.push_back({b.from, b.to, b.port});
    return json{{"gamma", s.gamma}, {"read_ports", s.read_ports}, {"pes", pes},      {"pe_of", s.pe_of},
                {"start", s.start}, {"end", s.end},               {"stage", s.stage}, {"buffered", buf}}
            .dump();
}

Schedule parse_schedule(const std::string &text)
{
    json j = parse_json(text, "schedule");
    return guarded("schedule", [&] {
        Schedule s;
        s.gamma = j.at("gamma");
        s.read_ports = j.at("read_ports");
        for (const auto &p : j.at("pes"))
            s.pes.push_back({p.at(0), p.at(1)});
        s.pe_of = j.at("pe_of").get<std::vector<int32_t>>();
        s.start = j.at("start").get<std::vector<int64_t>>();
        s.end = j.at("end").get<std::vector<int64_t>>();
        s.stage = j.at("stage").get<std::vector<int32_t>>();
        for (const auto &b : j.at("buffered"))
            s.buffered.push_back({b.at(0), b.at(1), b.at(2)});
        std::sort(s.buffered.begin(), s.buffered.end());
        return s;
    });
}

std::string dump_netlist(const Netlist &nl)
{
    json blocks = json::array(), nets = json::array();
    for (const auto &b : nl.blocks) {
        json ctl = json::array();
        for (const auto &c : b.control)
            ctl.push_back({c.cycle, c.action, c.port});
        blocks.push_back({{"id", b.id},
                          {"kind", to_string(b.kind)},
                          {"name", b.name},
                          {"pe_instance", b.pe_instance},
                          {"group", b.group},
                          {"producer", b.producer},
                          {"capacity_bits", b.capacity_bits},
                          {"clb", b.clb},
                          {"control", std::move(ctl)},
                          {"controls", b.controls},
                          {"stage", b.stage},
                          {"active_cycles", b.active_cycles}});
    }
    for (const auto &n : nl.nets)
        nets.push_back({{"id", n.id},
                        {"kind", n.kind},
                        {"driver", n.driver},
                        {"sinks", n.sinks},
                        {"width", n.width},
                        {"stage", n.stage}});
    return json{{"num_stages", nl.num_stages}, {"blocks", blocks}, {"nets", nets}}.dump();
}

Netlist parse_netlist(const std::string &text)
{
    json j = parse_json(text, "netlist");
    return guarded("netlist", [&] {
        Netlist nl;
        nl.num_stages = j.at("num_stages");
        for (const auto &jb : j.at("blocks")) {
            Block b;
            b.id = jb.at("id");
            b.kind = block_kind_from(jb.at("kind"));
            b.name = jb.at("name");
            b.pe_instance = jb.at("pe_instance");
            b.group = jb.at("group");
            b.producer = jb.at("producer");
            b.capacity_bits = jb.at("capacity_bits");
            b.clb = jb.at("clb");
            for (const auto &c : jb.at("control"))
                b.control.push_back({c.at(0), c.at(1), c.at(2)});
            b.controls = jb.at("controls").get<std::vector<int32_t>>();
            b.stage = jb.at("stage");
            b.active_cycles = jb.at("active_cycles");
            if (b.id != int32_t(nl.blocks.size()))
                throw ParseError("netlist block ids must be consecutive");
            nl.blocks.push_back(std::move(b));
        }
        for (const auto &jn : j.at("nets")) {
            Net n;
            n.id = jn.at("id");
            n.kind = jn.at("kind");
            n.driver = jn.at("driver");
            n.sinks = jn.at("sinks").get<std::vector<int32_t>>();
            n.width = jn.at("width");
            n.stage = jn.at("stage");
            for (int32_t b : n.sinks)
                if (b < 0 || size_t(b) >= nl.blocks.size())
                    throw ParseError("net sink refers to an unknown block");
            if (n.driver < 0 || size_t(n.driver) >= nl.blocks.size())
                throw ParseError("net driver refers to an unknown block");
            nl.nets.push_back(std::move(n));
        }
        return nl;
    });
}

std::string dump_placement(const Placement &p, const FabricModel &f)
{
    json xy = json::array();
    for (int32_t s : p.site_of)
        xy.push_back({f.sites[size_t(s)].x, f.sites[size_t(s)].y});
    return json{{"seed", p.seed},
                {"initial_cost", p.initial_cost},
                {"final_cost", p.final_cost},
                {"moves", p.moves},
                {"quench_moves", p.quench_moves},
                {"quench_uphill_accepted", p.quench_uphill_accepted},
                {"block_xy", xy}}
            .dump();
}

std::string dump_routes(const RoutedDesign &r, const FabricModel &f)
{
    json nets = json::array();
    for (const auto &rn : r.nets) {
        int64_t wires = 0;
        for (int32_t n : rn.nodes)
            wires += f.nodes[size_t(n)].kind == RRKind::ChanX || f.nodes[size_t(n)].kind == RRKind::ChanY;
        nets.push_back({{"net", rn.net},
                        {"nodes", rn.nodes.size()},
                        {"wire_segments", wires},
                        {"sink_blocks", rn.sink_blocks},
                        {"sink_delay", rn.sink_delay}});
    }
    return json{{"iterations", r.iterations}, {"overuse", r.overuse}, {"nets", nets}}.dump();
}

std::string dump_critical_path(const CriticalPath &cp)
{
    return json{{"ns", cp.ns}, {"net", cp.net}, {"per_stage", cp.per_stage}}.dump();
}

CriticalPath parse_critical_path(const std::string &text)
{
    json j = parse_json(text, "critical path");
    return guarded("critical path", [&] {
        return CriticalPath{j.at("ns"), j.at("net"), j.at("per_stage").get<std::vector<double>>()};
    });
}

std::string dump_counts(const CountMap &m) { return json(m).dump(); }

CountMap parse_counts(const std::string &text)
{
    json j = parse_json(text, "count vectors");
    return guarded("count vectors", [&] { return j.get<CountMap>(); });
}

std::string dump_perf(const PerfReport &r)
{
    json stages = json::array();
    for (const auto &s : r.stages)
        stages.push_back({{"stage", s.stage},
                          {"cycles", s.cycles},
                          {"compute_ns", s.compute_ns},
                          {"comm_ns", s.comm_ns},
                          {"time_ns", s.time_ns}});
    return json{{"pes", r.pes},
                {"smbs", r.smbs},
                {"clbs", r.clbs},
                {"ops_per_inference", r.ops_per_inference},
                {"peak_ops", r.peak_ops},
                {"spatial_bound", r.spatial_bound},
                {"temporal_bound", r.temporal_bound},
                {"achieved", r.achieved},
                {"spatial_fraction", r.spatial_fraction},
                {"temporal_fraction", r.temporal_fraction},
                {"area_mm2", r.area_mm2},
                {"energy_uj", r.energy_uj},
                {"latency_us", r.latency_us},
                {"bottleneck_ns", r.bottleneck_ns},
                {"throughput", r.throughput},
                {"density", r.density},
                {"comm_share", r.comm_share},
                {"bounds_ordered", r.bounds_ordered()},
                {"stages", stages}}
            .dump();
}

std::string wrap_artifact(const std::string &kind, const std::map<std::string, std::string> &sections,
                          const Provenance &prov)
{
    json j{{"artifact", kind}, {"version", prov.version}, {"config_hash", prov.config_hash}};
    for (const auto &[name, text] : sections) {
        if (j.contains(name))
            throw Error("artifact section '" + name + "' collides with a header field");
        j[name] = parse_json(text, "artifact section");
    }
    return j.dump(1) + "\n";
}

Artifact unwrap_artifact(const std::string &text)
{
    json j = parse_json(text, "artifact");
    return guarded("artifact", [&] {
        Artifact a;
        a.kind = j.at("artifact");
        a.prov = {j.at("version"), j.at("config_hash")};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "artifact" && it.key() != "version" && it.key() != "config_hash")
                a.sections[it.key()] = it.value().dump();
        return a;
    });
}

} // namespace fpsa
