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


#include "fpsa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "fpsa/serialize.hpp"

namespace fpsa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char *const kDeskArch = R"(name = desk
grid = 16x16
row = PS
row = CP
channel_width = 32
segment_length = 1
fc = 0.5
fs = 3
d_sw = 0.6
d_wire = 0.5
in_pins = 48
smb_bits = 16384
clb_entries = 128
smb_read_ports = 2
)";

std::string trim(const std::string &s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T parse_number(const std::string &key, const std::string &v)
{
    std::istringstream is(v);
    T x{};
    is >> x;
    if (is.fail() || !is.eof())
        throw ConfigError("config '" + key + "': cannot parse '" + v + "'");
    return x;
}

std::vector<int64_t> parse_list(const std::string &key, const std::string &v)
{
    std::vector<int64_t> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ','))
        out.push_back(parse_number<int64_t>(key, trim(item)));
    if (out.empty())
        throw ConfigError("config '" + key + "': empty list");
    return out;
}

std::string read_text(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
}

bool is_model_file(const std::string &model)
{
    return model.size() > 5 && model.compare(model.size() - 5, 5, ".json") == 0;
}

class Runner
{
  public:
    Runner(const RunConfig &cfg, std::ostream &log) : cfg_(cfg), log_(log)
    {
        cfg_.validate();
        prov_ = {version_string(), config_hash(cfg_)};
        dir_ = cfg_.out;
        fs::create_directories(dir_);
    }

    void synth();
    void map();
    void pnr();
    void simulate();
    void report();
    void sweep();

  private:
    Artifact need(const std::string &file, const std::string &stage) const
    {
        fs::path p = dir_ / file;
        if (!fs::exists(p))
            throw MissingArtifactError(p.string(), stage);
        Artifact a = unwrap_artifact(read_text(p.string()));
        if (a.prov.config_hash != prov_.config_hash)
            log_ << "warning: " << file << " was produced with config " << a.prov.config_hash << ", current is "
                 << prov_.config_hash << '\n';
        return a;
    }

    void emit(const std::string &file, const std::string &kind, const std::map<std::string, std::string> &sections)
    {
        write_text(dir_ / file, wrap_artifact(kind, sections, prov_));
        log_ << "  wrote " << (dir_ / file).string() << '\n';
    }

    RunConfig cfg_;
    std::ostream &log_;
    Provenance prov_;
    fs::path dir_;
};

void Runner::synth()
{
    ComputationalGraph g = is_model_file(cfg_.model)
                                   ? load_model(cfg_.model)
                                   : builtin_model(cfg_.model, {cfg_.scale, cfg_.seed_weights, true});
    Diagnostics diag;
    ComputationalGraph q = quantize(g, cfg_.pe, &diag);
    CoreOpGraph gco = lower(q, cfg_.pe);
    check_coreop_graph(gco, cfg_.pe);
    ModelStats st = graph_stats(g);
    json stats{{"model", g.name},
               {"weights", st.weight_count},
               {"ops", st.op_count},
               {"coreops", gco.coreops.size()},
               {"weight_groups", gco.groups.size()},
               {"spatial_fit", spatial_fit(gco, cfg_.pe)}};
    for (const auto &w : diag.warnings)
        log_ << "warning: " << w << '\n';
    log_ << "  " << gco.coreops.size() << " core-ops in " << gco.groups.size() << " weight groups\n";
    emit("synth.json", "synth",
         {{"quantized", dump_quantized_graph(q)},
          {"coreops", dump_coreop_graph(gco)},
          {"stats", stats.dump()},
          {"warnings", json(diag.warnings).dump()}});
}

void Runner::map()
{
    Artifact a = need("synth.json", "synth");
    CoreOpGraph gco = parse_coreop_graph(a.sections.at("coreops"));
    ArchSpec arch = resolve_arch(cfg_);
    int64_t budget = cfg_.pe_budget;
    if (budget <= 0) {
        budget = 0;
        for (int y = 0; y < arch.height; ++y)
            for (int x = 0; x < arch.width; ++x)
                budget += arch.tile(x, y) == site_kind_for(BlockKind::PE);
    }
    WeightGroupTable table = allocate(group_core_ops(gco), budget, cfg_.dup);
    Schedule sched = schedule(gco, table, gco.gamma, arch.smb_read_ports);
    auto viol = check_schedule(gco, sched);
    if (!viol.empty())
        throw InfeasibleError("schedule violates " + viol.front().formula + ": " + viol.front().message);
    Netlist nl = emit_netlist(gco, table, sched, cfg_.pe, {arch.smb_bits, arch.clb_entries});
    json summary{{"pes", nl.count(BlockKind::PE)},
                 {"smbs", nl.count(BlockKind::SMB)},
                 {"clbs", nl.count(BlockKind::CLB)},
                 {"nets", nl.nets.size()},
                 {"stages", nl.num_stages},
                 {"makespan", sched.makespan()},
                 {"global_duplication", table.global_duplication()},
                 {"max_iterations", table.max_iterations()},
                 {"violations", 0}};
    log_ << "  " << summary.dump() << '\n';
    emit("map.json", "map",
         {{"table", dump_table(table)},
          {"schedule", dump_schedule(sched)},
          {"netlist", dump_netlist(nl)},
          {"summary", summary.dump()}});
}

void Runner::pnr()
{
    Artifact a = need("map.json", "map");
    Netlist nl = parse_netlist(a.sections.at("netlist"));
    ArchSpec arch = resolve_arch(cfg_);
    FabricModel fabric = build_fabric(arch);
    Placement pl = place(nl, fabric, cfg_.seed_place);
    RoutedDesign rd = route(nl, pl, fabric);
    if (!shared_nodes(rd, fabric).empty())
        throw UnroutableError("routing left shared routing-resource nodes");
    CriticalPath cp = critical_path(rd, nl);
    log_ << "  placement cost " << pl.initial_cost << " -> " << pl.final_cost << ", " << rd.iterations
         << " routing iterations, critical path " << cp.ns << " ns\n";
    emit("pnr.json", "pnr",
         {{"arch", json(arch_to_string(arch)).dump()},
          {"placement", dump_placement(pl, fabric)},
          {"routes", dump_routes(rd, fabric)},
          {"critical_path", dump_critical_path(cp)}});
}

void Runner::simulate()
{
    Artifact s = need("synth.json", "synth");
    Artifact m = need("map.json", "map");
    ComputationalGraph q = parse_quantized_graph(s.sections.at("quantized"));
    CoreOpGraph gco = parse_coreop_graph(s.sections.at("coreops"));
    Schedule sched = parse_schedule(m.sections.at("schedule"));
    Netlist nl = parse_netlist(m.sections.at("netlist"));

    NetlistSimOptions opt;
    opt.engine = cfg_.engine;
    opt.mode = cfg_.reset;
    VariationModel vm;
    if (cfg_.sigma > 0.0) {
        vm.coding = WeightCoding::add(cfg_.cells);
        vm.cell = {cfg_.cell_bits, cfg_.sigma};
        vm.qmax = cfg_.pe.qmax();
        opt.variation = &vm;
        opt.variation_seed = cfg_.seed_var;
    }

    json samples = json::array();
    int64_t worst = 0, matches = 0;
    for (int k = 0; k < cfg_.samples; ++k) {
        CountMap in = random_inputs(gco, cfg_.seed_inputs + uint64_t(k));
        NetlistSimResult r = run_netlist_sim(gco, sched, nl, in, opt);
        CountMap ref = evaluate_reference(q, in);
        int64_t diff = 0;
        for (const auto &[name, y] : ref) {
            const auto &got = r.outputs.at(name);
            for (size_t i = 0; i < y.size(); ++i)
                diff = std::max(diff, std::abs(got[i] - y[i]));
        }
        worst = std::max(worst, diff);
        matches += diff == 0;
        samples.push_back({{"inputs", in},
                           {"outputs", r.outputs},
                           {"reference", ref},
                           {"max_abs_diff", diff},
                           {"smb_writes", r.smb_writes},
                           {"smb_reads", r.smb_reads}});
    }
    log_ << "  " << matches << "/" << cfg_.samples << " samples equal the count-level reference (max diff " << worst
         << ")\n";
    json summary{{"engine", to_string(cfg_.engine)},
                 {"reset_mode", to_string(cfg_.reset)},
                 {"samples", cfg_.samples},
                 {"exact_matches", matches},
                 {"max_abs_diff", worst},
                 {"variation_sigma", cfg_.sigma}};
    emit("sim.json", "simulate", {{"summary", summary.dump()}, {"samples", samples.dump()}});
}

const char *const kScaleNote =
        "Absolute throughput and speedup figures of large models on a full-size chip are not reproduced at desk "
        "scale; scalability is instead checked through the bound chain and the super-linear gain property.";
const char *const kThroughputNote =
        "Throughput is for a single pipeline; running independent replicas is not folded in.";

void Runner::report()
{
    Artifact s = need("synth.json", "synth");
    Artifact m = need("map.json", "map");
    Artifact p = need("pnr.json", "pnr");
    CoreOpGraph gco = parse_coreop_graph(s.sections.at("coreops"));
    WeightGroupTable table = parse_table(m.sections.at("table"));
    Schedule sched = parse_schedule(m.sections.at("schedule"));
    Netlist nl = parse_netlist(m.sections.at("netlist"));
    CriticalPath cp = parse_critical_path(p.sections.at("critical_path"));

    BlockCosts costs;
    PerfReport r = analyze(gco, table, sched, nl, &cp, costs, cfg_.pe);
    ReferencePE ours = fpsa_reference(cfg_.pe, costs), prime = prime_reference();
    json density{{"pe_window_ns", pe_window_ns(cfg_.pe, costs)},
                 {"pe_density_ops_per_mm2", ours.density_ops_per_mm2()},
                 {"prime_density_ops_per_mm2", prime.density_ops_per_mm2()},
                 {"improvement", ours.density_ops_per_mm2() / prime.density_ops_per_mm2()}};
    json notes = json::array({kScaleNote, kThroughputNote});
    std::map<std::string, std::string> sections{
            {"perf", dump_perf(r)}, {"density", density.dump()}, {"notes", notes.dump()}};
    if (cfg_.sigma > 0.0) {
        std::string csv = variation_sweep_csv({cfg_.cell_bits, cfg_.sigma}, cfg_.var_trials, cfg_.seed_var);
        write_text(dir_ / "variation.csv", csv);
        sections["variation_csv"] = json("variation.csv").dump();
    }
    log_ << "  achieved " << r.achieved << " OPS, area " << r.area_mm2 << " mm^2, latency " << r.latency_us
         << " us, throughput " << r.throughput << " samples/s\n";
    emit("report.json", "report", sections);
}

void Runner::sweep()
{
    Artifact s = need("synth.json", "synth");
    CoreOpGraph gco = parse_coreop_graph(s.sections.at("coreops"));
    ArchSpec arch = resolve_arch(cfg_);
    SweepOptions opt;
    opt.place_seed = cfg_.seed_place;
    opt.np = {arch.smb_bits, arch.clb_entries};
    opt.read_ports = arch.smb_read_ports;
    auto pts = scalability_sweep(gco, cfg_.pe, arch, cfg_.sweep_dups, BlockCosts{}, opt);
    json jp = json::array();
    for (const auto &pt : pts) {
        json e{{"duplication", pt.duplication}, {"feasible", pt.feasible}};
        if (pt.feasible)
            e["perf"] = json::parse(dump_perf(pt.report));
        else
            e["error"] = pt.error;
        jp.push_back(std::move(e));
        log_ << "  dup " << pt.duplication << ": " << (pt.feasible ? "ok" : pt.error) << '\n';
    }
    write_text(dir_ / "sweep.csv", sweep_csv(pts));
    log_ << "  wrote " << (dir_ / "sweep.csv").string() << '\n';
    emit("sweep.json", "sweep", {{"points", jp.dump()}, {"notes", json::array({kScaleNote}).dump()}});
}

} // namespace

void RunConfig::validate() const
{
    pe.check();
    if (model.empty())
        throw ConfigError("model must be set");
    if (!(scale > 0.0))
        throw ConfigError("scale must be positive");
    if (sweep_dups.empty() || dup < 1)
        throw ConfigError("dup must be >= 1");
    for (auto d : sweep_dups)
        if (d < 1)
            throw ConfigError("dup must be >= 1");
    if (samples < 1)
        throw ConfigError("samples must be >= 1");
    if (!(sigma >= 0.0))
        throw ConfigError("sigma must be >= 0");
    if (cells < 1)
        throw ConfigError("cells must be >= 1");
    CellModel{cell_bits, sigma}.check();
    if (var_trials < 2)
        throw ConfigError("var-trials must be >= 2");
    if (out.empty())
        throw ConfigError("out must be set");
    if (!arch.empty() && !fs::exists(arch))
        throw ConfigError("arch file '" + arch + "' does not exist");
    if (is_model_file(model) && !fs::exists(model))
        throw ConfigError("model file '" + model + "' does not exist");
}

void set_config_value(RunConfig &c, const std::string &key, const std::string &value)
{
    const std::string v = trim(value);
    if (key == "model")
        c.model = v;
    else if (key == "scale")
        c.scale = parse_number<double>(key, v);
    else if (key == "arch")
        c.arch = v;
    else if (key == "dup") {
        c.sweep_dups = parse_list(key, v);
        c.dup = c.sweep_dups.front();
    } else if (key == "pe-budget")
        c.pe_budget = parse_number<int64_t>(key, v);
    else if (key == "pe-rows")
        c.pe.rows = parse_number<int>(key, v);
    else if (key == "pe-cols")
        c.pe.cols_phys = 2 * parse_number<int>(key, v);
    else if (key == "bits-w")
        c.pe.bits_w = parse_number<int>(key, v);
    else if (key == "bits-io")
        c.pe.bits_io = parse_number<int>(key, v);
    else if (key == "seed-place")
        c.seed_place = parse_number<uint64_t>(key, v);
    else if (key == "seed-weights")
        c.seed_weights = parse_number<uint64_t>(key, v);
    else if (key == "seed-var")
        c.seed_var = parse_number<uint64_t>(key, v);
    else if (key == "seed-inputs")
        c.seed_inputs = parse_number<uint64_t>(key, v);
    else if (key == "reset-mode")
        c.reset = reset_mode_from_string(v);
    else if (key == "engine")
        c.engine = sim_engine_from_string(v);
    else if (key == "samples")
        c.samples = parse_number<int>(key, v);
    else if (key == "sigma")
        c.sigma = parse_number<double>(key, v);
    else if (key == "cell-bits")
        c.cell_bits = parse_number<int>(key, v);
    else if (key == "cells")
        c.cells = parse_number<int>(key, v);
    else if (key == "var-trials")
        c.var_trials = parse_number<int64_t>(key, v);
    else if (key == "out")
        c.out = v;
    else
        throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string &text, RunConfig base)
{
    std::istringstream is(text);
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
        set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

RunConfig load_config(const std::string &path, RunConfig base) { return parse_config(read_text(path), base); }

std::string canonical_config(const RunConfig &c)
{
    std::map<std::string, std::string> kv;
    std::ostringstream dups;
    for (size_t i = 0; i < c.sweep_dups.size(); ++i)
        dups << (i ? "," : "") << c.sweep_dups[i];
    std::ostringstream num;
    num.precision(17);
    auto str = [&](double d) {
        num.str("");
        num << d;
        return num.str();
    };
    // Files enter by content so that relocating them keeps the hash.
    kv["model"] = is_model_file(c.model) ? "file:" + hex64(fnv1a64(read_text(c.model))) : c.model;
    kv["arch"] = hex64(fnv1a64(arch_to_string(resolve_arch(c))));
    kv["scale"] = str(c.scale);
    kv["dup"] = dups.str();
    kv["pe-budget"] = std::to_string(c.pe_budget);
    kv["pe-rows"] = std::to_string(c.pe.rows);
    kv["pe-cols"] = std::to_string(c.pe.cols_logical());
    kv["bits-w"] = std::to_string(c.pe.bits_w);
    kv["bits-io"] = std::to_string(c.pe.bits_io);
    kv["seed-place"] = std::to_string(c.seed_place);
    kv["seed-weights"] = std::to_string(c.seed_weights);
    kv["seed-var"] = std::to_string(c.seed_var);
    kv["seed-inputs"] = std::to_string(c.seed_inputs);
    kv["reset-mode"] = to_string(c.reset);
    kv["engine"] = to_string(c.engine);
    kv["samples"] = std::to_string(c.samples);
    kv["sigma"] = str(c.sigma);
    kv["cell-bits"] = std::to_string(c.cell_bits);
    kv["cells"] = std::to_string(c.cells);
    kv["var-trials"] = std::to_string(c.var_trials);
    std::string out;
    for (const auto &[k, v] : kv)
        out += k + "=" + v + "\n";
    return out;
}

std::string config_hash(const RunConfig &cfg) { return hex64(fnv1a64(canonical_config(cfg))); }

ArchSpec desk_arch() { return parse_arch(kDeskArch); }

ArchSpec resolve_arch(const RunConfig &cfg) { return cfg.arch.empty() ? desk_arch() : load_arch(cfg.arch); }

int exit_code_for(const std::exception &e)
{
    if (dynamic_cast<const InfeasibleError *>(&e))
        return 3;
    if (dynamic_cast<const UnroutableError *>(&e))
        return 4;
    if (dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const ParseError *>(&e) ||
        dynamic_cast<const ValidationError *>(&e) || dynamic_cast<const MissingArtifactError *>(&e))
        return 2;
    return 1;
}

const std::vector<std::string> &subcommands()
{
    static const std::vector<std::string> names = {"synth", "map", "pnr", "simulate", "sweep", "report", "pipeline"};
    return names;
}

void run_stage(const std::string &sub, const RunConfig &cfg, std::ostream &log)
{
    if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
        throw ConfigError("unknown subcommand '" + sub + "'");
    Runner r(cfg, log);
    auto step = [&](const char *name, void (Runner::*fn)()) {
        auto t0 = std::chrono::steady_clock::now();
        log << "[" << name << "]\n";
        (r.*fn)();
        log << "  done in " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
            << " s\n";
    };
    if (sub == "synth" || sub == "pipeline")
        step("synth", &Runner::synth);
    if (sub == "map" || sub == "pipeline")
        step("map", &Runner::map);
    if (sub == "pnr" || sub == "pipeline")
        step("pnr", &Runner::pnr);
    if (sub == "simulate" || sub == "pipeline")
        step("simulate", &Runner::simulate);
    if (sub == "report" || sub == "pipeline")
        step("report", &Runner::report);
    if (sub == "sweep" || sub == "pipeline")
        step("sweep", &Runner::sweep);
}

int run(const std::string &sub, const RunConfig &cfg, std::ostream &log)
{
    try {
        run_stage(sub, cfg, log);
        return 0;
    } catch (const std::exception &e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

} // namespace fpsa
