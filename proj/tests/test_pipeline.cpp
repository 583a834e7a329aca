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


#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpsa/pipeline.hpp"
#include "fpsa/serialize.hpp"
#include "fpsa/synthesizer.hpp"

namespace fpsa {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string &name)
{
    fs::path d = fs::temp_directory_path() / ("fpsa_test_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunConfig toy(const fs::path &out)
{
    RunConfig c;
    c.model = "toy-cnn";
    c.samples = 3;
    c.out = out.string();
    return c;
}

TEST(Config, ParsesKeysCommentsAndLists)
{
    auto c = parse_config("# header\n"
                          "model = lenet   # trailing\n"
                          "\n"
                          "scale=0.5\n"
                          "dup = 1,2,4\n"
                          "seed-place = 9\n"
                          "reset-mode = hard\n"
                          "pe-cols = 64\n");
    EXPECT_EQ(c.model, "lenet");
    EXPECT_DOUBLE_EQ(c.scale, 0.5);
    EXPECT_EQ(c.sweep_dups, (std::vector<int64_t>{1, 2, 4}));
    EXPECT_EQ(c.dup, 1);
    EXPECT_EQ(c.seed_place, 9u);
    EXPECT_EQ(c.reset, ResetMode::Hard);
    EXPECT_EQ(c.pe.cols_phys, 128);
}

TEST(Config, LaterValuesOverrideBase)
{
    RunConfig base;
    base.seed_weights = 5;
    auto c = parse_config("samples = 2\n", base);
    EXPECT_EQ(c.seed_weights, 5u);
    EXPECT_EQ(c.samples, 2);
    set_config_value(c, "samples", "7");
    EXPECT_EQ(c.samples, 7);
}

TEST(Config, Errors)
{
    EXPECT_THROW(parse_config("colour = blue\n"), ConfigError);
    EXPECT_THROW(parse_config("scale = fast\n"), ConfigError);
    EXPECT_THROW(parse_config("just a line\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/run.cfg"), ConfigError);
    RunConfig c;
    c.scale = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    c.arch = "/nonexistent/x.arch";
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, CanonicalHashIgnoresOutput)
{
    RunConfig a, b;
    b.out = "elsewhere";
    EXPECT_EQ(canonical_config(a), canonical_config(b));
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed_var = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, ArchEntersHashByContent)
{
    auto d = fresh_dir("archhash");
    fs::create_directories(d / "x");
    const std::string text = arch_to_string(desk_arch());
    std::ofstream(d / "a.arch") << text;
    std::ofstream(d / "x" / "b.arch") << text;
    RunConfig a, b;
    a.arch = (d / "a.arch").string();
    b.arch = (d / "x" / "b.arch").string();
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a), config_hash(RunConfig{}));
}

TEST(ExitCodes, Mapping)
{
    EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
    EXPECT_EQ(exit_code_for(ParseError("x")), 2);
    EXPECT_EQ(exit_code_for(MissingArtifactError("synth.json", "synth")), 2);
    EXPECT_EQ(exit_code_for(InfeasibleError("x")), 3);
    EXPECT_EQ(exit_code_for(UnroutableError("x")), 4);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}

TEST(Run, UnknownSubcommand)
{
    std::ostringstream log;
    EXPECT_EQ(run("compile", toy(fresh_dir("unknown")), log), 2);
    EXPECT_NE(log.str().find("compile"), std::string::npos);
}

TEST(Run, MapWithoutSynthNamesSynth)
{
    auto dir = fresh_dir("nosynth");
    std::ostringstream log;
    try {
        run_stage("map", toy(dir), log);
        FAIL() << "map ran without a synth artifact";
    } catch (const MissingArtifactError &e) {
        EXPECT_EQ(e.stage(), "synth");
        EXPECT_NE(std::string(e.what()).find("synth"), std::string::npos);
    }
    std::ostringstream log2;
    EXPECT_EQ(run("map", toy(dir), log2), 2);
    EXPECT_NE(log2.str().find("synth"), std::string::npos);
}

TEST(Run, InfeasibleBudgetExitsThree)
{
    auto c = toy(fresh_dir("budget"));
    c.pe_budget = 1;
    std::ostringstream log;
    EXPECT_EQ(run("pipeline", c, log), 3);
}

TEST(Run, PipelineToyCnnProducesArtifacts)
{
    auto dir = fresh_dir("toy");
    auto c = toy(dir);
    std::ostringstream log;
    auto t0 = std::chrono::steady_clock::now();
    ASSERT_EQ(run("pipeline", c, log), 0) << log.str();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 60.0);
    for (const char *f : {"synth.json", "map.json", "pnr.json", "sim.json", "report.json"}) {
        ASSERT_TRUE(fs::exists(dir / f)) << f;
        auto a = unwrap_artifact(slurp(dir / f));
        EXPECT_EQ(a.prov.config_hash, config_hash(c)) << f;
        EXPECT_FALSE(a.prov.version.empty());
    }
}

TEST(Run, StagesRerunIndependently)
{
    auto dir = fresh_dir("stages");
    auto c = toy(dir);
    std::ostringstream log;
    for (const char *s : {"synth", "map", "pnr", "simulate", "report"})
        ASSERT_EQ(run(s, c, log), 0) << s << '\n' << log.str();
    std::string report = slurp(dir / "report.json");
    ASSERT_EQ(run("report", c, log), 0);
    EXPECT_EQ(slurp(dir / "report.json"), report);
}

TEST(Run, PipelineIsByteIdentical)
{
    auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    std::ostringstream log;
    ASSERT_EQ(run("pipeline", toy(a), log), 0);
    ASSERT_EQ(run("pipeline", toy(b), log), 0);
    size_t files = 0;
    for (const auto &e : fs::directory_iterator(a)) {
        ++files;
        ASSERT_TRUE(fs::exists(b / e.path().filename())) << e.path();
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    }
    EXPECT_GE(files, 5u);
}

TEST(Run, SweepWritesOneRowPerDuplication)
{
    auto dir = fresh_dir("sweep");
    auto c = toy(dir);
    set_config_value(c, "dup", "1,2,4");
    std::ostringstream log;
    ASSERT_EQ(run("synth", c, log), 0);
    ASSERT_EQ(run("sweep", c, log), 0) << log.str();
    std::istringstream in(slurp(dir / "sweep.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "duplication,area_mm2,peak,spatial,temporal,achieved");
    std::vector<std::string> rows;
    while (std::getline(in, line))
        if (!line.empty())
            rows.push_back(line);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].substr(0, 2), "1,");
    EXPECT_EQ(rows[2].substr(0, 2), "4,");
    EXPECT_TRUE(fs::exists(dir / "sweep.json"));
}

TEST(Serialize, RoundTrips)
{
    PEConfig cfg{256, 128, 8, 6, 2, 16};
    auto qg = quantize(builtin_model("lenet", {1.0, 1, true}), cfg);
    auto gco = lower(qg, cfg);
    auto table = allocate(group_core_ops(gco), 64, 2);
    auto sched = schedule(gco, table, cfg.gamma());
    auto nl = emit_netlist(gco, table, sched, cfg);
    CriticalPath cp{17.5, 3, {1.25, 2.5}};
    CountMap counts;
    counts["y"] = {1, 2, 64};

    auto q1 = dump_quantized_graph(qg);
    EXPECT_EQ(dump_quantized_graph(parse_quantized_graph(q1)), q1);
    auto g1 = dump_coreop_graph(gco);
    EXPECT_EQ(dump_coreop_graph(parse_coreop_graph(g1)), g1);
    auto t1 = dump_table(table);
    EXPECT_EQ(dump_table(parse_table(t1)), t1);
    auto s1 = dump_schedule(sched);
    EXPECT_EQ(dump_schedule(parse_schedule(s1)), s1);
    EXPECT_TRUE(check_schedule(gco, parse_schedule(s1)).empty());
    auto n1 = dump_netlist(nl);
    EXPECT_EQ(dump_netlist(parse_netlist(n1)), n1);
    auto c1 = dump_critical_path(cp);
    EXPECT_EQ(dump_critical_path(parse_critical_path(c1)), c1);
    auto k1 = dump_counts(counts);
    EXPECT_EQ(parse_counts(k1), counts);
}

TEST(Serialize, ArtifactEnvelope)
{
    auto text = wrap_artifact("map", {{"table", "{\"a\":1}"}}, {"1.0.0", "abc"});
    auto a = unwrap_artifact(text);
    EXPECT_EQ(a.kind, "map");
    EXPECT_EQ(a.prov.version, "1.0.0");
    EXPECT_EQ(a.prov.config_hash, "abc");
    EXPECT_EQ(a.sections.at("table"), "{\"a\":1}");
    EXPECT_EQ(wrap_artifact(a.kind, a.sections, a.prov), text);
    EXPECT_THROW(unwrap_artifact("{not json"), ParseError);
    EXPECT_THROW(parse_schedule("[]"), ParseError);
}

} // namespace
} // namespace fpsa
