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


// fpsa: command line driver for the synth -> map -> pnr -> simulate ->
// report flow. Flags override values read from --config.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "fpsa/pipeline.hpp"

int main(int argc, char **argv)
{
    CLI::App app{"FPSA toolchain driver"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_file;
    app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);

    struct Flag
    {
        const char *name;
        const char *help;
    };
    const Flag flags[] = {
            {"model", "built-in model name or model JSON path"},
            {"scale", "width scale for built-in models"},
            {"arch", "architecture file (default: built-in desk fabric)"},
            {"dup", "target duplication, or a comma list for sweep"},
            {"pe-budget", "PE instances available to the allocator (default: fabric PE sites)"},
            {"pe-rows", "crossbar rows"},
            {"pe-cols", "crossbar logical columns"},
            {"bits-w", "weight bits"},
            {"bits-io", "activation bits (window = 2^bits)"},
            {"seed-place", "placement seed"},
            {"seed-weights", "built-in weight seed"},
            {"seed-var", "variation seed"},
            {"seed-inputs", "simulation input seed"},
            {"reset-mode", "carry | hard"},
            {"engine", "window | cycle"},
            {"samples", "simulated input samples"},
            {"sigma", "cell programming deviation in level steps"},
            {"cell-bits", "bits per ReRAM cell"},
            {"cells", "add-coded cells per weight bank"},
            {"var-trials", "Monte Carlo trials for the variation report"},
            {"out", "artifact directory"},
    };
    std::map<std::string, std::string> given;
    for (const auto &f : flags)
        app.add_option_function<std::string>(std::string("--") + f.name,
                                             [&given, key = std::string(f.name)](const std::string &v) {
                                                 given[key] = v;
                                             },
                                             f.help);

    const char *help[] = {"quantize and lower a model to core-ops",
                          "allocate PEs, schedule and emit the netlist",
                          "place and route the netlist on the fabric",
                          "simulate the mapped design against the count-level reference",
                          "duplication sweep (curve CSV)",
                          "performance, area and energy report",
                          "all stages in order"};
    size_t i = 0;
    for (const auto &name : fpsa::subcommands())
        app.add_subcommand(name, help[i++]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    fpsa::RunConfig cfg;
    try {
        if (!config_file.empty())
            cfg = fpsa::load_config(config_file, cfg);
        for (const auto &[k, v] : given)
            fpsa::set_config_value(cfg, k, v);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return fpsa::exit_code_for(e);
    }
    return fpsa::run(app.get_subcommands().front()->get_name(), cfg, std::cerr);
}
