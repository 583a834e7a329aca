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

#include <map>
#include <string>
#include <vector>

#include "fpsa/fabric.hpp"
#include "fpsa/mapper.hpp"
#include "fpsa/perf.hpp"

namespace fpsa {

// Deterministic JSON text for every stage artifact. Keys are emitted in
// sorted order and numbers in shortest round-trip form, so equal inputs
// give byte-identical files. Parsers throw ParseError on malformed input.

// Count-level model: quantized integers, shapes and offsets, no float weights.
std::string dump_quantized_graph(const ComputationalGraph &g);
ComputationalGraph parse_quantized_graph(const std::string &text);

std::string dump_coreop_graph(const CoreOpGraph &g);
CoreOpGraph parse_coreop_graph(const std::string &text);

std::string dump_table(const WeightGroupTable &t);
WeightGroupTable parse_table(const std::string &text);

std::string dump_schedule(const Schedule &s);
Schedule parse_schedule(const std::string &text);

std::string dump_netlist(const Netlist &nl);
Netlist parse_netlist(const std::string &text);

std::string dump_placement(const Placement &p, const FabricModel &f);
std::string dump_routes(const RoutedDesign &r, const FabricModel &f);

std::string dump_critical_path(const CriticalPath &cp);
CriticalPath parse_critical_path(const std::string &text);

std::string dump_counts(const CountMap &m);
CountMap parse_counts(const std::string &text);

std::string dump_perf(const PerfReport &r);

struct Provenance
{
    std::string version;
    std::string config_hash;
};

// A stage artifact: {"artifact": kind, "config_hash", "version", sections...}
// where each section is a JSON document produced by one of the dumps above.
std::string wrap_artifact(const std::string &kind, const std::map<std::string, std::string> &sections,
                          const Provenance &prov);

struct Artifact
{
    std::string kind;
    Provenance prov;
    std::map<std::string, std::string> sections;
};

Artifact unwrap_artifact(const std::string &text);

} // namespace fpsa
