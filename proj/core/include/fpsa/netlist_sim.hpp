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
#include <string>
#include <vector>

#include "fpsa/mapper.hpp"
#include "fpsa/spiking.hpp"
#include "fpsa/variation.hpp"

namespace fpsa {

enum class SimEngine
{
    Window, // per core-op count semantics (pe_oracle), SMBs hold counts
    Cycle,  // spike-by-spike: unbuffered trains keep their timing
};

SimEngine sim_engine_from_string(const std::string &s);
const char *to_string(SimEngine e);

struct NetlistSimOptions
{
    SimEngine engine = SimEngine::Window;
    ResetMode mode = ResetMode::Carry;
    bool trace = false; // cycle engine only; fills trace_csv
    // Window engine only: every PE instance programs its own noisy copy.
    const VariationModel *variation = nullptr;
    uint64_t variation_seed = 1;
};

struct NetlistSimResult
{
    CountMap outputs;
    std::vector<std::vector<int64_t>> coreop_counts;
    int64_t smb_writes = 0; // counts stored into SMBs
    int64_t smb_reads = 0;  // trains re-encoded from SMBs
    int64_t cycles = 0;     // makespan
    std::string trace_csv;  // pe,column,cycle,U,spike
};

// Executes the mapped design in schedule order. Throws ValidationError when
// the netlist and schedule disagree (PE binding, missing buffer, timing).
NetlistSimResult run_netlist_sim(const CoreOpGraph &gco, const Schedule &sched, const Netlist &nl,
                                 const CountMap &inputs, const NetlistSimOptions &opt = {});

PEWeights pe_weights(const WeightGroup &wg);

} // namespace fpsa
