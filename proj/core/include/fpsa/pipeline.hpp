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
#include <iosfwd>
#include <string>
#include <vector>

#include "fpsa/netlist_sim.hpp"
#include "fpsa/perf.hpp"

namespace fpsa {

// Everything a toolchain run depends on. Seeds are explicit; nothing is
// derived from the clock.
struct RunConfig
{
    std::string model = "toy-cnn"; // built-in name or model JSON path
    double scale = 1.0;            // built-in width scale
    PEConfig pe{256, 128}; // desk default: 64 logical columns
    std::string arch;              // arch file; empty selects the built-in desk fabric
    int64_t dup = 1;               // target global duplication (first entry of the dup list)
    int64_t pe_budget = 0;         // 0: number of PE sites on the fabric
    uint64_t seed_place = 1;
    uint64_t seed_weights = 1;
    uint64_t seed_var = 1;
    uint64_t seed_inputs = 1;
    ResetMode reset = ResetMode::Carry;
    SimEngine engine = SimEngine::Window;
    int samples = 10;
    double sigma = 0.0; // cell variation in level steps; 0 disables
    int cell_bits = 4;
    int cells = 8;      // add-coded cells per weight bank
    int64_t var_trials = 100000;
    std::vector<int64_t> sweep_dups = {1}; // the full dup list
    std::string out = "out";

    void validate() const;
};

// key = value lines; '#' starts a comment. Keys are the flag names.
void set_config_value(RunConfig &cfg, const std::string &key, const std::string &value);
RunConfig parse_config(const std::string &text, RunConfig base = {});
RunConfig load_config(const std::string &path, RunConfig base = {});

// Canonical key=value text (output directory excluded) and its hash.
std::string canonical_config(const RunConfig &cfg);
std::string config_hash(const RunConfig &cfg);

ArchSpec desk_arch();
ArchSpec resolve_arch(const RunConfig &cfg);

class MissingArtifactError : public Error
{
  public:
    MissingArtifactError(const std::string &file, const std::string &stage)
            : Error("missing artifact '" + file + "': run the '" + stage + "' stage first"), stage_(stage)
    {
    }
    const std::string &stage() const { return stage_; }

  private:
    std::string stage_;
};

// 0 ok, 1 other failure, 2 configuration, 3 infeasible mapping, 4 unroutable.
int exit_code_for(const std::exception &e);

const std::vector<std::string> &subcommands();

// Runs one subcommand, writing its artifacts into cfg.out. Returns the
// exit status; diagnostics go to log.
int run(const std::string &subcommand, const RunConfig &cfg, std::ostream &log);

// As run(), but throws instead of mapping errors to exit codes.
void run_stage(const std::string &subcommand, const RunConfig &cfg, std::ostream &log);

} // namespace fpsa
