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

#include "fpsa/fabric.hpp"
#include "fpsa/mapper.hpp"

namespace fpsa {

// Energy per active spiking cycle, area and per-cycle latency of a block.
struct BlockCost
{
    double energy_pj = 0.0;
    double area_um2 = 0.0;
    double latency_ns = 0.0;
};

struct SubBlock
{
    std::string name;
    BlockCost unit;          // one instance
    int64_t count = 1;       // instances per PE
    double energy_total_pj = 0.0; // all instances, as tabulated
    double area_total_um2 = 0.0;
};

// 45 nm block parameters of a 256x256 PE, a 128-LUT CLB and a 16 Kb SMB.
struct BlockCosts
{
    BlockCost pe{29.094, 22051.414, 2.443};
    BlockCost clb{3.106, 5998.272, 0.229};
    BlockCost smb{1.150, 5421.900, 0.578};
    // Every part lies on the PE cycle path.
    std::vector<SubBlock> pe_parts = {
        {"charging", {0.001, 2.246, 0.070}, 256, 0.229, 600.704},
        {"reram-256x512", {0.131, 1061.683, 0.000}, 8, 1.049, 8493.466},
        {"neuron", {0.039, 19.247, 1.463}, 512, 19.861, 9854.342},
        {"subtracter", {0.031, 12.121, 0.910}, 256, 8.945, 3102.902},
    };

    // Sums over pe_parts. The energy sum (30.084 pJ) differs from the
    // top-level PE figure, which is what the model charges.
    double parts_latency_ns() const;
    double parts_area_um2() const;
    double parts_energy_pj() const;
    void check() const;
};

// One crossbar VMM engine for density comparison.
struct ReferencePE
{
    std::string name;
    double area_um2 = 0.0;
    double window_ns = 0.0; // latency of one full-precision VMM
    double ops = 0.0;       // operations per VMM (2 * rows * cols)

    double density_ops_per_mm2() const { return ops / (window_ns * 1e-9) / (area_um2 * 1e-6); }
};

// PRIME's published 256x256 PE: 34802.204 um^2, 3064.7 ns per VMM.
ReferencePE prime_reference();
ReferencePE fpsa_reference(const PEConfig &cfg, const BlockCosts &costs);

double pe_window_ns(const PEConfig &cfg, const BlockCosts &costs);
// n_pe * (2 R C) / (gamma * t_cycle), in OPS.
double computation_bound(int64_t n_pe, const PEConfig &cfg, const BlockCosts &costs);

struct Utilization
{
    double spatial = 0.0;
    double temporal = 0.0;
};

// spatial = spatial_fit; temporal = sum reuse / (max iterations * PEs).
Utilization utilization_bounds(const CoreOpGraph &gco, const WeightGroupTable &table, const PEConfig &cfg);

struct StageTime
{
    int32_t stage = 0;
    int64_t cycles = 0;
    double compute_ns = 0.0;
    double comm_ns = 0.0;
    double time_ns = 0.0; // max(compute, comm)
};

struct PerfReport
{
    int64_t pes = 0, smbs = 0, clbs = 0;
    double ops_per_inference = 0.0;
    double peak_ops = 0.0;
    double spatial_bound = 0.0;
    double temporal_bound = 0.0;
    double achieved = 0.0;
    double spatial_fraction = 0.0;
    double temporal_fraction = 0.0;
    double area_mm2 = 0.0;
    double energy_uj = 0.0; // per inference
    double latency_us = 0.0;
    double bottleneck_ns = 0.0;
    double throughput = 0.0; // samples/s of one pipeline
    double density = 0.0;    // achieved OPS per mm^2
    double comm_share = 0.0; // communication part of total stage time
    std::vector<StageTime> stages;

    bool bounds_ordered() const;
};

// comm may be null (no routing): communication time is then zero. Stage
// time spans the stage's scheduled cycles at max(PE cycle, wire delay);
// throughput is limited by the slowest stage and by the busiest PE.
PerfReport analyze(const CoreOpGraph &gco, const WeightGroupTable &table, const Schedule &sched, const Netlist &nl,
                   const CriticalPath *comm, const BlockCosts &costs, const PEConfig &cfg);

struct SweepOptions
{
    bool route = true;
    uint64_t place_seed = 1;
    SAParams sa;
    RouteParams rp;
    NetlistParams np;
    int read_ports = 2;
};

struct SweepPoint
{
    int64_t duplication = 1;
    bool feasible = false;
    std::string error;
    PerfReport report;
};

std::vector<SweepPoint> scalability_sweep(const CoreOpGraph &gco, const PEConfig &cfg, const ArchSpec &arch,
                                          const std::vector<int64_t> &duplications, const BlockCosts &costs,
                                          const SweepOptions &opt = {});

// Columns: duplication, area_mm2, peak, spatial, temporal, achieved.
std::string sweep_csv(const std::vector<SweepPoint> &pts);

enum class Transfer
{
    Train, // spike trains forwarded as they are produced
    Count, // spike counts handed over after the producer's window
};

struct ChainTiming
{
    std::vector<int64_t> start; // per stage
    int64_t total_cycles = 0;   // first start to last end
};

// Start times along a chain of single core-ops on distinct PEs.
ChainTiming chain_timing(int stages, int64_t gamma, Transfer mode);

} // namespace fpsa
