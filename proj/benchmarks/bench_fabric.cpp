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


#include <benchmark/benchmark.h>

#include "fpsa/fabric.hpp"
#include "fpsa/mapper.hpp"
#include "fpsa/model_ir.hpp"
#include "fpsa/pipeline.hpp"
#include "fpsa/synthesizer.hpp"

namespace {

using namespace fpsa;

struct Design
{
    FabricModel fabric;
    Netlist nl;
};

const Design &lenet_design()
{
    static const Design d = [] {
        PEConfig pe{256, 128};
        Design out{build_fabric(desk_arch()), {}};
        auto gco = lower(quantize(builtin_model("lenet", {1.0, 1, true}), pe), pe);
        auto table = allocate(group_core_ops(gco), out.fabric.count_sites(site_kind_for(BlockKind::PE)), 1);
        out.nl = emit_netlist(gco, table, schedule(gco, table, pe.gamma()), pe);
        return out;
    }();
    return d;
}

void BM_BuildFabric(benchmark::State &state)
{
    auto arch = desk_arch();
    for (auto _ : state)
        benchmark::DoNotOptimize(build_fabric(arch));
}
BENCHMARK(BM_BuildFabric)->Unit(benchmark::kMillisecond);

void BM_PlaceLenet(benchmark::State &state)
{
    const auto &d = lenet_design();
    uint64_t seed = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(place(d.nl, d.fabric, seed++));
}
BENCHMARK(BM_PlaceLenet)->Unit(benchmark::kMillisecond);

void BM_RouteLenet(benchmark::State &state)
{
    const auto &d = lenet_design();
    auto p = place(d.nl, d.fabric, 1);
    RouteParams rp;
    rp.congestion = state.range(0) != 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(route(d.nl, p, d.fabric, rp));
}
BENCHMARK(BM_RouteLenet)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace
