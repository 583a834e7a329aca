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

#include "fpsa/mapper.hpp"
#include "fpsa/model_ir.hpp"
#include "fpsa/synthesizer.hpp"

namespace {

using namespace fpsa;

const PEConfig kPe{256, 128};

CoreOpGraph lowered(const std::string &model, double scale)
{
    return lower(quantize(builtin_model(model, {scale, 1, true}), kPe), kPe);
}

void BM_ScheduleLenet(benchmark::State &state)
{
    auto gco = lowered("lenet", 1.0);
    auto table = allocate(group_core_ops(gco), 1 << 20, state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(schedule(gco, table, kPe.gamma()));
    state.SetItemsProcessed(state.iterations() * int64_t(gco.coreops.size()));
}
BENCHMARK(BM_ScheduleLenet)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ScheduleVgg16Slice(benchmark::State &state)
{
    auto gco = lowered("vgg16", 0.0625);
    auto table = allocate(group_core_ops(gco), 1 << 20, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(schedule(gco, table, kPe.gamma()));
    state.SetItemsProcessed(state.iterations() * int64_t(gco.coreops.size()));
}
BENCHMARK(BM_ScheduleVgg16Slice)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_CheckSchedule(benchmark::State &state)
{
    auto gco = lowered("lenet", 1.0);
    auto sched = schedule(gco, allocate(group_core_ops(gco), 1 << 20, 2), kPe.gamma());
    for (auto _ : state)
        benchmark::DoNotOptimize(check_schedule(gco, sched));
}
BENCHMARK(BM_CheckSchedule)->Unit(benchmark::kMillisecond);

} // namespace
