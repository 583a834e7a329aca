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

#include <random>

#include "fpsa/spiking.hpp"

namespace {

using namespace fpsa;

PEWeights random_pe(int64_t n)
{
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> w(-127, 127);
    PEWeights pe{n, n, {}, 127 * n};
    for (int64_t i = 0; i < n * n; ++i)
        pe.w.push_back(w(rng));
    return pe;
}

std::vector<int64_t> random_counts(int64_t n, int64_t gamma)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int64_t> x(0, gamma);
    std::vector<int64_t> v(static_cast<size_t>(n));
    for (auto &e : v)
        e = x(rng);
    return v;
}

void BM_PeOracle(benchmark::State &state)
{
    auto pe = random_pe(state.range(0));
    auto x = random_counts(pe.rows, 64);
    for (auto _ : state)
        benchmark::DoNotOptimize(pe_oracle(pe, x, 64));
    state.SetItemsProcessed(state.iterations() * pe.rows * pe.cols);
}
BENCHMARK(BM_PeOracle)->RangeMultiplier(4)->Range(16, 256);

void BM_CycleSimCarry(benchmark::State &state)
{
    auto pe = random_pe(state.range(0));
    auto x = random_counts(pe.rows, 64);
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_pe(pe, x, 64, ResetMode::Carry));
    state.SetItemsProcessed(state.iterations() * pe.rows * pe.cols * 64);
}
BENCHMARK(BM_CycleSimCarry)->RangeMultiplier(4)->Range(16, 256);

void BM_AnalogWindow(benchmark::State &state)
{
    auto pe = random_pe(state.range(0));
    auto trains = encode_counts(random_counts(pe.rows, 64), 64);
    NeuronParams np;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_window_analog(pe, trains, np, ResetMode::Carry));
}
BENCHMARK(BM_AnalogWindow)->Arg(32)->Arg(128);

} // namespace
