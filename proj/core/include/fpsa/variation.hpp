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
#include <random>
#include <string>
#include <vector>

#include "fpsa/spiking.hpp"

namespace fpsa {

// One ReRAM cell: 2^bits programmable levels, each read back with Gaussian
// error of standard deviation sigma (in units of one level step).
struct CellModel
{
    int bits = 4;
    double sigma = 0.0;

    int64_t levels() const { return int64_t(1) << bits; }
    int64_t max_level() const { return levels() - 1; }
    void check() const;
};

enum class CodingMethod
{
    Splice,
    Add,
    Custom,
};

const char *to_string(CodingMethod m);

// A weight is stored as sum_i a_i * level_i over m cells.
struct WeightCoding
{
    CodingMethod method = CodingMethod::Add;
    std::vector<double> coeffs;

    static WeightCoding single();
    static WeightCoding splice(int cells, const CellModel &cell);
    static WeightCoding add(int cells);
    static WeightCoding custom(std::vector<double> coeffs);

    int cells() const { return int(coeffs.size()); }
    // Largest representable value.
    double max_value(const CellModel &cell) const;
    // sum |a_i| / sqrt(sum a_i^2); at most sqrt(m), reached by equal coefficients.
    double reduction_factor() const;
    void check(const CellModel &cell) const;
};

// Target level per cell for a non-negative integer weight.
std::vector<int64_t> decompose_weight(int64_t w, const WeightCoding &coding, const CellModel &cell);

// Samples the effective value read back from cells programmed to w.
double program_weight(int64_t w, const WeightCoding &coding, const CellModel &cell, std::mt19937_64 &rng);
double program_weight(int64_t w, const WeightCoding &coding, const CellModel &cell, uint64_t seed);

// Standard deviation of the coded value over its representable range.
double analytic_norm_dev(const WeightCoding &coding, const CellModel &cell);

struct Estimate
{
    double value = 0.0;
    double stderr_ = 0.0;
};

// Sample standard deviation of program_weight at mid-range, over the range.
Estimate monte_carlo_norm_dev(const WeightCoding &coding, const CellModel &cell, int64_t trials, uint64_t seed);

// Perturbs PE weights: each integer weight in [-qmax, qmax] is mapped onto the
// coding's range (positive and negative banks), programmed, and mapped back.
struct VariationModel
{
    WeightCoding coding = WeightCoding::add(8);
    CellModel cell;
    int64_t qmax = 127;
};

std::vector<double> perturb_weights(const PEWeights &pe, const VariationModel &vm, std::mt19937_64 &rng);

// Relu VMM drive sum_i w_ij x_i / divisor before flooring and saturation.
std::vector<double> crossbar_drive(const PEWeights &pe, const std::vector<double> &w, const std::vector<int64_t> &x);

// pe_oracle evaluated on perturbed real-valued weights.
std::vector<int64_t> pe_oracle_perturbed(const PEWeights &pe, const std::vector<double> &w, const std::vector<int64_t> &x,
                                         int64_t gamma);

// CSV (method, m, n_c, sigma, analytic, empirical, stderr) over single,
// splice(2) and add(2, 4, 8) codings.
std::string variation_sweep_csv(const CellModel &cell, int64_t trials, uint64_t seed);

} // namespace fpsa
