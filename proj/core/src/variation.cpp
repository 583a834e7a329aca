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


#include "fpsa/variation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fpsa {

void CellModel::check() const
{
    if (bits < 1 || bits > 16)
        throw ConfigError("cell bits must be in [1, 16]");
    if (!(sigma >= 0.0))
        throw ConfigError("cell sigma must be >= 0");
}

const char *to_string(CodingMethod m)
{
    switch (m) {
    case CodingMethod::Splice:
        return "splice";
    case CodingMethod::Add:
        return "add";
    case CodingMethod::Custom:
        return "custom";
    }
    return "?";
}

WeightCoding WeightCoding::single() { return add(1); }

WeightCoding WeightCoding::splice(int cells, const CellModel &cell)
{
    WeightCoding c;
    c.method = CodingMethod::Splice;
    double a = 1.0;
    for (int i = 0; i < cells; ++i, a *= double(cell.levels()))
        c.coeffs.push_back(a);
    return c;
}

WeightCoding WeightCoding::add(int cells)
{
    WeightCoding c;
    c.method = CodingMethod::Add;
    c.coeffs.assign(static_cast<size_t>(std::max(cells, 0)), 1.0);
    return c;
}

WeightCoding WeightCoding::custom(std::vector<double> coeffs)
{
    WeightCoding c;
    c.method = CodingMethod::Custom;
    c.coeffs = std::move(coeffs);
    return c;
}

double WeightCoding::max_value(const CellModel &cell) const
{
    double s = 0.0;
    for (double a : coeffs)
        s += std::abs(a);
    return s * double(cell.max_level());
}

double WeightCoding::reduction_factor() const
{
    double s1 = 0.0, s2 = 0.0;
    for (double a : coeffs) {
        s1 += std::abs(a);
        s2 += a * a;
    }
    return s2 > 0.0 ? s1 / std::sqrt(s2) : 0.0;
}

void WeightCoding::check(const CellModel &cell) const
{
    cell.check();
    if (coeffs.empty())
        throw ConfigError("weight coding needs at least one cell");
    for (double a : coeffs)
        if (!(a > 0.0))
            throw ConfigError("weight coding coefficients must be positive");
    if (method == CodingMethod::Splice && cell.bits * cells() > 62)
        throw ConfigError("splice coding exceeds 62 bits");
}

std::vector<int64_t> decompose_weight(int64_t w, const WeightCoding &coding, const CellModel &cell)
{
    coding.check(cell);
    const int m = coding.cells();
    const int64_t top = cell.max_level();
    if (w < 0 || double(w) > coding.max_value(cell) + 1e-9)
        throw ConfigError("weight " + std::to_string(w) + " outside representable range [0, " +
                          std::to_string(int64_t(coding.max_value(cell))) + "]");
    std::vector<int64_t> lv(static_cast<size_t>(m), 0);
    switch (coding.method) {
    case CodingMethod::Splice: {
        int64_t r = w;
        for (int i = 0; i < m; ++i, r /= cell.levels())
            lv[size_t(i)] = r % cell.levels();
        break;
    }
    case CodingMethod::Add:
        for (int i = 0; i < m; ++i)
            lv[size_t(i)] = w / m + (i < w % m ? 1 : 0);
        break;
    case CodingMethod::Custom: {
        // Greedy from the largest coefficient; any residual is dropped.
        std::vector<int> order(static_cast<size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return coding.coeffs[size_t(a)] > coding.coeffs[size_t(b)]; });
        double r = double(w);
        for (int i : order) {
            double a = coding.coeffs[size_t(i)];
            int64_t l = std::min<int64_t>(top, int64_t(std::floor(r / a + 1e-9)));
            lv[size_t(i)] = l;
            r -= double(l) * a;
        }
        break;
    }
    }
    return lv;
}

double program_weight(int64_t w, const WeightCoding &coding, const CellModel &cell, std::mt19937_64 &rng)
{
    auto lv = decompose_weight(w, coding, cell);
    std::normal_distribution<double> noise(0.0, 1.0);
    double v = 0.0;
    for (size_t i = 0; i < lv.size(); ++i) {
        double x = double(lv[i]);
        if (cell.sigma > 0.0)
            x += cell.sigma * noise(rng);
        v += coding.coeffs[i] * x;
    }
    return v;
}

double program_weight(int64_t w, const WeightCoding &coding, const CellModel &cell, uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return program_weight(w, coding, cell, rng);
}

double analytic_norm_dev(const WeightCoding &coding, const CellModel &cell)
{
    coding.check(cell);
    double s2 = 0.0;
    for (double a : coding.coeffs)
        s2 += a * a;
    return cell.sigma * std::sqrt(s2) / coding.max_value(cell);
}

Estimate monte_carlo_norm_dev(const WeightCoding &coding, const CellModel &cell, int64_t trials, uint64_t seed)
{
    if (trials < 2)
        throw ConfigError("monte carlo needs at least 2 trials");
    const double range = coding.max_value(cell);
    const int64_t w = int64_t(std::floor(range / 2.0));
    std::mt19937_64 rng(seed);
    double mean = 0.0, m2 = 0.0; // Welford
    for (int64_t n = 1; n <= trials; ++n) {
        double v = program_weight(w, coding, cell, rng);
        double d = v - mean;
        mean += d / double(n);
        m2 += d * (v - mean);
    }
    double sd = std::sqrt(m2 / double(trials - 1));
    return {sd / range, sd / range / std::sqrt(2.0 * double(trials - 1))};
}

std::vector<double> perturb_weights(const PEWeights &pe, const VariationModel &vm, std::mt19937_64 &rng)
{
    if (vm.qmax < 1)
        throw ConfigError("variation qmax must be >= 1");
    const double range = vm.coding.max_value(vm.cell);
    const double to_cells = range / double(vm.qmax);
    std::vector<double> out(pe.w.size());
    for (size_t i = 0; i < pe.w.size(); ++i) {
        int64_t w = pe.w[i];
        int64_t t = std::min<int64_t>(int64_t(std::llround(double(std::abs(w)) * to_cells)), int64_t(range));
        // Both banks are read; the idle one sits at level zero.
        double pos = program_weight(w > 0 ? t : 0, vm.coding, vm.cell, rng);
        double neg = program_weight(w < 0 ? t : 0, vm.coding, vm.cell, rng);
        out[i] = (pos - neg) / to_cells;
    }
    return out;
}

std::vector<double> crossbar_drive(const PEWeights &pe, const std::vector<double> &w, const std::vector<int64_t> &x)
{
    std::vector<double> y(static_cast<size_t>(pe.cols), 0.0);
    for (int64_t r = 0; r < pe.rows; ++r) {
        if (x[size_t(r)] == 0)
            continue;
        for (int64_t c = 0; c < pe.cols; ++c)
            y[size_t(c)] += w[size_t(r * pe.cols + c)] * double(x[size_t(r)]);
    }
    for (auto &v : y)
        v /= double(pe.divisor);
    return y;
}

std::vector<int64_t> pe_oracle_perturbed(const PEWeights &pe, const std::vector<double> &w, const std::vector<int64_t> &x,
                                         int64_t gamma)
{
    auto drive = crossbar_drive(pe, w, x);
    std::vector<int64_t> y(drive.size());
    for (size_t c = 0; c < y.size(); ++c)
        y[c] = clamp_count(int64_t(std::floor(drive[c] + 1e-9)), gamma);
    return y;
}

std::string variation_sweep_csv(const CellModel &cell, int64_t trials, uint64_t seed)
{
    std::vector<WeightCoding> codings = {WeightCoding::single(), WeightCoding::splice(2, cell), WeightCoding::add(2),
                                         WeightCoding::add(4), WeightCoding::add(8)};
    std::ostringstream os;
    os.precision(9);
    os << "method,m,n_c,sigma,analytic,empirical,stderr\n";
    for (size_t i = 0; i < codings.size(); ++i) {
        const auto &c = codings[i];
        auto est = monte_carlo_norm_dev(c, cell, trials, seed + i);
        os << to_string(c.method) << ',' << c.cells() << ',' << cell.bits << ',' << cell.sigma << ','
           << analytic_norm_dev(c, cell) << ',' << est.value << ',' << est.stderr_ << '\n';
    }
    return os.str();
}

} // namespace fpsa
