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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fpsa/fabric.hpp"

namespace fpsa {

double net_hpwl(const Net &net, const Placement &p, const FabricModel &f)
{
    const Site &d = f.sites[size_t(p.site_of[size_t(net.driver)])];
    int x0 = d.x, x1 = d.x, y0 = d.y, y1 = d.y;
    for (int32_t b : net.sinks) {
        const Site &s = f.sites[size_t(p.site_of[size_t(b)])];
        x0 = std::min(x0, s.x);
        x1 = std::max(x1, s.x);
        y0 = std::min(y0, s.y);
        y1 = std::max(y1, s.y);
    }
    return double((x1 - x0) + (y1 - y0));
}

double placement_cost(const Netlist &nl, const Placement &p, const FabricModel &f)
{
    double c = 0.0;
    for (const auto &n : nl.nets)
        c += net_hpwl(n, p, f);
    return c;
}

namespace {

class Annealer
{
  public:
    Annealer(const Netlist &nl, const FabricModel &f, uint64_t seed, const SAParams &sa)
            : nl_(nl), f_(f), sa_(sa), rng_(seed)
    {
        p_.seed = seed;
        nets_of_.resize(nl.blocks.size());
        for (size_t i = 0; i < nl.nets.size(); ++i) {
            nets_of_[size_t(nl.nets[i].driver)].push_back(int32_t(i));
            for (int32_t s : nl.nets[i].sinks)
                if (nets_of_[size_t(s)].empty() || nets_of_[size_t(s)].back() != int32_t(i))
                    nets_of_[size_t(s)].push_back(int32_t(i));
        }
        mark_.assign(nl.nets.size(), 0);
    }

    Placement run()
    {
        initial();
        net_cost_.resize(nl_.nets.size());
        cost_ = 0.0;
        for (size_t i = 0; i < nl_.nets.size(); ++i)
            cost_ += (net_cost_[i] = net_hpwl(nl_.nets[i], p_, f_));
        p_.initial_cost = cost_;
        best_cost_ = cost_;
        best_ = p_.site_of;

        if (nl_.blocks.size() > 1 && !nl_.nets.empty()) {
            const int64_t per_t = sa_.moves_per_temp > 0
                                          ? sa_.moves_per_temp
                                          : std::max<int64_t>(100, 10 * int64_t(nl_.blocks.size()));
            double T = sa_.t0 > 0.0 ? sa_.t0 : initial_temperature();
            const double t_stop = sa_.t_min * std::max(1.0, cost_ / double(nl_.nets.size()));
            rlim_ = std::max(f_.arch.width, f_.arch.height);
            int64_t total = 0;
            while (T > t_stop) {
                int64_t accepted = 0;
                for (int64_t m = 0; m < per_t; ++m)
                    accepted += try_move(T) ? 1 : 0;
                total += per_t;
                double rate = double(accepted) / double(per_t);
                rlim_ = std::clamp(int(std::lround(rlim_ * (1.0 - 0.44 + rate))), 1,
                                   std::max(f_.arch.width, f_.arch.height));
                T *= sa_.alpha;
            }
            // Quench is quench_fraction of all moves, annealing plus quench.
            const double qf = std::clamp(sa_.quench_fraction, 0.0, 0.9);
            int64_t quench = std::max<int64_t>(per_t, int64_t(std::ceil(qf / (1.0 - qf) * double(total))));
            for (int64_t m = 0; m < quench; ++m)
                try_move(0.0);
            p_.moves = total + quench;
            p_.quench_moves = quench;
        }
        if (best_cost_ < cost_) {
            p_.site_of = best_;
            cost_ = best_cost_;
        }
        p_.final_cost = placement_cost(nl_, p_, f_);
        return std::move(p_);
    }

  private:
    void initial()
    {
        std::map<char, std::vector<int32_t>> free_sites;
        for (size_t s = 0; s < f_.sites.size(); ++s)
            free_sites[f_.sites[s].kind].push_back(int32_t(s));
        std::map<char, int64_t> need;
        for (const auto &b : nl_.blocks)
            need[site_kind_for(b.kind)]++;
        std::string deficit;
        for (const auto &[k, n] : need) {
            int64_t have = int64_t(free_sites[k].size());
            if (have < n)
                deficit += std::string(deficit.empty() ? "" : ", ") + k + ": need " + std::to_string(n) +
                           ", have " + std::to_string(have);
        }
        if (!deficit.empty())
            throw InfeasibleError("insufficient fabric sites (" + deficit + ")");
        for (auto &[k, v] : free_sites)
            std::shuffle(v.begin(), v.end(), rng_);
        std::map<char, size_t> next;
        block_at_.assign(f_.sites.size(), -1);
        p_.site_of.resize(nl_.blocks.size());
        for (size_t b = 0; b < nl_.blocks.size(); ++b) {
            char k = site_kind_for(nl_.blocks[b].kind);
            int32_t s = free_sites[k][next[k]++];
            p_.site_of[b] = s;
            block_at_[size_t(s)] = int32_t(b);
        }
    }

    double initial_temperature()
    {
        std::vector<double> deltas;
        for (size_t m = 0; m < std::max<size_t>(nl_.blocks.size(), 50); ++m) {
            double d;
            if (propose(d))
                deltas.push_back(d);
            revert();
        }
        if (deltas.size() < 2)
            return 1.0;
        double mean = 0.0, var = 0.0;
        for (double d : deltas)
            mean += d;
        mean /= double(deltas.size());
        for (double d : deltas)
            var += (d - mean) * (d - mean);
        double sd = std::sqrt(var / double(deltas.size() - 1));
        return sd > 0.0 ? 20.0 * sd : 1.0;
    }

    void swap_sites(int32_t a, int32_t sa, int32_t b, int32_t sb)
    {
        p_.site_of[size_t(a)] = sb;
        block_at_[size_t(sb)] = a;
        if (b >= 0) {
            p_.site_of[size_t(b)] = sa;
            block_at_[size_t(sa)] = b;
        } else {
            block_at_[size_t(sa)] = -1;
        }
    }

    // Applies a random move and returns its cost delta; revert() undoes it.
    bool propose(double &delta)
    {
        touched_.clear();
        std::uniform_int_distribution<size_t> pick(0, nl_.blocks.size() - 1);
        int32_t a = int32_t(pick(rng_));
        int32_t sa = p_.site_of[size_t(a)];
        const Site &from = f_.sites[size_t(sa)];
        std::uniform_int_distribution<int> off(-rlim_, rlim_);
        int32_t sb = -1;
        for (int tries = 0; tries < 10 && sb < 0; ++tries) {
            int x = from.x + off(rng_), y = from.y + off(rng_);
            if (x < 0 || y < 0 || x >= f_.arch.width || y >= f_.arch.height)
                continue;
            int32_t s = f_.site_at[size_t(y * f_.arch.width + x)];
            if (s >= 0 && s != sa && f_.sites[size_t(s)].kind == from.kind)
                sb = s;
        }
        if (sb < 0) {
            moved_ = false;
            return false;
        }
        int32_t b = block_at_[size_t(sb)];
        mv_ = {a, sa, b, sb};
        moved_ = true;
        ++stamp_;
        for (int32_t blk : {a, b}) {
            if (blk < 0)
                continue;
            for (int32_t n : nets_of_[size_t(blk)])
                if (mark_[size_t(n)] != stamp_) {
                    mark_[size_t(n)] = stamp_;
                    touched_.push_back(n);
                }
        }
        swap_sites(a, sa, b, sb);
        delta = 0.0;
        new_cost_.clear();
        for (int32_t n : touched_) {
            double c = net_hpwl(nl_.nets[size_t(n)], p_, f_);
            new_cost_.push_back(c);
            delta += c - net_cost_[size_t(n)];
        }
        return true;
    }

    void revert()
    {
        if (!moved_)
            return;
        swap_sites(mv_.a, mv_.sb, mv_.b, mv_.sa);
        moved_ = false;
    }

    bool try_move(double T)
    {
        double d;
        if (!propose(d))
            return false;
        bool accept = d <= 0.0 || (T > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < std::exp(-d / T));
        if (!accept) {
            revert();
            return false;
        }
        if (T == 0.0 && d > 0.0)
            p_.quench_uphill_accepted++;
        for (size_t i = 0; i < touched_.size(); ++i)
            net_cost_[size_t(touched_[i])] = new_cost_[i];
        cost_ += d;
        if (cost_ < best_cost_ - 1e-9) {
            best_cost_ = cost_;
            best_ = p_.site_of;
        }
        return true;
    }

    struct Move
    {
        int32_t a, sa, b, sb;
    };

    const Netlist &nl_;
    const FabricModel &f_;
    SAParams sa_;
    std::mt19937_64 rng_;
    Placement p_;
    std::vector<std::vector<int32_t>> nets_of_;
    std::vector<int32_t> block_at_;
    std::vector<double> net_cost_, new_cost_;
    std::vector<int32_t> touched_;
    std::vector<uint32_t> mark_;
    uint32_t stamp_ = 0;
    Move mv_{};
    bool moved_ = false;
    int rlim_ = 1;
    double cost_ = 0.0, best_cost_ = 0.0;
    std::vector<int32_t> best_;
};

} // namespace

Placement place(const Netlist &nl, const FabricModel &f, uint64_t seed, const SAParams &sa)
{
    return Annealer(nl, f, seed, sa).run();
}

} // namespace fpsa
