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
#include <limits>
#include <map>
#include <optional>
#include <queue>

#include "fpsa/mapper.hpp"

namespace fpsa {

int64_t WeightGroupTable::pes() const
{
    int64_t n = 0;
    for (const auto &g : groups)
        n += g.duplication;
    return n;
}

int64_t WeightGroupTable::max_iterations() const
{
    int64_t m = 0;
    for (const auto &g : groups)
        m = std::max(m, g.iterations());
    return m;
}

int64_t WeightGroupTable::total_reuse() const
{
    int64_t n = 0;
    for (const auto &g : groups)
        n += g.reuse();
    return n;
}

int64_t WeightGroupTable::global_duplication() const
{
    const GroupEntry *best = nullptr;
    for (const auto &g : groups)
        if (!best || g.reuse() > best->reuse())
            best = &g;
    return best ? best->duplication : 0;
}

WeightGroupTable group_core_ops(const CoreOpGraph &gco)
{
    WeightGroupTable t;
    t.groups.resize(gco.groups.size());
    for (size_t i = 0; i < t.groups.size(); ++i)
        t.groups[i].group = int32_t(i);
    for (const auto &op : gco.coreops)
        t.groups[size_t(op.group)].members.push_back(op.id);
    return t;
}

WeightGroupTable allocate(WeightGroupTable table, int64_t pe_budget, int64_t target_dup)
{
    const int64_t n = int64_t(table.groups.size());
    if (pe_budget < n)
        throw InfeasibleError("PE budget " + std::to_string(pe_budget) + " below the minimum of " +
                              std::to_string(n) + " (one PE per weight group)");
    int64_t anchor = -1;
    for (int64_t i = 0; i < n; ++i) {
        table.groups[size_t(i)].duplication = 1;
        if (anchor < 0 || table.groups[size_t(i)].reuse() > table.groups[size_t(anchor)].reuse())
            anchor = i;
    }
    // Max iterations first, then larger reuse, then lower id.
    auto worse = [&](int64_t a, int64_t b) {
        const auto &ga = table.groups[size_t(a)], &gb = table.groups[size_t(b)];
        if (ga.iterations() != gb.iterations())
            return ga.iterations() < gb.iterations();
        if (ga.reuse() != gb.reuse())
            return ga.reuse() < gb.reuse();
        return a > b;
    };
    std::priority_queue<int64_t, std::vector<int64_t>, decltype(worse)> heap(worse);
    for (int64_t i = 0; i < n; ++i)
        heap.push(i);
    int64_t spare = pe_budget - n;
    while (spare > 0 && !heap.empty()) {
        if (target_dup > 0 && table.groups[size_t(anchor)].duplication >= target_dup)
            break;
        int64_t top = heap.top();
        auto &g = table.groups[size_t(top)];
        if (g.iterations() <= 1)
            break;
        heap.pop();
        g.duplication++;
        spare--;
        heap.push(top);
    }
    return table;
}

const BufferedEdge *Schedule::find_buffered(int32_t from, int32_t to) const
{
    auto it = std::lower_bound(buffered.begin(), buffered.end(), BufferedEdge{from, to, 0},
                               [](const BufferedEdge &a, const BufferedEdge &b) {
                                   return std::pair(a.from, a.to) < std::pair(b.from, b.to);
                               });
    return (it != buffered.end() && it->from == from && it->to == to) ? &*it : nullptr;
}

int32_t Schedule::num_stages() const
{
    int32_t m = 0;
    for (int32_t s : stage)
        m = std::max(m, s);
    return stage.empty() ? 0 : m + 1;
}

int64_t Schedule::makespan() const
{
    int64_t m = 0;
    for (int64_t e : end)
        m = std::max(m, e);
    return m;
}

namespace {

constexpr int64_t kNone = std::numeric_limits<int64_t>::min();

struct Interval
{
    int64_t s, e;
};

class Scheduler
{
  public:
    Scheduler(const CoreOpGraph &gco, const WeightGroupTable &table, int64_t gamma, int ports)
            : gco_(gco), G_(gamma), ports_(ports)
    {
        const size_t n = gco.coreops.size();
        out_.gamma = gamma;
        out_.read_ports = ports;
        out_.pe_of.assign(n, -1);
        out_.start.assign(n, 0);
        out_.end.assign(n, 0);
        out_.stage.assign(n, 0);
        for (const auto &g : table.groups) {
            int32_t base = int32_t(out_.pes.size());
            for (int64_t c = 0; c < g.duplication; ++c)
                out_.pes.push_back({g.group, int32_t(c)});
            for (size_t k = 0; k < g.members.size(); ++k)
                out_.pe_of[size_t(g.members[k])] = base + int32_t(int64_t(k) % g.duplication);
        }
        busy_.resize(out_.pes.size());
        readers_.resize(n);
    }

    Schedule run()
    {
        std::vector<std::pair<int32_t, int32_t>> buffered;
        for (const auto &op : gco_.coreops) {
            const int32_t v = op.id;
            if (out_.pe_of[size_t(v)] < 0)
                throw InfeasibleError("core-op " + std::to_string(v) + " has no PE");
            auto preds = gco_.predecessors(v);
            std::vector<char> buf(preds.size());
            for (size_t k = 0; k < preds.size(); ++k)
                buf[k] = out_.pe_of[size_t(preds[k])] == out_.pe_of[size_t(v)];
            int64_t s = place(v, preds, buf);
            int64_t e = end_for(s, preds, buf);
            out_.start[size_t(v)] = s;
            out_.end[size_t(v)] = e;
            occupy(out_.pe_of[size_t(v)], s, e);
            for (size_t k = 0; k < preds.size(); ++k) {
                if (!buf[k])
                    continue;
                int port = free_port(preds[k], e);
                readers_[size_t(preds[k])].resize(size_t(ports_));
                readers_[size_t(preds[k])][size_t(port)].push_back(e);
                out_.buffered.push_back({preds[k], v, port});
            }
            int32_t st = 0;
            for (size_t k = 0; k < preds.size(); ++k)
                st = std::max(st, out_.stage[size_t(preds[k])] + (buf[k] ? 1 : 0));
            out_.stage[size_t(v)] = st;
        }
        std::sort(out_.buffered.begin(), out_.buffered.end());
        return std::move(out_);
    }

  private:
    int64_t end_for(int64_t s, const std::vector<int32_t> &preds, const std::vector<char> &buf) const
    {
        int64_t e = s + G_;
        for (size_t k = 0; k < preds.size(); ++k)
            if (!buf[k])
                e = std::max(e, out_.end[size_t(preds[k])] + 1);
        return e;
    }

    // Busy blocks on one PE are disjoint, so only the last one starting at or
    // before e can overlap [s, e].
    std::optional<Interval> rc_conflict(int32_t pe, int64_t s, int64_t e) const
    {
        const auto &busy = busy_[size_t(pe)];
        auto it = busy.upper_bound(e);
        if (it == busy.begin())
            return std::nullopt;
        --it;
        if (it->second < s)
            return std::nullopt;
        return Interval{it->first, it->second};
    }

    // Blocks separated by at most gamma free cycles are merged: no window of
    // gamma + 1 cycles fits between them, so conflict queries are unchanged.
    void occupy(int32_t pe, int64_t s, int64_t e)
    {
        auto &busy = busy_[size_t(pe)];
        auto next = busy.lower_bound(s);
        if (next != busy.begin()) {
            auto prev = std::prev(next);
            if (prev->second + G_ + 1 >= s) {
                s = prev->first;
                e = std::max(e, prev->second);
                busy.erase(prev);
            }
        }
        while (next != busy.end() && e + G_ + 1 >= next->first) {
            e = std::max(e, next->second);
            next = busy.erase(next);
        }
        busy.emplace(s, e);
    }

    bool port_ok(int32_t u, int port, int64_t e) const
    {
        if (readers_[size_t(u)].empty())
            return true;
        for (int64_t w : readers_[size_t(u)][size_t(port)])
            if (std::abs(e - w) <= G_)
                return false;
        return true;
    }

    int free_port(int32_t u, int64_t e) const
    {
        for (int p = 0; p < ports_; ++p)
            if (port_ok(u, p, e))
                return p;
        return -1;
    }

    // Nearest end time on `port` of u's buffer, searching up or down from e.
    int64_t port_shift(int32_t u, int port, int64_t e, bool up) const
    {
        int64_t cand = e;
        for (bool moved = true; moved;) {
            moved = false;
            for (int64_t w : readers_[size_t(u)][size_t(port)])
                if (std::abs(cand - w) <= G_) {
                    cand = up ? w + G_ + 1 : w - G_ - 1;
                    moved = true;
                }
        }
        return cand;
    }

    int64_t place(int32_t v, const std::vector<int32_t> &preds, std::vector<char> &buf)
    {
        const int32_t pe = out_.pe_of[size_t(v)];
        for (;;) {
            int64_t L = 0, U = std::numeric_limits<int64_t>::max(), e_min = kNone;
            int64_t tight = -1;
            for (size_t k = 0; k < preds.size(); ++k) {
                int32_t u = preds[k];
                if (buf[k]) {
                    L = std::max(L, out_.end[size_t(u)] + 1);
                } else {
                    if (out_.start[size_t(u)] + 1 < U) {
                        U = out_.start[size_t(u)] + 1;
                        tight = int64_t(k);
                    }
                    e_min = std::max(e_min, out_.end[size_t(u)] + 1);
                }
            }
            if (tight < 0)
                return ascend(pe, L, preds, buf);
            int64_t s = descend(pe, L, U, e_min, preds, buf);
            if (s != kNone)
                return s;
            buf[size_t(tight)] = 1; // NBD cannot hold: route this edge through a buffer
        }
    }

    // Latest s in [L, U] satisfying RC and BC with e = max(s + gamma, e_min).
    int64_t descend(int32_t pe, int64_t L, int64_t U, int64_t e_min, const std::vector<int32_t> &preds,
                    const std::vector<char> &buf) const
    {
        int64_t s = U;
        while (s >= L) {
            int64_t e = std::max(s + G_, e_min);
            if (auto iv = rc_conflict(pe, s, e)) {
                if (e_min >= iv->s)
                    return kNone;
                s = std::min(s - 1, iv->s - G_ - 1);
                continue;
            }
            int64_t next = s;
            for (size_t k = 0; k < preds.size() && next == s; ++k) {
                if (!buf[k] || free_port(preds[k], e) >= 0)
                    continue;
                int64_t best = kNone;
                for (int p = 0; p < ports_; ++p) {
                    int64_t cand = port_shift(preds[k], p, e - 1, false);
                    if (cand >= e_min && cand - G_ >= L)
                        best = std::max(best, cand - G_);
                }
                if (best == kNone)
                    return kNone;
                next = std::min(s - 1, best);
            }
            if (next == s)
                return s;
            s = next;
        }
        return kNone;
    }

    // Earliest s >= L satisfying RC and BC with e = s + gamma.
    int64_t ascend(int32_t pe, int64_t L, const std::vector<int32_t> &preds, const std::vector<char> &buf) const
    {
        int64_t s = L;
        for (;;) {
            int64_t e = s + G_;
            if (auto iv = rc_conflict(pe, s, e)) {
                s = iv->e + 1;
                continue;
            }
            int64_t next = s;
            for (size_t k = 0; k < preds.size() && next == s; ++k) {
                if (!buf[k] || free_port(preds[k], e) >= 0)
                    continue;
                int64_t best = std::numeric_limits<int64_t>::max();
                for (int p = 0; p < ports_; ++p)
                    best = std::min(best, port_shift(preds[k], p, e + 1, true) - G_);
                next = std::max(s + 1, best);
            }
            if (next == s)
                return s;
            s = next;
        }
    }

    const CoreOpGraph &gco_;
    const int64_t G_;
    const int ports_;
    Schedule out_;
    std::vector<std::map<int64_t, int64_t>> busy_; // per PE: merged block start -> end
    std::vector<std::vector<std::vector<int64_t>>> readers_; // [producer][port] -> reader end cycles
};

} // namespace

Schedule schedule(const CoreOpGraph &gco, const WeightGroupTable &table, int64_t gamma, int read_ports)
{
    if (gamma < 1 || read_ports < 1)
        throw ConfigError("schedule needs gamma >= 1 and at least one buffer read port");
    return Scheduler(gco, table, gamma, read_ports).run();
}

std::vector<Violation> check_schedule(const CoreOpGraph &gco, const Schedule &sched)
{
    std::vector<Violation> out;
    const size_t n = gco.coreops.size();
    if (sched.pe_of.size() != n || sched.start.size() != n || sched.end.size() != n) {
        out.push_back({"RC", {}, {int64_t(n), int64_t(sched.pe_of.size())}, "schedule size differs from graph"});
        return out;
    }
    const int64_t G = sched.gamma;

    for (size_t v = 0; v < n; ++v)
        if (sched.start[v] + G > sched.end[v])
            out.push_back({"SW",
                           {int32_t(v)},
                           {sched.start[v], sched.end[v], G},
                           "window shorter than gamma: s + gamma > e"});

    std::vector<std::vector<int32_t>> on_pe(sched.pes.size());
    for (size_t v = 0; v < n; ++v)
        on_pe[size_t(sched.pe_of[v])].push_back(int32_t(v));
    for (auto &ops : on_pe) {
        std::sort(ops.begin(), ops.end(), [&](int32_t a, int32_t b) {
            return std::tie(sched.start[size_t(a)], sched.end[size_t(a)], a) <
                   std::tie(sched.start[size_t(b)], sched.end[size_t(b)], b);
        });
        int32_t last = -1;
        for (int32_t v : ops) {
            if (last >= 0 && sched.start[size_t(v)] <= sched.end[size_t(last)])
                out.push_back({"RC",
                               {last, v},
                               {sched.start[size_t(last)], sched.end[size_t(last)], sched.start[size_t(v)],
                                sched.end[size_t(v)]},
                               "overlapping execution on PE " + std::to_string(sched.pe_of[size_t(v)])});
            if (last < 0 || sched.end[size_t(v)] > sched.end[size_t(last)])
                last = v;
        }
    }

    for (size_t v = 0; v < n; ++v)
        for (int32_t u : gco.predecessors(int32_t(v))) {
            int64_t su = sched.start[size_t(u)], eu = sched.end[size_t(u)];
            int64_t sv = sched.start[v], ev = sched.end[v];
            if (sched.is_buffered(u, int32_t(v))) {
                if (!(sv > eu))
                    out.push_back({"BD", {u, int32_t(v)}, {eu, sv}, "buffered consumer starts before producer ends"});
            } else if (!(sv <= su + 1 && ev >= eu + 1)) {
                out.push_back({"NBD",
                               {u, int32_t(v)},
                               {su, eu, sv, ev},
                               "unbuffered consumer does not cover the producer window"});
            }
        }

    for (size_t i = 0; i < sched.buffered.size(); ++i)
        for (size_t j = i + 1; j < sched.buffered.size() && sched.buffered[j].from == sched.buffered[i].from; ++j) {
            const auto &a = sched.buffered[i], &b = sched.buffered[j];
            if (a.port != b.port || a.to == b.to)
                continue;
            int64_t ea = sched.end[size_t(a.to)], eb = sched.end[size_t(b.to)];
            if (!(ea > eb + G || eb > ea + G))
                out.push_back({"BC",
                               {a.from, a.to, b.to},
                               {ea, eb, G},
                               "readers of one buffer port closer than gamma"});
        }
    return out;
}

} // namespace fpsa
