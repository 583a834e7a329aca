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
#include <queue>
#include <sstream>

#include "fpsa/fabric.hpp"

namespace fpsa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char *kind_name(RRKind k)
{
    switch (k) {
    case RRKind::Opin:
        return "opin";
    case RRKind::Ipin:
        return "ipin";
    case RRKind::ChanX:
        return "chanx";
    case RRKind::ChanY:
        return "chany";
    }
    return "?";
}

class Router
{
  public:
    Router(const Netlist &nl, const Placement &p, const FabricModel &f, const RouteParams &rp)
            : nl_(nl), p_(p), f_(f), rp_(rp)
    {
        const size_t n = f.nodes.size();
        occ_.assign(n, 0);
        hist_.assign(n, 0.0);
        dist_.assign(n, kInf);
        prev_.assign(n, -1);
        in_tree_.assign(n, -1);
        // Small per-node base so congestion can steer pin choices; absent
        // when congestion is off so costs equal delays exactly.
        base_ = rp.congestion ? 0.01 * std::max(f.arch.d_wire, 1e-3) : 0.0;
    }

    RoutedDesign run()
    {
        std::vector<int32_t> order(nl_.nets.size());
        for (size_t i = 0; i < order.size(); ++i)
            order[i] = int32_t(i);
        std::vector<double> hp(nl_.nets.size());
        for (size_t i = 0; i < hp.size(); ++i)
            hp[i] = net_hpwl(nl_.nets[i], p_, f_);
        std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
            const auto &na = nl_.nets[size_t(a)], &nb = nl_.nets[size_t(b)];
            if (na.sinks.size() != nb.sinks.size())
                return na.sinks.size() > nb.sinks.size();
            if (hp[size_t(a)] != hp[size_t(b)])
                return hp[size_t(a)] > hp[size_t(b)];
            return a < b;
        });

        RoutedDesign out;
        out.nets.resize(nl_.nets.size());
        pres_ = rp_.pres_fac;
        const int iters = rp_.congestion ? rp_.max_iterations : 1;
        std::vector<int32_t> over;
        for (int it = 1; it <= iters; ++it) {
            out.iterations = it;
            for (int32_t ni : order) {
                RoutedNet &rn = out.nets[size_t(ni)];
                if (it > 1) {
                    bool hit = false;
                    for (int32_t n : rn.nodes)
                        hit |= occ_[size_t(n)] > 1;
                    if (!hit)
                        continue;
                    for (int32_t n : rn.nodes)
                        occ_[size_t(n)]--;
                }
                rn = route_net(ni);
                for (int32_t n : rn.nodes)
                    occ_[size_t(n)]++;
            }
            over.clear();
            for (size_t n = 0; n < occ_.size(); ++n)
                if (occ_[n] > 1)
                    over.push_back(int32_t(n));
            if (over.empty() || !rp_.congestion)
                break;
            for (int32_t n : over)
                hist_[size_t(n)] += rp_.hist_fac * double(occ_[size_t(n)] - 1);
            pres_ *= rp_.pres_mult;
        }
        out.overuse = over;
        if (rp_.congestion && !over.empty()) {
            std::ostringstream os;
            os << "routing failed after " << out.iterations << " iterations: " << over.size()
               << " overused node(s); channel width " << f_.arch.channel_width << " too small? overuse map:";
            for (size_t i = 0; i < over.size() && i < 12; ++i) {
                const auto &nd = f_.nodes[size_t(over[i])];
                os << " " << kind_name(nd.kind) << "(" << nd.x << "," << nd.y << ")#" << nd.index << "x"
                   << occ_[size_t(over[i])];
            }
            throw UnroutableError(os.str());
        }
        return out;
    }

  private:
    double node_cost(int32_t n) const
    {
        const RRNode &nd = f_.nodes[size_t(n)];
        if (!rp_.congestion)
            return nd.delay;
        double pres = 1.0 + pres_ * double(occ_[size_t(n)]); // capacity 1 per node
        return (nd.delay + base_) * pres * (1.0 + hist_[size_t(n)]);
    }

    RoutedNet route_net(int32_t ni)
    {
        const Net &net = nl_.nets[size_t(ni)];
        RoutedNet rn;
        rn.net = ni;
        const Site &src = f_.sites[size_t(p_.site_of[size_t(net.driver)])];
        rn.nodes.push_back(src.opin);
        rn.parent.push_back(-1);
        std::vector<double> tree_cost{0.0};
        in_tree_[size_t(src.opin)] = 0;

        std::vector<int32_t> sinks = net.sinks;
        std::sort(sinks.begin(), sinks.end(), [&](int32_t a, int32_t b) {
            const Site &sa = f_.sites[size_t(p_.site_of[size_t(a)])], &sb = f_.sites[size_t(p_.site_of[size_t(b)])];
            int da = std::abs(sa.x - src.x) + std::abs(sa.y - src.y);
            int db = std::abs(sb.x - src.x) + std::abs(sb.y - src.y);
            return da != db ? da < db : a < b;
        });

        using Item = std::pair<double, int32_t>;
        for (int32_t sink : sinks) {
            const int32_t target = p_.site_of[size_t(sink)];
            std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
            touched_.clear();
            for (size_t k = 0; k < rn.nodes.size(); ++k) {
                int32_t n = rn.nodes[k];
                if (f_.nodes[size_t(n)].kind == RRKind::Ipin)
                    continue;
                dist_[size_t(n)] = tree_cost[k];
                prev_[size_t(n)] = -1;
                touched_.push_back(n);
                heap.push({tree_cost[k], n});
            }
            int32_t reached = -1;
            while (!heap.empty()) {
                auto [d, n] = heap.top();
                heap.pop();
                if (d > dist_[size_t(n)])
                    continue;
                const RRNode &nd = f_.nodes[size_t(n)];
                if (nd.kind == RRKind::Ipin) {
                    reached = n;
                    break;
                }
                for (int64_t e = f_.edge_begin[size_t(n)]; e < f_.edge_begin[size_t(n) + 1]; ++e) {
                    const RREdge &ed = f_.edges[size_t(e)];
                    const RRNode &m = f_.nodes[size_t(ed.to)];
                    if (m.kind == RRKind::Ipin && m.site != target)
                        continue;
                    double nd2 = d + ed.delay + node_cost(ed.to);
                    if (nd2 < dist_[size_t(ed.to)]) {
                        if (dist_[size_t(ed.to)] == kInf)
                            touched_.push_back(ed.to);
                        dist_[size_t(ed.to)] = nd2;
                        prev_[size_t(ed.to)] = n;
                        heap.push({nd2, ed.to});
                    }
                }
            }
            if (reached < 0) {
                for (int32_t n : touched_)
                    dist_[size_t(n)] = kInf;
                for (int32_t n : rn.nodes)
                    in_tree_[size_t(n)] = -1;
                throw UnroutableError("net " + std::to_string(ni) + " has no path to block " + std::to_string(sink));
            }
            std::vector<int32_t> path;
            int32_t n = reached;
            while (in_tree_[size_t(n)] < 0) {
                path.push_back(n);
                n = prev_[size_t(n)];
            }
            int32_t parent = in_tree_[size_t(n)];
            for (auto it = path.rbegin(); it != path.rend(); ++it) {
                in_tree_[size_t(*it)] = int32_t(rn.nodes.size());
                rn.nodes.push_back(*it);
                rn.parent.push_back(parent);
                tree_cost.push_back(dist_[size_t(*it)]);
                parent = int32_t(rn.nodes.size() - 1);
            }
            rn.sink_blocks.push_back(sink);
            rn.sink_nodes.push_back(reached);
            for (int32_t t : touched_)
                dist_[size_t(t)] = kInf;
        }
        for (int32_t n : rn.nodes)
            in_tree_[size_t(n)] = -1;

        // Delay along the tree from the driver.
        std::vector<double> delay(rn.nodes.size(), 0.0);
        for (size_t k = 1; k < rn.nodes.size(); ++k) {
            int32_t from = rn.nodes[size_t(rn.parent[k])], to = rn.nodes[k];
            double ed = 0.0;
            for (int64_t e = f_.edge_begin[size_t(from)]; e < f_.edge_begin[size_t(from) + 1]; ++e)
                if (f_.edges[size_t(e)].to == to) {
                    ed = f_.edges[size_t(e)].delay;
                    break;
                }
            delay[k] = delay[size_t(rn.parent[k])] + ed + f_.nodes[size_t(to)].delay;
        }
        for (int32_t sn : rn.sink_nodes) {
            auto it = std::find(rn.nodes.begin(), rn.nodes.end(), sn);
            rn.sink_delay.push_back(delay[size_t(it - rn.nodes.begin())]);
        }
        return rn;
    }

    const Netlist &nl_;
    const Placement &p_;
    const FabricModel &f_;
    RouteParams rp_;
    std::vector<int> occ_;
    std::vector<double> hist_, dist_;
    std::vector<int32_t> prev_, in_tree_, touched_;
    double pres_ = 0.0, base_ = 0.0;
};

} // namespace

RoutedDesign route(const Netlist &nl, const Placement &p, const FabricModel &f, const RouteParams &rp)
{
    if (p.site_of.size() != nl.blocks.size())
        throw ValidationError("", "placement does not match the netlist");
    return Router(nl, p, f, rp).run();
}

std::vector<int32_t> shared_nodes(const RoutedDesign &r, const FabricModel &f)
{
    std::vector<int> users(f.nodes.size(), 0);
    for (const auto &rn : r.nets)
        for (int32_t n : rn.nodes)
            users[size_t(n)]++;
    std::vector<int32_t> out;
    for (size_t n = 0; n < users.size(); ++n)
        if (users[n] > 1)
            out.push_back(int32_t(n));
    return out;
}

CriticalPath critical_path(const RoutedDesign &r, const Netlist &nl)
{
    CriticalPath cp;
    cp.per_stage.assign(size_t(std::max<int32_t>(1, nl.num_stages)), 0.0);
    for (const auto &rn : r.nets) {
        if (rn.sink_delay.empty())
            continue;
        double d = *std::max_element(rn.sink_delay.begin(), rn.sink_delay.end());
        int32_t st = std::clamp<int32_t>(nl.nets[size_t(rn.net)].stage, 0, int32_t(cp.per_stage.size()) - 1);
        cp.per_stage[size_t(st)] = std::max(cp.per_stage[size_t(st)], d);
        if (d > cp.ns) {
            cp.ns = d;
            cp.net = rn.net;
        }
    }
    return cp;
}

} // namespace fpsa
