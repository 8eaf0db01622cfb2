#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "mvdisc/error.hpp"

namespace mvdisc {

using NodeSet = std::set<std::size_t>;

// Directed acyclic graph over nodes 0..n-1. Parent lists are kept sorted and
// child lists are derived from them; instances are immutable values and edits
// return new graphs.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::size_t n) : parents_(n), children_(n) { order_.resize(n); for (std::size_t i = 0; i < n; ++i) order_[i] = i; }

    // Throws CycleError naming one cycle.
    static Dag from_parents(std::vector<std::vector<std::size_t>> parent_sets) {
        Dag g;
        const std::size_t n = parent_sets.size();
        g.parents_ = std::move(parent_sets);
        g.children_.assign(n, {});
        for (std::size_t v = 0; v < n; ++v) {
            auto& ps = g.parents_[v];
            std::sort(ps.begin(), ps.end());
            ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
            for (std::size_t p : ps) {
                if (p >= n) throw ValidationError("parent index " + std::to_string(p) + " out of range");
                if (p == v) throw CycleError("self-loop on node " + std::to_string(v));
                g.children_[p].push_back(v);
            }
        }
        g.order_ = g.topological_order_or_throw();
        return g;
    }

    std::size_t size() const { return parents_.size(); }
    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
    const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }
    const std::vector<std::vector<std::size_t>>& parent_sets() const { return parents_; }
    // Topological order, smallest available index first.
    const std::vector<std::size_t>& order() const { return order_; }

    bool has_edge(std::size_t from, std::size_t to) const {
        const auto& ps = parents_.at(to);
        return std::binary_search(ps.begin(), ps.end(), from);
    }

    std::size_t edge_count() const {
        std::size_t e = 0;
        for (const auto& ps : parents_) e += ps.size();
        return e;
    }

    // True when `to` can be reached from `from` along directed edges.
    bool reaches(std::size_t from, std::size_t to) const {
        std::vector<char> seen(size(), 0);
        std::vector<std::size_t> stack{from};
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            if (v == to) return true;
            if (seen[v]) continue;
            seen[v] = 1;
            for (auto c : children_[v]) stack.push_back(c);
        }
        return false;
    }

    Dag with_edge(std::size_t from, std::size_t to) const {
        auto ps = parents_;
        ps.at(to).push_back(from);
        return from_parents(std::move(ps));
    }

    Dag without_edge(std::size_t from, std::size_t to) const {
        auto ps = parents_;
        auto& p = ps.at(to);
        p.erase(std::remove(p.begin(), p.end(), from), p.end());
        return from_parents(std::move(ps));
    }

    Dag with_edge_reversed(std::size_t from, std::size_t to) const {
        auto ps = parents_;
        auto& p = ps.at(to);
        p.erase(std::remove(p.begin(), p.end(), from), p.end());
        ps.at(from).push_back(to);
        return from_parents(std::move(ps));
    }

    NodeSet ancestors(const NodeSet& nodes) const {
        NodeSet out;
        std::vector<std::size_t> stack(nodes.begin(), nodes.end());
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            if (!out.insert(v).second) continue;
            for (auto p : parents_[v]) stack.push_back(p);
        }
        return out;
    }

    bool operator==(const Dag& o) const { return parents_ == o.parents_; }

private:
    std::vector<std::size_t> topological_order_or_throw() const {
        const std::size_t n = size();
        std::vector<std::size_t> indegree(n);
        for (std::size_t v = 0; v < n; ++v) indegree[v] = parents_[v].size();
        std::set<std::size_t> ready;
        for (std::size_t v = 0; v < n; ++v)
            if (indegree[v] == 0) ready.insert(v);
        std::vector<std::size_t> order;
        while (!ready.empty()) {
            auto v = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(v);
            for (auto c : children_[v])
                if (--indegree[c] == 0) ready.insert(c);
        }
        if (order.size() == n) return order;
        throw CycleError("graph has a cycle: " + describe_cycle(indegree));
    }

    // Walks parent links among the unresolved nodes until one repeats.
    std::string describe_cycle(const std::vector<std::size_t>& indegree) const {
        std::size_t v = 0;
        while (indegree[v] == 0) ++v;
        std::vector<std::size_t> path;
        std::vector<int> pos(size(), -1);
        while (pos[v] < 0) {
            pos[v] = static_cast<int>(path.size());
            path.push_back(v);
            for (auto p : parents_[v])
                if (indegree[p] > 0) {
                    v = p;
                    break;
                }
        }
        std::vector<std::size_t> cycle(path.begin() + pos[v], path.end());
        std::reverse(cycle.begin(), cycle.end());
        std::string s;
        for (auto c : cycle) s += std::to_string(c) + " -> ";
        return s + std::to_string(cycle.front());
    }

    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> order_;
};

inline Dag validate_dag(std::vector<std::vector<std::size_t>> parent_sets) { return Dag::from_parents(std::move(parent_sets)); }

inline NodeSet markov_blanket(const Dag& g, std::size_t v) {
    NodeSet mb(g.parents(v).begin(), g.parents(v).end());
    for (auto c : g.children(v)) {
        mb.insert(c);
        for (auto p : g.parents(c)) mb.insert(p);
    }
    mb.erase(v);
    return mb;
}

// Reachability ("Bayes ball") test: is there an active trail from x to y given z?
inline bool d_separated(const Dag& g, std::size_t x, std::size_t y, const NodeSet& z) {
    if (x == y) throw ValidationError("d-separation query needs two distinct nodes");
    if (z.count(x) || z.count(y)) throw ValidationError("query nodes may not be in the conditioning set");
    const std::size_t n = g.size();
    std::vector<char> observed(n, 0), observed_anc(n, 0);
    for (auto v : z) observed[v] = 1;
    for (auto v : g.ancestors(z)) observed_anc[v] = 1;

    // direction 0: arrived from a child (moving up), 1: arrived from a parent (moving down)
    std::vector<char> visited(2 * n, 0);
    std::deque<std::pair<std::size_t, int>> queue{{x, 0}};
    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[2 * v + dir]) continue;
        visited[2 * v + dir] = 1;
        if (v == y) return false;
        if (dir == 0 && !observed[v]) {
            for (auto p : g.parents(v)) queue.emplace_back(p, 0);
            for (auto c : g.children(v)) queue.emplace_back(c, 1);
        } else if (dir == 1) {
            if (!observed[v])
                for (auto c : g.children(v)) queue.emplace_back(c, 1);
            if (observed_anc[v])
                for (auto p : g.parents(v)) queue.emplace_back(p, 0);
        }
    }
    return true;
}

// Adds a discretized node Y_i for every X_i. In the result X_i keeps index i
// and Y_i gets index n + i; X_i's only parent is Y_i and Y_i's parents are the
// Y_j of X_i's original parents.
inline Dag augment(const Dag& g) {
    const std::size_t n = g.size();
    std::vector<std::vector<std::size_t>> ps(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        ps[i] = {n + i};
        for (auto p : g.parents(i)) ps[n + i].push_back(n + p);
    }
    return Dag::from_parents(std::move(ps));
}

inline void write_dot(std::ostream& os, const Dag& g, const std::vector<std::string>& names) {
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"' || c == '\\') q += '\\';
            q += c;
        }
        return q + "\"";
    };
    os << "digraph bn {\n";
    for (std::size_t v = 0; v < g.size(); ++v) os << "  " << quote(names.at(v)) << ";\n";
    for (std::size_t v = 0; v < g.size(); ++v)
        for (auto p : g.parents(v)) os << "  " << quote(names.at(p)) << " -> " << quote(names.at(v)) << ";\n";
    os << "}\n";
}

}  // namespace mvdisc
