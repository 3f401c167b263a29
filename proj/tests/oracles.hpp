#pragma once

// Reference computations for the tests. Written from the definitions, without
// the library's algorithms, so agreement means something.

#include <qspn/topo.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using qspn::Graph;
using qspn::NodeId;
using Route = std::vector<NodeId>;

inline Graph fixture(const std::string& name) {
    std::ifstream in(std::string(QSPN_FIXTURES) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    return qspn::read_graph(in);
}

// "ABDE" -> {0,1,3,4}
inline Route letters(const std::string& s) {
    Route r;
    for (char c : s) r.push_back(static_cast<NodeId>(c - 'A'));
    return r;
}

// Any characters, each one a node id; for the rule examples that mix digits and letters.
inline Route chars(const std::string& s) {
    Route r;
    for (unsigned char c : s) r.push_back(c);
    return r;
}

inline std::string to_letters(const Route& r) {
    std::string s;
    for (NodeId n : r) s += static_cast<char>('A' + n);
    return s;
}

// Plain O(n^2) Dijkstra on trtt; nullopt when unreachable.
inline std::vector<std::optional<double>> distances(const Graph& g, NodeId src) {
    std::size_t n = g.node_count();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(n, inf);
    std::vector<bool> done(n, false);
    d[src] = 0;
    for (;;) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i] && d[i] < inf && (best == n || d[i] < d[best])) best = i;
        if (best == n) break;
        done[best] = true;
        for (std::size_t j = 0; j < n; ++j) {
            auto q = g.find_link(static_cast<NodeId>(best), static_cast<NodeId>(j));
            if (q && d[best] + q->rtt < d[j]) d[j] = d[best] + q->rtt;
        }
    }
    std::vector<std::optional<double>> out(n);
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] < inf && g.alive(static_cast<NodeId>(i))) out[i] = d[i];
    return out;
}

// Every simple path starting at `src` (length >= 2), by exhaustive DFS.
inline void simple_paths(const Graph& g, Route& cur, std::vector<Route>& out) {
    if (cur.size() >= 2) out.push_back(cur);
    for (NodeId m = 0; m < g.node_count(); ++m) {
        if (!g.has_link(cur.back(), m)) continue;
        if (std::find(cur.begin(), cur.end(), m) != cur.end()) continue;
        cur.push_back(m);
        simple_paths(g, cur, out);
        cur.pop_back();
    }
}

inline std::vector<Route> simple_paths_from(const Graph& g, NodeId src) {
    std::vector<Route> out;
    Route cur{src};
    simple_paths(g, cur, out);
    return out;
}

// Simple paths from src that cannot be extended: every neighbour of the last
// node is already on the path.
inline std::set<Route> maximal_paths_from(const Graph& g, NodeId src) {
    std::set<Route> out;
    for (const auto& p : simple_paths_from(g, src)) {
        bool stuck = true;
        for (NodeId m = 0; m < g.node_count(); ++m)
            if (g.has_link(p.back(), m) && std::find(p.begin(), p.end(), m) == p.end()) stuck = false;
        if (stuck) out.insert(p);
    }
    return out;
}

// Simple cycles (length >= 3) of K_n, counted by listing vertex sequences that
// start at their smallest vertex and halving for the two directions.
inline std::uint64_t cycles_in_complete(unsigned n) {
    std::uint64_t twice = 0;
    std::vector<bool> used(n, false);
    // cur: current path, start = its first vertex (the minimum)
    auto rec = [&](auto&& self, unsigned start, unsigned len) -> void {
        if (len >= 3) ++twice;  // closing edge always exists in K_n
        for (unsigned v = start + 1; v < n; ++v) {
            if (used[v]) continue;
            used[v] = true;
            self(self, start, len + 1);
            used[v] = false;
        }
    };
    for (unsigned s = 0; s < n; ++s) {
        used[s] = true;
        rec(rec, s, 1);
        used[s] = false;
    }
    return twice / 2;
}

}  // namespace oracle
