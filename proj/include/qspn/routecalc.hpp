#pragma once

#include <qspn/route.hpp>

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <vector>

namespace qspn {

namespace detail {
inline void walk(const Graph& g, NodeId n, Route& branch, std::vector<Route>& out) {
    bool deepened = false;
    for (NodeId l : g.neighbours(n)) {
        if (std::find(branch.begin(), branch.end(), l) != branch.end()) continue;
        branch.push_back(l);
        walk(g, l, branch, out);
        branch.pop_back();
        deepened = true;
    }
    if (!deepened && branch.size() >= 2) out.push_back(branch);  // an isolated origin has no route
}
}  // namespace detail

// Maximal branches of the recursive walk started at `origin`, in emission order.
inline std::vector<Route> enumerate_routes_from(const Graph& g, NodeId origin) {
    if (!g.alive(origin)) throw Error("walk origin is not alive");
    std::vector<Route> out;
    Route branch{origin};
    detail::walk(g, origin, branch, out);
    return out;
}

inline std::vector<Route> enumerate_routes(const Graph& g) {
    if (g.alive_count() == 0) throw Error("empty graph");
    std::vector<Route> out;
    for (NodeId n = 0; n < g.node_count(); ++n) {
        if (!g.alive(n)) continue;
        auto part = enumerate_routes_from(g, n);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

// A TP body carries every contiguous piece of itself.
inline bool contains_route(const Route& tp_body, const Route& r) {
    if (r.empty()) return true;
    return std::search(tp_body.begin(), tp_body.end(), r.begin(), r.end()) != tp_body.end();
}

// ---- simplification ----
//
// Rules, tried in this order, each on ordered pairs (a, b) taken from the
// current set in ascending lexicographic order; the first applicable pair is
// rewritten and the scan restarts:
//
//   absorb   YXZ + X       => YXZ
//   overlap  XY + YZ       => XYZ       (longest Y)
//   tail     Xc..c + XcY   => Xc..cY
//   head     c..cZ + YcZ   => Yc..cZ
//   insert   c..c + YcZ    => Yc..cZ
//
// A result that turns back over a link (x a c a y) is rejected.

namespace simplify_rules {

using Rule = std::optional<Route> (*)(const Route&, const Route&);

inline std::optional<Route> absorb(const Route& a, const Route& b) {
    if (a != b && b.size() <= a.size() && contains_route(a, b)) return a;
    return std::nullopt;
}

inline std::optional<Route> overlap(const Route& a, const Route& b) {
    std::size_t most = std::min(a.size(), b.size());
    for (std::size_t y = most; y-- > 1;) {
        if (std::equal(a.end() - static_cast<std::ptrdiff_t>(y), a.end(), b.begin())) {
            Route r = a;
            r.insert(r.end(), b.begin() + static_cast<std::ptrdiff_t>(y), b.end());
            return r;
        }
    }
    return std::nullopt;
}

inline std::optional<Route> tail(const Route& a, const Route& b) {
    if (a.size() < 2) return std::nullopt;
    NodeId c = a.back();
    for (std::size_t i = a.size() - 1; i-- > 0;) {
        if (a[i] != c) continue;
        if (b.size() > i + 1 && std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(i + 1), b.begin())) {
            Route r = a;
            r.insert(r.end(), b.begin() + static_cast<std::ptrdiff_t>(i + 1), b.end());
            return r;
        }
    }
    return std::nullopt;
}

inline std::optional<Route> head(const Route& a, const Route& b) {
    if (a.size() < 2) return std::nullopt;
    NodeId c = a.front();
    for (std::size_t j = 1; j < a.size(); ++j) {
        if (a[j] != c) continue;
        std::size_t t = a.size() - j;
        if (b.size() > t && std::equal(a.begin() + static_cast<std::ptrdiff_t>(j), a.end(),
                                       b.end() - static_cast<std::ptrdiff_t>(t))) {
            Route r(b.begin(), b.end() - static_cast<std::ptrdiff_t>(t));
            r.insert(r.end(), a.begin(), a.end());
            return r;
        }
    }
    return std::nullopt;
}

inline std::optional<Route> insert(const Route& a, const Route& b) {
    if (a.size() < 3 || a.front() != a.back()) return std::nullopt;
    auto at = std::find(b.begin(), b.end(), a.front());
    if (at == b.end()) return std::nullopt;
    Route r(b.begin(), at);
    r.insert(r.end(), a.begin(), a.end());
    r.insert(r.end(), at + 1, b.end());
    return r;
}

inline constexpr Rule order[] = {absorb, overlap, tail, head, insert};

}  // namespace simplify_rules

inline std::set<Route> simplify(const std::set<Route>& routes) {
    std::set<Route> cur = routes;
    for (;;) {
        bool rewrote = false;
        for (auto rule : simplify_rules::order) {
            for (auto ia = cur.begin(); ia != cur.end() && !rewrote; ++ia)
                for (auto ib = cur.begin(); ib != cur.end(); ++ib) {
                    if (ia == ib) continue;
                    auto merged = rule(*ia, *ib);
                    if (!merged || has_reversal(*merged)) continue;
                    Route a = *ia, b = *ib;
                    cur.erase(a);
                    cur.erase(b);
                    cur.insert(std::move(*merged));
                    rewrote = true;
                    break;
                }
            if (rewrote) break;
        }
        if (!rewrote) return cur;
    }
}

inline std::set<Route> simplify(const std::vector<Route>& routes) {
    return simplify(std::set<Route>(routes.begin(), routes.end()));
}

// Routes from `routes` not contained in any body.
inline std::vector<Route> uncovered(const std::set<Route>& bodies, const std::vector<Route>& routes) {
    std::vector<Route> missing;
    for (const auto& r : routes)
        if (std::none_of(bodies.begin(), bodies.end(), [&](const Route& b) { return contains_route(b, r); }))
            missing.push_back(r);
    return missing;
}

}  // namespace qspn
