#pragma once

#include <qspn/route.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

namespace qspn {

// One hop of a path or TP body. `link` is the quality of the link that led into
// `node`; it is empty for the first hop, and for a link known to be broken.
struct Hop {
    NodeId node = 0;
    std::optional<LinkQuality> link;

    friend bool operator==(const Hop&, const Hop&) = default;
};

using Path = std::vector<Hop>;

inline Route hops_of(const Path& p) {
    Route r;
    r.reserve(p.size());
    for (const auto& h : p) r.push_back(h.node);
    return r;
}

inline bool same_nodes(const Path& a, const Path& b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](const Hop& x, const Hop& y) { return x.node == y.node; });
}

inline Rem path_rem(const Path& p) {
    Rem rem;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (!p[i].link) return Rem::unreachable();
        rem = rem.extend(*p[i].link);
    }
    return rem;
}

inline Path path_on(const Graph& g, const Route& r) {
    Path p;
    for (std::size_t i = 0; i < r.size(); ++i)
        p.push_back({r[i], i ? g.find_link(r[i - 1], r[i]) : std::nullopt});
    return p;
}

// ---- tracer body ----

// Append-only hop list shared between the copies a node forwards. Appending is
// O(1); readers walk it from the newest hop backwards.
class TracerBody {
    struct Cell {
        Hop hop;
        mutable std::shared_ptr<const Cell> prev;
        std::size_t size;

        Cell(Hop h, std::shared_ptr<const Cell> p)
            : hop(std::move(h)), prev(std::move(p)), size(prev ? prev->size + 1 : 1) {}

        // Unlinks the chain iteratively; recursive release overflows the stack on
        // very long bodies.
        ~Cell() {
            auto p = std::move(prev);
            while (p && p.use_count() == 1) {
                auto next = std::move(p->prev);
                p = std::move(next);
            }
        }
    };

public:
    TracerBody() = default;

    static TracerBody of(const Path& hops) {
        TracerBody b;
        for (const auto& h : hops) b = b.append(h);
        return b;
    }

    TracerBody append(Hop h) const {
        TracerBody b;
        b.tail_ = std::make_shared<const Cell>(std::move(h), tail_);
        return b;
    }

    bool empty() const { return !tail_; }
    std::size_t size() const { return tail_ ? tail_->size : 0; }
    const Hop& back() const { return tail_->hop; }

    // f(hop) -> bool; stops when f returns false.
    template <class F>
    void walk_back(F&& f) const {
        for (const Cell* c = tail_.get(); c; c = c->prev.get())
            if (!f(c->hop)) return;
    }

    bool contains(NodeId n) const {
        bool found = false;
        walk_back([&](const Hop& h) { return !(found = h.node == n); });
        return found;
    }

    Path to_path() const {
        Path p(size());
        std::size_t i = p.size();
        walk_back([&](const Hop& h) {
            p[--i] = h;
            return true;
        });
        return p;
    }

    Route hops() const { return hops_of(to_path()); }

private:
    std::shared_ptr<const Cell> tail_;
};

enum class Mode { symmetric, asymmetric };

// Routes from `receiver` back to every earlier hop of `body`, nearest first.
// `in_link` is the quality of the link the body arrived on. The backward walk
// stops at the first repeated node. In asymmetric mode a reflected body keeps
// its old hops, so the walk splits it at the turn (x a c a y) and reads only the
// part after it; in symmetric mode such a turn means the body is malformed.
inline std::vector<Path> extract_routes(const TracerBody& body, NodeId receiver, LinkQuality in_link,
                                        Mode mode = Mode::symmetric) {
    std::vector<Path> out;
    Path cur{{receiver, std::nullopt}};
    std::set<NodeId> seen{receiver};
    std::optional<LinkQuality> next = in_link;
    NodeId prev2 = receiver;
    body.walk_back([&](const Hop& h) {
        if (cur.size() >= 2 && h.node == prev2 && mode == Mode::symmetric)
            throw Error("malformed body: reversal at node " + std::to_string(h.node));
        if (!seen.insert(h.node).second || !next) return false;
        prev2 = cur.back().node;
        cur.push_back({h.node, next});
        next = h.link;
        out.push_back(cur);
        return true;
    });
    return out;
}

// Throws when consecutive hops of the body (plus the final hop into receiver)
// are not linked in g.
inline void check_body(const Graph& g, const TracerBody& body, NodeId receiver) {
    Route r = body.hops();
    r.push_back(receiver);
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!g.has_link(r[i - 1], r[i]))
            throw Error("malformed body: hops " + std::to_string(r[i - 1]) + " and " +
                        std::to_string(r[i]) + " are not linked");
}

// ---- route map ----

struct RouteMapEntry {
    Path path;  // owner first, destination last
    Rem rem;
    TpMask tpmask;

    RouteMapEntry(Path p, std::size_t node_count)
        : path(std::move(p)), rem(path_rem(path)), tpmask(TpMask::of(hops_of(path), node_count)) {
        if (path.size() < 2) throw Error("a stored route needs at least two hops");
    }

    NodeId dst() const { return path.back().node; }
    NodeId gateway() const { return path[1].node; }
    Route hops() const { return hops_of(path); }

    void refresh() { rem = path_rem(path); }

    bool crosses(NodeId u, NodeId v) const {
        for (std::size_t i = 1; i < path.size(); ++i)
            if ((path[i - 1].node == u && path[i].node == v) || (path[i - 1].node == v && path[i].node == u))
                return true;
        return false;
    }
    bool visits(NodeId n) const {
        return std::any_of(path.begin(), path.end(), [&](const Hop& h) { return h.node == n; });
    }
};

struct MapConfig {
    std::size_t max_routes = 1;
    std::size_t stored_routes = 4;  // per destination, primaries included
    Metric metric = Metric::inverse_rtt;
    std::optional<double> penalty_k;  // disjoint-route penalty when set
};

enum class Offer { dropped, stored, interesting };

class NodeState {
public:
    NodeState() = default;
    NodeState(NodeId id, std::size_t node_count, MapConfig cfg)
        : id_(id), node_count_(node_count), cfg_(cfg) {
        if (cfg_.max_routes < 1) throw Error("max_routes must be at least 1");
        if (cfg_.stored_routes < cfg_.max_routes) throw Error("stored_routes must be >= max_routes");
    }

    NodeId id() const { return id_; }
    const MapConfig& config() const { return cfg_; }
    std::size_t node_count() const { return node_count_; }

    const std::map<NodeId, std::vector<RouteMapEntry>>& map() const { return map_; }

    const std::vector<RouteMapEntry>& routes(NodeId dst) const {
        static const std::vector<RouteMapEntry> none;
        auto it = map_.find(dst);
        return it == map_.end() ? none : it->second;
    }

    std::size_t primary_count(NodeId dst) const {
        const auto& v = routes(dst);
        std::size_t n = 0;
        while (n < v.size() && n < cfg_.max_routes && v[n].rem.reachable) ++n;
        return n;
    }

    std::vector<const RouteMapEntry*> primaries(NodeId dst) const {
        std::vector<const RouteMapEntry*> out;
        const auto& v = routes(dst);
        for (std::size_t i = 0; i < primary_count(dst); ++i) out.push_back(&v[i]);
        return out;
    }

    const RouteMapEntry* best(NodeId dst) const {
        const auto& v = routes(dst);
        return !v.empty() && v.front().rem.reachable ? &v.front() : nullptr;
    }

    std::vector<NodeId> destinations() const {
        std::vector<NodeId> out;
        for (const auto& [d, v] : map_)
            if (!v.empty()) out.push_back(d);
        return out;
    }

    std::size_t route_count() const {
        std::size_t n = 0;
        for (const auto& [d, v] : map_) n += v.size();
        return n;
    }

    bool better(const RouteMapEntry& a, const RouteMapEntry& b) const { return entry_less(a, b); }

    // Whether `cand` would displace the worst primary for its destination.
    bool is_interesting(const RouteMapEntry& cand) const {
        if (!cand.rem.reachable) return false;
        const auto& v = routes(cand.dst());
        std::size_t prim = primary_count(cand.dst());
        for (const auto& e : v)
            if (same_nodes(e.path, cand.path)) return false;
        if (prim < cfg_.max_routes) return true;
        const RouteMapEntry& worst = v[prim - 1];
        if (!cfg_.penalty_k) return rem_better(cand.rem, worst.rem, cfg_.metric);
        double eff = efficiency(cand.rem, cfg_.metric);
        double s = 0.0;
        Route ch = cand.hops();
        for (const auto& e : v)
            if (e.rem.reachable) s = std::max(s, similarity(ch, e.hops()));
        eff = apply_disjoint_penalty(eff, s, *cfg_.penalty_k);
        return eff > efficiency(worst.rem, cfg_.metric);
    }

    // Stores `path` (owner first). A known path with new link values is updated
    // in place; that counts as interesting when it is or becomes a primary.
    Offer offer(Path path) {
        if (path.empty() || path.front().node != id_) throw Error("route does not start at this node");
        RouteMapEntry cand(std::move(path), node_count_);
        auto& v = map_[cand.dst()];
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!same_nodes(v[i].path, cand.path)) continue;
            if (v[i].rem == cand.rem) {
                v[i].path = std::move(cand.path);
                return Offer::dropped;
            }
            NodeId d = cand.dst();
            bool was_primary = i < primary_count(d);
            Path key = cand.path;
            v[i] = std::move(cand);
            sort(v);
            bool now_primary = false;
            for (std::size_t j = 0; j < primary_count(d); ++j)
                if (same_nodes(v[j].path, key)) now_primary = true;
            return was_primary || now_primary ? Offer::interesting : Offer::stored;
        }
        bool interesting = is_interesting(cand);
        v.push_back(std::move(cand));
        sort(v);
        if (v.size() > cfg_.stored_routes) v.erase(v.begin() + static_cast<std::ptrdiff_t>(cfg_.stored_routes), v.end());
        return interesting ? Offer::interesting : Offer::stored;
    }

    // Sets the quality of link u-v on every stored path crossing it; empty
    // quality marks it broken. Returns the destinations touched.
    std::set<NodeId> apply_link(NodeId u, NodeId v, std::optional<LinkQuality> q) {
        std::set<NodeId> touched;
        for (auto& [d, list] : map_) {
            bool hit = false;
            for (auto& e : list)
                for (std::size_t i = 1; i < e.path.size(); ++i) {
                    NodeId a = e.path[i - 1].node, b = e.path[i].node;
                    if ((a == u && b == v) || (a == v && b == u)) {
                        e.path[i].link = q;
                        e.refresh();
                        hit = true;
                    }
                }
            if (hit) {
                sort(list);
                touched.insert(d);
            }
        }
        return touched;
    }

    // Paths through a dead node become unreachable.
    std::set<NodeId> apply_death(NodeId dead) {
        std::set<NodeId> touched;
        for (auto& [d, list] : map_) {
            bool hit = false;
            for (auto& e : list)
                for (std::size_t i = 1; i < e.path.size(); ++i)
                    if (e.path[i].node == dead || e.path[i - 1].node == dead) {
                        e.path[i].link.reset();
                        e.refresh();
                        hit = true;
                    }
            if (hit) {
                sort(list);
                touched.insert(d);
            }
        }
        return touched;
    }

    // Drops unreachable entries.
    void purge() {
        for (auto it = map_.begin(); it != map_.end();) {
            std::erase_if(it->second, [](const RouteMapEntry& e) { return !e.rem.reachable; });
            it = it->second.empty() ? map_.erase(it) : std::next(it);
        }
    }

    // Replaces the whole map; used when a joining node adopts merged maps.
    void insert_raw(RouteMapEntry e) {
        auto& v = map_[e.dst()];
        for (const auto& x : v)
            if (x.path == e.path) return;
        v.push_back(std::move(e));
        sort(v);
        if (v.size() > cfg_.stored_routes) v.erase(v.begin() + static_cast<std::ptrdiff_t>(cfg_.stored_routes), v.end());
    }

    std::set<std::uint64_t>& seen_floods() { return seen_floods_; }

private:
    bool entry_less(const RouteMapEntry& a, const RouteMapEntry& b) const {
        if (rem_better(a.rem, b.rem, cfg_.metric)) return true;
        if (rem_better(b.rem, a.rem, cfg_.metric)) return false;
        if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
        return std::lexicographical_compare(a.path.begin(), a.path.end(), b.path.begin(), b.path.end(),
                                            [](const Hop& x, const Hop& y) { return x.node < y.node; });
    }

    void sort(std::vector<RouteMapEntry>& v) const {
        std::stable_sort(v.begin(), v.end(),
                         [this](const RouteMapEntry& a, const RouteMapEntry& b) { return entry_less(a, b); });
    }

    NodeId id_ = 0;
    std::size_t node_count_ = 0;
    MapConfig cfg_;
    std::map<NodeId, std::vector<RouteMapEntry>> map_;
    std::set<std::uint64_t> seen_floods_;
};

}  // namespace qspn
