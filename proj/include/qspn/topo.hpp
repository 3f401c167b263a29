#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qspn {

using NodeId = std::uint32_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LinkQuality {
    double rtt = 1.0;  // round trip, ms
    double bw = 1.0;

    friend bool operator==(const LinkQuality&, const LinkQuality&) = default;
};

inline void check_quality(const LinkQuality& q) {
    if (!(q.rtt > 0.0) || !(q.bw > 0.0) || q.rtt == std::numeric_limits<double>::infinity() ||
        q.bw == std::numeric_limits<double>::infinity())
        throw Error("link quality must have finite rtt > 0 and bw > 0");
}

// Unordered node pair, stored with a < b.
struct LinkKey {
    NodeId a = 0;
    NodeId b = 0;

    LinkKey() = default;
    LinkKey(NodeId u, NodeId v) : a(std::min(u, v)), b(std::max(u, v)) {}

    friend auto operator<=>(const LinkKey&, const LinkKey&) = default;
};

class Graph {
public:
    Graph() = default;
    explicit Graph(std::size_t node_count) : alive_(node_count, true), adj_(node_count) {}

    std::size_t node_count() const { return alive_.size(); }
    std::size_t link_count() const { return links_.size(); }

    bool contains(NodeId n) const { return n < alive_.size(); }
    bool alive(NodeId n) const { return contains(n) && alive_[n]; }

    std::size_t alive_count() const {
        return static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), true));
    }

    void add_link(NodeId u, NodeId v, LinkQuality q = {}) {
        require_alive(u);
        require_alive(v);
        if (u == v) throw Error("self-loop on node " + std::to_string(u));
        check_quality(q);
        if (!links_.emplace(LinkKey(u, v), q).second)
            throw Error("duplicate link " + std::to_string(u) + "-" + std::to_string(v));
        insert_sorted(adj_[u], v);
        insert_sorted(adj_[v], u);
    }

    void remove_link(NodeId u, NodeId v) {
        if (links_.erase(LinkKey(u, v)) == 0)
            throw Error("no link " + std::to_string(u) + "-" + std::to_string(v));
        std::erase(adj_[u], v);
        std::erase(adj_[v], u);
    }

    void set_quality(NodeId u, NodeId v, LinkQuality q) {
        check_quality(q);
        auto it = links_.find(LinkKey(u, v));
        if (it == links_.end())
            throw Error("no link " + std::to_string(u) + "-" + std::to_string(v));
        it->second = q;
    }

    bool has_link(NodeId u, NodeId v) const { return links_.count(LinkKey(u, v)) != 0; }

    std::optional<LinkQuality> find_link(NodeId u, NodeId v) const {
        auto it = links_.find(LinkKey(u, v));
        if (it == links_.end()) return std::nullopt;
        return it->second;
    }

    LinkQuality quality(NodeId u, NodeId v) const {
        auto q = find_link(u, v);
        if (!q) throw Error("no link " + std::to_string(u) + "-" + std::to_string(v));
        return *q;
    }

    // Ascending node order.
    const std::vector<NodeId>& neighbours(NodeId n) const {
        if (!contains(n)) throw Error("unknown node " + std::to_string(n));
        return adj_[n];
    }

    std::size_t degree(NodeId n) const { return neighbours(n).size(); }

    const std::map<LinkKey, LinkQuality>& links() const { return links_; }

    NodeId add_node() {
        alive_.push_back(true);
        adj_.emplace_back();
        return static_cast<NodeId>(alive_.size() - 1);
    }

    // Drops every link of n and marks it dead. The id stays reserved.
    void kill_node(NodeId n) {
        require_alive(n);
        for (NodeId m : std::vector<NodeId>(adj_[n])) remove_link(n, m);
        alive_[n] = false;
    }

    void revive_node(NodeId n) {
        if (!contains(n)) throw Error("unknown node " + std::to_string(n));
        if (alive_[n]) throw Error("node " + std::to_string(n) + " is alive");
        alive_[n] = true;
    }

    // Only the highest id can be popped, and only once it has no links.
    void pop_node() {
        if (alive_.empty()) throw Error("empty graph");
        if (!adj_.back().empty()) throw Error("cannot pop a node that still has links");
        alive_.pop_back();
        adj_.pop_back();
    }

    bool connected() const {
        std::vector<NodeId> live;
        for (NodeId n = 0; n < node_count(); ++n)
            if (alive_[n]) live.push_back(n);
        if (live.empty()) return true;
        std::vector<bool> seen(node_count(), false);
        std::vector<NodeId> stack{live.front()};
        seen[live.front()] = true;
        std::size_t reached = 1;
        while (!stack.empty()) {
            NodeId n = stack.back();
            stack.pop_back();
            for (NodeId m : adj_[n])
                if (!seen[m]) {
                    seen[m] = true;
                    ++reached;
                    stack.push_back(m);
                }
        }
        return reached == live.size();
    }

    bool acyclic() const { return link_count() + components() == alive_count(); }

    std::size_t components() const {
        std::vector<bool> seen(node_count(), false);
        std::size_t count = 0;
        for (NodeId s = 0; s < node_count(); ++s) {
            if (!alive_[s] || seen[s]) continue;
            ++count;
            std::vector<NodeId> stack{s};
            seen[s] = true;
            while (!stack.empty()) {
                NodeId n = stack.back();
                stack.pop_back();
                for (NodeId m : adj_[n])
                    if (!seen[m]) {
                        seen[m] = true;
                        stack.push_back(m);
                    }
            }
        }
        return count;
    }

    friend bool operator==(const Graph& x, const Graph& y) {
        return x.alive_ == y.alive_ && x.links_ == y.links_;
    }

private:
    void require_alive(NodeId n) const {
        if (!alive(n)) throw Error("node " + std::to_string(n) + " does not exist or is dead");
    }

    static void insert_sorted(std::vector<NodeId>& v, NodeId x) {
        v.insert(std::lower_bound(v.begin(), v.end(), x), x);
    }

    std::vector<bool> alive_;
    std::vector<std::vector<NodeId>> adj_;
    std::map<LinkKey, LinkQuality> links_;
};

// ---- generators ----

// Uniform double in [0,1) from the top 53 bits of one mt19937_64 draw.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Graph gen_complete(std::size_t k, LinkQuality q = {}) {
    if (k == 0) throw Error("complete graph needs at least one node");
    Graph g(k);
    for (NodeId u = 0; u < k; ++u)
        for (NodeId v = u + 1; v < k; ++v) g.add_link(u, v, q);
    return g;
}

// Row-major ids: node (r, c) is r * cols + c.
inline Graph gen_mesh(std::size_t rows, std::size_t cols, LinkQuality q = {}) {
    if (rows == 0 || cols == 0) throw Error("mesh dimensions must be positive");
    Graph g(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            auto n = static_cast<NodeId>(r * cols + c);
            if (c + 1 < cols) g.add_link(n, n + 1, q);
            if (r + 1 < rows) g.add_link(n, static_cast<NodeId>(n + cols), q);
        }
    return g;
}

// G(n, p): pairs (u, v), u < v, visited in lexicographic order; one draw per
// pair, linked when uniform01 < p. Generator is std::mt19937_64 seeded with seed.
inline Graph gen_random(std::size_t n, double p, std::uint64_t seed, LinkQuality q = {}) {
    if (n == 0) throw Error("random graph needs at least one node");
    if (!(p >= 0.0 && p <= 1.0)) throw Error("link probability must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    Graph g(n);
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v)
            if (uniform01(rng) < p) g.add_link(u, v, q);
    return g;
}

// Redraws until the graph is connected (seed, seed+1, ...).
inline Graph gen_random_connected(std::size_t n, double p, std::uint64_t seed, LinkQuality q = {}) {
    for (std::uint64_t s = seed;; ++s) {
        Graph g = gen_random(n, p, s, q);
        if (g.connected()) return g;
        if (s - seed > 100000) throw Error("no connected sample found");
    }
}

// Integer rtt drawn uniformly from [lo, hi] for every link, in link order.
inline void randomize_rtt(Graph& g, int lo, int hi, std::uint64_t seed) {
    if (lo < 1 || hi < lo) throw Error("rtt range must satisfy 1 <= lo <= hi");
    std::mt19937_64 rng(seed);
    std::vector<LinkKey> keys;
    for (const auto& [k, q] : g.links()) keys.push_back(k);
    for (const auto& k : keys) {
        auto span = static_cast<double>(hi - lo + 1);
        double rtt = lo + std::min(static_cast<double>(hi - lo), std::floor(uniform01(rng) * span));
        g.set_quality(k.a, k.b, {rtt, g.quality(k.a, k.b).bw});
    }
}

// ---- mutations ----

enum class ChangeKind { worsen_link, improve_link, break_link, new_link, kill_node, add_node };

inline const char* to_string(ChangeKind k) {
    switch (k) {
        case ChangeKind::worsen_link: return "worsen_link";
        case ChangeKind::improve_link: return "improve_link";
        case ChangeKind::break_link: return "break_link";
        case ChangeKind::new_link: return "new_link";
        case ChangeKind::kill_node: return "kill_node";
        case ChangeKind::add_node: return "add_node";
    }
    return "?";
}

inline ChangeKind change_kind_from_string(const std::string& s) {
    for (auto k : {ChangeKind::worsen_link, ChangeKind::improve_link, ChangeKind::break_link,
                   ChangeKind::new_link, ChangeKind::kill_node, ChangeKind::add_node})
        if (s == to_string(k)) return k;
    throw Error("unknown change kind '" + s + "'");
}

struct Neighbour {
    NodeId node = 0;
    LinkQuality quality;

    friend bool operator==(const Neighbour&, const Neighbour&) = default;
};

struct WorsenLink { NodeId u, v; LinkQuality quality; };
struct ImproveLink { NodeId u, v; LinkQuality quality; };
struct BreakLink { NodeId u, v; };
struct NewLink { NodeId u, v; LinkQuality quality; };
struct KillNode { NodeId node; };
struct AddNode { std::vector<Neighbour> links; };

using Change = std::variant<WorsenLink, ImproveLink, BreakLink, NewLink, KillNode, AddNode>;

// For link kinds, before/after are t0,b0 and t1,b1; nullopt stands for "no link"
// (infinite rtt on break, the zero state on new). For node kinds `node` is the
// dead or joined node and `node_links` its links.
struct ChangeRecord {
    ChangeKind kind = ChangeKind::worsen_link;
    NodeId u = 0;
    NodeId v = 0;
    std::optional<LinkQuality> before;
    std::optional<LinkQuality> after;
    NodeId node = 0;
    std::vector<Neighbour> node_links;

    bool is_link_change() const {
        return kind != ChangeKind::kill_node && kind != ChangeKind::add_node;
    }
    // The change can only make routes better.
    bool is_improvement() const {
        return kind == ChangeKind::improve_link || kind == ChangeKind::new_link ||
               kind == ChangeKind::add_node;
    }
};

struct Mutation {
    Graph graph;
    ChangeRecord record;
};

namespace detail {
inline bool strictly_worse(const LinkQuality& from, const LinkQuality& to) {
    return to.rtt >= from.rtt && to.bw <= from.bw && !(to == from);
}
}  // namespace detail

inline Mutation mutate(const Graph& g, const Change& change) {
    Mutation m{g, {}};
    ChangeRecord& rec = m.record;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, WorsenLink> || std::is_same_v<T, ImproveLink>) {
                constexpr bool worsen = std::is_same_v<T, WorsenLink>;
                LinkQuality old = g.quality(c.u, c.v);
                check_quality(c.quality);
                bool ok = worsen ? detail::strictly_worse(old, c.quality)
                                 : detail::strictly_worse(c.quality, old);
                if (!ok)
                    throw Error(std::string(worsen ? "worsen" : "improve") +
                                " change does not " + (worsen ? "worsen" : "improve") + " the link");
                m.graph.set_quality(c.u, c.v, c.quality);
                rec.kind = worsen ? ChangeKind::worsen_link : ChangeKind::improve_link;
                rec.u = c.u;
                rec.v = c.v;
                rec.before = old;
                rec.after = c.quality;
            } else if constexpr (std::is_same_v<T, BreakLink>) {
                rec.before = g.quality(c.u, c.v);
                m.graph.remove_link(c.u, c.v);
                rec.kind = ChangeKind::break_link;
                rec.u = c.u;
                rec.v = c.v;
            } else if constexpr (std::is_same_v<T, NewLink>) {
                if (g.has_link(c.u, c.v))
                    throw Error("link " + std::to_string(c.u) + "-" + std::to_string(c.v) +
                                " already exists");
                m.graph.add_link(c.u, c.v, c.quality);
                rec.kind = ChangeKind::new_link;
                rec.u = c.u;
                rec.v = c.v;
                rec.after = c.quality;
            } else if constexpr (std::is_same_v<T, KillNode>) {
                if (!g.alive(c.node)) throw Error("node " + std::to_string(c.node) + " is not alive");
                for (NodeId n : g.neighbours(c.node)) rec.node_links.push_back({n, g.quality(c.node, n)});
                m.graph.kill_node(c.node);
                rec.kind = ChangeKind::kill_node;
                rec.node = c.node;
            } else {
                if (c.links.empty()) throw Error("a joining node needs at least one live neighbour");
                NodeId n = m.graph.add_node();
                for (const auto& l : c.links) m.graph.add_link(n, l.node, l.quality);
                rec.kind = ChangeKind::add_node;
                rec.node = n;
                rec.node_links = c.links;
            }
        },
        change);
    return m;
}

inline Graph invert(const Graph& g, const ChangeRecord& rec) {
    Graph out = g;
    switch (rec.kind) {
        case ChangeKind::worsen_link:
        case ChangeKind::improve_link: out.set_quality(rec.u, rec.v, *rec.before); break;
        case ChangeKind::break_link: out.add_link(rec.u, rec.v, *rec.before); break;
        case ChangeKind::new_link: out.remove_link(rec.u, rec.v); break;
        case ChangeKind::kill_node:
            out.revive_node(rec.node);
            for (const auto& l : rec.node_links) out.add_link(rec.node, l.node, l.quality);
            break;
        case ChangeKind::add_node:
            if (rec.node + 1 != out.node_count()) throw Error("joined node is no longer the last id");
            for (const auto& l : rec.node_links) out.remove_link(rec.node, l.node);
            out.pop_node();
            break;
    }
    return out;
}

// ---- text format ----
//
//   nodes N
//   u v rtt bw
//
// '#' starts a comment; blank lines are ignored.

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline std::string format_number(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline Graph read_graph(std::istream& in) {
    std::optional<Graph> g;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream line(raw);
        std::vector<std::string> tok;
        for (std::string t; line >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (!g) {
            if (tok.size() != 2 || tok[0] != "nodes") throw ParseError(lineno, "expected 'nodes N'");
            unsigned long long n = 0;
            auto [p, ec] = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), n);
            if (ec != std::errc() || p != tok[1].data() + tok[1].size())
                throw ParseError(lineno, "bad node count '" + tok[1] + "'");
            g.emplace(static_cast<std::size_t>(n));
            continue;
        }
        if (tok.size() != 4) throw ParseError(lineno, "expected 'u v rtt bw'");
        unsigned long u = 0, v = 0;
        double rtt = 0, bw = 0;
        auto num = [&](const std::string& s, auto& out) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            if (ec != std::errc() || p != s.data() + s.size())
                throw ParseError(lineno, "bad number '" + s + "'");
        };
        num(tok[0], u);
        num(tok[1], v);
        num(tok[2], rtt);
        num(tok[3], bw);
        try {
            g->add_link(static_cast<NodeId>(u), static_cast<NodeId>(v), {rtt, bw});
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(lineno, e.what());
        }
    }
    if (!g) throw ParseError(lineno, "missing 'nodes N' header");
    return std::move(*g);
}

inline Graph parse_graph(const std::string& text) {
    std::istringstream in(text);
    return read_graph(in);
}

// Dead nodes are not representable in the format and are written as isolated ids.
inline void write_graph(std::ostream& out, const Graph& g) {
    out << "nodes " << g.node_count() << '\n';
    for (const auto& [k, q] : g.links())
        out << k.a << ' ' << k.b << ' ' << format_number(q.rtt) << ' ' << format_number(q.bw) << '\n';
}

inline std::string to_text(const Graph& g) {
    std::ostringstream out;
    write_graph(out, g);
    return out.str();
}

}  // namespace qspn
