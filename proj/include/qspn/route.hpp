#pragma once

#include <qspn/topo.hpp>

#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace qspn {

using Route = std::vector<NodeId>;

inline std::string format_route(const Route& r, const char* sep = "->") {
    std::string out;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(r[i]);
    }
    return out;
}

inline Route parse_route(const std::string& s) {
    Route r;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t next = s.find("->", pos);
        std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        unsigned long v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
            throw Error("bad route '" + s + "'");
        r.push_back(static_cast<NodeId>(v));
        if (next == std::string::npos) break;
        pos = next + 2;
    }
    return r;
}

// x a c a y: the route turns back over the link it just used.
inline bool has_reversal(const Route& r) {
    for (std::size_t i = 0; i + 2 < r.size(); ++i)
        if (r[i] == r[i + 2]) return true;
    return false;
}

inline bool is_simple(const Route& r) {
    std::set<NodeId> seen;
    for (NodeId n : r)
        if (!seen.insert(n).second) return false;
    return true;
}

// ---- REM ----

struct Rem {
    double trtt = 0.0;
    double bw = std::numeric_limits<double>::infinity();
    bool reachable = true;

    static Rem unreachable() {
        return {std::numeric_limits<double>::infinity(), 0.0, false};
    }

    Rem extend(const LinkQuality& q) const {
        if (!reachable) return *this;
        return {trtt + q.rtt, std::min(bw, q.bw), true};
    }

    Rem concat(const Rem& other) const {
        if (!reachable || !other.reachable) return unreachable();
        return {trtt + other.trtt, std::min(bw, other.bw), true};
    }

    friend bool operator==(const Rem&, const Rem&) = default;
};

// A route crossing link l moves from t0(l) to t1(l): t1(r) = t0(r) - t0(l) + t1(l),
// b1(r) = min(b0(r), b1(l)). The bw rule only holds when the link got worse.
inline Rem apply_link_change(const Rem& r, const LinkQuality& before, const LinkQuality& after) {
    if (!r.reachable) return r;
    return {r.trtt - before.rtt + after.rtt, std::min(r.bw, after.bw), true};
}

enum class Metric { inverse_rtt, bandwidth };

inline double efficiency(const Rem& r, Metric m = Metric::inverse_rtt) {
    if (!r.reachable) return 0.0;
    if (m == Metric::bandwidth) return r.bw;
    return r.trtt > 0.0 ? 1.0 / r.trtt : std::numeric_limits<double>::infinity();
}

// Strict "a is better than b". Unreachable is worse than anything reachable.
inline bool rem_better(const Rem& a, const Rem& b, Metric m = Metric::inverse_rtt) {
    if (a.reachable != b.reachable) return a.reachable;
    if (!a.reachable) return false;
    if (m == Metric::bandwidth) {
        if (a.bw != b.bw) return a.bw > b.bw;
        return a.trtt < b.trtt;
    }
    if (a.trtt != b.trtt) return a.trtt < b.trtt;
    return a.bw > b.bw;
}

inline Rem route_rem(const Route& r, const Graph& g) {
    if (r.empty()) throw Error("empty route");
    Rem rem;
    for (std::size_t i = 1; i < r.size(); ++i) {
        auto q = g.find_link(r[i - 1], r[i]);
        if (!q) throw Error("no link between hops " + std::to_string(r[i - 1]) + " and " + std::to_string(r[i]));
        rem = rem.extend(*q);
    }
    return rem;
}

// ---- tpmask ----

class TpMask {
public:
    static constexpr std::size_t min_width = 256;

    TpMask() : TpMask(min_width) {}
    explicit TpMask(std::size_t node_count)
        : width_(std::max(min_width, node_count)), words_((width_ + 63) / 64, 0) {}

    static TpMask of(const Route& r, std::size_t node_count) {
        TpMask m(node_count);
        for (NodeId n : r) m.set(n);
        return m;
    }

    std::size_t width() const { return width_; }

    void set(NodeId n) {
        if (n >= width_) throw Error("node id beyond tpmask width");
        words_[n / 64] |= std::uint64_t{1} << (n % 64);
    }
    bool test(NodeId n) const { return n < width_ && (words_[n / 64] >> (n % 64)) & 1u; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    friend bool operator==(const TpMask&, const TpMask&) = default;

private:
    std::size_t width_;
    std::vector<std::uint64_t> words_;
};

// ---- similarity and the disjoint-route penalty ----

inline double similarity(const Route& r, const Route& s) {
    if (r.empty() || s.empty() || r.front() != s.front() || r.back() != s.back())
        throw Error("similarity needs routes with the same endpoints");
    auto inner = [](const Route& x) {
        return x.size() > 2 ? std::set<NodeId>(x.begin() + 1, x.end() - 1) : std::set<NodeId>{};
    };
    std::set<NodeId> ri = inner(r), si = inner(s);
    std::size_t shared = 0;
    for (NodeId n : ri) shared += si.count(n);
    std::size_t denom = std::max(ri.size(), si.size());
    return denom ? static_cast<double>(shared) / static_cast<double>(denom) : 0.0;
}

inline constexpr double penalty_threshold = 0.5;

inline double apply_disjoint_penalty(double efficiency, double s, double k = 2.0) {
    if (!(k > 0.0)) throw Error("penalty coefficient must be positive");
    if (s < 0.0 || s > 1.0) throw Error("similarity must lie in [0, 1]");
    if (s <= penalty_threshold) return efficiency;
    return efficiency * (1.0 - s) / k;
}

// ---- classes and cycle counting ----

inline std::size_t route_class(std::size_t position, std::size_t class_size) {
    if (class_size == 0) throw Error("class size must be at least 1");
    if (position == 0) throw Error("positions are 1-based");
    return (position + class_size - 1) / class_size;
}

// Input must already be sorted best-first.
inline std::vector<std::size_t> classify_routes(std::size_t route_count, std::size_t class_size) {
    std::vector<std::size_t> out;
    out.reserve(route_count);
    for (std::size_t p = 1; p <= route_count; ++p) out.push_back(route_class(p, class_size));
    return out;
}

// Simple cycles of K_n: sum over k = 3..n of C(n,k) (k-1)! / 2. Throws on overflow.
inline std::uint64_t subcycle_count(unsigned n) {
    std::uint64_t total = 0;
    for (unsigned k = 3; k <= n; ++k) {
        std::uint64_t binom = 1;
        for (unsigned i = 1; i <= k; ++i) {
            // binom * (n - k + i) is always divisible by i here
            if (__builtin_mul_overflow(binom, std::uint64_t{n - k + i}, &binom))
                throw Error("subcycle count overflows 64 bits");
            binom /= i;
        }
        std::uint64_t half_fact = 1;  // (k-1)!/2
        for (unsigned i = 3; i < k; ++i)
            if (__builtin_mul_overflow(half_fact, std::uint64_t{i}, &half_fact))
                throw Error("subcycle count overflows 64 bits");
        std::uint64_t term = 0;
        if (__builtin_mul_overflow(binom, half_fact, &term) || __builtin_add_overflow(total, term, &total))
            throw Error("subcycle count overflows 64 bits");
    }
    return total;
}

// ---- shortest path oracle ----

// Lexicographic Dijkstra on (trtt ascending, bw descending). Result[i] is empty
// when i is dead or unreachable.
inline std::vector<std::optional<Rem>> shortest_rems(const Graph& g, NodeId src) {
    std::vector<std::optional<Rem>> best(g.node_count());
    if (!g.alive(src)) throw Error("oracle source is not alive");
    struct Item {
        Rem rem;
        NodeId node;
    };
    auto worse = [](const Item& a, const Item& b) { return rem_better(b.rem, a.rem); };
    std::priority_queue<Item, std::vector<Item>, decltype(worse)> pq(worse);
    std::vector<bool> done(g.node_count(), false);
    best[src] = Rem{};
    pq.push({Rem{}, src});
    while (!pq.empty()) {
        Item it = pq.top();
        pq.pop();
        if (done[it.node]) continue;
        done[it.node] = true;
        for (NodeId m : g.neighbours(it.node)) {
            Rem cand = it.rem.extend(g.quality(it.node, m));
            if (!best[m] || rem_better(cand, *best[m])) {
                best[m] = cand;
                pq.push({cand, m});
            }
        }
    }
    return best;
}

inline std::optional<Rem> shortest_route_oracle(const Graph& g, NodeId src, NodeId dst) {
    if (!g.alive(dst)) throw Error("oracle destination is not alive");
    return shortest_rems(g, src)[dst];
}

}  // namespace qspn
