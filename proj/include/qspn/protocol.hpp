#pragma once

#include <qspn/packets.hpp>

#include <algorithm>
#include <optional>
#include <set>

namespace qspn {

// Arrival context shared by all handlers: the sender and the quality the link
// had when the packet was sent.
struct Arrival {
    NodeId from = 0;
    LinkQuality link;
};

inline bool absorb(NodeState& st, const std::vector<Path>& routes) {
    bool interesting = false;
    for (const auto& p : routes)
        if (st.offer(p) == Offer::interesting) interesting = true;
    return interesting;
}

inline Packet start_packet(PacketKind kind, NodeId starter, FloodId flood = {}) {
    Packet p;
    p.kind = kind;
    p.body = TracerBody().append({starter, std::nullopt});
    p.flood = flood;
    return p;
}

// A TP passes once through each node: later copies of a flood only feed the map.
inline Reaction handle_plain_tp(NodeState& st, const Graph& g, const Packet& pkt, Arrival in,
                                Mode mode = Mode::symmetric) {
    Reaction r;
    auto routes = extract_routes(pkt.body, st.id(), in.link, mode);
    r.extracted = routes.size();
    r.interesting = absorb(st, routes);
    if (!st.seen_floods().insert(pkt.flood.key()).second) return r;
    Packet out = pkt;
    out.body = pkt.body.append({st.id(), in.link});
    send_to_all_except(g, st.id(), in.from, out, r);
    return r;
}

// ATP: dropped by any node already in the body, never reflected.
// `branch_end` is set when every neighbour is already in the extended body,
// i.e. the packet traced a maximal branch.
inline Reaction handle_atp(NodeState& st, const Graph& g, const Packet& pkt, Arrival in,
                           std::optional<Route>* branch_end = nullptr) {
    Reaction r;
    if (pkt.body.contains(st.id())) return r;
    auto routes = extract_routes(pkt.body, st.id(), in.link);
    r.extracted = routes.size();
    r.interesting = absorb(st, routes);
    Packet out = pkt;
    out.body = pkt.body.append({st.id(), in.link});
    bool dead_end = true;
    for (NodeId n : g.neighbours(st.id()))
        if (!out.body.contains(n)) dead_end = false;
    if (dead_end && branch_end) *branch_end = out.body.hops();
    send_to_all_except(g, st.id(), in.from, out, r);
    return r;
}

// CTP. A node with a single link reflects: symmetric mode sends back a fresh
// body holding only itself, asymmetric mode keeps the whole body. With the
// interest rule on, a packet that taught nothing new is dropped, at a segment
// end too; otherwise two leaves joined by one link bounce it forever.
inline Reaction handle_ctp(NodeState& st, const Graph& g, const Packet& pkt, Arrival in, bool q2,
                           Mode mode = Mode::symmetric) {
    Reaction r;
    auto routes = extract_routes(pkt.body, st.id(), in.link, mode);
    r.extracted = routes.size();
    r.interesting = absorb(st, routes);
    if (q2 && !r.interesting) return r;
    if (g.degree(st.id()) == 1) {
        Packet back = pkt;
        back.body = mode == Mode::symmetric ? TracerBody().append({st.id(), std::nullopt})
                                            : pkt.body.append({st.id(), in.link});
        r.sends.push_back({in.from, back});
        r.distinct = 1;
        return r;
    }
    Packet out = pkt;
    out.body = pkt.body.append({st.id(), in.link});
    send_to_all_except(g, st.id(), in.from, out, r);
    return r;
}

}  // namespace qspn
