#pragma once

#include <qspn/protocol.hpp>

#include <map>
#include <optional>
#include <set>

namespace qspn {

// Link flags of one node for one qclose flood. Floods from different starters
// never share flags.
struct V1LinkState {
    std::set<NodeId> closed;
    std::set<NodeId> opened;
    std::optional<NodeId> last_qclose_link;
    TracerBody last_qclose_body;  // already extended with this node
    bool is_starter = false;
    bool extreme = false;
};

class V1State {
public:
    V1LinkState& flood(NodeId starter) { return floods_[starter]; }
    const std::map<NodeId, V1LinkState>& floods() const { return floods_; }

private:
    std::map<NodeId, V1LinkState> floods_;
};

inline Packet qclose_start(NodeId starter) {
    return start_packet(PacketKind::qclose, starter, {starter, 0});
}

// Empty body back to the last qclose sender, the last qclose body to the rest.
inline Reaction emit_qopen(const NodeState& st, const Graph& g, const V1LinkState& ls, NodeId starter) {
    Reaction r;
    Packet empty = start_packet(PacketKind::qopen, st.id(), {starter, 0});
    Packet full;
    full.kind = PacketKind::qopen;
    full.body = ls.last_qclose_body;
    full.flood = {starter, 0};
    bool sent_full = false;
    for (NodeId n : g.neighbours(st.id())) {
        if (ls.last_qclose_link && n == *ls.last_qclose_link) {
            r.sends.push_back({n, empty});
        } else {
            r.sends.push_back({n, full});
            sent_full = true;
        }
    }
    r.distinct = (ls.last_qclose_link ? 1 : 0) + (sent_full ? 1 : 0);
    return r;
}

inline Reaction handle_qclose(NodeState& st, V1State& v1, const Graph& g, const Packet& pkt, Arrival in) {
    Reaction r;
    auto routes = extract_routes(pkt.body, st.id(), in.link);
    r.extracted = routes.size();
    r.interesting = absorb(st, routes);
    V1LinkState& ls = v1.flood(pkt.flood.starter);
    ls.closed.insert(in.from);
    ls.last_qclose_link = in.from;
    Packet out = pkt;
    out.body = pkt.body.append({st.id(), in.link});
    ls.last_qclose_body = out.body;
    bool forwarded = false;
    for (NodeId n : g.neighbours(st.id()))
        if (!ls.closed.count(n)) {
            r.sends.push_back({n, out});
            forwarded = true;
        }
    if (forwarded) {
        r.distinct = 1;
        return r;
    }
    if (ls.is_starter || ls.extreme) return r;
    ls.extreme = true;
    Reaction open = emit_qopen(st, g, ls, pkt.flood.starter);
    open.extracted = r.extracted;
    open.interesting = r.interesting;
    return open;
}

inline Reaction handle_qopen(NodeState& st, V1State& v1, const Graph& g, const Packet& pkt, Arrival in) {
    Reaction r;
    auto routes = extract_routes(pkt.body, st.id(), in.link);
    r.extracted = routes.size();
    r.interesting = absorb(st, routes);
    V1LinkState& ls = v1.flood(pkt.flood.starter);
    ls.opened.insert(in.from);
    if (ls.opened.size() >= g.degree(st.id())) return r;
    Packet out = pkt;
    out.body = pkt.body.append({st.id(), in.link});
    for (NodeId n : g.neighbours(st.id()))
        if (!ls.opened.count(n)) r.sends.push_back({n, out});
    if (!r.sends.empty()) r.distinct = 1;
    return r;
}

}  // namespace qspn
