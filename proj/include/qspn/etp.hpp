#pragma once

#include <qspn/protocol.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

namespace qspn {

struct EtpNodeState {
    std::set<std::uint64_t> applied;     // change ids already applied to the map
    std::set<std::uint64_t> death_seen;  // death notices already flooded
    // Newest change known per link, and known deaths. Carried by every ETP so
    // nodes that missed a flood catch up on the next one they see.
    std::map<LinkKey, ChangeInfo> latest;
    std::map<NodeId, ChangeInfo> deaths;
};

namespace detail {

using PrimarySnapshot = std::map<NodeId, std::vector<std::pair<Route, Rem>>>;

inline PrimarySnapshot snapshot(const NodeState& st) {
    PrimarySnapshot s;
    for (NodeId d : st.destinations()) {
        auto& v = s[d];
        for (const auto* e : st.primaries(d)) v.emplace_back(e->hops(), e->rem);
    }
    return s;
}

inline std::vector<std::pair<Route, Rem>> snap_of(const PrimarySnapshot& s, NodeId d) {
    auto it = s.find(d);
    return it == s.end() ? std::vector<std::pair<Route, Rem>>{} : it->second;
}

inline std::vector<ChangeInfo> known_changes(const EtpNodeState& es) {
    std::vector<ChangeInfo> out;
    for (const auto& [k, c] : es.latest) out.push_back(c);
    for (const auto& [n, c] : es.deaths) out.push_back(c);
    return out;
}

inline Packet make_etp(std::vector<Path> routes, TracerBody traversed, const ChangeInfo& ch, bool flag,
                       const EtpNodeState* es = nullptr) {
    Packet p;
    p.kind = PacketKind::extended;
    p.body = std::move(traversed);
    auto body = std::make_shared<EtpBody>();
    body->routes = std::move(routes);
    body->change = ch;
    body->flag_of_interest = flag;
    if (es) body->known = known_changes(*es);
    p.etp = std::move(body);
    return p;
}

inline TracerBody single(NodeId n) { return TracerBody().append({n, std::nullopt}); }

}  // namespace detail

// Brings the map in line with a change, once per change id. Stored paths over a
// changed link take its new quality; broken links and dead nodes make them
// unreachable.
inline bool apply_change_info(NodeState& st, EtpNodeState& es, const ChangeInfo& ch) {
    if (!es.applied.insert(ch.id).second) return false;
    const ChangeRecord& rec = ch.record;
    if (rec.kind == ChangeKind::kill_node) {
        es.deaths.emplace(rec.node, ch);
    } else if (rec.is_link_change()) {
        if (es.deaths.count(rec.u) || es.deaths.count(rec.v)) return false;  // older news about a dead node
        LinkKey k(rec.u, rec.v);
        auto it = es.latest.find(k);
        if (it != es.latest.end() && it->second.id > ch.id) return false;  // already newer
        es.latest[k] = ch;
    }
    switch (rec.kind) {
        case ChangeKind::worsen_link:
        case ChangeKind::improve_link:
        case ChangeKind::new_link: st.apply_link(rec.u, rec.v, rec.after); break;
        case ChangeKind::break_link: st.apply_link(rec.u, rec.v, std::nullopt); break;
        case ChangeKind::kill_node: st.apply_death(rec.node); break;
        case ChangeKind::add_node: break;
    }
    return true;
}

// Applies whatever the sender knew and we did not, oldest first.
inline void catch_up(NodeState& st, EtpNodeState& es, const std::vector<ChangeInfo>& known) {
    std::vector<const ChangeInfo*> todo;
    for (const auto& c : known)
        if (!es.applied.count(c.id)) todo.push_back(&c);
    std::sort(todo.begin(), todo.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (const auto* c : todo) apply_change_info(st, es, *c);
}

// Received paths may predate changes we already know of; bring their hops up
// to date before they reach the map.
inline void freshen(Path& p, const EtpNodeState& es) {
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (es.deaths.count(p[i - 1].node) || es.deaths.count(p[i].node)) {
            p[i].link.reset();
            continue;
        }
        auto it = es.latest.find(LinkKey(p[i - 1].node, p[i].node));
        if (it == es.latest.end()) continue;
        const ChangeRecord& rec = it->second.record;
        p[i].link = rec.kind == ChangeKind::break_link ? std::nullopt : rec.after;
    }
}

// Primary routes affected by a change: those over the link, or through the dead node.
inline bool affected_by(const RouteMapEntry& e, const ChangeRecord& rec) {
    if (rec.kind == ChangeKind::kill_node) return e.visits(rec.node);
    return e.crosses(rec.u, rec.v);
}

// Endpoint B of a worsened or broken link to A, or a neighbour B of a dead node
// A. Q is the set of primaries through l (direct B->A route included) taken
// before the update; R holds Q after the update plus the new primaries for
// every destination of Q. Nothing is sent when Q is empty.
inline Reaction on_link_worsened(NodeState& st, EtpNodeState& es, const Graph& g, NodeId other,
                                 const ChangeInfo& ch, std::vector<Path>* q_out = nullptr) {
    Reaction r;
    const ChangeRecord& rec = ch.record;
    std::vector<Route> q;
    std::set<NodeId> q_dsts;
    for (NodeId d : st.destinations())
        for (const auto* e : st.primaries(d))
            if (affected_by(*e, rec)) {
                q.push_back(e->hops());
                q_dsts.insert(d);
            }
    apply_change_info(st, es, ch);
    if (q.empty()) return r;

    std::vector<Path> routes;
    auto has = [&](const Path& p) {
        for (const auto& x : routes)
            if (same_nodes(x, p)) return true;
        return false;
    };
    for (const auto& hops : q)
        for (const auto& e : st.routes(hops.back()))
            if (e.hops() == hops && !has(e.path)) routes.push_back(e.path);
    if (q_out) *q_out = routes;
    for (NodeId d : q_dsts)
        for (const auto* e : st.primaries(d))
            if (!has(e->path)) routes.push_back(e->path);

    TracerBody trav;
    if (rec.kind == ChangeKind::kill_node) {
        trav = detail::single(st.id());
    } else {
        trav = detail::single(other).append({st.id(), rec.after});
    }
    Packet p = detail::make_etp(std::move(routes), trav, ch, true, &es);
    send_to_all_except(g, st.id(), other, p, r);
    return r;
}

inline Reaction on_node_death(NodeState& st, EtpNodeState& es, const Graph& g, NodeId dead,
                              const ChangeInfo& ch) {
    return on_link_worsened(st, es, g, dead, ch);
}

// Endpoint A of an improved or new link to B: every primary whose gateway is
// not B goes to B only, even when that leaves R empty. A's own map is left
// alone here and catches up when B's ETP arrives.
inline Reaction on_link_improved(const NodeState& st, const EtpNodeState& es, NodeId other,
                                 const ChangeInfo& ch) {
    Reaction r;
    std::vector<Path> routes;
    for (NodeId d : st.destinations())
        for (const auto* e : st.primaries(d))
            if (e->gateway() != other) routes.push_back(e->path);
    r.sends.push_back({other, detail::make_etp(std::move(routes), detail::single(st.id()), ch, true, &es)});
    r.distinct = 1;
    return r;
}

// S = primaries for the destinations of R and for the traversed nodes, minus
// those going back through the sender.
inline Packet build_s_reply(const NodeState& st, const EtpNodeState& es, const EtpBody& etp,
                            const TracerBody& traversed, NodeId from) {
    std::set<NodeId> dsts;
    for (const auto& p : etp.routes) dsts.insert(p.back().node);
    traversed.walk_back([&](const Hop& h) {
        dsts.insert(h.node);
        return true;
    });
    std::vector<Path> s;
    for (NodeId d : dsts)
        for (const auto* e : st.primaries(d))
            if (e->gateway() != from) s.push_back(e->path);
    return detail::make_etp(std::move(s), detail::single(st.id()), etp.change, false, &es);
}

inline Reaction on_etp_receive(NodeState& st, EtpNodeState& es, const Graph& g, const Packet& pkt, Arrival in) {
    Reaction r;
    if (!pkt.etp) throw Error("malformed ETP: no map portion");
    const EtpBody& etp = *pkt.etp;
    if (pkt.body.contains(st.id())) return r;

    auto before = detail::snapshot(st);
    catch_up(st, es, etp.known);
    apply_change_info(st, es, etp.change);

    auto tp_part = extract_routes(pkt.body, st.id(), in.link);
    r.extracted = tp_part.size();
    for (auto& p : tp_part) {
        freshen(p, es);
        st.offer(std::move(p));
    }
    for (const auto& rec : etp.routes) {
        if (rec.empty()) throw Error("malformed ETP: empty route record");
        Path eff{{st.id(), std::nullopt}, {rec.front().node, in.link}};
        eff.insert(eff.end(), rec.begin() + 1, rec.end());
        if (!is_simple(hops_of(eff))) continue;
        freshen(eff, es);
        st.offer(std::move(eff));
    }

    auto after = detail::snapshot(st);
    std::vector<NodeId> changed;
    std::set<NodeId> all;
    for (const auto& [d, v] : before) all.insert(d);
    for (const auto& [d, v] : after) all.insert(d);
    for (NodeId d : all)
        if (detail::snap_of(before, d) != detail::snap_of(after, d)) changed.push_back(d);
    r.interesting = !changed.empty();

    if (!changed.empty()) {
        std::vector<Path> out;
        for (NodeId d : changed) {
            auto prim = st.primaries(d);
            for (const auto* e : prim) out.push_back(e->path);
            // Lost destination: the dead route still tells the others to answer for it.
            if (prim.empty() && !st.routes(d).empty()) out.push_back(st.routes(d).front().path);
        }
        Packet fwd = detail::make_etp(std::move(out), pkt.body.append({st.id(), in.link}), etp.change,
                                      etp.flag_of_interest, &es);
        send_to_all_except(g, st.id(), in.from, fwd, r);

        // Ask the sender again for anything that got worse here.
        std::vector<Path> req;
        bool worse = false;
        for (NodeId d : changed) {
            auto b = detail::snap_of(before, d), a = detail::snap_of(after, d);
            bool got_worse = a.empty() || b.empty() || rem_better(b.front().second, a.front().second);
            if (!got_worse) continue;
            worse = true;
            const auto& list = st.routes(d);
            if (list.empty()) continue;
            auto prim = st.primaries(d);
            req.push_back(prim.empty() ? list.front().path : prim.front()->path);
        }
        if (worse) {
            r.sends.push_back({in.from, detail::make_etp(std::move(req), detail::single(st.id()), etp.change, true, &es)});
            ++r.distinct;
        }
    }

    if (etp.flag_of_interest) {
        Packet s = build_s_reply(st, es, etp, pkt.body, in.from);
        if (!s.etp->routes.empty() || changed.empty()) {
            r.sends.push_back({in.from, s});
            ++r.distinct;
        }
        if (changed.empty() && etp.change.record.kind == ChangeKind::kill_node &&
            es.death_seen.insert(etp.change.id).second) {
            Packet notice;
            notice.kind = PacketKind::death;
            notice.body = detail::single(st.id());
            notice.etp = std::make_shared<EtpBody>(EtpBody{{}, etp.change, false, detail::known_changes(es)});
            send_to_all_except(g, st.id(), in.from, notice, r);
        }
    }
    return r;
}

// Death notice: applied and flooded once per node.
inline Reaction on_death_notice(NodeState& st, EtpNodeState& es, const Graph& g, const Packet& pkt, Arrival in) {
    Reaction r;
    if (!pkt.etp) throw Error("malformed death notice");
    if (!es.death_seen.insert(pkt.etp->change.id).second) return r;
    catch_up(st, es, pkt.etp->known);
    apply_change_info(st, es, pkt.etp->change);
    send_to_all_except(g, st.id(), in.from, pkt, r);
    return r;
}

// Joining node: adopts the merged maps of its neighbours (a direct copy, not
// packets), then sends every neighbour an ETP with all its primaries when it
// has more than one. A lone neighbour gets a CTP instead, so the rest of the
// network still learns the new node.
struct JoinResult {
    NodeState state;
    Reaction reaction;
};

inline JoinResult on_node_join(const Graph& g, NodeId a, const std::vector<const NodeState*>& neighbours,
                               const std::vector<const EtpNodeState*>& neighbour_etps, MapConfig cfg,
                               const ChangeInfo& ch, EtpNodeState& es) {
    const auto& nbs = g.neighbours(a);
    if (nbs.empty()) throw Error("joining node has no live neighbours");
    if (neighbours.size() != nbs.size()) throw Error("one map per neighbour expected");
    JoinResult out{NodeState(a, g.node_count(), cfg), {}};
    NodeState& st = out.state;
    for (std::size_t i = 0; i < nbs.size(); ++i) {
        NodeId b = nbs[i];
        const NodeState& nb = *neighbours[i];
        if (nb.id() != b) throw Error("neighbour maps out of order");
        LinkQuality q = g.quality(a, b);
        st.offer({{a, std::nullopt}, {b, q}});
        for (const auto& [d, list] : nb.map())
            for (const auto& e : list) {
                if (d == a) continue;
                Path p{{a, std::nullopt}, {b, q}};
                p.insert(p.end(), e.path.begin() + 1, e.path.end());
                if (!is_simple(hops_of(p))) continue;
                st.offer(std::move(p));
            }
    }
    // The neighbours may not agree on what changed; adopt the newest of each.
    for (const auto* ne : neighbour_etps) catch_up(st, es, detail::known_changes(*ne));
    es.applied.insert(ch.id);
    if (nbs.size() > 1) {
        std::vector<Path> routes;
        for (NodeId d : st.destinations())
            for (const auto* e : st.primaries(d)) routes.push_back(e->path);
        Packet p = detail::make_etp(std::move(routes), detail::single(a), ch, true, &es);
        send_to_all_except(g, a, std::nullopt, p, out.reaction);
    } else {
        send_to_all_except(g, a, std::nullopt, start_packet(PacketKind::continuous, a), out.reaction);
    }
    return out;
}

}  // namespace qspn
