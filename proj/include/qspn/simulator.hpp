#pragma once

#include <qspn/etp.hpp>
#include <qspn/protocol.hpp>
#include <qspn/qspn_v1.hpp>

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

namespace qspn {

enum class Protocol { plain, atp, ctp, q2, q1 };

inline const char* to_string(Protocol p) {
    switch (p) {
        case Protocol::plain: return "plain";
        case Protocol::atp: return "atp";
        case Protocol::ctp: return "ctp";
        case Protocol::q2: return "q2";
        case Protocol::q1: return "q1";
    }
    return "?";
}

inline Protocol protocol_from_string(const std::string& s) {
    for (auto p : {Protocol::plain, Protocol::atp, Protocol::ctp, Protocol::q2, Protocol::q1})
        if (s == to_string(p)) return p;
    throw Error("unknown protocol '" + s + "'");
}

// How nodes react to a topology change: ETP map repair, or a fresh CTP from
// every node next to the change.
enum class Dynamics { etp, ctp };

struct SimConfig {
    MapConfig map;
    Mode mode = Mode::symmetric;
    bool rtt_delay = false;
    double c_delay = 1.0;
    std::uint64_t step_cap = 1'000'000;
    bool check_bodies = false;
};

// One-way latency is half the rtt; the rtt-delay rule adds c_delay / bw of
// forwarding time at the sender.
inline double delivery_delay(const LinkQuality& link, const SimConfig& cfg) {
    double d = link.rtt / 2.0;
    if (cfg.rtt_delay) d += cfg.c_delay / link.bw;
    return d;
}

struct FluxCounters {
    std::vector<std::uint64_t> phi;
};

inline double mean_flux(const FluxCounters& c, const std::vector<NodeId>& nodes) {
    if (nodes.empty()) throw Error("mean flux over an empty node set");
    double sum = 0;
    for (NodeId n : nodes) {
        if (n >= c.phi.size()) throw Error("node " + std::to_string(n) + " has no flux counter");
        sum += static_cast<double>(c.phi[n]);
    }
    return sum / static_cast<double>(nodes.size());
}

inline std::vector<NodeId> live_nodes(const Graph& g) {
    std::vector<NodeId> out;
    for (NodeId n = 0; n < g.node_count(); ++n)
        if (g.alive(n)) out.push_back(n);
    return out;
}

struct TraceRecord {
    double time = 0;
    PacketKind kind = PacketKind::plain;
    NodeId from = 0;
    NodeId to = 0;
    Route hops;
    bool interesting = false;
};

// "time kind from to hops interesting", hops joined by "->", interesting as 0/1.
inline std::string format_trace(const TraceRecord& t) {
    return format_number(t.time) + ' ' + to_string(t.kind) + ' ' + std::to_string(t.from) + ' ' +
           std::to_string(t.to) + ' ' + (t.hops.empty() ? std::string("-") : format_route(t.hops)) + ' ' +
           (t.interesting ? '1' : '0');
}

enum class RunStatus { quiescent, step_cap, paused };

class Simulator {
public:
    Simulator(Graph g, SimConfig cfg) : graph_(std::move(g)), cfg_(cfg) { resize(); }

    const Graph& graph() const { return graph_; }
    const SimConfig& config() const { return cfg_; }
    const NodeState& node(NodeId n) const { return nodes_.at(n); }
    const std::vector<NodeState>& nodes() const { return nodes_; }
    const FluxCounters& flux() const { return flux_; }
    const std::vector<std::uint64_t>& received() const { return received_; }
    const std::vector<std::uint64_t>& route_bearing() const { return route_bearing_; }
    const std::vector<Route>& atp_branches() const { return atp_branches_; }
    double now() const { return now_; }
    double last_delivery() const { return last_delivery_; }
    std::uint64_t steps() const { return steps_; }
    std::uint64_t total_steps() const { return total_steps_; }
    bool pending() const { return !queue_.empty(); }

    void set_trace(std::ostream* out) { trace_out_ = out; }
    void keep_trace(bool on) { keep_trace_ = on; }
    const std::vector<TraceRecord>& trace() const { return trace_; }

    void reset_counters() {
        std::fill(flux_.phi.begin(), flux_.phi.end(), 0);
        std::fill(received_.begin(), received_.end(), 0);
        std::fill(route_bearing_.begin(), route_bearing_.end(), 0);
        atp_branches_.clear();
    }

    // Injects the first packet of `p` at every starter, at the current time.
    void start(Protocol p, const std::vector<NodeId>& starters) {
        if (p == Protocol::ctp) q2_rule_ = false;
        if (p == Protocol::q2) q2_rule_ = true;
        for (NodeId s : starters) {
            if (!graph_.alive(s)) throw Error("starter " + std::to_string(s) + " is not alive");
            Reaction r;
            Packet pkt;
            switch (p) {
                case Protocol::plain: {
                    FloodId id{s, flood_seq_[s]++};
                    nodes_[s].seen_floods().insert(id.key());
                    pkt = start_packet(PacketKind::plain, s, id);
                    break;
                }
                case Protocol::atp: pkt = start_packet(PacketKind::acyclic, s); break;
                case Protocol::ctp:
                case Protocol::q2: pkt = start_packet(PacketKind::continuous, s); break;
                case Protocol::q1:
                    v1_[s].flood(s).is_starter = true;
                    pkt = qclose_start(s);
                    break;
            }
            send_to_all_except(graph_, s, std::nullopt, pkt, r);
            emit(s, r);
        }
    }

    RunStatus run(std::optional<double> until = std::nullopt) {
        steps_ = 0;
        while (!queue_.empty()) {
            if (until && queue_.top().time > *until) {
                now_ = *until;
                return RunStatus::paused;
            }
            if (steps_ >= cfg_.step_cap) return RunStatus::step_cap;
            Event ev = queue_.top();
            queue_.pop();
            ++steps_;
            ++total_steps_;
            now_ = ev.time;
            deliver(ev);
        }
        if (until && *until > now_) now_ = *until;
        return RunStatus::quiescent;
    }

    // Mutates the graph and lets the nodes next to the change react now.
    ChangeRecord apply(const Change& change, Dynamics dyn = Dynamics::etp) {
        Mutation m = mutate(graph_, change);
        graph_ = std::move(m.graph);
        resize();
        ChangeInfo ch{next_change_id_++, m.record};
        const ChangeRecord& rec = ch.record;
        q2_rule_ = true;

        // A CTP carries new qualities itself; lost links and nodes it cannot,
        // so only those are applied up front.
        auto ctp_from = [&](NodeId n) {
            Reaction r;
            if (rec.kind == ChangeKind::break_link || rec.kind == ChangeKind::kill_node)
                apply_change_info(nodes_[n], etp_[n], ch);
            send_to_all_except(graph_, n, std::nullopt, start_packet(PacketKind::continuous, n), r);
            emit(n, r);
        };

        switch (rec.kind) {
            case ChangeKind::worsen_link:
            case ChangeKind::break_link:
                for (auto [me, other] : {std::pair{rec.u, rec.v}, std::pair{rec.v, rec.u}}) {
                    if (dyn == Dynamics::ctp) {
                        ctp_from(me);
                        continue;
                    }
                    emit(me, on_link_worsened(nodes_[me], etp_[me], graph_, other, ch));
                }
                break;
            case ChangeKind::improve_link:
            case ChangeKind::new_link:
                for (auto [me, other] : {std::pair{rec.u, rec.v}, std::pair{rec.v, rec.u}}) {
                    if (dyn == Dynamics::ctp) {
                        ctp_from(me);
                        continue;
                    }
                    emit(me, on_link_improved(nodes_[me], etp_[me], other, ch));
                }
                break;
            case ChangeKind::kill_node:
                nodes_[rec.node] = NodeState(rec.node, graph_.node_count(), cfg_.map);
                for (const auto& l : rec.node_links) {
                    if (dyn == Dynamics::ctp) {
                        ctp_from(l.node);
                        continue;
                    }
                    emit(l.node, on_node_death(nodes_[l.node], etp_[l.node], graph_, rec.node, ch));
                }
                break;
            case ChangeKind::add_node: {
                NodeId a = rec.node;
                if (dyn == Dynamics::ctp) {
                    ctp_from(a);
                    break;
                }
                std::vector<const NodeState*> maps;
                std::vector<const EtpNodeState*> etps;
                for (NodeId b : graph_.neighbours(a)) {
                    maps.push_back(&nodes_[b]);
                    etps.push_back(&etp_[b]);
                }
                JoinResult j = on_node_join(graph_, a, maps, etps, cfg_.map, ch, etp_[a]);
                nodes_[a] = std::move(j.state);
                emit(a, j.reaction);
                break;
            }
        }
        return rec;
    }

    // Drops unreachable entries everywhere; meant for quiescent points.
    void purge_unreachable() {
        for (auto& n : nodes_) n.purge();
    }

private:
    struct Event {
        double time;
        std::uint64_t seq;
        NodeId from;
        NodeId to;
        LinkQuality link;
        Packet packet;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    void resize() {
        std::size_t n = graph_.node_count();
        while (nodes_.size() < n) nodes_.emplace_back(static_cast<NodeId>(nodes_.size()), n, cfg_.map);
        etp_.resize(n);
        v1_.resize(n);
        flood_seq_.resize(n, 0);
        flux_.phi.resize(n, 0);
        received_.resize(n, 0);
        route_bearing_.resize(n, 0);
    }

    void emit(NodeId from, const Reaction& r) {
        flux_.phi[from] += r.distinct;
        for (const auto& s : r.sends) {
            auto q = graph_.find_link(from, s.to);
            if (!q) throw Error("send over a missing link " + std::to_string(from) + "-" + std::to_string(s.to));
            queue_.push({now_ + delivery_delay(*q, cfg_), seq_++, from, s.to, *q, s.packet});
        }
    }

    void deliver(const Event& ev) {
        if (!graph_.alive(ev.to) || !graph_.has_link(ev.from, ev.to)) return;
        last_delivery_ = ev.time;
        ++received_[ev.to];
        if (cfg_.check_bodies && ev.packet.kind != PacketKind::death) check_body(graph_, ev.packet.body, ev.to);
        NodeState& st = nodes_[ev.to];
        Arrival in{ev.from, ev.link};
        Reaction r;
        switch (ev.packet.kind) {
            case PacketKind::plain: r = handle_plain_tp(st, graph_, ev.packet, in, cfg_.mode); break;
            case PacketKind::acyclic: {
                std::optional<Route> end;
                r = handle_atp(st, graph_, ev.packet, in, &end);
                if (end) atp_branches_.push_back(std::move(*end));
                break;
            }
            case PacketKind::continuous: r = handle_ctp(st, graph_, ev.packet, in, q2_rule_, cfg_.mode); break;
            case PacketKind::extended: r = on_etp_receive(st, etp_[ev.to], graph_, ev.packet, in); break;
            case PacketKind::death: r = on_death_notice(st, etp_[ev.to], graph_, ev.packet, in); break;
            case PacketKind::qclose: r = handle_qclose(st, v1_[ev.to], graph_, ev.packet, in); break;
            case PacketKind::qopen: r = handle_qopen(st, v1_[ev.to], graph_, ev.packet, in); break;
        }
        if (r.extracted) ++route_bearing_[ev.to];
        if (trace_out_ || keep_trace_) {
            TraceRecord t{ev.time, ev.packet.kind, ev.from, ev.to, ev.packet.body.hops(), r.interesting};
            if (trace_out_) *trace_out_ << format_trace(t) << '\n';
            if (keep_trace_) trace_.push_back(std::move(t));
        }
        emit(ev.to, r);
    }

    Graph graph_;
    SimConfig cfg_;
    std::vector<NodeState> nodes_;
    std::vector<EtpNodeState> etp_;
    std::vector<V1State> v1_;
    std::vector<std::uint32_t> flood_seq_;
    FluxCounters flux_;
    std::vector<std::uint64_t> received_;
    std::vector<std::uint64_t> route_bearing_;
    std::vector<Route> atp_branches_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::uint64_t seq_ = 0;
    std::uint64_t next_change_id_ = 0;
    double now_ = 0;
    double last_delivery_ = 0;
    std::uint64_t steps_ = 0;
    std::uint64_t total_steps_ = 0;
    bool q2_rule_ = true;
    std::ostream* trace_out_ = nullptr;
    bool keep_trace_ = false;
    std::vector<TraceRecord> trace_;
};

// Node pairs whose best primary differs in trtt from the shortest path, or that
// have a route where none exists.
struct Mismatch {
    NodeId node;
    NodeId dst;
    std::optional<double> got;
    std::optional<double> want;
};

inline std::vector<Mismatch> primary_mismatches(const Simulator& sim) {
    std::vector<Mismatch> out;
    const Graph& g = sim.graph();
    for (NodeId n : live_nodes(g)) {
        auto want = shortest_rems(g, n);
        for (NodeId d : live_nodes(g)) {
            if (d == n) continue;
            const RouteMapEntry* e = sim.node(n).best(d);
            std::optional<double> got = e ? std::optional<double>(e->rem.trtt) : std::nullopt;
            std::optional<double> w = want[d] ? std::optional<double>(want[d]->trtt) : std::nullopt;
            if (got != w) out.push_back({n, d, got, w});
        }
    }
    return out;
}

}  // namespace qspn
