#pragma once

// JSON scenarios and result records. Needs nlohmann json (json.hpp) on the include path.

#include <qspn/experiments.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace qspn {

using json = nlohmann::json;

class SchemaError : public Error {
public:
    using Error::Error;
};

struct GraphSpec {
    std::string generator;  // complete, mesh, random, or empty with a file
    std::size_t k = 0;
    std::size_t rows = 0, cols = 0;
    std::size_t n = 0;
    double p = 0;
    bool connected = true;
    std::string file;
    std::optional<std::pair<int, int>> rtt;  // integer rtt range drawn per link
};

struct ScheduledChange {
    enum class When { after_quiescence, at_time, with_previous };
    When when = When::after_quiescence;
    double at = 0;
    Change change;
};

struct Scenario {
    GraphSpec graph;
    Protocol protocol = Protocol::q2;
    std::vector<NodeId> starters;  // empty means every live node
    Dynamics dynamics = Dynamics::etp;
    SimConfig config;
    std::uint64_t seed = 1;
    std::vector<ScheduledChange> mutations;
};

namespace schema {

inline void only(const json& j, const char* where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw SchemaError(std::string(where) + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, v] : j.items())
        if (!ok.count(key)) throw SchemaError(std::string(where) + ": unknown field '" + key + "'");
}

template <class T>
T get(const json& j, const char* key, const char* where) {
    if (!j.contains(key)) throw SchemaError(std::string(where) + ": missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(std::string(where) + ": bad value for '" + key + "'");
    }
}

template <class T>
T get_or(const json& j, const char* key, const char* where, T fallback) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

inline LinkQuality quality(const json& j, const char* where) {
    LinkQuality q{get<double>(j, "rtt", where), get_or<double>(j, "bw", where, 1.0)};
    if (!(q.rtt > 0) || !(q.bw > 0)) throw SchemaError(std::string(where) + ": rtt and bw must be positive");
    return q;
}

inline Change change(const json& j) {
    const char* w = "change";
    if (!j.is_object()) throw SchemaError("change: expected an object");
    auto kind_name = get<std::string>(j, "kind", w);
    ChangeKind kind;
    try {
        kind = change_kind_from_string(kind_name);
    } catch (const Error&) {
        throw SchemaError("change: unknown kind '" + kind_name + "'");
    }
    switch (kind) {
        case ChangeKind::worsen_link:
        case ChangeKind::improve_link:
        case ChangeKind::new_link: {
            only(j, w, {"kind", "u", "v", "rtt", "bw"});
            auto u = get<NodeId>(j, "u", w), v = get<NodeId>(j, "v", w);
            LinkQuality q = quality(j, w);
            if (kind == ChangeKind::worsen_link) return WorsenLink{u, v, q};
            if (kind == ChangeKind::improve_link) return ImproveLink{u, v, q};
            return NewLink{u, v, q};
        }
        case ChangeKind::break_link:
            only(j, w, {"kind", "u", "v"});
            return BreakLink{get<NodeId>(j, "u", w), get<NodeId>(j, "v", w)};
        case ChangeKind::kill_node:
            only(j, w, {"kind", "node"});
            return KillNode{get<NodeId>(j, "node", w)};
        case ChangeKind::add_node: {
            only(j, w, {"kind", "links"});
            if (!j.contains("links") || !j["links"].is_array()) throw SchemaError("change: 'links' must be a list");
            AddNode a;
            for (const auto& l : j["links"]) {
                only(l, "add_node link", {"node", "rtt", "bw"});
                a.links.push_back({get<NodeId>(l, "node", "add_node link"), quality(l, "add_node link")});
            }
            return a;
        }
    }
    throw SchemaError("change: unhandled kind");
}

inline GraphSpec graph(const json& j) {
    const char* w = "graph";
    GraphSpec g;
    if (!j.is_object()) throw SchemaError("graph: expected an object");
    if (j.contains("file")) {
        only(j, w, {"file", "rtt"});
        g.file = get<std::string>(j, "file", w);
    } else {
        g.generator = get<std::string>(j, "generator", w);
        if (g.generator == "complete") {
            only(j, w, {"generator", "k", "rtt"});
            g.k = get<std::size_t>(j, "k", w);
        } else if (g.generator == "mesh") {
            only(j, w, {"generator", "rows", "cols", "rtt"});
            g.rows = get<std::size_t>(j, "rows", w);
            g.cols = get<std::size_t>(j, "cols", w);
        } else if (g.generator == "random") {
            only(j, w, {"generator", "n", "p", "connected", "rtt"});
            g.n = get<std::size_t>(j, "n", w);
            g.p = get<double>(j, "p", w);
            g.connected = get_or<bool>(j, "connected", w, true);
            if (g.p < 0 || g.p > 1) throw SchemaError("graph: p must lie in [0, 1]");
        } else {
            throw SchemaError("graph: unknown generator '" + g.generator + "'");
        }
    }
    if (j.contains("rtt")) {
        const auto& r = j["rtt"];
        if (!r.is_array() || r.size() != 2) throw SchemaError("graph: 'rtt' must be [lo, hi]");
        try {
            g.rtt = std::pair{r[0].get<int>(), r[1].get<int>()};
        } catch (const json::exception&) {
            throw SchemaError("graph: 'rtt' bounds must be integers");
        }
        if (g.rtt->first < 1 || g.rtt->second < g.rtt->first) throw SchemaError("graph: need 1 <= lo <= hi");
    }
    return g;
}

}  // namespace schema

inline Scenario parse_scenario(const json& j) {
    schema::only(j, "scenario", {"graph", "protocol", "starters", "dynamics", "config", "mutations"});
    Scenario s;
    if (!j.contains("graph")) throw SchemaError("scenario: missing 'graph'");
    s.graph = schema::graph(j["graph"]);

    auto proto = schema::get_or<std::string>(j, "protocol", "scenario", "q2");
    try {
        s.protocol = protocol_from_string(proto);
    } catch (const Error&) {
        throw SchemaError("scenario: unknown protocol '" + proto + "'");
    }
    if (j.contains("starters")) {
        const auto& st = j["starters"];
        if (st.is_string()) {
            if (st.get<std::string>() != "all") throw SchemaError("scenario: starters must be a list or \"all\"");
        } else {
            s.starters = schema::get<std::vector<NodeId>>(j, "starters", "scenario");
            if (s.starters.empty()) throw SchemaError("scenario: empty starter list");
        }
    }
    auto dyn = schema::get_or<std::string>(j, "dynamics", "scenario", "etp");
    if (dyn == "etp")
        s.dynamics = Dynamics::etp;
    else if (dyn == "ctp")
        s.dynamics = Dynamics::ctp;
    else
        throw SchemaError("scenario: dynamics must be etp or ctp");

    if (j.contains("config")) {
        const auto& c = j["config"];
        const char* w = "config";
        schema::only(c, w,
                     {"max_routes", "stored_routes", "mode", "rtt_delay", "c_delay", "penalty_k", "seed",
                      "step_cap", "check_bodies"});
        auto& m = s.config.map;
        m.max_routes = schema::get_or<std::size_t>(c, "max_routes", w, m.max_routes);
        m.stored_routes = schema::get_or<std::size_t>(c, "stored_routes", w, m.stored_routes);
        if (m.max_routes == 0) throw SchemaError("config: max_routes must be at least 1");
        if (m.stored_routes < m.max_routes) throw SchemaError("config: stored_routes below max_routes");
        auto mode = schema::get_or<std::string>(c, "mode", w, "sym");
        if (mode == "sym")
            s.config.mode = Mode::symmetric;
        else if (mode == "asym")
            s.config.mode = Mode::asymmetric;
        else
            throw SchemaError("config: mode must be sym or asym");
        s.config.rtt_delay = schema::get_or<bool>(c, "rtt_delay", w, false);
        s.config.c_delay = schema::get_or<double>(c, "c_delay", w, 1.0);
        if (!(s.config.c_delay >= 0)) throw SchemaError("config: c_delay must be non-negative");
        if (c.contains("penalty_k") && !c["penalty_k"].is_null()) {
            m.penalty_k = schema::get<double>(c, "penalty_k", w);
            if (!(*m.penalty_k > 0)) throw SchemaError("config: penalty_k must be positive");
        }
        s.seed = schema::get_or<std::uint64_t>(c, "seed", w, 1);
        s.config.step_cap = schema::get_or<std::uint64_t>(c, "step_cap", w, s.config.step_cap);
        s.config.check_bodies = schema::get_or<bool>(c, "check_bodies", w, false);
    }

    if (j.contains("mutations")) {
        if (!j["mutations"].is_array()) throw SchemaError("scenario: 'mutations' must be a list");
        bool first = true;
        for (const auto& mj : j["mutations"]) {
            schema::only(mj, "mutation", {"at", "change"});
            ScheduledChange mu;
            if (!mj.contains("at") || !mj.contains("change")) throw SchemaError("mutation: needs 'at' and 'change'");
            const auto& at = mj["at"];
            if (at.is_number()) {
                mu.when = ScheduledChange::When::at_time;
                mu.at = at.get<double>();
                if (!(mu.at >= 0)) throw SchemaError("mutation: negative time");
            } else if (at == "after-quiescence") {
                mu.when = ScheduledChange::When::after_quiescence;
            } else if (at == "with-previous") {
                if (first) throw SchemaError("mutation: 'with-previous' on the first mutation");
                mu.when = ScheduledChange::When::with_previous;
            } else {
                throw SchemaError("mutation: 'at' must be a time, \"after-quiescence\" or \"with-previous\"");
            }
            mu.change = schema::change(mj["change"]);
            s.mutations.push_back(std::move(mu));
            first = false;
        }
    }
    return s;
}

// Relative graph files resolve against `base`, normally the scenario's directory.
inline Graph build_graph(const GraphSpec& g, std::uint64_t seed, const std::filesystem::path& base = {}) {
    Graph out(0);
    if (!g.file.empty()) {
        std::filesystem::path p = g.file;
        if (p.is_relative() && !base.empty()) p = base / p;
        std::ifstream in(p);
        if (!in) throw Error("cannot open graph file " + p.string());
        out = read_graph(in);
    } else if (g.generator == "complete") {
        out = gen_complete(g.k);
    } else if (g.generator == "mesh") {
        out = gen_mesh(g.rows, g.cols);
    } else if (g.connected) {
        out = gen_random_connected(g.n, g.p, seed);
    } else {
        out = gen_random(g.n, g.p, seed);
    }
    if (g.rtt) randomize_rtt(out, g.rtt->first, g.rtt->second, seed);
    return out;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return parse_scenario(j);
}

inline json change_to_json(const Change& c) {
    auto q = [](json j, const LinkQuality& lq) {
        j["rtt"] = lq.rtt;
        j["bw"] = lq.bw;
        return j;
    };
    return std::visit(
        [&](const auto& x) -> json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, WorsenLink>)
                return q({{"kind", "worsen_link"}, {"u", x.u}, {"v", x.v}}, x.quality);
            else if constexpr (std::is_same_v<T, ImproveLink>)
                return q({{"kind", "improve_link"}, {"u", x.u}, {"v", x.v}}, x.quality);
            else if constexpr (std::is_same_v<T, NewLink>)
                return q({{"kind", "new_link"}, {"u", x.u}, {"v", x.v}}, x.quality);
            else if constexpr (std::is_same_v<T, BreakLink>)
                return {{"kind", "break_link"}, {"u", x.u}, {"v", x.v}};
            else if constexpr (std::is_same_v<T, KillNode>)
                return {{"kind", "kill_node"}, {"node", x.node}};
            else {
                json links = json::array();
                for (const auto& l : x.links) links.push_back(q({{"node", l.node}}, l.quality));
                return {{"kind", "add_node"}, {"links", links}};
            }
        },
        c);
}

// Every field spelled out, defaults included, so two files that mean the same
// run get the same hash.
inline json canonical(const Scenario& s) {
    json g;
    if (!s.graph.file.empty()) {
        g["file"] = s.graph.file;
    } else {
        g["generator"] = s.graph.generator;
        if (s.graph.generator == "complete") g["k"] = s.graph.k;
        if (s.graph.generator == "mesh") g["rows"] = s.graph.rows, g["cols"] = s.graph.cols;
        if (s.graph.generator == "random") g["n"] = s.graph.n, g["p"] = s.graph.p, g["connected"] = s.graph.connected;
    }
    if (s.graph.rtt) g["rtt"] = {s.graph.rtt->first, s.graph.rtt->second};
    const auto& m = s.config.map;
    json cfg{{"max_routes", m.max_routes},
             {"stored_routes", m.stored_routes},
             {"mode", s.config.mode == Mode::symmetric ? "sym" : "asym"},
             {"rtt_delay", s.config.rtt_delay},
             {"c_delay", s.config.c_delay},
             {"penalty_k", m.penalty_k ? json(*m.penalty_k) : json(nullptr)},
             {"seed", s.seed},
             {"step_cap", s.config.step_cap},
             {"check_bodies", s.config.check_bodies}};
    json muts = json::array();
    for (const auto& mu : s.mutations) {
        json at = mu.when == ScheduledChange::When::at_time ? json(mu.at)
                  : mu.when == ScheduledChange::When::with_previous ? json("with-previous")
                                                                     : json("after-quiescence");
        muts.push_back({{"at", at}, {"change", change_to_json(mu.change)}});
    }
    return {{"graph", g},
            {"protocol", to_string(s.protocol)},
            {"starters", s.starters.empty() ? json("all") : json(s.starters)},
            {"dynamics", s.dynamics == Dynamics::etp ? "etp" : "ctp"},
            {"config", cfg},
            {"mutations", muts}};
}

// ---- results ----

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    std::ostringstream o;
    o << std::hex;
    o.width(16);
    o.fill('0');
    o << x;
    return o.str();
}

// One line per stored entry, "node dst hops trtt bw", in map order.
inline std::string route_table_text(const Simulator& sim) {
    std::string out;
    for (NodeId n : live_nodes(sim.graph()))
        for (NodeId d : sim.node(n).destinations())
            for (const auto& e : sim.node(n).routes(d))
                out += std::to_string(n) + ' ' + std::to_string(d) + ' ' + format_route(e.hops()) + ' ' +
                       (e.rem.reachable ? format_number(e.rem.trtt) + ' ' + format_number(e.rem.bw) : "- -") +
                       '\n';
    return out;
}

struct PhaseResult {
    double phi_m = 0;
    double time = 0;

    friend bool operator==(const PhaseResult&, const PhaseResult&) = default;
};

struct ResultRecord {
    std::string scenario_hash;
    std::string status;  // quiescent or step_cap
    std::vector<std::uint64_t> phi;
    double phi_m = 0;
    double completion_time = 0;
    std::vector<PhaseResult> phases;  // split at every after-quiescence mutation
    std::string route_digest;
    std::vector<std::size_t> route_counts;

    friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

inline void to_json(json& j, const PhaseResult& p) { j = json{{"phi_m", p.phi_m}, {"time", p.time}}; }
inline void from_json(const json& j, PhaseResult& p) {
    schema::only(j, "phase", {"phi_m", "time"});
    p.phi_m = schema::get<double>(j, "phi_m", "phase");
    p.time = schema::get<double>(j, "time", "phase");
}

inline void to_json(json& j, const ResultRecord& r) {
    j = json{{"scenario_hash", r.scenario_hash}, {"status", r.status},
             {"phi", r.phi},                     {"phi_m", r.phi_m},
             {"completion_time", r.completion_time}, {"phases", r.phases},
             {"route_digest", r.route_digest},   {"route_counts", r.route_counts}};
}

inline void from_json(const json& j, ResultRecord& r) {
    const char* w = "result";
    schema::only(j, w,
                 {"scenario_hash", "status", "phi", "phi_m", "completion_time", "phases", "route_digest",
                  "route_counts"});
    r.scenario_hash = schema::get<std::string>(j, "scenario_hash", w);
    r.status = schema::get<std::string>(j, "status", w);
    r.phi = schema::get<std::vector<std::uint64_t>>(j, "phi", w);
    r.phi_m = schema::get<double>(j, "phi_m", w);
    r.completion_time = schema::get<double>(j, "completion_time", w);
    r.phases = schema::get<std::vector<PhaseResult>>(j, "phases", w);
    r.route_digest = schema::get<std::string>(j, "route_digest", w);
    r.route_counts = schema::get<std::vector<std::size_t>>(j, "route_counts", w);
}

// Φ and Φ_m cover the whole run; `phases` restarts the count at each
// after-quiescence mutation. Dead nodes keep their counters but are left out
// of Φ_m.
inline ResultRecord run_scenario(const Scenario& s, const std::filesystem::path& base = {},
                                 std::ostream* trace = nullptr) {
    Simulator sim(build_graph(s.graph, s.seed, base), s.config);
    sim.set_trace(trace);
    std::vector<NodeId> starters = s.starters.empty() ? live_nodes(sim.graph()) : s.starters;
    for (NodeId n : starters)
        if (n >= sim.graph().node_count()) throw SchemaError("starter " + std::to_string(n) + " is not in the graph");
    sim.start(s.protocol, starters);

    ResultRecord out;
    std::vector<std::uint64_t> total(sim.graph().node_count(), 0);
    std::vector<std::uint64_t> phase_base(total.size(), 0);
    double phase_start = 0;
    bool capped = false;

    auto close_phase = [&]() {
        const auto& phi = sim.flux().phi;
        total.resize(phi.size(), 0);
        phase_base.resize(phi.size(), 0);
        std::vector<std::uint64_t> diff(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) diff[i] = phi[i] - phase_base[i];
        out.phases.push_back({mean_flux({diff}, live_nodes(sim.graph())),
                              std::max(0.0, sim.last_delivery() - phase_start)});
        phase_base = phi;
        phase_start = sim.now();
    };
    auto run = [&](std::optional<double> until) {
        if (capped) return;
        if (sim.run(until) == RunStatus::step_cap) capped = true;
    };

    for (const auto& m : s.mutations) {
        switch (m.when) {
            case ScheduledChange::When::after_quiescence:
                run(std::nullopt);
                if (capped) break;
                close_phase();
                break;
            case ScheduledChange::When::at_time: run(m.at); break;
            case ScheduledChange::When::with_previous: break;
        }
        if (capped) break;
        sim.apply(m.change, s.dynamics);
    }
    run(std::nullopt);
    if (!capped) close_phase();

    out.scenario_hash = hex64(fnv1a(canonical(s).dump()));
    out.status = capped ? "step_cap" : "quiescent";
    out.phi = sim.flux().phi;
    out.phi_m = mean_flux(sim.flux(), live_nodes(sim.graph()));
    out.completion_time = sim.last_delivery();
    out.route_digest = hex64(fnv1a(route_table_text(sim)));
    for (NodeId n = 0; n < sim.graph().node_count(); ++n) out.route_counts.push_back(sim.node(n).route_count());
    return out;
}

}  // namespace qspn
