#pragma once

// Flux experiments on generated graphs, shared by the CLI sweeps and the tests.

#include <qspn/simulator.hpp>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace qspn {

struct FluxResult {
    double phi_m = 0;
    double time = 0;  // last delivery minus start time
    RunStatus status = RunStatus::quiescent;
};

inline FluxResult measure(Simulator& sim, double started) {
    FluxResult r;
    r.status = sim.run();
    r.phi_m = mean_flux(sim.flux(), live_nodes(sim.graph()));
    r.time = std::max(0.0, sim.last_delivery() - started);
    return r;
}

inline FluxResult explore(const Graph& g, const SimConfig& cfg, Protocol p, const std::vector<NodeId>& starters) {
    Simulator sim(g, cfg);
    sim.start(p, starters);
    return measure(sim, 0.0);
}

inline std::vector<NodeId> first_nodes(std::size_t count) {
    std::vector<NodeId> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<NodeId>(i);
    return out;
}

// `count` distinct links, each with its rtt doubled or halved on a fair coin.
inline std::vector<Change> random_link_changes(const Graph& g, std::size_t count, std::uint64_t seed) {
    std::vector<LinkKey> keys;
    for (const auto& [k, q] : g.links()) keys.push_back(k);
    if (count > keys.size()) throw Error("asked for more changed links than the graph has");
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates with our own draws, so the pick does not depend on
    // the standard library's shuffle.
    for (std::size_t i = 0; i < count; ++i) {
        auto span = static_cast<double>(keys.size() - i);
        auto j = i + std::min(keys.size() - i - 1, static_cast<std::size_t>(uniform01(rng) * span));
        std::swap(keys[i], keys[j]);
    }
    std::vector<Change> out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& k = keys[i];
        LinkQuality q = g.quality(k.a, k.b);
        if (uniform01(rng) < 0.5)
            out.push_back(WorsenLink{k.a, k.b, {q.rtt * 2, q.bw}});
        else
            out.push_back(ImproveLink{k.a, k.b, {q.rtt / 2, q.bw}});
    }
    return out;
}

struct MeshResult {
    FluxResult first;
    FluxResult second;
};

// Exploration from one starter, then `changes` links change at once and the
// nodes next to them react. Counters restart between the two phases.
inline MeshResult mesh_experiment(std::size_t rows, std::size_t cols, NodeId starter, std::size_t changes,
                                  std::uint64_t seed, const SimConfig& cfg = {}, Dynamics dyn = Dynamics::ctp) {
    Simulator sim(gen_mesh(rows, cols), cfg);
    MeshResult out;
    sim.start(Protocol::q2, {starter});
    out.first = measure(sim, 0.0);
    if (out.first.status != RunStatus::quiescent) return out;
    sim.reset_counters();
    double t0 = sim.now();
    for (const auto& c : random_link_changes(sim.graph(), changes, seed)) sim.apply(c, dyn);
    out.second = measure(sim, t0);
    return out;
}

// ---- sweeps ----

struct SweepRow {
    double x = 0;
    FluxResult r;
};

enum class SweepKind { complete_k, starters, random_n, mesh };

inline const char* to_string(SweepKind k) {
    switch (k) {
        case SweepKind::complete_k: return "complete-k";
        case SweepKind::starters: return "starters";
        case SweepKind::random_n: return "random-n";
        case SweepKind::mesh: return "mesh";
    }
    return "?";
}

inline SweepKind sweep_kind_from_string(const std::string& s) {
    for (auto k : {SweepKind::complete_k, SweepKind::starters, SweepKind::random_n, SweepKind::mesh})
        if (s == to_string(k)) return k;
    throw Error("unknown sweep '" + s + "'");
}

struct SweepParams {
    std::size_t from = 3;
    std::size_t to = 10;
    std::size_t k = 8;     // graph size for the starters sweep
    double p = 0.4;        // edge probability for random-n
    std::uint64_t seed = 1;
    Protocol protocol = Protocol::q2;
};

// x is k for complete-k, the starter count for starters (on K_k), n for
// random-n and the side length for mesh. Single-starter sweeps start at node 0,
// except mesh, which starts at the centre.
inline std::vector<SweepRow> sweep(SweepKind kind, const SweepParams& sp, const SimConfig& cfg) {
    if (sp.from > sp.to) throw Error("empty sweep range");
    std::vector<SweepRow> rows;
    for (std::size_t x = sp.from; x <= sp.to; ++x) {
        FluxResult r;
        switch (kind) {
            case SweepKind::complete_k: r = explore(gen_complete(x), cfg, sp.protocol, {0}); break;
            case SweepKind::starters:
                if (x == 0 || x > sp.k) throw Error("starter count outside 1..k");
                r = explore(gen_complete(sp.k), cfg, sp.protocol, first_nodes(x));
                break;
            case SweepKind::random_n:
                r = explore(gen_random_connected(x, sp.p, sp.seed + x), cfg, sp.protocol, {0});
                break;
            case SweepKind::mesh: {
                auto c = static_cast<NodeId>((x / 2) * x + x / 2);
                r = explore(gen_mesh(x, x), cfg, sp.protocol, {c});
                break;
            }
        }
        rows.push_back({static_cast<double>(x), r});
    }
    return rows;
}

}  // namespace qspn
