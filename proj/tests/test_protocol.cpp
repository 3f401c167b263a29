#include "oracles.hpp"

#include <gtest/gtest.h>

#include <qspn/experiments.hpp>
#include <qspn/routecalc.hpp>

using namespace qspn;

namespace {

Simulator run(const Graph& g, Protocol p, const std::vector<NodeId>& starters, SimConfig cfg = {}) {
    Simulator sim(g, cfg);
    sim.start(p, starters);
    EXPECT_EQ(sim.run(), RunStatus::quiescent);
    return sim;
}

}  // namespace

TEST(PlainTp, EveryNodeLearnsTheStarter) {
    Graph g = oracle::fixture("fig2.txt");
    auto sim = run(g, Protocol::plain, {0});
    for (NodeId n = 1; n < 5; ++n) ASSERT_NE(sim.node(n).best(0), nullptr) << n;
    // one flood: each node originates or forwards once, except the leaf E
    for (NodeId n = 0; n < 4; ++n) EXPECT_EQ(sim.flux().phi[n], 1u);
    EXPECT_EQ(sim.flux().phi[4], 0u);
}

TEST(PlainTp, FirstArrivalIsFastest) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        Graph g = gen_random_connected(4 + seed % 8, 0.35, seed);
        randomize_rtt(g, 1, 9, seed);
        Simulator sim(g, {});
        sim.keep_trace(true);
        sim.start(Protocol::plain, {0});
        ASSERT_EQ(sim.run(), RunStatus::quiescent);
        auto want = oracle::distances(g, 0);
        std::map<NodeId, double> first;
        for (const auto& t : sim.trace())
            if (!first.count(t.to)) first[t.to] = t.time;
        for (NodeId n = 1; n < g.node_count(); ++n) {
            EXPECT_DOUBLE_EQ(first.at(n), *want[n] / 2) << "seed " << seed << " node " << n;
            EXPECT_EQ(sim.node(n).best(0)->rem.trtt, *want[n]);
        }
    }
}

TEST(Atp, BranchesEqualEnumeration) {
    for (std::uint64_t seed = 0; seed < 80; ++seed) {
        Graph g = gen_random_connected(2 + seed % 6, 0.45, seed);
        NodeId s = static_cast<NodeId>(seed % g.node_count());
        auto sim = run(g, Protocol::atp, {s});
        std::set<Route> got(sim.atp_branches().begin(), sim.atp_branches().end());
        auto want = enumerate_routes_from(g, s);
        EXPECT_EQ(got, std::set<Route>(want.begin(), want.end())) << "seed " << seed;
        EXPECT_EQ(got, oracle::maximal_paths_from(g, s));
    }
}

TEST(Atp, NeverRevisitsANode) {
    Graph g = oracle::fixture("fig8.txt");
    Simulator sim(g, {});
    sim.keep_trace(true);
    sim.start(Protocol::atp, {0});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    for (const auto& t : sim.trace()) EXPECT_TRUE(is_simple(t.hops));
}

TEST(Ctp, LeafReflectsFreshBody) {
    Graph g = gen_mesh(1, 3);
    Simulator sim(g, {});
    sim.keep_trace(true);
    sim.start(Protocol::q2, {0});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    bool reflected = false;
    for (const auto& t : sim.trace())
        if (t.from == 2 && t.to == 1) {
            EXPECT_EQ(t.hops, (Route{2}));
            reflected = true;
        }
    EXPECT_TRUE(reflected);
    for (NodeId a = 0; a < 3; ++a)
        for (NodeId b = 0; b < 3; ++b)
            if (a != b) {
                EXPECT_NE(sim.node(a).best(b), nullptr) << a << "->" << b;
            }
}

TEST(Ctp, AsymmetricReflectionKeepsBody) {
    Graph g = gen_mesh(1, 3);
    SimConfig cfg;
    cfg.mode = Mode::asymmetric;
    Simulator sim(g, cfg);
    sim.keep_trace(true);
    sim.start(Protocol::q2, {0});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    bool seen = false;
    for (const auto& t : sim.trace())
        if (t.from == 2 && t.to == 1 && t.hops == Route{0, 1, 2}) seen = true;
    EXPECT_TRUE(seen);
    EXPECT_EQ(sim.node(0).best(2)->hops(), (Route{0, 1, 2}));
}

TEST(Ctp, RawCtpNeverStopsOnACycle) {
    for (auto g : {gen_complete(3), gen_mesh(2, 2), oracle::fixture("fig2.txt")}) {
        SimConfig cfg;
        cfg.step_cap = 5000;
        Simulator sim(g, cfg);
        sim.start(Protocol::ctp, {0});
        EXPECT_EQ(sim.run(), RunStatus::step_cap);
    }
}

TEST(Ctp, RawCtpBouncesBetweenLeaves) {
    // No cycle, but two leaves reflect the packet back and forth.
    SimConfig cfg;
    cfg.step_cap = 5000;
    Simulator sim(gen_mesh(1, 2), cfg);
    sim.start(Protocol::ctp, {0});
    EXPECT_EQ(sim.run(), RunStatus::step_cap);
}

TEST(Q2, SingleLinkHalts) {
    auto sim = run(gen_mesh(1, 2), Protocol::q2, {0});
    EXPECT_EQ(sim.total_steps(), 3u) << "each end reflects once, then nothing new";
}

TEST(Q2, TriangleHalts) {
    auto sim = run(gen_complete(3), Protocol::q2, {0});
    EXPECT_LT(sim.total_steps(), 50u);
}

TEST(Q2, OptimalOnRandomGraphs) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Graph g = gen_random_connected(3 + seed % 10, 0.3, seed);
        randomize_rtt(g, 1, 9, seed);
        auto sim = run(g, Protocol::q2, live_nodes(g));
        auto bad = primary_mismatches(sim);
        EXPECT_TRUE(bad.empty()) << "seed " << seed << ": " << bad.size() << " mismatches";
    }
}

TEST(Q2, SingleStarterIsComplete) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        Graph g = gen_random_connected(3 + seed % 8, 0.35, seed);
        auto sim = run(g, Protocol::q2, {0});
        for (NodeId a = 0; a < g.node_count(); ++a)
            for (NodeId b = 0; b < g.node_count(); ++b)
                if (a != b) {
                    EXPECT_NE(sim.node(a).best(b), nullptr) << "seed " << seed << " " << a << "->" << b;
                }
    }
}

TEST(Q2, CompleteGraphFluxBounds) {
    for (std::size_t k = 3; k <= 10; ++k) {
        auto r = explore(gen_complete(k), {}, Protocol::q2, {0});
        EXPECT_EQ(r.status, RunStatus::quiescent);
        EXPECT_GE(r.phi_m, static_cast<double>(k) - 2) << k;
        EXPECT_LE(r.phi_m, static_cast<double>(k)) << k;
    }
}

TEST(Q2, PhiNeverExceedsNodeCountOnCompleteGraphs) {
    for (std::size_t k = 3; k <= 8; ++k)
        for (std::size_t s = 1; s <= k; ++s) EXPECT_LE(explore(gen_complete(k), {}, Protocol::q2, first_nodes(s)).phi_m, k);
}

TEST(Q2, StarterScalingOnK8) {
    double prev_phi = 0, prev_time = 1e300;
    for (std::size_t s = 1; s <= 8; ++s) {
        auto r = explore(gen_complete(8), {}, Protocol::q2, first_nodes(s));
        EXPECT_GE(r.phi_m, prev_phi) << s;
        EXPECT_LE(r.time, prev_time) << s;
        prev_phi = r.phi_m;
        prev_time = r.time;
    }
}
