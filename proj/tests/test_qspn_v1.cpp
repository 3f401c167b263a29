#include "oracles.hpp"

#include <gtest/gtest.h>

#include <qspn/simulator.hpp>

using namespace qspn;

namespace {

constexpr NodeId A = 0, B = 1, C = 2, D = 3, E = 4, F = 5;

// Nodes that originate a qopen: the empty one sent back to the last qclose
// sender holds only the sender itself.
std::set<NodeId> extremes(const Simulator& sim) {
    std::set<NodeId> out;
    for (const auto& t : sim.trace())
        if (t.kind == PacketKind::qopen && t.hops == Route{t.from}) out.insert(t.from);
    return out;
}

TEST(QspnV1, TimedFig10HasTwoExtremes) {
    Simulator sim(oracle::fixture("fig10_timed.txt"), {});
    sim.keep_trace(true);
    sim.start(Protocol::q1, {E});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    EXPECT_EQ(extremes(sim), (std::set<NodeId>{D, F}));

    // Each node can reach every other one.
    for (NodeId a : {A, B, C, D, E, F})
        for (NodeId b : {A, B, C, D, E, F})
            if (a != b) {
                EXPECT_NE(sim.node(a).best(b), nullptr) << a << "->" << b;
            }
}

TEST(QspnV1, StarterNeverOriginatesQopen) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Graph g = gen_random_connected(3 + seed % 8, 0.4, seed);
        randomize_rtt(g, 1, 5, seed);
        Simulator sim(g, {});
        sim.keep_trace(true);
        NodeId s = static_cast<NodeId>(seed % g.node_count());
        sim.start(Protocol::q1, {s});
        ASSERT_EQ(sim.run(), RunStatus::quiescent);
        EXPECT_FALSE(extremes(sim).count(s)) << "seed " << seed;
    }
}

TEST(QspnV1, UnitLinksOnFig10) {
    // With equal links C also closes all its links.
    Simulator sim(oracle::fixture("fig10.txt"), {});
    sim.keep_trace(true);
    sim.start(Protocol::q1, {E});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    EXPECT_EQ(extremes(sim), (std::set<NodeId>{C, D, F}));
}

}  // namespace

TEST(QspnV1, TerminatesOnRandomGraphs) {
    for (std::uint64_t seed = 0; seed < 80; ++seed) {
        Graph g = gen_random_connected(2 + seed % 11, 0.35, seed);
        randomize_rtt(g, 1, 5, seed);
        SimConfig cfg;
        cfg.step_cap = 200000;
        Simulator sim(g, cfg);
        sim.start(Protocol::q1, {static_cast<NodeId>(seed % g.node_count())});
        EXPECT_EQ(sim.run(), RunStatus::quiescent) << "seed " << seed;
    }
}

TEST(QspnV1, SeparateFloodsKeepSeparateFlags) {
    Graph g = oracle::fixture("fig10.txt");
    Simulator sim(g, {});
    sim.start(Protocol::q1, {E, A});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    // Both floods reached every node; the per-starter flags did not mix.
    for (NodeId a : {A, B, C, D, E, F})
        for (NodeId b : {A, E})
            if (a != b) {
                EXPECT_NE(sim.node(a).best(b), nullptr) << a << "->" << b;
            }
}

TEST(QspnV1, MiddleStarterOnAPathLeavesTheLeavesApart) {
    // Both leaves are extreme. Node 1 forwards the first qopen, then the
    // second one opens its last link and goes nowhere.
    Simulator sim(gen_mesh(1, 3), {});
    sim.start(Protocol::q1, {1});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    EXPECT_NE(sim.node(2).best(0), nullptr);
    EXPECT_EQ(sim.node(0).best(2), nullptr);
}
