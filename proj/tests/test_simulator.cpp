#include "oracles.hpp"

#include <gtest/gtest.h>

#include <qspn/experiments.hpp>

#include <sstream>

using namespace qspn;

namespace {

std::string trace_of(const Graph& g, Protocol p, const std::vector<NodeId>& starters, SimConfig cfg = {}) {
    std::ostringstream out;
    Simulator sim(g, cfg);
    sim.set_trace(&out);
    sim.start(p, starters);
    sim.run();
    return out.str();
}

}  // namespace

TEST(Simulator, DelayModel) {
    SimConfig cfg;
    EXPECT_EQ(delivery_delay({4, 2}, cfg), 2.0);
    cfg.rtt_delay = true;
    EXPECT_EQ(delivery_delay({4, 2}, cfg), 2.5);
    cfg.c_delay = 3;
    EXPECT_EQ(delivery_delay({4, 2}, cfg), 3.5);
}

TEST(Simulator, SameInputSameTrace) {
    Graph g = gen_random_connected(9, 0.35, 3);
    randomize_rtt(g, 1, 4, 3);
    for (auto p : {Protocol::plain, Protocol::atp, Protocol::q2, Protocol::q1}) {
        auto a = trace_of(g, p, {0, 4});
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, trace_of(g, p, {0, 4})) << to_string(p);
    }
}

TEST(Simulator, TraceTimesNeverDecrease) {
    Simulator sim(oracle::fixture("fig8.txt"), {});
    sim.keep_trace(true);
    sim.start(Protocol::q2, live_nodes(sim.graph()));
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    for (std::size_t i = 1; i < sim.trace().size(); ++i) EXPECT_LE(sim.trace()[i - 1].time, sim.trace()[i].time);
    EXPECT_EQ(sim.last_delivery(), sim.trace().back().time);
}

TEST(Simulator, TiesGoInSendOrder) {
    // Star: the centre sends to 1, 2, 3 at the same time over equal links.
    Graph g(4);
    for (NodeId n = 1; n < 4; ++n) g.add_link(0, n);
    Simulator sim(g, {});
    sim.keep_trace(true);
    sim.start(Protocol::plain, {0});
    sim.run();
    ASSERT_EQ(sim.trace().size(), 3u);
    for (NodeId n = 1; n < 4; ++n) EXPECT_EQ(sim.trace()[n - 1].to, n);
}

TEST(Simulator, UniformBandwidthKeepsOrder) {
    Graph g = gen_mesh(3, 3);
    SimConfig slow;
    slow.rtt_delay = true;
    Simulator a(g, {}), b(g, slow);
    a.keep_trace(true);
    b.keep_trace(true);
    a.start(Protocol::q2, {4});
    b.start(Protocol::q2, {4});
    a.run();
    b.run();
    ASSERT_EQ(a.trace().size(), b.trace().size());
    for (std::size_t i = 0; i < a.trace().size(); ++i) {
        EXPECT_EQ(a.trace()[i].to, b.trace()[i].to);
        EXPECT_EQ(a.trace()[i].hops, b.trace()[i].hops);
    }
    EXPECT_EQ(a.flux().phi, b.flux().phi);
}

TEST(Simulator, PauseAndResume) {
    Graph g = gen_mesh(3, 3);
    Simulator a(g, {}), b(g, {});
    a.start(Protocol::q2, {0});
    b.start(Protocol::q2, {0});
    EXPECT_EQ(a.run(2.0), RunStatus::paused);
    EXPECT_EQ(a.now(), 2.0);
    EXPECT_EQ(a.run(), RunStatus::quiescent);
    EXPECT_EQ(b.run(), RunStatus::quiescent);
    EXPECT_EQ(a.flux().phi, b.flux().phi);
}

TEST(Simulator, StarterMustBeAlive) {
    Simulator sim(gen_mesh(2, 2), {});
    sim.apply(KillNode{0});
    EXPECT_THROW(sim.start(Protocol::q2, {0}), Error);
}

TEST(Flux, MeanFlux) {
    FluxCounters c{{1, 2, 3, 10}};
    EXPECT_EQ(mean_flux(c, {0, 1, 2}), 2.0);
    EXPECT_THROW(mean_flux(c, {}), Error);
    EXPECT_THROW(mean_flux(c, {7}), Error);
}

TEST(Flux, BoundedByNodeCount) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Graph g = gen_random_connected(4 + seed % 8, 0.4, seed);
        auto r = explore(g, {}, Protocol::q2, {0});
        EXPECT_LE(r.phi_m, static_cast<double>(g.node_count())) << seed;
        EXPECT_GT(r.phi_m, 0.0);
    }
}

TEST(Flux, StarOfThree) {
    // Segment of three started in the middle.
    Graph g = gen_mesh(1, 3);
    auto r = explore(g, {}, Protocol::q2, {1});
    EXPECT_EQ(r.status, RunStatus::quiescent);
    EXPECT_LE(r.phi_m, 3.0);
}

TEST(Flux, ResetCounters) {
    Simulator sim(gen_mesh(3, 3), {});
    sim.start(Protocol::q2, {0});
    sim.run();
    sim.reset_counters();
    EXPECT_EQ(mean_flux(sim.flux(), live_nodes(sim.graph())), 0.0);
    EXPECT_TRUE(sim.atp_branches().empty());
}

TEST(TraceFormat, Line) {
    TraceRecord t{2.5, PacketKind::continuous, 3, 4, {0, 1, 3}, true};
    EXPECT_EQ(format_trace(t), "2.5 ctp 3 4 0->1->3 1");
    t.hops.clear();
    t.interesting = false;
    t.kind = PacketKind::extended;
    EXPECT_EQ(format_trace(t), "2.5 etp 3 4 - 0");
}

TEST(Mesh, RandomChangesAreDistinctLinks) {
    Graph g = gen_mesh(5, 5);
    auto ch = random_link_changes(g, 20, 9);
    std::set<LinkKey> seen;
    for (const auto& c : ch) {
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, WorsenLink>) {
                    EXPECT_EQ(x.quality.rtt, 2.0);
                    seen.insert({x.u, x.v});
                } else if constexpr (std::is_same_v<T, ImproveLink>) {
                    EXPECT_EQ(x.quality.rtt, 0.5);
                    seen.insert({x.u, x.v});
                } else {
                    ADD_FAILURE() << "unexpected change kind";
                }
            },
            c);
    }
    EXPECT_EQ(seen.size(), 20u);
    EXPECT_THROW(random_link_changes(g, 1000, 1), Error);
}
