#include "change_helpers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace qspn;
using namespace testing_support;

class EtpKind : public ::testing::TestWithParam<ChangeKind> {};

TEST_P(EtpKind, ConvergesToFreshExploration) {
    std::size_t tried = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        std::mt19937_64 rng(seed * 31 + static_cast<std::uint64_t>(GetParam()));
        Graph g = gen_random_connected(4 + rng() % 7, 0.4, seed);
        randomize_rtt(g, 1, 5, seed);
        Simulator sim = explored(g);
        auto ch = pick_change(g, GetParam(), rng);
        if (!ch) continue;
        ++tried;
        sim.apply(*ch);
        ASSERT_EQ(sim.run(), RunStatus::quiescent) << "seed " << seed;
        EXPECT_EQ(differences_from_fresh(sim), 0u) << "seed " << seed;
    }
    EXPECT_GE(tried, 20u);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, EtpKind, ::testing::ValuesIn(all_kinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Etp, SequentialMixedChanges) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        std::mt19937_64 rng(seed);
        Graph g = gen_random_connected(5 + rng() % 6, 0.4, seed);
        randomize_rtt(g, 1, 5, seed);
        Simulator sim = explored(g);
        for (int step = 0; step < 6; ++step) {
            auto ch = pick_change(sim.graph(), all_kinds[rng() % 6], rng);
            if (!ch) continue;
            sim.apply(*ch);
            ASSERT_EQ(sim.run(), RunStatus::quiescent) << "seed " << seed << " step " << step;
        }
        EXPECT_EQ(differences_from_fresh(sim), 0u) << "seed " << seed;
    }
}

TEST(Etp, WorsenedEndpointSendsQInsideR) {
    // Path 0-1-2-3 plus a slow bypass 0-3.
    Graph g = gen_mesh(1, 4);
    g.add_link(0, 3, {10, 1});
    Simulator sim = explored(g);
    NodeState st = sim.node(1);
    EtpNodeState es;
    ChangeInfo ch{0, mutate(g, WorsenLink{1, 2, {20, 1}}).record};
    Graph after = mutate(g, WorsenLink{1, 2, {20, 1}}).graph;
    std::vector<Path> q;
    Reaction r = on_link_worsened(st, es, after, 2, ch, &q);
    ASSERT_FALSE(q.empty());
    ASSERT_EQ(r.sends.size(), 1u) << "all links but the changed one";
    EXPECT_EQ(r.sends[0].to, 0u);
    const auto& routes = r.sends[0].packet.etp->routes;
    for (const auto& p : q) {
        bool found = false;
        for (const auto& x : routes) found = found || same_nodes(x, p);
        EXPECT_TRUE(found) << format_route(hops_of(p));
    }
    EXPECT_TRUE(r.sends[0].packet.etp->flag_of_interest);
    EXPECT_EQ(r.sends[0].packet.body.hops(), (Route{2, 1}));
}

TEST(Etp, NoPrimaryOverTheLinkMeansNoEtp) {
    Graph g(3);
    g.add_link(0, 1, {1, 1});
    g.add_link(1, 2, {1, 1});
    g.add_link(0, 2, {10, 1});
    Simulator sim = explored(g);
    NodeState st = sim.node(2);
    EtpNodeState es;
    auto m = mutate(g, WorsenLink{0, 2, {20, 1}});
    Reaction r = on_link_worsened(st, es, m.graph, 0, {0, m.record});
    EXPECT_TRUE(r.sends.empty());
    EXPECT_EQ(r.distinct, 0u);
}

TEST(Etp, SReplyCarriesNoFlag) {
    Graph g = gen_complete(4);
    Simulator sim = explored(g);
    EtpBody body;
    body.routes.push_back(path_on(g, {1, 2}));
    body.flag_of_interest = true;
    Packet s = build_s_reply(sim.node(0), {}, body, TracerBody::of(path_on(g, {3, 1})), 1);
    EXPECT_FALSE(s.etp->flag_of_interest);
    EXPECT_EQ(s.body.hops(), (Route{0}));
    for (const auto& p : s.etp->routes) {
        EXPECT_NE(p[1].node, 1u) << "nothing through the sender";
        EXPECT_TRUE(p.back().node == 2 || p.back().node == 3 || p.back().node == 1);
    }
}

TEST(Etp, TraversedListsStayAcyclic) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        Graph g = gen_random_connected(8, 0.4, seed);
        randomize_rtt(g, 1, 5, seed);
        Simulator sim = explored(g);
        sim.keep_trace(true);
        for (auto kind : all_kinds) {
            auto ch = pick_change(sim.graph(), kind, rng);
            if (!ch) continue;
            sim.apply(*ch);
            ASSERT_EQ(sim.run(), RunStatus::quiescent);
        }
        for (const auto& t : sim.trace())
            if (t.kind == PacketKind::extended) {
                EXPECT_TRUE(is_simple(t.hops)) << format_route(t.hops);
            }
    }
}

TEST(Etp, JoinWithOneNeighbourSendsACtp) {
    Graph g = gen_mesh(2, 2);
    Simulator sim = explored(g);
    sim.keep_trace(true);
    sim.apply(AddNode{{{0, {1, 1}}}});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    ASSERT_FALSE(sim.trace().empty());
    EXPECT_EQ(sim.trace().front().from, 4u);
    EXPECT_EQ(sim.trace().front().kind, PacketKind::continuous);
    for (const auto& t : sim.trace()) EXPECT_NE(t.kind, PacketKind::extended);
    EXPECT_EQ(differences_from_fresh(sim), 0u);
}

TEST(Etp, JoinAdoptsNeighbourMaps) {
    Graph g = gen_mesh(2, 2);
    Simulator sim = explored(g);
    sim.apply(AddNode{{{0, {1, 1}}, {3, {1, 1}}}});
    // Before any delivery the new node already knows everybody.
    for (NodeId d = 0; d < 4; ++d) EXPECT_NE(sim.node(4).best(d), nullptr) << d;
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    EXPECT_EQ(differences_from_fresh(sim), 0u);
}

TEST(Etp, DeathReachesEveryone) {
    Graph g = gen_mesh(3, 3);
    Simulator sim = explored(g);
    sim.apply(KillNode{4});
    ASSERT_EQ(sim.run(), RunStatus::quiescent);
    for (NodeId n : live_nodes(sim.graph())) EXPECT_EQ(sim.node(n).best(4), nullptr) << n;
    EXPECT_TRUE(primary_mismatches(sim).empty());
}
