#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mvdisc/graph.hpp"
#include "oracles.hpp"

using namespace mvdisc;

TEST(ValidateDag, AcceptsAndOrders) {
    auto g = validate_dag({{}, {0}});
    EXPECT_EQ(g.order(), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(g.children(0), (std::vector<std::size_t>{1}));
    EXPECT_NO_THROW(validate_dag({{}, {}, {}}));
}

TEST(ValidateDag, ReportsCycle) {
    try {
        validate_dag({{1}, {0}});
        FAIL();
    } catch (const CycleError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("0"), std::string::npos);
        EXPECT_NE(msg.find("1"), std::string::npos);
    }
    EXPECT_THROW(validate_dag({{0}}), CycleError);
    EXPECT_THROW(validate_dag({{}, {5}}), ValidationError);
}

TEST(ValidateDag, EditsStayConsistent) {
    auto g = Dag(3).with_edge(0, 1).with_edge(1, 2);
    EXPECT_TRUE(g.reaches(0, 2));
    EXPECT_THROW(g.with_edge(2, 0), CycleError);
    auto r = g.with_edge_reversed(0, 1);
    EXPECT_TRUE(r.has_edge(1, 0));
    EXPECT_FALSE(r.has_edge(0, 1));
    EXPECT_EQ(r.children(1), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(g.without_edge(1, 2).edge_count(), 1u);
}

TEST(MarkovBlanket, Examples) {
    auto chain = validate_dag({{}, {0}, {1}});
    EXPECT_EQ(markov_blanket(chain, 1), (NodeSet{0, 2}));
    auto collider = validate_dag({{}, {}, {0, 1}});
    EXPECT_EQ(markov_blanket(collider, 0), (NodeSet{1, 2}));
    EXPECT_TRUE(markov_blanket(Dag(2), 0).empty());
}

TEST(MarkovBlanket, MembershipIsSymmetric) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        auto g = validate_dag(oracle::random_dag(7, 0.4, rng));
        for (std::size_t i = 0; i < g.size(); ++i)
            for (auto j : markov_blanket(g, i)) EXPECT_TRUE(markov_blanket(g, j).count(i));
    }
}

TEST(DSeparation, Examples) {
    auto chain = validate_dag({{}, {0}, {1}});
    EXPECT_TRUE(d_separated(chain, 0, 2, {1}));
    EXPECT_FALSE(d_separated(chain, 0, 2, {}));
    auto collider = validate_dag({{}, {}, {0, 1}});
    EXPECT_TRUE(d_separated(collider, 0, 1, {}));
    EXPECT_FALSE(d_separated(collider, 0, 1, {2}));
    auto descendant = validate_dag({{}, {}, {0, 1}, {2}});
    EXPECT_FALSE(d_separated(descendant, 0, 1, {3}));
    Dag empty(3);
    EXPECT_TRUE(d_separated(empty, 0, 1, {}));
    EXPECT_TRUE(d_separated(empty, 0, 1, {2}));
    EXPECT_THROW(d_separated(chain, 0, 0, {}), ValidationError);
    EXPECT_THROW(d_separated(chain, 0, 2, {0}), ValidationError);
}

TEST(DSeparation, AgreesWithMoralizationOracle) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        auto ps = oracle::random_dag(5, 0.45, rng);
        auto g = validate_dag(ps);
        for (std::size_t x = 0; x < 5; ++x)
            for (std::size_t y = x + 1; y < 5; ++y)
                for (unsigned mask = 0; mask < 32; ++mask) {
                    if (mask & (1u << x) || mask & (1u << y)) continue;
                    NodeSet z;
                    for (std::size_t v = 0; v < 5; ++v)
                        if (mask & (1u << v)) z.insert(v);
                    ASSERT_EQ(d_separated(g, x, y, z), oracle::moral_d_separated(ps, x, y, z));
                }
    }
}

TEST(Augment, FigureOneTransformation) {
    auto g = validate_dag({{}, {0}});
    auto a = augment(g);
    ASSERT_EQ(a.size(), 4u);
    EXPECT_TRUE(a.has_edge(2, 3));  // Y1 -> Y2
    EXPECT_TRUE(a.has_edge(2, 0));  // Y1 -> X1
    EXPECT_TRUE(a.has_edge(3, 1));  // Y2 -> X2
    EXPECT_EQ(a.edge_count(), 3u);
    auto one = augment(Dag(1));
    EXPECT_TRUE(one.has_edge(1, 0));
    EXPECT_EQ(one.edge_count(), 1u);
}

TEST(Augment, ObservedIsSeparatedByItsDiscretization) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        auto g = validate_dag(oracle::random_dag(5, 0.5, rng));
        auto a = augment(g);
        const std::size_t n = g.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 2 * n; ++j) {
                if (j == i || j == n + i) continue;
                EXPECT_TRUE(d_separated(a, i, j, {n + i}));
            }
    }
}

TEST(WriteDot, OneEdgePerParent) {
    auto g = validate_dag({{}, {0}, {0, 1}});
    std::ostringstream os;
    write_dot(os, g, {"a", "b", "c"});
    auto s = os.str();
    EXPECT_NE(s.find("\"a\" -> \"b\";"), std::string::npos);
    EXPECT_NE(s.find("\"a\" -> \"c\";"), std::string::npos);
    EXPECT_NE(s.find("\"b\" -> \"c\";"), std::string::npos);
    EXPECT_EQ(std::count(s.begin(), s.end(), '>'), 3);
}
