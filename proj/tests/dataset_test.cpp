#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "mvdisc/dataset.hpp"

using namespace mvdisc;

namespace {

Dataset load(const std::string& csv, std::optional<std::vector<VariableMeta>> schema = std::nullopt) {
    std::istringstream in(csv);
    return load_dataset(in, schema);
}

}  // namespace

TEST(LoadDataset, BuildsCandidateThresholds) {
    auto d = load("x\n1.0\n2.0\n4.0\n", std::vector{VariableMeta::continuous("x")});
    ASSERT_EQ(d.rows(), 3u);
    auto c = d.candidates(0);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_DOUBLE_EQ(c[0], 1.5);
    EXPECT_DOUBLE_EQ(c[1], 3.0);
    EXPECT_EQ(d.bounds(0), (Bounds{1.0, 4.0}));
}

TEST(LoadDataset, EmptyCellNamesTheCell) {
    try {
        load("a,b\n1,2\n3,\n", std::vector{VariableMeta::continuous("a"), VariableMeta::continuous("b")});
        FAIL() << "expected an error";
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
    }
}

TEST(LoadDataset, DuplicatesCollapse) {
    auto d = load("x\n1\n1\n2\n", std::vector{VariableMeta::continuous("x")});
    ASSERT_EQ(d.candidates(0).size(), 1u);
    EXPECT_DOUBLE_EQ(d.candidates(0)[0], 1.5);
}

TEST(LoadDataset, RejectsNonNumericAndOutOfRangeCodes) {
    EXPECT_THROW(load("x\n1\nabc\n"), ParseError);
    EXPECT_THROW(load("d\n0\n2\n", std::vector{VariableMeta::discrete("d", 2)}), ValidationError);
    EXPECT_THROW(load("d\n0\n0.5\n", std::vector{VariableMeta::discrete("d", 2)}), ValidationError);
    EXPECT_THROW(load("x\n"), ValidationError);
    EXPECT_THROW(load(""), ParseError);
}

TEST(LoadDataset, SchemaMustMatchHeader) {
    EXPECT_THROW(load("x,y\n1,2\n", std::vector{VariableMeta::continuous("x")}), ValidationError);
    EXPECT_THROW(load("x\n1\n", std::vector{VariableMeta::continuous("z")}), ValidationError);
}

TEST(LoadDataset, DeclaredBoundsOverrideAndMustCover) {
    auto d = load("x\n1\n2\n", std::vector{VariableMeta::continuous("x", Bounds{0, 10})});
    EXPECT_EQ(d.bounds(0), (Bounds{0, 10}));
    EXPECT_THROW(load("x\n1\n20\n", std::vector{VariableMeta::continuous("x", Bounds{0, 10})}), ValidationError);
    EXPECT_THROW(VariableMeta::continuous("x", Bounds{1, 1}).validate(), ValidationError);
    EXPECT_THROW(VariableMeta::discrete("d", 1).validate(), ValidationError);
}

TEST(LoadDataset, InfersTypes) {
    auto d = load("a,b,c\n0,0.5,3\n1,1.5,17\n2,2.5,1\n");
    EXPECT_FALSE(d.is_continuous(0));
    EXPECT_EQ(d.variable(0).arity, 3);
    EXPECT_TRUE(d.is_continuous(1));
    EXPECT_FALSE(d.is_continuous(2));
    EXPECT_EQ(d.variable(2).arity, 18);

    std::string many = "x\n";
    for (int i = 0; i < 16; ++i) many += std::to_string(i) + "\n";
    EXPECT_TRUE(load(many).is_continuous(0));
}

TEST(CandidateThresholds, Basics) {
    std::vector<double> v{1.0, 2.0, 4.0};
    EXPECT_EQ(candidate_thresholds(v), (std::vector<double>{1.5, 3.0}));
    std::vector<double> five{5, 1, 4, 2, 3};
    EXPECT_EQ(candidate_thresholds(five).size(), 4u);  // 2^4 = 16 policies
    std::vector<double> constant{7.0, 7.0};
    EXPECT_TRUE(candidate_thresholds(constant).empty());
}

TEST(CandidateThresholds, CountMatchesDistinctValuesProperty) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> len(1, 30), val(-5, 5);
        std::vector<double> col(static_cast<std::size_t>(len(rng)));
        for (auto& x : col) x = val(rng) * 0.5;
        std::set<double> distinct(col.begin(), col.end());
        auto c = candidate_thresholds(col);
        ASSERT_EQ(c.size(), distinct.size() - 1);
        const double lo = *distinct.begin(), hi = *distinct.rbegin();
        for (std::size_t k = 0; k < c.size(); ++k) {
            EXPECT_GT(c[k], lo);
            EXPECT_LT(c[k], hi);
            if (k) {
                EXPECT_LT(c[k - 1], c[k]);
            }
        }
    }
}

TEST(ApplyPolicy, FollowsRightClosedIntervals) {
    auto p = DiscretizationPolicy::from_thresholds({1.5}, 1.0, 3.0);
    std::vector<double> x{1.0, 2.0, 3.0};
    EXPECT_EQ(apply_policy(x, p), (std::vector<int>{0, 1, 1}));
    std::vector<double> tie{1.5};
    EXPECT_EQ(apply_policy(tie, p), (std::vector<int>{0}));
    auto single = DiscretizationPolicy::from_thresholds({}, 1.0, 3.0);
    EXPECT_EQ(apply_policy(x, single), (std::vector<int>{0, 0, 0}));
    std::vector<double> outside{3.5};
    EXPECT_THROW(apply_policy(outside, p), RangeError);
}

TEST(ApplyPolicy, PolicyConstructionValidates) {
    EXPECT_THROW(DiscretizationPolicy::from_thresholds({2.0, 1.0}, 0, 3), ValidationError);
    EXPECT_THROW(DiscretizationPolicy::from_thresholds({0.0}, 0, 3), ValidationError);
    EXPECT_THROW(DiscretizationPolicy::from_thresholds({}, 3, 0), ValidationError);
    EXPECT_EQ(DiscretizationPolicy::trivial(4).arity(), 4);
}

TEST(ApplyPolicy, MonotoneAndIntervalMembershipProperty) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> col(25);
        for (auto& x : col) x = std::round(u(rng) * 4) / 4;
        auto cand = candidate_thresholds(col);
        std::vector<double> t;
        for (double c : cand)
            if (rng() % 3 == 0) t.push_back(c);
        auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        auto p = DiscretizationPolicy::from_thresholds(t, *lo, *hi);
        auto codes = apply_policy(col, p);
        std::vector<std::size_t> idx(col.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return col[a] < col[b]; });
        for (std::size_t k = 1; k < idx.size(); ++k) EXPECT_LE(codes[idx[k - 1]], codes[idx[k]]);
        std::vector<int> used(static_cast<std::size_t>(p.arity()), 0);
        for (std::size_t row = 0; row < col.size(); ++row) {
            EXPECT_TRUE(p.contains(codes[row], col[row]));
            ++used[static_cast<std::size_t>(codes[row])];
        }
        // policies built from candidates never leave an interval empty or zero-width
        for (int k = 0; k < p.arity(); ++k) {
            EXPECT_GT(used[static_cast<std::size_t>(k)], 0);
            auto [l, r] = p.interval(k);
            EXPECT_GT(r, l);
        }
    }
}

TEST(Discretize, MapsEveryColumn) {
    auto d = load("x,d\n0.1,0\n0.9,1\n0.5,1\n",
                  std::vector{VariableMeta::continuous("x"), VariableMeta::discrete("d", 2)});
    NetworkPolicy pol{DiscretizationPolicy::from_thresholds({0.3}, 0.1, 0.9), DiscretizationPolicy::trivial(2)};
    auto dd = discretize(d, pol);
    EXPECT_EQ(dd.codes[0], (std::vector<int>{0, 1, 1}));
    EXPECT_EQ(dd.codes[1], (std::vector<int>{0, 1, 1}));
    EXPECT_EQ(dd.arity, (std::vector<int>{2, 2}));
    EXPECT_NO_THROW(validate_network_policy(d, pol));
    NetworkPolicy bad{DiscretizationPolicy::from_thresholds({}, 0.1, 0.9), DiscretizationPolicy::trivial(3)};
    EXPECT_THROW(validate_network_policy(d, bad), ValidationError);
}
