#include <sstream>

#include <gtest/gtest.h>

#include "mvdisc/io.hpp"

using namespace mvdisc;
using io::json;

namespace {

Dataset sample_data() {
    std::istringstream in("x,d\n0.5,0\n1.5,1\n2.5,1\n");
    return load_dataset(in, std::vector{VariableMeta::continuous("x"), VariableMeta::discrete("d", 2)});
}

}  // namespace

TEST(Io, SchemaRoundTrip) {
    std::vector<VariableMeta> vars{VariableMeta::continuous("x", Bounds{0, 1}), VariableMeta::continuous("y"),
                                   VariableMeta::discrete("d", 3)};
    auto back = io::schema_from_json(io::schema_to_json(vars));
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].bounds, (std::optional<Bounds>{Bounds{0, 1}}));
    EXPECT_FALSE(back[1].bounds.has_value());
    EXPECT_EQ(back[2].arity, 3);
    EXPECT_THROW(io::schema_from_json(json::parse(R"([{"name":"a","kind":"ordinal"}])")), ValidationError);
    EXPECT_THROW(io::schema_from_json(json::parse(R"([{"name":"a","kind":"discrete"}])")), ValidationError);
}

TEST(Io, PolicyRoundTrip) {
    auto d = sample_data();
    NetworkPolicy pol{DiscretizationPolicy::from_thresholds({1.0}, 0.5, 2.5), DiscretizationPolicy::trivial(2)};
    auto j = io::policy_to_json(io::names_of(d), pol);
    EXPECT_EQ(j.at("schema_version"), 1);
    auto back = io::policy_from_json(json::parse(j.dump()), d);
    EXPECT_EQ(back, pol);
}

TEST(Io, PolicyArityMismatchNamesVariable) {
    auto d = sample_data();
    auto j = json::parse(R"({"schema_version":1,"variables":{
        "x":{"thresholds":[1.0],"bounds":[0.5,2.5],"trivial":false},
        "d":{"thresholds":[],"trivial":true,"arity":3}}})");
    try {
        io::policy_from_json(j, d);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("policy arity mismatch for variable 'd'"), std::string::npos);
    }
}

TEST(Io, StructureRoundTripAndErrors) {
    std::vector<std::string> names{"a", "b", "c"};
    auto g = validate_dag({{}, {0}, {0, 1}});
    auto back = io::structure_from_json(io::structure_to_json(names, g), names);
    EXPECT_EQ(back.parent_sets(), g.parent_sets());
    EXPECT_THROW(io::structure_from_json(json::parse(R"({"edges":[["a","z"]]})"), names), ValidationError);
    EXPECT_THROW(io::structure_from_json(json::parse(R"({"edges":[["a","b"],["b","a"]]})"), names), CycleError);
}

TEST(Io, MechanismRoundTrip) {
    auto m = random_mechanism(4, 2, 3, 12);
    auto back = io::mechanism_from_json(json::parse(io::mechanism_to_json(m).dump()));
    EXPECT_EQ(back.names, m.names);
    EXPECT_EQ(back.cpts, m.cpts);
    EXPECT_EQ(back.policies, m.policies);
    EXPECT_EQ(back.structure.parent_sets(), m.structure.parent_sets());
    EXPECT_EQ(back.seed, m.seed);
}

TEST(Io, MalformedJsonIsParseError) {
    std::istringstream in("{not json");
    EXPECT_THROW(io::parse_json(in, "policy"), ParseError);
}

TEST(Io, NumbersRoundTripExactly) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) EXPECT_EQ(std::stod(io::format_double(x)), x);
    std::ostringstream os;
    io::write_csv(os, sample_data());
    EXPECT_EQ(os.str(), "x,d\n0.5,0\n1.5,1\n2.5,1\n");
}

TEST(Io, BreakdownUsesNullForInfinity) {
    ScoreBreakdown b;
    b.continuous = {0.0};
    b.discrete = {-1.0};
    b.log_prior = {-std::numeric_limits<double>::infinity()};
    auto j = io::breakdown_to_json({"x"}, b);
    EXPECT_TRUE(j["nodes"][0]["log_prior"].is_null());
    EXPECT_TRUE(j["total"].is_null());
}
