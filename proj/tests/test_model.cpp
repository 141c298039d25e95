#include <gtest/gtest.h>

#include "support.hpp"

using namespace mqi;

namespace {

const char* kCounterexample = R"({
  "n": 1, "m1": 1, "m2": 1, "N": 2,
  "A": 2, "B1": 0.4, "B2": 0.1, "Sigma0": 1, "SigmaT": 1,
  "zero_sum": false,
  "cost1": {"M": 1, "R": 1, "V": 1},
  "cost2": {"M": 70, "R": 1, "V": 1},
  "structure1": "FI", "structure2": "FI"
})";

std::string with(const std::string& field, const std::string& value) {
  auto j = json::parse(kCounterexample);
  j[field] = json::parse(value);
  return j.dump();
}

std::string error_of(const std::string& text) {
  try {
    parse_instance(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParseInstance, CounterexampleFile) {
  const ProblemInstance p = parse_instance(kCounterexample);
  EXPECT_EQ(p.n, 1);
  EXPECT_EQ(p.m1, 1);
  EXPECT_EQ(p.m2, 1);
  EXPECT_EQ(p.N, 2);
  EXPECT_DOUBLE_EQ(p.A(0, 0), 2.0);
  ASSERT_EQ(p.cost2.M.size(), 2u);
  EXPECT_DOUBLE_EQ(p.cost2.M[1](0, 0), 70.0);
  EXPECT_FALSE(p.cost1.M0.has_value());
}

TEST(ParseInstance, ZeroSigma0IsNotPositiveDefinite) {
  const std::string msg = error_of(with("Sigma0", "0"));
  EXPECT_NE(msg.find("Sigma0"), std::string::npos) << msg;
  EXPECT_NE(msg.find("not positive definite"), std::string::npos) << msg;
  EXPECT_NE(msg.find("min eigenvalue"), std::string::npos) << msg;
}

TEST(ParseInstance, ZeroSumDerivesCost2) {
  const ProblemInstance p = parse_instance(R"({
    "n": 2, "m1": 1, "m2": 1, "N": 10,
    "A": [[1,0],[0,1]], "B1": [[-1],[1]], "B2": [[0],[-1]],
    "Sigma0": [[1,0],[0,1]], "SigmaT": [[1,0],[0,1]], "zero_sum": true,
    "cost1": {"M": [[2,0],[0,-1]], "R": 1, "V": -2},
    "structure1": "FI", "structure2": "FI"})");
  EXPECT_TRUE(p.zero_sum);
  EXPECT_EQ(p.cost2, p.cost1.negated());
  EXPECT_DOUBLE_EQ(p.cost2.V[9](0, 0), 2.0);
  EXPECT_EQ(p, instances::zero_sum());
}

TEST(ParseInstance, SchemaErrorsNameTheField) {
  auto j = json::parse(kCounterexample);
  j.erase("B2");
  EXPECT_NE(error_of(j.dump()).find("'B2'"), std::string::npos);
  EXPECT_NE(error_of(with("bogus", "1")).find("bogus"), std::string::npos);
  j = json::parse(kCounterexample);
  j.erase("cost2");
  EXPECT_NE(error_of(j.dump()).find("cost2"), std::string::npos);
  EXPECT_NE(error_of("{not json").find("malformed"), std::string::npos);
}

TEST(ParseInstance, DimensionMismatchNamesBothArrays) {
  const std::string msg = error_of(with("B1", "[[1],[2]]"));
  EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
  EXPECT_NE(msg.find("B1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("A"), std::string::npos) << msg;
}

TEST(ParseInstance, ListLengthMustMatchHorizon) {
  const std::string msg = error_of(with("SigmaT", "[1, 1, 1]"));
  EXPECT_NE(msg.find("SigmaT"), std::string::npos) << msg;
}

TEST(ParseInstance, BroadcastMatchesExplicitLists) {
  auto j = json::parse(kCounterexample);
  j["SigmaT"] = json::parse("[[[1]], [[1]]]");
  j["cost1"]["M"] = json::parse("[1, 1]");
  const ProblemInstance a = parse_instance(kCounterexample);
  const ProblemInstance b = parse_instance(j.dump());
  EXPECT_EQ(a, b);
  const LiftedGame la = lift(a), lb = lift(b);
  EXPECT_EQ(la.P12, lb.P12);
  EXPECT_EQ(la.Mcal[0], lb.Mcal[0]);
  EXPECT_EQ(la.W, lb.W);
}

TEST(ParseInstance, StructureForms) {
  auto j = json::parse(kCounterexample);
  j["structure1"] = json::parse(R"({"kind":"explicit","mask":[[1,0,0],[1,1,0]]})");
  j["structure2"] = json::parse(R"({"kind":"DP1","own":[0]})");
  const ProblemInstance p = parse_instance(j.dump());
  EXPECT_EQ(p.structure1.kind, StructureKind::explicit_mask);
  EXPECT_TRUE(p.structure1.mask(1, 1));
  EXPECT_FALSE(p.structure1.mask(0, 1));
  EXPECT_EQ(p.structure2.kind, StructureKind::decentralized);

  j["structure1"] = json::parse(R"({"kind":"explicit","mask":[[1,0],[1,1]]})");
  EXPECT_NE(error_of(j.dump()).find("structure1.mask"), std::string::npos);
  j["structure1"] = json::parse(R"({"kind":"1SDIS","own":[3]})");
  EXPECT_NE(error_of(j.dump()).find("structure1.own"), std::string::npos);
  j["structure1"] = "DIS";
  EXPECT_FALSE(error_of(j.dump()).empty());
}

TEST(Validate, CounterexampleIsValid) {
  EXPECT_TRUE(validate(parse_instance(kCounterexample)).ok());
  EXPECT_TRUE(validate(instances::counterexample()).ok());
  for (auto s : instances::network_structures())
    EXPECT_TRUE(validate(instances::zero_sum(s)).ok());
}

TEST(Validate, AsymmetricM1GivesOneViolation) {
  ProblemInstance p = instances::zero_sum();
  p.zero_sum = false;
  p.cost1.M[0](0, 1) = 0.5;
  const auto r = validate(p);
  ASSERT_EQ(r.violations.size(), 1u) << r.joined();
  EXPECT_NE(r.violations[0].find("cost1.M(1)"), std::string::npos);
}

TEST(Validate, HorizonMustBePositive) {
  ProblemInstance p = instances::counterexample();
  p.N = 0;
  const auto r = validate(p);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.violations[0], "horizon must be >= 1");
}

TEST(Validate, SignsOfCostsAreFree) {
  ProblemInstance p = instances::counterexample();
  p.cost1.V[0] = -p.cost1.V[0];
  EXPECT_TRUE(validate(p).ok());
}

TEST(Validate, ZeroSumRequiresNegatedCost) {
  ProblemInstance p = instances::zero_sum();
  p.cost2.R[3](0, 0) = 5.0;
  EXPECT_FALSE(validate(p).ok());
}

TEST(Serialize, CounterexampleRoundTrip) {
  const ProblemInstance p = instances::counterexample();
  EXPECT_EQ(parse_instance(serialize_instance(p)), p);
}

TEST(Serialize, ZeroSumOmitsCost2) {
  const json j = json::parse(serialize_instance(instances::zero_sum()));
  EXPECT_TRUE(j.at("zero_sum").get<bool>());
  EXPECT_FALSE(j.contains("cost2"));
}

TEST(Serialize, ExplicitMaskEmbedsBooleans) {
  ProblemInstance p = instances::counterexample();
  BoolMatrix mask(2, 3);
  mask << true, false, false, false, true, false;
  p.structure1 = StructureSpec::explicit_mask(mask);
  const json j = json::parse(serialize_instance(p));
  EXPECT_EQ(j["structure1"]["mask"], json::parse("[[1,0,0],[0,1,0]]"));
  EXPECT_EQ(parse_instance(j.dump()), p);
}

TEST(Serialize, RandomRoundTrip) {
  testkit::Rng rng(11);
  for (int i = 0; i < 25; ++i) {
    const ProblemInstance p = testkit::random_instance(rng, true);
    ASSERT_TRUE(validate(p).ok()) << validate(p).joined();
    EXPECT_EQ(parse_instance(serialize_instance(p)), p);
  }
}
