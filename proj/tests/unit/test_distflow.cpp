#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "relaxcert/distflow.hpp"
#include "relaxcert/errors.hpp"
#include "relaxcert/generate.hpp"

using namespace relaxcert;
using namespace relaxcert::distflow;

namespace {
RadialNetwork three_bus() {
  std::vector<Bus> buses{{0, 1.0, 1.0, std::nullopt, {5.0, 5.0}},
                         {1, 0.9, 1.1, std::nullopt, {0.5, 0.3}},
                         {2, 0.9, 1.1, std::nullopt, {0.4, 0.2}}};
  std::vector<Line> lines{{0, 1, {0.02, 0.04}, 4.0}, {1, 2, {0.03, 0.05}, 3.0}};
  return RadialNetwork(buses, lines, 0);
}
}  // namespace

TEST_CASE("network indexing") {
  const auto net = three_bus();
  CHECK(net.num_buses() == 3);
  CHECK(net.root() == 0);
  CHECK(net.edge_name(1) == "1->2");
  CHECK(net.bus_index(2) == 2);
  CHECK_THROWS_AS(net.bus_index(9), StructuralError);
  CHECK(net.effective_s_min(1) == Complex(-kBigBox, -kBigBox));
}

TEST_CASE("flatten round trip") {
  const auto net = three_bus();
  std::mt19937_64 rng(1);
  const auto x = random_exact_point(net, rng);
  const auto y = unflatten(net, flatten(x));
  CHECK((flatten(y) - flatten(x)).norm() == 0.0);
  CHECK_THROWS_AS(unflatten(net, ComplexVec::Zero(3)), StructuralError);
}

TEST_CASE("forward substitution gives exact points") {
  const auto net = three_bus();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_exact_point(net, rng, 0.1);
    const auto r = pf_residuals(net, x);
    CHECK(r.ohm.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.cone_eq.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.balance.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("inflation adds cone slack and keeps the affine equations") {
  const auto net = three_bus();
  std::mt19937_64 rng(3);
  const auto x = random_exact_point(net, rng, 0.1);
  const auto y = inflate_to_slack(net, x, 0, 0.01);
  const auto r = pf_residuals(net, y);
  CHECK(r.cone_eq[0] == doctest::Approx(0.01));
  CHECK(std::abs(r.cone_eq[1]) < 1e-12);
  CHECK(r.ohm.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.balance.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("relaxed points lie in the relaxed set only") {
  const auto c = fixtures::random_case(5);
  const auto pts = relaxed_points(c.net, 10, 5);
  REQUIRE(pts.size() == 10);
  for (const auto& x : pts) {
    CHECK(residual_Xhat(c.net, x) <= kMembershipTol);
    CHECK(residual_X(c.net, x) > kMembershipTol);
  }
  const auto again = relaxed_points(c.net, 10, 5);
  CHECK((flatten(again[3]) - flatten(pts[3])).norm() == 0.0);
}

TEST_CASE("cost evaluation and strong increase constant") {
  const auto cost = OpfCost::linear(2, 1.0, 2.0);
  ComplexVec s(2);
  s << Complex(1, 1), Complex(-1, 0.5);
  CHECK(cost(s) == doctest::Approx(0.0 + 3.0));
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
  CHECK(strong_increase_constant(cost, lo, lo) == doctest::Approx(1.0));
}

TEST_CASE("assumption checks") {
  const auto net = three_bus();
  CHECK(validate_assumptions(net, OpfCost::linear(3, 1.0, 1.0)).all_pass());
  const auto bad_cost = validate_assumptions(net, OpfCost::linear(3, -1.0, 1.0));
  CHECK_FALSE(bad_cost.all_pass());

  auto lines = net.lines();
  lines[1].l_max = 1000.0;
  const RadialNetwork hot(net.buses(), lines, 0);
  const auto rep = validate_assumptions(hot, OpfCost::linear(3, 1.0, 1.0));
  CHECK_FALSE(rep.all_pass());
  bool named = false;
  for (const auto& chk : rep.checks) {
    if (!chk.pass && chk.witness_edge == 1) named = true;
  }
  CHECK(named);
  CHECK(rep.lower_injection_unbounded);
}

TEST_CASE("malformed networks are rejected") {
  std::vector<Bus> buses{{0, 1.0, 1.0, std::nullopt, {1, 1}}, {1, 0.9, 1.1, std::nullopt, {1, 1}}};
  std::vector<Line> loop{{0, 1, {0.1, 0.1}, 1.0}, {1, 0, {0.1, 0.1}, 1.0}};
  const RadialNetwork cyc(buses, loop, 0);
  const auto rep = validate_assumptions(cyc, OpfCost::linear(2, 1.0, 1.0));
  REQUIRE(rep.find("tree") != nullptr);
  CHECK_FALSE(rep.find("tree")->pass);
  std::vector<Line> dangling{{0, 7, {0.1, 0.1}, 1.0}};
  CHECK_THROWS_AS(RadialNetwork(buses, dangling, 0), StructuralError);
}
