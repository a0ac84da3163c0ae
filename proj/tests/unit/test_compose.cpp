#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "relaxcert/certify.hpp"
#include "relaxcert/compose.hpp"
#include "relaxcert/errors.hpp"

using namespace relaxcert;
using namespace relaxcert::compose;

TEST_CASE("sampling the relaxed set") {
  const auto p = fixtures::half_disk();
  const auto pts = sample_relaxed(p, 50, 1);
  CHECK(pts.size() == 50);
  for (const auto& x : pts) CHECK(p.handle.in_Xhat(x));
  CHECK(p.bound() == 1.0);
}

TEST_CASE("monotone convex cost transform keeps the certificate") {
  const auto p = fixtures::half_disk();
  const auto q = compose_cost(p, [](double f) { return std::exp(f); });
  const ComplexVec x = ComplexVec::Constant(1, Complex(-0.3, 0.2));
  CHECK(q.handle.cost(x) == doctest::Approx(std::exp(-0.3)));
  const auto pts = sample_relaxed(q, 100, 2);
  const auto rep = certify::check_c1_c3(q, pts);
  CHECK(rep.c1.pass);
  CHECK(rep.c3.pass);
}

TEST_CASE("non-monotone or non-convex transforms are refused") {
  const auto p = fixtures::half_disk();
  CHECK_THROWS_AS(compose_cost(p, [](double f) { return -f; }), ContractError);
  CHECK_THROWS_AS(compose_cost(p, [](double f) { return std::cbrt(f + 2.0); }), ContractError);
}

TEST_CASE("intersection of separable problems") {
  const auto p1 = fixtures::half_disk(2, 0);
  const auto p2 = fixtures::half_disk(2, 1);
  for (const auto mode : {Mode::sum(0.3), Mode::max()}) {
    const auto both = intersect_feasible(p1, p2, {{0}, {1}}, mode);
    const auto pts = sample_relaxed(both, 100, 3);
    REQUIRE_FALSE(pts.empty());
    for (const auto& x : pts) {
      if (both.handle.in_X(x)) continue;
      const auto tr = both.path_factory(x);
      CHECK(both.handle.lyapunov(tr.back()) <= 1e-9);
      CHECK(tr.segments <= both.segment_bound);
    }
    CHECK(certify::check_c1_c3(both, pts).c1.pass);
  }
}

TEST_CASE("intersection refuses coupled blocks") {
  CHECK_THROWS_AS(intersect_feasible(fixtures::half_disk(2, 0), fixtures::leaky_half_disk(),
                                     {{0}, {1}}, Mode::sum(0.5)),
                  CompositionError);
  CHECK_THROWS_AS(intersect_feasible(fixtures::half_disk(2, 0), fixtures::half_disk(2, 1),
                                     {{0}, {0}}, Mode::sum(0.5)),
                  PreconditionError);
}

TEST_CASE("union of problems sharing paths") {
  const auto q1 = fixtures::half_disk();
  const auto q2 = fixtures::capped_half_disk();
  const auto uni = union_feasible(q1, q2, Mode::sum(0.5));
  const ComplexVec arc = ComplexVec::Constant(1, Complex(-std::sqrt(0.75), 0.5));
  const ComplexVec inside = ComplexVec::Constant(1, Complex(-0.2, 0.1));
  CHECK(uni.handle.lyapunov(arc) <= 1e-12);
  CHECK(uni.handle.lyapunov(inside) > 0.0);
  CHECK(uni.handle.in_X(arc));
  CHECK_FALSE(uni.handle.in_X(inside));
}

TEST_CASE("union refuses diverging paths") {
  CHECK_THROWS_AS(union_feasible(fixtures::half_disk(), fixtures::diagonal_half_disk(), Mode::max()),
                  CompositionError);
}
