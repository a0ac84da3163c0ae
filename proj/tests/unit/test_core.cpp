#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "relaxcert/core.hpp"
#include "relaxcert/errors.hpp"

using namespace relaxcert;

namespace {
ComplexVec vec(std::initializer_list<Complex> v) {
  ComplexVec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto c : v) x[i++] = c;
  return x;
}
}  // namespace

TEST_CASE("linear path samples and evaluation") {
  const auto a = vec({{0, 0}, {1, 1}});
  const auto b = vec({{2, 0}, {1, -1}});
  const auto tr = make_linear_path(a, b);
  CHECK(tr.size() == kSamplesPerSegment);
  CHECK(tr.segments == 1);
  CHECK(tr.params.front() == 0.0);
  CHECK(tr.params.back() == 1.0);
  CHECK((evaluate(tr, 0.25) - (0.75 * a + 0.25 * b)).norm() < 1e-14);
  CHECK_NOTHROW(tr.validate());
}

TEST_CASE("constant path") {
  const auto x = vec({{1, 2}});
  const auto tr = make_constant_path(x);
  CHECK(tr.size() == 2);
  CHECK(partition_length(tr) == 0.0);
  CHECK((evaluate(tr, 0.7) - x).norm() == 0.0);
}

TEST_CASE("validate rejects malformed traces") {
  PathTrace tr = make_linear_path(vec({{0, 0}}), vec({{1, 0}}), 5);
  tr.params[2] = tr.params[1];
  CHECK_THROWS_AS(tr.validate(), PreconditionError);
}

TEST_CASE("concatenate joins legs and rejects gaps") {
  const auto a = vec({{0, 0}}), b = vec({{1, 0}}), c = vec({{1, 1}});
  std::vector<PathTrace> legs{make_linear_path(a, b, 11), make_linear_path(b, c, 11)};
  const auto tr = concatenate(legs);
  CHECK(tr.segments == 2);
  CHECK(tr.size() == 21);
  CHECK((tr.back() - c).norm() < 1e-15);
  CHECK(partition_length(tr) == doctest::Approx(2.0));
  std::vector<PathTrace> broken{make_linear_path(a, b, 11), make_linear_path(c, a, 11)};
  CHECK_THROWS_AS(concatenate(broken), PreconditionError);
}

TEST_CASE("partition length is additive") {
  const auto tr = make_linear_path(vec({{0, 0}}), vec({{3, -4}}), 31);
  CHECK(partition_length(tr) == doctest::Approx(5.0));
  CHECK(partition_length(tr, 0.0, 0.3) + partition_length(tr, 0.3, 1.0) ==
        doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("arc-length reparameterization is idempotent") {
  std::vector<PathTrace> legs{make_linear_path(vec({{0, 0}}), vec({{1, 0}}), 5),
                              make_linear_path(vec({{1, 0}}), vec({{1, 3}}), 9)};
  const auto tr = concatenate(legs);
  const auto r1 = arc_length_reparameterize(tr);
  const auto r2 = arc_length_reparameterize(r1);
  REQUIRE(r1.size() == r2.size());
  CHECK(r1.params[4] == doctest::Approx(0.25));
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(std::abs(r1.params[i] - r2.params[i]) < 1e-12);
}

TEST_CASE("norm_m axioms") {
  const auto x = vec({{1, -2}, {0.5, 0}});
  CHECK(norm_m(x) == doctest::Approx(3.5));
  CHECK(norm_m(-2.0 * x) == doctest::Approx(7.0));
  CHECK(norm_m(ComplexVec::Zero(3)) == 0.0);
  const auto y = vec({{-1, 2}, {1, 1}});
  CHECK(norm_m(x + y) <= norm_m(x) + norm_m(y));
}

TEST_CASE("quasi-random points are deterministic and in the unit cube") {
  const auto p = quasi_random_points(3, 50, 7);
  const auto q = quasi_random_points(3, 50, 7);
  REQUIRE(p.size() == 50);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK((p[i] - q[i]).norm() == 0.0);
    CHECK(p[i].minCoeff() >= 0.0);
    CHECK(p[i].maxCoeff() <= 1.0);
  }
}

TEST_CASE("piecewise-linear family proxy") {
  std::vector<PathTrace> ok{make_linear_path(vec({{0, 0}}), vec({{1, 0}}), 11)};
  CHECK(check_piecewise_linear_family(ok, 1).ok);
  CHECK_FALSE(check_piecewise_linear_family(ok, 1, 1e-9, 0.5).ok);
  PathTrace bent = ok.front();
  bent.points[5][0] += Complex(0.0, 0.1);
  std::vector<PathTrace> bad{bent};
  const auto rep = check_piecewise_linear_family(bad, 1);
  CHECK_FALSE(rep.ok);
  CHECK(rep.witness_trace == 0);
}

TEST_CASE("annotate and csv export") {
  ProblemHandle h;
  h.cost = [](const ComplexVec& x) { return x[0].real(); };
  h.residual_X = [](const ComplexVec&) { return 0.0; };
  h.residual_Xhat = [](const ComplexVec&) { return 0.0; };
  auto tr = make_linear_path(vec({{1, 0}}), vec({{0, 0}}), 3);
  annotate(tr, h);
  CHECK(tr.cost == std::vector<double>{1.0, 0.5, 0.0});
  CHECK(tr.lyapunov.empty());
  std::ostringstream os;
  write_trace_csv(os, tr, default_layout(1));
  const auto s = os.str();
  CHECK(s.rfind("t,f,V,x0_re,x0_im\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}

TEST_CASE("handle invariants") {
  ProblemHandle h;
  h.cost = [](const ComplexVec& x) { return x[0].real(); };
  h.residual_Xhat = [](const ComplexVec& x) { return std::max(0.0, std::abs(x[0]) - 1.0); };
  h.residual_X = [](const ComplexVec& x) { return std::abs(std::abs(x[0]) - 1.0); };
  h.lyapunov = [](const ComplexVec& x) { return 1.0 - std::abs(x[0]); };
  CHECK_FALSE(handle_invariant_violation(h, vec({{1, 0}})).has_value());
  CHECK_FALSE(handle_invariant_violation(h, vec({{0.5, 0}})).has_value());
  h.lyapunov = [](const ComplexVec&) { return 0.0; };
  CHECK(handle_invariant_violation(h, vec({{0.5, 0}})).has_value());
}
