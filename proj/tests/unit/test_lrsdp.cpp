#include <random>

#include "doctest.h"
#include "relaxcert/errors.hpp"
#include "relaxcert/lrsdp.hpp"

using namespace relaxcert;
using namespace relaxcert::lrsdp;

TEST_CASE("instance validation") {
  LrsdpInstance inst;
  inst.C = Matrix::Identity(2, 2);
  inst.A = {Matrix::Identity(2, 2)};
  inst.b = Eigen::VectorXd::Constant(1, 2.0);
  CHECK_NOTHROW(inst.validate());
  CHECK(inst.is_real());
  inst.C(0, 1) = 1.0;
  try {
    inst.validate();
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("[0][1]") != std::string::npos);
  }
  inst.C = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(inst.validate(), StructuralError);
}

TEST_CASE("dimension condition") {
  LrsdpInstance inst;
  inst.C = Matrix::Identity(4, 4);
  inst.A = {Matrix::Identity(4, 4)};
  inst.b = Eigen::VectorXd::Constant(1, 1.0);
  inst.r = 1;
  CHECK(inst.dimension_condition());
  inst.A.assign(3, Matrix::Identity(4, 4));
  inst.b = Eigen::VectorXd::Constant(3, 1.0);
  CHECK_FALSE(inst.dimension_condition());
}

TEST_CASE("psd point rank and tail") {
  Matrix X = Matrix::Zero(3, 3);
  X(0, 0) = 2.0;
  X(1, 1) = 1.0;
  const auto p = PsdPoint::from(X);
  CHECK(p.rank() == 2);
  LrsdpInstance inst;
  inst.C = Matrix::Identity(3, 3);
  inst.A = {Matrix::Identity(3, 3)};
  inst.b = Eigen::VectorXd::Constant(1, 3.0);
  inst.r = 1;
  CHECK(lyapunov_tail(inst, p) == doctest::Approx(1.0));
  X(2, 2) = -0.5;
  CHECK_THROWS_AS(PsdPoint::from(X), PreconditionError);
}

TEST_CASE("flatten round trip and handle") {
  std::mt19937_64 rng(1);
  const auto g = random_instance(rng, 3, 2, 1, true);
  CHECK_FALSE(g.inst.is_real());
  CHECK((unflatten(flatten(g.X0), 3) - g.X0).norm() == 0.0);
  const auto h = lrsdp_handle(g.inst);
  const auto x = flatten(g.X0);
  CHECK(h.in_Xhat(x));
  CHECK_FALSE(h.in_X(x));
  CHECK(h.cost(x) == doctest::Approx(cost(g.inst, g.X0)));
  CHECK(constraint_residual(g.inst, g.X0) < 1e-10);
}

TEST_CASE("nullspace direction preserves cost and constraints") {
  std::mt19937_64 rng(2);
  const auto g = random_instance(rng, 4, 1, 1);
  const auto p = PsdPoint::from(g.X0);
  const auto Y = nullspace_direction(g.inst, p.eigenvectors, p.eigenvalues);
  REQUIRE(Y.has_value());
  const Matrix D = p.eigenvectors * *Y * p.eigenvectors.adjoint();
  CHECK(std::abs(inner(g.inst.C, D)) < 1e-10);
  CHECK(std::abs(inner(g.inst.A[0], D)) < 1e-10);
  CHECK(hermitian_defect(*Y) < 1e-12);
}

TEST_CASE("rank reduction reaches the target rank") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const std::size_t n = 3 + static_cast<std::size_t>(i % 3);
    const auto g = random_instance(rng, n, 1, 1, i % 2 == 1);
    const auto red = reduce_rank_path(g.inst, PsdPoint::from(g.X0));
    CHECK(red.initial_rank == n);
    CHECK(red.final_rank <= 1);
    CHECK(red.active_stages <= n - 1);
    CHECK(red.max_cost_drift <= 1e-8 * (1.0 + std::abs(cost(g.inst, g.X0))));
    CHECK(red.max_constraint_drift <= 1e-8);
    CHECK(red.min_eigenvalue >= -1e-8);
    for (std::size_t k = 1; k < red.trace.size(); ++k) {
      CHECK(red.trace.lyapunov[k] <= red.trace.lyapunov[k - 1] + 1e-12);
    }
  }
}

TEST_CASE("reduction from a low-rank start is constant") {
  std::mt19937_64 rng(4);
  auto g = random_instance(rng, 3, 1, 2);
  const auto red = reduce_rank_path(g.inst, PsdPoint::from(g.X0));
  CHECK(red.final_rank <= 2);
  g.inst.r = 3;
  const auto none = reduce_rank_path(g.inst, PsdPoint::from(g.X0));
  CHECK(none.active_stages == 0);
  CHECK(none.trace.size() == 2);
}

TEST_CASE("infeasible start and stuck reduction") {
  std::mt19937_64 rng(5);
  const auto g = random_instance(rng, 3, 1, 1);
  CHECK_THROWS_AS(reduce_rank_path(g.inst, PsdPoint::from(2.0 * g.X0)), PreconditionError);

  LrsdpInstance sq;
  sq.C = Matrix::Zero(2, 2);
  sq.C(0, 1) = sq.C(1, 0) = 1.0;
  Matrix E11 = Matrix::Zero(2, 2), E22 = Matrix::Zero(2, 2);
  E11(0, 0) = 1.0;
  E22(1, 1) = 1.0;
  sq.A = {E11, E22};
  sq.b = Eigen::VectorXd::Ones(2);
  sq.r = 1;
  CHECK_THROWS_AS(reduce_rank_path(sq, PsdPoint::from(Matrix::Identity(2, 2))), ReductionStuck);
}
