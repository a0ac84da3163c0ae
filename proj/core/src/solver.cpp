#include "relaxcert/solver.hpp"

#include <algorithm>
#include <cmath>

#include "relaxcert/errors.hpp"

namespace relaxcert::solver {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

Status convert(admm::Status s) {
  switch (s) {
    case admm::Status::Optimal:
      return Status::Optimal;
    case admm::Status::Infeasible:
      return Status::Infeasible;
    case admm::Status::MaxIter:
      return Status::MaxIter;
  }
  return Status::MaxIter;
}

SolveInfo make_info(const admm::Result& r, const SolverOptions& o) {
  SolveInfo info;
  info.status = convert(r.status);
  if (info.status == Status::MaxIter && std::max({r.primal_res, r.dual_res, r.gap}) <= o.tol) {
    info.status = Status::Optimal;
  }
  info.objective = r.primal_obj;
  info.primal_res = r.primal_res;
  info.dual_res = r.dual_res;
  info.gap = r.gap;
  info.primal_obj = r.primal_obj;
  info.dual_obj = r.dual_obj;
  info.iterations = r.iterations;
  info.options = o;
  info.note = r.note;
  return info;
}

admm::Options admm_options(const SolverOptions& o) {
  admm::Options a;
  a.tol = o.tol;
  a.max_iter = o.max_iter;
  a.alpha = o.relaxation_parameter;
  return a;
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "optimal";
    case Status::MaxIter:
      return "max_iter";
    case Status::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

OpfSolveResult solve_opf_relaxation(const distflow::RadialNetwork& net,
                                    const distflow::OpfCost& cost, const SolverOptions& options) {
  const auto report = distflow::validate_assumptions(net, cost);
  for (const char* name : {"tree", "impedance_positive", "cost_strongly_increasing"}) {
    const auto* c = report.find(name);
    if (c && !c->pass) throw PreconditionError("assumption '" + std::string(name) + "' fails: " + c->detail);
  }

  const auto N = static_cast<Eigen::Index>(net.num_buses());
  const auto E = static_cast<Eigen::Index>(net.num_lines());
  auto ip = [&](Eigen::Index j) { return j; };
  auto iq = [&](Eigen::Index j) { return N + j; };
  auto iv = [&](Eigen::Index j) { return 2 * N + j; };
  auto il = [&](Eigen::Index e) { return 3 * N + e; };
  auto iP = [&](Eigen::Index e) { return 3 * N + E + e; };
  auto iQ = [&](Eigen::Index e) { return 3 * N + 2 * E + e; };
  const Eigen::Index nx = 3 * N + 3 * E;
  const Eigen::Index n_zero = E + 2 * N;
  const Eigen::Index n_box = 3 * N + E;
  const Eigen::Index rows = n_zero + n_box + 4 * E;

  admm::ConicProblem prob;
  prob.P = Eigen::MatrixXd::Zero(nx, nx);
  prob.q = Eigen::VectorXd::Zero(nx);
  for (Eigen::Index j = 0; j < N; ++j) {
    prob.q[ip(j)] = cost.cp[j];
    prob.q[iq(j)] = cost.cq[j];
    prob.P(ip(j), ip(j)) = 2.0 * cost.qp[j];
    prob.P(iq(j), iq(j)) = 2.0 * cost.qq[j];
  }
  prob.A = Eigen::MatrixXd::Zero(rows, nx);
  prob.b = Eigen::VectorXd::Zero(rows);

  for (Eigen::Index e = 0; e < E; ++e) {
    const auto eu = static_cast<std::size_t>(e);
    const auto j = static_cast<Eigen::Index>(net.from(eu));
    const auto k = static_cast<Eigen::Index>(net.to(eu));
    const Complex z = net.line(eu).z;
    prob.A(e, iv(j)) = 1.0;
    prob.A(e, iv(k)) = -1.0;
    prob.A(e, iP(e)) = -2.0 * z.real();
    prob.A(e, iQ(e)) = -2.0 * z.imag();
    prob.A(e, il(e)) = std::norm(z);
    const Eigen::Index rp_j = E + j, rq_j = E + N + j, rp_k = E + k, rq_k = E + N + k;
    prob.A(rp_j, iP(e)) -= 1.0;
    prob.A(rq_j, iQ(e)) -= 1.0;
    prob.A(rp_k, iP(e)) += 1.0;
    prob.A(rq_k, iQ(e)) += 1.0;
    prob.A(rp_k, il(e)) -= z.real();
    prob.A(rq_k, il(e)) -= z.imag();
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    prob.A(E + j, ip(j)) += 1.0;
    prob.A(E + N + j, iq(j)) += 1.0;
  }
  prob.cones.push_back(admm::Cone::zero(n_zero));

  Eigen::VectorXd lo(n_box), hi(n_box);
  Eigen::Index row = n_zero;
  Eigen::Index c = 0;
  auto add_box = [&](Eigen::Index var, double l, double h) {
    prob.A(row++, var) = -1.0;
    lo[c] = l;
    hi[c] = h;
    ++c;
  };
  for (Eigen::Index j = 0; j < N; ++j) {
    const auto& bus = net.bus(static_cast<std::size_t>(j));
    add_box(iv(j), bus.v_min, bus.v_max);
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Complex smin = net.effective_s_min(ju);
    add_box(ip(j), smin.real(), net.bus(ju).s_max.real());
    add_box(iq(j), smin.imag(), net.bus(ju).s_max.imag());
  }
  for (Eigen::Index e = 0; e < E; ++e) add_box(il(e), 0.0, net.line(static_cast<std::size_t>(e)).l_max);
  prob.cones.push_back(admm::Cone::box(lo, hi));

  for (Eigen::Index e = 0; e < E; ++e) {
    const auto j = static_cast<Eigen::Index>(net.from(static_cast<std::size_t>(e)));
    const double h = 1.0 / kSqrt2;
    prob.A(row, iv(j)) = -h;
    prob.A(row, il(e)) = -h;
    ++row;
    prob.A(row, iv(j)) = -h;
    prob.A(row, il(e)) = h;
    ++row;
    prob.A(row++, iP(e)) = -kSqrt2;
    prob.A(row++, iQ(e)) = -kSqrt2;
    prob.cones.push_back(admm::Cone::soc(4));
  }

  // the cone residual in the original coordinates scales with |S|, so the
  // splitting runs to a tighter target than the reported tolerance
  auto ao = admm_options(options);
  ao.tol = options.tol * 1e-2;
  const auto r = admm::solve(prob, ao);
  OpfSolveResult out;
  out.info = make_info(r, options);
  out.point.s = ComplexVec(N);
  out.point.v = Eigen::VectorXd(N);
  out.point.ell = Eigen::VectorXd(E);
  out.point.S = ComplexVec(E);
  for (Eigen::Index j = 0; j < N; ++j) {
    out.point.s[j] = Complex(r.x[ip(j)], r.x[iq(j)]);
    out.point.v[j] = r.x[iv(j)];
    const auto ju = static_cast<std::size_t>(j);
    if (!net.bus(ju).s_min) {
      const double edge = -distflow::kBigBox * (1.0 - 1e-6);
      if (r.x[ip(j)] <= edge || r.x[iq(j)] <= edge) out.big_box_active = true;
    }
  }
  for (Eigen::Index e = 0; e < E; ++e) {
    out.point.ell[e] = r.x[il(e)];
    out.point.S[e] = Complex(r.x[iP(e)], r.x[iQ(e)]);
  }
  if (out.big_box_active) out.info.note += (out.info.note.empty() ? "" : "; ") + std::string("substitute lower injection box is active");
  return out;
}

SdpSolveResult solve_lrsdp_relaxation(const lrsdp::LrsdpInstance& inst,
                                      const SolverOptions& options) {
  inst.validate();
  const bool real_field = inst.is_real();
  const auto n = static_cast<Eigen::Index>(inst.n());
  const auto m = static_cast<Eigen::Index>(inst.m());
  const auto d = admm::svec_dim(n, !real_field);

  admm::ConicProblem prob;
  prob.q = admm::svec(inst.C, !real_field);
  prob.A = Eigen::MatrixXd::Zero(m + d, d);
  prob.b = Eigen::VectorXd::Zero(m + d);
  for (Eigen::Index i = 0; i < m; ++i) {
    prob.A.row(i) = admm::svec(inst.A[static_cast<std::size_t>(i)], !real_field).transpose();
    prob.b[i] = inst.b[i];
  }
  prob.A.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
  prob.cones.push_back(admm::Cone::zero(m));
  prob.cones.push_back(admm::Cone::psd(n, !real_field));

  const auto r = admm::solve(prob, admm_options(options));
  SdpSolveResult out;
  out.info = make_info(r, options);
  if (r.status == admm::Status::Infeasible) {
    out.point = lrsdp::PsdPoint::from(lrsdp::Matrix::Zero(n, n));
    return out;
  }

  // psd by construction: the cone block of s is a projection
  lrsdp::Matrix X = admm::smat(r.s.tail(d), n, !real_field);
  auto P = lrsdp::PsdPoint::from(X);
  if (out.info.status == Status::Optimal) {
    // truncate negligible eigenvalues, then restore the constraints with the
    // smallest correction inside the remaining range space
    const auto k = static_cast<Eigen::Index>(P.rank());
    const lrsdp::Matrix U = P.eigenvectors.leftCols(k);
    const Eigen::VectorXd lam = P.eigenvalues.head(k);
    const lrsdp::Matrix Xk = U * lam.cast<Complex>().asDiagonal() * U.adjoint();
    const auto dk = admm::svec_dim(k, !real_field);
    Eigen::MatrixXd M(m, dk);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& Ai = inst.A[static_cast<std::size_t>(i)];
      M.row(i) = admm::svec(U.adjoint() * Ai * U, !real_field).transpose();
      rhs[i] = inst.b[i] - lrsdp::inner(Ai, Xk);
    }
    const Eigen::VectorXd delta = M.completeOrthogonalDecomposition().solve(rhs);
    const lrsdp::Matrix inner_new = lam.cast<Complex>().asDiagonal().toDenseMatrix() +
                                    admm::smat(delta, k, !real_field);
    Eigen::SelfAdjointEigenSolver<lrsdp::Matrix> es(inner_new);
    if (k > 0 && es.eigenvalues().minCoeff() > 0.0) {
      lrsdp::Matrix Xp = U * inner_new * U.adjoint();
      Xp = 0.5 * (Xp + Xp.adjoint());
      if (lrsdp::constraint_residual(inst, Xp) <= lrsdp::constraint_residual(inst, X)) {
        P = lrsdp::PsdPoint::from(Xp);
        out.info.note += (out.info.note.empty() ? "" : "; ") + std::string("polished onto constraints");
      }
    }
  }
  out.point = P;
  out.info.objective = lrsdp::cost(inst, P.X);
  return out;
}

}  // namespace relaxcert::solver
