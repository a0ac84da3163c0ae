#include "relaxcert/conic_admm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relaxcert/errors.hpp"

namespace relaxcert::admm {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// support function of the cone (or box) at y; +inf when unbounded
double support(const Cone& c, const Eigen::VectorXd& y, double polar_tol) {
  switch (c.kind) {
    case Cone::Kind::Zero:
      return 0.0;
    case Cone::Kind::Box: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) s += std::max(c.hi[i] * y[i], c.lo[i] * y[i]);
      return s;
    }
    case Cone::Kind::Soc:
    case Cone::Kind::Psd: {
      // y must lie in the polar cone -K (both cones are self-dual)
      const Eigen::VectorXd gap = y + project(c, -y);
      return inf_norm(gap) <= polar_tol * std::max(1.0, inf_norm(y))
                 ? 0.0
                 : std::numeric_limits<double>::infinity();
    }
  }
  return 0.0;
}

}  // namespace

Cone Cone::zero(Eigen::Index dim) { return {Kind::Zero, dim, {}, {}, 0, false}; }

Cone Cone::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  if (lo.size() != hi.size()) throw StructuralError("box bounds differ in length");
  const auto d = lo.size();
  return {Kind::Box, d, std::move(lo), std::move(hi), 0, false};
}

Cone Cone::soc(Eigen::Index dim) {
  if (dim < 1) throw StructuralError("second-order cone needs dimension >= 1");
  return {Kind::Soc, dim, {}, {}, 0, false};
}

Cone Cone::psd(Eigen::Index order, bool complex_field) {
  return {Kind::Psd, svec_dim(order, complex_field), {}, {}, order, complex_field};
}

Eigen::Index svec_dim(Eigen::Index n, bool complex_field) {
  return complex_field ? n * n : n * (n + 1) / 2;
}

Eigen::VectorXd svec(const Eigen::MatrixXcd& X, bool complex_field) {
  const auto n = X.rows();
  Eigen::VectorXd v(svec_dim(n, complex_field));
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < n; ++i) v[c++] = X(i, i).real();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      v[c++] = kSqrt2 * X(i, j).real();
      if (complex_field) v[c++] = kSqrt2 * X(i, j).imag();
    }
  }
  return v;
}

Eigen::MatrixXcd smat(const Eigen::VectorXd& v, Eigen::Index n, bool complex_field) {
  if (v.size() != svec_dim(n, complex_field)) throw StructuralError("svec length mismatch");
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < n; ++i) X(i, i) = v[c++];
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double re = v[c++] / kSqrt2;
      const double im = complex_field ? v[c++] / kSqrt2 : 0.0;
      X(i, j) = Complex(re, im);
      X(j, i) = Complex(re, -im);
    }
  }
  return X;
}

Eigen::VectorXd project(const Cone& cone, const Eigen::VectorXd& v) {
  switch (cone.kind) {
    case Cone::Kind::Zero:
      return Eigen::VectorXd::Zero(v.size());
    case Cone::Kind::Box:
      return v.cwiseMax(cone.lo).cwiseMin(cone.hi);
    case Cone::Kind::Soc: {
      const double t = v[0];
      const double nu = v.tail(v.size() - 1).norm();
      if (nu <= t) return v;
      if (nu <= -t) return Eigen::VectorXd::Zero(v.size());
      Eigen::VectorXd out(v.size());
      const double a = 0.5 * (t + nu);
      out[0] = a;
      out.tail(v.size() - 1) = (a / nu) * v.tail(v.size() - 1);
      return out;
    }
    case Cone::Kind::Psd: {
      const Eigen::MatrixXcd X = smat(v, cone.order, cone.complex_field);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(X);
      const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
      const Eigen::MatrixXcd& Q = es.eigenvectors();
      const Eigen::MatrixXcd Xp = Q * lam.cast<Complex>().asDiagonal() * Q.adjoint();
      return svec(Xp, cone.complex_field);
    }
  }
  return v;
}

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

Result solve(const ConicProblem& prob, const Options& opts) {
  const auto n = prob.A.cols();
  const auto m = prob.A.rows();
  if (prob.q.size() != n || prob.b.size() != m) throw StructuralError("q or b has the wrong length");
  if (prob.P.size() != 0 && (prob.P.rows() != n || prob.P.cols() != n)) {
    throw StructuralError("P must be n x n");
  }
  Eigen::Index total = 0;
  for (const auto& c : prob.cones) total += c.dim;
  if (total != m) throw StructuralError("cone dimensions do not add up to the rows of A");
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || !(opts.alpha > 0.0 && opts.alpha < 2.0)) {
    throw PreconditionError("solver options need tol > 0, max_iter >= 1 and alpha in (0, 2)");
  }

  const Eigen::MatrixXd P = prob.P.size() ? prob.P : Eigen::MatrixXd::Zero(n, n);
  Result res;
  res.x = Eigen::VectorXd::Zero(n);
  res.s = Eigen::VectorXd::Zero(m);
  res.y = Eigen::VectorXd::Zero(m);

  // cheap infeasibility checks on rows that do not involve x
  {
    Eigen::Index off = 0;
    for (const auto& c : prob.cones) {
      if (c.kind == Cone::Kind::Box) {
        for (Eigen::Index i = 0; i < c.dim; ++i) {
          if (c.lo[i] > c.hi[i]) {
            res.status = Status::Infeasible;
            res.note = "empty box at row " + std::to_string(off + i);
            return res;
          }
        }
      }
      for (Eigen::Index i = 0; i < c.dim; ++i) {
        const auto row = off + i;
        if (prob.A.row(row).cwiseAbs().maxCoeff() > 0.0) continue;
        const double bi = prob.b[row];
        const bool bad = (c.kind == Cone::Kind::Zero && bi != 0.0) ||
                         (c.kind == Cone::Kind::Box && (bi < c.lo[i] || bi > c.hi[i]));
        if (bad) {
          res.status = Status::Infeasible;
          res.note = "row " + std::to_string(row) + " has no variables and an unreachable value";
          return res;
        }
      }
      off += c.dim;
    }
  }

  Eigen::VectorXd rho_scale(m);
  {
    Eigen::Index off = 0;
    for (const auto& c : prob.cones) {
      rho_scale.segment(off, c.dim).setConstant(c.kind == Cone::Kind::Zero ? 1e3 : 1.0);
      off += c.dim;
    }
  }
  double rho = opts.rho;
  Eigen::VectorXd rho_vec = rho * rho_scale;
  Eigen::LLT<Eigen::MatrixXd> kkt;
  auto factor = [&]() {
    Eigen::MatrixXd K = P + opts.sigma * Eigen::MatrixXd::Identity(n, n) +
                        prob.A.transpose() * rho_vec.asDiagonal() * prob.A;
    kkt.compute(K);
    if (kkt.info() != Eigen::Success) throw Error("KKT factorization failed");
  };
  factor();

  auto project_all = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(m);
    Eigen::Index off = 0;
    for (const auto& c : prob.cones) {
      out.segment(off, c.dim) = project(c, v.segment(off, c.dim));
      off += c.dim;
    }
    return out;
  };
  auto support_all = [&](const Eigen::VectorXd& y, double polar_tol) {
    double s = 0.0;
    Eigen::Index off = 0;
    for (const auto& c : prob.cones) {
      s += support(c, y.segment(off, c.dim), polar_tol);
      off += c.dim;
    }
    return s;
  };

  Eigen::VectorXd& x = res.x;
  Eigen::VectorXd& s = res.s;
  Eigen::VectorXd& y = res.y;
  Eigen::VectorXd y_prev = y;

  auto evaluate = [&]() {
    const Eigen::VectorXd Px = P * x;
    res.primal_res = inf_norm(prob.A * x + s - prob.b);
    res.dual_res = inf_norm(Px + prob.q - prob.A.transpose() * y);
    res.primal_obj = 0.5 * x.dot(Px) + prob.q.dot(x);
    res.dual_obj = -0.5 * x.dot(Px) + prob.b.dot(y) - support_all(y, 1e-9);
    res.gap = std::abs(res.primal_obj - res.dual_obj);
  };

  for (long it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    const Eigen::VectorXd rhs =
        opts.sigma * x - prob.q + prob.A.transpose() * (rho_vec.cwiseProduct(prob.b - s) + y);
    const Eigen::VectorXd xt = kkt.solve(rhs);
    const Eigen::VectorXd st = prob.b - prob.A * xt;
    x = opts.alpha * xt + (1.0 - opts.alpha) * x;
    const Eigen::VectorXd v = opts.alpha * st + (1.0 - opts.alpha) * s;
    const Eigen::VectorXd s_new = project_all(v + y.cwiseQuotient(rho_vec));
    y_prev = y;
    y += rho_vec.cwiseProduct(v - s_new);
    s = s_new;

    if (it % 25 != 0 && it != opts.max_iter) continue;
    evaluate();
    if (std::max({res.primal_res, res.dual_res, res.gap}) <= opts.tol) {
      res.status = Status::Optimal;
      return res;
    }

    // primal infeasibility certificate from the dual increment
    const Eigen::VectorXd dy = y - y_prev;
    const double dn = inf_norm(dy);
    if (dn > 1e-12) {
      const Eigen::VectorXd d = dy / dn;
      const double at = inf_norm(prob.A.transpose() * d);
      const double sup = support_all(d, 1e-6);
      if (at <= 1e-8 && std::isfinite(sup) && sup - prob.b.dot(d) < -1e-6) {
        res.status = Status::Infeasible;
        res.note = "dual ray certifies primal infeasibility";
        return res;
      }
    }

    if (opts.adaptive_rho) {
      const Eigen::VectorXd Px = P * x;
      const double ps = std::max({inf_norm(prob.A * x), inf_norm(s), inf_norm(prob.b), 1e-12});
      const double ds = std::max(
          {inf_norm(Px), inf_norm(prob.A.transpose() * y), inf_norm(prob.q), 1e-12});
      const double ratio =
          std::sqrt((res.primal_res / ps) / std::max(res.dual_res / ds, 1e-300));
      if (std::isfinite(ratio) && (ratio > 5.0 || ratio < 0.2)) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        rho_vec = rho * rho_scale;
        factor();
      }
    }
  }
  evaluate();
  res.status = Status::MaxIter;
  return res;
}

}  // namespace relaxcert::admm
