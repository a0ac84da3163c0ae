#include "relaxcert/lrsdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relaxcert/errors.hpp"

namespace relaxcert::lrsdp {

namespace {

constexpr double kRankRel = 1e-8;
constexpr double kPsdTol = 1e-8;

struct Eig {
  Eigen::VectorXd values;  // decreasing
  Matrix vectors;
};

Eig eig_desc(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.adjoint()));
  const auto k = M.rows();
  Eig out{Eigen::VectorXd(k), Matrix(k, k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    out.values[i] = es.eigenvalues()[k - 1 - i];
    out.vectors.col(i) = es.eigenvectors().col(k - 1 - i);
  }
  return out;
}

double tail_sum(const Eigen::VectorXd& desc, std::size_t r) {
  double s = 0.0;
  for (Eigen::Index i = static_cast<Eigen::Index>(r); i < desc.size(); ++i) s += desc[i];
  return std::max(s, 0.0);
}

double tail_of(const Matrix& X, std::size_t r) { return tail_sum(eig_desc(X).values, r); }

bool is_real_matrix(const Matrix& M) { return M.imag().cwiseAbs().maxCoeff() == 0.0; }

// real coefficients of tr(M Y) in the Hermitian (or symmetric) basis
Eigen::RowVectorXd basis_row(const Matrix& Mt, bool real_field) {
  const auto k = Mt.rows();
  const auto dim = real_field ? k * (k + 1) / 2 : k * k;
  Eigen::RowVectorXd row(dim);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < k; ++i) row[c++] = Mt(i, i).real();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      row[c++] = 2.0 * Mt(i, j).real();
      if (!real_field) row[c++] = 2.0 * Mt(i, j).imag();
    }
  }
  return row;
}

Matrix basis_matrix(const Eigen::VectorXd& y, Eigen::Index k, bool real_field) {
  Matrix Y = Matrix::Zero(k, k);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < k; ++i) Y(i, i) = y[c++];
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      Y(i, j) += y[c];
      Y(j, i) += y[c];
      ++c;
      if (!real_field) {
        Y(i, j) += Complex(0.0, y[c]);
        Y(j, i) -= Complex(0.0, y[c]);
        ++c;
      }
    }
  }
  return Y;
}

Matrix random_hermitian(std::mt19937_64& rng, std::size_t n, bool complex_data) {
  std::normal_distribution<double> g;
  const auto k = static_cast<Eigen::Index>(n);
  Matrix M(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) M(i, j) = Complex(g(rng), complex_data ? g(rng) : 0.0);
  }
  return 0.5 * (M + M.adjoint());
}

Matrix random_pd(std::mt19937_64& rng, std::size_t n, bool complex_data) {
  std::normal_distribution<double> g;
  const auto k = static_cast<Eigen::Index>(n);
  Matrix G(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) G(i, j) = Complex(g(rng), complex_data ? g(rng) : 0.0);
  }
  Matrix P = G * G.adjoint() / static_cast<double>(n) + 0.5 * Matrix::Identity(k, k);
  return 0.5 * (P + P.adjoint());
}

}  // namespace

bool LrsdpInstance::dimension_condition() const {
  return (r + 1) * (r + 2) / 2 > m() + 1;
}

bool LrsdpInstance::is_real() const {
  if (!is_real_matrix(C)) return false;
  return std::all_of(A.begin(), A.end(), [](const Matrix& M) { return is_real_matrix(M); });
}

double hermitian_defect(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return (M - M.adjoint()).cwiseAbs().maxCoeff();
}

void LrsdpInstance::validate() const {
  const auto k = C.rows();
  if (k == 0 || C.cols() != k) throw StructuralError("C must be a nonempty square matrix");
  if (static_cast<std::size_t>(b.size()) != A.size()) {
    throw StructuralError("b must have one entry per constraint matrix");
  }
  auto check = [](const Matrix& M, const std::string& name) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (std::abs(M(i, j) - std::conj(M(j, i))) > 1e-10 * (1.0 + M.cwiseAbs().maxCoeff())) {
          throw PreconditionError(name + " is not Hermitian at entry [" + std::to_string(i) + "][" +
                                  std::to_string(j) + "]");
        }
      }
    }
  };
  check(C, "C");
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].rows() != k || A[i].cols() != k) {
      throw StructuralError("A[" + std::to_string(i) + "] has the wrong size");
    }
    check(A[i], "A[" + std::to_string(i) + "]");
  }
  if (r == 0 || r > static_cast<std::size_t>(k)) throw PreconditionError("r must lie in [1, n]");
}

double inner(const Matrix& M, const Matrix& X) {
  return M.cwiseProduct(X.transpose()).sum().real();
}

PsdPoint PsdPoint::from(const Matrix& X) {
  if (X.rows() != X.cols() || X.rows() == 0) throw StructuralError("X must be square");
  if (hermitian_defect(X) > 1e-10 * (1.0 + X.cwiseAbs().maxCoeff())) {
    throw PreconditionError("X is not Hermitian");
  }
  auto e = eig_desc(X);
  const double top = e.values[0];
  if (e.values[e.values.size() - 1] < -1e-9 * std::max(1.0, top)) {
    throw PreconditionError("X is not positive semidefinite (lambda_min = " +
                            std::to_string(e.values[e.values.size() - 1]) + ")");
  }
  return {0.5 * (X + X.adjoint()), std::move(e.values), std::move(e.vectors)};
}

double PsdPoint::rank_threshold() const {
  return kRankRel * std::max(1.0, eigenvalues.size() ? eigenvalues[0] : 0.0);
}

std::size_t PsdPoint::rank() const {
  const double thr = rank_threshold();
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] >= thr) ++k;
  }
  return k;
}

double lyapunov_tail(const LrsdpInstance& inst, const PsdPoint& X) {
  return tail_sum(X.eigenvalues, inst.r);
}

double cost(const LrsdpInstance& inst, const Matrix& X) { return inner(inst.C, X); }

double constraint_residual(const LrsdpInstance& inst, const Matrix& X) {
  double worst = 0.0;
  for (std::size_t i = 0; i < inst.m(); ++i) {
    worst = std::max(worst, std::abs(inner(inst.A[i], X) - inst.b[static_cast<Eigen::Index>(i)]));
  }
  return worst;
}

std::optional<Matrix> nullspace_direction(const LrsdpInstance& inst, const Matrix& U,
                                          const Eigen::VectorXd& sigma) {
  const auto k = U.cols();
  if (sigma.size() != k) throw StructuralError("sigma must have one entry per column of U");
  if ((U.adjoint() * U - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-10) {
    throw PreconditionError("U must have orthonormal columns");
  }
  const bool real_field = inst.is_real() && is_real_matrix(U);
  const auto dim = real_field ? k * (k + 1) / 2 : k * k;
  const auto rows = static_cast<Eigen::Index>(inst.m() + 1);
  Eigen::MatrixXd sys(rows, dim);
  sys.row(0) = basis_row(U.adjoint() * inst.C * U, real_field);
  for (std::size_t i = 0; i < inst.m(); ++i) {
    sys.row(static_cast<Eigen::Index>(i + 1)) = basis_row(U.adjoint() * inst.A[i] * U, real_field);
  }
  // scale rows so the rank test does not depend on data magnitude
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double nrm = sys.row(i).norm();
    if (nrm > 0.0) sys.row(i) /= nrm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smallest = dim > rows ? 0.0 : sv[dim - 1];
  if (smallest > 1e-10 * std::max(1.0, sv[0])) return std::nullopt;
  Matrix Y = basis_matrix(svd.matrixV().col(dim - 1), k, real_field);
  return Y / Y.norm();
}

BoundarySteps boundary_step(const Eigen::VectorXd& sigma, const Matrix& Y) {
  if (Y.rows() != sigma.size() || Y.cols() != sigma.size()) {
    throw StructuralError("Y must be k x k with k = size of sigma");
  }
  if (sigma.size() == 0 || sigma.minCoeff() <= 0.0) {
    throw PreconditionError("sigma must be positive");
  }
  if (Y.cwiseAbs().maxCoeff() <= 1e-14) throw PreconditionError("Y is numerically zero");
  const Eigen::VectorXd s = sigma.cwiseSqrt().cwiseInverse();
  const Matrix W = s.asDiagonal() * Y * s.asDiagonal();
  const auto mu = eig_desc(W).values;
  const double top = mu[0];
  const double bottom = mu[mu.size() - 1];
  const double tiny = 1e-14 * std::max(std::abs(top), std::abs(bottom));
  BoundarySteps out;
  if (-bottom > tiny) out.alpha_pos = 1.0 / (-bottom);
  if (top > tiny) out.alpha_neg = -1.0 / top;
  return out;
}

ReductionResult reduce_rank_path(const LrsdpInstance& inst, const PsdPoint& X0,
                                 std::size_t samples) {
  inst.validate();
  if (static_cast<std::size_t>(X0.X.rows()) != inst.n()) throw StructuralError("X0 has wrong size");
  if (samples < 2) throw PreconditionError("each stage needs at least 2 samples");
  const double res0 = constraint_residual(inst, X0.X);
  if (res0 > kMembershipTol) {
    throw PreconditionError("X0 violates the constraints (residual " + std::to_string(res0) + ")");
  }

  ReductionResult out;
  out.dimension_condition = inst.dimension_condition();
  out.initial_rank = X0.rank();
  const double f0 = cost(inst, X0.X);
  Eigen::VectorXd g0(static_cast<Eigen::Index>(inst.m()));
  for (std::size_t i = 0; i < inst.m(); ++i) g0[static_cast<Eigen::Index>(i)] = inner(inst.A[i], X0.X);
  out.min_eigenvalue = X0.eigenvalues[X0.eigenvalues.size() - 1];

  auto audit = [&](const Matrix& X, const Eig& e, std::ptrdiff_t sample) {
    out.max_cost_drift = std::max(out.max_cost_drift, std::abs(cost(inst, X) - f0));
    for (std::size_t i = 0; i < inst.m(); ++i) {
      out.max_constraint_drift =
          std::max(out.max_constraint_drift,
                   std::abs(inner(inst.A[i], X) - g0[static_cast<Eigen::Index>(i)]));
    }
    out.min_eigenvalue = std::min(out.min_eigenvalue, e.values[e.values.size() - 1]);
    if (out.max_cost_drift > kMembershipTol * (1.0 + std::abs(f0))) {
      throw CertificateViolation("cost drifts along the reduction path", sample);
    }
    if (out.max_constraint_drift > kMembershipTol) {
      throw CertificateViolation("constraints drift along the reduction path", sample);
    }
    if (out.min_eigenvalue < -kPsdTol) {
      throw CertificateViolation("reduction path leaves the psd cone", sample);
    }
  };

  std::vector<PathTrace> pieces;
  PsdPoint current = X0;
  const std::size_t r0 = out.initial_rank;
  const std::size_t stages = r0 > inst.r ? r0 - inst.r : 0;

  for (std::size_t stage = 1; stage <= stages; ++stage) {
    const std::size_t k = current.rank();
    StageInfo info;
    info.rank_before = k;
    info.v_before = lyapunov_tail(inst, current);
    if (k <= r0 - stage) {
      info.constant = true;
      info.rank_after = k;
      info.v_after = info.v_before;
      out.stages.push_back(info);
      pieces.push_back(make_constant_path(flatten(current.X)));
      continue;
    }
    const Matrix U = current.eigenvectors.leftCols(static_cast<Eigen::Index>(k));
    const Eigen::VectorXd sigma = current.eigenvalues.head(static_cast<Eigen::Index>(k));
    const auto Y = nullspace_direction(inst, U, sigma);
    if (!Y) {
      throw ReductionStuck("no cost and constraint preserving direction at stage " +
                               std::to_string(stage),
                           stage);
    }
    const auto steps = boundary_step(sigma, *Y);
    const Matrix S = sigma.cast<Complex>().asDiagonal();
    auto point_at = [&](double a) -> Matrix {
      Matrix X = U * (S + a * *Y) * U.adjoint();
      return 0.5 * (X + X.adjoint());
    };
    const double v_tol = 1e-12 * (1.0 + sigma.sum());

    std::optional<double> chosen;
    double best_drop = -std::numeric_limits<double>::infinity();
    for (auto alpha : {steps.alpha_pos, steps.alpha_neg}) {
      if (!alpha) continue;
      bool monotone = true;
      double prev = info.v_before;
      for (std::size_t i = 1; i < samples; ++i) {
        const double t =
            i + 1 == samples ? 1.0 : static_cast<double>(i) / static_cast<double>(samples - 1);
        const double v = tail_of(point_at(t * *alpha), inst.r);
        if (v > prev + v_tol) monotone = false;
        prev = v;
      }
      const double drop = info.v_before - prev;
      if (monotone && drop > best_drop) {
        best_drop = drop;
        chosen = alpha;
      }
    }
    if (!chosen) {
      throw CertificateViolation("tail eigenvalue sum increases on both sides at stage " +
                                 std::to_string(stage));
    }

    PathTrace piece;
    piece.segments = 1;
    piece.breakpoints = {0.0, 1.0};
    double prev_v = info.v_before;
    for (std::size_t i = 0; i < samples; ++i) {
      const double t =
          i + 1 == samples ? 1.0 : static_cast<double>(i) / static_cast<double>(samples - 1);
      const Matrix X = point_at(t * *chosen);
      const auto e = eig_desc(X);
      audit(X, e, static_cast<std::ptrdiff_t>(i));
      const double v = tail_sum(e.values, inst.r);
      if (v > prev_v + v_tol) {
        throw CertificateViolation("tail eigenvalue sum increases along stage " +
                                       std::to_string(stage),
                                   static_cast<std::ptrdiff_t>(i));
      }
      prev_v = v;
      piece.params.push_back(t);
      piece.points.push_back(flatten(X));
    }

    // drop the eigenvalues that reached zero
    const Matrix M = S + *chosen * *Y;
    const auto e = eig_desc(M);
    const double thr = kRankRel * std::max(1.0, e.values[0]);
    Eigen::Index kept = 0;
    while (kept < e.values.size() && e.values[kept] >= thr) ++kept;
    if (static_cast<std::size_t>(kept) >= k) {
      throw CertificateViolation("stage " + std::to_string(stage) + " did not lower the rank");
    }
    const Matrix Un = U * e.vectors.leftCols(kept);
    Matrix Xn = Un * e.values.head(kept).cast<Complex>().asDiagonal() * Un.adjoint();
    Xn = 0.5 * (Xn + Xn.adjoint());
    piece.points.back() = flatten(Xn);
    current = PsdPoint::from(Xn);
    audit(current.X, Eig{current.eigenvalues, current.eigenvectors}, -1);

    info.alpha = *chosen;
    info.rank_after = current.rank();
    info.v_after = lyapunov_tail(inst, current);
    out.stages.push_back(info);
    ++out.active_stages;
    pieces.push_back(std::move(piece));
  }

  if (pieces.empty()) {
    out.trace = make_constant_path(flatten(current.X));
  } else {
    out.trace = concatenate(pieces, 1e-9);
  }
  annotate(out.trace, lrsdp_handle(inst));
  out.final_point = current;
  out.final_rank = current.rank();
  return out;
}

ComplexVec flatten(const Matrix& X) {
  ComplexVec v(X.size());
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) v[c++] = X(i, j);
  }
  return v;
}

Matrix unflatten(const ComplexVec& x, std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  if (x.size() != k * k) throw StructuralError("flattened matrix has wrong length");
  Matrix X(k, k);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) X(i, j) = x[c++];
  }
  return X;
}

ProblemHandle lrsdp_handle(const LrsdpInstance& inst) {
  const auto n = inst.n();
  ProblemHandle h;
  h.cost = [inst, n](const ComplexVec& x) { return cost(inst, unflatten(x, n)); };
  h.residual_Xhat = [inst, n](const ComplexVec& x) {
    const Matrix X = unflatten(x, n);
    const auto e = eig_desc(X);
    return std::max({constraint_residual(inst, X), -e.values[e.values.size() - 1],
                     hermitian_defect(X), 0.0});
  };
  h.residual_X = [inst, n, rhat = h.residual_Xhat](const ComplexVec& x) {
    return std::max(rhat(x), tail_of(unflatten(x, n), inst.r));
  };
  h.lyapunov = [inst, n](const ComplexVec& x) { return tail_of(unflatten(x, n), inst.r); };
  return h;
}

TraceLayout lrsdp_layout(std::size_t n) {
  TraceLayout layout;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto tag = "X" + std::to_string(i) + "_" + std::to_string(j);
      layout.names.push_back(tag + "_re");
      layout.names.push_back(tag + "_im");
    }
  }
  layout.flatten = [](const ComplexVec& x) {
    std::vector<double> row;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      row.push_back(x[i].real());
      row.push_back(x[i].imag());
    }
    return row;
  };
  return layout;
}

GeneratedInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m,
                                  std::size_t r, bool complex_data) {
  if (n == 0 || m == 0) throw PreconditionError("random instances need n >= 1 and m >= 1");
  GeneratedInstance g;
  g.inst.r = r;
  g.inst.C = random_hermitian(rng, n, complex_data);
  g.inst.A.push_back(random_pd(rng, n, complex_data));
  for (std::size_t i = 1; i < m; ++i) g.inst.A.push_back(random_hermitian(rng, n, complex_data));
  g.X0 = random_pd(rng, n, complex_data);
  g.inst.b.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    g.inst.b[static_cast<Eigen::Index>(i)] = inner(g.inst.A[i], g.X0);
  }
  return g;
}

}  // namespace relaxcert::lrsdp
