#pragma once

// Low-rank SDP  min tr(CX)  s.t. tr(A_i X) = b_i, X psd, rank X <= r,
// and the rank-reduction path that moves a relaxed solution to rank <= r
// while keeping cost and constraints fixed.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relaxcert/core.hpp"

namespace relaxcert::lrsdp {

using Matrix = Eigen::MatrixXcd;

struct LrsdpInstance {
  Matrix C;
  std::vector<Matrix> A;
  Eigen::VectorXd b;
  std::size_t r = 1;

  std::size_t n() const { return static_cast<std::size_t>(C.rows()); }
  std::size_t m() const { return A.size(); }
  /// (r+1)(r+2)/2 > m+1: a rank-reducing direction always exists.
  bool dimension_condition() const;
  /// True when C and every A_i have zero imaginary part.
  bool is_real() const;
  /// Throws StructuralError on size mismatch and PreconditionError on
  /// non-Hermitian data, naming the matrix and entry.
  void validate() const;
};

/// <M, X> = tr(M X), real for Hermitian arguments.
double inner(const Matrix& M, const Matrix& X);

/// Largest |M_ij - conj(M_ji)|.
double hermitian_defect(const Matrix& M);

struct PsdPoint {
  Matrix X;
  Eigen::VectorXd eigenvalues;  // decreasing
  Matrix eigenvectors;          // column i pairs with eigenvalues[i]

  /// Eigen-decomposes X; throws PreconditionError when X is not Hermitian or
  /// its smallest eigenvalue is below -1e-9 max(1, lambda_1).
  static PsdPoint from(const Matrix& X);
  /// Count of eigenvalues >= 1e-8 max(1, lambda_1).
  std::size_t rank() const;
  double rank_threshold() const;
};

/// Sum of eigenvalues beyond the r largest (clamped at 0).
double lyapunov_tail(const LrsdpInstance& inst, const PsdPoint& X);

double cost(const LrsdpInstance& inst, const Matrix& X);

/// max_i |tr(A_i X) - b_i|.
double constraint_residual(const LrsdpInstance& inst, const Matrix& X);

/// Nonzero Hermitian Y (Frobenius norm 1) with tr(C U Y U^H) = 0 and
/// tr(A_i U Y U^H) = 0, or nullopt when the only solution is Y = 0. Real
/// symmetric Y is sought when the data and U are real.
std::optional<Matrix> nullspace_direction(const LrsdpInstance& inst, const Matrix& U,
                                          const Eigen::VectorXd& sigma);

struct BoundarySteps {
  std::optional<double> alpha_pos;
  std::optional<double> alpha_neg;
};

/// Nearest alpha on each side of zero where diag(sigma) + alpha Y turns
/// singular. Throws PreconditionError when Y is numerically zero or sigma is
/// not positive.
BoundarySteps boundary_step(const Eigen::VectorXd& sigma, const Matrix& Y);

struct StageInfo {
  bool constant = false;
  std::size_t rank_before = 0;
  std::size_t rank_after = 0;
  double alpha = 0.0;
  double v_before = 0.0;
  double v_after = 0.0;
};

struct ReductionResult {
  PathTrace trace;
  PsdPoint final_point;
  std::vector<StageInfo> stages;
  bool dimension_condition = true;  // false: proceeded without the guarantee
  std::size_t initial_rank = 0;
  std::size_t final_rank = 0;
  std::size_t active_stages = 0;
  double max_cost_drift = 0.0;
  double max_constraint_drift = 0.0;
  double min_eigenvalue = 0.0;
};

/// Stagewise reduction from a feasible relaxed point. Each active stage
/// moves along U (Sigma + t alpha Y) U^H to the psd boundary on a side where
/// the tail sum does not increase; stages are concatenated with equal
/// parameter shares. Throws PreconditionError for infeasible starts,
/// ReductionStuck when no direction exists and CertificateViolation when a
/// sampled invariant fails.
ReductionResult reduce_rank_path(const LrsdpInstance& inst, const PsdPoint& X0,
                                 std::size_t samples = kSamplesPerSegment);

/// Row-major flattening of all n^2 entries.
ComplexVec flatten(const Matrix& X);
Matrix unflatten(const ComplexVec& x, std::size_t n);

ProblemHandle lrsdp_handle(const LrsdpInstance& inst);
TraceLayout lrsdp_layout(std::size_t n);

struct GeneratedInstance {
  LrsdpInstance inst;
  Matrix X0;  // feasible, full rank
};

/// Random instance with a positive definite A_1 (bounded feasible set),
/// random Hermitian C and remaining A_i, and b taken from a random full-rank
/// X0. Real symmetric data unless `complex_data` is set.
GeneratedInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m,
                                  std::size_t r, bool complex_data = false);

}  // namespace relaxcert::lrsdp
