#pragma once

// Dense operator-splitting solver for
//   min 1/2 x'Px + q'x  s.t.  Ax + s = b,  s in K,
// where K is a product of zero cones, boxes, second-order cones and psd
// cones (real symmetric or complex Hermitian, stored as scaled svec).

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "relaxcert/core.hpp"

namespace relaxcert::admm {

struct Cone {
  enum class Kind { Zero, Box, Soc, Psd };
  Kind kind = Kind::Zero;
  Eigen::Index dim = 0;
  Eigen::VectorXd lo;  // box only
  Eigen::VectorXd hi;
  Eigen::Index order = 0;  // psd only: matrix side
  bool complex_field = false;

  static Cone zero(Eigen::Index dim);
  static Cone box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static Cone soc(Eigen::Index dim);  // (t, u) with |u| <= t
  static Cone psd(Eigen::Index order, bool complex_field);
};

/// Length of the scaled svec of an order-n matrix.
Eigen::Index svec_dim(Eigen::Index n, bool complex_field);
/// Diagonal, then for i < j: sqrt2 Re X_ij (and sqrt2 Im X_ij when complex).
/// <svec A, svec X> = tr(A X) for Hermitian A, X.
Eigen::VectorXd svec(const Eigen::MatrixXcd& X, bool complex_field);
Eigen::MatrixXcd smat(const Eigen::VectorXd& v, Eigen::Index n, bool complex_field);

/// Euclidean projection of v onto the cone (or box).
Eigen::VectorXd project(const Cone& cone, const Eigen::VectorXd& v);

struct ConicProblem {
  Eigen::MatrixXd P;  // empty means zero
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<Cone> cones;  // stacked in row order, dims summing to rows(A)
};

struct Options {
  double tol = 1e-8;
  long max_iter = 200000;
  double alpha = 1.6;  // over-relaxation
  double rho = 0.1;
  double sigma = 1e-6;
  bool adaptive_rho = true;
};

enum class Status { Optimal, MaxIter, Infeasible };

std::string to_string(Status s);

struct Result {
  Eigen::VectorXd x;
  Eigen::VectorXd s;
  Eigen::VectorXd y;  // y lies in the polar of K; -y is the conic multiplier
  Status status = Status::MaxIter;
  long iterations = 0;
  double primal_res = 0.0;  // |Ax + s - b|_inf
  double dual_res = 0.0;    // |Px + q - A'y|_inf
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;  // |primal_obj - dual_obj|
  std::string note;
};

/// Throws StructuralError when the cone dimensions do not match A.
Result solve(const ConicProblem& prob, const Options& opts = {});

}  // namespace relaxcert::admm
