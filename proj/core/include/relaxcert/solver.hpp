#pragma once

// Relaxation solvers: the rotated-cone relaxation of radial OPF and the
// semidefinite relaxation of the low-rank SDP, both on the dense
// operator-splitting backend.

#include <string>

#include "relaxcert/conic_admm.hpp"
#include "relaxcert/distflow.hpp"
#include "relaxcert/lrsdp.hpp"

namespace relaxcert::solver {

struct SolverOptions {
  double tol = 1e-8;
  long max_iter = 200000;
  double relaxation_parameter = 1.6;
};

enum class Status { Optimal, MaxIter, Infeasible };
std::string to_string(Status s);

struct SolveInfo {
  Status status = Status::MaxIter;
  double objective = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  long iterations = 0;
  SolverOptions options;
  std::string note;
};

struct OpfSolveResult {
  distflow::OperatingPoint point;
  SolveInfo info;
  /// True when some injection sits on the finite stand-in for an absent
  /// lower bound (the substitute box is then not harmless).
  bool big_box_active = false;
};

/// Second-order cone relaxation of the OPF. Throws PreconditionError when a
/// structural assumption (tree, positive impedances, cost orientation) fails.
/// Empty bound boxes are reported as infeasible.
OpfSolveResult solve_opf_relaxation(const distflow::RadialNetwork& net,
                                    const distflow::OpfCost& cost,
                                    const SolverOptions& options = {});

struct SdpSolveResult {
  lrsdp::PsdPoint point;
  SolveInfo info;
};

/// min tr(CX) s.t. tr(A_i X) = b_i, X psd. The returned point is exactly
/// psd and, when optimal, polished onto the affine constraints inside its
/// range space.
SdpSolveResult solve_lrsdp_relaxation(const lrsdp::LrsdpInstance& inst,
                                      const SolverOptions& options = {});

}  // namespace relaxcert::solver
