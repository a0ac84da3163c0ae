#pragma once

// Condition checkers and landscape tools: sampled (C1)/(C3) checks with the
// piecewise-linear regularity proxy and the norm-proportional decrease
// margin, exactness verdicts, local-optimum taxonomy on grids, a brute-force
// grid oracle for problems with at most four free real coordinates, and a
// derivative-free multistart local search.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relaxcert/compose.hpp"
#include "relaxcert/core.hpp"
#include "relaxcert/distflow.hpp"
#include "relaxcert/lrsdp.hpp"

namespace relaxcert::certify {

using compose::CertifiedProblem;

struct ConditionResult {
  bool evaluated = false;
  bool pass = false;
  double margin = 0.0;
  std::string detail;
};

struct Witness {
  std::string condition;
  std::ptrdiff_t point = -1;   // index into the sampled points
  std::ptrdiff_t sample = -1;  // index along the path
  std::string message;
};

enum class Exactness { Strong, Weak, Unknown };
std::string to_string(Exactness e);

struct CertificateReport {
  ConditionResult c1;
  ConditionResult c2_proxy;
  ConditionResult c3;
  ConditionResult cprime;
  Exactness exactness = Exactness::Unknown;
  std::vector<Witness> witnesses;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  double tol = kMembershipTol;
  std::vector<std::string> notes;

  /// c1 implies c3 and cprime implies c1.
  bool invariants_hold() const;
};

struct CheckOptions {
  bool cprime = true;
  std::uint64_t seed = 0;  // recorded only
};

/// Runs the path factory from every point and checks anchoring, membership
/// of every sample in the relaxed set, monotone f and V (slack 1e-12
/// relative), endpoint in the exact set (C3), strict endpoint decrease (C1),
/// the segment-count/bounding-box proxy (C2) and, optionally, a positive
/// sampled ratio of cost drop to m-norm distance (C').
CertificateReport check_c1_c3(const CertifiedProblem& problem, std::span<const ComplexVec> points,
                              const CheckOptions& options = {});

struct ExactnessResult {
  Exactness verdict = Exactness::Unknown;
  std::string detail;
  bool suboptimal_witness = false;  // restoration lowered the cost
  double cost_drop = 0.0;
};

/// Verdict for a relaxation optimum. Throws PreconditionError when the
/// reported optimality residual exceeds kkt_tol.
ExactnessResult check_exactness(const CertifiedProblem& problem, const ComplexVec& optimum,
                                double kkt_residual, bool unique = false,
                                double kkt_tol = kMembershipTol);

// ---------------------------------------------------------------- landscapes

struct LandscapeGrid {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> costs;
  std::vector<std::vector<std::size_t>> adjacency;
};

enum class Label { None, Global, Pseudo, Genuine };
std::string to_string(Label l);

/// Neighbours i-1 and i+1 on a path of n points.
std::vector<std::vector<std::size_t>> chain_adjacency(std::size_t n);
/// Pairs closer than `radius` (Euclidean).
std::vector<std::vector<std::size_t>> radius_adjacency(const std::vector<Eigen::VectorXd>& points,
                                                       double radius);

/// Local optimum: no neighbour cheaper by more than 1e-9. Global: within
/// 1e-9 of the grid minimum. Pseudo: its equal-cost component contains a
/// point that is not a local optimum. Genuine: the rest.
std::vector<Label> classify_local_optima(const LandscapeGrid& grid);

struct OptimumGroup {
  Label label = Label::None;
  double cost = 0.0;
  std::vector<std::size_t> members;
};

/// Connected groups of equally labelled, equal-cost local optima.
std::vector<OptimumGroup> group_optima(const LandscapeGrid& grid, const std::vector<Label>& labels);

// -------------------------------------------------------------------- oracle

/// Problem in a few free real coordinates after eliminating the rest.
struct ReducedProblem {
  std::string name;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  std::function<double(const Eigen::VectorXd&)> cost;
  /// Feasible when residual <= band + band_slope * resolution.
  std::function<double(const Eigen::VectorXd&)> residual;
  double band = 0.0;
  double band_slope = 0.0;
  std::function<ComplexVec(const Eigen::VectorXd&)> lift;  // optional

  Eigen::Index dim() const { return lo.size(); }
};

inline constexpr Eigen::Index kOracleMaxDim = 4;

struct OracleResult {
  double resolution = 0.0;
  std::vector<Eigen::Index> shape;
  LandscapeGrid grid;  // feasible grid points only
  std::vector<Label> labels;
  std::vector<OptimumGroup> optima;
  double global_cost = 0.0;
  std::vector<std::size_t> global_points;
  std::size_t components = 0;
  double lipschitz = 0.0;  // largest |f difference| / distance over neighbours
  std::size_t demoted = 0;  // grid-only optima removed by continuous refinement

  std::size_t count(Label l) const;
};

/// Exhaustive scan of the box at the given spacing. Adjacency joins grid
/// neighbours within 1.5 spacings. Candidate genuine optima are refined by a
/// local search started at the grid point; those that descend farther than
/// two cell diagonals, or that reach a better grid point without climbing
/// more than lipschitz * resolution, are discretization artifacts and are
/// relabelled None.
/// Throws RefusalError above kOracleMaxDim free coordinates or 2e7 cells and
/// PreconditionError ("infeasible at resolution") when no grid point is
/// feasible.
OracleResult brute_force_oracle(const ReducedProblem& problem, double resolution);

/// Free coordinates (Re S, Im S) of every line, plus the root voltage when
/// it is not fixed; the rest follows by forward substitution. Requires lines
/// oriented away from the root.
ReducedProblem eliminate_opf(const distflow::RadialNetwork& net, const distflow::OpfCost& cost);

/// Real 2 x 2 instance scanned over the psd slice in (X11, X12, X22).
/// Requires a positive definite constraint matrix to bound the slice.
ReducedProblem eliminate_lrsdp(const lrsdp::LrsdpInstance& inst);

// ------------------------------------------------------------- local search

struct LocalOptimum {
  Eigen::VectorXd point;
  double cost = 0.0;
  double first_order_residual = 0.0;  // final mesh size
  long evaluations = 0;
  bool converged = false;
};

struct SearchResult {
  std::vector<LocalOptimum> optima;  // converged runs only
  std::size_t runs = 0;
  std::vector<std::string> diagnostics;
};

/// Pattern search with coordinate and seeded random directions from one
/// starting point; infeasible trial points are rejected.
LocalOptimum local_search(const ReducedProblem& problem, const Eigen::VectorXd& start,
                          double initial_mesh, std::uint64_t seed);

/// Runs local_search from feasible quasi-random starts. Deterministic for a
/// fixed seed.
SearchResult multistart_local_search(const ReducedProblem& problem, std::size_t starts,
                                     std::uint64_t seed);

// ---------------------------------------------------- certified problem glue

/// Restoration paths for the OPF relaxation, sampled relaxed points built by
/// inflating exact points.
CertifiedProblem opf_certified(const distflow::RadialNetwork& net, const distflow::OpfCost& cost);

/// Rank-reduction paths; relaxed points sampled around the feasible anchor.
CertifiedProblem lrsdp_certified(const lrsdp::LrsdpInstance& inst, const lrsdp::Matrix& anchor);

/// Negative control: same problem, but every path is constant.
CertifiedProblem broken_factory(const CertifiedProblem& p);

}  // namespace relaxcert::certify
