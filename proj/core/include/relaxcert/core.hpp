#pragma once

// Problem-agnostic building blocks: sampled paths, partition lengths,
// arc-length reparameterization, the |Re|+|Im| norm and the generic
// problem interface shared by the OPF and low-rank SDP certificates.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relaxcert {

using Complex = std::complex<double>;
using ComplexVec = Eigen::VectorXcd;

/// Residual at or below this counts as set membership (unit-scaled data).
inline constexpr double kMembershipTol = 1e-8;

/// Default number of uniform samples per linear segment.
inline constexpr std::size_t kSamplesPerSegment = 101;

bool all_finite(const ComplexVec& x);

/// A path h: [0,1] -> K^n stored as samples. When `segments` > 0 the path
/// claims to be affine between consecutive `breakpoints`, each of which is
/// also a sample parameter.
struct PathTrace {
  std::vector<double> params;
  std::vector<ComplexVec> points;
  std::size_t segments = 0;
  std::vector<double> breakpoints;

  // Optional per-sample annotations; empty when not computed.
  std::vector<double> cost;
  std::vector<double> lyapunov;

  std::size_t size() const { return params.size(); }
  Eigen::Index dimension() const { return points.empty() ? 0 : points.front().size(); }
  const ComplexVec& front() const { return points.front(); }
  const ComplexVec& back() const { return points.back(); }

  /// Throws PreconditionError when the structural invariants fail.
  void validate() const;
};

/// Straight segment a -> b with `samples` uniform parameters.
PathTrace make_linear_path(const ComplexVec& a, const ComplexVec& b,
                           std::size_t samples = kSamplesPerSegment);

/// Constant path at x (two samples, one declared segment).
PathTrace make_constant_path(const ComplexVec& x);

/// Linear interpolation of the stored samples at parameter t.
ComplexVec evaluate(const PathTrace& trace, double t);

/// Concatenation giving each piece an equal share of [0,1]. Consecutive
/// pieces must join (end of one equals start of the next to `join_tol`).
PathTrace concatenate(std::span<const PathTrace> pieces, double join_tol = 1e-9);

/// Sum of Euclidean distances between consecutive samples restricted to
/// [lo, hi]; the range ends are interpolated when they are not samples.
double partition_length(const PathTrace& trace, double lo = 0.0, double hi = 1.0);

/// Constant-speed reparameterization: each sample keeps its point and moves
/// to the parameter equal to its cumulative length fraction. Samples that do
/// not advance along the path are merged. Zero-length input is returned
/// unchanged.
PathTrace arc_length_reparameterize(const PathTrace& trace);

/// Halton points in [0,1)^dim with a seeded Cranley-Patterson shift.
/// Deterministic for a fixed seed; dim <= 32.
std::vector<Eigen::VectorXd> quasi_random_points(Eigen::Index dim, std::size_t count,
                                                 std::uint64_t seed);

/// sum_i |Re x_i| + |Im x_i|.
double norm_m(const ComplexVec& x);

struct PiecewiseLinearReport {
  bool ok = true;
  std::string note;
  Eigen::VectorXd box_lo;  // real coordinates, Re and Im interleaved
  Eigen::VectorXd box_hi;
  double worst_deviation = 0.0;
  std::ptrdiff_t witness_trace = -1;
  std::ptrdiff_t witness_sample = -1;
};

/// Structural proxy for uniform boundedness and equicontinuity of a path
/// family: every trace declares at most `max_segments` linear pieces, is
/// affine between its breakpoints to `tol` (relative), and all samples share
/// a bounding box (inside [-bound, bound] when a bound is given).
PiecewiseLinearReport check_piecewise_linear_family(
    std::span<const PathTrace> traces, std::size_t max_segments, double tol = 1e-9,
    std::optional<double> bound = std::nullopt);

/// Generic problem pair (f, X, Xhat) on a flattened complex vector.
struct ProblemHandle {
  std::function<double(const ComplexVec&)> cost;
  std::function<double(const ComplexVec&)> residual_X;
  std::function<double(const ComplexVec&)> residual_Xhat;
  std::function<double(const ComplexVec&)> lyapunov;  // optional
  double tol = kMembershipTol;

  bool has_lyapunov() const { return static_cast<bool>(lyapunov); }
  bool in_X(const ComplexVec& x) const { return residual_X(x) <= tol; }
  bool in_Xhat(const ComplexVec& x) const { return residual_Xhat(x) <= tol; }
};

/// Returns a description of the first handle invariant violated at x
/// (X inside Xhat, V zero exactly on X), or nullopt.
std::optional<std::string> handle_invariant_violation(const ProblemHandle& handle,
                                                      const ComplexVec& x);

/// Fills trace.cost and (when available) trace.lyapunov from the handle.
void annotate(PathTrace& trace, const ProblemHandle& handle);

/// Column layout for CSV trace export.
struct TraceLayout {
  std::vector<std::string> names;
  std::function<std::vector<double>(const ComplexVec&)> flatten;
};

/// Re/Im interleaved columns x{i}_re, x{i}_im.
TraceLayout default_layout(Eigen::Index dimension);

/// Writes columns t, f, V followed by the layout's coordinates. Missing
/// annotations are written as empty fields.
void write_trace_csv(std::ostream& out, const PathTrace& trace, const TraceLayout& layout);

}  // namespace relaxcert
