#pragma once

// Feasibility restoration for the second-order cone relaxation of radial
// OPF: the cone-slack Lyapunov function, the per-line shrink amount and the
// straight-line path that removes every slack at once.

#include <cstddef>
#include <string>
#include <vector>

#include "relaxcert/core.hpp"
#include "relaxcert/distflow.hpp"

namespace relaxcert::restore {

using distflow::OperatingPoint;
using distflow::OpfCost;
using distflow::RadialNetwork;

/// V(x) = sum over lines of v_j l_jk - |S_jk|^2.
/// Throws PreconditionError if any line has slack below -tol.
double lyapunov_V(const RadialNetwork& net, const OperatingPoint& x, double tol = kMembershipTol);

struct EdgeGap {
  std::size_t edge = 0;
  double delta = 0.0;
  bool in_M = false;  // strictly positive cone slack
};

/// Positive root of a a^2 + b a + c with a >= 0, c < 0 and b^2 - 4ac >= 0,
/// evaluated without cancellation.
double positive_root(double a, double b, double c);

/// Root of phi(a) = |z|^2/4 a^2 + (v_j - Re(z S^H)) a + |S|^2 - v_j l on a
/// line with strict slack, zero otherwise. Throws CertificateError naming the
/// line when its current limit exceeds v_min |y|^2 or the linear coefficient
/// is negative.
EdgeGap edge_delta(const RadialNetwork& net, const OperatingPoint& x, std::size_t edge);

/// phi evaluated at a for the given line.
double phi(const RadialNetwork& net, const OperatingPoint& x, std::size_t edge, double a);

/// Point of the restoration path at parameter t for precomputed gaps.
OperatingPoint path_point(const RadialNetwork& net, const OperatingPoint& x,
                          const std::vector<EdgeGap>& gaps, double t);

/// Restoration path from a relaxed point outside the exact set. One declared
/// segment sampled at `samples` parameters, annotated with f and V. Throws
/// PreconditionError for inputs outside Xhat minus X and CertificateViolation
/// when a post-check fails.
PathTrace restoration_path(const RadialNetwork& net, const OpfCost& cost, const OperatingPoint& x,
                           std::size_t samples = kSamplesPerSegment);

/// Per-line gaps used by restoration_path.
std::vector<EdgeGap> edge_gaps(const RadialNetwork& net, const OperatingPoint& x);

struct CprimeResult {
  double margin = 0.0;  // min over sample pairs of cost drop / m-norm distance
  double c_hat = 0.0;   // c / (3/2 + 1 / min_jk ||z_jk||_m)
  double c = 0.0;       // strong-increase constant over the path's injection range
  std::string note;
};

/// Smallest sampled ratio [f(h(t)) - f(h(s))] / ||h(t) - h(s)||_m over t < s,
/// together with the analytic reference constant. A constant path yields
/// +infinity with a note.
CprimeResult cprime_margin(const RadialNetwork& net, const OpfCost& cost, const PathTrace& trace);

/// Generic handle over the flattened layout [s, v, l, S].
ProblemHandle opf_handle(const RadialNetwork& net, const OpfCost& cost);

/// CSV layout: s (re, im) and v bus-major, then l and S (re, im) edge-major.
TraceLayout opf_layout(const RadialNetwork& net);

}  // namespace relaxcert::restore
