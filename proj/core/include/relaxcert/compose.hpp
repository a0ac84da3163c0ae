#pragma once

// Combinators that build a Lyapunov function and restoration paths for a
// composite problem out of certified pieces: monotone convex cost
// transforms, unions and intersections of feasible sets.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relaxcert/core.hpp"

namespace relaxcert::compose {

using PathFactory = std::function<PathTrace(const ComplexVec&)>;
/// Returns up to `count` points of the relaxed set, deterministic in seed.
using Sampler = std::function<std::vector<ComplexVec>(std::size_t count, std::uint64_t seed)>;

struct CertifiedProblem {
  ProblemHandle handle;  // lyapunov must be present
  PathFactory path_factory;
  std::size_t segment_bound = 1;
  // bounding box of the relaxed set, Re and Im interleaved per coordinate
  Eigen::VectorXd box_lo;
  Eigen::VectorXd box_hi;
  Sampler sampler;  // optional; defaults to rejection sampling in the box
  std::string name;

  Eigen::Index dimension() const { return box_lo.size() / 2; }
  /// Largest absolute coordinate of the box.
  double bound() const;
};

/// Points of the relaxed set: the problem's sampler when present, otherwise
/// quasi-random points of the box kept when residual_Xhat <= tol.
std::vector<ComplexVec> sample_relaxed(const CertifiedProblem& p, std::size_t count,
                                       std::uint64_t seed);

/// Default sample count for the sampled contracts.
inline constexpr std::size_t kContractSamples = 200;

struct Mode {
  enum class Kind { Sum, Max };
  Kind kind = Kind::Sum;
  double lambda = 0.5;  // weight of the first cost in sum mode

  static Mode sum(double lambda) { return {Kind::Sum, lambda}; }
  static Mode max() { return {Kind::Max, 0.0}; }
};

/// Cost g(f(x)); V and paths unchanged. g must be non-decreasing and convex;
/// both are spot-checked on sampled cost values and a violation raises
/// ContractError.
CertifiedProblem compose_cost(const CertifiedProblem& p, std::function<double(double)> g,
                              std::uint64_t seed = 0);

/// Union of the exact sets inside the common relaxed set: V = V1 * V2 and
/// paths of p1. The two path factories must coincide on sampled points
/// outside both exact sets; a divergence raises CompositionError.
CertifiedProblem union_feasible(const CertifiedProblem& p1, const CertifiedProblem& p2,
                                const Mode& mode, std::uint64_t seed = 0);

/// Coordinate split: block1 and block2 partition the coordinates.
struct Split {
  std::vector<Eigen::Index> block1;
  std::vector<Eigen::Index> block2;
};

/// Intersection of the exact sets: V = V1 + V2 and the path runs h1 and
/// then h2 from h1's endpoint (each taking half of [0, 1]), or a single leg
/// when one V already vanishes. f_i and V_i must ignore the other block and
/// h_i must keep the other block fixed; a sampled violation raises
/// CompositionError naming the perturbation.
CertifiedProblem intersect_feasible(const CertifiedProblem& p1, const CertifiedProblem& p2,
                                    const Split& split, const Mode& mode,
                                    std::uint64_t seed = 0);

}  // namespace relaxcert::compose
