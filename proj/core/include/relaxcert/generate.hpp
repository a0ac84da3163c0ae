#pragma once

// Random radial test cases and exact/relaxed operating points built by
// forward substitution along the tree.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "relaxcert/distflow.hpp"

namespace relaxcert::distflow {

struct GeneratorOptions {
  std::size_t min_buses = 3;
  std::size_t max_buses = 10;
  double z_lo = 0.005;  // both resistance and reactance drawn in [z_lo, z_hi]
  double z_hi = 0.03;
  double v_min = 0.5;
  double v_max = 1.5;
  Complex s_max{5.0, 5.0};
  double l_max_factor = 0.9;  // l_max = factor * v_min |y|^2
  bool fix_root_voltage = false;  // v_min = v_max = 1 at the root
};

/// Tree with lines oriented away from bus 0 (the root); each new bus hangs
/// from a uniformly chosen earlier bus. Lower injection limits are absent.
RadialNetwork random_radial_network(std::mt19937_64& rng, const GeneratorOptions& opts = {});

/// Linear-plus-small-quadratic cost with cp in [0.5, 2] and cq >= cp.
OpfCost random_cost(std::mt19937_64& rng, std::size_t buses);

/// Exact DistFlow point: root voltage v_root, line flows S, l = |S|^2 / v_from,
/// downstream voltages from the Ohm equation and injections from the balance.
/// Requires lines oriented away from the root.
OperatingPoint forward_substitute(const RadialNetwork& net, double v_root, const ComplexVec& S);

/// forward_substitute with root voltage 1 and flows of magnitude up to
/// `flow_scale` per component.
OperatingPoint random_exact_point(const RadialNetwork& net, std::mt19937_64& rng,
                                  double flow_scale = 0.2);

/// Moves x along the affine flow equations so that line e gains cone slack:
/// l += D, S += zD/2 and both end injections gain zD/2.
void inflate_edge(const RadialNetwork& net, OperatingPoint& x, std::size_t e, double D);

/// Amount D that adds exactly `slack` to v l - |S|^2 on a cone-tight line.
/// Throws PreconditionError when the slack is not reachable.
double inflation_for_slack(const RadialNetwork& net, const OperatingPoint& x, std::size_t e,
                           double slack);

/// Copy of x with `slack` added on line e.
OperatingPoint inflate_to_slack(const RadialNetwork& net, const OperatingPoint& x,
                                std::size_t e, double slack);

/// Up to `count` points of the relaxed set that are not exact: exact points
/// within the case's boxes (random root voltage and flows) with cone slack
/// added on a random nonempty subset of lines. Deterministic for a seed.
std::vector<OperatingPoint> relaxed_points(const RadialNetwork& net, std::size_t count,
                                           std::uint64_t seed);

}  // namespace relaxcert::distflow
