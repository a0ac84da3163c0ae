#pragma once

// Shared test fixtures: one-coordinate half-disk primitives for the
// composition rules, the four-optimum landscape, and small generated OPF
// cases.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "relaxcert/certify.hpp"
#include "relaxcert/compose.hpp"
#include "relaxcert/distflow.hpp"
#include "relaxcert/generate.hpp"

namespace fixtures {

using relaxcert::Complex;
using relaxcert::ComplexVec;
using relaxcert::compose::CertifiedProblem;

// Relaxed set: left half-disk of coordinate k. Exact set: its arc. Cost Re,
// V = Re + sqrt(1 - Im^2), path moves left until the arc.
inline double arc_gap(Complex u) {
  return u.real() + std::sqrt(std::max(0.0, 1.0 - u.imag() * u.imag()));
}

inline double half_disk_residual(Complex u) {
  return std::max({0.0, std::abs(u) - 1.0, u.real()});
}

inline void set_box(CertifiedProblem& p, Eigen::Index dim) {
  p.box_lo.resize(2 * dim);
  p.box_hi.resize(2 * dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    p.box_lo[2 * i] = -1.0;
    p.box_hi[2 * i] = 0.0;
    p.box_lo[2 * i + 1] = -1.0;
    p.box_hi[2 * i + 1] = 1.0;
  }
}

inline CertifiedProblem half_disk(Eigen::Index dim = 1, Eigen::Index k = 0) {
  CertifiedProblem p;
  p.name = "half_disk";
  set_box(p, dim);
  p.handle.cost = [k](const ComplexVec& x) { return x[k].real(); };
  p.handle.residual_Xhat = [k](const ComplexVec& x) { return half_disk_residual(x[k]); };
  p.handle.lyapunov = [k](const ComplexVec& x) { return std::max(0.0, arc_gap(x[k])); };
  p.handle.residual_X = [k](const ComplexVec& x) {
    return std::max(half_disk_residual(x[k]), std::max(0.0, arc_gap(x[k])));
  };
  p.path_factory = [k, h = p.handle](const ComplexVec& x) {
    ComplexVec y = x;
    y[k] -= std::max(0.0, arc_gap(x[k]));
    auto t = relaxcert::make_linear_path(x, y);
    relaxcert::annotate(t, h);
    return t;
  };
  return p;
}

// Same relaxed set and paths; the exact set adds the cap Im >= 0.9 and the
// cost is Re + Re^2 / 2.
inline CertifiedProblem capped_half_disk() {
  CertifiedProblem p = half_disk();
  p.name = "capped_half_disk";
  p.handle.cost = [](const ComplexVec& x) { return x[0].real() + 0.5 * x[0].real() * x[0].real(); };
  auto cap = [](const ComplexVec& x) {
    return std::max(0.0, arc_gap(x[0])) * std::max(0.0, 0.9 - x[0].imag()) / 0.9;
  };
  p.handle.lyapunov = cap;
  p.handle.residual_X = [cap](const ComplexVec& x) {
    return std::max(half_disk_residual(x[0]), cap(x));
  };
  p.path_factory = [h = p.handle](const ComplexVec& x) {
    ComplexVec y = x;
    y[0] -= std::max(0.0, arc_gap(x[0]));
    auto t = relaxcert::make_linear_path(x, y);
    relaxcert::annotate(t, h);
    return t;
  };
  return p;
}

// Negative control for unions: paths leave diagonally.
inline CertifiedProblem diagonal_half_disk() {
  CertifiedProblem p = capped_half_disk();
  p.name = "diagonal_half_disk";
  p.path_factory = [h = p.handle](const ComplexVec& x) {
    ComplexVec y = x;
    const double g = std::max(0.0, arc_gap(x[0]));
    y[0] -= Complex(g, 0.25 * g);
    auto t = relaxcert::make_linear_path(x, y);
    relaxcert::annotate(t, h);
    return t;
  };
  return p;
}

// Negative control for intersections: the second block's cost reads the
// first block.
inline CertifiedProblem leaky_half_disk() {
  CertifiedProblem p = half_disk(2, 1);
  p.name = "leaky_half_disk";
  p.handle.cost = [](const ComplexVec& x) { return x[1].real() + 0.3 * x[0].imag(); };
  return p;
}

// Landscape on [0, 10] with spacing 0.1: genuine well at 1 (cost 2),
// global well at 4 (cost 0), a plateau on [6, 7] at 1.5 that drains to the
// right, and a genuine well at 9 (cost 1).
inline relaxcert::certify::LandscapeGrid four_optima_landscape() {
  const double kx[] = {0, 1, 2.5, 4, 5.5, 6, 7, 9, 10};
  const double ky[] = {3, 2, 4, 0, 3, 1.5, 1.5, 1, 2};
  relaxcert::certify::LandscapeGrid g;
  for (int i = 0; i <= 100; ++i) {
    const double x = 0.1 * i;
    int s = 0;
    while (s < 7 && x > kx[s + 1] + 1e-12) ++s;
    const double w = (x - kx[s]) / (kx[s + 1] - kx[s]);
    double f = ky[s] + w * (ky[s + 1] - ky[s]);
    f = std::round(f * 1e12) / 1e12;
    g.points.push_back(Eigen::VectorXd::Constant(1, x));
    g.costs.push_back(f);
  }
  g.adjacency = relaxcert::certify::chain_adjacency(g.points.size());
  return g;
}

struct Case {
  relaxcert::distflow::RadialNetwork net;
  relaxcert::distflow::OpfCost cost;
};

// Random radial network and cost for a seed, as used by the soundness runs.
inline Case random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto net = relaxcert::distflow::random_radial_network(rng);
  auto cost = relaxcert::distflow::random_cost(rng, net.num_buses());
  return {std::move(net), std::move(cost)};
}

// Root plus its first line, root voltage fixed at 1.
inline Case first_line_case(const Case& c) {
  using namespace relaxcert::distflow;
  const auto& net = c.net;
  Bus b0 = net.bus(net.from(0));
  b0.v_min = b0.v_max = 1.0;
  const Bus b1 = net.bus(net.to(0));
  const auto j0 = static_cast<Eigen::Index>(net.from(0));
  const auto j1 = static_cast<Eigen::Index>(net.to(0));
  OpfCost cost{Eigen::Vector2d(c.cost.cp[j0], c.cost.cp[j1]), Eigen::Vector2d(c.cost.cq[j0], c.cost.cq[j1]),
               Eigen::Vector2d(c.cost.qp[j0], c.cost.qp[j1]), Eigen::Vector2d(c.cost.qq[j0], c.cost.qq[j1])};
  return {RadialNetwork({b0, b1}, {net.line(0)}, b0.id), cost};
}

// Two-bus instance: root voltage fixed at 1, one line with impedance in
// [0.05, 0.3]^2 and a current limit that respects the voltage floor.
inline Case two_bus_case(std::uint64_t seed) {
  using namespace relaxcert::distflow;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.05, 0.3);
  const Complex z(U(rng), U(rng));
  const double l_max = std::min(1.0, 0.9 / std::norm(z));
  std::vector<Bus> buses{{0, 1.0, 1.0, std::nullopt, {5.0, 5.0}}, {1, 0.9, 1.1, std::nullopt, {0.5, 0.5}}};
  std::vector<Line> lines{{0, 1, z, l_max}};
  auto cost = random_cost(rng, 2);
  return {RadialNetwork(std::move(buses), std::move(lines), 0), std::move(cost)};
}

}  // namespace fixtures
