#pragma once

// Branch-flow (DistFlow) model of a radial network: data types, power-flow
// residuals, membership residuals for the non-convex feasible set and its
// second-order cone relaxation, and validation of the modelling assumptions.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "relaxcert/core.hpp"

namespace relaxcert::distflow {

/// Finite stand-in for an absent lower injection bound (per unit).
inline constexpr double kBigBox = 1e4;

struct Bus {
  int id = 0;
  double v_min = 0.0;  // squared voltage magnitude, p.u.
  double v_max = 0.0;
  std::optional<Complex> s_min;  // nullopt: unbounded below
  Complex s_max{0.0, 0.0};
};

struct Line {
  int from = 0;
  int to = 0;
  Complex z{0.0, 0.0};  // series impedance, p.u.
  double l_max = 0.0;   // squared current magnitude, p.u.
};

class RadialNetwork {
 public:
  RadialNetwork() = default;
  RadialNetwork(std::vector<Bus> buses, std::vector<Line> lines, int root);

  std::size_t num_buses() const { return buses_.size(); }
  std::size_t num_lines() const { return lines_.size(); }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const Bus& bus(std::size_t j) const { return buses_[j]; }
  const Line& line(std::size_t e) const { return lines_[e]; }
  int root_id() const { return root_; }
  std::size_t root() const { return bus_index(root_); }

  /// Position of the bus with the given id; throws StructuralError if absent.
  std::size_t bus_index(int id) const;
  std::size_t from(std::size_t e) const { return from_[e]; }
  std::size_t to(std::size_t e) const { return to_[e]; }
  const std::vector<std::size_t>& out_lines(std::size_t j) const { return out_[j]; }
  const std::vector<std::size_t>& in_lines(std::size_t j) const { return in_[j]; }
  Complex admittance(std::size_t e) const { return 1.0 / lines_[e].z; }

  /// Lower injection bound with the big-box substitute applied.
  Complex effective_s_min(std::size_t j) const;

  /// Name used for edge e in reports: "from->to".
  std::string edge_name(std::size_t e) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  int root_ = 0;
  std::unordered_map<int, std::size_t> index_;
  std::vector<std::size_t> from_;
  std::vector<std::size_t> to_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

/// The decision tuple (s, v, l, S).
struct OperatingPoint {
  ComplexVec s;          // bus injections
  Eigen::VectorXd v;     // bus squared voltage magnitudes
  Eigen::VectorXd ell;   // line squared current magnitudes
  ComplexVec S;          // sending-end line flows
};

/// Throws StructuralError when x does not match the network's dimensions.
void check_dimensions(const RadialNetwork& net, const OperatingPoint& x);

/// Flattened layout [s (N), v (N), l (E), S (E)] used by paths and norms.
ComplexVec flatten(const OperatingPoint& x);
OperatingPoint unflatten(const RadialNetwork& net, const ComplexVec& flat);

/// f(s) = sum_j cp Re s_j + cq Im s_j + qp (Re s_j)^2 + qq (Im s_j)^2.
struct OpfCost {
  Eigen::VectorXd cp;
  Eigen::VectorXd cq;
  Eigen::VectorXd qp;
  Eigen::VectorXd qq;

  static OpfCost linear(std::size_t buses, double cp, double cq);
  double operator()(const ComplexVec& s) const;
  double operator()(const OperatingPoint& x) const { return (*this)(x.s); }
};

/// Largest c with f(a) - f(b) >= c * (Re(a-b) + Im(a-b)) summed over buses,
/// for injections that only move downward inside the given per-bus lower
/// ends of the domain. Zero when no such positive constant exists.
double strong_increase_constant(const OpfCost& cost, const Eigen::VectorXd& re_lo,
                                const Eigen::VectorXd& im_lo);

struct PfResiduals {
  Eigen::VectorXd ohm;      // per line
  Eigen::VectorXd cone_eq;  // per line, v_j l_jk - |S_jk|^2
  ComplexVec balance;       // per bus
};

PfResiduals pf_residuals(const RadialNetwork& net, const OperatingPoint& x);

/// Worst violation of the relaxed set: affine flow equations, boxes and the
/// one-sided cone |S|^2 <= v l.
double residual_Xhat(const RadialNetwork& net, const OperatingPoint& x);

/// residual_Xhat plus the violation of the cone equality |S|^2 = v l.
double residual_X(const RadialNetwork& net, const OperatingPoint& x);

struct AssumptionCheck {
  std::string name;
  bool pass = true;
  bool deferred = false;
  std::string detail;
  std::ptrdiff_t witness_edge = -1;
  std::ptrdiff_t witness_bus = -1;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  /// True when every bus has an unbounded lower injection limit, the regime
  /// in which every local optimum is global.
  bool lower_injection_unbounded = false;

  bool all_pass() const;
  const AssumptionCheck* find(const std::string& name) const;
};

/// Tree structure, positive impedances, cost orientation and convexity,
/// line current limits against the voltage floor, and bound sanity.
/// Feasibility is left to the solver and marked deferred.
AssumptionReport validate_assumptions(const RadialNetwork& net, const OpfCost& cost);

}  // namespace relaxcert::distflow
