#include "relaxcert/distflow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relaxcert/errors.hpp"

namespace relaxcert::distflow {

RadialNetwork::RadialNetwork(std::vector<Bus> buses, std::vector<Line> lines, int root)
    : buses_(std::move(buses)), lines_(std::move(lines)), root_(root) {
  for (std::size_t j = 0; j < buses_.size(); ++j) {
    if (!index_.emplace(buses_[j].id, j).second) {
      throw StructuralError("duplicate bus id " + std::to_string(buses_[j].id));
    }
  }
  if (!index_.contains(root_)) throw StructuralError("root bus " + std::to_string(root_) + " not found");
  out_.resize(buses_.size());
  in_.resize(buses_.size());
  for (std::size_t e = 0; e < lines_.size(); ++e) {
    const auto f = bus_index(lines_[e].from);
    const auto t = bus_index(lines_[e].to);
    from_.push_back(f);
    to_.push_back(t);
    out_[f].push_back(e);
    in_[t].push_back(e);
  }
}

std::size_t RadialNetwork::bus_index(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw StructuralError("unknown bus id " + std::to_string(id));
  return it->second;
}

Complex RadialNetwork::effective_s_min(std::size_t j) const {
  return buses_[j].s_min.value_or(Complex(-kBigBox, -kBigBox));
}

std::string RadialNetwork::edge_name(std::size_t e) const {
  return std::to_string(lines_[e].from) + "->" + std::to_string(lines_[e].to);
}

void check_dimensions(const RadialNetwork& net, const OperatingPoint& x) {
  const auto n = static_cast<Eigen::Index>(net.num_buses());
  const auto m = static_cast<Eigen::Index>(net.num_lines());
  if (x.s.size() != n || x.v.size() != n || x.ell.size() != m || x.S.size() != m) {
    throw StructuralError("operating point dimensions do not match the network");
  }
}

ComplexVec flatten(const OperatingPoint& x) {
  const auto n = x.s.size();
  const auto m = x.S.size();
  ComplexVec flat(2 * n + 2 * m);
  flat.segment(0, n) = x.s;
  flat.segment(n, n) = x.v.cast<Complex>();
  flat.segment(2 * n, m) = x.ell.cast<Complex>();
  flat.segment(2 * n + m, m) = x.S;
  return flat;
}

OperatingPoint unflatten(const RadialNetwork& net, const ComplexVec& flat) {
  const auto n = static_cast<Eigen::Index>(net.num_buses());
  const auto m = static_cast<Eigen::Index>(net.num_lines());
  if (flat.size() != 2 * n + 2 * m) throw StructuralError("flattened point has wrong length");
  OperatingPoint x;
  x.s = flat.segment(0, n);
  x.v = flat.segment(n, n).real();
  x.ell = flat.segment(2 * n, m).real();
  x.S = flat.segment(2 * n + m, m);
  return x;
}

OpfCost OpfCost::linear(std::size_t buses, double cp, double cq) {
  const auto n = static_cast<Eigen::Index>(buses);
  return {Eigen::VectorXd::Constant(n, cp), Eigen::VectorXd::Constant(n, cq),
          Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

double OpfCost::operator()(const ComplexVec& s) const {
  if (s.size() != cp.size()) throw StructuralError("cost and injection vector sizes differ");
  double f = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double p = s[j].real();
    const double q = s[j].imag();
    f += cp[j] * p + cq[j] * q + qp[j] * p * p + qq[j] * q * q;
  }
  return f;
}

double strong_increase_constant(const OpfCost& cost, const Eigen::VectorXd& re_lo,
                                const Eigen::VectorXd& im_lo) {
  double c = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < cost.cp.size(); ++j) {
    // convex terms: the slope is smallest at the lower end of the domain
    const double slope_re = cost.cp[j] + 2.0 * cost.qp[j] * re_lo[j];
    const double slope_im = cost.cq[j] + 2.0 * cost.qq[j] * im_lo[j];
    c = std::min({c, slope_re, slope_im});
  }
  return std::isfinite(c) ? std::max(c, 0.0) : 0.0;
}

PfResiduals pf_residuals(const RadialNetwork& net, const OperatingPoint& x) {
  check_dimensions(net, x);
  const auto m = net.num_lines();
  PfResiduals r;
  r.ohm.resize(static_cast<Eigen::Index>(m));
  r.cone_eq.resize(static_cast<Eigen::Index>(m));
  r.balance = x.s;
  for (std::size_t e = 0; e < m; ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    const auto j = static_cast<Eigen::Index>(net.from(e));
    const auto k = static_cast<Eigen::Index>(net.to(e));
    const Complex z = net.line(e).z;
    const Complex S = x.S[ei];
    r.ohm[ei] = x.v[j] - x.v[k] - 2.0 * (z * std::conj(S)).real() + std::norm(z) * x.ell[ei];
    r.cone_eq[ei] = x.v[j] * x.ell[ei] - std::norm(S);
    r.balance[j] -= S;
    r.balance[k] += S - z * x.ell[ei];
  }
  return r;
}

namespace {

double box_violation(double value, double lo, double hi) {
  return std::max({0.0, lo - value, value - hi});
}

}  // namespace

double residual_Xhat(const RadialNetwork& net, const OperatingPoint& x) {
  const auto r = pf_residuals(net, x);
  double worst = 0.0;
  for (Eigen::Index e = 0; e < r.ohm.size(); ++e) {
    worst = std::max(worst, std::abs(r.ohm[e]));
    worst = std::max(worst, -r.cone_eq[e]);
    const auto& line = net.line(static_cast<std::size_t>(e));
    worst = std::max(worst, box_violation(x.ell[e], 0.0, line.l_max));
  }
  for (Eigen::Index j = 0; j < r.balance.size(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const auto& bus = net.bus(ju);
    const Complex lo = net.effective_s_min(ju);
    worst = std::max({worst, std::abs(r.balance[j].real()), std::abs(r.balance[j].imag())});
    worst = std::max(worst, box_violation(x.v[j], bus.v_min, bus.v_max));
    worst = std::max(worst, box_violation(x.s[j].real(), lo.real(), bus.s_max.real()));
    worst = std::max(worst, box_violation(x.s[j].imag(), lo.imag(), bus.s_max.imag()));
  }
  return worst;
}

double residual_X(const RadialNetwork& net, const OperatingPoint& x) {
  double worst = residual_Xhat(net, x);
  for (std::size_t e = 0; e < net.num_lines(); ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    const auto j = static_cast<Eigen::Index>(net.from(e));
    worst = std::max(worst, std::abs(x.v[j] * x.ell[ei] - std::norm(x.S[ei])));
  }
  return worst;
}

bool AssumptionReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AssumptionCheck& c) { return c.pass || c.deferred; });
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

AssumptionReport validate_assumptions(const RadialNetwork& net, const OpfCost& cost) {
  AssumptionReport report;
  const auto n = net.num_buses();
  const auto m = net.num_lines();

  {
    AssumptionCheck tree;
    tree.name = "tree";
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (std::size_t e = 0; e < m && tree.pass; ++e) {
      const auto a = find(net.from(e));
      const auto b = find(net.to(e));
      if (a == b) {
        tree.pass = false;
        tree.witness_edge = static_cast<std::ptrdiff_t>(e);
        tree.detail = "line " + net.edge_name(e) + " closes a cycle";
      } else {
        parent[a] = b;
      }
    }
    if (tree.pass) {
      const auto r = find(0);
      for (std::size_t j = 1; j < n; ++j) {
        if (find(j) != r) {
          tree.pass = false;
          tree.witness_bus = static_cast<std::ptrdiff_t>(j);
          tree.detail = "bus " + std::to_string(net.bus(j).id) + " is disconnected";
          break;
        }
      }
    }
    report.checks.push_back(tree);
  }

  {
    AssumptionCheck imp;
    imp.name = "impedance_positive";
    for (std::size_t e = 0; e < m; ++e) {
      const Complex z = net.line(e).z;
      if (!(z.real() > 0.0 && z.imag() > 0.0)) {
        imp.pass = false;
        imp.witness_edge = static_cast<std::ptrdiff_t>(e);
        imp.detail = "line " + net.edge_name(e) + " has a non-positive resistance or reactance";
        break;
      }
    }
    report.checks.push_back(imp);
  }

  {
    AssumptionCheck cst;
    cst.name = "cost_strongly_increasing";
    const auto nn = static_cast<Eigen::Index>(n);
    if (cost.cp.size() != nn || cost.cq.size() != nn || cost.qp.size() != nn ||
        cost.qq.size() != nn) {
      cst.pass = false;
      cst.detail = "cost coefficient vectors must have one entry per bus";
    } else {
      for (Eigen::Index j = 0; j < nn; ++j) {
        if (!(cost.cp[j] > 0.0) || cost.cq[j] < 0.0 || cost.qp[j] < 0.0 || cost.qq[j] < 0.0) {
          cst.pass = false;
          cst.witness_bus = j;
          cst.detail = "bus " + std::to_string(net.bus(static_cast<std::size_t>(j)).id) +
                       " needs cp > 0 and cq, qp, qq >= 0";
          break;
        }
      }
    }
    report.checks.push_back(cst);
  }

  report.checks.push_back(
      {"feasible", true, true, "checked by the relaxation solver", -1, -1});

  {
    AssumptionCheck lim;
    lim.name = "current_limit";
    for (std::size_t e = 0; e < m; ++e) {
      const double bound = net.bus(net.from(e)).v_min * std::norm(net.admittance(e));
      if (net.line(e).l_max > bound * (1.0 + 1e-12)) {
        lim.pass = false;
        lim.witness_edge = static_cast<std::ptrdiff_t>(e);
        lim.detail = "line " + net.edge_name(e) + " has l_max above v_min |y|^2";
        break;
      }
    }
    report.checks.push_back(lim);
  }

  {
    AssumptionCheck bnd;
    bnd.name = "bounds";
    for (std::size_t j = 0; j < n && bnd.pass; ++j) {
      const auto& b = net.bus(j);
      std::string why;
      if (!(b.v_min > 0.0)) why = "v_min must be positive";
      else if (b.v_min > b.v_max) why = "v_min exceeds v_max";
      else if (b.s_min && (b.s_min->real() > b.s_max.real() || b.s_min->imag() > b.s_max.imag()))
        why = "s_min exceeds s_max";
      if (!why.empty()) {
        bnd.pass = false;
        bnd.witness_bus = static_cast<std::ptrdiff_t>(j);
        bnd.detail = "bus " + std::to_string(b.id) + ": " + why;
      }
    }
    for (std::size_t e = 0; e < m && bnd.pass; ++e) {
      if (net.line(e).l_max < 0.0) {
        bnd.pass = false;
        bnd.witness_edge = static_cast<std::ptrdiff_t>(e);
        bnd.detail = "line " + net.edge_name(e) + " has negative l_max";
      }
    }
    report.checks.push_back(bnd);
  }

  report.lower_injection_unbounded = std::all_of(
      net.buses().begin(), net.buses().end(), [](const Bus& b) { return !b.s_min.has_value(); });
  return report;
}

}  // namespace relaxcert::distflow
