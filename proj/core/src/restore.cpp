#include "relaxcert/restore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relaxcert/errors.hpp"

namespace relaxcert::restore {

namespace {

double slack(const RadialNetwork& net, const OperatingPoint& x, std::size_t e) {
  const auto ei = static_cast<Eigen::Index>(e);
  return x.v[static_cast<Eigen::Index>(net.from(e))] * x.ell[ei] - std::norm(x.S[ei]);
}

bool strict_slack(const RadialNetwork& net, const OperatingPoint& x, std::size_t e) {
  const auto ei = static_cast<Eigen::Index>(e);
  const double vl = x.v[static_cast<Eigen::Index>(net.from(e))] * x.ell[ei];
  return slack(net, x, e) > 1e-9 * std::max(1.0, vl);
}

}  // namespace

double lyapunov_V(const RadialNetwork& net, const OperatingPoint& x, double tol) {
  distflow::check_dimensions(net, x);
  double total = 0.0;
  for (std::size_t e = 0; e < net.num_lines(); ++e) {
    const double g = slack(net, x, e);
    if (g < -tol) {
      throw PreconditionError("negative cone slack on line " + net.edge_name(e) +
                              ": point is not in the relaxed set");
    }
    total += g;
  }
  return std::max(total, 0.0);
}

double positive_root(double a, double b, double c) {
  if (a < 0.0 || c >= 0.0) throw PreconditionError("positive_root needs a >= 0 and c < 0");
  const double disc = b * b - 4.0 * a * c;
  return 2.0 * (-c) / (b + std::sqrt(disc));
}

double phi(const RadialNetwork& net, const OperatingPoint& x, std::size_t edge, double a) {
  const auto ei = static_cast<Eigen::Index>(edge);
  const Complex z = net.line(edge).z;
  const double B = x.v[static_cast<Eigen::Index>(net.from(edge))] - (z * std::conj(x.S[ei])).real();
  return 0.25 * std::norm(z) * a * a + B * a - slack(net, x, edge);
}

EdgeGap edge_delta(const RadialNetwork& net, const OperatingPoint& x, std::size_t edge) {
  distflow::check_dimensions(net, x);
  if (edge >= net.num_lines()) throw StructuralError("line index out of range");
  const auto& line = net.line(edge);
  const double v_floor = net.bus(net.from(edge)).v_min;
  if (line.l_max > v_floor * std::norm(net.admittance(edge)) * (1.0 + 1e-12)) {
    throw CertificateError("current limit exceeds v_min |y|^2 on line " + net.edge_name(edge),
                           static_cast<std::ptrdiff_t>(edge));
  }
  EdgeGap gap{edge, 0.0, false};
  if (!strict_slack(net, x, edge)) return gap;
  const auto ei = static_cast<Eigen::Index>(edge);
  const Complex z = line.z;
  const double B = x.v[static_cast<Eigen::Index>(net.from(edge))] - (z * std::conj(x.S[ei])).real();
  if (B < 0.0) {
    throw CertificateError("phi is not increasing on line " + net.edge_name(edge),
                           static_cast<std::ptrdiff_t>(edge));
  }
  gap.delta = positive_root(0.25 * std::norm(z), B, -slack(net, x, edge));
  gap.in_M = gap.delta > 0.0;
  return gap;
}

std::vector<EdgeGap> edge_gaps(const RadialNetwork& net, const OperatingPoint& x) {
  std::vector<EdgeGap> gaps;
  for (std::size_t e = 0; e < net.num_lines(); ++e) gaps.push_back(edge_delta(net, x, e));
  return gaps;
}

OperatingPoint path_point(const RadialNetwork& net, const OperatingPoint& x,
                          const std::vector<EdgeGap>& gaps, double t) {
  OperatingPoint y = x;
  for (const auto& g : gaps) {
    if (!g.in_M) continue;
    const auto ei = static_cast<Eigen::Index>(g.edge);
    const Complex shift = 0.5 * t * net.line(g.edge).z * g.delta;
    y.ell[ei] -= t * g.delta;
    y.S[ei] -= shift;
    y.s[static_cast<Eigen::Index>(net.from(g.edge))] -= shift;
    y.s[static_cast<Eigen::Index>(net.to(g.edge))] -= shift;
  }
  return y;
}

PathTrace restoration_path(const RadialNetwork& net, const OpfCost& cost, const OperatingPoint& x,
                           std::size_t samples) {
  distflow::check_dimensions(net, x);
  if (samples < 2) throw PreconditionError("restoration path needs at least 2 samples");
  const double rhat = distflow::residual_Xhat(net, x);
  if (rhat > kMembershipTol) {
    throw PreconditionError("point is not in the relaxed set (residual " + std::to_string(rhat) +
                            ")");
  }
  if (distflow::residual_X(net, x) <= kMembershipTol) {
    throw PreconditionError("point is already feasible; no restoration needed");
  }
  const auto gaps = edge_gaps(net, x);

  PathTrace trace;
  trace.segments = 1;
  trace.breakpoints = {0.0, 1.0};
  std::vector<OperatingPoint> states;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = i + 1 == samples ? 1.0 : static_cast<double>(i) / static_cast<double>(samples - 1);
    states.push_back(path_point(net, x, gaps, t));
    trace.params.push_back(t);
    trace.points.push_back(distflow::flatten(states.back()));
    trace.cost.push_back(cost(states.back()));
    trace.lyapunov.push_back(lyapunov_V(net, states.back()));
  }

  for (std::size_t i = 0; i < samples; ++i) {
    const auto si = static_cast<std::ptrdiff_t>(i);
    const double r = distflow::residual_Xhat(net, states[i]);
    if (r > kMembershipTol) {
      throw CertificateViolation("sample leaves the relaxed set (residual " + std::to_string(r) + ")",
                                 si);
    }
    if (i > 0 && !(trace.cost[i] < trace.cost[i - 1])) {
      throw CertificateViolation("cost is not strictly decreasing along the path", si);
    }
    if (i > 0 && !(trace.lyapunov[i] < trace.lyapunov[i - 1])) {
      throw CertificateViolation("V is not strictly decreasing along the path", si);
    }
  }
  const auto last = static_cast<std::ptrdiff_t>(samples - 1);
  if (distflow::residual_X(net, states.back()) > kMembershipTol) {
    throw CertificateViolation("path endpoint is not feasible", last);
  }
  if (trace.lyapunov.back() > kMembershipTol) {
    throw CertificateViolation("V does not vanish at the path endpoint", last);
  }
  return trace;
}

CprimeResult cprime_margin(const RadialNetwork& net, const OpfCost& cost, const PathTrace& trace) {
  trace.validate();
  CprimeResult out;
  const auto n = static_cast<Eigen::Index>(net.num_buses());
  double min_z = std::numeric_limits<double>::infinity();
  for (const auto& line : net.lines()) {
    min_z = std::min(min_z, std::abs(line.z.real()) + std::abs(line.z.imag()));
  }
  Eigen::VectorXd re_lo = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd im_lo = re_lo;
  for (const auto& p : trace.points) {
    for (Eigen::Index j = 0; j < n; ++j) {
      re_lo[j] = std::min(re_lo[j], p[j].real());
      im_lo[j] = std::min(im_lo[j], p[j].imag());
    }
  }
  out.c = distflow::strong_increase_constant(cost, re_lo, im_lo);
  out.c_hat = std::isfinite(min_z) && min_z > 0.0 ? out.c / (1.5 + 1.0 / min_z) : 0.0;

  std::vector<double> f = trace.cost;
  if (f.empty()) {
    for (const auto& p : trace.points) f.push_back(cost(ComplexVec(p.head(n))));
  }
  out.margin = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    for (std::size_t k = i + 1; k < trace.size(); ++k) {
      const double d = norm_m(trace.points[i] - trace.points[k]);
      if (d == 0.0) continue;
      any = true;
      out.margin = std::min(out.margin, (f[i] - f[k]) / d);
    }
  }
  if (!any) out.note = "constant path: margin is +infinity";
  return out;
}

ProblemHandle opf_handle(const RadialNetwork& net, const OpfCost& cost) {
  ProblemHandle h;
  h.cost = [net, cost](const ComplexVec& x) { return cost(distflow::unflatten(net, x)); };
  h.residual_X = [net](const ComplexVec& x) {
    return distflow::residual_X(net, distflow::unflatten(net, x));
  };
  h.residual_Xhat = [net](const ComplexVec& x) {
    return distflow::residual_Xhat(net, distflow::unflatten(net, x));
  };
  h.lyapunov = [net](const ComplexVec& x) {
    return lyapunov_V(net, distflow::unflatten(net, x));
  };
  return h;
}

TraceLayout opf_layout(const RadialNetwork& net) {
  TraceLayout layout;
  for (const auto& b : net.buses()) {
    layout.names.push_back("s" + std::to_string(b.id) + "_re");
    layout.names.push_back("s" + std::to_string(b.id) + "_im");
  }
  for (const auto& b : net.buses()) layout.names.push_back("v" + std::to_string(b.id));
  for (std::size_t e = 0; e < net.num_lines(); ++e) {
    layout.names.push_back("l" + net.edge_name(e));
  }
  for (std::size_t e = 0; e < net.num_lines(); ++e) {
    layout.names.push_back("S" + net.edge_name(e) + "_re");
    layout.names.push_back("S" + net.edge_name(e) + "_im");
  }
  layout.flatten = [net](const ComplexVec& flat) {
    const auto x = distflow::unflatten(net, flat);
    std::vector<double> row;
    for (Eigen::Index j = 0; j < x.s.size(); ++j) {
      row.push_back(x.s[j].real());
      row.push_back(x.s[j].imag());
    }
    for (Eigen::Index j = 0; j < x.v.size(); ++j) row.push_back(x.v[j]);
    for (Eigen::Index e = 0; e < x.ell.size(); ++e) row.push_back(x.ell[e]);
    for (Eigen::Index e = 0; e < x.S.size(); ++e) {
      row.push_back(x.S[e].real());
      row.push_back(x.S[e].imag());
    }
    return row;
  };
  return layout;
}

}  // namespace relaxcert::restore
