#include "relaxcert/generate.hpp"

#include <cmath>
#include <vector>

#include "relaxcert/errors.hpp"

namespace relaxcert::distflow {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

RadialNetwork random_radial_network(std::mt19937_64& rng, const GeneratorOptions& opts) {
  if (opts.min_buses < 2 || opts.max_buses < opts.min_buses) {
    throw PreconditionError("generator needs 2 <= min_buses <= max_buses");
  }
  const auto n = std::uniform_int_distribution<std::size_t>(opts.min_buses, opts.max_buses)(rng);
  std::vector<Bus> buses;
  for (std::size_t j = 0; j < n; ++j) {
    Bus b{static_cast<int>(j), opts.v_min, opts.v_max, std::nullopt, opts.s_max};
    if (j == 0 && opts.fix_root_voltage) b.v_min = b.v_max = 1.0;
    buses.push_back(b);
  }
  std::vector<Line> lines;
  for (std::size_t k = 1; k < n; ++k) {
    const auto parent = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    const Complex z(uniform(rng, opts.z_lo, opts.z_hi), uniform(rng, opts.z_lo, opts.z_hi));
    const double v_floor = buses[parent].v_min;
    lines.push_back({static_cast<int>(parent), static_cast<int>(k), z,
                     opts.l_max_factor * v_floor / std::norm(z)});
  }
  return RadialNetwork(std::move(buses), std::move(lines), 0);
}

OpfCost random_cost(std::mt19937_64& rng, std::size_t buses) {
  const auto n = static_cast<Eigen::Index>(buses);
  OpfCost c{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    c.cp[j] = uniform(rng, 0.5, 2.0);
    c.cq[j] = c.cp[j] + uniform(rng, 0.0, 1.0);
    c.qp[j] = uniform(rng, 0.0, 0.05);
    c.qq[j] = uniform(rng, 0.0, 0.05);
  }
  return c;
}

OperatingPoint forward_substitute(const RadialNetwork& net, double v_root, const ComplexVec& S) {
  const auto n = net.num_buses();
  const auto m = net.num_lines();
  if (static_cast<std::size_t>(S.size()) != m) throw StructuralError("one flow per line required");
  OperatingPoint x;
  x.S = S;
  x.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  x.ell = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  std::vector<bool> known(n, false);
  const auto root = net.root();
  x.v[static_cast<Eigen::Index>(root)] = v_root;
  known[root] = true;
  std::vector<std::size_t> stack{root};
  std::size_t reached = 1;
  while (!stack.empty()) {
    const auto j = stack.back();
    stack.pop_back();
    for (auto e : net.out_lines(j)) {
      const auto k = net.to(e);
      if (known[k]) throw StructuralError("lines must form a tree oriented away from the root");
      const auto ei = static_cast<Eigen::Index>(e);
      const double vj = x.v[static_cast<Eigen::Index>(j)];
      const Complex z = net.line(e).z;
      x.ell[ei] = std::norm(S[ei]) / vj;
      x.v[static_cast<Eigen::Index>(k)] =
          vj - 2.0 * (z * std::conj(S[ei])).real() + std::norm(z) * x.ell[ei];
      known[k] = true;
      ++reached;
      stack.push_back(k);
    }
  }
  if (reached != n) throw StructuralError("lines must form a tree oriented away from the root");
  x.s = ComplexVec::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t e = 0; e < m; ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    x.s[static_cast<Eigen::Index>(net.from(e))] += S[ei];
    x.s[static_cast<Eigen::Index>(net.to(e))] -= S[ei] - net.line(e).z * x.ell[ei];
  }
  return x;
}

OperatingPoint random_exact_point(const RadialNetwork& net, std::mt19937_64& rng,
                                  double flow_scale) {
  ComplexVec S(static_cast<Eigen::Index>(net.num_lines()));
  for (Eigen::Index e = 0; e < S.size(); ++e) {
    S[e] = Complex(uniform(rng, -flow_scale, flow_scale), uniform(rng, -flow_scale, flow_scale));
  }
  return forward_substitute(net, 1.0, S);
}

void inflate_edge(const RadialNetwork& net, OperatingPoint& x, std::size_t e, double D) {
  const auto ei = static_cast<Eigen::Index>(e);
  const Complex half = 0.5 * net.line(e).z * D;
  x.ell[ei] += D;
  x.S[ei] += half;
  x.s[static_cast<Eigen::Index>(net.from(e))] += half;
  x.s[static_cast<Eigen::Index>(net.to(e))] += half;
}

double inflation_for_slack(const RadialNetwork& net, const OperatingPoint& x, std::size_t e,
                           double slack) {
  const auto ei = static_cast<Eigen::Index>(e);
  const Complex z = net.line(e).z;
  const double B = x.v[static_cast<Eigen::Index>(net.from(e))] - (z * std::conj(x.S[ei])).real();
  const double disc = B * B - std::norm(z) * slack;
  if (slack < 0.0 || B <= 0.0 || disc < 0.0) {
    throw PreconditionError("requested cone slack is not reachable on line " + net.edge_name(e));
  }
  return 2.0 * slack / (B + std::sqrt(disc));
}

OperatingPoint inflate_to_slack(const RadialNetwork& net, const OperatingPoint& x,
                                std::size_t e, double slack) {
  OperatingPoint y = x;
  inflate_edge(net, y, e, inflation_for_slack(net, x, e, slack));
  return y;
}

std::vector<OperatingPoint> relaxed_points(const RadialNetwork& net, std::size_t count,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<OperatingPoint> out;
  const auto m = net.num_lines();
  if (m == 0) return out;
  const auto& root = net.bus(net.root());
  double scale = 0.2;
  std::size_t misses = 0;
  while (out.size() < count && misses < 200 * count + 1000) {
    ComplexVec S(static_cast<Eigen::Index>(m));
    for (Eigen::Index e = 0; e < S.size(); ++e) {
      S[e] = Complex(uniform(rng, -scale, scale), uniform(rng, -scale, scale));
    }
    const double v_root = root.v_min == root.v_max ? root.v_min : uniform(rng, root.v_min, root.v_max);
    OperatingPoint x = forward_substitute(net, v_root, S);
    if (residual_Xhat(net, x) > kMembershipTol) {
      if (++misses % 20 == 0) scale *= 0.5;
      continue;
    }
    bool any = false;
    for (std::size_t e = 0; e < m; ++e) {
      if (std::bernoulli_distribution(0.5)(rng) || (!any && e + 1 == m)) {
        const double vl = x.v[static_cast<Eigen::Index>(net.from(e))] * x.ell[static_cast<Eigen::Index>(e)];
        double slack = uniform(rng, 0.01, 0.3) * std::max(vl, 0.05);
        for (int tries = 0; tries < 20; ++tries, slack *= 0.5) {
          try {
            OperatingPoint y = inflate_to_slack(net, x, e, slack);
            if (residual_Xhat(net, y) <= kMembershipTol) {
              x = std::move(y);
              any = true;
              break;
            }
          } catch (const PreconditionError&) {
          }
        }
      }
    }
    if (!any || residual_X(net, x) <= kMembershipTol) {
      ++misses;
      continue;
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace relaxcert::distflow
