#include "relaxcert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "relaxcert/errors.hpp"
#include "relaxcert/generate.hpp"
#include "relaxcert/restore.hpp"

namespace relaxcert::certify {

namespace {

constexpr double kMonotoneSlack = 1e-12;
constexpr double kCostTie = 1e-9;
constexpr double kAnchorTol = 1e-12;

bool rises(double before, double after) {
  return after > before + kMonotoneSlack * (1.0 + std::abs(before));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

void ensure_annotated(PathTrace& trace, const ProblemHandle& handle) {
  if (trace.cost.size() != trace.size() ||
      (handle.has_lyapunov() && trace.lyapunov.size() != trace.size())) {
    annotate(trace, handle);
  }
}

bool in_box(const ReducedProblem& p, const Eigen::VectorXd& y) {
  return (y.array() >= p.lo.array()).all() && (y.array() <= p.hi.array()).all();
}

bool feasible(const ReducedProblem& p, const Eigen::VectorXd& y, double band) {
  if (!in_box(p, y)) return false;
  const double r = p.residual(y);
  return std::isfinite(r) && r <= band;
}


struct Refinement {
  Eigen::VectorXd point;
  double cost = 0.0;
  bool escapes = false;  // descended farther than two cell diagonals
};

// cheapest feasible point of a finer grid inside a ball around center
Eigen::VectorXd ball_minimum(const ReducedProblem& p, const Eigen::VectorXd& center, double radius,
                             double fine) {
  const auto d = p.dim();
  const double band = p.band + p.band_slope * fine;
  const int half = static_cast<int>(std::ceil(radius / fine));
  Eigen::VectorXd best = center;
  double best_f = p.cost(center);
  std::vector<int> k(static_cast<std::size_t>(d), -half);
  Eigen::VectorXd y(d);
  for (bool more = true; more;) {
    for (Eigen::Index i = 0; i < d; ++i) y[i] = center[i] + k[static_cast<std::size_t>(i)] * fine;
    if ((y - center).norm() <= radius && feasible(p, y, band)) {
      const double f = p.cost(y);
      if (f < best_f) {
        best_f = f;
        best = y;
      }
    }
    more = false;
    for (auto& ki : k) {
      if (++ki <= half) {
        more = true;
        break;
      }
      ki = -half;
    }
  }
  return best;
}

// repeated ball minimisation from a grid optimum; a true local optimum lies
// within half a cell diagonal of its grid representative
Refinement refine_descent(const ReducedProblem& p, const Eigen::VectorXd& start, double h) {
  const auto d = p.dim();
  const double radius = (d <= 2 ? 3.0 : 2.0) * h;
  const double fine = h / (d <= 2 ? 8.0 : 2.0);
  const double reach = 2.0 * h * std::sqrt(static_cast<double>(d));
  Refinement r;
  r.point = start;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd next = ball_minimum(p, r.point, radius, fine);
    const bool settled = (next - r.point).norm() <= 1.5 * fine;
    r.point = next;
    if ((r.point - start).norm() > reach) {
      r.escapes = true;
      break;
    }
    if (settled) break;
  }
  r.cost = p.cost(r.point);
  return r;
}

}  // namespace

std::string to_string(Exactness e) {
  switch (e) {
    case Exactness::Strong: return "strong";
    case Exactness::Weak: return "weak";
    case Exactness::Unknown: return "unknown";
  }
  return "unknown";
}

std::string to_string(Label l) {
  switch (l) {
    case Label::None: return "none";
    case Label::Global: return "global";
    case Label::Pseudo: return "pseudo";
    case Label::Genuine: return "genuine";
  }
  return "none";
}

bool CertificateReport::invariants_hold() const {
  if (c1.pass && !c3.pass) return false;
  if (cprime.pass && !c1.pass) return false;
  return true;
}

// ------------------------------------------------------------------ checks

CertificateReport check_c1_c3(const CertifiedProblem& problem, std::span<const ComplexVec> points,
                              const CheckOptions& options) {
  const auto& h = problem.handle;
  if (!h.has_lyapunov()) throw PreconditionError("certified problem has no Lyapunov function");
  if (!problem.path_factory) throw PreconditionError("certified problem has no path factory");

  CertificateReport rep;
  rep.seed = options.seed;
  rep.tol = h.tol;
  rep.sample_count = points.size();
  rep.c1.evaluated = rep.c3.evaluated = rep.c2_proxy.evaluated = true;
  rep.cprime.evaluated = options.cprime;

  bool c1 = true, c3 = true, cp = options.cprime;
  double c1_margin = std::numeric_limits<double>::infinity();
  double c3_margin = std::numeric_limits<double>::infinity();
  double cp_margin = std::numeric_limits<double>::infinity();
  std::size_t exact_inputs = 0;
  std::vector<PathTrace> traces;

  auto fail = [&](const char* cond, std::size_t i, std::ptrdiff_t sample, std::string msg) {
    rep.witnesses.push_back({cond, static_cast<std::ptrdiff_t>(i), sample, std::move(msg)});
  };

  for (std::size_t i = 0; i < points.size(); ++i) {
    const ComplexVec& x = points[i];
    const double rhat = h.residual_Xhat(x);
    if (!(rhat <= h.tol)) {
      c1 = c3 = cp = false;
      fail("c3", i, -1, "sampled point outside the relaxed set, residual " + fmt(rhat));
      continue;
    }
    if (h.in_X(x)) {
      ++exact_inputs;
      continue;
    }
    PathTrace trace;
    try {
      trace = problem.path_factory(x);
    } catch (const CertificateViolation& e) {
      c1 = c3 = cp = false;
      fail("c3", i, static_cast<std::ptrdiff_t>(e.sample()), e.what());
      continue;
    } catch (const Error& e) {
      c1 = c3 = cp = false;
      fail("c3", i, -1, std::string("path construction failed: ") + e.what());
      continue;
    }
    ensure_annotated(trace, h);
    const double anchor = (trace.front() - x).norm();
    bool ok = anchor <= kAnchorTol * (1.0 + x.norm());
    if (!ok) fail("c3", i, 0, "path does not start at the sampled point, offset " + fmt(anchor));

    bool monotone = true;
    for (std::size_t k = 0; k < trace.size(); ++k) {
      const double r = h.residual_Xhat(trace.points[k]);
      if (!(r <= h.tol)) {
        ok = false;
        fail("c3", i, static_cast<std::ptrdiff_t>(k), "sample leaves the relaxed set, residual " + fmt(r));
        break;
      }
      if (k == 0) continue;
      if (rises(trace.cost[k - 1], trace.cost[k])) {
        monotone = false;
        fail("c1", i, static_cast<std::ptrdiff_t>(k), "cost increases along the path");
        break;
      }
      if (rises(trace.lyapunov[k - 1], trace.lyapunov[k])) {
        monotone = false;
        fail("c3", i, static_cast<std::ptrdiff_t>(k), "V increases along the path");
        break;
      }
    }
    const double end_res = h.residual_X(trace.back());
    c3_margin = std::min(c3_margin, h.tol - end_res);
    const bool ends_exact = end_res <= h.tol;
    if (!ends_exact) {
      fail("c3", i, static_cast<std::ptrdiff_t>(trace.size() - 1),
           "path ends outside the exact set, residual " + fmt(end_res));
    }
    const bool point_c3 = ok && ends_exact && monotone;
    c3 = c3 && point_c3;

    const double f0 = trace.cost.front();
    const double f1 = trace.cost.back();
    const double drop = f0 - f1;
    c1_margin = std::min(c1_margin, drop / (1.0 + std::abs(f0)));
    const bool strict = drop >= kMonotoneSlack * (1.0 + std::abs(f0));
    if (point_c3 && !strict) {
      fail("c1", i, static_cast<std::ptrdiff_t>(trace.size() - 1),
           "endpoint cost not strictly below the start (drop " + fmt(drop) + ")");
    }
    const bool point_c1 = point_c3 && strict;
    c1 = c1 && point_c1;

    if (options.cprime) {
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < trace.size(); ++a) {
        for (std::size_t b = a + 1; b < trace.size(); ++b) {
          const double d = norm_m(trace.points[a] - trace.points[b]);
          if (d <= 1e-14) continue;
          ratio = std::min(ratio, (trace.cost[a] - trace.cost[b]) / d);
        }
      }
      cp_margin = std::min(cp_margin, ratio);
      if (!point_c1 || !(ratio > 0.0)) {
        cp = false;
        if (point_c1) fail("cprime", i, -1, "sampled decrease ratio " + fmt(ratio) + " is not positive");
      }
    }
    traces.push_back(std::move(trace));
  }

  const auto pl = check_piecewise_linear_family(traces, problem.segment_bound, 1e-9,
                                                problem.bound() * (1.0 + 1e-9) + 1e-12);
  rep.c2_proxy.pass = pl.ok;
  rep.c2_proxy.margin = pl.worst_deviation;
  rep.c2_proxy.detail = pl.ok ? "paths are piecewise linear with at most " +
                                    std::to_string(problem.segment_bound) +
                                    " segments inside a common box"
                              : pl.note;
  if (!pl.ok) {
    rep.witnesses.push_back({"c2_proxy", pl.witness_trace, pl.witness_sample, pl.note});
  }

  const bool any = !traces.empty();
  rep.c3.pass = c3;
  rep.c3.margin = any ? c3_margin : 0.0;
  rep.c3.detail = std::to_string(traces.size()) + " paths checked";
  rep.c1.pass = c1 && c3;
  rep.c1.margin = any ? c1_margin : 0.0;
  rep.c1.detail = rep.c3.detail;
  rep.cprime.pass = options.cprime && cp && rep.c1.pass;
  rep.cprime.margin = any ? cp_margin : 0.0;
  if (options.cprime) rep.cprime.detail = "smallest sampled cost drop per unit m-norm distance";
  if (exact_inputs) {
    rep.notes.push_back(std::to_string(exact_inputs) + " sampled points were already exact");
  }
  if (!any) rep.notes.push_back("no sampled point outside the exact set");
  return rep;
}

ExactnessResult check_exactness(const CertifiedProblem& problem, const ComplexVec& optimum,
                                double kkt_residual, bool unique, double kkt_tol) {
  if (!(kkt_residual <= kkt_tol)) {
    throw PreconditionError("point is not a relaxation optimum: optimality residual " +
                            fmt(kkt_residual) + " above " + fmt(kkt_tol));
  }
  const auto& h = problem.handle;
  ExactnessResult res;
  if (h.in_X(optimum)) {
    if (unique) {
      res.verdict = Exactness::Strong;
      res.detail = "optimum is exact and certified unique";
    } else {
      res.verdict = Exactness::Weak;
      res.detail = "optimum is exact; uniqueness not certified";
    }
    return res;
  }
  PathTrace trace;
  try {
    trace = problem.path_factory(optimum);
  } catch (const Error& e) {
    res.detail = std::string("restoration from the optimum failed: ") + e.what();
    return res;
  }
  ensure_annotated(trace, h);
  const double f0 = trace.cost.front();
  const double f1 = trace.cost.back();
  res.cost_drop = f0 - f1;
  if (!h.in_X(trace.back())) {
    res.detail = "restoration did not reach the exact set";
  } else if (std::abs(res.cost_drop) <= 1e-8 * (1.0 + std::abs(f0))) {
    res.verdict = Exactness::Weak;
    res.detail = "restoration reaches an exact point at equal cost";
  } else if (res.cost_drop > 0.0) {
    res.suboptimal_witness = true;
    res.detail = "restoration lowers the cost by " + fmt(res.cost_drop) +
                 ": the reported optimum is not optimal";
  } else {
    res.detail = "restoration raised the cost by " + fmt(-res.cost_drop);
  }
  return res;
}

// -------------------------------------------------------------- landscapes

std::vector<std::vector<std::size_t>> chain_adjacency(std::size_t n) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    adj[i].push_back(i + 1);
    adj[i + 1].push_back(i);
  }
  return adj;
}

std::vector<std::vector<std::size_t>> radius_adjacency(const std::vector<Eigen::VectorXd>& points,
                                                       double radius) {
  std::vector<std::vector<std::size_t>> adj(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if ((points[i] - points[j]).norm() <= radius) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  return adj;
}

std::vector<Label> classify_local_optima(const LandscapeGrid& grid) {
  const auto n = grid.points.size();
  if (n == 0) throw PreconditionError("landscape grid is empty");
  if (grid.costs.size() != n || grid.adjacency.size() != n) {
    throw StructuralError("grid costs and adjacency must match the points");
  }
  const auto& f = grid.costs;
  std::vector<bool> local(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : grid.adjacency[i]) {
      if (f[j] < f[i] - kCostTie) {
        local[i] = false;
        break;
      }
    }
  }
  // equal-cost components over all points
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : grid.adjacency[i]) {
      if (std::abs(f[i] - f[j]) <= kCostTie) uf.join(i, j);
    }
  }
  std::vector<bool> tainted(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!local[i]) tainted[uf.find(i)] = true;
  }
  const double fmin = *std::min_element(f.begin(), f.end());
  std::vector<Label> labels(n, Label::None);
  for (std::size_t i = 0; i < n; ++i) {
    if (!local[i]) continue;
    if (f[i] <= fmin + kCostTie) {
      labels[i] = Label::Global;
    } else if (tainted[uf.find(i)]) {
      labels[i] = Label::Pseudo;
    } else {
      labels[i] = Label::Genuine;
    }
  }
  return labels;
}

std::vector<OptimumGroup> group_optima(const LandscapeGrid& grid, const std::vector<Label>& labels) {
  const auto n = grid.points.size();
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == Label::None) continue;
    for (auto j : grid.adjacency[i]) {
      if (labels[j] == labels[i] && std::abs(grid.costs[i] - grid.costs[j]) <= kCostTie) uf.join(i, j);
    }
  }
  std::vector<OptimumGroup> groups;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == Label::None) continue;
    const auto r = uf.find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::ptrdiff_t>(groups.size());
      groups.push_back({labels[i], grid.costs[i], {}});
    }
    auto& g = groups[static_cast<std::size_t>(slot[r])];
    g.members.push_back(i);
    g.cost = std::min(g.cost, grid.costs[i]);
  }
  return groups;
}

// ------------------------------------------------------------------ oracle

std::size_t OracleResult::count(Label l) const {
  return static_cast<std::size_t>(
      std::count_if(optima.begin(), optima.end(), [l](const OptimumGroup& g) { return g.label == l; }));
}

OracleResult brute_force_oracle(const ReducedProblem& problem, double resolution) {
  const auto d = problem.dim();
  if (d > kOracleMaxDim) {
    throw RefusalError("oracle refused: " + std::to_string(d) + " free coordinates exceed the limit of " +
                       std::to_string(kOracleMaxDim));
  }
  if (d == 0) throw PreconditionError("oracle needs at least one free coordinate");
  if (!(resolution > 0.0)) throw PreconditionError("oracle resolution must be positive");
  if (problem.hi.size() != d || !(problem.hi.array() >= problem.lo.array()).all()) {
    throw PreconditionError("oracle box is empty");
  }
  OracleResult out;
  out.resolution = resolution;
  double cells = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto k = static_cast<Eigen::Index>(
        std::floor((problem.hi[i] - problem.lo[i]) / resolution + 1e-9)) + 1;
    out.shape.push_back(k);
    cells *= static_cast<double>(k);
  }
  if (cells > 2e7) {
    throw RefusalError("oracle refused: " + fmt(cells) + " grid cells at resolution " + fmt(resolution));
  }
  const auto total = static_cast<std::size_t>(cells);
  const double band = problem.band + problem.band_slope * resolution;
  std::vector<std::int32_t> index(total, -1);
  std::vector<Eigen::Index> strides(static_cast<std::size_t>(d), 1);
  for (Eigen::Index i = 1; i < d; ++i) {
    strides[static_cast<std::size_t>(i)] = strides[static_cast<std::size_t>(i - 1)] * out.shape[static_cast<std::size_t>(i - 1)];
  }
  auto& grid = out.grid;
  std::vector<std::size_t> cell_of;
  Eigen::VectorXd y(d);
  for (std::size_t c = 0; c < total; ++c) {
    auto rem = static_cast<Eigen::Index>(c);
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto k = rem % out.shape[static_cast<std::size_t>(i)];
      rem /= out.shape[static_cast<std::size_t>(i)];
      y[i] = problem.lo[i] + static_cast<double>(k) * resolution;
    }
    if (!feasible(problem, y, band)) continue;
    const double f = problem.cost(y);
    if (!std::isfinite(f)) continue;
    index[c] = static_cast<std::int32_t>(grid.points.size());
    grid.points.push_back(y);
    grid.costs.push_back(f);
    cell_of.push_back(c);
  }
  if (grid.points.empty()) {
    throw PreconditionError("infeasible at resolution " + fmt(resolution));
  }

  // neighbour offsets in {-1, 0, 1}^d within 1.5 spacings
  std::vector<std::vector<int>> offsets;
  const auto combos = static_cast<int>(std::pow(3, static_cast<double>(d)));
  for (int code = 0; code < combos; ++code) {
    std::vector<int> off(static_cast<std::size_t>(d));
    int c = code, sq = 0;
    for (auto& o : off) {
      o = c % 3 - 1;
      c /= 3;
      sq += o * o;
    }
    if (sq > 0 && std::sqrt(static_cast<double>(sq)) <= 1.5) offsets.push_back(off);
  }
  const auto n = grid.points.size();
  grid.adjacency.assign(n, {});
  for (std::size_t p = 0; p < n; ++p) {
    const auto c = static_cast<Eigen::Index>(cell_of[p]);
    std::vector<Eigen::Index> k(static_cast<std::size_t>(d));
    auto rem = c;
    for (Eigen::Index i = 0; i < d; ++i) {
      k[static_cast<std::size_t>(i)] = rem % out.shape[static_cast<std::size_t>(i)];
      rem /= out.shape[static_cast<std::size_t>(i)];
    }
    for (const auto& off : offsets) {
      Eigen::Index nc = 0;
      bool inside = true;
      for (Eigen::Index i = 0; i < d && inside; ++i) {
        const auto ki = k[static_cast<std::size_t>(i)] + off[static_cast<std::size_t>(i)];
        if (ki < 0 || ki >= out.shape[static_cast<std::size_t>(i)]) inside = false;
        nc += ki * strides[static_cast<std::size_t>(i)];
      }
      if (!inside) continue;
      const auto q = index[static_cast<std::size_t>(nc)];
      if (q >= 0) grid.adjacency[p].push_back(static_cast<std::size_t>(q));
    }
  }

  UnionFind uf(n);
  for (std::size_t p = 0; p < n; ++p) {
    for (auto q : grid.adjacency[p]) {
      uf.join(p, q);
      if (q > p) {
        const double dist = (grid.points[p] - grid.points[q]).norm();
        out.lipschitz = std::max(out.lipschitz, std::abs(grid.costs[p] - grid.costs[q]) / dist);
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (uf.find(p) == p) ++out.components;
  }

  out.labels = classify_local_optima(grid);
  auto groups = group_optima(grid, out.labels);
  std::vector<Refinement> refined;
  for (const auto& g : groups) {
    refined.push_back(refine_descent(problem, grid.points[g.members.front()], resolution));
  }
  // a candidate joined to a better point below a barrier of one grid step
  // of cost variation is not resolved by the grid
  const double barrier = out.lipschitz * resolution;
  auto shallow = [&](const OptimumGroup& g) {
    const double ceiling = g.cost + barrier;
    const double floor = g.cost - 1e-9 * (1.0 + std::abs(g.cost));
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack(g.members.begin(), g.members.end());
    for (auto m : stack) seen[m] = 1;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      if (grid.costs[p] < floor) return true;
      for (auto q : grid.adjacency[p]) {
        if (seen[q] || grid.costs[q] > ceiling) continue;
        seen[q] = 1;
        stack.push_back(q);
      }
    }
    return false;
  };
  for (std::size_t a = 0; a < groups.size(); ++a) {
    if (groups[a].label != Label::Genuine) continue;
    bool artifact = refined[a].escapes || shallow(groups[a]);
    for (std::size_t b = 0; b < groups.size() && !artifact; ++b) {
      if (b == a || groups[b].label == Label::None || groups[b].cost > groups[a].cost) continue;
      if ((refined[a].point - refined[b].point).norm() <= 2.0 * resolution) artifact = true;
    }
    if (artifact) {
      for (auto m : groups[a].members) out.labels[m] = Label::None;
      groups[a].label = Label::None;
      ++out.demoted;
    }
  }
  for (auto& g : groups) {
    if (g.label != Label::None) out.optima.push_back(std::move(g));
  }
  out.global_cost = *std::min_element(grid.costs.begin(), grid.costs.end());
  for (std::size_t p = 0; p < n; ++p) {
    if (out.labels[p] == Label::Global) out.global_points.push_back(p);
  }
  return out;
}

ReducedProblem eliminate_opf(const distflow::RadialNetwork& net, const distflow::OpfCost& cost) {
  const auto m = net.num_lines();
  if (m == 0) throw PreconditionError("network has no lines to eliminate over");
  const auto& root = net.bus(net.root());
  const bool free_root = root.v_min != root.v_max;
  const auto d = static_cast<Eigen::Index>(2 * m + (free_root ? 1 : 0));
  ReducedProblem p;
  p.name = "opf(" + std::to_string(net.num_buses()) + " buses)";
  p.lo.resize(d);
  p.hi.resize(d);
  for (std::size_t e = 0; e < m; ++e) {
    const double cap = std::sqrt(net.line(e).l_max * net.bus(net.from(e)).v_max);
    const auto i = static_cast<Eigen::Index>(2 * e);
    p.lo[i] = p.lo[i + 1] = -cap;
    p.hi[i] = p.hi[i + 1] = cap;
  }
  if (free_root) {
    p.lo[d - 1] = root.v_min;
    p.hi[d - 1] = root.v_max;
  }
  auto point = [net, m, free_root, v0 = root.v_min](const Eigen::VectorXd& y) {
    ComplexVec S(static_cast<Eigen::Index>(m));
    for (std::size_t e = 0; e < m; ++e) {
      const auto i = static_cast<Eigen::Index>(2 * e);
      S[static_cast<Eigen::Index>(e)] = Complex(y[i], y[i + 1]);
    }
    return distflow::forward_substitute(net, free_root ? y[y.size() - 1] : v0, S);
  };
  // structural check up front: forward substitution needs an oriented tree
  if (!(root.v_min > 0.0)) throw PreconditionError("root voltage lower bound must be positive");
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(d);
  if (free_root) probe[d - 1] = root.v_min;
  (void)point(probe);
  p.cost = [point, cost](const Eigen::VectorXd& y) { return cost(point(y)); };
  p.residual = [point, net](const Eigen::VectorXd& y) {
    return distflow::residual_Xhat(net, point(y));
  };
  p.band = 1e-10;
  p.lift = [point](const Eigen::VectorXd& y) { return distflow::flatten(point(y)); };
  return p;
}

ReducedProblem eliminate_lrsdp(const lrsdp::LrsdpInstance& inst) {
  inst.validate();
  if (inst.n() != 2 || inst.m() != 1 || !inst.is_real()) {
    throw PreconditionError("lrsdp elimination needs a real instance with n = 2 and m = 1");
  }
  const Eigen::Matrix2d A = inst.A[0].real();
  const Eigen::Matrix2d C = inst.C.real();
  const double b = inst.b[0];
  const double lam = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(A).eigenvalues()[0];
  if (!(lam > 0.0) || !(b >= 0.0)) {
    throw PreconditionError("lrsdp elimination needs a positive definite constraint and b >= 0");
  }
  const double T = b / lam;  // trace bound on the feasible slice
  ReducedProblem p;
  p.name = "lrsdp(n=2)";
  p.lo = Eigen::Vector2d(0.0, -T);
  p.hi = Eigen::Vector2d(T, T);
  auto mat = [A, b](const Eigen::VectorXd& y) {
    Eigen::Matrix2d X;
    const double d = (b - A(0, 0) * y[0] - 2.0 * A(0, 1) * y[1]) / A(1, 1);
    X << y[0], y[1], y[1], d;
    return X;
  };
  p.cost = [mat, C](const Eigen::VectorXd& y) { return (C * mat(y)).trace(); };
  p.residual = [mat](const Eigen::VectorXd& y) {
    const Eigen::Matrix2d X = mat(y);
    return std::max(0.0, -Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(X).eigenvalues()[0]);
  };
  p.band = 1e-12;
  p.lift = [mat](const Eigen::VectorXd& y) {
    return lrsdp::flatten(mat(y).cast<Complex>());
  };
  return p;
}

// ------------------------------------------------------------ local search

LocalOptimum local_search(const ReducedProblem& problem, const Eigen::VectorXd& start,
                          double initial_mesh, std::uint64_t seed) {
  constexpr long kMaxEvaluations = 200000;
  constexpr double kMinMesh = 1e-10;
  const auto d = problem.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  LocalOptimum out;
  out.point = start;
  out.cost = problem.cost(start);
  double mesh = initial_mesh;
  long evals = 1;
  std::vector<Eigen::VectorXd> dirs;
  while (mesh > kMinMesh && evals < kMaxEvaluations) {
    dirs.clear();
    for (Eigen::Index i = 0; i < d; ++i) {
      dirs.push_back(Eigen::VectorXd::Unit(d, i));
      dirs.push_back(-Eigen::VectorXd::Unit(d, i));
    }
    // a dense set of random directions keeps the poll from stalling where a
    // curved constraint boundary blocks every coordinate move
    for (Eigen::Index i = 0; i < 8 * d; ++i) {
      Eigen::VectorXd v(d);
      for (Eigen::Index k = 0; k < d; ++k) v[k] = normal(rng);
      dirs.push_back(v / std::max(v.norm(), 1e-300));
    }
    bool moved = false;
    for (const auto& dir : dirs) {
      const Eigen::VectorXd y = out.point + mesh * dir;
      if (!feasible(problem, y, problem.band)) continue;
      const double f = problem.cost(y);
      ++evals;
      if (f < out.cost) {
        out.point = y;
        out.cost = f;
        moved = true;
        break;
      }
    }
    mesh = moved ? std::min(2.0 * mesh, initial_mesh) : 0.5 * mesh;
  }
  out.first_order_residual = mesh;
  out.evaluations = evals;
  out.converged = mesh <= 1e-6;
  return out;
}

SearchResult multistart_local_search(const ReducedProblem& problem, std::size_t starts,
                                     std::uint64_t seed) {
  const auto d = problem.dim();
  if (d == 0) throw PreconditionError("local search needs at least one free coordinate");
  SearchResult out;
  const Eigen::VectorXd width = problem.hi - problem.lo;
  const double mesh = 0.1 * std::max(width.maxCoeff(), 1e-12);
  const auto raw = quasi_random_points(d, std::max<std::size_t>(200 * starts, 1000), seed);
  std::size_t infeasible = 0;
  for (const auto& u : raw) {
    if (out.runs >= starts) break;
    const Eigen::VectorXd x = problem.lo + width.cwiseProduct(u);
    if (!feasible(problem, x, problem.band)) {
      ++infeasible;
      continue;
    }
    auto opt = local_search(problem, x, mesh, seed * 1000003ULL + out.runs);
    ++out.runs;
    if (opt.converged) {
      out.optima.push_back(std::move(opt));
    } else {
      out.diagnostics.push_back("run " + std::to_string(out.runs - 1) +
                                " stopped with mesh " + fmt(opt.first_order_residual));
    }
  }
  if (out.runs < starts) {
    out.diagnostics.push_back("only " + std::to_string(out.runs) + " feasible starts found (" +
                              std::to_string(infeasible) + " rejected)");
  }
  return out;
}

// -------------------------------------------------------------------- glue

CertifiedProblem opf_certified(const distflow::RadialNetwork& net, const distflow::OpfCost& cost) {
  CertifiedProblem p;
  p.name = "opf";
  p.handle = restore::opf_handle(net, cost);
  p.segment_bound = 1;
  p.path_factory = [net, cost](const ComplexVec& x) {
    return restore::restoration_path(net, cost, distflow::unflatten(net, x));
  };
  const auto N = static_cast<Eigen::Index>(net.num_buses());
  const auto E = static_cast<Eigen::Index>(net.num_lines());
  const auto dim = 2 * N + 2 * E;
  p.box_lo = Eigen::VectorXd::Zero(2 * dim);
  p.box_hi = Eigen::VectorXd::Zero(2 * dim);
  for (Eigen::Index j = 0; j < N; ++j) {
    const auto& b = net.bus(static_cast<std::size_t>(j));
    const Complex lo = net.effective_s_min(static_cast<std::size_t>(j));
    p.box_lo[2 * j] = lo.real();
    p.box_lo[2 * j + 1] = lo.imag();
    p.box_hi[2 * j] = b.s_max.real();
    p.box_hi[2 * j + 1] = b.s_max.imag();
    p.box_lo[2 * (N + j)] = b.v_min;
    p.box_hi[2 * (N + j)] = b.v_max;
  }
  for (Eigen::Index e = 0; e < E; ++e) {
    const auto& l = net.line(static_cast<std::size_t>(e));
    const double cap = std::sqrt(l.l_max * net.bus(net.from(static_cast<std::size_t>(e))).v_max);
    p.box_hi[2 * (2 * N + e)] = l.l_max;
    const auto k = 2 * (2 * N + E + e);
    p.box_lo[k] = p.box_lo[k + 1] = -cap;
    p.box_hi[k] = p.box_hi[k + 1] = cap;
  }
  p.sampler = [net](std::size_t count, std::uint64_t seed) {
    std::vector<ComplexVec> out;
    for (const auto& x : distflow::relaxed_points(net, count, seed)) out.push_back(distflow::flatten(x));
    return out;
  };
  return p;
}

CertifiedProblem lrsdp_certified(const lrsdp::LrsdpInstance& inst, const lrsdp::Matrix& anchor) {
  inst.validate();
  const auto n = inst.n();
  const auto ni = static_cast<Eigen::Index>(n);
  if (anchor.rows() != ni || anchor.cols() != ni) throw StructuralError("anchor has the wrong size");
  CertifiedProblem p;
  p.name = "lrsdp";
  p.handle = lrsdp::lrsdp_handle(inst);
  if (!p.handle.in_Xhat(lrsdp::flatten(anchor))) {
    throw PreconditionError("anchor is not a feasible point of the relaxation");
  }
  p.segment_bound = std::max<std::size_t>(1, n > inst.r ? n - inst.r : 1);
  p.path_factory = [inst, n](const ComplexVec& x) {
    return lrsdp::reduce_rank_path(inst, lrsdp::PsdPoint::from(lrsdp::unflatten(x, n))).trace;
  };

  double T = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.m(); ++i) {
    const double lam = Eigen::SelfAdjointEigenSolver<lrsdp::Matrix>(inst.A[i]).eigenvalues()[0];
    if (lam > 0.0) T = std::min(T, inst.b[static_cast<Eigen::Index>(i)] / lam);
  }
  if (!std::isfinite(T)) T = distflow::kBigBox;
  p.box_lo = Eigen::VectorXd::Constant(2 * ni * ni, -T);
  p.box_hi = Eigen::VectorXd::Constant(2 * ni * ni, T);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const auto k = 2 * (i * ni + i);
    p.box_lo[k] = 0.0;
    p.box_lo[k + 1] = p.box_hi[k + 1] = 0.0;
  }

  // Hermitian basis and the null space of the constraint map on it
  const bool real = inst.is_real() && anchor.imag().cwiseAbs().maxCoeff() == 0.0;
  std::vector<lrsdp::Matrix> basis;
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = i; j < ni; ++j) {
      lrsdp::Matrix E = lrsdp::Matrix::Zero(ni, ni);
      E(i, j) = E(j, i) = 1.0;
      basis.push_back(E);
      if (!real && i != j) {
        lrsdp::Matrix F = lrsdp::Matrix::Zero(ni, ni);
        F(i, j) = Complex(0.0, 1.0);
        F(j, i) = Complex(0.0, -1.0);
        basis.push_back(F);
      }
    }
  }
  const auto nb = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd M(static_cast<Eigen::Index>(std::max<std::size_t>(inst.m(), 1)), nb);
  M.setZero();
  for (std::size_t i = 0; i < inst.m(); ++i) {
    for (Eigen::Index k = 0; k < nb; ++k) {
      M(static_cast<Eigen::Index>(i), k) = lrsdp::inner(inst.A[i], basis[static_cast<std::size_t>(k)]);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > 1e-10 * std::max(1.0, smax)) ++rank;
  }
  const Eigen::MatrixXd null = svd.matrixV().rightCols(nb - rank);
  const double lam0 = Eigen::SelfAdjointEigenSolver<lrsdp::Matrix>(anchor).eigenvalues()[0];

  p.sampler = [anchor, basis, null, lam0, h = p.handle](std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.05, 0.9);
    std::vector<ComplexVec> out;
    if (null.cols() == 0) return out;
    for (std::size_t tries = 0; out.size() < count && tries < 50 * count + 100; ++tries) {
      Eigen::VectorXd g(null.cols());
      for (Eigen::Index k = 0; k < g.size(); ++k) g[k] = normal(rng);
      const Eigen::VectorXd coef = null * g;
      lrsdp::Matrix H = lrsdp::Matrix::Zero(anchor.rows(), anchor.cols());
      for (Eigen::Index k = 0; k < coef.size(); ++k) H += coef[k] * basis[static_cast<std::size_t>(k)];
      const double hn = Eigen::SelfAdjointEigenSolver<lrsdp::Matrix>(H).eigenvalues().cwiseAbs().maxCoeff();
      if (!(hn > 0.0)) continue;
      const lrsdp::Matrix X = anchor + (unit(rng) * std::max(lam0, 0.0) / hn) * H;
      const ComplexVec x = lrsdp::flatten(X);
      if (h.in_Xhat(x) && !h.in_X(x)) out.push_back(x);
    }
    return out;
  };
  return p;
}

CertifiedProblem broken_factory(const CertifiedProblem& p) {
  CertifiedProblem q = p;
  q.name = p.name + "(constant paths)";
  q.path_factory = [h = p.handle](const ComplexVec& x) {
    PathTrace t = make_constant_path(x);
    annotate(t, h);
    return t;
  };
  return q;
}

}  // namespace relaxcert::certify
