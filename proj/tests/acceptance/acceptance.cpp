// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only
// when all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "relaxcert/certify.hpp"
#include "relaxcert/compose.hpp"
#include "relaxcert/errors.hpp"
#include "relaxcert/lrsdp.hpp"
#include "relaxcert/restore.hpp"
#include "relaxcert/solver.hpp"

using namespace relaxcert;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

constexpr int kNetworks = 100;
constexpr std::size_t kPointsPerNetwork = 10;

// ------------------------------------------------------------------ 1 and 3

struct SoundnessStats {
  std::size_t paths = 0;
  double worst_endpoint = 0.0;
  double worst_phi = 0.0;
  double worst_ratio = std::numeric_limits<double>::infinity();  // margin / c_hat
  double min_margin = std::numeric_limits<double>::infinity();
};

void soundness(Outcome& c1, Outcome& c3, SoundnessStats& st) {
  for (int seed = 0; seed < kNetworks; ++seed) {
    const auto c = fixtures::random_case(static_cast<std::uint64_t>(seed));
    const auto& net = c.net;
    if (!distflow::validate_assumptions(net, c.cost).all_pass()) {
      c1.fail("seed " + std::to_string(seed) + " fails its assumptions");
      continue;
    }
    if ((c.cost.cp.array() <= 0.0).any()) c1.fail("seed " + std::to_string(seed) + " has cp <= 0");
    const auto points = distflow::relaxed_points(net, kPointsPerNetwork, static_cast<std::uint64_t>(seed));
    if (points.size() < kPointsPerNetwork) {
      c1.fail("seed " + std::to_string(seed) + ": too few relaxed points");
    }
    for (const auto& x : points) {
      PathTrace tr;
      try {
        tr = restore::restoration_path(net, c.cost, x);
      } catch (const Error& e) {
        c1.fail("seed " + std::to_string(seed) + ": " + e.what());
        continue;
      }
      ++st.paths;
      const double end = distflow::residual_X(net, distflow::unflatten(net, tr.back()));
      st.worst_endpoint = std::max(st.worst_endpoint, end);
      if (end > 1e-8) c1.fail("endpoint residual " + fmt(end));
      if (tr.size() != kSamplesPerSegment) c1.fail("path not sampled at 101 points");
      for (std::size_t k = 1; k < tr.size(); ++k) {
        if (!(tr.lyapunov[k] < tr.lyapunov[k - 1])) {
          c1.fail("V not strictly decreasing, seed " + std::to_string(seed));
          break;
        }
        if (!(tr.cost[k] < tr.cost[k - 1])) {
          c1.fail("f not strictly decreasing, seed " + std::to_string(seed));
          break;
        }
      }
      for (const auto& g : restore::edge_gaps(net, x)) {
        if (!g.in_M) continue;
        const auto e = static_cast<Eigen::Index>(g.edge);
        const Complex z = net.line(g.edge).z;
        const double v = x.v[static_cast<Eigen::Index>(net.from(g.edge))];
        const double B = v - (z * std::conj(x.S[e])).real();
        const double scale = 0.25 * std::norm(z) * g.delta * g.delta + std::abs(B) * g.delta +
                             std::abs(v * x.ell[e] - std::norm(x.S[e]));
        const double rel = std::abs(restore::phi(net, x, g.edge, g.delta)) / scale;
        st.worst_phi = std::max(st.worst_phi, rel);
        if (rel > 1e-10) c1.fail("phi(delta) relative " + fmt(rel));
      }
      const auto cp = restore::cprime_margin(net, c.cost, tr);
      st.min_margin = std::min(st.min_margin, cp.margin);
      if (cp.c_hat > 0.0) st.worst_ratio = std::min(st.worst_ratio, cp.margin / cp.c_hat);
      if (!(cp.margin > 0.0)) c3.fail("non-positive margin, seed " + std::to_string(seed));
      if (!(cp.margin >= 0.5 * cp.c_hat)) {
        c3.fail("margin " + fmt(cp.margin) + " below half of " + fmt(cp.c_hat) + ", seed " +
                std::to_string(seed));
      }
      if (!(cp.c_hat > 0.0)) c3.fail("reference constant is not positive");
    }
  }
}

// ------------------------------------------------------------------------ 2

void two_bus_landscape(Outcome& out, double& worst_gap_ratio) {
  constexpr double kResolution = 0.005;
  worst_gap_ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto c = fixtures::two_bus_case(1000 + static_cast<std::uint64_t>(i));
    const auto rp = certify::eliminate_opf(c.net, c.cost);
    if (rp.dim() != 2) out.fail("elimination did not give 2 free coordinates");
    const auto orc = certify::brute_force_oracle(rp, kResolution);
    if (orc.count(certify::Label::Genuine) != 0) {
      out.fail("instance " + std::to_string(i) + ": oracle reports a genuine local optimum");
    }
    const auto ms = certify::multistart_local_search(rp, 20, static_cast<std::uint64_t>(i));
    if (ms.optima.empty()) {
      out.fail("instance " + std::to_string(i) + ": no multistart run converged");
      continue;
    }
    const double band = std::max(1e-6, 2.0 * kResolution * orc.lipschitz);
    for (const auto& o : ms.optima) {
      const double gap = std::abs(o.cost - orc.global_cost);
      worst_gap_ratio = std::max(worst_gap_ratio, gap / band);
      if (gap > band) {
        out.fail("instance " + std::to_string(i) + ": multistart cost " + fmt(o.cost) +
                 " vs oracle " + fmt(orc.global_cost));
      }
    }
  }
}

// ------------------------------------------------------------------------ 4

void lrsdp_reduction(Outcome& out, std::size_t& max_stages_seen) {
  std::mt19937_64 rng(4);
  max_stages_seen = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 3 + static_cast<std::size_t>(i % 3);
    const auto g = lrsdp::random_instance(rng, n, 1, 1, i % 2 == 1);
    const auto X0 = lrsdp::PsdPoint::from(g.X0);
    if (X0.rank() != n) out.fail("start is not full rank");
    lrsdp::ReductionResult red;
    try {
      red = lrsdp::reduce_rank_path(g.inst, X0);
    } catch (const Error& e) {
      out.fail(std::string("instance ") + std::to_string(i) + ": " + e.what());
      continue;
    }
    const double f0 = lrsdp::cost(g.inst, g.X0);
    max_stages_seen = std::max(max_stages_seen, red.active_stages);
    if (red.final_rank > 1) out.fail("final rank " + std::to_string(red.final_rank));
    if (red.active_stages > n - 1) out.fail("too many stages");
    if (red.max_cost_drift > 1e-8 * (1.0 + std::abs(f0))) out.fail("cost drift " + fmt(red.max_cost_drift));
    if (red.max_constraint_drift > 1e-8) out.fail("constraint drift " + fmt(red.max_constraint_drift));
    if (red.min_eigenvalue < -1e-8) out.fail("eigenvalue " + fmt(red.min_eigenvalue));
    for (std::size_t k = 1; k < red.trace.size(); ++k) {
      const double a = red.trace.lyapunov[k - 1], b = red.trace.lyapunov[k];
      if (b > a + 1e-12 * (1.0 + std::abs(a))) {
        out.fail("V increases at sample " + std::to_string(k));
        break;
      }
    }
    std::size_t active = 0;
    for (const auto& s : red.stages) active += s.constant ? 0 : 1;
    if (active > 0 && red.trace.size() < active * (kSamplesPerSegment - 1) + 1) out.fail("stages sampled below 101 points");
  }
}

// ------------------------------------------------------------------------ 5

// m = 1 instance whose optimal face holds points of rank r + 1: C is built
// from A^{1/2} M A^{1/2} with the smallest eigenvalue of M repeated.
lrsdp::LrsdpInstance degenerate_instance(std::mt19937_64& rng, std::size_t n, std::size_t r) {
  const auto k = static_cast<Eigen::Index>(n);
  std::normal_distribution<double> N;
  Eigen::MatrixXd G(k, k), H(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      G(i, j) = N(rng);
      H(i, j) = N(rng);
    }
  }
  const Eigen::MatrixXd A = G * G.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(k, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::MatrixXd Ah = es.operatorSqrt();
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(H).householderQ();
  Eigen::VectorXd d(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    d[i] = i <= static_cast<Eigen::Index>(r) ? -1.0 : 1.0 + static_cast<double>(i);
  }
  const Eigen::MatrixXd M = Q * d.asDiagonal() * Q.transpose();
  lrsdp::LrsdpInstance inst;
  inst.C = (Ah * M * Ah).cast<Complex>();
  inst.C = 0.5 * (inst.C + inst.C.adjoint()).eval();
  inst.A = {A.cast<Complex>()};
  inst.b = Eigen::VectorXd::Constant(1, static_cast<double>(n));
  inst.r = r;
  return inst;
}

void weak_exactness(Outcome& out, std::size_t& high_rank_optima) {
  std::mt19937_64 rng(5);
  high_rank_optima = 0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t r = i < 5 ? 1 : 2;
    const std::size_t n = r + 2 + static_cast<std::size_t>(i % 2);
    const auto inst = degenerate_instance(rng, n, r);
    const auto sol = solver::solve_lrsdp_relaxation(inst);
    if (sol.info.status != solver::Status::Optimal) {
      out.fail("instance " + std::to_string(i) + ": solver status " + solver::to_string(sol.info.status));
      continue;
    }
    if (sol.point.rank() > r) ++high_rank_optima;
    lrsdp::ReductionResult red;
    try {
      red = lrsdp::reduce_rank_path(inst, sol.point);
    } catch (const Error& e) {
      out.fail(std::string("instance ") + std::to_string(i) + ": " + e.what());
      continue;
    }
    const double f0 = lrsdp::cost(inst, sol.point.X);
    const double f1 = lrsdp::cost(inst, red.final_point.X);
    if (red.final_rank > r) out.fail("instance " + std::to_string(i) + ": final rank too high");
    if (std::abs(f1 - f0) > 1e-7) out.fail("instance " + std::to_string(i) + ": cost changed by " + fmt(f1 - f0));
  }
}

// ------------------------------------------------------------------------ 6

void composition(Outcome& out) {
  using compose::Mode;
  const auto p1 = fixtures::half_disk(2, 0);
  const auto p2 = fixtures::half_disk(2, 1);
  const auto both = compose::intersect_feasible(p1, p2, {{0}, {1}}, Mode::sum(0.5));
  const auto pts = compose::sample_relaxed(both, 200, 6);
  if (pts.size() < 200) out.fail("too few intersection samples");
  for (const auto& x : pts) {
    if (both.handle.in_X(x)) continue;
    const auto tr = both.path_factory(x);
    const double v = both.handle.lyapunov(tr.back());
    if (v > 1e-9) {
      out.fail("intersection path ends with V = " + fmt(v));
      break;
    }
  }
  const auto rep = certify::check_c1_c3(both, pts, {false, 6});
  if (!rep.c1.pass || !rep.c3.pass || !rep.c2_proxy.pass) out.fail("intersection fails sampled (C1)");

  const auto q1 = fixtures::half_disk();
  const auto q2 = fixtures::capped_half_disk();
  const auto uni = compose::union_feasible(q1, q2, Mode::sum(0.5));
  auto upts = compose::sample_relaxed(uni, 150, 7);
  for (int i = 0; i < 50; ++i) {
    const double s = -0.98 + 1.96 * i / 49.0;
    upts.push_back(ComplexVec::Constant(1, Complex(-std::sqrt(1.0 - s * s), s)));
  }
  if (upts.size() < 200) out.fail("too few union samples");
  for (const auto& x : upts) {
    const bool zero = uni.handle.lyapunov(x) <= uni.handle.tol;
    const bool member = q1.handle.in_X(x) || q2.handle.in_X(x);
    if (zero != member) {
      out.fail("V zero set differs from the union at a sampled point");
      break;
    }
  }
  const auto urep = certify::check_c1_c3(uni, upts, {false, 7});
  if (!urep.c1.pass || !urep.c3.pass) out.fail("union fails sampled (C1)");

  try {
    (void)compose::union_feasible(q1, fixtures::diagonal_half_disk(), Mode::sum(0.5));
    out.fail("diverging union paths accepted");
  } catch (const CompositionError&) {
  }
  try {
    (void)compose::intersect_feasible(p1, fixtures::leaky_half_disk(), {{0}, {1}}, Mode::sum(0.5));
    out.fail("non-separable intersection accepted");
  } catch (const CompositionError&) {
  }
}

// ------------------------------------------------------------------------ 7

void taxonomy(Outcome& out) {
  const auto grid = fixtures::four_optima_landscape();
  const auto labels = certify::classify_local_optima(grid);
  const auto groups = certify::group_optima(grid, labels);
  std::size_t g = 0, p = 0, q = 0;
  for (const auto& grp : groups) {
    if (grp.label == certify::Label::Global) ++g;
    if (grp.label == certify::Label::Pseudo) ++p;
    if (grp.label == certify::Label::Genuine) ++q;
  }
  out.detail = std::to_string(g) + " global, " + std::to_string(p) + " pseudo, " + std::to_string(q) + " genuine";
  if (g != 1 || p != 1 || q != 2) out.pass = false;
}

// ------------------------------------------------------------------------ 8

void connectedness(Outcome& out, std::size_t& smallest_grid) {
  smallest_grid = std::numeric_limits<std::size_t>::max();
  for (int seed = 0; seed < kNetworks; ++seed) {
    const auto c = fixtures::first_line_case(fixtures::random_case(static_cast<std::uint64_t>(seed)));
    const auto rp = certify::eliminate_opf(c.net, c.cost);
    const double res = 0.005 * 0.5 * (rp.hi[0] - rp.lo[0]);
    const auto orc = certify::brute_force_oracle(rp, res);
    smallest_grid = std::min(smallest_grid, orc.grid.points.size());
    if (orc.components != 1) {
      out.fail("seed " + std::to_string(seed) + ": " + std::to_string(orc.components) + " components");
    }
  }
}

// ------------------------------------------------------------------------ 9

void core_numerics(Outcome& out) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto rvec = [&](Eigen::Index d) {
    ComplexVec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = Complex(N(rng), N(rng));
    return v;
  };
  for (int k = 0; k < 50; ++k) {
    const auto d = 1 + static_cast<Eigen::Index>(k % 4);
    std::vector<PathTrace> legs;
    ComplexVec a = rvec(d);
    for (int s = 0; s < 1 + k % 3; ++s) {
      ComplexVec b = rvec(d);
      legs.push_back(make_linear_path(a, b, 11 + static_cast<std::size_t>(k % 7)));
      a = b;
    }
    const auto tr = concatenate(legs);
    const auto r1 = arc_length_reparameterize(tr);
    const auto r2 = arc_length_reparameterize(r1);
    if (r1.size() != r2.size()) {
      out.fail("reparameterization changed the sample count");
      continue;
    }
    for (std::size_t i = 0; i < r1.size(); ++i) {
      if (std::abs(r1.params[i] - r2.params[i]) > 1e-12 || (r1.points[i] - r2.points[i]).norm() > 1e-12) {
        out.fail("reparameterization is not idempotent");
        break;
      }
    }
    const double total = partition_length(tr);
    const double s = U(rng);
    const double parts = partition_length(tr, 0.0, s) + partition_length(tr, s, 1.0);
    if (std::abs(parts - total) > 1e-12 * (1.0 + total)) out.fail("partition length not additive");
  }
  for (int k = 0; k < 1000; ++k) {
    const auto d = 1 + static_cast<Eigen::Index>(k % 6);
    const ComplexVec x = rvec(d), y = rvec(d);
    const double alpha = N(rng);
    const double nx = norm_m(x), ny = norm_m(y);
    if (!(nx > 0.0)) out.fail("norm of a nonzero vector vanished");
    if (norm_m(ComplexVec::Zero(d)) != 0.0) out.fail("norm of zero is not zero");
    if (std::abs(norm_m(alpha * x) - std::abs(alpha) * nx) > 1e-12 * (1.0 + std::abs(alpha) * nx)) {
      out.fail("homogeneity fails");
    }
    if (norm_m(x + y) > nx + ny + 1e-12 * (nx + ny)) out.fail("triangle inequality fails");
  }
}

void report(int id, const char* name, const Outcome& o, const std::string& extra) {
  std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name,
              o.pass ? extra.c_str() : o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  bool all = true;
  auto t0 = Clock::now();
  Outcome c1, c3;
  SoundnessStats st;
  soundness(c1, c3, st);
  const double t1 = seconds_since(t0);
  if (t1 > 60.0) c1.fail("runtime " + fmt(t1) + " s above 60 s");
  report(1, "OPF restoration soundness", c1,
         std::to_string(st.paths) + " paths, endpoint residual <= " + fmt(st.worst_endpoint) +
             ", phi relative <= " + fmt(st.worst_phi) + ", " + fmt(t1) + " s");
  all = all && c1.pass;

  t0 = Clock::now();
  Outcome c2;
  double gap_ratio = 0.0;
  two_bus_landscape(c2, gap_ratio);
  const double t2 = seconds_since(t0);
  if (t2 > 120.0) c2.fail("runtime " + fmt(t2) + " s above 120 s");
  report(2, "two-bus landscape", c2,
         "no genuine optima; worst multistart gap " + fmt(gap_ratio) + " of the band, " + fmt(t2) + " s");
  all = all && c2.pass;

  report(3, "decrease margin", c3,
         "min margin " + fmt(st.min_margin) + ", min margin / c_hat " + fmt(st.worst_ratio));
  all = all && c3.pass;

  t0 = Clock::now();
  Outcome c4;
  std::size_t stages = 0;
  lrsdp_reduction(c4, stages);
  const double t4 = seconds_since(t0);
  if (t4 > 60.0) c4.fail("runtime " + fmt(t4) + " s above 60 s");
  report(4, "LRSDP rank reduction", c4,
         "50 instances, at most " + std::to_string(stages) + " active stages, " + fmt(t4) + " s");
  all = all && c4.pass;

  Outcome c5;
  std::size_t high = 0;
  weak_exactness(c5, high);
  report(5, "weak exactness", c5,
         "10 instances, " + std::to_string(high) + " relaxation optima above the target rank");
  all = all && c5.pass;

  Outcome c6;
  composition(c6);
  report(6, "composition rules", c6, "intersection, union and both negative controls");
  all = all && c6.pass;

  Outcome c7;
  taxonomy(c7);
  report(7, "taxonomy fixture", c7, c7.detail);
  all = all && c7.pass;

  Outcome c8;
  std::size_t smallest = 0;
  connectedness(c8, smallest);
  report(8, "connectedness", c8, "100 cases, one component each (smallest grid " + std::to_string(smallest) + " points)");
  all = all && c8.pass;

  Outcome c9;
  core_numerics(c9);
  report(9, "core numerics", c9, "idempotence, norm axioms on 1000 triples, additivity");
  all = all && c9.pass;

  return all ? 0 : 1;
}
