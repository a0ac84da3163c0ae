#include "relaxcert/compose.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relaxcert/errors.hpp"

namespace relaxcert::compose {

namespace {

double inf_norm(const ComplexVec& x) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    m = std::max({m, std::abs(x[i].real()), std::abs(x[i].imag())});
  }
  return m;
}

std::string describe(const ComplexVec& x) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i].real() << (x[i].imag() < 0 ? "-" : "+") << std::abs(x[i].imag()) << 'i';
  }
  os << ')';
  return os.str();
}

std::function<double(double, double)> combiner(const Mode& mode) {
  if (mode.kind == Mode::Kind::Max) return [](double a, double b) { return std::max(a, b); };
  if (!(mode.lambda > 0.0 && mode.lambda < 1.0)) {
    throw PreconditionError("sum mode needs lambda in (0, 1)");
  }
  const double l = mode.lambda;
  return [l](double a, double b) { return l * a + (1.0 - l) * b; };
}

void check_same_space(const CertifiedProblem& p1, const CertifiedProblem& p2) {
  if (p1.box_lo.size() != p2.box_lo.size()) {
    throw CompositionError("problems live in spaces of different dimension");
  }
  if (!p1.handle.has_lyapunov() || !p2.handle.has_lyapunov()) {
    throw PreconditionError("certified problems need a Lyapunov function");
  }
}

// relaxed points of the composite: samples of either piece that pass the
// composite relaxed-set test
std::vector<ComplexVec> composite_samples(const CertifiedProblem& composite,
                                          const CertifiedProblem& p1,
                                          const CertifiedProblem& p2, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<ComplexVec> out;
  for (const auto* p : {&p1, &p2}) {
    for (auto& x : sample_relaxed(*p, count, seed)) {
      if (out.size() >= count) break;
      if (composite.handle.in_Xhat(x)) out.push_back(std::move(x));
    }
  }
  return out;
}

}  // namespace

double CertifiedProblem::bound() const {
  if (box_lo.size() == 0) return 0.0;
  return std::max(box_lo.cwiseAbs().maxCoeff(), box_hi.cwiseAbs().maxCoeff());
}

std::vector<ComplexVec> sample_relaxed(const CertifiedProblem& p, std::size_t count,
                                       std::uint64_t seed) {
  if (p.sampler) return p.sampler(count, seed);
  const auto dim = p.dimension();
  std::vector<ComplexVec> out;
  if (dim == 0) return out;
  const auto raw = quasi_random_points(2 * dim, count * 100, seed);
  for (const auto& u : raw) {
    if (out.size() >= count) break;
    ComplexVec x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = p.box_lo[2 * i] + u[2 * i] * (p.box_hi[2 * i] - p.box_lo[2 * i]);
      const double im =
          p.box_lo[2 * i + 1] + u[2 * i + 1] * (p.box_hi[2 * i + 1] - p.box_lo[2 * i + 1]);
      x[i] = Complex(re, im);
    }
    if (p.handle.in_Xhat(x)) out.push_back(x);
  }
  return out;
}

CertifiedProblem compose_cost(const CertifiedProblem& p, std::function<double(double)> g,
                              std::uint64_t seed) {
  if (!g) throw PreconditionError("cost transform is empty");
  std::vector<double> values;
  for (const auto& x : sample_relaxed(p, kContractSamples, seed)) values.push_back(p.handle.cost(x));
  if (!values.empty()) {
    std::sort(values.begin(), values.end());
    const double lo = values.front();
    const double hi = values.back();
    if (hi > lo) {
      for (int i = 0; i <= 200; ++i) values.push_back(lo + (hi - lo) * i / 200.0);
      std::sort(values.begin(), values.end());
    }
    values.erase(std::unique(values.begin(), values.end(),
                             [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                 values.end());
    std::vector<double> gv;
    for (double v : values) gv.push_back(g(v));
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (gv[i] < gv[i - 1] - 1e-12 * (1.0 + std::abs(gv[i - 1]))) {
        throw ContractError("cost transform decreases between " + std::to_string(values[i - 1]) +
                            " and " + std::to_string(values[i]));
      }
    }
    for (std::size_t i = 2; i < values.size(); ++i) {
      const double s1 = (gv[i - 1] - gv[i - 2]) / (values[i - 1] - values[i - 2]);
      const double s2 = (gv[i] - gv[i - 1]) / (values[i] - values[i - 1]);
      if (s2 < s1 - 1e-9 * (1.0 + std::abs(s1))) {
        throw ContractError("cost transform is not convex near " + std::to_string(values[i - 1]));
      }
    }
  }
  CertifiedProblem out = p;
  out.handle.cost = [f = p.handle.cost, g](const ComplexVec& x) { return g(f(x)); };
  out.path_factory = [factory = p.path_factory, h = out.handle](const ComplexVec& x) {
    auto tr = factory(x);
    annotate(tr, h);
    return tr;
  };
  out.name = "g(" + p.name + ")";
  return out;
}

CertifiedProblem union_feasible(const CertifiedProblem& p1, const CertifiedProblem& p2,
                                const Mode& mode, std::uint64_t seed) {
  check_same_space(p1, p2);
  const auto combine = combiner(mode);
  CertifiedProblem out;
  out.name = "union(" + p1.name + ", " + p2.name + ")";
  out.box_lo = p1.box_lo.cwiseMax(p2.box_lo);
  out.box_hi = p1.box_hi.cwiseMin(p2.box_hi);
  out.segment_bound = p1.segment_bound;
  const auto& h1 = p1.handle;
  const auto& h2 = p2.handle;
  out.handle.tol = std::max(h1.tol, h2.tol);
  out.handle.cost = [f1 = h1.cost, f2 = h2.cost, combine](const ComplexVec& x) {
    return combine(f1(x), f2(x));
  };
  out.handle.residual_Xhat = [a = h1.residual_Xhat, b = h2.residual_Xhat](const ComplexVec& x) {
    return std::max(a(x), b(x));
  };
  out.handle.residual_X = [rh = out.handle.residual_Xhat, a = h1.residual_X,
                           b = h2.residual_X](const ComplexVec& x) {
    return std::max(rh(x), std::min(a(x), b(x)));
  };
  out.handle.lyapunov = [v1 = h1.lyapunov, v2 = h2.lyapunov](const ComplexVec& x) {
    return v1(x) * v2(x);
  };
  if (p1.sampler) out.sampler = p1.sampler;

  // the two factories must agree wherever both are defined
  const auto pts = composite_samples(out, p1, p2, kContractSamples, seed);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& x = pts[i];
    if (h1.in_X(x) || h2.in_X(x)) continue;
    const auto a = p1.path_factory(x);
    const auto b = p2.path_factory(x);
    std::vector<double> ts = a.params;
    ts.insert(ts.end(), b.params.begin(), b.params.end());
    for (double t : ts) {
      const ComplexVec ya = evaluate(a, t);
      const ComplexVec yb = evaluate(b, t);
      if (inf_norm(ya - yb) > 1e-9 * (1.0 + inf_norm(ya))) {
        throw CompositionError("path factories diverge at sampled point " + describe(x) +
                               " (t = " + std::to_string(t) + ")");
      }
    }
  }

  out.path_factory = [factory = p1.path_factory, h = out.handle](const ComplexVec& x) {
    auto tr = factory(x);
    annotate(tr, h);
    return tr;
  };
  return out;
}

CertifiedProblem intersect_feasible(const CertifiedProblem& p1, const CertifiedProblem& p2,
                                    const Split& split, const Mode& mode, std::uint64_t seed) {
  check_same_space(p1, p2);
  const auto combine = combiner(mode);
  const auto dim = p1.dimension();
  {
    std::vector<int> seen(static_cast<std::size_t>(dim), 0);
    for (const auto* blk : {&split.block1, &split.block2}) {
      for (auto i : *blk) {
        if (i < 0 || i >= dim) throw PreconditionError("split index out of range");
        ++seen[static_cast<std::size_t>(i)];
      }
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
      throw PreconditionError("split blocks must partition the coordinates");
    }
  }

  CertifiedProblem out;
  out.name = "intersect(" + p1.name + ", " + p2.name + ")";
  out.box_lo = p1.box_lo.cwiseMax(p2.box_lo);
  out.box_hi = p1.box_hi.cwiseMin(p2.box_hi);
  out.segment_bound = p1.segment_bound + p2.segment_bound;
  const auto& h1 = p1.handle;
  const auto& h2 = p2.handle;
  out.handle.tol = std::max(h1.tol, h2.tol);
  out.handle.cost = [f1 = h1.cost, f2 = h2.cost, combine](const ComplexVec& x) {
    return combine(f1(x), f2(x));
  };
  out.handle.residual_Xhat = [a = h1.residual_Xhat, b = h2.residual_Xhat](const ComplexVec& x) {
    return std::max(a(x), b(x));
  };
  out.handle.residual_X = [a = h1.residual_X, b = h2.residual_X](const ComplexVec& x) {
    return std::max(a(x), b(x));
  };
  out.handle.lyapunov = [v1 = h1.lyapunov, v2 = h2.lyapunov](const ComplexVec& x) {
    return v1(x) + v2(x);
  };
  if (p1.sampler) out.sampler = p1.sampler;

  const auto pts = composite_samples(out, p1, p2, kContractSamples, seed);
  auto swap_block = [](ComplexVec x, const ComplexVec& donor, const std::vector<Eigen::Index>& blk) {
    for (auto i : blk) x[i] = donor[i];
    return x;
  };
  struct Piece {
    const CertifiedProblem* p;
    const std::vector<Eigen::Index>* other;
    const char* label;
  };
  const Piece pieces[] = {{&p1, &split.block2, "first"}, {&p2, &split.block1, "second"}};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& x = pts[i];
    const auto& donor = pts[(i + 1) % pts.size()];
    for (const auto& pc : pieces) {
      const ComplexVec z = swap_block(x, donor, *pc.other);
      const auto& h = pc.p->handle;
      bool ok = true;
      try {
        const double f0 = h.cost(x), f1 = h.cost(z);
        const double v0 = h.lyapunov(x), v1 = h.lyapunov(z);
        ok = std::abs(f0 - f1) <= 1e-9 * (1.0 + std::abs(f0)) &&
             std::abs(v0 - v1) <= 1e-9 * (1.0 + std::abs(v0));
      } catch (const Error&) {
        ok = false;
      }
      if (!ok) {
        throw CompositionError(std::string("cost or V of the ") + pc.label +
                               " problem depends on the other block: " + describe(x) + " -> " +
                               describe(z));
      }
      if (h.in_X(x)) continue;
      const auto tr = pc.p->path_factory(x);
      for (std::size_t s = 0; s < tr.size(); ++s) {
        for (auto c : *pc.other) {
          if (std::abs(tr.points[s][c] - x[c]) > 1e-9 * (1.0 + std::abs(x[c]))) {
            throw CompositionError(std::string("path of the ") + pc.label +
                                   " problem moves the other block at " + describe(x));
          }
        }
      }
    }
  }

  out.path_factory = [f1 = p1.path_factory, f2 = p2.path_factory, v1 = h1.lyapunov,
                      v2 = h2.lyapunov, h = out.handle](const ComplexVec& x) {
    const bool done1 = v1(x) <= h.tol;
    const bool done2 = v2(x) <= h.tol;
    PathTrace tr;
    if (done1 && done2) {
      tr = make_constant_path(x);
    } else if (done1) {
      tr = f2(x);
    } else if (done2) {
      tr = f1(x);
    } else {
      const PathTrace a = f1(x);
      const PathTrace b = f2(a.back());
      const PathTrace legs[] = {a, b};
      tr = concatenate(legs);
    }
    annotate(tr, h);
    return tr;
  };
  return out;
}

}  // namespace relaxcert::compose
