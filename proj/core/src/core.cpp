#include "relaxcert/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "relaxcert/errors.hpp"

namespace relaxcert {

namespace {

double inf_norm(const ComplexVec& x) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    m = std::max({m, std::abs(x[i].real()), std::abs(x[i].imag())});
  }
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// index of the sample whose parameter equals t, or -1
std::ptrdiff_t find_sample(const std::vector<double>& params, double t) {
  auto it = std::lower_bound(params.begin(), params.end(), t - 1e-12);
  if (it != params.end() && std::abs(*it - t) <= 1e-12) {
    return it - params.begin();
  }
  return -1;
}

}  // namespace

bool all_finite(const ComplexVec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i].real()) || !std::isfinite(x[i].imag())) return false;
  }
  return true;
}

void PathTrace::validate() const {
  if (params.size() < 2 || params.size() != points.size()) {
    throw PreconditionError("path trace needs >= 2 samples with one point per parameter");
  }
  if (params.front() != 0.0 || params.back() != 1.0) {
    throw PreconditionError("path trace parameters must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < params.size(); ++i) {
    if (!(params[i] > params[i - 1])) {
      throw PreconditionError("path trace parameters must be strictly increasing");
    }
  }
  const auto dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw PreconditionError("path trace points differ in dimension");
    if (!all_finite(p)) throw PreconditionError("path trace contains non-finite entries");
  }
  if (segments > 0) {
    if (breakpoints.size() != segments + 1) {
      throw PreconditionError("declared segments need segments + 1 breakpoints");
    }
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
      throw PreconditionError("breakpoints must span [0, 1]");
    }
  }
  if (!cost.empty() && cost.size() != params.size()) {
    throw PreconditionError("cost annotation length mismatch");
  }
  if (!lyapunov.empty() && lyapunov.size() != params.size()) {
    throw PreconditionError("lyapunov annotation length mismatch");
  }
}

PathTrace make_linear_path(const ComplexVec& a, const ComplexVec& b, std::size_t samples) {
  if (samples < 2) samples = 2;
  if (a.size() != b.size()) throw StructuralError("segment endpoints differ in dimension");
  PathTrace trace;
  trace.params.resize(samples);
  trace.points.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = (i + 1 == samples) ? 1.0 : static_cast<double>(i) / (samples - 1);
    trace.params[i] = t;
    trace.points.push_back((1.0 - t) * a + t * b);
  }
  trace.points.back() = b;
  trace.segments = 1;
  trace.breakpoints = {0.0, 1.0};
  return trace;
}

PathTrace make_constant_path(const ComplexVec& x) { return make_linear_path(x, x, 2); }

ComplexVec evaluate(const PathTrace& trace, double t) {
  if (t < 0.0 || t > 1.0) throw RangeError("path parameter outside [0, 1]");
  const auto& p = trace.params;
  auto it = std::upper_bound(p.begin(), p.end(), t);
  if (it == p.end()) return trace.points.back();
  const auto hi = static_cast<std::size_t>(it - p.begin());
  if (hi == 0) return trace.points.front();
  const auto lo = hi - 1;
  const double w = (t - p[lo]) / (p[hi] - p[lo]);
  return (1.0 - w) * trace.points[lo] + w * trace.points[hi];
}

PathTrace concatenate(std::span<const PathTrace> pieces, double join_tol) {
  if (pieces.empty()) throw PreconditionError("cannot concatenate an empty list of paths");
  const double k = static_cast<double>(pieces.size());
  PathTrace out;
  bool declared = true;
  bool has_cost = true;
  bool has_lyap = true;
  for (const auto& piece : pieces) {
    declared = declared && piece.segments > 0;
    has_cost = has_cost && !piece.cost.empty();
    has_lyap = has_lyap && !piece.lyapunov.empty();
  }
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& piece = pieces[i];
    piece.validate();
    const double offset = static_cast<double>(i);
    std::size_t first = 0;
    if (i > 0) {
      const double gap = inf_norm(piece.front() - out.points.back());
      if (gap > join_tol * (1.0 + inf_norm(piece.front()))) {
        throw PreconditionError("concatenated paths do not join");
      }
      first = 1;
    }
    for (std::size_t s = first; s < piece.size(); ++s) {
      double t = (offset + piece.params[s]) / k;
      if (i + 1 == pieces.size() && s + 1 == piece.size()) t = 1.0;
      out.params.push_back(t);
      out.points.push_back(piece.points[s]);
      if (has_cost) out.cost.push_back(piece.cost[s]);
      if (has_lyap) out.lyapunov.push_back(piece.lyapunov[s]);
    }
    if (declared) {
      for (std::size_t b = (i == 0 ? 0 : 1); b < piece.breakpoints.size(); ++b) {
        // snap onto the stored sample so the breakpoint stays exact
        const double mapped = (offset + piece.breakpoints[b]) / k;
        const auto idx = find_sample(out.params, mapped);
        out.breakpoints.push_back(idx >= 0 ? out.params[static_cast<std::size_t>(idx)]
                                           : mapped);
      }
      out.segments += piece.segments;
    }
  }
  if (!declared) {
    out.segments = 0;
    out.breakpoints.clear();
  }
  return out;
}

double partition_length(const PathTrace& trace, double lo, double hi) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) {
    throw RangeError("partition range must satisfy 0 <= lo < hi <= 1");
  }
  const auto& p = trace.params;
  ComplexVec prev = evaluate(trace, lo);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > lo && p[i] < hi) {
      total += (trace.points[i] - prev).norm();
      prev = trace.points[i];
    }
  }
  total += (evaluate(trace, hi) - prev).norm();
  return total;
}

PathTrace arc_length_reparameterize(const PathTrace& trace) {
  trace.validate();
  const std::size_t n = trace.size();
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    cum[i] = cum[i - 1] + (trace.points[i] - trace.points[i - 1]).norm();
  }
  const double total = cum.back();
  if (!(total > 0.0)) return trace;

  PathTrace out;
  out.segments = trace.segments;
  std::vector<double> new_param(n);
  for (std::size_t i = 0; i < n; ++i) new_param[i] = cum[i] / total;
  new_param.back() = 1.0;

  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && i + 1 < n && !(new_param[i] > out.params.back())) continue;
    if (i + 1 == n && !out.params.empty() && !(new_param[i] > out.params.back())) {
      // final sample coincides in length with the previous one; keep the endpoint
      out.points.back() = trace.points[i];
      if (!trace.cost.empty()) out.cost.back() = trace.cost[i];
      if (!trace.lyapunov.empty()) out.lyapunov.back() = trace.lyapunov[i];
      out.params.back() = 1.0;
      continue;
    }
    out.params.push_back(new_param[i]);
    out.points.push_back(trace.points[i]);
    if (!trace.cost.empty()) out.cost.push_back(trace.cost[i]);
    if (!trace.lyapunov.empty()) out.lyapunov.push_back(trace.lyapunov[i]);
  }

  if (trace.segments > 0) {
    for (double bp : trace.breakpoints) {
      const auto idx = find_sample(trace.params, bp);
      const double mapped = idx >= 0 ? new_param[static_cast<std::size_t>(idx)] : bp;
      if (out.breakpoints.empty() || mapped > out.breakpoints.back()) {
        out.breakpoints.push_back(mapped);
      }
    }
    out.breakpoints.front() = 0.0;
    if (out.breakpoints.size() == 1) out.breakpoints.push_back(1.0);
    out.breakpoints.back() = 1.0;
    // zero-length pieces collapse onto their neighbours
    for (auto& bp : out.breakpoints) {
      const auto idx = find_sample(out.params, bp);
      if (idx < 0) {
        auto it = std::lower_bound(out.params.begin(), out.params.end(), bp);
        bp = it == out.params.end() ? 1.0 : *it;
      }
    }
    out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end()),
                          out.breakpoints.end());
    if (out.breakpoints.size() < 2) out.breakpoints = {0.0, 1.0};
    out.segments = out.breakpoints.size() - 1;
  }
  return out;
}

std::vector<Eigen::VectorXd> quasi_random_points(Eigen::Index dim, std::size_t count,
                                                 std::uint64_t seed) {
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,  37,  41,  43,  47,  53,
                                    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
  if (dim < 1 || dim > 32) throw PreconditionError("quasi-random points support 1..32 dimensions");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd shift(dim);
  for (Eigen::Index d = 0; d < dim; ++d) shift[d] = u(rng);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd p(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      const int base = kPrimes[d];
      double f = 1.0;
      double r = 0.0;
      for (std::size_t k = i + 1; k > 0; k /= static_cast<std::size_t>(base)) {
        f /= base;
        r += f * static_cast<double>(k % static_cast<std::size_t>(base));
      }
      p[d] = std::fmod(r + shift[d], 1.0);
    }
    out.push_back(p);
  }
  return out;
}

double norm_m(const ComplexVec& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s += std::abs(x[i].real()) + std::abs(x[i].imag());
  }
  return s;
}

PiecewiseLinearReport check_piecewise_linear_family(std::span<const PathTrace> traces,
                                                    std::size_t max_segments, double tol,
                                                    std::optional<double> bound) {
  PiecewiseLinearReport report;
  if (traces.empty()) {
    report.note = "empty family: vacuously uniformly bounded and equicontinuous";
    return report;
  }
  const Eigen::Index dim = traces.front().dimension();
  report.box_lo = Eigen::VectorXd::Constant(2 * dim, std::numeric_limits<double>::infinity());
  report.box_hi = Eigen::VectorXd::Constant(2 * dim, -std::numeric_limits<double>::infinity());

  auto fail = [&](std::size_t ti, std::ptrdiff_t si, const std::string& why) {
    if (report.ok) {
      report.ok = false;
      report.witness_trace = static_cast<std::ptrdiff_t>(ti);
      report.witness_sample = si;
      report.note = why;
    }
  };

  for (std::size_t ti = 0; ti < traces.size(); ++ti) {
    const auto& tr = traces[ti];
    if (tr.dimension() != dim) throw PreconditionError("path family mixes ambient dimensions");
    for (const auto& p : tr.points) {
      for (Eigen::Index i = 0; i < dim; ++i) {
        report.box_lo[2 * i] = std::min(report.box_lo[2 * i], p[i].real());
        report.box_hi[2 * i] = std::max(report.box_hi[2 * i], p[i].real());
        report.box_lo[2 * i + 1] = std::min(report.box_lo[2 * i + 1], p[i].imag());
        report.box_hi[2 * i + 1] = std::max(report.box_hi[2 * i + 1], p[i].imag());
      }
    }
    if (tr.segments == 0) {
      fail(ti, -1, "trace declares no linear segments");
      continue;
    }
    if (tr.segments > max_segments) {
      fail(ti, -1, "trace declares more segments than allowed");
      continue;
    }
    for (std::size_t b = 0; b + 1 < tr.breakpoints.size(); ++b) {
      const auto ia = find_sample(tr.params, tr.breakpoints[b]);
      const auto ib = find_sample(tr.params, tr.breakpoints[b + 1]);
      if (ia < 0 || ib < 0) {
        fail(ti, -1, "breakpoint is not a sample parameter");
        break;
      }
      const auto& pa = tr.points[static_cast<std::size_t>(ia)];
      const auto& pb = tr.points[static_cast<std::size_t>(ib)];
      const double ta = tr.params[static_cast<std::size_t>(ia)];
      const double tb = tr.params[static_cast<std::size_t>(ib)];
      const double scale = 1.0 + std::max(inf_norm(pa), inf_norm(pb));
      for (auto s = ia + 1; s < ib; ++s) {
        const auto us = static_cast<std::size_t>(s);
        const double w = (tr.params[us] - ta) / (tb - ta);
        const ComplexVec expected = (1.0 - w) * pa + w * pb;
        const double dev = inf_norm(tr.points[us] - expected) / scale;
        if (dev > report.worst_deviation) report.worst_deviation = dev;
        if (dev > tol) fail(ti, s, "sample deviates from the declared linear segment");
      }
    }
  }
  if (bound) {
    const double b = *bound;
    if (report.box_lo.size() > 0 &&
        (report.box_lo.minCoeff() < -b || report.box_hi.maxCoeff() > b)) {
      fail(0, -1, "family leaves the declared bounding box");
    }
  }
  return report;
}

std::optional<std::string> handle_invariant_violation(const ProblemHandle& handle,
                                                      const ComplexVec& x) {
  const double rx = handle.residual_X(x);
  const double rh = handle.residual_Xhat(x);
  if (rx < rh - handle.tol) return "residual_X below residual_Xhat: X is not inside Xhat";
  if (handle.has_lyapunov() && rh <= handle.tol) {
    const double v = handle.lyapunov(x);
    if (v < -handle.tol) return "lyapunov value negative";
    if (rx <= handle.tol && v > handle.tol) return "lyapunov value positive on X";
    if (rx > handle.tol && v <= 0.0) return "lyapunov value zero outside X";
  }
  return std::nullopt;
}

void annotate(PathTrace& trace, const ProblemHandle& handle) {
  trace.cost.resize(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) trace.cost[i] = handle.cost(trace.points[i]);
  if (handle.has_lyapunov()) {
    trace.lyapunov.resize(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
      trace.lyapunov[i] = handle.lyapunov(trace.points[i]);
    }
  } else {
    trace.lyapunov.clear();
  }
}

TraceLayout default_layout(Eigen::Index dimension) {
  TraceLayout layout;
  for (Eigen::Index i = 0; i < dimension; ++i) {
    layout.names.push_back("x" + std::to_string(i) + "_re");
    layout.names.push_back("x" + std::to_string(i) + "_im");
  }
  layout.flatten = [](const ComplexVec& x) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2 * x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      out.push_back(x[i].real());
      out.push_back(x[i].imag());
    }
    return out;
  };
  return layout;
}

void write_trace_csv(std::ostream& out, const PathTrace& trace, const TraceLayout& layout) {
  out << "t,f,V";
  for (const auto& name : layout.names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << format_double(trace.params[i]) << ',';
    if (!trace.cost.empty()) out << format_double(trace.cost[i]);
    out << ',';
    if (!trace.lyapunov.empty()) out << format_double(trace.lyapunov[i]);
    for (double v : layout.flatten(trace.points[i])) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace relaxcert
