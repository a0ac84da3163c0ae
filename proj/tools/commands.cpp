#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>

#include "relaxcert/certify.hpp"
#include "relaxcert/errors.hpp"
#include "relaxcert/restore.hpp"

namespace relaxcert::cli {

using io::json;

namespace {

json header(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["input"] = cfg.input.string();
  j["config"] = config_to_json(cfg);
  return j;
}

void finish(const RunConfig& cfg, json report, const char* name) {
  io::stamp(report);
  io::write_json(cfg.out / name, report);
}

bool is_case(const json& j) { return j.is_object() && j.contains("buses"); }

double kkt_residual(const solver::SolveInfo& info) {
  return std::max({info.primal_res, info.dual_res, info.gap});
}

std::vector<std::string> requested(const RunConfig& cfg, std::vector<std::string> defaults) {
  const auto& c = cfg.conditions.empty() ? defaults : cfg.conditions;
  for (const auto& name : c) {
    if (name != "c1" && name != "c2" && name != "c3" && name != "cprime") {
      throw PreconditionError("unknown condition '" + name + "' (expected c1, c2, c3, cprime)");
    }
  }
  return c;
}

bool passes(const certify::CertificateReport& rep, const std::vector<std::string>& conds) {
  for (const auto& c : conds) {
    if (c == "c1" && !rep.c1.pass) return false;
    if (c == "c2" && !rep.c2_proxy.pass) return false;
    if (c == "c3" && !rep.c3.pass) return false;
    if (c == "cprime" && !rep.cprime.pass) return false;
  }
  return rep.invariants_hold();
}

// feasible interior anchor: the scaled identity projected onto the affine
// constraints, falling back to the relaxation optimum when not definite
lrsdp::Matrix lrsdp_anchor(const lrsdp::LrsdpInstance& inst, const solver::SolverOptions& opts) {
  const auto n = static_cast<Eigen::Index>(inst.n());
  const auto m = static_cast<Eigen::Index>(inst.m());
  lrsdp::Matrix X = lrsdp::Matrix::Identity(n, n);
  if (m > 0) {
    Eigen::MatrixXd G(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      rhs[i] = inst.b[i] - lrsdp::inner(inst.A[static_cast<std::size_t>(i)], X);
      for (Eigen::Index k = 0; k < m; ++k) {
        G(i, k) = lrsdp::inner(inst.A[static_cast<std::size_t>(i)], inst.A[static_cast<std::size_t>(k)]);
      }
    }
    const Eigen::VectorXd mu = G.completeOrthogonalDecomposition().solve(rhs);
    for (Eigen::Index i = 0; i < m; ++i) X += mu[i] * inst.A[static_cast<std::size_t>(i)];
  }
  const auto h = lrsdp::lrsdp_handle(inst);
  const double lam = Eigen::SelfAdjointEigenSolver<lrsdp::Matrix>(X).eigenvalues()[0];
  if (lam > 1e-6 && h.in_Xhat(lrsdp::flatten(X))) return X;
  return solver::solve_lrsdp_relaxation(inst, opts).point.X;
}

lrsdp::Matrix parse_matrix(const json& j, std::size_t n) {
  json wrap = {{"n", n}, {"m", 0}, {"r", 1}, {"C", j}, {"A", json::array()}, {"b", json::array()}};
  try {
    return io::parse_instance(wrap).C;
  } catch (const ParseError& e) {
    throw ParseError(std::string("start point: ") + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(tol > 0.0)) throw PreconditionError("tol must be positive");
  if (!(resolution > 0.0)) throw PreconditionError("resolution must be positive");
  if (samples == 0) throw PreconditionError("samples must be positive");
  if (starts == 0) throw PreconditionError("starts must be positive");
  if (!(solver.tol > 0.0)) throw PreconditionError("solver tol must be positive");
}

RunConfig parse_config(const json& j, RunConfig base) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    auto need = [&](bool ok, const char* what) {
      if (!ok) throw ParseError("config field '" + k + "' must be " + what);
    };
    if (k == "command") {
      need(v.is_string(), "a string");
      base.command = v.get<std::string>();
    } else if (k == "input") {
      need(v.is_string(), "a string");
      base.input = v.get<std::string>();
    } else if (k == "out") {
      need(v.is_string(), "a string");
      base.out = v.get<std::string>();
    } else if (k == "tol") {
      need(v.is_number(), "a number");
      base.tol = v.get<double>();
    } else if (k == "seed") {
      need(v.is_number_integer() && v.get<long long>() >= 0, "a nonnegative integer");
      base.seed = v.get<std::uint64_t>();
    } else if (k == "samples") {
      need(v.is_number_integer() && v.get<long long>() >= 0, "a nonnegative integer");
      base.samples = v.get<std::size_t>();
    } else if (k == "resolution") {
      need(v.is_number(), "a number");
      base.resolution = v.get<double>();
    } else if (k == "starts") {
      need(v.is_number_integer() && v.get<long long>() >= 0, "a nonnegative integer");
      base.starts = v.get<std::size_t>();
    } else if (k == "solver") {
      base.solver = io::parse_solver_options(v);
    } else if (k == "start") {
      need(v.is_string(), "a string");
      base.start = v.get<std::string>();
    } else if (k == "negative_control") {
      need(v.is_boolean(), "a boolean");
      base.negative_control = v.get<bool>();
    } else if (k == "conditions") {
      need(v.is_array(), "an array of strings");
      base.conditions.clear();
      for (const auto& c : v) {
        need(c.is_string(), "an array of strings");
        base.conditions.push_back(c.get<std::string>());
      }
    } else {
      throw ParseError("unknown config field '" + k + "'");
    }
  }
  return base;
}

json config_to_json(const RunConfig& cfg) {
  json j = {{"tol", cfg.tol},
            {"seed", cfg.seed},
            {"samples", cfg.samples},
            {"resolution", cfg.resolution},
            {"starts", cfg.starts},
            {"solver",
             {{"tol", cfg.solver.tol},
              {"max_iter", cfg.solver.max_iter},
              {"relaxation_parameter", cfg.solver.relaxation_parameter}}}};
  if (cfg.start) j["start"] = cfg.start->string();
  if (cfg.negative_control) j["negative_control"] = true;
  if (!cfg.conditions.empty()) j["conditions"] = cfg.conditions;
  return j;
}

// ---------------------------------------------------------------- commands

int cmd_opf(const RunConfig& cfg, std::ostream& log) {
  const auto c = io::load_case(cfg.input);
  json report = header(cfg);
  const auto assumptions = distflow::validate_assumptions(c.net, c.cost);
  report["assumptions"] = io::to_json(assumptions);
  if (!assumptions.all_pass()) {
    json failures = json::array();
    for (const auto& a : assumptions.checks) {
      if (a.pass) continue;
      json f = {{"assumption", a.name}, {"detail", a.detail}};
      if (a.witness_edge >= 0) f["edge"] = c.net.edge_name(static_cast<std::size_t>(a.witness_edge));
      if (a.witness_bus >= 0) f["bus"] = c.net.bus(static_cast<std::size_t>(a.witness_bus)).id;
      failures.push_back(f);
      log << "assumption " << a.name << " fails: " << a.detail << "\n";
    }
    report["status"] = "assumption_failure";
    report["failures"] = failures;
    finish(cfg, report, "report.json");
    return kExitCertificate;
  }

  const auto sol = solver::solve_opf_relaxation(c.net, c.cost, cfg.solver);
  json solve = {{"info", io::to_json(sol.info)},
                {"point", io::to_json(sol.point)},
                {"big_box_active", sol.big_box_active}};
  io::write_json(cfg.out / "solve.json", solve);
  report["solve"] = io::to_json(sol.info);
  if (sol.info.status != solver::Status::Optimal) {
    report["status"] = "solver_failure";
    finish(cfg, report, "report.json");
    log << "solver stopped with status " << solver::to_string(sol.info.status) << "\n";
    return kExitError;
  }
  report["lower_box"] = sol.big_box_active
                            ? "substitute lower injection box is active at the solution"
                            : "substitute lower injection box is inactive at the solution";

  auto prob = certify::opf_certified(c.net, c.cost);
  prob.handle.tol = cfg.tol;
  const ComplexVec opt = distflow::flatten(sol.point);
  const auto exact = certify::check_exactness(prob, opt, kkt_residual(sol.info), false, cfg.solver.tol);
  report["exactness"] = io::to_json(exact);

  const auto points = compose::sample_relaxed(prob, cfg.samples, cfg.seed);
  auto cert = certify::check_c1_c3(prob, points, {true, cfg.seed});
  cert.exactness = exact.verdict;
  report["certificate"] = io::to_json(cert);

  // trace: restoration from the optimum when it is not exact, otherwise the
  // first sampled certificate path
  PathTrace trace;
  std::string source;
  if (!prob.handle.in_X(opt)) {
    trace = prob.path_factory(opt);
    source = "relaxation_optimum";
  } else if (!points.empty()) {
    for (const auto& p : points) {
      if (prob.handle.in_X(p)) continue;
      trace = prob.path_factory(p);
      source = "certificate_sample";
      break;
    }
  }
  if (!source.empty()) {
    io::write_trace(cfg.out / "trace.csv", trace, restore::opf_layout(c.net));
    report["trace_source"] = source;
  }

  const bool ok = passes(cert, {"c1", "c2", "c3", "cprime"}) && !exact.suboptimal_witness &&
                  exact.verdict != certify::Exactness::Unknown;
  report["status"] = ok ? "pass" : "certificate_failure";
  finish(cfg, report, "report.json");
  log << "opf: objective " << sol.info.objective << ", exactness " << certify::to_string(exact.verdict)
      << ", certificate " << (ok ? "pass" : "fail") << "\n";
  return ok ? kExitPass : kExitCertificate;
}

int cmd_lrsdp(const RunConfig& cfg, std::ostream& log) {
  const auto inst = io::load_instance(cfg.input);
  inst.validate();
  json report = header(cfg);
  report["dimension_condition"] = inst.dimension_condition();

  lrsdp::PsdPoint start;
  if (cfg.start) {
    start = lrsdp::PsdPoint::from(parse_matrix(io::read_json(*cfg.start), inst.n()));
    report["start"] = "given";
  } else {
    const auto sol = solver::solve_lrsdp_relaxation(inst, cfg.solver);
    io::write_json(cfg.out / "solve.json",
                   {{"info", io::to_json(sol.info)},
                    {"X", io::to_json(sol.point.X)},
                    {"rank", sol.point.rank()}});
    report["solve"] = io::to_json(sol.info);
    if (sol.info.status != solver::Status::Optimal) {
      report["status"] = "solver_failure";
      finish(cfg, report, "report.json");
      log << "solver stopped with status " << solver::to_string(sol.info.status) << "\n";
      return kExitError;
    }
    start = sol.point;
    report["start"] = "relaxation_optimum";
  }
  const double f0 = lrsdp::cost(inst, start.X);
  report["initial_rank"] = start.rank();
  try {
    const auto red = lrsdp::reduce_rank_path(inst, start);
    io::write_trace(cfg.out / "trace.csv", red.trace, lrsdp::lrsdp_layout(inst.n()));
    report["reduction"] = io::to_json(red);
    const double f1 = lrsdp::cost(inst, red.final_point.X);
    const bool same_cost = std::abs(f1 - f0) <= 1e-7;
    const bool ok = red.final_rank <= inst.r && same_cost;
    report["cost_before"] = f0;
    report["cost_after"] = f1;
    report["final_rank"] = red.final_rank;
    report["exactness"] = ok ? "weak" : "unknown";
    report["status"] = ok ? "pass" : "certificate_failure";
    finish(cfg, report, "report.json");
    log << "lrsdp: rank " << start.rank() << " -> " << red.final_rank << ", cost " << f0 << " -> " << f1
        << "\n";
    return ok ? kExitPass : kExitCertificate;
  } catch (const ReductionStuck& e) {
    report["status"] = "reduction_stuck";
    report["stage"] = e.stage();
    report["detail"] = e.what();
    finish(cfg, report, "report.json");
    log << "reduction stuck at stage " << e.stage() << ": " << e.what() << "\n";
    return kExitCertificate;
  } catch (const CertificateViolation& e) {
    report["status"] = "certificate_violation";
    report["sample"] = e.sample();
    report["detail"] = e.what();
    finish(cfg, report, "report.json");
    log << "reduction check failed: " << e.what() << "\n";
    return kExitCertificate;
  }
}

int cmd_certify(const RunConfig& cfg, std::ostream& log) {
  const json input = io::read_json(cfg.input);
  json report = header(cfg);
  certify::CertifiedProblem prob;
  std::vector<std::string> conds;
  if (is_case(input)) {
    const auto c = io::parse_case(input);
    const auto assumptions = distflow::validate_assumptions(c.net, c.cost);
    report["assumptions"] = io::to_json(assumptions);
    if (!assumptions.all_pass()) {
      report["status"] = "assumption_failure";
      finish(cfg, report, "report.json");
      log << "case fails its modelling assumptions\n";
      return kExitCertificate;
    }
    prob = certify::opf_certified(c.net, c.cost);
    conds = requested(cfg, {"c1", "c2", "c3", "cprime"});
  } else {
    const auto inst = io::parse_instance(input);
    inst.validate();
    prob = certify::lrsdp_certified(inst, lrsdp_anchor(inst, cfg.solver));
    // cost is constant along rank reduction, so only (C3) is expected
    conds = requested(cfg, {"c2", "c3"});
  }
  if (cfg.negative_control) prob = certify::broken_factory(prob);
  prob.handle.tol = cfg.tol;
  report["problem"] = prob.name;
  report["requested"] = conds;
  const auto points = compose::sample_relaxed(prob, cfg.samples, cfg.seed);
  const auto cert = certify::check_c1_c3(prob, points, {true, cfg.seed});
  report["certificate"] = io::to_json(cert);
  const bool ok = !points.empty() && passes(cert, conds);
  report["status"] = ok ? "pass" : "certificate_failure";
  finish(cfg, report, "report.json");
  log << "certify " << prob.name << ": " << points.size() << " points, " << (ok ? "pass" : "fail") << "\n";
  return ok ? kExitPass : kExitCertificate;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& log) {
  const json input = io::read_json(cfg.input);
  certify::ReducedProblem rp;
  if (is_case(input)) {
    const auto c = io::parse_case(input);
    rp = certify::eliminate_opf(c.net, c.cost);
  } else {
    rp = certify::eliminate_lrsdp(io::parse_instance(input));
  }
  json report = header(cfg);
  report["problem"] = rp.name;
  report["free_coordinates"] = rp.dim();
  const auto orc = certify::brute_force_oracle(rp, cfg.resolution);
  report["oracle"] = io::to_json(orc);
  const auto ms = certify::multistart_local_search(rp, cfg.starts, cfg.seed);
  report["multistart"] = io::to_json(ms);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : ms.optima) best = std::min(best, o.cost);
  const double band = std::max(1e-6, 2.0 * cfg.resolution * orc.lipschitz);
  report["multistart_gap"] = std::isfinite(best) ? json(best - orc.global_cost) : json(nullptr);
  report["agreement_band"] = band;
  report["status"] = "complete";
  finish(cfg, report, "oracle.json");
  log << "oracle: " << orc.grid.points.size() << " feasible points, " << orc.count(certify::Label::Global)
      << " global / " << orc.count(certify::Label::Pseudo) << " pseudo / "
      << orc.count(certify::Label::Genuine) << " genuine optima, " << orc.components << " component(s)\n";
  return kExitPass;
}

int cmd_classify(const RunConfig& cfg, std::ostream& log) {
  const json input = io::read_json(cfg.input);
  if (!input.is_object() || !input.contains("points") || !input.contains("costs")) {
    throw ParseError("landscape needs fields 'points' and 'costs'");
  }
  certify::LandscapeGrid grid;
  for (std::size_t i = 0; i < input["points"].size(); ++i) {
    const auto& p = input["points"][i];
    const std::string name = "points[" + std::to_string(i) + "]";
    if (p.is_number()) {
      grid.points.push_back(Eigen::VectorXd::Constant(1, p.get<double>()));
    } else if (p.is_array() && !p.empty()) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(p.size()));
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (!p[k].is_number()) throw ParseError("field '" + name + "' must hold numbers");
        v[static_cast<Eigen::Index>(k)] = p[k].get<double>();
      }
      grid.points.push_back(v);
    } else {
      throw ParseError("field '" + name + "' must be a number or an array");
    }
  }
  for (std::size_t i = 0; i < input["costs"].size(); ++i) {
    if (!input["costs"][i].is_number()) {
      throw ParseError("field 'costs[" + std::to_string(i) + "]' must be a number");
    }
    grid.costs.push_back(input["costs"][i].get<double>());
  }
  if (grid.costs.size() != grid.points.size()) throw ParseError("'points' and 'costs' differ in length");
  if (input.contains("adjacency")) {
    const auto& a = input["adjacency"];
    grid.adjacency.assign(grid.points.size(), {});
    if (!a.is_array() || a.size() != grid.points.size()) {
      throw ParseError("field 'adjacency' must hold one list per point");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (const auto& k : a[i]) {
        if (!k.is_number_integer() || k.get<long long>() < 0 || k.get<std::size_t>() >= grid.points.size()) {
          throw ParseError("field 'adjacency[" + std::to_string(i) + "]' has an invalid index");
        }
        grid.adjacency[i].push_back(k.get<std::size_t>());
      }
    }
  } else if (input.contains("radius")) {
    if (!input["radius"].is_number()) throw ParseError("field 'radius' must be a number");
    grid.adjacency = certify::radius_adjacency(grid.points, input["radius"].get<double>());
  } else {
    grid.adjacency = certify::chain_adjacency(grid.points.size());
  }
  const auto labels = certify::classify_local_optima(grid);
  const auto groups = certify::group_optima(grid, labels);
  json report = header(cfg);
  json lab = json::array();
  for (auto l : labels) lab.push_back(certify::to_string(l));
  report["labels"] = lab;
  json g = json::array();
  std::size_t counts[4] = {0, 0, 0, 0};
  for (const auto& grp : groups) {
    ++counts[static_cast<int>(grp.label)];
    g.push_back({{"label", certify::to_string(grp.label)}, {"cost", grp.cost}, {"members", grp.members}});
  }
  report["optima"] = g;
  report["counts"] = {{"global", counts[1]}, {"pseudo", counts[2]}, {"genuine", counts[3]}};
  report["status"] = "complete";
  finish(cfg, report, "classify.json");
  log << "classify: " << counts[1] << " global, " << counts[2] << " pseudo, " << counts[3]
      << " genuine\n";
  return kExitPass;
}

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.validate();
    if (cfg.command == "opf") return cmd_opf(cfg, log);
    if (cfg.command == "lrsdp") return cmd_lrsdp(cfg, log);
    if (cfg.command == "certify") return cmd_certify(cfg, log);
    if (cfg.command == "oracle") return cmd_oracle(cfg, log);
    if (cfg.command == "classify") return cmd_classify(cfg, log);
    log << "error: unknown command '" << cfg.command << "'\n";
    return kExitError;
  } catch (const CertificateError& e) {
    log << "certificate error: " << e.what() << "\n";
    return kExitCertificate;
  } catch (const RefusalError& e) {
    log << "refused: " << e.what() << "\n";
    return kExitError;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace relaxcert::cli
