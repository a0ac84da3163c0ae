#include "relaxcert/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "relaxcert/errors.hpp"

namespace relaxcert::io {

namespace {

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing field '" + where + "." + key + "'");
  return *it;
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) throw ParseError("field '" + name + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError("field '" + name + "' must be finite");
  return d;
}

int integer(const json& v, const std::string& name) {
  if (!v.is_number_integer()) throw ParseError("field '" + name + "' must be an integer");
  return v.get<int>();
}

Complex complex_value(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 2) {
    throw ParseError("field '" + name + "' must be a [re, im] pair");
  }
  return {number(v[0], name + "[0]"), number(v[1], name + "[1]")};
}

Eigen::VectorXd vector_value(const json& v, const std::string& name, std::size_t size) {
  if (!v.is_array()) throw ParseError("field '" + name + "' must be an array");
  if (v.size() != size) {
    throw ParseError("field '" + name + "' must have " + std::to_string(size) + " entries");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) {
    out[static_cast<Eigen::Index>(i)] = number(v[i], name + "[" + std::to_string(i) + "]");
  }
  return out;
}

// real numbers or [re, im] pairs
Complex entry(const json& v, const std::string& name) {
  if (v.is_number()) return {number(v, name), 0.0};
  return complex_value(v, name);
}

lrsdp::Matrix matrix_value(const json& v, const std::string& name, std::size_t n) {
  if (!v.is_array() || v.size() != n) {
    throw ParseError("field '" + name + "' must have " + std::to_string(n) + " rows");
  }
  lrsdp::Matrix M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = name + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != n) {
      throw ParseError("field '" + row + "' must have " + std::to_string(n) + " entries");
    }
    for (std::size_t k = 0; k < n; ++k) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          entry(v[i][k], row + "[" + std::to_string(k) + "]");
    }
  }
  return M;
}

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json pair(Complex z) { return json::array({num(z.real()), num(z.imag())}); }

json condition(const certify::ConditionResult& c) {
  return {{"evaluated", c.evaluated}, {"pass", c.pass}, {"margin", num(c.margin)}, {"detail", c.detail}};
}

}  // namespace

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
}

OpfCase parse_case(const json& j) {
  if (!j.is_object()) throw ParseError("case must be a JSON object");
  const json& jb = field(j, "buses", "case");
  if (!jb.is_array() || jb.empty()) throw ParseError("field 'buses' must be a nonempty array");
  std::vector<distflow::Bus> buses;
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const std::string w = "buses[" + std::to_string(i) + "]";
    distflow::Bus b;
    b.id = integer(field(jb[i], "id", w), path_of(w, "id"));
    b.v_min = number(field(jb[i], "v_min", w), path_of(w, "v_min"));
    b.v_max = number(field(jb[i], "v_max", w), path_of(w, "v_max"));
    const json& smin = field(jb[i], "s_min", w);
    if (!smin.is_null()) b.s_min = complex_value(smin, path_of(w, "s_min"));
    b.s_max = complex_value(field(jb[i], "s_max", w), path_of(w, "s_max"));
    buses.push_back(b);
  }
  const json& jl = field(j, "lines", "case");
  if (!jl.is_array()) throw ParseError("field 'lines' must be an array");
  std::vector<distflow::Line> lines;
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string w = "lines[" + std::to_string(i) + "]";
    distflow::Line l;
    l.from = integer(field(jl[i], "from", w), path_of(w, "from"));
    l.to = integer(field(jl[i], "to", w), path_of(w, "to"));
    l.z = complex_value(field(jl[i], "z", w), path_of(w, "z"));
    l.l_max = number(field(jl[i], "l_max", w), path_of(w, "l_max"));
    lines.push_back(l);
  }
  const int root = integer(field(j, "root", "case"), "root");
  const json& jc = field(j, "cost", "case");
  const auto n = buses.size();
  distflow::OpfCost cost{vector_value(field(jc, "cp", "cost"), "cost.cp", n),
                         vector_value(field(jc, "cq", "cost"), "cost.cq", n),
                         vector_value(field(jc, "qp", "cost"), "cost.qp", n),
                         vector_value(field(jc, "qq", "cost"), "cost.qq", n)};
  try {
    return {distflow::RadialNetwork(std::move(buses), std::move(lines), root), std::move(cost)};
  } catch (const StructuralError& e) {
    throw ParseError(std::string("case structure: ") + e.what());
  }
}

json case_to_json(const OpfCase& c) {
  json buses = json::array();
  for (const auto& b : c.net.buses()) {
    buses.push_back({{"id", b.id},
                     {"v_min", b.v_min},
                     {"v_max", b.v_max},
                     {"s_min", b.s_min ? pair(*b.s_min) : json(nullptr)},
                     {"s_max", pair(b.s_max)}});
  }
  json lines = json::array();
  for (const auto& l : c.net.lines()) {
    lines.push_back({{"from", l.from}, {"to", l.to}, {"z", pair(l.z)}, {"l_max", l.l_max}});
  }
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"buses", buses},
          {"lines", lines},
          {"root", c.net.root_id()},
          {"cost", {{"cp", vec(c.cost.cp)}, {"cq", vec(c.cost.cq)}, {"qp", vec(c.cost.qp)}, {"qq", vec(c.cost.qq)}}}};
}

OpfCase load_case(const std::filesystem::path& path) { return parse_case(read_json(path)); }

lrsdp::LrsdpInstance parse_instance(const json& j) {
  if (!j.is_object()) throw ParseError("instance must be a JSON object");
  const int n = integer(field(j, "n", "instance"), "n");
  const int m = integer(field(j, "m", "instance"), "m");
  const int r = integer(field(j, "r", "instance"), "r");
  if (n < 1) throw ParseError("field 'n' must be positive");
  if (m < 0) throw ParseError("field 'm' must be nonnegative");
  if (r < 1 || r > n) throw ParseError("field 'r' must lie in [1, n]");
  const auto nn = static_cast<std::size_t>(n);
  lrsdp::LrsdpInstance inst;
  inst.r = static_cast<std::size_t>(r);
  inst.C = matrix_value(field(j, "C", "instance"), "C", nn);
  const json& ja = field(j, "A", "instance");
  if (!ja.is_array() || ja.size() != static_cast<std::size_t>(m)) {
    throw ParseError("field 'A' must hold m = " + std::to_string(m) + " matrices");
  }
  for (std::size_t i = 0; i < ja.size(); ++i) {
    inst.A.push_back(matrix_value(ja[i], "A[" + std::to_string(i) + "]", nn));
  }
  inst.b = vector_value(field(j, "b", "instance"), "b", static_cast<std::size_t>(m));
  return inst;
}

json instance_to_json(const lrsdp::LrsdpInstance& inst) {
  auto mat = [](const lrsdp::Matrix& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(pair(M(i, k)));
      rows.push_back(row);
    }
    return rows;
  };
  json A = json::array();
  for (const auto& a : inst.A) A.push_back(mat(a));
  return {{"n", inst.n()},
          {"m", inst.m()},
          {"r", inst.r},
          {"C", mat(inst.C)},
          {"A", A},
          {"b", std::vector<double>(inst.b.data(), inst.b.data() + inst.b.size())}};
}

lrsdp::LrsdpInstance load_instance(const std::filesystem::path& path) {
  return parse_instance(read_json(path));
}

solver::SolverOptions parse_solver_options(const json& j) {
  solver::SolverOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw ParseError("solver options must be an object");
  if (j.contains("tol")) o.tol = number(j["tol"], "tol");
  if (j.contains("max_iter")) o.max_iter = integer(j["max_iter"], "max_iter");
  if (j.contains("relaxation_parameter")) {
    o.relaxation_parameter = number(j["relaxation_parameter"], "relaxation_parameter");
  }
  if (!(o.tol > 0.0)) throw ParseError("field 'tol' must be positive");
  if (o.max_iter <= 0) throw ParseError("field 'max_iter' must be positive");
  if (!(o.relaxation_parameter > 0.0 && o.relaxation_parameter < 2.0)) {
    throw ParseError("field 'relaxation_parameter' must lie in (0, 2)");
  }
  return o;
}

json to_json(const solver::SolveInfo& info) {
  return {{"status", solver::to_string(info.status)},
          {"objective", num(info.objective)},
          {"primal_res", num(info.primal_res)},
          {"dual_res", num(info.dual_res)},
          {"gap", num(info.gap)},
          {"primal_obj", num(info.primal_obj)},
          {"dual_obj", num(info.dual_obj)},
          {"iterations", info.iterations},
          {"options",
           {{"tol", info.options.tol},
            {"max_iter", info.options.max_iter},
            {"relaxation_parameter", info.options.relaxation_parameter}}},
          {"note", info.note}};
}

json to_json(const distflow::OperatingPoint& x) {
  json s = json::array(), S = json::array();
  for (Eigen::Index i = 0; i < x.s.size(); ++i) s.push_back(pair(x.s[i]));
  for (Eigen::Index i = 0; i < x.S.size(); ++i) S.push_back(pair(x.S[i]));
  return {{"s", s},
          {"v", std::vector<double>(x.v.data(), x.v.data() + x.v.size())},
          {"l", std::vector<double>(x.ell.data(), x.ell.data() + x.ell.size())},
          {"S", S}};
}

json to_json(const lrsdp::Matrix& X) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < X.cols(); ++k) row.push_back(pair(X(i, k)));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const distflow::AssumptionReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json e = {{"name", c.name}, {"pass", c.pass}, {"deferred", c.deferred}, {"detail", c.detail}};
    if (c.witness_edge >= 0) e["witness_edge"] = c.witness_edge;
    if (c.witness_bus >= 0) e["witness_bus"] = c.witness_bus;
    checks.push_back(e);
  }
  return {{"all_pass", rep.all_pass()},
          {"lower_injection_unbounded", rep.lower_injection_unbounded},
          {"checks", checks}};
}

json to_json(const certify::CertificateReport& rep) {
  json w = json::array();
  for (const auto& x : rep.witnesses) {
    w.push_back({{"condition", x.condition}, {"point", x.point}, {"sample", x.sample}, {"message", x.message}});
  }
  return {{"c1", condition(rep.c1)},
          {"c2_proxy", condition(rep.c2_proxy)},
          {"c3", condition(rep.c3)},
          {"cprime", condition(rep.cprime)},
          {"exactness", certify::to_string(rep.exactness)},
          {"invariants_hold", rep.invariants_hold()},
          {"witnesses", w},
          {"sample_count", rep.sample_count},
          {"seed", rep.seed},
          {"tol", rep.tol},
          {"notes", rep.notes}};
}

json to_json(const certify::ExactnessResult& res) {
  return {{"verdict", certify::to_string(res.verdict)},
          {"detail", res.detail},
          {"suboptimal_witness", res.suboptimal_witness},
          {"cost_drop", num(res.cost_drop)}};
}

json to_json(const lrsdp::ReductionResult& res) {
  json stages = json::array();
  for (const auto& s : res.stages) {
    stages.push_back({{"constant", s.constant},
                      {"rank_before", s.rank_before},
                      {"rank_after", s.rank_after},
                      {"alpha", num(s.alpha)},
                      {"v_before", num(s.v_before)},
                      {"v_after", num(s.v_after)}});
  }
  return {{"dimension_condition", res.dimension_condition},
          {"initial_rank", res.initial_rank},
          {"final_rank", res.final_rank},
          {"active_stages", res.active_stages},
          {"max_cost_drift", num(res.max_cost_drift)},
          {"max_constraint_drift", num(res.max_constraint_drift)},
          {"min_eigenvalue", num(res.min_eigenvalue)},
          {"stages", stages}};
}

json to_json(const certify::OracleResult& res) {
  json optima = json::array();
  for (const auto& g : res.optima) {
    const auto& p = res.grid.points[g.members.front()];
    optima.push_back({{"label", certify::to_string(g.label)},
                      {"cost", num(g.cost)},
                      {"size", g.members.size()},
                      {"representative", std::vector<double>(p.data(), p.data() + p.size())}});
  }
  return {{"resolution", res.resolution},
          {"shape", res.shape},
          {"feasible_points", res.grid.points.size()},
          {"components", res.components},
          {"global_cost", num(res.global_cost)},
          {"lipschitz", num(res.lipschitz)},
          {"counts",
           {{"global", res.count(certify::Label::Global)},
            {"pseudo", res.count(certify::Label::Pseudo)},
            {"genuine", res.count(certify::Label::Genuine)}}},
          {"demoted", res.demoted},
          {"optima", optima}};
}

json to_json(const certify::SearchResult& res) {
  json optima = json::array();
  for (const auto& o : res.optima) {
    optima.push_back({{"cost", num(o.cost)},
                      {"point", std::vector<double>(o.point.data(), o.point.data() + o.point.size())},
                      {"first_order_residual", num(o.first_order_residual)},
                      {"evaluations", o.evaluations}});
  }
  return {{"runs", res.runs}, {"converged", res.optima.size()}, {"optima", optima}, {"diagnostics", res.diagnostics}};
}

void stamp(json& report) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  report[kTimestampKey] = buf;
}

json without_timestamp(json report) {
  if (report.is_object()) report.erase(kTimestampKey);
  return report;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_atomic(path, j.dump(2) + "\n");
}

void write_trace(const std::filesystem::path& path, const PathTrace& trace,
                 const TraceLayout& layout) {
  std::ostringstream os;
  write_trace_csv(os, trace, layout);
  write_atomic(path, os.str());
}

}  // namespace relaxcert::io
