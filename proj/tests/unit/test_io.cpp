#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "relaxcert/errors.hpp"
#include "relaxcert/io.hpp"

using namespace relaxcert;
namespace fs = std::filesystem;

namespace {
fs::path data(const char* name) { return fs::path(RELAXCERT_DATA_DIR) / name; }

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / "relaxcert_io_test";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("case round trip") {
  const auto c = io::load_case(data("case3.json"));
  CHECK(c.net.num_buses() == 3);
  CHECK(c.net.line(1).z == Complex(0.03, 0.05));
  CHECK_FALSE(c.net.bus(1).s_min.has_value());
  const auto again = io::parse_case(io::case_to_json(c));
  CHECK(io::case_to_json(again) == io::case_to_json(c));
}

TEST_CASE("case parse errors name the field") {
  auto j = io::case_to_json(io::load_case(data("case3.json")));
  j["buses"][0].erase("v_max");
  try {
    (void)io::parse_case(j);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("buses[0].v_max") != std::string::npos);
  }
  CHECK_THROWS_AS(io::load_case(data("missing.json")), IoError);
  const auto bad = scratch("bad.json");
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS(io::read_json(bad), ParseError);
}

TEST_CASE("instance round trip keeps complex entries") {
  std::mt19937_64 rng(1);
  const auto g = lrsdp::random_instance(rng, 3, 2, 1, true);
  const auto back = io::parse_instance(io::instance_to_json(g.inst));
  CHECK((back.C - g.inst.C).norm() == 0.0);
  CHECK((back.A[1] - g.inst.A[1]).norm() == 0.0);
  CHECK((back.b - g.inst.b).norm() == 0.0);
  CHECK(back.r == 1);
  const auto nh = io::load_instance(data("lrsdp_non_hermitian.json"));
  CHECK_THROWS_AS(nh.validate(), PreconditionError);
}

TEST_CASE("solver options") {
  const auto o = io::parse_solver_options(io::json{{"tol", 1e-6}, {"max_iter", 10}});
  CHECK(o.tol == 1e-6);
  CHECK(o.max_iter == 10);
  CHECK(o.relaxation_parameter == 1.6);
  CHECK_THROWS_AS(io::parse_solver_options(io::json{{"tol", -1.0}}), ParseError);
}

TEST_CASE("timestamps and atomic writes") {
  io::json r{{"a", 1}};
  io::stamp(r);
  CHECK(r.contains(io::kTimestampKey));
  CHECK(io::without_timestamp(r) == io::json{{"a", 1}});
  const auto p = scratch("out.json");
  io::write_json(p, r);
  CHECK(io::read_json(p) == r);
  std::ofstream(scratch("plain")) << "x";
  CHECK_THROWS_AS(io::write_atomic(scratch("plain") / "y.json", "{}"), IoError);
}

TEST_CASE("non-finite numbers are written as strings") {
  certify::CertificateReport rep;
  rep.cprime.margin = std::numeric_limits<double>::infinity();
  const auto j = io::to_json(rep);
  CHECK(j.dump().find("\"inf\"") != std::string::npos);
}
