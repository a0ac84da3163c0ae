#pragma once

// File formats: case and instance JSON, solver options, report JSON and
// atomic artifact writes.

#include <filesystem>
#include <string>

#include "json.hpp"
#include "relaxcert/certify.hpp"
#include "relaxcert/distflow.hpp"
#include "relaxcert/lrsdp.hpp"
#include "relaxcert/solver.hpp"

namespace relaxcert::io {

using json = nlohmann::ordered_json;

/// Key holding the only run-dependent value of a report.
inline constexpr const char* kTimestampKey = "generated_at";

struct OpfCase {
  distflow::RadialNetwork net;
  distflow::OpfCost cost;
};

/// Reads a JSON file. Throws IoError when unreadable and ParseError on
/// malformed JSON.
json read_json(const std::filesystem::path& path);

/// Throws ParseError naming the offending field.
OpfCase parse_case(const json& j);
json case_to_json(const OpfCase& c);
OpfCase load_case(const std::filesystem::path& path);

/// Parses the dense instance format. Structural problems raise ParseError;
/// Hermitian symmetry is checked later by LrsdpInstance::validate.
lrsdp::LrsdpInstance parse_instance(const json& j);
json instance_to_json(const lrsdp::LrsdpInstance& inst);
lrsdp::LrsdpInstance load_instance(const std::filesystem::path& path);

/// Missing keys keep their defaults; values must be positive.
solver::SolverOptions parse_solver_options(const json& j);

json to_json(const solver::SolveInfo& info);
json to_json(const distflow::OperatingPoint& x);
json to_json(const lrsdp::Matrix& X);
json to_json(const distflow::AssumptionReport& rep);
json to_json(const certify::CertificateReport& rep);
json to_json(const certify::ExactnessResult& res);
json to_json(const lrsdp::ReductionResult& res);
/// Summary of an oracle scan (counts, optima, components), not the grid.
json to_json(const certify::OracleResult& res);
json to_json(const certify::SearchResult& res);

/// Sets the timestamp key to the current UTC time.
void stamp(json& report);
/// Copy without the timestamp key.
json without_timestamp(json report);

/// Writes through a temporary file in the same directory and renames it
/// into place. Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const json& j);
void write_trace(const std::filesystem::path& path, const PathTrace& trace,
                 const TraceLayout& layout);

}  // namespace relaxcert::io
