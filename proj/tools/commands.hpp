#pragma once

// Batch commands behind the relaxcert executable. Exit codes: 0 when every
// requested check passes, 1 on input, I/O or solver errors, 2 when a
// certificate or assumption fails.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "relaxcert/io.hpp"
#include "relaxcert/solver.hpp"

namespace relaxcert::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCertificate = 2;

struct RunConfig {
  std::string command;
  std::filesystem::path input;
  std::filesystem::path out = "out";
  double tol = kMembershipTol;
  std::uint64_t seed = 0;
  std::size_t samples = 50;
  double resolution = 0.005;
  std::size_t starts = 20;
  solver::SolverOptions solver;
  std::optional<std::filesystem::path> start;  // lrsdp: reduce from this point
  bool negative_control = false;               // certify: constant paths
  std::vector<std::string> conditions;         // certify: empty means defaults

  /// Throws PreconditionError on non-positive tolerances or counts.
  void validate() const;
};

/// Keys mirror the RunConfig fields; "solver" holds the solver options.
/// Unknown keys raise ParseError.
RunConfig parse_config(const io::json& j, RunConfig base = {});
io::json config_to_json(const RunConfig& cfg);

int cmd_opf(const RunConfig& cfg, std::ostream& log);
int cmd_lrsdp(const RunConfig& cfg, std::ostream& log);
int cmd_certify(const RunConfig& cfg, std::ostream& log);
int cmd_oracle(const RunConfig& cfg, std::ostream& log);
int cmd_classify(const RunConfig& cfg, std::ostream& log);

/// Dispatches on cfg.command and maps library errors to exit codes,
/// printing the message to `log`.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace relaxcert::cli
