#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "commands.hpp"

using relaxcert::cli::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"relaxcert: relaxation exactness certificates for radial OPF and low-rank SDP"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<double> tol, resolution;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples, starts;
  std::optional<std::string> out, start, conditions;
  std::string input;
  bool negative = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("input", input, "case or instance JSON file")->required();
    sub->add_option("--config", config_path, "JSON run configuration (flags take precedence)");
    sub->add_option("--tol", tol, "membership tolerance");
    sub->add_option("--seed", seed, "sampling seed");
    sub->add_option("--samples", samples, "number of sampled relaxed points");
    sub->add_option("--resolution", resolution, "oracle grid spacing");
    sub->add_option("--out", out, "output directory");
  };
  auto* opf = app.add_subcommand("opf", "solve the OPF relaxation, restore and certify");
  auto* lrsdp = app.add_subcommand("lrsdp", "solve the SDP relaxation and reduce its rank");
  auto* cert = app.add_subcommand("certify", "sampled (C1)/(C3) check of a case or instance");
  auto* oracle = app.add_subcommand("oracle", "brute-force landscape scan of a small problem");
  auto* classify = app.add_subcommand("classify", "label local optima of a landscape grid");
  for (auto* sub : {opf, lrsdp, cert, oracle, classify}) common(sub);
  lrsdp->add_option("--start", start, "JSON matrix to reduce from instead of the relaxation optimum");
  cert->add_flag("--negative-control", negative, "replace every restoration path by a constant one");
  cert->add_option("--conditions", conditions, "comma-separated subset of c1,c2,c3,cprime");
  oracle->add_option("--starts", starts, "multistart runs");

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = relaxcert::cli::parse_config(relaxcert::io::read_json(config_path));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return relaxcert::cli::kExitError;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.input = input;
  if (tol) {
    cfg.tol = *tol;
    cfg.solver.tol = *tol;
  }
  if (seed) cfg.seed = *seed;
  if (samples) cfg.samples = *samples;
  if (resolution) cfg.resolution = *resolution;
  if (starts) cfg.starts = *starts;
  if (out) cfg.out = *out;
  if (start) cfg.start = *start;
  if (negative) cfg.negative_control = true;
  if (conditions) {
    cfg.conditions.clear();
    std::string item;
    for (char ch : *conditions + ",") {
      if (ch == ',') {
        if (!item.empty()) cfg.conditions.push_back(item);
        item.clear();
      } else {
        item += ch;
      }
    }
  }
  return relaxcert::cli::run(cfg, std::cerr);
}
