// isometrize: batch certificates for power-bounded operators and
// representations of amenable groups.

#include <CLI11.hpp>

#include "isometrize/cli.hpp"

namespace {

using isometrize::Command;
using isometrize::OutputFormat;
using isometrize::RunConfig;

void add_common(CLI::App* sub, RunConfig& cfg, std::int64_t& n_max, double& decay_tol) {
  sub->add_option("--nmax", n_max, "largest N scanned")->check(CLI::Range(std::int64_t{4}, std::int64_t{1} << 40));
  sub->add_option("--tol", cfg.tol, "certificate residual tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--decay-tol", decay_tol, "absolute threshold for symmetric-difference decay")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--format", cfg.format, "text, csv or json")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, OutputFormat>{
              {"text", OutputFormat::Text}, {"csv", OutputFormat::Csv}, {"json", OutputFormat::Json}},
          CLI::ignore_case));
  sub->add_option("--output,-o", cfg.output_path, "write the report here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity certificates via Cesaro and Folner averages"};
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.seed = isometrize::seed_from_env();
  std::int64_t n_max = 0;
  double decay_tol = -1.0;
  double kappa = 0.0;

  struct Entry {
    Command command;
    const char* description;
    bool takes_file;
  };
  const Entry entries[] = {
      {Command::AnalyzeOperator, "certify a matrix as similar to an isometry", true},
      {Command::UnitarizeRep, "unitarize a representation of Z^d, heisenberg3 or a finite group", true},
      {Command::IsometrizeSemigroup, "isometrize a representation of N^d", true},
      {Command::FolnerReport, "Folner, SFC, Tempelman and doubling tables for a group", false},
      {Command::DerivationReport, "check a derivation and extract T with D(g) = pi(g)T - T pi(g)", true},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(std::string(isometrize::to_string(e.command)), e.description);
    if (e.takes_file)
      sub->add_option("file", cfg.input_path, "input JSON")->required()->check(CLI::ExistingFile);
    add_common(sub, cfg, n_max, decay_tol);
    if (e.command == Command::FolnerReport) {
      sub->add_option("--group", cfg.group, "Z^d, N^d, heisenberg3 or finite:<file>")->required();
      sub->add_option("--p", cfg.p, "doubling dilation")->check(CLI::PositiveNumber);
      sub->add_option("--kappa", kappa, "doubling ratio bound")->check(CLI::Range(1.0, 1e300));
    }
    subs.emplace_back(sub, e.command);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (const auto& [sub, command] : subs)
    if (sub->parsed()) cfg.command = command;
  if (n_max > 0) cfg.n_max = n_max;
  if (decay_tol >= 0.0) cfg.decay_tol = decay_tol;
  if (kappa > 0.0) cfg.kappa = kappa;
  return isometrize::run(cfg);
}
