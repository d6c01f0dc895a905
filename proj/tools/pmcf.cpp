#include <CLI11.hpp>
#include <iomanip>
#include <iostream>

#include "pmcf/config.hpp"
#include "pmcf/diagnostics.hpp"
#include "pmcf/field_io.hpp"
#include "pmcf/functionals.hpp"
#include "pmcf/runner.hpp"

using namespace pmcf;

namespace {

struct Args {
  std::string config;
  std::string input;
  std::string output;
};

auto prepare(const Args& args, std::optional<Scenario> scenario) -> ExperimentConfig {
  ExperimentConfig cfg = load_config(args.config);
  if (scenario) cfg.scenario = *scenario;
  if (!args.input.empty()) cfg.input = args.input;
  if (!args.output.empty()) cfg.output = args.output;
  // Re-validate scenario requirements after the overrides.
  return parse_config(cfg.echo());
}

auto run(const ExperimentConfig& cfg) -> int {
  RunManifest m = run_experiment(cfg);
  std::cout << "manifest " << m.path << "\n";
  for (const auto& r : m.runs) {
    std::cout << "eps " << r.eps << "\n";
    for (const auto& [k, v] : r.constants) std::cout << "  " << k << " = " << std::setprecision(10) << v << "\n";
    for (const auto& [k, v] : r.notes) std::cout << "  " << k << ": " << v << "\n";
  }
  if (m.failure) {
    std::cerr << "error in " << m.failure->stage << ": " << m.failure->message << "\n";
    return exit_code(m.failure->kind);
  }
  return 0;
}

auto energy(const ExperimentConfig& cfg) -> int {
  require(!cfg.input.empty(), ErrorKind::config, "energy: an input field is required (--input or [input] field)");
  auto grid = cfg.make_grid();
  ScalarField g = cfg.make_forcing(grid);
  ScalarField u = load_field(cfg.input, *grid);
  const double lambda = cfg.resolved_lambda();
  const double sigma = sigma_constant(cfg.well);
  std::cout << std::setprecision(12);
  for (double eps : cfg.eps) {
    auto r = pmc_energy(u, eps, g, lambda, cfg.well);
    auto res = first_variation(u, eps, g, lambda, cfg.well);
    std::cout << "eps " << eps << "\n  dirichlet = " << r.dirichlet << "\n  potential = " << r.potential
              << "\n  forcing = " << r.forcing << "\n  total_E = " << r.total_E << "\n  total_F = " << r.total_F
              << "\n  mass = " << r.total_E / (2.0 * sigma) << "\n  residual_sup = " << sup_norm(res) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field prescribed mean curvature experiments on flat tori"};
  app.require_subcommand(1);
  Args args;
  struct Sub {
    const char* name;
    const char* help;
    std::optional<Scenario> scenario;
  };
  const Sub subs[] = {
      {"profile", "1-D profiles and their energies", Scenario::profile},
      {"energy", "energy report of a field file", std::nullopt},
      {"relax", "flow a field file to a stationary point", Scenario::relax},
      {"minmax", "valley points and mountain-pass saddle", Scenario::minmax},
      {"construct", "recovery construction and stable solution", Scenario::construct},
      {"diagnose", "interface, measure and multiplicity of a field file", Scenario::diagnose},
      {"run", "the scenario named in the config", std::nullopt},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> commands;
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    cmd->add_option("config", args.config, "configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-i,--input", args.input, "input field file");
    cmd->add_option("-o,--output", args.output, "output directory");
    commands.emplace_back(cmd, &s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (auto [cmd, sub] : commands) {
      if (!cmd->parsed()) continue;
      std::string name = sub->name;
      if (name == "energy") return energy(prepare(args, std::nullopt));
      return run(prepare(args, sub->scenario));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
