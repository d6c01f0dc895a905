#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmcf/error.hpp"
#include "pmcf/grid.hpp"
#include "pmcf/recovery.hpp"
#include "pmcf/well.hpp"

namespace pmcf {

// Arithmetic over x, y (z), pi, Lx, Ly (Lz), numbers, + - * / ^, sin, cos, exp.
class GExpression {
 public:
  explicit GExpression(const std::string& text);
  [[nodiscard]] auto eval(const std::vector<double>& coords, const std::vector<double>& extents) const -> double;
  [[nodiscard]] auto text() const -> const std::string& { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

enum class Scenario { profile, relax, minmax, construct, diagnose, full };
enum class ConstructMode { automatic, always, never };

auto to_string(Scenario s) -> const char*;
auto to_string(ConstructMode m) -> const char*;

struct ExperimentConfig {
  std::vector<int> dims;
  std::vector<double> extents;
  WellSpec well;
  std::string well_text = "standard";
  std::vector<double> eps;
  std::optional<GExpression> g_expr;
  std::string g_file;
  double g_shift = 0.0;     // delta_g added to g
  double g_mollify = 0.0;   // mollification radius in grid units; 0 leaves g untouched
  std::optional<double> lambda;  // default sigma
  Scenario scenario = Scenario::full;
  ConstructMode construct = ConstructMode::automatic;
  std::string output = "pmcf-out";
  std::uint64_t seed = 1;

  // solver
  double tol = 0.0;        // 0: default_flow_tol
  double dt = 0.0;         // 0: eps/4
  int max_steps = 1000000;
  int n_knots = 32;
  int max_sweeps = 20000;
  int spectrum_k = 4;
  int battery = 16;

  // input field for relax / diagnose / energy
  std::string input;

  // M for the construction
  std::optional<InterfaceSpec> interface;
  int per_stage = 8;
  int valley_samples = 8;

  // profile scenario
  double profile_t = 0.0;
  int profile_samples = 401;

  [[nodiscard]] auto resolved_lambda() const -> double;
  [[nodiscard]] auto make_grid() const -> std::shared_ptr<const TorusGrid>;
  // g on the grid: expression or file, plus shift, then mollification; checks g >= 0.
  [[nodiscard]] auto make_forcing(const std::shared_ptr<const TorusGrid>& grid) const -> ScalarField;
  // key = value lines that parse back to the same config.
  [[nodiscard]] auto echo() const -> std::string;
};

// Throws a config error naming the offending line.
auto parse_config(const std::string& text) -> ExperimentConfig;
auto load_config(const std::string& path) -> ExperimentConfig;

}  // namespace pmcf
