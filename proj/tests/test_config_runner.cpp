#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "pmcf/config.hpp"
#include "pmcf/error.hpp"
#include "pmcf/runner.hpp"
#include "pmcf/well.hpp"

using namespace pmcf;
namespace fs = std::filesystem;

namespace {

auto config_error(const std::string& text) -> std::string {
  try {
    (void)parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

auto scratch(const std::string& name) -> fs::path {
  fs::path p = fs::temp_directory_path() / ("pmcf_test_" + name);
  fs::remove_all(p);
  return p;
}

auto slurp(const fs::path& p) -> std::string {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const char* kMinimal = R"([grid]
dims = 16, 16
extents = 2, 2
[model]
eps = 0.1
g = 1.0
)";

}  // namespace

TEST_CASE("minimal config takes the defaults") {
  auto cfg = parse_config(kMinimal);
  CHECK(cfg.resolved_lambda() == doctest::Approx(sigma_constant(cfg.well)).epsilon(1e-14));
  CHECK(cfg.scenario == Scenario::full);
  CHECK(cfg.construct == ConstructMode::automatic);
  auto g = cfg.make_forcing(cfg.make_grid());
  for (double v : g.values()) CHECK(v == 1.0);
  // The echo parses back to the same settings.
  auto again = parse_config(cfg.echo());
  CHECK(again.echo() == cfg.echo());
}

TEST_CASE("forcing expressions") {
  auto cfg = parse_config(std::string(kMinimal) + "g_shift = 0.25\n");
  auto g = cfg.make_forcing(cfg.make_grid());
  for (double v : g.values()) CHECK(v == 1.25);

  GExpression e("0.5 + 0.5*cos(2*pi*x/Lx) + y^2");
  CHECK(e.eval({0.0, 2.0}, {4.0, 4.0}) == doctest::Approx(5.0));
  CHECK(e.eval({2.0, 0.0}, {4.0, 4.0}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(GExpression("1 + "), Error);
  CHECK_THROWS_AS(GExpression("foo(x)"), Error);

  auto msg = config_error("[grid]\ndims = 8\nextents = 1\n[model]\neps = 0.1\ng = cos(2*pi*x/Lx)\n");
  CHECK(msg.find("config line 6") != std::string::npos);
}

TEST_CASE("config errors name the line") {
  CHECK(config_error("[grid]\ndims = 16\nextents = 1\ncolour = red\n").find("config line 4") != std::string::npos);
  CHECK(config_error("[nope]\n").find("config line 1") != std::string::npos);
  CHECK(config_error("[model]\neps = 0.1\neps = 0.2\n").find("config line 3") != std::string::npos);
  CHECK(config_error("[model]\neps = 1.5\n").find("config line 2") != std::string::npos);
  CHECK(config_error(std::string(kMinimal) + "[solver]\nn_knots = many\n").find("config line 8") !=
        std::string::npos);
  CHECK(config_error("[grid]\ndims = 16\nextents = 1\n").find("eps") != std::string::npos);
}

TEST_CASE("smallness gate rejects coarse eps for the construction") {
  const std::string text = R"([grid]
dims = 64, 32
extents = 16, 6
[model]
eps = 0.5
g = 1
[run]
scenario = construct
[interface]
normal_axis = 1
offsets = 3
windows = 4:1.4, 12:1.4
)";
  auto msg = config_error(text);
  CHECK(msg.find("smallness gate") != std::string::npos);
  CHECK(msg.find("config line 5") != std::string::npos);
  std::string ok = text;
  ok.replace(ok.find("eps = 0.5"), 9, "eps = 0.08");
  CHECK_NOTHROW((void)parse_config(ok));
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::config) == 2);
  CHECK(exit_code(ErrorKind::input) == 2);
  CHECK(exit_code(ErrorKind::format) == 2);
  CHECK(exit_code(ErrorKind::structural) == 2);
  CHECK(exit_code(ErrorKind::unsupported) == 2);
  CHECK(exit_code(ErrorKind::numeric) == 3);
  CHECK(exit_code(ErrorKind::construction) == 3);
  CHECK(exit_code(ErrorKind::search) == 4);
}

TEST_CASE("profile scenario writes tables only") {
  auto dir = scratch("profile");
  auto cfg = parse_config("[model]\neps = 0.1, 0.05\n[run]\nscenario = profile\noutput = " + dir.string() + "\n");
  CHECK(cfg.dims.empty());
  auto m = run_experiment(cfg);
  REQUIRE(m.ok());
  REQUIRE(m.runs.size() == 2);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    CHECK((ext == ".csv" || ext == ".json" || ext == ".ini"));
  }
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["version"] == kVersion);
  CHECK(j["runs"].size() == 2);
  CHECK_FALSE(j.contains("failure"));
  fs::remove_all(dir);
}

TEST_CASE("runs are deterministic") {
  const std::string body = R"([grid]
dims = 64
extents = 4
[model]
eps = 0.2
g = 1 + 0.5*cos(2*pi*x/Lx)
[run]
scenario = minmax
[solver]
n_knots = 16
)";
  auto d1 = scratch("det1"), d2 = scratch("det2");
  auto a = parse_config(body), b = parse_config(body);
  a.output = d1.string();
  b.output = d2.string();
  auto ra = run_experiment(a), rb = run_experiment(b);
  REQUIRE(ra.ok());
  REQUIRE(rb.ok());
  auto ja = ra.to_json(false), jb = rb.to_json(false);
  for (auto* t : {&ja, &jb})
    for (auto pos = t->find("det2"); pos != std::string::npos; pos = t->find("det2")) t->replace(pos, 4, "det1");
  CHECK(ja == jb);
  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(d1)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pmcf") continue;
    auto rel = fs::relative(entry.path(), d1);
    CHECK(slurp(entry.path()) == slurp(d2 / rel));
    ++compared;
  }
  CHECK(compared >= 3);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("output root override") {
  auto root = scratch("root");
  fs::create_directories(root);
  setenv(kOutputRootEnv, root.string().c_str(), 1);
  auto cfg = parse_config("[model]\neps = 0.1\n[run]\nscenario = profile\noutput = nested\n");
  CHECK(fs::path(resolve_output_dir(cfg)) == root / "nested");
  auto m = run_experiment(cfg);
  CHECK(m.ok());
  CHECK(fs::exists(root / "nested" / "manifest.json"));
  unsetenv(kOutputRootEnv);
  fs::remove_all(root);
}

TEST_CASE("stage failures are recorded in the manifest") {
  auto dir = scratch("fail");
  auto cfg = parse_config(R"([grid]
dims = 32
extents = 4
[model]
eps = 0.2
g = 1
[run]
scenario = minmax
[solver]
max_steps = 2
)");
  cfg.output = dir.string();
  auto m = run_experiment(cfg);
  REQUIRE_FALSE(m.ok());
  CHECK(exit_code(m.failure->kind) != 0);
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j.contains("failure"));
  fs::remove_all(dir);
}
