#include "pmcf/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "pmcf/field_io.hpp"
#include "pmcf/recovery.hpp"

namespace pmcf {

// ---------------------------------------------------------------- expressions

struct GExpression::Node {
  enum class Op { number, coord, extent, add, sub, mul, div, pow, neg, sin, cos, exp };
  Op op = Op::number;
  double value = 0.0;
  int axis = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using Node = GExpression::Node;
using NodePtr = std::shared_ptr<const Node>;

class ExprParser {
 public:
  explicit ExprParser(const std::string& s) : s_(s) {}

  auto parse() -> NodePtr {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& what) const {
    std::ostringstream msg;
    msg << "g expression \"" << s_ << "\": " << what << " at column " << pos_ + 1;
    fail(ErrorKind::config, msg.str());
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  auto eat(char c) -> bool {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static auto make(Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr) -> NodePtr {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  auto expr() -> NodePtr {
    NodePtr n = term();
    while (true) {
      if (eat('+')) n = make(Node::Op::add, n, term());
      else if (eat('-')) n = make(Node::Op::sub, n, term());
      else return n;
    }
  }
  auto term() -> NodePtr {
    NodePtr n = unary();
    while (true) {
      if (eat('*')) n = make(Node::Op::mul, n, unary());
      else if (eat('/')) n = make(Node::Op::div, n, unary());
      else return n;
    }
  }
  auto unary() -> NodePtr {
    if (eat('-')) return make(Node::Op::neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  // Right associative; binds tighter than unary minus on its left.
  auto power() -> NodePtr {
    NodePtr base = primary();
    if (eat('^')) return make(Node::Op::pow, base, unary());
    return base;
  }
  auto primary() -> NodePtr {
    skip();
    if (pos_ >= s_.size()) error("unexpected end");
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) error("missing ')'");
      return n;
    }
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        error("bad number");
      }
      pos_ += used;
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      static const std::map<std::string, Node::Op> funcs{
          {"sin", Node::Op::sin}, {"cos", Node::Op::cos}, {"exp", Node::Op::exp}};
      if (auto f = funcs.find(id); f != funcs.end()) {
        if (!eat('(')) error("expected '(' after " + id);
        NodePtr arg = expr();
        if (!eat(')')) error("missing ')'");
        return make(f->second, arg);
      }
      auto n = std::make_shared<Node>();
      if (id == "pi") {
        n->value = std::numbers::pi;
      } else if (id == "x" || id == "y" || id == "z") {
        n->op = Node::Op::coord;
        n->axis = id[0] - 'x';
      } else if (id == "Lx" || id == "Ly" || id == "Lz") {
        n->op = Node::Op::extent;
        n->axis = id[1] - 'x';
      } else {
        pos_ = start;
        error("unknown name '" + id + "'");
      }
      return n;
    }
    error("unexpected '" + std::string(1, c) + "'");
  }
};

auto evaluate(const Node& n, const std::vector<double>& c, const std::vector<double>& L) -> double {
  auto axis_value = [&](const std::vector<double>& v) {
    if (n.axis >= static_cast<int>(v.size()))
      fail(ErrorKind::config, "g expression uses an axis the grid does not have");
    return v[static_cast<std::size_t>(n.axis)];
  };
  switch (n.op) {
    case Node::Op::number: return n.value;
    case Node::Op::coord: return axis_value(c);
    case Node::Op::extent: return axis_value(L);
    case Node::Op::add: return evaluate(*n.a, c, L) + evaluate(*n.b, c, L);
    case Node::Op::sub: return evaluate(*n.a, c, L) - evaluate(*n.b, c, L);
    case Node::Op::mul: return evaluate(*n.a, c, L) * evaluate(*n.b, c, L);
    case Node::Op::div: return evaluate(*n.a, c, L) / evaluate(*n.b, c, L);
    case Node::Op::pow: return std::pow(evaluate(*n.a, c, L), evaluate(*n.b, c, L));
    case Node::Op::neg: return -evaluate(*n.a, c, L);
    case Node::Op::sin: return std::sin(evaluate(*n.a, c, L));
    case Node::Op::cos: return std::cos(evaluate(*n.a, c, L));
    case Node::Op::exp: return std::exp(evaluate(*n.a, c, L));
  }
  return 0.0;
}

}  // namespace

GExpression::GExpression(const std::string& text) : text_(text), root_(ExprParser(text_).parse()) {}

auto GExpression::eval(const std::vector<double>& coords, const std::vector<double>& extents) const -> double {
  return evaluate(*root_, coords, extents);
}

// ---------------------------------------------------------------- config

auto to_string(Scenario s) -> const char* {
  switch (s) {
    case Scenario::profile: return "profile";
    case Scenario::relax: return "relax";
    case Scenario::minmax: return "minmax";
    case Scenario::construct: return "construct";
    case Scenario::diagnose: return "diagnose";
    case Scenario::full: return "full";
  }
  return "?";
}

auto to_string(ConstructMode m) -> const char* {
  switch (m) {
    case ConstructMode::automatic: return "auto";
    case ConstructMode::always: return "always";
    case ConstructMode::never: return "never";
  }
  return "?";
}

auto ExperimentConfig::resolved_lambda() const -> double { return lambda ? *lambda : sigma_constant(well); }

auto ExperimentConfig::make_grid() const -> std::shared_ptr<const TorusGrid> {
  require(!dims.empty(), ErrorKind::config, "config: this scenario needs a [grid] section");
  return std::make_shared<const TorusGrid>(dims, extents);
}

auto ExperimentConfig::make_forcing(const std::shared_ptr<const TorusGrid>& grid) const -> ScalarField {
  ScalarField g(grid);
  if (g_expr) {
    std::vector<double> c(static_cast<std::size_t>(grid->dim()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (int a = 0; a < grid->dim(); ++a) c[static_cast<std::size_t>(a)] = grid->coord(i, a);
      g[i] = g_expr->eval(c, grid->extents());
    }
  } else {
    require(!g_file.empty(), ErrorKind::config, "config: no forcing given (g or g_file)");
    g = load_field(g_file, *grid);
  }
  for (auto& v : g.values()) v += g_shift;
  if (g_mollify > 0.0) g = mollify(g, g_mollify);
  require(g.all_finite(), ErrorKind::config, "config: g is not finite on the grid");
  if (g.min() < 0.0) {
    std::ostringstream msg;
    msg << "config: g + g_shift has minimum " << g.min() << " < 0 on the grid";
    fail(ErrorKind::config, msg.str());
  }
  return g;
}

namespace {

auto fmt(double v) -> std::string {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

template <class T>
auto join(const std::vector<T>& v) -> std::string {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  return s.str();
}

}  // namespace

auto ExperimentConfig::echo() const -> std::string {
  std::ostringstream o;
  if (!dims.empty()) o << "[grid]\ndims = " << join(dims) << "\nextents = " << join(extents) << "\n";
  o << "[model]\nwell = " << well_text << "\neps = " << join(eps) << "\n";
  if (lambda) o << "lambda = " << fmt(*lambda) << "\n";
  if (g_expr) o << "g = " << g_expr->text() << "\n";
  if (!g_file.empty()) o << "g_file = " << g_file << "\n";
  o << "g_shift = " << fmt(g_shift) << "\ng_mollify = " << fmt(g_mollify) << "\n";
  o << "[run]\nscenario = " << to_string(scenario) << "\nconstruct = " << to_string(construct)
    << "\noutput = " << output << "\nseed = " << seed << "\n";
  o << "[solver]\ntol = " << fmt(tol) << "\ndt = " << fmt(dt) << "\nmax_steps = " << max_steps
    << "\nn_knots = " << n_knots << "\nmax_sweeps = " << max_sweeps << "\nspectrum_k = " << spectrum_k
    << "\nbattery = " << battery << "\n";
  if (!input.empty()) o << "[input]\nfield = " << input << "\n";
  if (interface) {
    o << "[interface]\nnormal_axis = " << interface->normal_axis << "\noffsets = " << join(interface->offsets)
      << "\nwindows = ";
    for (std::size_t j = 0; j < interface->windows.size(); ++j)
      o << (j ? ", " : "") << fmt(interface->windows[j].centre) << ":" << fmt(interface->windows[j].radius);
    o << "\nper_stage = " << per_stage << "\nvalley_samples = " << valley_samples << "\n";
  }
  o << "[profile]\nt = " << fmt(profile_t) << "\nsamples = " << profile_samples << "\n";
  return o.str();
}

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

auto trim(const std::string& s) -> std::string {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

[[noreturn]] void line_error(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "config line " << line << ": " << what;
  fail(ErrorKind::config, msg.str());
}

auto split_list(const std::string& v) -> std::vector<std::string> {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

auto to_double(const std::string& key, const std::string& s, int line) -> double {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) line_error(line, "key '" + key + "' expects a number, got '" + s + "'");
  return v;
}

auto to_int(const std::string& key, const std::string& s, int line) -> long long {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) line_error(line, "key '" + key + "' expects an integer, got '" + s + "'");
  return v;
}

}  // namespace

auto parse_config(const std::string& text) -> ExperimentConfig {
  static const std::map<std::string, std::vector<std::string>> known{
      {"grid", {"dims", "extents"}},
      {"model", {"well", "eps", "lambda", "g", "g_file", "g_shift", "g_mollify"}},
      {"run", {"scenario", "construct", "output", "seed"}},
      {"solver", {"tol", "dt", "max_steps", "n_knots", "max_sweeps", "spectrum_k", "battery"}},
      {"input", {"field"}},
      {"interface", {"normal_axis", "offsets", "windows", "per_stage", "valley_samples"}},
      {"profile", {"t", "samples"}},
  };
  std::map<std::string, Entry> entries;  // "section.key"
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') line_error(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!known.count(section)) line_error(line, "unknown section [" + section + "]");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) line_error(line, "expected key = value");
    if (section.empty()) line_error(line, "key outside any section");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    const auto& keys = known.at(section);
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      line_error(line, "unknown key '" + key + "' in section [" + section + "]");
    std::string full = section + "." + key;
    if (entries.count(full)) line_error(line, "duplicate key '" + key + "'");
    entries[full] = {value, line};
  }

  ExperimentConfig cfg;
  auto get = [&](const std::string& k) -> const Entry* {
    auto it = entries.find(k);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto number = [&](const std::string& k, double& out) {
    if (auto e = get(k)) out = to_double(k, e->value, e->line);
  };
  auto integer = [&](const std::string& k, int& out, int lo) {
    if (auto e = get(k)) {
      long long v = to_int(k, e->value, e->line);
      if (v < lo) line_error(e->line, "key '" + k + "' must be at least " + std::to_string(lo));
      out = static_cast<int>(v);
    }
  };
  auto line_of = [&](const std::string& k) { return get(k) ? get(k)->line : 0; };

  if (auto e = get("grid.dims")) {
    for (const auto& s : split_list(e->value)) {
      long long v = to_int("dims", s, e->line);
      if (v < 4) line_error(e->line, "grid dims must be at least 4");
      cfg.dims.push_back(static_cast<int>(v));
    }
  }
  if (auto e = get("grid.extents")) {
    for (const auto& s : split_list(e->value)) {
      double v = to_double("extents", s, e->line);
      if (!(v > 0.0)) line_error(e->line, "grid extents must be positive");
      cfg.extents.push_back(v);
    }
  }
  if (cfg.dims.size() != cfg.extents.size())
    line_error(std::max(line_of("grid.dims"), line_of("grid.extents")), "dims and extents differ in length");
  if (cfg.dims.size() > 3) line_error(line_of("grid.dims"), "at most 3 dimensions are supported");

  if (auto e = get("model.well")) {
    cfg.well_text = e->value;
    if (e->value != "standard") {
      std::vector<double> coeffs;
      for (const auto& s : split_list(e->value)) coeffs.push_back(to_double("well", s, e->line));
      try {
        cfg.well = WellSpec::custom(coeffs);
      } catch (const Error& err) {
        line_error(e->line, err.what());
      }
    }
  }
  if (auto e = get("model.eps")) {
    for (const auto& s : split_list(e->value)) {
      double v = to_double("eps", s, e->line);
      if (!(v > 0.0 && v < 1.0)) line_error(e->line, "eps values must lie in (0, 1)");
      cfg.eps.push_back(v);
    }
  }
  if (cfg.eps.empty()) fail(ErrorKind::config, "config: [model] eps is required");
  if (auto e = get("model.lambda")) {
    double v = to_double("lambda", e->value, e->line);
    if (!(v > 0.0)) line_error(e->line, "lambda must be positive");
    cfg.lambda = v;
  }
  if (auto e = get("model.g")) {
    try {
      cfg.g_expr.emplace(e->value);
    } catch (const Error& err) {
      line_error(e->line, err.what());
    }
  }
  if (auto e = get("model.g_file")) cfg.g_file = e->value;
  if (cfg.g_expr && !cfg.g_file.empty()) line_error(line_of("model.g_file"), "give either g or g_file, not both");
  number("model.g_shift", cfg.g_shift);
  number("model.g_mollify", cfg.g_mollify);
  if (cfg.g_mollify < 0.0) line_error(line_of("model.g_mollify"), "g_mollify must be nonnegative");

  if (auto e = get("run.scenario")) {
    static const std::map<std::string, Scenario> names{
        {"profile", Scenario::profile},     {"relax", Scenario::relax},       {"minmax", Scenario::minmax},
        {"construct", Scenario::construct}, {"diagnose", Scenario::diagnose}, {"full", Scenario::full},
        {"full-pipeline", Scenario::full}};
    auto it = names.find(e->value);
    if (it == names.end()) line_error(e->line, "unknown scenario '" + e->value + "'");
    cfg.scenario = it->second;
  }
  if (auto e = get("run.construct")) {
    if (e->value == "auto") cfg.construct = ConstructMode::automatic;
    else if (e->value == "always") cfg.construct = ConstructMode::always;
    else if (e->value == "never") cfg.construct = ConstructMode::never;
    else line_error(e->line, "construct must be auto, always or never");
  }
  if (auto e = get("run.output")) cfg.output = e->value;
  if (auto e = get("run.seed")) {
    long long v = to_int("seed", e->value, e->line);
    if (v < 0) line_error(e->line, "seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(v);
  }

  number("solver.tol", cfg.tol);
  number("solver.dt", cfg.dt);
  if (cfg.tol < 0.0) line_error(line_of("solver.tol"), "tol must be nonnegative");
  if (cfg.dt < 0.0) line_error(line_of("solver.dt"), "dt must be nonnegative");
  integer("solver.max_steps", cfg.max_steps, 1);
  integer("solver.n_knots", cfg.n_knots, 8);
  integer("solver.max_sweeps", cfg.max_sweeps, 1);
  integer("solver.spectrum_k", cfg.spectrum_k, 1);
  integer("solver.battery", cfg.battery, 1);

  if (auto e = get("input.field")) cfg.input = e->value;

  if (get("interface.offsets") || get("interface.windows") || get("interface.normal_axis")) {
    InterfaceSpec spec;
    integer("interface.normal_axis", spec.normal_axis, 0);
    if (auto e = get("interface.offsets"))
      for (const auto& s : split_list(e->value)) spec.offsets.push_back(to_double("offsets", s, e->line));
    if (auto e = get("interface.windows")) {
      for (const auto& s : split_list(e->value)) {
        auto colon = s.find(':');
        if (colon == std::string::npos) line_error(e->line, "windows expects centre:radius items");
        spec.windows.push_back({to_double("windows", trim(s.substr(0, colon)), e->line),
                                to_double("windows", trim(s.substr(colon + 1)), e->line)});
      }
    }
    if (!cfg.dims.empty()) {
      try {
        spec.validate(TorusGrid(cfg.dims, cfg.extents));
      } catch (const Error& err) {
        line_error(line_of("interface.offsets"), err.what());
      }
    }
    cfg.interface = spec;
  }
  integer("interface.per_stage", cfg.per_stage, 1);
  integer("interface.valley_samples", cfg.valley_samples, 1);

  number("profile.t", cfg.profile_t);
  integer("profile.samples", cfg.profile_samples, 3);

  // Scenario requirements.
  const bool needs_grid = cfg.scenario != Scenario::profile;
  if (needs_grid) {
    if (cfg.dims.empty()) fail(ErrorKind::config, "config: scenario " + std::string(to_string(cfg.scenario)) +
                                                      " needs [grid] dims and extents");
    if (!cfg.g_expr && cfg.g_file.empty())
      fail(ErrorKind::config, "config: [model] g or g_file is required");
  }
  if ((cfg.scenario == Scenario::relax || cfg.scenario == Scenario::diagnose) && cfg.input.empty())
    fail(ErrorKind::config, "config: scenario " + std::string(to_string(cfg.scenario)) + " needs [input] field");
  // construct = auto without an [interface] section skips the construction at run time.
  const bool constructs = cfg.scenario == Scenario::construct ||
                          (cfg.scenario == Scenario::full && cfg.construct == ConstructMode::always) ||
                          (cfg.scenario == Scenario::full && cfg.interface);
  if (constructs) {
    if (!cfg.interface)
      fail(ErrorKind::config, "config: construction needs an [interface] section describing M");
    if (cfg.dims.size() != 2) line_error(line_of("grid.dims"), "construction runs on T^2 only");
    const double reach = cfg.interface->reach(TorusGrid(cfg.dims, cfg.extents));
    for (double e : cfg.eps) {
      if (!(smallness_width(e) < reach)) {
        std::ostringstream msg;
        msg << "smallness gate: 12 eps |log eps| = " << smallness_width(e) << " at eps = " << e
            << " is not below the reach " << reach << " of M";
        line_error(line_of("model.eps"), msg.str());
      }
    }
  }
  if (needs_grid && cfg.g_expr) {
    try {
      (void)cfg.make_forcing(cfg.make_grid());
    } catch (const Error& err) {
      line_error(line_of("model.g"), err.what());
    }
  }
  return cfg;
}

auto load_config(const std::string& path) -> ExperimentConfig {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace pmcf
