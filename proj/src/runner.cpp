#include "pmcf/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "pmcf/diagnostics.hpp"
#include "pmcf/field_io.hpp"
#include "pmcf/flows.hpp"
#include "pmcf/minmax.hpp"
#include "pmcf/profiles.hpp"
#include "pmcf/recovery.hpp"

namespace fs = std::filesystem;

namespace pmcf {

auto RunManifest::to_json(bool include_timing) const -> std::string {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["config"] = config_echo;
  j["output_dir"] = output_dir;
  j["status"] = failure ? "failed" : "ok";
  if (failure) {
    j["failure"] = {{"kind", static_cast<int>(failure->kind)},
                    {"exit_code", exit_code(failure->kind)},
                    {"stage", failure->stage},
                    {"message", failure->message}};
  }
  j["constants"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : constants) j["constants"][k] = v;
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json jr;
    jr["eps"] = r.eps;
    jr["dir"] = r.dir;
    jr["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : r.stages) {
      nlohmann::ordered_json js{{"name", s.name}, {"artifacts", s.artifacts}};
      if (include_timing) js["seconds"] = s.seconds;
      jr["stages"].push_back(js);
    }
    jr["constants"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.constants) jr["constants"][k] = v;
    jr["notes"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.notes) jr["notes"][k] = v;
    j["runs"].push_back(jr);
  }
  return j.dump(2) + "\n";
}

auto resolve_output_dir(const ExperimentConfig& cfg) -> std::string {
  fs::path out(cfg.output);
  if (const char* root = std::getenv(kOutputRootEnv); root && *root && out.is_relative()) out = fs::path(root) / out;
  return out.string();
}

namespace {

auto csv_stream(const fs::path& p) -> std::ofstream {
  std::ofstream f(p);
  if (!f) fail(ErrorKind::input, "cannot write " + p.string());
  f << std::setprecision(17);
  return f;
}

struct StageFailure : Error {
  StageFailure(const Error& e, std::string stage) : Error(e.kind(), e.what()), stage_name(std::move(stage)) {}
  std::string stage_name;
};

// Per-eps execution context.
class EpsContext {
 public:
  EpsContext(const ExperimentConfig& cfg, EpsRun& run, fs::path dir)
      : cfg_(cfg), run_(run), dir_(std::move(dir)), eps_(run.eps), lambda_(cfg.resolved_lambda()) {}

  void execute() {
    switch (cfg_.scenario) {
      case Scenario::profile: profile(); break;
      case Scenario::relax: relax(); break;
      case Scenario::minmax: minmax(); break;
      case Scenario::construct: construct(std::nullopt); break;
      case Scenario::diagnose: diagnose(load_input(), "input"); break;
      case Scenario::full: full(); break;
    }
  }

 private:
  const ExperimentConfig& cfg_;
  EpsRun& run_;
  fs::path dir_;
  double eps_;
  double lambda_;
  std::shared_ptr<const TorusGrid> grid_;
  ScalarField g_;
  std::optional<ValleyPoints> valley_;

  template <class F>
  auto stage(const std::string& name, F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    StageRecord rec{name, 0.0, {}};
    try {
      if constexpr (std::is_void_v<decltype(body(rec))>) {
        body(rec);
        finish(rec, t0);
      } else {
        auto result = body(rec);
        finish(rec, t0);
        return result;
      }
    } catch (const StageFailure&) {
      throw;
    } catch (const Error& e) {
      finish(rec, t0);
      throw StageFailure(e, name);
    } catch (const std::exception& e) {
      finish(rec, t0);
      throw StageFailure(Error(ErrorKind::numeric, e.what()), name);
    }
  }

  void finish(StageRecord& rec, std::chrono::steady_clock::time_point t0) {
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run_.stages.push_back(std::move(rec));
  }

  auto artifact(StageRecord& rec, const std::string& name) -> fs::path {
    rec.artifacts.push_back((fs::path(run_.dir) / name).string());
    fs::create_directories((dir_ / name).parent_path());
    return dir_ / name;
  }

  void save(StageRecord& rec, const ScalarField& u, const std::string& name) { save_field(u, artifact(rec, name).string()); }

  void ensure_grid() {
    if (grid_) return;
    grid_ = cfg_.make_grid();
    g_ = cfg_.make_forcing(grid_);
    run_.constants["integral_lambda_g"] = lambda_ * integrate(g_);
    run_.constants["lambda"] = lambda_;
  }

  auto load_input() -> ScalarField {
    ensure_grid();
    return stage("load", [&](StageRecord&) { return load_field(cfg_.input, *grid_); });
  }

  auto tol() const -> double { return cfg_.tol > 0.0 ? cfg_.tol : default_flow_tol(eps_, g_, lambda_); }

  void write_trace(StageRecord& rec, const FlowTrace& t, const std::string& name) {
    auto f = csv_stream(artifact(rec, name));
    f << "step,time,total_F,residual_sup,umin,umax\n";
    for (const auto& r : t.records)
      f << r.step << ',' << r.time << ',' << r.total_F << ',' << r.residual_sup << ',' << r.umin << ',' << r.umax << '\n';
    run_.constants["flow_worst_increase"] = std::max(run_.constants["flow_worst_increase"], t.worst_energy_increase());
  }

  void profile() {
    stage("profile", [&](StageRecord& rec) {
      const WellSpec& w = cfg_.well;
      Profile1D trunc{Profile1D::Kind::truncated, eps_, 0.0, w};
      Profile1D dbl{Profile1D::Kind::double_layer, eps_, 0.0, w};
      Profile1D shifted{Profile1D::Kind::double_shifted, eps_, cfg_.profile_t, w};
      const double R = shifted.support() * 1.25;
      auto f = csv_stream(artifact(rec, "profile.csv"));
      f << "r,heteroclinic,truncated,double,double_shifted\n";
      for (int k = 0; k < cfg_.profile_samples; ++k) {
        double r = -R + 2.0 * R * k / (cfg_.profile_samples - 1);
        f << r << ',' << heteroclinic(w, r / eps_) << ',' << trunc.value(r) << ',' << dbl.value(r) << ','
          << shifted.value(r) << '\n';
      }
      run_.constants["sigma"] = sigma_constant(w);
      run_.constants["energy_truncated"] = profile_energy(trunc);
      run_.constants["energy_double"] = profile_energy(dbl);
      run_.constants["energy_double_shifted"] = profile_energy(shifted);
      run_.constants["Lambda"] = truncation_width(eps_);
    });
  }

  void relax() {
    ScalarField u0 = load_input();
    stage("relax", [&](StageRecord& rec) {
      FlowOptions opts;
      opts.dt = cfg_.dt;
      auto [u, trace] = flow_to_stationary(u0, eps_, g_, lambda_, cfg_.well, tol(), cfg_.max_steps, opts);
      save(rec, u, "final.pmcf");
      write_trace(rec, trace, "trace.csv");
      run_.constants["final_F"] = pmc_energy(u, eps_, g_, lambda_, cfg_.well).total_F;
      run_.constants["residual"] = trace.records.back().residual_sup;
      run_.constants["steps"] = trace.records.back().step;
      run_.notes["termination"] = to_string(trace.termination);
    });
  }

  void valley() {
    if (valley_) return;
    ensure_grid();
    stage("valley_points", [&](StageRecord& rec) {
      valley_ = valley_points(eps_, g_, lambda_, cfg_.well, cfg_.tol, 0.0, cfg_.max_steps);
      save(rec, valley_->a, "a.pmcf");
      save(rec, valley_->b, "b.pmcf");
      write_trace(rec, valley_->trace_a, "trace_a.csv");
      write_trace(rec, valley_->trace_b, "trace_b.csv");
      run_.constants["c"] = valley_->barrier.c;
      run_.constants["a_min"] = valley_->a.min();
      run_.constants["b_max"] = valley_->b.max();
    });
  }

  auto minmax() -> MinmaxResult {
    valley();
    PhasePath path = stage("initial_path", [&](StageRecord&) {
      return initial_path(valley_->a, valley_->b, eps_, g_, cfg_.n_knots, cfg_.well);
    });
    return stage("mountain_pass", [&](StageRecord& rec) {
      MinmaxOptions opts;
      opts.tol = cfg_.tol;
      opts.dt = cfg_.dt;
      opts.max_sweeps = cfg_.max_sweeps;
      opts.spectrum_k = cfg_.spectrum_k;
      opts.morse.seed = static_cast<unsigned>(cfg_.seed);
      MinmaxResult res = mountain_pass(path, eps_, g_, lambda_, cfg_.well, opts);
      save(rec, res.saddle, "saddle.pmcf");
      {
        auto f = csv_stream(artifact(rec, "sweeps.csv"));
        f << "sweep,peak_index,peak_F,peak_residual,path_max_before,path_max_after\n";
        for (const auto& s : res.sweeps)
          f << s.sweep << ',' << s.peak_index << ',' << s.peak_F << ',' << s.peak_residual << ',' << s.path_max_before
            << ',' << s.path_max_after << '\n';
      }
      {
        auto f = csv_stream(artifact(rec, "path.csv"));
        f << "knot,param,total_F,wall\n";
        for (std::size_t i = 0; i < res.path.size(); ++i)
          f << i << ',' << res.path.params[i] << ',' << res.knot_F[i] << ',' << res.knot_wall[i] << '\n';
      }
      {
        auto f = csv_stream(artifact(rec, "spectrum.csv"));
        f << "index,eigenvalue,residual\n";
        for (std::size_t i = 0; i < res.spectrum.eigenvalues.size(); ++i)
          f << i << ',' << res.spectrum.eigenvalues[i] << ','
            << (i < res.spectrum.residual_norms.size() ? res.spectrum.residual_norms[i] : 0.0) << '\n';
      }
      auto E = pmc_energy(res.saddle, eps_, g_, lambda_, cfg_.well);
      run_.constants["beta"] = res.beta;
      run_.constants["beta_margin"] = res.beta - lambda_ * integrate(g_);
      run_.constants["saddle_E"] = E.total_E;
      run_.constants["saddle_residual"] = res.residual;
      run_.constants["morse_index"] = res.spectrum.negative_count;
      run_.constants["sweeps"] = static_cast<double>(res.sweeps.size());
      return res;
    });
  }

  // Returns the multiplicity estimates of the interface of u.
  auto diagnose(const ScalarField& u, const std::string& tag) -> std::vector<ArcMultiplicity> {
    ensure_grid();
    return stage("diagnose:" + tag, [&](StageRecord& rec) {
      const WellSpec& w = cfg_.well;
      const double sigma = sigma_constant(w);
      auto measure = energy_measure(u, eps_, w);
      auto geom = extract_interface(u);
      auto phases = phase_classify(u);
      std::vector<ArcMultiplicity> mult;
      if (!geom.empty()) mult = multiplicity_estimate(measure, geom);
      save(rec, measure.density, tag + "/density.pmcf");
      std::optional<CurvatureReport> curv;
      if (geom.dim == 2 && !geom.empty()) curv = curvature_vs_g(geom, g_, lambda_, sigma);
      auto stability = stability_quadratic_check(u, eps_, w, default_test_battery(u.grid(), cfg_.battery, cfg_.seed));
      {
        auto f = csv_stream(artifact(rec, tag + "/polylines.csv"));
        if (geom.dim == 2) {
          f << "polyline,vertex,x,y,kappa,normal_x,normal_y,phase_normal_side,phase_other_side\n";
          for (std::size_t p = 0; p < geom.polylines.size(); ++p) {
            const auto& pl = geom.polylines[p];
            for (std::size_t k = 0; k < pl.points.size(); ++k) {
              double kappa = curv ? curv->kappa[p][k] : std::nan("");
              f << p << ',' << k << ',' << pl.points[k][0] << ',' << pl.points[k][1] << ',' << kappa << ','
                << pl.normals[k][0] << ',' << pl.normals[k][1] << ",1,-1\n";
            }
          }
        } else {
          f << "crossing,x,sign\n";
          for (std::size_t k = 0; k < geom.crossings.size(); ++k)
            f << k << ',' << geom.crossings[k] << ',' << geom.crossing_sign[k] << '\n';
        }
      }
      {
        auto f = csv_stream(artifact(rec, tag + "/measure.csv"));
        f << "arc,cluster,length,mass,ratio,estimate,unreliable\n";
        for (const auto& m : mult)
          f << m.arc << ',' << m.cluster << ',' << m.length << ',' << m.mass << ',' << m.ratio << ',' << m.estimate
            << ',' << (m.unreliable ? 1 : 0) << '\n';
      }
      {
        std::ofstream f(artifact(rec, tag + "/report.txt"));
        f << std::setprecision(10);
        f << "mass = " << measure.mass << "\n";
        f << "interface_length = " << geom.total_length() << "\n";
        f << "arcs = " << (geom.dim == 2 ? geom.polylines.size() : geom.crossings.size()) << "\n";
        f << "plus_volume = " << phases.plus_volume << "\nminus_volume = " << phases.minus_volume << "\n";
        f << "components = " << phases.components.size() << "\n";
        for (std::size_t c = 0; c < phases.components.size(); ++c)
          f << "component " << c << " sign " << phases.components[c].sign << " volume " << phases.components[c].volume
            << "\n";
        for (const auto& m : mult)
          f << "arc " << m.arc << " multiplicity " << m.estimate << (m.estimate % 2 == 0 ? " doubled" : " single")
            << (m.unreliable ? " unreliable" : "") << "\n";
        if (curv)
          f << "curvature median_ratio " << curv->median_ratio << " iqr " << curv->iqr_ratio << " median_kappa "
            << curv->median_kappa << " window " << curv->window << " skipped " << curv->skipped << "\n";
        f << "stability min Q = " << stability.min_value << " over " << stability.values.size() << " test fields\n";
      }
      run_.constants[tag + ".stability_min_Q"] = stability.min_value;
      run_.constants[tag + ".mass"] = measure.mass;
      run_.constants[tag + ".interface_length"] = geom.total_length();
      run_.constants[tag + ".plus_volume"] = phases.plus_volume;
      if (curv) run_.constants[tag + ".curvature_median_ratio"] = curv->median_ratio;
      return mult;
    });
  }

  void construct(const std::optional<ScalarField>& saddle) {
    ensure_grid();
    valley();
    (void)saddle;
    const WellSpec& w = cfg_.well;
    auto setup = stage("recovery_setup", [&](StageRecord& rec) {
      auto s = make_recovery_setup(*cfg_.interface, g_, eps_, lambda_, w);
      save(rec, s.G0, "construct/G0.pmcf");
      for (std::size_t j = 0; j < s.bumps.size(); ++j) {
        run_.constants["t0_" + std::to_string(j + 1)] = s.bumps[j].t0;
        run_.constants["tau_B" + std::to_string(j + 1)] = s.bumps[j].tau;
      }
      run_.constants["varsigma"] = s.varsigma;
      return s;
    });
    auto gamma = stage("avoid_peak_path", [&](StageRecord& rec) {
      auto p = avoid_peak_path(setup, cfg_.per_stage);
      for (std::size_t i = 0; i < p.path.size(); ++i) {
        std::ostringstream name;
        name << "construct/gamma_" << std::setw(3) << std::setfill('0') << i << ".pmcf";
        save(rec, p.path.knots[i], name.str());
      }
      return p;
    });
    auto down = stage("path_to_valley", [&](StageRecord& rec) {
      auto p = path_to_valley(setup, cfg_.valley_samples, 1);
      std::size_t written = 0;
      for (std::size_t i = 0; i < p.path.size(); ++i) {
        if (p.stage[i] != "f_r") continue;
        std::ostringstream name;
        name << "construct/f_" << std::setw(3) << std::setfill('0') << written++ << ".pmcf";
        save(rec, p.path.knots[i], name.str());
      }
      return p;
    });
    auto seed = stage("mean_convex_seed", [&](StageRecord& rec) {
      auto s = mean_convex_seed(setup);
      save(rec, s.h, "construct/seed.pmcf");
      run_.constants["seed_convexity"] = s.convexity.min_value;
      run_.constants["seed_threshold"] = s.threshold;
      run_.constants["witness_nodes"] = static_cast<double>(s.witness_count);
      return s;
    });
    auto stable = stage("stable_from_seed", [&](StageRecord& rec) {
      auto r = stable_from_seed(seed, setup, valley_->b, cfg_.tol, 10, cfg_.max_steps);
      save(rec, r.v, "construct/v.pmcf");
      write_trace(rec, r.trace, "construct/trace_v.csv");
      run_.constants["delta"] = r.delta;
      run_.constants["v_monotone"] = r.monotone ? 1.0 : 0.0;
      run_.constants["v_min_increase"] = r.min_increase;
      run_.constants["v_witness_contained"] = r.witness_contained ? 1.0 : 0.0;
      run_.constants["v_equals_b"] = r.equals_b ? 1.0 : 0.0;
      run_.constants["v_morse_index"] = r.spectrum.negative_count;
      return r;
    });
    stage("ledger", [&](StageRecord& rec) {
      std::vector<ScalarField> knots;
      std::vector<std::string> labels;
      for (std::size_t i = down.path.size(); i-- > 0;) {
        knots.push_back(down.path.knots[i]);
        labels.push_back(down.stage[i]);
      }
      for (std::size_t i = 1; i < gamma.path.size(); ++i) {
        knots.push_back(gamma.path.knots[i]);
        labels.push_back(gamma.stage[i]);
      }
      for (const auto& u : stable.snapshots) {
        knots.push_back(u);
        labels.emplace_back("flow:seed->v");
      }
      knots.push_back(stable.v);
      labels.emplace_back("v");
      auto rows = energy_ledger(setup, knots, labels);
      auto f = csv_stream(artifact(rec, "construct/ledger.csv"));
      f << "knot,stage,total_E,total_F,bound,margin\n";
      double worst = 1e300;
      for (const auto& r : rows) {
        f << r.index << ',' << r.stage << ',' << r.total_E << ',' << r.total_F << ',' << r.bound << ',' << r.margin << '\n';
        worst = std::min(worst, r.margin);
      }
      run_.constants["ledger_min_margin"] = worst;
      run_.constants["ledger_bound"] = rows.front().bound;
      run_.constants["ledger_knots"] = static_cast<double>(rows.size());
    });
    auto mult = diagnose(stable.v, "v");
    int worst = 0;
    for (const auto& m : mult) worst = std::max(worst, m.estimate);
    run_.constants["v.max_multiplicity"] = worst;
  }

  void full() {
    MinmaxResult res = minmax();
    auto mult = diagnose(res.saddle, "saddle");
    bool all_even = true;
    for (const auto& m : mult) all_even = all_even && m.estimate % 2 == 0;
    const bool eligible = mult.empty() || all_even;
    run_.notes["construct_eligible"] = eligible ? "yes" : "no";
    const bool go = cfg_.construct == ConstructMode::always ||
                    (cfg_.construct == ConstructMode::automatic && eligible && cfg_.interface);
    run_.notes["construct"] = go ? "run" : eligible ? "skipped: no [interface] section" : "skipped";
    if (go) construct(res.saddle);
  }
};

void write_manifest(RunManifest& m, const fs::path& dir) {
  for (const auto& r : m.runs)
    for (const auto& s : r.stages)
      for (const auto& a : s.artifacts)
        if (!fs::exists(dir / a)) fail(ErrorKind::input, "manifest: artifact " + a + " is missing");
  fs::path tmp = dir / "manifest.json.tmp", out = dir / "manifest.json";
  {
    std::ofstream f(tmp);
    if (!f) fail(ErrorKind::input, "cannot write " + tmp.string());
    f << m.to_json(true);
  }
  fs::rename(tmp, out);
  m.path = out.string();
}

auto eps_label(double eps) -> std::string {
  std::ostringstream s;
  s << "eps_" << eps;
  return s.str();
}

}  // namespace

auto run_experiment(const ExperimentConfig& cfg) -> RunManifest {
  RunManifest m;
  m.config_echo = cfg.echo();
  const fs::path dir = resolve_output_dir(cfg);
  m.output_dir = dir.string();
  fs::create_directories(dir);
  fs::remove(dir / "manifest.json");
  {
    std::ofstream f(dir / "config.ini");
    f << m.config_echo;
  }
  for (double eps : cfg.eps) {
    EpsRun run;
    run.eps = eps;
    run.dir = cfg.eps.size() == 1 ? "." : eps_label(eps);
    fs::create_directories(dir / run.dir);
    m.runs.push_back(run);
    try {
      EpsContext ctx(cfg, m.runs.back(), dir / run.dir);
      ctx.execute();
    } catch (const StageFailure& e) {
      m.failure = RunFailure{e.kind(), eps_label(eps) + "/" + e.stage_name, e.what()};
      break;
    } catch (const Error& e) {
      m.failure = RunFailure{e.kind(), eps_label(eps), e.what()};
      break;
    }
  }
  // Energy band of the saddles across the schedule.
  double lo = 1e300, hi = -1e300;
  for (const auto& r : m.runs) {
    if (auto it = r.constants.find("saddle_E"); it != r.constants.end()) {
      lo = std::min(lo, it->second);
      hi = std::max(hi, it->second);
    }
  }
  if (hi >= lo) {
    m.constants["L"] = lo;
    m.constants["K"] = hi;
  }
  write_manifest(m, dir);
  return m;
}

}  // namespace pmcf
