#pragma once

// Experiment drivers behind the CLI subcommands.  Each returns an
// ExperimentReport; trajectories fan out over a small worker pool whose size
// is capped by CHCBF_THREADS.  Results are aggregated by trajectory index, so
// reports do not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "chcbf/config.hpp"
#include "chcbf/diagnostics.hpp"
#include "chcbf/random_fields.hpp"
#include "chcbf/stepper.hpp"

namespace chcbf {

using Json = nlohmann::ordered_json;

struct Verdict {
  std::string name;
  bool passed = false;
  bool hard = true;  // soft verdicts are reported but do not fail the run
  std::string detail;
};

struct ExperimentReport {
  std::string id;
  std::string config_hash;
  std::string version = code_version;
  Json metrics = Json::object();
  std::vector<Verdict> verdicts;
  std::vector<std::string> warnings;
  double runtime_s = 0.0;

  bool passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed || !v.hard; });
  }
  void verdict(std::string name, bool ok, std::string detail = {}, bool hard = true) {
    verdicts.push_back(Verdict{std::move(name), ok, hard, std::move(detail)});
  }

  Json to_json() const {
    Json j;
    j["experiment"] = id;
    j["config_hash"] = config_hash;
    j["code_version"] = version;
    j["passed"] = passed();
    j["runtime_s"] = runtime_s;
    j["warnings"] = warnings;
    Json vs = Json::array();
    for (const auto& v : verdicts) vs.push_back({{"name", v.name}, {"passed", v.passed}, {"hard", v.hard}, {"detail", v.detail}});
    j["verdicts"] = vs;
    j["metrics"] = metrics;
    return j;
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / ("report_" + id + ".json"));
    os << to_json().dump(2) << "\n";
  }
};

// ---------------------------------------------------------------------------
// Worker pool

inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHCBF_THREADS")) {
    unsigned cap = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (ec == std::errc{} && ptr == s.data() + s.size() && cap > 0) n = std::min(n, cap);
  }
  return unsigned(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Run f(i) for i in [0, n).  The first exception, by index, is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    const unsigned w = worker_count(n);
    for (unsigned t = 0; t < w; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline void write_energy_csv(const std::filesystem::path& path, const TrajectoryLog& log) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream os(path);
  const auto head = EnergyRecord::csv_header();
  for (std::size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << head[i];
  os << "\n";
  for (const auto& r : log.records) {
    const auto row = r.csv_row();
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
}

inline void write_snapshots(const std::filesystem::path& dir, const TrajectoryLog& log) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < log.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%06zu.bin", i);
    write_snapshot((dir / name).string(), log.snapshots[i]);
  }
}

namespace detail {

inline RunOptions run_options(const RunConfig& cfg, std::uint64_t trajectory = 0) {
  RunOptions opt;
  opt.T = cfg.T;
  opt.stream = NoiseStream{cfg.experiment.seed, trajectory};
  opt.snapshot_every = cfg.snapshot_interval;
  opt.M = cfg.M;
  return opt;
}

inline BasisPtr basis_of(const RunConfig& cfg, std::optional<int> modes = {}) {
  auto d = cfg.domain;
  if (modes) d.modes_per_axis = *modes;
  try {
    d.validate();
  } catch (const ValidationError& e) {
    throw ConfigError("experiment.modes", e.what());
  }
  return Basis::make(d);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline ExperimentReport start(const char* id, const RunConfig& cfg) {
  ExperimentReport r;
  r.id = id;
  r.config_hash = cfg.hash;
  r.warnings = cfg.warnings;
  return r;
}

/// int (nu |grad v|^2 + eta |v|^(r+1) + |grad mu|^2 + |grad sigma|^2) dt, left rule.
inline double integrated_dissipation(const TrajectoryLog& log) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < log.records.size(); ++i) {
    const auto& r = log.records[i];
    s += (log.records[i + 1].time - r.time) * (r.diss_viscous + r.diss_forchheimer + r.diss_mu + r.diss_sigma);
  }
  return s;
}

inline double sup_E_tot(const TrajectoryLog& log) {
  double s = 0.0;
  for (const auto& r : log.records) s = std::max(s, r.E_tot);
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate

/// One trajectory; writes energy.csv, snapshots/ and the report into `out`.
/// A blow-up writes the partial artifacts and rethrows.
inline ExperimentReport simulate(const RunConfig& cfg, const std::filesystem::path& out, const SystemState* init = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = detail::start("simulate", cfg);
  const auto basis = detail::basis_of(cfg);
  require_A2(cfg, *basis);
  const auto model = model_on(cfg, basis);
  const auto x0 = init ? *init : initial_state(cfg, basis);
  TrajectoryLog log;
  try {
    log = run(x0, model, cfg.stepper, detail::run_options(cfg));
  } catch (const BlowUpError& e) {
    write_energy_csv(out / "energy.csv", e.log());
    write_snapshots(out / "snapshots", e.log());
    if (e.log().last) write_snapshot((out / "last_good.bin").string(), *e.log().last);
    throw;
  }
  write_energy_csv(out / "energy.csv", log);
  write_snapshots(out / "snapshots", log);
  for (const auto& w : log.warnings) rep.warnings.push_back(w);
  rep.metrics["steps"] = log.records.size() - 1;
  rep.metrics["final_time"] = log.times.back();
  rep.metrics["E_tot_initial"] = log.records.front().E_tot;
  rep.metrics["E_tot_final"] = log.records.back().E_tot;
  rep.metrics["sup_E_tot"] = detail::sup_E_tot(log);
  rep.metrics["monitor_quantity"] = log.monitor.quantity();
  rep.metrics["monitor_threshold"] = log.monitor.threshold;
  if (log.monitor.triggered_at) rep.metrics["monitor_triggered_at"] = *log.monitor.triggered_at;
  double mu_res = 0.0, mean_res = 0.0, div = 0.0;
  for (const auto& c : log.checks) {
    mu_res = std::max(mu_res, c.mean_mu_residual);
    mean_res = std::max(mean_res, c.phi_mean_residual);
    div = std::max(div, c.divergence);
  }
  rep.metrics["max_mean_mu_residual"] = mu_res;
  rep.metrics["max_phi_mean_residual"] = mean_res;
  rep.metrics["max_divergence"] = div;
  rep.verdict("mean-mu identity", mu_res <= 1e-10, format_double(mu_res));
  rep.verdict("phi mean-mode balance", mean_res <= 1e-10, format_double(mean_res));
  rep.verdict("divergence-free", div <= 1e-12, format_double(div));
  rep.verdict("monitor not triggered", !log.monitor.triggered_at, "", false);
  rep.runtime_s = detail::seconds_since(t0);
  rep.write(out);
  return rep;
}

// ---------------------------------------------------------------------------
// verify-operators

/// Identity suite over random fields on the configured domain.
inline ExperimentReport verify_operators(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = detail::start("verify-operators", cfg);
  const auto b = detail::basis_of(cfg);
  std::mt19937_64 rng(cfg.experiment.seed);
  const std::size_t n = cfg.experiment.operator_samples;
  double b0v = 0, b0a = 0, b1v = 0, b1a = 0, dual = 0, leray = 0, mono = 0;
  std::map<double, double> pairing;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = random_divfree(b, rng), v = random_vector(b, rng), xi = random_vector(b, rng);
    const auto phi = random_scalar(b, rng), theta = random_scalar(b, rng);
    b0v = std::max(b0v, b0_form(y, v, v).relative());
    const auto f1 = b0_form(y, v, xi), f2 = b0_form(y, xi, v);
    b0a = std::max(b0a, std::abs(f1.value + f2.value) / std::max(f1.scale, f2.scale));
    b1v = std::max(b1v, b1_form(y, phi, phi).relative());
    const auto g1 = b1_form(y, phi, theta), g2 = b1_form(y, theta, phi);
    b1a = std::max(b1a, std::abs(g1.value + g2.value) / std::max(g1.scale, g2.scale));
    const auto a1 = fractional_apply(phi, 1.0);
    const auto d = b1_form(y, phi, a1);
    dual = std::max(dual, std::abs(inner(coupling_R0(phi, 1.0), y) - d.value) / d.scale);
    leray = std::max(leray, divergence_defect(leray_project(v)));
    for (double r : {1.0, 2.0, 3.0, 3.5}) {
      const double q = lebesgue_norm_pow(y, r);
      pairing[r] = std::max(pairing[r], std::abs(inner(forchheimer(y, r), y) - q) / q);
    }
    const auto y2 = random_divfree(b, rng);
    for (double r : {1.0, 2.0, 3.0, 4.0}) {
      const double lhs = inner(forchheimer(y, r) - forchheimer(y2, r), y - y2);
      mono = std::max(mono, -lhs);
    }
  }
  auto check = [&](const char* name, double value, double tol) {
    rep.metrics[name] = value;
    rep.verdict(name, value <= tol, format_double(value) + " <= " + format_double(tol));
  };
  check("b0(y,v,v)", b0v, 1e-10);
  check("b0 antisymmetry", b0a, 1e-10);
  check("b1(v,phi,phi)", b1v, 1e-10);
  check("b1 antisymmetry", b1a, 1e-10);
  check("R0/B1 duality", dual, 1e-10);
  check("Leray divergence", leray, 1e-12);
  for (const auto& [r, e] : pairing) check(("forchheimer pairing r=" + format_double(r)).c_str(), e, 1e-8);
  check("forchheimer monotone (negated min)", mono, 1e-10);
  const auto pot = validate_assumptions(cfg.model.potential, default_potential_samples());
  rep.verdict("potential assumptions", pot.passed(), pot.summary());
  const auto h = validate_proliferation(cfg.model.proliferation, default_potential_samples());
  rep.verdict("proliferation assumptions", h.passed(), h.summary());
  for (const auto* spec : {&cfg.model.noise_v, &cfg.model.noise_s}) {
    const auto a2 = validate_A2(*b, *spec, cfg.stepper.galerkin_n);
    rep.verdict(std::string("A2 ") + channel_name(spec->channel), a2.passed, a2.summary());
  }
  rep.metrics["samples"] = n;
  rep.runtime_s = detail::seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// uniqueness

struct UniquenessResult {
  bool identical = false;    // delta = 0 rerun bitwise equal
  double initial_distance = 0.0;
  HDistance distance;
  double growth = 0.0;       // final / initial H distance
};

struct PerturbFields {
  bool v = true;
  bool phi = true;
  bool sigma = true;
};

/// delta cos(k.x) added along the lowest mode k of the selected fields
/// (first polarization for v).
inline SystemState perturb(const SystemState& x, double delta, PerturbFields which = {}) {
  auto y = x;
  const auto& b = *x.basis();
  const std::size_t kv = b.velocity_ranks().front();
  const auto pol = polarizations(b.wavevector(kv), b.dim()).front();
  const std::size_t kc = b.conj_index(kv);
  if (which.v)
    for (int a = 0; a < b.dim(); ++a) {
      y.v.c[a][kv] += 0.5 * delta * pol[a];
      y.v.c[a][kc] += 0.5 * delta * pol[a];
    }
  for (auto [f, on] : {std::pair{&y.phi, which.phi}, std::pair{&y.sigma, which.sigma}}) {
    if (!on) continue;
    f->c[kv] += 0.5 * delta;
    f->c[kc] += 0.5 * delta;
  }
  return y;
}

inline UniquenessResult uniqueness_pair(const RunConfig& cfg, const SystemState& x0, double delta, PerturbFields which = {}) {
  const auto basis = x0.basis();
  const auto model = model_on(cfg, basis);
  auto opt = detail::run_options(cfg);
  opt.snapshot_every = 1;
  opt.stop_on_trigger = false;
  const auto a = run(x0, model, cfg.stepper, opt);
  const auto a2 = run(x0, model, cfg.stepper, opt);
  UniquenessResult out;
  out.identical = a.records.size() == a2.records.size();
  for (std::size_t i = 0; out.identical && i < a.snapshots.size(); ++i) {
    const auto& s = a.snapshots[i];
    const auto& t = a2.snapshots[i];
    auto same = [](const std::vector<Complex>& p, const std::vector<Complex>& q) {
      return std::memcmp(p.data(), q.data(), p.size() * sizeof(Complex)) == 0;
    };
    for (int d = 0; d < s.v.dim(); ++d) out.identical = out.identical && same(s.v.c[d], t.v.c[d]);
    out.identical = out.identical && same(s.phi.c, t.phi.c) && same(s.sigma.c, t.sigma.c);
  }
  const auto x1 = perturb(x0, delta, which);
  out.initial_distance = std::sqrt(h_norm_sq(difference(x1, x0)));
  const auto c = run(x1, model, cfg.stepper, opt);
  out.distance = h_distance(a, c);
  out.growth = out.initial_distance > 0.0 ? out.distance.final / out.initial_distance : 0.0;
  return out;
}

inline ExperimentReport uniqueness(const RunConfig& cfg, const SystemState* init = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = detail::start("uniqueness", cfg);
  const auto basis = detail::basis_of(cfg);
  require_A2(cfg, *basis);
  const auto x0 = init ? *init : initial_state(cfg, basis);
  const auto res = uniqueness_pair(cfg, x0, cfg.experiment.delta);
  rep.metrics["delta"] = cfg.experiment.delta;
  rep.metrics["initial_H_distance"] = res.initial_distance;
  rep.metrics["sup_H_distance"] = res.distance.sup;
  rep.metrics["final_H_distance"] = res.distance.final;
  rep.metrics["growth_factor"] = res.growth;
  rep.verdict("same seed and data give bitwise-identical trajectories", res.identical);
  rep.verdict("final H distance <= 1e-3", res.distance.final <= 1e-3, format_double(res.distance.final));
  rep.runtime_s = detail::seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// galerkin-convergence

struct ConvergenceTable {
  std::vector<int> modes;
  std::vector<TrajectoryLog> logs;
  std::vector<GalerkinDistance> consecutive;  // (modes[i], modes[i+1])
  std::vector<GalerkinDistance> to_finest;    // (modes[i], modes.back())
  bool strictly_decreasing = true;            // consecutive sup-V distances
};

/// Runs at every resolution share the Wiener path (directions are keyed by
/// wavevector) and the initial data (restricted from the finest basis).
inline ConvergenceTable galerkin_table(const RunConfig& cfg, std::vector<int> modes, const SystemState* init = nullptr) {
  if (modes.empty()) throw ConfigError("experiment.modes", "need at least one resolution");
  ConvergenceTable t;
  t.modes = modes;
  t.logs.resize(modes.size());
  const auto finest = detail::basis_of(cfg, modes.back());
  const auto x_fine = init ? embed(*init, finest) : initial_state(cfg, finest);
  for (int m : modes) require_A2(cfg, *detail::basis_of(cfg, m));
  parallel_for(modes.size(), [&](std::size_t i) {
    const auto b = detail::basis_of(cfg, modes[i]);
    auto opt = detail::run_options(cfg);
    opt.stop_on_trigger = false;
    opt.snapshot_every = cfg.snapshot_interval ? cfg.snapshot_interval : 1;
    auto sc = cfg.stepper;
    sc.galerkin_n.reset();
    t.logs[i] = run(embed(x_fine, b), model_on(cfg, b), sc, opt);
  });
  for (std::size_t i = 0; i + 1 < modes.size(); ++i) {
    t.consecutive.push_back(galerkin_distance(t.logs[i], t.logs[i + 1]));
    t.to_finest.push_back(galerkin_distance(t.logs[i], t.logs.back()));
  }
  for (std::size_t i = 0; i + 1 < t.consecutive.size(); ++i)
    t.strictly_decreasing = t.strictly_decreasing && t.consecutive[i + 1].sup_v < t.consecutive[i].sup_v;
  return t;
}

inline ExperimentReport galerkin_convergence(const RunConfig& cfg, const SystemState* init = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = detail::start("galerkin-convergence", cfg);
  auto modes = cfg.experiment.modes;
  if (modes.empty()) modes = {16, 32, 64};
  const auto t = galerkin_table(cfg, modes, init);
  Json rows = Json::array();
  for (std::size_t i = 0; i < t.consecutive.size(); ++i)
    rows.push_back({{"n", modes[i]},
                    {"m", modes[i + 1]},
                    {"sup_V", t.consecutive[i].sup_v},
                    {"int_Z", t.consecutive[i].integral_z},
                    {"sup_V_to_finest", t.to_finest[i].sup_v}});
  rep.metrics["distances"] = rows;
  Json mon = Json::array();
  for (std::size_t i = 0; i < modes.size(); ++i)
    mon.push_back({{"modes", modes[i]},
                   {"sup_V2", t.logs[i].monitor.running_sup},
                   {"int_Z", t.logs[i].monitor.running_integral},
                   {"threshold", t.logs[i].monitor.threshold}});
  rep.metrics["monitor"] = mon;
  rep.verdict("sup-V distances strictly decreasing (empirical corroboration)", t.strictly_decreasing, "", false);
  rep.runtime_s = detail::seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// ensemble-moments

struct PathSummary {
  double sup_E_tot = 0.0;
  double final_E_tot = 0.0;
  double dissipation = 0.0;
  bool blew_up = false;
  double blow_up_time = 0.0;
};

struct MomentEstimate {
  double p = 2.0;
  double half = 0.0;      // first half of the paths
  double full = 0.0;      // all paths
  double change = 0.0;    // |full - half| / full
  double dissipation = 0.0;
};

inline std::vector<PathSummary> ensemble_paths(const RunConfig& cfg, std::size_t paths, const SystemState* init = nullptr) {
  const auto basis = detail::basis_of(cfg);
  require_A2(cfg, *basis);
  const auto model = model_on(cfg, basis);
  const auto x0 = init ? *init : initial_state(cfg, basis);
  std::vector<PathSummary> out(paths);
  parallel_for(paths, [&](std::size_t i) {
    auto opt = detail::run_options(cfg, i);
    opt.stop_on_trigger = false;
    try {
      const auto log = run(x0, model, cfg.stepper, opt);
      out[i].sup_E_tot = detail::sup_E_tot(log);
      out[i].final_E_tot = log.records.back().E_tot;
      out[i].dissipation = detail::integrated_dissipation(log);
    } catch (const BlowUpError& e) {
      out[i].blew_up = true;
      out[i].blow_up_time = e.time();
      out[i].sup_E_tot = std::numeric_limits<double>::infinity();
    }
  });
  return out;
}

inline MomentEstimate moment_estimate(const std::vector<PathSummary>& paths, double p) {
  MomentEstimate m;
  m.p = p;
  const std::size_t half = paths.size() / 2;
  double s_half = 0.0, s_full = 0.0, d = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const double v = std::pow(paths[i].sup_E_tot, 0.5 * p);
    s_full += v;
    if (i < half) s_half += v;
    d += std::pow(paths[i].dissipation, 0.5 * p);
  }
  m.full = s_full / double(paths.size());
  m.half = s_half / double(half);
  m.change = std::abs(m.full - m.half) / m.full;
  m.dissipation = d / double(paths.size());
  return m;
}

inline ExperimentReport ensemble_moments(const RunConfig& cfg, const SystemState* init = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = detail::start("ensemble-moments", cfg);
  const auto paths = ensemble_paths(cfg, cfg.experiment.paths, init);
  std::size_t blown = 0;
  for (const auto& p : paths) blown += p.blew_up;
  rep.metrics["paths"] = paths.size();
  rep.metrics["blow_ups"] = blown;
  rep.verdict("no path blew up", blown == 0, std::to_string(blown));
  Json est = Json::array();
  for (double p : cfg.experiment.p_list) {
    const auto m = moment_estimate(paths, p);
    est.push_back({{"p", p},
                   {"E_sup_Etot_p2_half", m.half},
                   {"E_sup_Etot_p2_full", m.full},
                   {"relative_change", m.change},
                   {"E_dissipation_p2", m.dissipation}});
    rep.verdict("p=" + format_double(p) + " stable under path doubling (<= 20%)", std::isfinite(m.full) && m.change <= 0.2,
                format_double(m.change));
  }
  rep.metrics["estimates"] = est;
  rep.runtime_s = detail::seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// soak-2d

struct SoakRun {
  double r = 2.0;
  bool completed = false;
  bool blew_up = false;
  bool finite = true;
  bool triggered = false;
  double sup_E_tot = 0.0;
  double E_tot_initial = 0.0;
  double monitor_quantity = 0.0;
  double monitor_threshold = 0.0;
  std::string failure;
  TrajectoryLog tail;  // partial log on blow-up
};

inline std::vector<SoakRun> soak_runs(const RunConfig& cfg, const SystemState* init = nullptr) {
  if (cfg.domain.dim != 2) throw ConfigError("domain.dim", "soak-2d needs dim = 2");
  const auto basis = detail::basis_of(cfg);
  require_A2(cfg, *basis);
  const auto x0 = init ? *init : initial_state(cfg, basis);
  const auto& rs = cfg.experiment.r_list;
  std::vector<SoakRun> out(rs.size());
  parallel_for(rs.size(), [&](std::size_t i) {
    auto& s = out[i];
    s.r = rs[i];
    auto opt = detail::run_options(cfg);
    opt.stop_on_trigger = false;
    try {
      const auto log = run(x0, model_on(cfg, basis, rs[i]), cfg.stepper, opt);
      s.completed = true;
      for (const auto& r : log.records) s.finite = s.finite && r.finite();
      s.sup_E_tot = detail::sup_E_tot(log);
      s.E_tot_initial = log.records.front().E_tot;
      s.triggered = log.monitor.triggered_at.has_value();
      s.monitor_quantity = log.monitor.quantity();
      s.monitor_threshold = log.monitor.threshold;
    } catch (const BlowUpError& e) {
      s.blew_up = true;
      s.finite = false;
      s.failure = e.what();
      s.tail = e.log();
    }
  });
  return out;
}

inline ExperimentReport soak_2d(const RunConfig& cfg, const std::filesystem::path& out, const SystemState* init = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = detail::start("soak-2d", cfg);
  const auto runs = soak_runs(cfg, init);
  Json rows = Json::array();
  for (const auto& s : runs) {
    rows.push_back({{"r", s.r},
                    {"completed", s.completed},
                    {"finite", s.finite},
                    {"monitor_triggered", s.triggered},
                    {"sup_E_tot", s.sup_E_tot},
                    {"E_tot_initial", s.E_tot_initial},
                    {"monitor_quantity", s.monitor_quantity},
                    {"monitor_threshold", s.monitor_threshold},
                    {"failure", s.failure}});
    const bool in_theory = s.r <= 3.0;
    const std::string tag = "r=" + format_double(s.r);
    if (!in_theory) rep.warnings.push_back(tag + " lies outside the global-existence range r in [1, 3]; informational only");
    rep.verdict(tag + " completes with finite E_tot", s.completed && s.finite, s.failure, in_theory);
    rep.verdict(tag + " monitor never triggered", !s.triggered, format_double(s.monitor_quantity), in_theory);
    if (s.blew_up) write_energy_csv(out / ("soak_tail_r" + format_double(s.r) + ".csv"), s.tail);
  }
  rep.metrics["runs"] = rows;
  rep.runtime_s = detail::seconds_since(t0);
  return rep;
}

}  // namespace chcbf
