#pragma once

// Semi-implicit Euler-Maruyama integrator for the Galerkin system.
//
// Per mode with eigenvalue lambda (the same on every field):
//   v'     = [v + dt (R0 - B0(v,v) - eta tau A_r(v) + z) + G1(v) dW1] / (1 + nu lambda dt)
//   phi'   = [phi + dt (-eps^-1 A1 psi'(phi) - B1(v,phi) + S)]        / (1 + eps lambda^2 dt)
//   sigma' = [sigma + dt (-B1(v,sigma) - c sigma h + b w) + G2 dW2]   / (1 + (lambda + b) dt)
// with S = (P sigma - A - alpha u) h(phi) and tau = 1 / (1 + dt ||A_r(v)||)
// when taming is on.  The result is Leray-projected and cut to P_n.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "chcbf/diagnostics.hpp"
#include "chcbf/model.hpp"
#include "chcbf/noise.hpp"
#include "chcbf/operators.hpp"

namespace chcbf {

namespace detail {

inline ScalarField apply_derivative(const ScalarField& phi, const Derivatives& f, int order) {
  auto g = to_physical(phi, Padding::twice);
  for (auto& x : g.values) x = f(x, order);
  return to_spectral(g, phi.basis);
}

inline void divide_modes(const Basis& basis, std::vector<Complex>& c, auto&& divisor) {
  for (std::size_t i = 0; i < c.size(); ++i) c[i] /= divisor(basis.eigenvalue(i));
}

template <class Field>
bool all_finite(const Field& f) {
  if constexpr (std::is_same_v<Field, ScalarField>) {
    for (const auto& c : f.c)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  } else {
    for (int a = 0; a < f.dim(); ++a)
      for (const auto& c : f.c[a])
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  }
  return true;
}

}  // namespace detail

/// Implicit-Euler phi update for a given explicit psi' field.
inline ScalarField phi_update(const SystemState& x, const ScalarField& dpsi, const ScalarField& S, const ModelParams& prm,
                              double dt) {
  auto a1 = fractional_apply(dpsi, 1.0);
  auto rhs = x.phi;
  for (std::size_t i = 0; i < rhs.c.size(); ++i) rhs.c[i] += dt * (-a1.c[i] / prm.epsilon + S.c[i]);
  const auto b1 = advection_b1(x.v, x.phi);
  for (std::size_t i = 0; i < rhs.c.size(); ++i) rhs.c[i] -= dt * b1.c[i];
  detail::divide_modes(*rhs.basis, rhs.c, [&](double lam) { return 1.0 + prm.epsilon * lam * lam * dt; });
  return rhs;
}

/// One step.  `dW1` / `dW2` may be null (noise off).  `check`, when given,
/// receives the phi mean-mode residual and the divergence defect.
inline SystemState step(const SystemState& x, const Model& model, const StepperConfig& cfg, const NoiseDirections& dirs,
                        const WienerIncrement* dW1, const WienerIncrement* dW2, StepCheck* check = nullptr) {
  const auto& prm = model.params;
  const double dt = cfg.dt;
  const auto& basis = x.basis();
  const auto n = cfg.galerkin_n;

  // velocity
  auto drift_v = coupling_R0(x.phi, prm.epsilon);
  drift_v -= convection_b0(x.v, x.v);
  drift_v += model.sources.z;
  if (prm.eta != 0.0) {
    auto ar = forchheimer(x.v, prm.r);
    const double tau = cfg.taming_on(prm.r) ? 1.0 / (1.0 + dt * std::sqrt(norm_sq(ar))) : 1.0;
    ar *= prm.eta * tau;
    drift_v -= ar;
  }
  auto v = x.v;
  drift_v *= dt;
  v += drift_v;
  if (dW1 && !model.noise_v.silent()) v += apply_G(x.v, *dW1, model.noise_v, dirs.v);
  for (int a = 0; a < v.dim(); ++a)
    detail::divide_modes(*basis, v.c[a], [&](double lam) { return 1.0 + prm.nu * lam * dt; });
  v = galerkin_truncate(leray_project(std::move(v)), n);

  // phase field
  const double u = model.sources.u.at(x.time);
  const auto S = galerkin_truncate(phi_source(x.phi, x.sigma, u, prm, model.proliferation), n);
  auto phi = phi_update(x, galerkin_truncate(potential_derivative(x.phi, model.potential), n), S, prm, dt);
  if (cfg.convex_splitting) {
    auto dpsi = detail::apply_derivative(phi, model.potential.psi1, 1);
    dpsi += detail::apply_derivative(x.phi, model.potential.psi2, 1);
    phi = phi_update(x, galerkin_truncate(std::move(dpsi), n), S, prm, dt);
  }
  phi = galerkin_truncate(std::move(phi), n);

  // nutrient
  auto sigma = x.sigma;
  {
    const auto b1 = advection_b1(x.v, x.sigma);
    const auto cons = consumption(x.sigma, x.phi, model.proliferation);
    const auto& w = model.sources.w;
    for (std::size_t i = 0; i < sigma.c.size(); ++i) sigma.c[i] += dt * (-b1.c[i] - prm.c * cons.c[i] + prm.b * w.c[i]);
  }
  if (dW2 && !model.noise_s.silent()) sigma += apply_G(x.sigma, *dW2, model.noise_s, dirs.s);
  detail::divide_modes(*basis, sigma.c, [&](double lam) { return 1.0 + (lam + prm.b) * dt; });
  sigma = galerkin_truncate(std::move(sigma), n);

  SystemState out{std::move(v), std::move(phi), std::move(sigma), x.time + dt};
  if (!detail::all_finite(out.v) || !detail::all_finite(out.phi) || !detail::all_finite(out.sigma))
    throw BlowUpError(out.time, "non-finite coefficient", TrajectoryLog{});
  if (check) {
    check->time = out.time;
    check->phi_mean_residual = std::abs(out.phi.c[0].real() - x.phi.c[0].real() - dt * S.c[0].real());
    check->divergence = divergence_defect(out.v);
  }
  return out;
}

/// Left-rule update of the stopping-time monitor with the state at the
/// left end of an interval of length dt.
inline void monitor_update(StopMonitor& mon, const SystemState& x, const ModelParams& prm, double dt) {
  mon.running_sup = std::max(mon.running_sup, v_norm_sq(x));
  if (!mon.triggered_at && mon.quantity() > mon.threshold) mon.triggered_at = x.time;
  mon.running_integral += dt * monitor_integrand(x, prm);
}

/// Aliasing and scope warnings for a model, issued once per run.
inline std::vector<std::string> aliasing_warnings(const Model& model) {
  std::vector<std::string> out;
  if (model.params.eta != 0.0 && !forchheimer_alias_free(model.params.r))
    out.push_back("forchheimer: |v|^(r-1) v with r=" + std::to_string(model.params.r) +
                  " is not a cubic polynomial; 2N-grid evaluation carries residual aliasing");
  out.push_back("proliferation: h(" + model.proliferation.name + ") is not polynomial; 2N-grid evaluation carries residual aliasing");
  return out;
}

struct RunOptions {
  double T = 1.0;
  NoiseStream stream{};
  std::size_t snapshot_every = 0;  // 0: keep initial and final state only
  double M = 1e3;
  bool stop_on_trigger = true;
};

inline std::size_t step_count(double T, double dt) {
  if (!(T >= 0.0) || !(dt > 0.0)) throw UsageError("run: need T >= 0 and dt > 0");
  const double q = T / dt;
  const auto n = std::size_t(std::llround(q));
  if (std::abs(q - double(n)) > 1e-9 * std::max(1.0, q)) throw UsageError("run: T is not a multiple of dt");
  return n;
}

inline TrajectoryLog run(const SystemState& init, const Model& model, const StepperConfig& cfg, const RunOptions& opt) {
  const std::size_t steps = step_count(opt.T, cfg.dt);
  const auto& basis = init.basis();
  const auto dirs = NoiseDirections::make(*basis, model, cfg.galerkin_n);
  TrajectoryLog log;
  log.dt = cfg.dt;
  log.snapshot_every = opt.snapshot_every;
  log.warnings = aliasing_warnings(model);
  log.monitor = StopMonitor::make(opt.M, std::sqrt(v_norm_sq(init)));

  auto record = [&](const SystemState& x, StepCheck check) {
    log.times.push_back(x.time);
    auto e = energy(x, model, cfg.galerkin_n, &dirs);
    check.time = x.time;
    check.mean_mu_residual = mean_mu_check(x.phi, model.potential, model.params.epsilon).residual;
    log.records.push_back(e);
    log.checks.push_back(check);
    if (!e.finite()) throw BlowUpError(x.time, "non-finite energy", std::move(log));
  };

  SystemState x = init;
  x.time = 0.0;
  record(x, StepCheck{0.0, 0.0, 0.0, divergence_defect(x.v)});
  log.snapshots.push_back(x);
  const bool noisy_v = !model.noise_v.silent(), noisy_s = !model.noise_s.silent();
  for (std::size_t n = 0; n < steps; ++n) {
    monitor_update(log.monitor, x, model.params, cfg.dt);
    if (log.monitor.triggered_at) {
      if (log.events.empty())
        log.events.push_back(MonitorEvent{x.time, log.monitor.quantity(), "stopping-time monitor triggered"});
      if (opt.stop_on_trigger) break;
    }
    WienerIncrement w1, w2;
    if (noisy_v) w1 = sample_increment(opt.stream, n, cfg.dt, Channel::velocity, dirs.v);
    if (noisy_s) w2 = sample_increment(opt.stream, n, cfg.dt, Channel::nutrient, dirs.s);
    StepCheck check;
    try {
      x = step(x, model, cfg, dirs, noisy_v ? &w1 : nullptr, noisy_s ? &w2 : nullptr, &check);
    } catch (const BlowUpError& e) {
      log.last = x;
      throw BlowUpError(e.time(), "non-finite coefficient", std::move(log));
    }
    x.time = double(n + 1) * cfg.dt;
    record(x, check);
    if (opt.snapshot_every > 0 && (n + 1) % opt.snapshot_every == 0) log.snapshots.push_back(x);
  }
  if (!log.monitor.triggered_at || !opt.stop_on_trigger) {
    monitor_update(log.monitor, x, model.params, 0.0);
    if (log.monitor.triggered_at && log.events.empty())
      log.events.push_back(MonitorEvent{x.time, log.monitor.quantity(), "stopping-time monitor triggered"});
  }
  if (opt.snapshot_every == 0 && steps > 0 && log.snapshots.back().time != x.time) log.snapshots.push_back(x);
  log.last = x;
  log.completed = !log.monitor.triggered_at || !opt.stop_on_trigger;
  return log;
}

// ---------------------------------------------------------------------------
// Snapshots
//
// "CHCBFSNP", u32 version, u32 dim, u32 N, f64 L, f64 time, u32 field
// count, then per field u32 name length, name bytes, u32 components.  After
// the header, each component's coefficients follow as (re, im) f64 pairs in
// lexicographic wavevector order.  All numbers little-endian.

namespace detail {

inline std::vector<std::size_t> lexicographic_order(const Basis& basis) {
  std::vector<std::size_t> order(basis.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return basis.wavevector(a) < basis.wavevector(b); });
  return order;
}

template <class T>
void put(std::ostream& os, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <class T>
T get(std::istream& is) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), sizeof(T))) throw ValidationError("snapshot: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace detail

inline constexpr char snapshot_magic[8] = {'C', 'H', 'C', 'B', 'F', 'S', 'N', 'P'};
inline constexpr std::uint32_t snapshot_version = 1;

inline void write_snapshot(std::ostream& os, const SystemState& x) {
  const auto& basis = *x.basis();
  os.write(snapshot_magic, 8);
  detail::put<std::uint32_t>(os, snapshot_version);
  detail::put<std::uint32_t>(os, std::uint32_t(basis.dim()));
  detail::put<std::uint32_t>(os, std::uint32_t(basis.modes()));
  detail::put<double>(os, basis.side_length());
  detail::put<double>(os, x.time);
  const std::pair<std::string, int> fields[] = {{"v", basis.dim()}, {"phi", 1}, {"sigma", 1}};
  detail::put<std::uint32_t>(os, 3);
  for (const auto& [name, comps] : fields) {
    detail::put<std::uint32_t>(os, std::uint32_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    detail::put<std::uint32_t>(os, std::uint32_t(comps));
  }
  const auto order = detail::lexicographic_order(basis);
  auto emit = [&](const std::vector<Complex>& c) {
    for (std::size_t i : order) {
      detail::put<double>(os, c[i].real());
      detail::put<double>(os, c[i].imag());
    }
  };
  for (int a = 0; a < basis.dim(); ++a) emit(x.v.c[a]);
  emit(x.phi.c);
  emit(x.sigma.c);
}

inline SystemState read_snapshot(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, snapshot_magic, 8) != 0) throw ValidationError("snapshot: bad magic");
  if (detail::get<std::uint32_t>(is) != snapshot_version) throw ValidationError("snapshot: unsupported version");
  DomainSpec dom;
  dom.dim = int(detail::get<std::uint32_t>(is));
  dom.modes_per_axis = int(detail::get<std::uint32_t>(is));
  dom.side_length = detail::get<double>(is);
  const double time = detail::get<double>(is);
  dom.validate();
  const auto nfields = detail::get<std::uint32_t>(is);
  std::vector<std::pair<std::string, int>> fields;
  for (std::uint32_t f = 0; f < nfields; ++f) {
    const auto len = detail::get<std::uint32_t>(is);
    if (len > 64) throw ValidationError("snapshot: field name too long");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw ValidationError("snapshot: truncated input");
    fields.emplace_back(name, int(detail::get<std::uint32_t>(is)));
  }
  if (fields.size() != 3 || fields[0] != std::pair<std::string, int>{"v", dom.dim} || fields[1].first != "phi" ||
      fields[2].first != "sigma")
    throw ValidationError("snapshot: unexpected field list");
  auto basis = Basis::make(dom);
  auto x = SystemState::zeros(basis);
  x.time = time;
  const auto order = detail::lexicographic_order(*basis);
  auto absorb = [&](std::vector<Complex>& c) {
    for (std::size_t i : order) {
      const double re = detail::get<double>(is);
      const double im = detail::get<double>(is);
      c[i] = Complex(re, im);
    }
  };
  for (int a = 0; a < dom.dim; ++a) absorb(x.v.c[a]);
  absorb(x.phi.c);
  absorb(x.sigma.c);
  return x;
}

inline void write_snapshot(const std::string& path, const SystemState& x) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("snapshot: cannot open " + path);
  write_snapshot(os, x);
}
inline SystemState read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("snapshot: cannot open " + path);
  return read_snapshot(is);
}

}  // namespace chcbf
