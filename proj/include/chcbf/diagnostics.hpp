#pragma once

// Energies, norms and trajectory identities.
//
// Norm conventions: H^s(f)^2 = |f|^2 + |A^(s/2) f|^2 for scalars;
//   V(X)^2 = ||A0^(1/2) v||^2 + ||phi||^2_H2 + ||sigma||^2_H1
//   Z(X)^2 = ||A0 v||^2 + ||phi||^2_H4 + ||sigma||^2_H2
//   H(X)^2 = ||v||^2 + ||phi||^2_H1 + ||sigma||^2

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "chcbf/model.hpp"
#include "chcbf/operators.hpp"
#include "chcbf/transforms.hpp"

namespace chcbf {

inline double v_norm_sq(const SystemState& x) {
  return frac_norm_sq(x.v, 0.5) + sobolev_norm_sq(x.phi, 2.0) + sobolev_norm_sq(x.sigma, 1.0);
}
inline double z_norm_sq(const SystemState& x) {
  return frac_norm_sq(x.v, 1.0) + sobolev_norm_sq(x.phi, 4.0) + sobolev_norm_sq(x.sigma, 2.0);
}
inline double h_norm_sq(const SystemState& x) { return norm_sq(x.v) + sobolev_norm_sq(x.phi, 1.0) + norm_sq(x.sigma); }

/// Integrand of the stopping-time monitor: nu ||A0 v||^2 + eps ||phi||^2_H4 + ||sigma||^2_H2.
inline double monitor_integrand(const SystemState& x, const ModelParams& prm) {
  return prm.nu * frac_norm_sq(x.v, 1.0) + prm.epsilon * sobolev_norm_sq(x.phi, 4.0) + sobolev_norm_sq(x.sigma, 2.0);
}

inline SystemState difference(const SystemState& a, const SystemState& b) {
  return SystemState{a.v - b.v, a.phi - b.phi, a.sigma - b.sigma, a.time};
}

inline SystemState embed(const SystemState& x, const BasisPtr& target) {
  return SystemState{embed(x.v, target), embed(x.phi, target), embed(x.sigma, target), x.time};
}

/// int psi(phi) by quadrature on the 2N grid.
inline double potential_integral(const ScalarField& phi, const PotentialSpec& potential) {
  auto g = to_physical(phi, Padding::twice);
  for (auto& x : g.values) x = potential.psi(x, 0);
  return g.integral();
}

inline ScalarField galerkin_truncate(ScalarField f, std::optional<std::size_t> n) { return n ? project_low(std::move(f), *n) : f; }
inline VectorField galerkin_truncate(VectorField v, std::optional<std::size_t> n) { return n ? project_low(std::move(v), *n) : v; }

/// Energy terms of `x`.  Nonlinear pairings are formed from the same
/// truncated operators the stepper uses, so that the discrete balance is
/// consistent with the scheme.
inline EnergyRecord energy(const SystemState& x, const Model& model, std::optional<std::size_t> galerkin_n = {},
                           const NoiseDirections* dirs = nullptr) {
  const auto& prm = model.params;
  const double eps = prm.epsilon;
  EnergyRecord e;
  e.time = x.time;
  e.kinetic = 0.5 * norm_sq(x.v);
  e.grad_phi = 0.5 * eps * frac_norm_sq(x.phi, 0.5);
  e.potential = potential_integral(x.phi, model.potential) / eps;
  e.nutrient = 0.5 * norm_sq(x.sigma);
  e.E = e.kinetic + e.grad_phi + e.potential + e.nutrient;
  e.E_tot = eps * norm_sq(x.phi) + 2.0 * e.E;

  e.diss_forchheimer = prm.eta * lebesgue_norm_pow(x.v, prm.r);
  e.diss_viscous = prm.nu * frac_norm_sq(x.v, 0.5);

  const auto dpsi = galerkin_truncate(potential_derivative(x.phi, model.potential), galerkin_n);
  auto mu = fractional_apply(x.phi, 1.0);
  mu *= eps;
  mu += (1.0 / eps) * dpsi;
  e.diss_mu = frac_norm_sq(mu, 0.5);
  e.cross_mu_phi = eps * inner(mu, fractional_apply(x.phi, 1.0));

  const double u = model.sources.u.at(x.time);
  const auto S = galerkin_truncate(phi_source(x.phi, x.sigma, u, prm, model.proliferation), galerkin_n);
  e.src_phi = inner(S, mu) + eps * inner(S, x.phi);

  const auto& w = model.sources.w;
  e.diss_sigma = frac_norm_sq(x.sigma, 0.5);
  e.src_sigma = -prm.c * inner(x.sigma, consumption(x.sigma, x.phi, model.proliferation)) - prm.b * norm_sq(x.sigma) +
                prm.b * inner(w, x.sigma);
  e.force_v = inner(model.sources.z, x.v);

  if (dirs) {
    e.noise_hs_v = hs_norm_sq(x.v, model.noise_v, dirs->v, NormLevel::l2);
    e.noise_hs_sigma = hs_norm_sq(x.sigma, model.noise_s, dirs->s, NormLevel::l2);
  }
  e.galerkin_defect = inner(advection_b1(x.v, x.phi), dpsi) / eps;
  return e;
}

// ---------------------------------------------------------------------------
// Balance along a trajectory

struct BalanceResult {
  std::vector<double> residuals;  // |E_tot(n+1) - E_tot(n) - dt rate(n)|
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double max_increase = 0.0;      // max(E_tot(n+1) - E_tot(n), 0)
};

inline BalanceResult dissipation_balance(const TrajectoryLog& log) {
  BalanceResult out;
  for (std::size_t n = 0; n + 1 < log.records.size(); ++n) {
    const auto& a = log.records[n];
    const auto& b = log.records[n + 1];
    const double dt = b.time - a.time;
    const double res = std::abs(b.E_tot - a.E_tot - dt * a.rate());
    out.residuals.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
    out.max_increase = std::max(out.max_increase, b.E_tot - a.E_tot);
  }
  if (!out.residuals.empty()) {
    double s = 0.0;
    for (double r : out.residuals) s += r;
    out.mean_residual = s / double(out.residuals.size());
  }
  return out;
}

/// Least-squares slope of log(residual) against log(dt).
inline double richardson_slope(const std::vector<double>& dts, const std::vector<double>& residuals) {
  if (dts.size() != residuals.size() || dts.size() < 2) throw UsageError("richardson_slope: need at least two matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log(dts[i]), y = std::log(residuals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Mean of the chemical potential

struct MeanMuCheck {
  double mean_mu = 0.0;
  double mean_psi_prime = 0.0;  // eps^-1 mean(psi'(phi)) by 2N-grid quadrature
  double residual = 0.0;        // |mean_mu - mean_psi_prime| / (1 + |mean_mu|)
};

inline MeanMuCheck mean_mu_check(const ScalarField& phi, const PotentialSpec& potential, double epsilon) {
  MeanMuCheck out;
  out.mean_mu = chemical_potential(phi, potential, epsilon).c[0].real();
  auto g = to_physical(phi, Padding::twice);
  for (auto& x : g.values) x = potential.psi(x, 1);
  out.mean_psi_prime = g.mean() / epsilon;
  out.residual = std::abs(out.mean_mu - out.mean_psi_prime) / (1.0 + std::abs(out.mean_mu));
  return out;
}

/// Constant C in |mean(mu)| <= C (1 + ||psi(phi)||_L1), from
///   |psi'(s)| <= C_psi (1 + |s|^(rho-1)),  psi(s) >= c_low |s|^rho - c_offset,
/// Hoelder and x^(rho-1) <= 1 + x^rho:
///   C = C_psi / (eps |O|) max(|O| + |O|^(1/rho) (1 + c_offset |O| / c_low), |O|^(1/rho) / c_low).
inline double mean_mu_bound_constant(const PotentialSpec& p, double epsilon, double volume) {
  const double o = volume;
  const double orho = std::pow(o, 1.0 / p.rho);
  const double constant_part = o + orho * (1.0 + p.c_offset * o / p.c_low);
  const double linear_part = orho / p.c_low;
  return p.C_psi / (epsilon * o) * std::max(constant_part, linear_part);
}

struct MeanMuBound {
  double mean_mu = 0.0;
  double bound = 0.0;
  bool holds = false;
};

inline MeanMuBound mean_mu_bound_check(const ScalarField& phi, const PotentialSpec& potential, double epsilon) {
  MeanMuBound out;
  out.mean_mu = chemical_potential(phi, potential, epsilon).c[0].real();
  auto g = to_physical(phi, Padding::twice);
  for (auto& x : g.values) x = std::abs(potential.psi(x, 0));
  out.bound = mean_mu_bound_constant(potential, epsilon, phi.basis->volume()) * (1.0 + g.integral());
  out.holds = std::abs(out.mean_mu) <= out.bound;
  return out;
}

// ---------------------------------------------------------------------------
// Sobolev ratio monitors

/// ||y||_L4 / (||y||^((4-d)/4) ||y||_H1^(d/4)), Gagliardo-Nirenberg.
inline double gn_ratio(const ScalarField& y) {
  const int d = y.basis->dim();
  auto g = to_physical(y, Padding::twice);
  for (auto& x : g.values) x = x * x * x * x;
  const double l4 = std::pow(g.integral(), 0.25);
  const double l2 = std::sqrt(norm_sq(y));
  const double h1 = std::sqrt(sobolev_norm_sq(y, 1.0));
  const double denom = std::pow(l2, (4.0 - d) / 4.0) * std::pow(h1, d / 4.0);
  return denom > 0.0 ? l4 / denom : 0.0;
}

/// ||y||_Linf / (||y||^(1/2) ||y||_H2^(1/2)) in 2D, ||y||_H1^(1/2) ||y||_H2^(1/2) in 3D.
/// The sup norm is sampled on the 2N grid.
inline double agmon_ratio(const ScalarField& y) {
  const auto g = to_physical(y, Padding::twice);
  double linf = 0.0;
  for (double x : g.values) linf = std::max(linf, std::abs(x));
  const double h2 = std::sqrt(sobolev_norm_sq(y, 2.0));
  const double low = y.basis->dim() == 2 ? std::sqrt(norm_sq(y)) : std::sqrt(sobolev_norm_sq(y, 1.0));
  const double denom = std::sqrt(low * h2);
  return denom > 0.0 ? linf / denom : 0.0;
}

struct RatioStatistics {
  std::map<int, double> max_by_modes;  // N -> max observed ratio
  double variation = 0.0;              // (max - min) / min over resolutions
};

template <class RatioFn>
RatioStatistics sobolev_ratio_monitor(const std::vector<ScalarField>& corpus, RatioFn ratio) {
  RatioStatistics out;
  for (const auto& f : corpus) {
    auto& slot = out.max_by_modes[f.basis->modes()];
    slot = std::max(slot, ratio(f));
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [n, v] : out.max_by_modes) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out.variation = lo > 0.0 && std::isfinite(lo) ? (hi - lo) / lo : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory comparisons

struct GalerkinDistance {
  double sup_v = 0.0;       // sup_t V(X_m - X_n)^2
  double integral_z = 0.0;  // int Z(X_m - X_n)^2, left rule on the snapshot grid
  double total() const { return sup_v + integral_z; }
};

/// Both logs must hold snapshots at the same times.  States are compared on
/// the finer of the two bases.
inline GalerkinDistance galerkin_distance(const TrajectoryLog& a, const TrajectoryLog& b) {
  if (a.snapshots.size() != b.snapshots.size() || a.snapshots.empty())
    throw UsageError("galerkin_distance: logs have different snapshot counts");
  for (std::size_t i = 0; i < a.snapshots.size(); ++i)
    if (std::abs(a.snapshots[i].time - b.snapshots[i].time) > 1e-12 * std::max(1.0, std::abs(a.snapshots[i].time)))
      throw UsageError("galerkin_distance: snapshot times differ");
  const auto& fine = a.snapshots[0].basis()->modes() >= b.snapshots[0].basis()->modes() ? a.snapshots[0].basis() : b.snapshots[0].basis();
  GalerkinDistance out;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    const auto diff = difference(embed(a.snapshots[i], fine), embed(b.snapshots[i], fine));
    out.sup_v = std::max(out.sup_v, v_norm_sq(diff));
    if (i + 1 < a.snapshots.size()) out.integral_z += (a.snapshots[i + 1].time - a.snapshots[i].time) * z_norm_sq(diff);
  }
  return out;
}

/// sup_t H(X_a - X_b) over common snapshots and the final H distance.
struct HDistance {
  double sup = 0.0;
  double final = 0.0;
};
inline HDistance h_distance(const TrajectoryLog& a, const TrajectoryLog& b) {
  if (a.snapshots.size() != b.snapshots.size()) throw UsageError("h_distance: logs have different snapshot counts");
  HDistance out;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    const double d = std::sqrt(h_norm_sq(difference(a.snapshots[i], b.snapshots[i])));
    out.sup = std::max(out.sup, d);
  }
  out.final = std::sqrt(h_norm_sq(difference(a.final_state(), b.final_state())));
  return out;
}

}  // namespace chcbf
