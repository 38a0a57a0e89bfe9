#pragma once

// Value types shared by the stepper and the diagnostics.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chcbf/noise.hpp"
#include "chcbf/operators.hpp"
#include "chcbf/potentials.hpp"

namespace chcbf {

/// Everything that defines the dynamics apart from the discretization.
struct Model {
  ModelParams params;
  PotentialSpec potential = double_well();
  ProliferationSpec proliferation = smoothstep_h();
  SourceFields sources;
  NoiseSpec noise_v{Channel::velocity, 0.0, 2.0, 0.0, {}};
  NoiseSpec noise_s{Channel::nutrient, 0.0, 2.0, 0.0, {}};
};

struct StepperConfig {
  double dt = 1e-3;
  std::optional<bool> taming;  // unset: on iff r >= 3
  bool convex_splitting = false;
  bool implicit_linear = true;
  std::optional<std::size_t> galerkin_n;  // unset: every retained pair

  bool taming_on(double r) const { return taming.value_or(r >= 3.0); }
};

/// Wiener directions of both channels for one basis and Galerkin cutoff.
struct NoiseDirections {
  std::vector<Direction> v;
  std::vector<Direction> s;

  static NoiseDirections make(const Basis& basis, const Model& model, std::optional<std::size_t> galerkin_n) {
    return {directions(basis, model.noise_v, galerkin_n), directions(basis, model.noise_s, galerkin_n)};
  }
};

/// Energies of a state together with every term of the energy balance
/// evaluated at that state.
struct EnergyRecord {
  double time = 0.0;
  double E = 0.0;
  double E_tot = 0.0;
  double kinetic = 0.0;
  double grad_phi = 0.0;
  double potential = 0.0;
  double nutrient = 0.0;
  double diss_forchheimer = 0.0;  // eta ||v||^(r+1)_(L^(r+1))
  double diss_viscous = 0.0;      // nu ||grad v||^2
  double diss_mu = 0.0;           // ||grad mu||^2
  double diss_sigma = 0.0;        // ||grad sigma||^2
  double cross_mu_phi = 0.0;      // eps (grad mu, grad phi)
  double src_phi = 0.0;           // (S, mu) + eps (S, phi), S = (P sigma - A - alpha u) h(phi)
  double src_sigma = 0.0;         // -c (sigma^2, h) - b |sigma|^2 + b (w, sigma)
  double noise_hs_v = 0.0;
  double noise_hs_sigma = 0.0;
  double force_v = 0.0;           // <z, v>
  double galerkin_defect = 0.0;   // eps^-1 (B1(v, phi), P_n psi'(phi)), zero for the untruncated problem

  /// d E_tot / dt predicted at this state (expected drift under noise).
  double rate() const {
    return 2.0 * (-diss_forchheimer - diss_viscous - diss_mu - cross_mu_phi - diss_sigma + force_v + src_phi + src_sigma +
                  0.5 * noise_hs_v + 0.5 * noise_hs_sigma);
  }
  bool finite() const { return std::isfinite(E) && std::isfinite(E_tot) && std::isfinite(rate()); }

  static std::vector<std::string> csv_header() {
    return {"time",         "E",           "E_tot",    "kinetic",    "grad_phi", "potential",  "nutrient",   "diss_forchheimer",
            "diss_viscous", "diss_mu",     "diss_sigma", "cross_mu_phi", "src_phi", "src_sigma", "noise_hs_v", "noise_hs_sigma"};
  }
  std::vector<double> csv_row() const {
    return {time,         E,       E_tot,      kinetic,      grad_phi, potential, nutrient,   diss_forchheimer,
            diss_viscous, diss_mu, diss_sigma, cross_mu_phi, src_phi,  src_sigma, noise_hs_v, noise_hs_sigma};
  }
};

/// Per-step identities checked along a trajectory.
struct StepCheck {
  double time = 0.0;
  double mean_mu_residual = 0.0;  // |mean(mu) - eps^-1 mean(psi'(phi))| / (1 + |mean(mu)|)
  double phi_mean_residual = 0.0; // |Delta phi_0 - dt mean(S)|
  double divergence = 0.0;
};

/// Running quantity sup ||X||^2_V + int (nu ||A0 v||^2 + eps ||phi||^2_H4 + ||sigma||^2_H2).
struct StopMonitor {
  double M = 1e3;
  double threshold = 0.0;  // ||X0||_V + M
  double running_sup = 0.0;
  double running_integral = 0.0;
  std::optional<double> triggered_at;

  static StopMonitor make(double M, double initial_v_norm) {
    StopMonitor m;
    m.M = M;
    m.threshold = initial_v_norm + M;
    return m;
  }
  double quantity() const { return std::sqrt(running_sup + running_integral); }
};

struct MonitorEvent {
  double time = 0.0;
  double quantity = 0.0;
  std::string what;
};

struct TrajectoryLog {
  std::vector<double> times;
  std::vector<EnergyRecord> records;
  std::vector<StepCheck> checks;
  std::vector<SystemState> snapshots;
  std::vector<MonitorEvent> events;
  std::vector<std::string> warnings;
  StopMonitor monitor;
  double dt = 0.0;
  std::size_t snapshot_every = 0;
  std::optional<SystemState> last;
  bool completed = false;

  const SystemState& final_state() const { return *last; }
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, std::string what, TrajectoryLog partial)
      : std::runtime_error("blow-up at t=" + std::to_string(time) + ": " + what), time_(time), log_(std::move(partial)) {}
  double time() const { return time_; }
  const TrajectoryLog& log() const { return log_; }

 private:
  double time_;
  TrajectoryLog log_;
};

}  // namespace chcbf
