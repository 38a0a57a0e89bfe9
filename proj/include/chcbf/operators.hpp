#pragma once

// Nonlinear and coupling terms of the projected system
//
//   dv + nu A0 v + eta A_r(v) + B0(v, v) - R0(eps A1 phi, phi) - z = G1(v) dW1
//   dphi + A1 mu + B1(v, phi) - (P sigma - A - alpha u) h(phi) = 0
//   dsigma + A1 sigma + B1(v, sigma) + c sigma h(phi) + b (sigma - w) = G2(sigma) dW2
//   mu = eps A1 phi + eps^-1 psi'(phi)
//
// All products are formed pseudo-spectrally: quadratic terms on the 3N/2
// grid, everything else on the 2N grid.

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "chcbf/potentials.hpp"
#include "chcbf/spectral_basis.hpp"
#include "chcbf/transforms.hpp"

namespace chcbf {

struct ModelParams {
  double nu = 1.0;
  double eta = 1.0;
  double epsilon = 0.3;
  double P = 1.0;
  double A = 0.5;
  double alpha = 0.5;
  double c = 1.0;
  double b = 1.0;
  double r = 2.0;

  /// Every coefficient strictly positive and r >= 1.  Returns the name of
  /// the first offending field, empty when valid.
  std::string first_invalid() const {
    const std::pair<const char*, double> pos[] = {{"nu", nu}, {"eta", eta}, {"epsilon", epsilon}, {"P", P},
                                                   {"A", A},   {"alpha", alpha}, {"c", c}, {"b", b}};
    for (const auto& [name, value] : pos)
      if (!(value > 0.0) || !std::isfinite(value)) return name;
    if (!(r >= 1.0) || !std::isfinite(r)) return "r";
    return {};
  }
};

/// Piecewise-constant, spatially uniform dosage u(t) in [0, 1].  Entry i
/// applies from times[i] until times[i+1].
struct DosageSchedule {
  std::vector<double> times{0.0};
  std::vector<double> values{0.0};

  static DosageSchedule constant(double u) { return DosageSchedule{{0.0}, {u}}; }

  double at(double t) const {
    double u = values.front();
    for (std::size_t i = 0; i < times.size(); ++i)
      if (t >= times[i]) u = values[i];
    return u;
  }
  bool valid() const {
    if (times.empty() || times.size() != values.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0 && values[i] <= 1.0)) return false;
      if (i > 0 && !(times[i] > times[i - 1])) return false;
    }
    return true;
  }
};

struct SourceFields {
  VectorField z;  // external force, divergence-free
  DosageSchedule u;
  ScalarField w;  // vasculature nutrient level

  static SourceFields defaults(const BasisPtr& basis) {
    return SourceFields{VectorField::zeros(basis), DosageSchedule::constant(0.0), ScalarField::constant(basis, 1.0)};
  }
};

struct SystemState {
  VectorField v;
  ScalarField phi;
  ScalarField sigma;
  double time = 0.0;

  static SystemState zeros(const BasisPtr& basis) {
    return SystemState{VectorField::zeros(basis), ScalarField::zeros(basis), ScalarField::zeros(basis), 0.0};
  }
  const BasisPtr& basis() const { return phi.basis; }
};

/// Value of an integral form together with the integral of the absolute
/// integrand, which serves as the scale for relative identity checks.
struct FormValue {
  double value = 0.0;
  double scale = 0.0;
  double relative() const { return scale > 0.0 ? std::abs(value) / scale : std::abs(value); }
};

namespace detail {

inline std::vector<PhysicalGrid> gradient_grids(const ScalarField& f, Padding p) { return to_physical(gradient(f), p); }

/// d x d grids of dv_j / dx_a, indexed [a][j].
inline std::vector<std::vector<PhysicalGrid>> jacobian_grids(const VectorField& v, Padding p) {
  std::vector<std::vector<PhysicalGrid>> out(v.dim());
  for (int j = 0; j < v.dim(); ++j) {
    const auto g = gradient_grids(ScalarField{v.basis, v.c[j]}, p);
    for (int a = 0; a < v.dim(); ++a) out[a].push_back(g[a]);
  }
  return out;
}

inline PhysicalGrid blank_like(const PhysicalGrid& g) {
  return PhysicalGrid{g.dim, g.points_per_axis, g.side_length, std::vector<double>(g.size(), 0.0)};
}

inline VectorField grids_to_vector(const std::vector<PhysicalGrid>& grids, const BasisPtr& basis) {
  auto out = VectorField::zeros(basis);
  for (int a = 0; a < basis->dim(); ++a) out.c[a] = to_spectral(grids[a], basis).c;
  return out;
}

inline double pow_abs(double x, double e) { return e == 0.0 ? 1.0 : std::pow(x, e); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Forchheimer damping

/// True when |v|^(r-1) v is a polynomial of degree <= 3 in v, i.e. exactly
/// representable on the 2N grid.
inline bool forchheimer_alias_free(double r) { return r == 1.0 || r == 3.0; }

/// |v|^(r-1) v on the 2N grid, truncated, without the Leray projection.
inline VectorField forchheimer_raw(const VectorField& v, double r) {
  auto grids = to_physical(v, Padding::twice);
  const std::size_t n = grids[0].size();
  const double e = 0.5 * (r - 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    double m2 = 0.0;
    for (const auto& g : grids) m2 += g.values[j] * g.values[j];
    const double f = detail::pow_abs(m2, e);
    for (auto& g : grids) g.values[j] *= f;
  }
  return detail::grids_to_vector(grids, v.basis);
}

/// A_r(v) = P(|v|^(r-1) v).  For r = 1 the input is returned unchanged
/// (v is assumed divergence-free).
inline VectorField forchheimer(const VectorField& v, double r) {
  if (r == 1.0) return v;
  return leray_project(forchheimer_raw(v, r));
}

/// ||v||_{L^(r+1)}^(r+1) by quadrature on the 2N grid.
inline double lebesgue_norm_pow(const VectorField& v, double r) {
  const auto grids = to_physical(v, Padding::twice);
  double s = 0.0;
  for (std::size_t j = 0; j < grids[0].size(); ++j) {
    double m2 = 0.0;
    for (const auto& g : grids) m2 += g.values[j] * g.values[j];
    s += std::pow(m2, 0.5 * (r + 1.0));
  }
  return s * grids[0].cell_volume();
}

/// Pointwise map |v|^(r-1) v on R^d.
inline std::array<double, 3> forchheimer_map(const std::array<double, 3>& v, int dim, double r) {
  double m2 = 0.0;
  for (int a = 0; a < dim; ++a) m2 += v[a] * v[a];
  const double f = detail::pow_abs(m2, 0.5 * (r - 1.0));
  std::array<double, 3> out{};
  for (int a = 0; a < dim; ++a) out[a] = f * v[a];
  return out;
}

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Gradient of x -> |v(x)|^(r-1) v(x) given v and grad_v[a][j] = d v_j / d x_a:
///   J[a][j] = |v|^(r-1) d_a v_j + (r-1) |v|^(r-3) (sum_i v_i d_a v_i) v_j.
/// |v| is floored at 1e-12 in the singular factor.
inline Matrix3 forchheimer_jacobian(const std::array<double, 3>& v, const Matrix3& grad_v, int dim, double r) {
  Matrix3 J{};
  double m2 = 0.0;
  for (int a = 0; a < dim; ++a) m2 += v[a] * v[a];
  if (r == 1.0) return grad_v;
  const double mag = std::max(std::sqrt(m2), 1e-12);
  const double f1 = std::pow(mag, r - 1.0);
  const double f3 = (r - 1.0) * std::pow(mag, r - 3.0);
  for (int a = 0; a < dim; ++a) {
    double vg = 0.0;
    for (int i = 0; i < dim; ++i) vg += v[i] * grad_v[a][i];
    for (int j = 0; j < dim; ++j) J[a][j] = f1 * grad_v[a][j] + f3 * vg * v[j];
  }
  return J;
}

/// Direct evaluation of a spectral field and its gradient at a point.
inline double evaluate_at(const Basis& basis, std::span<const Complex> c, const std::array<double, 3>& x,
                          std::array<double, 3>* grad = nullptr) {
  const double s = basis.wavenumber_scale();
  double value = 0.0;
  if (grad) *grad = {};
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (c[i] == Complex{}) continue;
    const auto& k = basis.wavevector(i);
    double phase = 0.0;
    for (int a = 0; a < basis.dim(); ++a) phase += s * k.k[a] * x[a];
    const Complex term = c[i] * Complex(std::cos(phase), std::sin(phase));
    value += term.real();
    if (grad)
      for (int a = 0; a < basis.dim(); ++a) (*grad)[a] += -(s * k.k[a]) * term.imag();
  }
  return value;
}

struct GradientCheck {
  double max_residual = 0.0;  // max over points of ||J_formula - J_fd||_F / ||J_formula||_F
  int evaluated = 0;
  int skipped = 0;  // points with |v| below 1e-6 and r < 3
};

/// Compare the closed-form gradient of |v|^(r-1) v with central differences
/// (step `h`) at the given points.
inline GradientCheck forchheimer_gradient_check(const VectorField& v, double r, const std::vector<std::array<double, 3>>& points,
                                                double h = 1e-6) {
  const int d = v.dim();
  const auto& basis = *v.basis;
  auto sample = [&](const std::array<double, 3>& x, Matrix3* grad) {
    std::array<double, 3> val{};
    for (int j = 0; j < d; ++j) {
      std::array<double, 3> g{};
      val[j] = evaluate_at(basis, v.c[j], x, grad ? &g : nullptr);
      if (grad)
        for (int a = 0; a < d; ++a) (*grad)[a][j] = g[a];
    }
    return val;
  };
  GradientCheck out;
  for (const auto& x : points) {
    Matrix3 gv{};
    const auto val = sample(x, &gv);
    double m2 = 0.0;
    for (int a = 0; a < d; ++a) m2 += val[a] * val[a];
    if (r < 3.0 && r != 1.0 && std::sqrt(m2) < 1e-6) {
      ++out.skipped;
      continue;
    }
    const auto J = forchheimer_jacobian(val, gv, d, r);
    double diff = 0.0, ref = 0.0;
    for (int a = 0; a < d; ++a) {
      auto xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const auto fp = forchheimer_map(sample(xp, nullptr), d, r);
      const auto fm = forchheimer_map(sample(xm, nullptr), d, r);
      for (int j = 0; j < d; ++j) {
        const double fd = (fp[j] - fm[j]) / (2.0 * h);
        diff += (fd - J[a][j]) * (fd - J[a][j]);
        ref += J[a][j] * J[a][j];
      }
    }
    ++out.evaluated;
    out.max_residual = std::max(out.max_residual, std::sqrt(diff) / std::max(std::sqrt(ref), 1e-300));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trilinear forms

/// (y . grad) v, dealiased, without projection.
inline VectorField convection_raw(const VectorField& y, const VectorField& v) {
  const auto yg = to_physical(y, Padding::three_halves);
  const auto jac = detail::jacobian_grids(v, Padding::three_halves);
  std::vector<PhysicalGrid> out;
  for (int j = 0; j < v.dim(); ++j) {
    auto g = detail::blank_like(yg[0]);
    for (int a = 0; a < v.dim(); ++a)
      for (std::size_t p = 0; p < g.size(); ++p) g.values[p] += yg[a].values[p] * jac[a][j].values[p];
    out.push_back(std::move(g));
  }
  return detail::grids_to_vector(out, v.basis);
}

/// B0(y, v) = P((y . grad) v).
inline VectorField convection_b0(const VectorField& y, const VectorField& v) { return leray_project(convection_raw(y, v)); }

/// b0(y, v, xi) = int ((y . grad) v) . xi, exact quadrature on the 3N/2 grid.
inline FormValue b0_form(const VectorField& y, const VectorField& v, const VectorField& xi) {
  const auto yg = to_physical(y, Padding::three_halves);
  const auto xg = to_physical(xi, Padding::three_halves);
  const auto jac = detail::jacobian_grids(v, Padding::three_halves);
  FormValue f;
  for (std::size_t p = 0; p < yg[0].size(); ++p)
    for (int a = 0; a < y.dim(); ++a)
      for (int j = 0; j < y.dim(); ++j) {
        const double t = yg[a].values[p] * jac[a][j].values[p] * xg[j].values[p];
        f.value += t;
        f.scale += std::abs(t);
      }
  const double w = yg[0].cell_volume();
  f.value *= w;
  f.scale *= w;
  return f;
}

/// B1(v, phi) = (v . grad) phi, dealiased.
inline ScalarField advection_b1(const VectorField& v, const ScalarField& phi) {
  const auto vg = to_physical(v, Padding::three_halves);
  const auto gg = detail::gradient_grids(phi, Padding::three_halves);
  auto out = detail::blank_like(vg[0]);
  for (int a = 0; a < v.dim(); ++a)
    for (std::size_t p = 0; p < out.size(); ++p) out.values[p] += vg[a].values[p] * gg[a].values[p];
  return to_spectral(out, phi.basis);
}

/// b1(v, phi, theta) = int ((v . grad) phi) theta.
inline FormValue b1_form(const VectorField& v, const ScalarField& phi, const ScalarField& theta) {
  const auto vg = to_physical(v, Padding::three_halves);
  const auto gg = detail::gradient_grids(phi, Padding::three_halves);
  const auto tg = to_physical(theta, Padding::three_halves);
  FormValue f;
  for (std::size_t p = 0; p < tg.size(); ++p)
    for (int a = 0; a < v.dim(); ++a) {
      const double t = vg[a].values[p] * gg[a].values[p] * tg.values[p];
      f.value += t;
      f.scale += std::abs(t);
    }
  const double w = tg.cell_volume();
  f.value *= w;
  f.scale *= w;
  return f;
}

// ---------------------------------------------------------------------------
// Cahn-Hilliard terms

/// psi'(phi) on the 2N grid, truncated.
inline ScalarField potential_derivative(const ScalarField& phi, const PotentialSpec& potential, int order = 1) {
  auto g = to_physical(phi, Padding::twice);
  for (auto& x : g.values) x = potential.psi(x, order);
  return to_spectral(g, phi.basis);
}

/// mu = eps A1 phi + eps^-1 psi'(phi).
inline ScalarField chemical_potential(const ScalarField& phi, const PotentialSpec& potential, double epsilon) {
  auto mu = fractional_apply(phi, 1.0);
  mu *= epsilon;
  auto dpsi = potential_derivative(phi, potential);
  dpsi *= 1.0 / epsilon;
  return mu += dpsi;
}

/// P(mu grad phi) for an arbitrary scalar mu.
inline VectorField coupling_mu_raw(const ScalarField& mu, const ScalarField& phi) {
  const auto mg = to_physical(mu, Padding::three_halves);
  auto gg = detail::gradient_grids(phi, Padding::three_halves);
  for (auto& g : gg)
    for (std::size_t p = 0; p < g.size(); ++p) g.values[p] *= mg.values[p];
  return leray_project(detail::grids_to_vector(gg, phi.basis));
}

/// R0 term of the velocity equation, P(eps (A1 phi) grad phi).
inline VectorField coupling_R0(const ScalarField& phi, double epsilon) {
  auto a1 = fractional_apply(phi, 1.0);
  a1 *= epsilon;
  return coupling_mu_raw(a1, phi);
}

/// r0(mu, phi, y) = int mu grad phi . y.
inline FormValue r0_form(const ScalarField& mu, const ScalarField& phi, const VectorField& y) {
  const auto mg = to_physical(mu, Padding::three_halves);
  const auto gg = detail::gradient_grids(phi, Padding::three_halves);
  const auto yg = to_physical(y, Padding::three_halves);
  FormValue f;
  for (std::size_t p = 0; p < mg.size(); ++p)
    for (int a = 0; a < y.dim(); ++a) {
      const double t = mg.values[p] * gg[a].values[p] * yg[a].values[p];
      f.value += t;
      f.scale += std::abs(t);
    }
  const double w = mg.cell_volume();
  f.value *= w;
  f.scale *= w;
  return f;
}

// ---------------------------------------------------------------------------
// Reaction and source terms

/// (P sigma - A - alpha u) h(phi), evaluated on the 2N grid and truncated.
inline ScalarField phi_source(const ScalarField& phi, const ScalarField& sigma, double u, const ModelParams& prm,
                              const ProliferationSpec& h) {
  auto pg = to_physical(phi, Padding::twice);
  const auto sg = to_physical(sigma, Padding::twice);
  for (std::size_t p = 0; p < pg.size(); ++p)
    pg.values[p] = (prm.P * sg.values[p] - prm.A - prm.alpha * u) * h.h(pg.values[p]);
  return to_spectral(pg, phi.basis);
}

/// sigma h(phi) on the 2N grid, truncated.
inline ScalarField consumption(const ScalarField& sigma, const ScalarField& phi, const ProliferationSpec& h) {
  auto pg = to_physical(phi, Padding::twice);
  const auto sg = to_physical(sigma, Padding::twice);
  for (std::size_t p = 0; p < pg.size(); ++p) pg.values[p] = sg.values[p] * h.h(pg.values[p]);
  return to_spectral(pg, phi.basis);
}

/// c sigma h(phi) + b (sigma - w).
inline ScalarField sigma_reaction(const ScalarField& sigma, const ScalarField& phi, const ScalarField& w, const ModelParams& prm,
                                  const ProliferationSpec& h) {
  auto out = consumption(sigma, phi, h);
  out *= prm.c;
  for (std::size_t i = 0; i < out.c.size(); ++i) out.c[i] += prm.b * (sigma.c[i] - w.c[i]);
  return out;
}

}  // namespace chcbf
