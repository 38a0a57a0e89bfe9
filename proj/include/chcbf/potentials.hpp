#pragma once

// Regular phase-field potentials and the proliferation interpolant h.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chcbf/errors.hpp"

namespace chcbf {

/// Scalar function together with its derivatives; `eval(s, k)` returns the
/// k-th derivative, k = 0..4.
using Derivatives = std::function<double(double s, int order)>;

/// A regular potential psi = psi1 + psi2 with the growth constants used by
/// the admissibility checks:
///   R1 (1 + |s|^(rho-2)) <= psi1''(s) <= R2 (1 + |s|^(rho-2)),  |psi2''| <= R3,
///   psi(s) >= c_low |s|^rho - c_offset,
/// and C_psi bounds every upper-growth / Lipschitz inequality of the class.
struct PotentialSpec {
  std::string name;
  Derivatives psi;
  Derivatives psi1;
  Derivatives psi2;
  double R1 = 0.0;
  double R2 = 0.0;
  double R3 = 0.0;
  double rho = 4.0;
  double C_psi = 0.0;
  double c_low = 0.0;
  double c_offset = 0.0;

  double operator()(double s) const { return psi(s, 0); }
  double prime(double s) const { return psi(s, 1); }
};

/// psi(s) = (s^2 - 1)^2 / 4.  The convex part carries a quadratic shift so
/// that psi1'' is bounded below by a positive multiple of 1 + s^2:
///   psi1(s) = s^4/4 + s^2/2,   psi2(s) = -s^2 + 1/4.
inline PotentialSpec double_well() {
  PotentialSpec p;
  p.name = "double_well";
  p.psi = [](double s, int k) {
    switch (k) {
      case 0: { const double q = s * s - 1.0; return 0.25 * q * q; }
      case 1: return s * s * s - s;
      case 2: return 3.0 * s * s - 1.0;
      case 3: return 6.0 * s;
      case 4: return 6.0;
      default: return 0.0;
    }
  };
  p.psi1 = [](double s, int k) {
    switch (k) {
      case 0: return 0.25 * s * s * s * s + 0.5 * s * s;
      case 1: return s * s * s + s;
      case 2: return 3.0 * s * s + 1.0;
      case 3: return 6.0 * s;
      case 4: return 6.0;
      default: return 0.0;
    }
  };
  p.psi2 = [](double s, int k) {
    switch (k) {
      case 0: return -s * s + 0.25;
      case 1: return -2.0 * s;
      case 2: return -2.0;
      default: return 0.0;
    }
  };
  // (3 s^2 + 1) / (1 + s^2) spans [1, 3).
  p.R1 = 1.0;
  p.R2 = 3.0;
  p.R3 = 2.0;
  p.rho = 4.0;
  // Largest constant needed by the upper-growth family is |psi''''| = 6 <= C (1 + s^2).
  p.C_psi = 6.0;
  // (s^2-1)^2/4 - s^4/8 has minimum -1/4 at s^2 = 2.
  p.c_low = 0.125;
  p.c_offset = 0.25;
  return p;
}

/// Uniform samples over [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> s(count);
  for (std::size_t i = 0; i < count; ++i)
    s[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
  return s;
}
inline std::vector<double> default_potential_samples() { return linspace(-100.0, 100.0, 100001); }

struct InequalityCheck {
  std::string name;
  bool passed = true;
  double worst_s = 0.0;
  double worst_s2 = std::numeric_limits<double>::quiet_NaN();  // pairwise checks only
  double margin = std::numeric_limits<double>::infinity();     // rhs - lhs, scaled by 1 + |rhs|
};

struct AssumptionReport {
  std::vector<InequalityCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const InequalityCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
      if (c.passed) continue;
      os << c.name << " violated at s=" << c.worst_s;
      if (!std::isnan(c.worst_s2)) os << ", s2=" << c.worst_s2;
      os << " (margin " << c.margin << "); ";
    }
    return os.str();
  }
  void require() const {
    if (!passed()) throw ValidationError("potential assumptions failed: " + summary());
  }
};

namespace detail {

constexpr double kRoundoff = 1e-12;

// Records lhs <= rhs at (s, s2).
inline void observe(InequalityCheck& c, double lhs, double rhs, double s, double s2 = std::numeric_limits<double>::quiet_NaN()) {
  const double margin = (rhs - lhs) / (1.0 + std::abs(rhs));
  if (margin < c.margin) {
    c.margin = margin;
    c.worst_s = s;
    c.worst_s2 = s2;
  }
  if (!(lhs <= rhs + kRoundoff * (1.0 + std::abs(rhs)))) c.passed = false;
}

inline std::vector<std::pair<double, double>> sample_pairs(const std::vector<double>& s) {
  std::vector<std::pair<double, double>> pairs;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(s[i], s[i + 1]);
  for (std::size_t i = 0; i < n / 2; ++i) pairs.emplace_back(s[i], s[n - 1 - i]);
  std::mt19937_64 rng(0x5eed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(s[pick(rng)], s[pick(rng)]);
  return pairs;
}

}  // namespace detail

/// Sampled check of every growth, splitting and Lipschitz condition on the
/// potential class.  Throws UsageError on an empty sample list.
inline AssumptionReport validate_assumptions(const PotentialSpec& p, const std::vector<double>& samples) {
  if (samples.empty()) throw UsageError("validate_assumptions: empty sample list");
  using detail::observe;
  AssumptionReport rep;
  rep.checks.reserve(16);  // references below stay valid
  auto make = [&](std::string name) -> InequalityCheck& {
    rep.checks.push_back(InequalityCheck{std::move(name)});
    return rep.checks.back();
  };

  InequalityCheck constants{"constants"};
  constants.passed = p.R1 > 0.0 && p.R2 > 0.0 && p.R3 > 0.0 && p.R1 < p.R2 && p.rho >= 2.0 && p.rho <= 6.0 &&
                     p.C_psi > 0.0 && p.c_low > 0.0;
  constants.margin = constants.passed ? 0.0 : -1.0;
  rep.checks.push_back(constants);

  // Pointwise conditions.
  auto& decomp = make("psi-decomp");
  auto& nonneg = make("psi-nonnegative");
  auto& p1_lo = make("psi1-lower");
  auto& p1_hi = make("psi1-upper");
  auto& p2 = make("psi2-bound");
  auto& grow_lo = make("psi-growth-lower");
  auto& grow_p = make("psi-prime-growth");
  auto& d2 = make("psi''-growth");
  auto& d3 = make("psi'''-growth");
  auto& d4 = make("psi''''-growth");
  const double C = p.C_psi;
  for (double s : samples) {
    const double a = std::abs(s);
    const double psi = p.psi(s, 0);
    observe(decomp, std::abs(psi - p.psi1(s, 0) - p.psi2(s, 0)), 1e-12 * (1.0 + std::abs(psi)), s);
    observe(nonneg, 0.0, psi, s);
    const double w = 1.0 + std::pow(a, p.rho - 2.0);
    const double p1pp = p.psi1(s, 2);
    observe(p1_lo, p.R1 * w, p1pp, s);
    observe(p1_hi, p1pp, p.R2 * w, s);
    observe(p2, std::abs(p.psi2(s, 2)), p.R3, s);
    observe(grow_lo, p.c_low * std::pow(a, p.rho) - p.c_offset, psi, s);
    observe(grow_p, std::abs(p.psi(s, 1)), C * (1.0 + std::pow(a, p.rho - 1.0)), s);
    observe(d2, std::abs(p.psi(s, 2)), C * (1.0 + std::pow(a, 4.0)), s);
    observe(d3, std::abs(p.psi(s, 3)), C * (1.0 + std::pow(a, 3.0)), s);
    observe(d4, std::abs(p.psi(s, 4)), C * (1.0 + a * a), s);
  }

  // Pairwise Lipschitz conditions.
  auto& lip0 = make("psi-lipschitz");
  auto& lip1 = make("psi'-lipschitz");
  auto& lip2 = make("psi''-lipschitz");
  auto& lip3 = make("psi'''-lipschitz");
  for (const auto& [s1, s2] : detail::sample_pairs(samples)) {
    const double d = std::abs(s1 - s2);
    const double a1 = std::abs(s1), a2 = std::abs(s2);
    observe(lip0, std::abs(p.psi(s1, 0) - p.psi(s2, 0)),
            C * (1.0 + std::pow(a1, p.rho - 1.0) + std::pow(a2, p.rho - 1.0)) * d, s1, s2);
    InequalityCheck* lips[3] = {&lip1, &lip2, &lip3};
    for (int k = 1; k <= 3; ++k)
      observe(*lips[k - 1], std::abs(p.psi(s1, k) - p.psi(s2, k)),
              C * (1.0 + std::pow(a1, 5.0 - k) + std::pow(a2, 5.0 - k)) * d, s1, s2);
  }
  return rep;
}

/// Smallest constant L with |f^(k)(s1) - f^(k)(s2)| <= L (1 + |s1|^(5-k) +
/// |s2|^(5-k)) |s1 - s2| over the same pairs the validator uses.
inline double lipschitz_constant_sweep(const PotentialSpec& p, int k, const std::vector<double>& samples) {
  double worst = 0.0;
  for (const auto& [s1, s2] : detail::sample_pairs(samples)) {
    const double d = std::abs(s1 - s2);
    if (d == 0.0) continue;
    const double w = (1.0 + std::pow(std::abs(s1), 5.0 - k) + std::pow(std::abs(s2), 5.0 - k)) * d;
    worst = std::max(worst, std::abs(p.psi(s1, k) - p.psi(s2, k)) / w);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Proliferation interpolant

struct ProliferationSpec {
  std::string name;
  std::function<double(double)> h;
  std::function<double(double)> dh;
  double L_h = 0.0;
};

/// Clamped smoothstep: 0 for s <= -1, 1 for s >= 1, 3t^2 - 2t^3 with
/// t = (s+1)/2 in between.  max h' = 3/4 at s = 0.
inline ProliferationSpec smoothstep_h() {
  ProliferationSpec p;
  p.name = "smoothstep";
  p.h = [](double s) {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double t = 0.5 * (s + 1.0);
    return t * t * (3.0 - 2.0 * t);
  };
  p.dh = [](double s) {
    if (s <= -1.0 || s >= 1.0) return 0.0;
    const double t = 0.5 * (s + 1.0);
    return 3.0 * t * (1.0 - t);
  };
  p.L_h = 0.75;
  return p;
}

inline AssumptionReport validate_proliferation(const ProliferationSpec& p, const std::vector<double>& samples) {
  if (samples.empty()) throw UsageError("validate_proliferation: empty sample list");
  AssumptionReport rep;
  InequalityCheck range{"h-range"}, lip{"h-derivative-bound"}, ends{"h-endpoints"};
  for (double s : samples) {
    const double v = p.h(s);
    detail::observe(range, 0.0, v, s);
    detail::observe(range, v, 1.0, s);
    detail::observe(lip, std::abs(p.dh(s)), p.L_h, s);
  }
  detail::observe(ends, std::abs(p.h(-1.0)), 0.0, -1.0);
  detail::observe(ends, std::abs(p.h(1.0) - 1.0), 0.0, 1.0);
  if (!(p.L_h > 0.0)) lip.passed = false;
  rep.checks = {range, lip, ends};
  return rep;
}

}  // namespace chcbf
