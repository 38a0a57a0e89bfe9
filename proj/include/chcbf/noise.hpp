#pragma once

// Truncated cylindrical Wiener noise with diagonal coefficient operators
//
//   G(x) dW = sum_j (a_j + m x_j) dW_j e_j
//
// over a real orthonormal eigenbasis e_j.  For a canonical wavevector k the
// two real directions are
//
//   e_re:  c_k = c_{-k} = 1/sqrt(2|O|)          (sqrt(2/|O|) cos)
//   e_im:  c_k = i/sqrt(2|O|), c_{-k} = conj     (-sqrt(2/|O|) sin)
//
// times a unit polarization perpendicular to k for velocity fields.  The
// scalar mean mode contributes e_0 = 1/sqrt(|O|).
//
// Increments come from a counter-based generator keyed by wavevector, so a
// coarse run sees exactly the prefix of a fine run's Wiener path.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "chcbf/errors.hpp"
#include "chcbf/spectral_basis.hpp"

namespace chcbf {

enum class Channel { velocity, nutrient };

inline const char* channel_name(Channel c) { return c == Channel::velocity ? "velocity" : "nutrient"; }

/// Norm level for Hilbert-Schmidt sums.  Velocity: L2, V = ||A0^(1/2) .||,
/// D(A0) = ||A0 .||.  Scalar: L2, H1, H2.
enum class NormLevel { l2, h1, h2 };

struct NoiseSpec {
  Channel channel = Channel::velocity;
  double a0 = 0.0;    // additive amplitude a_k = a0 (1 + lambda_k)^(-s_a)
  double s_a = 2.0;
  double m = 0.0;     // multiplicative amplitude, m_k = m for every direction
  std::optional<std::size_t> truncation_K;  // unset: every direction inside the Galerkin band

  double additive(double lambda) const { return a0 * std::pow(1.0 + lambda, -s_a); }
  double m_max() const { return std::abs(m); }
  bool silent() const { return a0 == 0.0 && m == 0.0; }
};

struct Direction {
  std::size_t index = 0;  // canonical storage index, 0 for the mean mode
  WaveVector k;
  int polarization = 0;
  int part = 0;  // 0 real / mean, 1 imaginary
  double lambda = 0.0;
  std::array<double, 3> pol{1.0, 0.0, 0.0};
};

/// Unit vectors perpendicular to k: one in 2D, two in 3D.
inline std::vector<std::array<double, 3>> polarizations(const WaveVector& k, int dim) {
  const double n = std::sqrt(double(k.norm_sq()));
  std::array<double, 3> kh{k.k[0] / n, k.k[1] / n, k.k[2] / n};
  if (dim == 2) return {{-kh[1], kh[0], 0.0}};
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(kh[a]) < std::abs(kh[axis])) axis = a;
  std::array<double, 3> e{};
  e[axis] = 1.0;
  std::array<double, 3> p1{kh[1] * e[2] - kh[2] * e[1], kh[2] * e[0] - kh[0] * e[2], kh[0] * e[1] - kh[1] * e[0]};
  const double n1 = std::sqrt(p1[0] * p1[0] + p1[1] * p1[1] + p1[2] * p1[2]);
  for (auto& x : p1) x /= n1;
  std::array<double, 3> p2{kh[1] * p1[2] - kh[2] * p1[1], kh[2] * p1[0] - kh[0] * p1[2], kh[0] * p1[1] - kh[1] * p1[0]};
  return {p1, p2};
}

/// Wiener directions in rank order (pair rank, then polarization, then
/// re/im), restricted to the first `galerkin_n` ranks of the channel's
/// ladder and then to the first K directions.
inline std::vector<Direction> directions(const Basis& basis, const NoiseSpec& spec, std::optional<std::size_t> galerkin_n = {}) {
  std::vector<Direction> out;
  const bool velocity = spec.channel == Channel::velocity;
  std::span<const std::size_t> ranks =
      velocity ? basis.velocity_ranks() : std::span<const std::size_t>(basis.scalar_ranks());
  if (galerkin_n) ranks = ranks.first(std::min(*galerkin_n, ranks.size()));
  for (std::size_t idx : ranks) {
    const auto& k = basis.wavevector(idx);
    if (idx == 0) {
      out.push_back(Direction{0, k, 0, 0, 0.0, {1.0, 0.0, 0.0}});
      continue;
    }
    if (velocity) {
      const auto pols = polarizations(k, basis.dim());
      for (int p = 0; p < int(pols.size()); ++p)
        for (int part = 0; part < 2; ++part) out.push_back(Direction{idx, k, p, part, basis.eigenvalue(idx), pols[p]});
    } else {
      for (int part = 0; part < 2; ++part) out.push_back(Direction{idx, k, 0, part, basis.eigenvalue(idx), {1.0, 0.0, 0.0}});
    }
  }
  if (spec.truncation_K && *spec.truncation_K < out.size()) out.resize(*spec.truncation_K);
  return out;
}

// ---------------------------------------------------------------------------
// Counter-based Gaussian generator

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
inline std::uint64_t absorb(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL)); }
inline double unit_open(std::uint64_t h) { return (double(h >> 11) + 0.5) * 0x1.0p-53; }
}  // namespace detail

/// Independent N(0, 1) draw for every key tuple.
inline double counter_normal(std::uint64_t seed, std::uint64_t trajectory, Channel channel, std::uint64_t step, const WaveVector& k,
                             int polarization, int part) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::absorb(h, trajectory);
  h = detail::absorb(h, channel == Channel::velocity ? 1 : 2);
  h = detail::absorb(h, step);
  for (int a = 0; a < 3; ++a) h = detail::absorb(h, std::uint64_t(std::int64_t(k.k[a])));
  h = detail::absorb(h, std::uint64_t(polarization));
  h = detail::absorb(h, std::uint64_t(part));
  const double u1 = detail::unit_open(detail::absorb(h, 0));
  const double u2 = detail::unit_open(detail::absorb(h, 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Stream of one trajectory.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
};

struct WienerIncrement {
  Channel channel = Channel::velocity;
  double dt = 0.0;
  std::vector<double> dW;
};

/// Increment for draw index `step`: one N(0, dt) entry per direction.
inline WienerIncrement sample_increment(const NoiseStream& stream, std::uint64_t step, double dt, Channel channel,
                                        const std::vector<Direction>& dirs) {
  if (dt < 0.0) throw UsageError("sample_increment: dt must be nonnegative");
  WienerIncrement w{channel, dt, std::vector<double>(dirs.size(), 0.0)};
  if (dt == 0.0) return w;
  const double sd = std::sqrt(dt);
  for (std::size_t j = 0; j < dirs.size(); ++j)
    w.dW[j] = sd * counter_normal(stream.seed, stream.trajectory, channel, step, dirs[j].k, dirs[j].polarization, dirs[j].part);
  return w;
}

// ---------------------------------------------------------------------------
// Coordinates and coefficient operators

/// x_j = (f, e_j).
inline double coordinate(const ScalarField& f, const Direction& d) {
  const double vol = f.basis->volume();
  if (d.index == 0) return std::sqrt(vol) * f.c[0].real();
  const Complex c = f.c[d.index];
  return std::sqrt(2.0 * vol) * (d.part == 0 ? c.real() : c.imag());
}
inline double coordinate(const VectorField& v, const Direction& d) {
  const double vol = v.basis->volume();
  Complex c{};
  for (int a = 0; a < v.dim(); ++a) c += d.pol[a] * v.c[a][d.index];
  return std::sqrt(2.0 * vol) * (d.part == 0 ? c.real() : c.imag());
}

namespace detail {
/// Add g e_j to the coefficient arrays.
inline void add_direction(const Basis& basis, std::array<std::vector<Complex>, 3>& c, int ncomp, const Direction& d, double g) {
  const double vol = basis.volume();
  if (d.index == 0) {
    c[0][0] += g / std::sqrt(vol);
    return;
  }
  const Complex amp = d.part == 0 ? Complex(g / std::sqrt(2.0 * vol), 0.0) : Complex(0.0, g / std::sqrt(2.0 * vol));
  const std::size_t cj = basis.conj_index(d.index);
  for (int a = 0; a < ncomp; ++a) {
    c[a][d.index] += d.pol[a] * amp;
    c[a][cj] += d.pol[a] * std::conj(amp);
  }
}

inline double level_weight(const Direction& d, Channel channel, NormLevel level) {
  switch (level) {
    case NormLevel::l2: return 1.0;
    case NormLevel::h1: return channel == Channel::velocity ? d.lambda : 1.0 + d.lambda;
    case NormLevel::h2: return channel == Channel::velocity ? d.lambda * d.lambda : 1.0 + d.lambda * d.lambda;
  }
  return 1.0;
}

inline void check_channel(Channel want, Channel got, const char* what) {
  if (want != got) throw UsageError(std::string(what) + ": increment channel " + channel_name(got) + " does not match field kind " + channel_name(want));
}
}  // namespace detail

/// G(v) dW for the velocity channel.  Divergence-free by construction.
inline VectorField apply_G(const VectorField& v, const WienerIncrement& dw, const NoiseSpec& spec, const std::vector<Direction>& dirs) {
  detail::check_channel(Channel::velocity, dw.channel, "apply_G");
  detail::check_channel(Channel::velocity, spec.channel, "apply_G");
  if (dw.dW.size() != dirs.size()) throw UsageError("apply_G: increment length does not match the direction list");
  auto out = VectorField::zeros(v.basis);
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const double g = (spec.additive(dirs[j].lambda) + spec.m * coordinate(v, dirs[j])) * dw.dW[j];
    if (g != 0.0) detail::add_direction(*v.basis, out.c, v.dim(), dirs[j], g);
  }
  return out;
}

/// G(sigma) dW for the nutrient channel.
inline ScalarField apply_G(const ScalarField& s, const WienerIncrement& dw, const NoiseSpec& spec, const std::vector<Direction>& dirs) {
  detail::check_channel(Channel::nutrient, dw.channel, "apply_G");
  detail::check_channel(Channel::nutrient, spec.channel, "apply_G");
  if (dw.dW.size() != dirs.size()) throw UsageError("apply_G: increment length does not match the direction list");
  std::array<std::vector<Complex>, 3> c{std::vector<Complex>(s.c.size()), {}, {}};
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const double g = (spec.additive(dirs[j].lambda) + spec.m * coordinate(s, dirs[j])) * dw.dW[j];
    if (g != 0.0) detail::add_direction(*s.basis, c, 1, dirs[j], g);
  }
  return ScalarField{s.basis, std::move(c[0])};
}

/// ||G(x)||^2_HS at the given level: sum_j (a_j + m x_j)^2 w_j.
template <class Field>
double hs_norm_sq(const Field& x, const NoiseSpec& spec, const std::vector<Direction>& dirs, NormLevel level) {
  double s = 0.0;
  for (const auto& d : dirs) {
    const double g = spec.additive(d.lambda) + spec.m * coordinate(x, d);
    s += g * g * detail::level_weight(d, spec.channel, level);
  }
  return s;
}

/// ||G(x) - G(y)||^2_HS at the given level.
template <class Field>
double hs_difference_sq(const Field& x, const Field& y, const NoiseSpec& spec, const std::vector<Direction>& dirs, NormLevel level) {
  double s = 0.0;
  for (const auto& d : dirs) {
    const double g = spec.m * (coordinate(x, d) - coordinate(y, d));
    s += g * g * detail::level_weight(d, spec.channel, level);
  }
  return s;
}

/// Norm of a field at the HS level's matching state norm, restricted to
/// the spanned directions.
template <class Field>
double level_norm_sq(const Field& x, Channel channel, const std::vector<Direction>& dirs, NormLevel level) {
  double s = 0.0;
  for (const auto& d : dirs) {
    const double c = coordinate(x, d);
    s += c * c * detail::level_weight(d, channel, level);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Assumption check

struct A2Report {
  bool passed = true;
  std::string reason;
  std::array<double, 3> hs_additive{};  // ||G(0)||_HS at L2, H1, H2 levels
  double lipschitz = 0.0;               // m_max at every level
  double growth_B = 0.0;                // ||G(x)||_HS <= B (1 + ||x||) at the H2 level
  double summability_threshold = 0.0;   // s_a must exceed this

  std::string summary() const {
    return std::string(passed ? "A2 ok" : "A2 violated: " + reason) + " (B=" + std::to_string(growth_B) +
           ", lipschitz=" + std::to_string(lipschitz) + ")";
  }
  void require() const {
    if (!passed) throw ValidationError(summary());
  }
};

/// Finite HS norms at all three levels for the untruncated operator, plus
/// the Lipschitz and linear-growth constants of the truncated one.
///
/// a_k^2 (1 + lambda_k)^2 is summable over Z^d iff 4 s_a - 4 > d, i.e.
/// s_a > 1 + d/4.
inline A2Report validate_A2(const Basis& basis, const NoiseSpec& spec, std::optional<std::size_t> galerkin_n = {}) {
  A2Report rep;
  rep.summability_threshold = 1.0 + basis.dim() / 4.0;
  auto fail = [&](std::string why) {
    if (rep.passed) rep.reason = std::move(why);
    rep.passed = false;
  };
  if (!std::isfinite(spec.a0) || spec.a0 < 0.0) fail("additive amplitude a0 must be finite and nonnegative");
  if (!std::isfinite(spec.m)) fail("multiplicative amplitude must be finite");
  if (!std::isfinite(spec.s_a)) fail("decay exponent s_a must be finite");
  if (spec.truncation_K && *spec.truncation_K == 0) fail("truncation_K must be positive");
  if (spec.a0 > 0.0 && !(spec.s_a > rep.summability_threshold))
    fail("additive amplitudes not summable at the H2/D(A0) level: s_a=" + std::to_string(spec.s_a) + " <= " +
         std::to_string(rep.summability_threshold));
  if (!rep.passed) return rep;

  const auto dirs = directions(basis, spec, galerkin_n);
  for (int lv = 0; lv < 3; ++lv) {
    double s = 0.0;
    for (const auto& d : dirs) {
      const double a = spec.additive(d.lambda);
      s += a * a * detail::level_weight(d, spec.channel, NormLevel(lv));
    }
    rep.hs_additive[lv] = std::sqrt(s);
  }
  rep.lipschitz = spec.m_max();
  rep.growth_B = std::max(rep.hs_additive[2], spec.m_max());
  return rep;
}

}  // namespace chcbf
