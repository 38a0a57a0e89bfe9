#pragma once

// Fourier eigenbasis on the periodic box [0, L)^d, d in {2, 3}.
//
// Coefficients are stored in FFT order: along each axis, storage slot i holds
// wavenumber i for i < N/2 and i - N otherwise.  A field is
//
//     f(x) = sum_k c_k exp(i (2 pi / L) k . x),
//
// so c_0 is the spatial mean and ||f||^2_{L^2} = L^d sum_k |c_k|^2.  The
// Nyquist slot (k_a = -N/2 on any axis) is part of the storage but is always
// zero: the retained modes are |k_a| <= N/2 - 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "chcbf/errors.hpp"

namespace chcbf {

using Complex = std::complex<double>;

struct DomainSpec {
  int dim = 2;
  double side_length = 2.0 * std::numbers::pi;
  int modes_per_axis = 32;

  void validate() const {
    if (dim != 2 && dim != 3) throw ValidationError("domain dim must be 2 or 3");
    if (!(side_length > 0.0) || !std::isfinite(side_length))
      throw ValidationError("domain side_length must be positive");
    if (modes_per_axis < 4 || modes_per_axis % 2 != 0)
      throw ValidationError("modes_per_axis must be even and >= 4");
  }

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct WaveVector {
  std::array<int, 3> k{0, 0, 0};

  long norm_sq() const {
    return long(k[0]) * k[0] + long(k[1]) * k[1] + long(k[2]) * k[2];
  }
  WaveVector operator-() const { return {{-k[0], -k[1], -k[2]}}; }
  auto operator<=>(const WaveVector&) const = default;
};

/// (2 pi / L)^2 |k|^2.  Throws RangeError when a component lies outside
/// [-N/2, N/2).
inline double stokes_eigenvalue(const WaveVector& k, const DomainSpec& domain) {
  const int half = domain.modes_per_axis / 2;
  for (int a = 0; a < 3; ++a) {
    const bool active = a < domain.dim;
    if ((active && (k.k[a] < -half || k.k[a] >= half)) || (!active && k.k[a] != 0))
      throw RangeError("wavevector component outside the mode range");
  }
  const double scale = 2.0 * std::numbers::pi / domain.side_length;
  return scale * scale * double(k.norm_sq());
}

class Basis;
using BasisPtr = std::shared_ptr<const Basis>;

/// Immutable index tables for one DomainSpec.  Shared between all fields on
/// the same domain.
class Basis {
 public:
  static BasisPtr make(const DomainSpec& domain) {
    domain.validate();
    return BasisPtr(new Basis(domain));
  }

  const DomainSpec& domain() const { return domain_; }
  int dim() const { return domain_.dim; }
  int modes() const { return domain_.modes_per_axis; }
  double side_length() const { return domain_.side_length; }
  double volume() const { return std::pow(domain_.side_length, domain_.dim); }
  double wavenumber_scale() const { return 2.0 * std::numbers::pi / domain_.side_length; }
  std::size_t size() const { return wavevectors_.size(); }

  const WaveVector& wavevector(std::size_t idx) const { return wavevectors_[idx]; }
  double eigenvalue(std::size_t idx) const { return eigenvalues_[idx]; }
  bool retained(std::size_t idx) const { return retained_[idx]; }
  std::size_t conj_index(std::size_t idx) const { return conj_[idx]; }
  /// k != 0 with the first nonzero component positive.  Each retained
  /// conjugate pair {k, -k} has exactly one canonical member.
  bool canonical(std::size_t idx) const { return canonical_[idx]; }

  /// Storage index of a wavevector.  Throws RangeError outside [-N/2, N/2).
  std::size_t index_of(const WaveVector& k) const {
    const int n = modes();
    std::size_t idx = 0;
    for (int a = 0; a < dim(); ++a) {
      if (k.k[a] < -n / 2 || k.k[a] >= n / 2) throw RangeError("wavevector outside the mode range");
      idx = idx * n + std::size_t(k.k[a] < 0 ? k.k[a] + n : k.k[a]);
    }
    for (int a = dim(); a < 3; ++a)
      if (k.k[a] != 0) throw RangeError("wavevector has components beyond the domain dimension");
    return idx;
  }

  /// Conjugate-pair representatives for scalar fields, ascending eigenvalue
  /// with lexicographic tie-break on k.  Rank 1 is the mean mode.
  const std::vector<std::size_t>& scalar_ranks() const { return scalar_ranks_; }
  /// Same ordering without the mean mode (velocity fields have zero mean).
  std::span<const std::size_t> velocity_ranks() const {
    return std::span<const std::size_t>(scalar_ranks_).subspan(1);
  }
  /// Position in scalar_ranks() of the pair containing idx, or -1 for
  /// discarded (Nyquist) slots.
  long scalar_rank_of(std::size_t idx) const { return rank_of_[idx]; }

 private:
  explicit Basis(const DomainSpec& domain) : domain_(domain) {
    const int n = domain.modes_per_axis;
    std::size_t total = 1;
    for (int a = 0; a < domain.dim; ++a) total *= std::size_t(n);
    wavevectors_.resize(total);
    eigenvalues_.resize(total);
    retained_.resize(total);
    conj_.resize(total);
    canonical_.resize(total);
    rank_of_.assign(total, -1);

    const double scale = wavenumber_scale();
    for (std::size_t idx = 0; idx < total; ++idx) {
      WaveVector wv;
      std::size_t rest = idx;
      bool keep = true;
      for (int a = domain.dim - 1; a >= 0; --a) {
        const int slot = int(rest % std::size_t(n));
        rest /= std::size_t(n);
        wv.k[a] = slot < n / 2 ? slot : slot - n;
        if (wv.k[a] == -n / 2) keep = false;
      }
      wavevectors_[idx] = wv;
      eigenvalues_[idx] = scale * scale * double(wv.norm_sq());
      retained_[idx] = keep;
    }
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (!retained_[idx]) {
        conj_[idx] = idx;
        continue;
      }
      conj_[idx] = index_of(-wavevectors_[idx]);
      const auto& k = wavevectors_[idx].k;
      int first = 0;
      for (int a = 0; a < domain.dim && first == 0; ++a) first = k[a];
      canonical_[idx] = first > 0;
    }

    scalar_ranks_.push_back(0);
    for (std::size_t idx = 0; idx < total; ++idx)
      if (retained_[idx] && canonical_[idx]) scalar_ranks_.push_back(idx);
    std::sort(scalar_ranks_.begin() + 1, scalar_ranks_.end(), [this](std::size_t a, std::size_t b) {
      const long na = wavevectors_[a].norm_sq(), nb = wavevectors_[b].norm_sq();
      if (na != nb) return na < nb;
      return wavevectors_[a] < wavevectors_[b];
    });
    for (std::size_t r = 0; r < scalar_ranks_.size(); ++r) {
      rank_of_[scalar_ranks_[r]] = long(r);
      rank_of_[conj_[scalar_ranks_[r]]] = long(r);
    }
  }

  DomainSpec domain_;
  std::vector<WaveVector> wavevectors_;
  std::vector<double> eigenvalues_;
  std::vector<bool> retained_;
  std::vector<std::size_t> conj_;
  std::vector<bool> canonical_;
  std::vector<std::size_t> scalar_ranks_;
  std::vector<long> rank_of_;
};

// ---------------------------------------------------------------------------
// Fields

struct ScalarField {
  BasisPtr basis;
  std::vector<Complex> c;

  static ScalarField zeros(BasisPtr b) {
    ScalarField f{std::move(b), {}};
    f.c.assign(f.basis->size(), Complex{});
    return f;
  }
  static ScalarField constant(BasisPtr b, double value) {
    auto f = zeros(std::move(b));
    f.c[0] = value;
    return f;
  }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
};

/// Raw vector-valued coefficients; nothing here enforces the divergence-free
/// constraint (see leray_project).
struct VectorField {
  BasisPtr basis;
  std::array<std::vector<Complex>, 3> c;

  int dim() const { return basis->dim(); }

  static VectorField zeros(BasisPtr b) {
    VectorField f{std::move(b), {}};
    for (int a = 0; a < f.basis->dim(); ++a) f.c[a].assign(f.basis->size(), Complex{});
    return f;
  }

  VectorField& operator+=(const VectorField& o) {
    for (int a = 0; a < dim(); ++a)
      for (std::size_t i = 0; i < c[a].size(); ++i) c[a][i] += o.c[a][i];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int a = 0; a < dim(); ++a)
      for (std::size_t i = 0; i < c[a].size(); ++i) c[a][i] -= o.c[a][i];
    return *this;
  }
  VectorField& operator*=(double s) {
    for (int a = 0; a < dim(); ++a)
      for (auto& x : c[a]) x *= s;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }
};

// ---------------------------------------------------------------------------
// Hermitian symmetry

/// Replace each pair (c_k, c_-k) by its Hermitian part and zero the discarded
/// slots; the mean mode becomes real.
inline void enforce_hermitian(const Basis& basis, std::vector<Complex>& c) {
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (!basis.retained(i)) {
      c[i] = 0.0;
      continue;
    }
    const std::size_t j = basis.conj_index(i);
    if (i == j) {
      c[i] = c[i].real();
    } else if (i < j) {
      const Complex avg = 0.5 * (c[i] + std::conj(c[j]));
      c[i] = avg;
      c[j] = std::conj(avg);
    }
  }
}
inline void enforce_hermitian(ScalarField& f) { enforce_hermitian(*f.basis, f.c); }
inline void enforce_hermitian(VectorField& v) {
  for (int a = 0; a < v.dim(); ++a) enforce_hermitian(*v.basis, v.c[a]);
}

/// max |c_k - conj(c_-k)| over retained modes plus max |c| over discarded ones.
inline double hermitian_defect(const Basis& basis, std::span<const Complex> c) {
  double worst = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double d = basis.retained(i) ? std::abs(c[i] - std::conj(c[basis.conj_index(i)])) : std::abs(c[i]);
    worst = std::max(worst, d);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Inner products and norms (Parseval)

inline double inner(const Basis& basis, std::span<const Complex> a, std::span<const Complex> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return basis.volume() * s;
}
inline double inner(const ScalarField& a, const ScalarField& b) { return inner(*a.basis, a.c, b.c); }
inline double inner(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (int d = 0; d < a.dim(); ++d) s += inner(*a.basis, a.c[d], b.c[d]);
  return s;
}
inline double norm_sq(const ScalarField& f) { return inner(f, f); }
inline double norm_sq(const VectorField& v) { return inner(v, v); }

/// ||A^alpha f||^2 = L^d sum eigenvalue^(2 alpha) |c_k|^2 with 0^0 = 1.
inline double frac_norm_sq(const Basis& basis, std::span<const Complex> c, double alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double lam = basis.eigenvalue(i);
    const double w = alpha == 0.0 ? 1.0 : (lam == 0.0 ? 0.0 : std::pow(lam, 2.0 * alpha));
    s += w * std::norm(c[i]);
  }
  return basis.volume() * s;
}
inline double frac_norm_sq(const ScalarField& f, double alpha) { return frac_norm_sq(*f.basis, f.c, alpha); }
inline double frac_norm_sq(const VectorField& v, double alpha) {
  double s = 0.0;
  for (int d = 0; d < v.dim(); ++d) s += frac_norm_sq(*v.basis, v.c[d], alpha);
  return s;
}

/// Scalar Sobolev norm used throughout: ||f||^2_{H^s} = |f|^2 + |A^{s/2} f|^2.
inline double sobolev_norm_sq(const ScalarField& f, double s) {
  return frac_norm_sq(f, 0.0) + frac_norm_sq(f, 0.5 * s);
}

// ---------------------------------------------------------------------------
// Linear operators

/// Gradient of a scalar: coefficient i (2 pi / L) k c_k per component.
inline VectorField gradient(const ScalarField& f) {
  auto g = VectorField::zeros(f.basis);
  const double s = f.basis->wavenumber_scale();
  for (std::size_t i = 0; i < f.c.size(); ++i) {
    const auto& k = f.basis->wavevector(i);
    for (int a = 0; a < g.dim(); ++a) g.c[a][i] = Complex(0.0, s * k.k[a]) * f.c[i];
  }
  return g;
}

/// Spectral divergence.
inline ScalarField divergence(const VectorField& v) {
  auto out = ScalarField::zeros(v.basis);
  const double s = v.basis->wavenumber_scale();
  for (std::size_t i = 0; i < out.c.size(); ++i) {
    const auto& k = v.basis->wavevector(i);
    Complex acc{};
    for (int a = 0; a < v.dim(); ++a) acc += Complex(0.0, s * k.k[a]) * v.c[a][i];
    out.c[i] = acc;
  }
  return out;
}

/// Leray-Helmholtz projection: c_k <- (I - k k^T / |k|^2) c_k, c_0 <- 0.
inline VectorField leray_project(VectorField v) {
  const auto& basis = *v.basis;
  const int d = v.dim();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& k = basis.wavevector(i);
    const long n2 = k.norm_sq();
    if (n2 == 0 || !basis.retained(i)) {
      for (int a = 0; a < d; ++a) v.c[a][i] = 0.0;
      continue;
    }
    Complex kc{};
    for (int a = 0; a < d; ++a) kc += double(k.k[a]) * v.c[a][i];
    const Complex f = kc / double(n2);
    for (int a = 0; a < d; ++a) v.c[a][i] -= double(k.k[a]) * f;
  }
  return v;
}

/// max_k |k . c_k| / |k|, relative to the largest coefficient magnitude.
inline double divergence_defect(const VectorField& v) {
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < v.basis->size(); ++i) {
    const auto& k = v.basis->wavevector(i);
    Complex kc{};
    double mag = 0.0;
    for (int a = 0; a < v.dim(); ++a) {
      kc += double(k.k[a]) * v.c[a][i];
      mag += std::norm(v.c[a][i]);
    }
    scale = std::max(scale, std::sqrt(mag));
    if (k.norm_sq() > 0) worst = std::max(worst, std::abs(kc) / std::sqrt(double(k.norm_sq())));
    else worst = std::max(worst, std::sqrt(mag));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

namespace detail {
inline void keep_ranks(const Basis& basis, std::vector<Complex>& c, std::size_t n, bool velocity, bool low) {
  const std::size_t offset = velocity ? 1 : 0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const long r = basis.scalar_rank_of(i);
    if (r < 0) {
      c[i] = 0.0;
      continue;
    }
    if (velocity && r == 0) continue;  // mean slot is not part of the velocity ladder
    const bool is_low = std::size_t(r) - offset < n;
    if (is_low != low) c[i] = 0.0;
  }
}
inline void check_rank_count(std::size_t n, std::size_t available) {
  if (n > available) throw RangeError("mode count " + std::to_string(n) + " exceeds basis size " + std::to_string(available));
}
}  // namespace detail

/// Keep the n lowest-ranked conjugate pairs (P_n).
inline ScalarField project_low(ScalarField f, std::size_t n) {
  detail::check_rank_count(n, f.basis->scalar_ranks().size());
  detail::keep_ranks(*f.basis, f.c, n, false, true);
  return f;
}
inline VectorField project_low(VectorField v, std::size_t n) {
  detail::check_rank_count(n, v.basis->velocity_ranks().size());
  for (int a = 0; a < v.dim(); ++a) detail::keep_ranks(*v.basis, v.c[a], n, true, true);
  return v;
}
/// Q_n = I - P_n.
inline ScalarField complement_high(ScalarField f, std::size_t n) {
  detail::check_rank_count(n, f.basis->scalar_ranks().size());
  detail::keep_ranks(*f.basis, f.c, n, false, false);
  return f;
}
inline VectorField complement_high(VectorField v, std::size_t n) {
  detail::check_rank_count(n, v.basis->velocity_ranks().size());
  for (int a = 0; a < v.dim(); ++a) detail::keep_ranks(*v.basis, v.c[a], n, true, false);
  return v;
}

/// Eigenvalue of the pair at 1-based rank n.
inline double scalar_rank_eigenvalue(const Basis& basis, std::size_t n) {
  if (n == 0 || n > basis.scalar_ranks().size()) throw RangeError("rank outside the scalar ladder");
  return basis.eigenvalue(basis.scalar_ranks()[n - 1]);
}
inline double velocity_rank_eigenvalue(const Basis& basis, std::size_t n) {
  if (n == 0 || n > basis.velocity_ranks().size()) throw RangeError("rank outside the velocity ladder");
  return basis.eigenvalue(basis.velocity_ranks()[n - 1]);
}

namespace detail {
inline void scale_by_power(const Basis& basis, std::vector<Complex>& c, double alpha) {
  if (alpha == 0.0) return;
  if (alpha < 0.0 && std::abs(c[0]) != 0.0)
    throw SingularityError("negative fractional power of a field with nonzero mean");
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double lam = basis.eigenvalue(i);
    c[i] *= lam == 0.0 ? 0.0 : std::pow(lam, alpha);
  }
}
}  // namespace detail

/// A^alpha: coefficient k scaled by eigenvalue(k)^alpha.
inline ScalarField fractional_apply(ScalarField f, double alpha) {
  detail::scale_by_power(*f.basis, f.c, alpha);
  return f;
}
inline VectorField fractional_apply(VectorField v, double alpha) {
  for (int a = 0; a < v.dim(); ++a) detail::scale_by_power(*v.basis, v.c[a], alpha);
  return v;
}

/// Copy a field onto another basis of the same dim and L, matching
/// wavevectors.  Modes absent from the target are dropped.
inline ScalarField embed(const ScalarField& f, BasisPtr target) {
  auto out = ScalarField::zeros(target);
  if (f.basis->dim() != target->dim() || f.basis->side_length() != target->side_length())
    throw UsageError("embed: domains differ in dimension or side length");
  const int half = target->modes() / 2;
  for (std::size_t i = 0; i < f.c.size(); ++i) {
    if (!f.basis->retained(i)) continue;
    const auto& k = f.basis->wavevector(i);
    bool fits = true;
    for (int a = 0; a < target->dim(); ++a) fits = fits && std::abs(k.k[a]) < half;
    if (fits) out.c[target->index_of(k)] = f.c[i];
  }
  return out;
}
inline VectorField embed(const VectorField& v, BasisPtr target) {
  auto out = VectorField::zeros(target);
  for (int a = 0; a < v.dim(); ++a) {
    ScalarField comp{v.basis, v.c[a]};
    out.c[a] = embed(comp, target).c;
  }
  return out;
}

/// Sorted nonzero Stokes eigenvalues (2 pi / L)^2 |k|^2 over the whole
/// lattice Z^d, one entry per wavevector, first `count` of them.
inline std::vector<double> stokes_eigenvalue_ladder(int dim, double side_length, std::size_t count) {
  if (dim != 2 && dim != 3) throw ValidationError("ladder dim must be 2 or 3");
  // Lattice points with |k| <= R number about the ball volume; grow R until
  // the shell boundary cannot change the first `count` entries.
  int radius = 4;
  while (true) {
    std::vector<long> n2;
    const int zr = dim == 3 ? radius : 0;
    for (int a = -radius; a <= radius; ++a)
      for (int b = -radius; b <= radius; ++b)
        for (int c = -zr; c <= zr; ++c) {
          const long s = long(a) * a + long(b) * b + long(c) * c;
          if (s > 0 && s <= long(radius) * radius) n2.push_back(s);
        }
    if (n2.size() >= count) {
      std::sort(n2.begin(), n2.end());
      const double scale = std::pow(2.0 * std::numbers::pi / side_length, 2);
      std::vector<double> out(count);
      for (std::size_t i = 0; i < count; ++i) out[i] = scale * double(n2[i]);
      return out;
    }
    radius *= 2;
  }
}

}  // namespace chcbf
