#pragma once

// Random smooth test fields.  Coefficients are i.i.d. complex Gaussians
// scaled by (1 + |k|^2)^(-decay/2), optionally restricted to |k_a| <= band.

#include <optional>
#include <random>

#include "chcbf/spectral_basis.hpp"

namespace chcbf {

struct RandomFieldSpec {
  double amplitude = 1.0;
  double decay = 2.0;
  std::optional<int> band;  // keep only |k_a| <= band
};

namespace detail {
template <class Rng>
std::vector<Complex> random_coefficients(const Basis& basis, Rng& rng, const RandomFieldSpec& spec, bool with_mean) {
  std::normal_distribution<double> gauss;
  std::vector<Complex> c(basis.size());
  for (std::size_t idx : basis.scalar_ranks()) {
    const auto& k = basis.wavevector(idx);
    if (spec.band) {
      bool inside = true;
      for (int a = 0; a < basis.dim(); ++a) inside = inside && std::abs(k.k[a]) <= *spec.band;
      if (!inside) continue;
    }
    const double w = spec.amplitude * std::pow(1.0 + double(k.norm_sq()), -0.5 * spec.decay);
    if (idx == 0) {
      const double re = gauss(rng);
      if (with_mean) c[0] = w * re;
      continue;
    }
    const double re = gauss(rng), im = gauss(rng);
    c[idx] = w * Complex(re, im);
    c[basis.conj_index(idx)] = std::conj(c[idx]);
  }
  return c;
}
}  // namespace detail

template <class Rng>
ScalarField random_scalar(const BasisPtr& basis, Rng& rng, const RandomFieldSpec& spec = {}) {
  return ScalarField{basis, detail::random_coefficients(*basis, rng, spec, true)};
}

/// Random vector field with zero mean, not projected.
template <class Rng>
VectorField random_vector(const BasisPtr& basis, Rng& rng, const RandomFieldSpec& spec = {}) {
  auto v = VectorField::zeros(basis);
  for (int a = 0; a < basis->dim(); ++a) v.c[a] = detail::random_coefficients(*basis, rng, spec, false);
  return v;
}

/// Random divergence-free, zero-mean vector field.
template <class Rng>
VectorField random_divfree(const BasisPtr& basis, Rng& rng, const RandomFieldSpec& spec = {}) {
  return leray_project(random_vector(basis, rng, spec));
}

}  // namespace chcbf
