#pragma once

// Spectral <-> collocation-grid transforms and dealiased pointwise products.
//
// A field with N modes per axis is sampled on a uniform M^d grid with
// M = N (padding 1), 3N/2 or 2N.  Quadratic products are alias-free on the
// 3N/2 grid and cubic ones on the 2N grid because the retained band is
// |k_a| <= N/2 - 1.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "chcbf/spectral_basis.hpp"

namespace chcbf {

enum class Padding { none, three_halves, twice };

inline int padded_size(int modes, Padding p) {
  switch (p) {
    case Padding::none: return modes;
    case Padding::three_halves: return 3 * modes / 2;
    case Padding::twice: return 2 * modes;
  }
  return modes;
}

/// Smallest padding that keeps a degree-`degree` product alias-free on the
/// retained modes, or nullopt-like `twice` with `exact=false` when none does.
struct PaddingChoice {
  Padding padding;
  bool exact;
};
inline PaddingChoice padding_for_degree(int degree) {
  if (degree <= 1) return {Padding::none, true};
  if (degree == 2) return {Padding::three_halves, true};
  if (degree == 3) return {Padding::twice, true};
  return {Padding::twice, false};
}

/// Real samples on the M^d grid, row-major with axis 0 slowest.  Point j
/// along an axis sits at x = j L / M.
struct PhysicalGrid {
  int dim = 2;
  int points_per_axis = 0;
  double side_length = 0.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double cell_volume() const { return std::pow(side_length / points_per_axis, dim); }
  /// Quadrature of the sampled function (exact for trigonometric polynomials
  /// whose modes stay below M).
  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_volume();
  }
  double mean() const { return integral() / std::pow(side_length, dim); }
};

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface
// is.  Plans are created once per (dim, M, sign) and never destroyed.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(int dim, int m, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(dim, m, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= std::size_t(m);
    std::vector<Complex> scratch(total);
    auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
    const int dims[3] = {m, m, m};
    fftw_plan plan = fftw_plan_dft(dim, dims, ptr, ptr, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void fft_inplace(std::vector<Complex>& data, int dim, int m, int sign) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(FftPlans::instance().get(dim, m, sign), ptr, ptr);
}

/// Storage index on the M^d grid of every slot of `basis`.
inline std::vector<std::size_t> padded_indices(const Basis& basis, int m) {
  std::vector<std::size_t> out(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& k = basis.wavevector(i);
    std::size_t idx = 0;
    for (int a = 0; a < basis.dim(); ++a) idx = idx * std::size_t(m) + std::size_t((k.k[a] + m) % m);
    out[i] = idx;
  }
  return out;
}

inline std::size_t grid_total(int dim, int m) {
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= std::size_t(m);
  return total;
}

}  // namespace detail

/// Synthesize grid samples from spectral coefficients.
inline PhysicalGrid to_physical(const Basis& basis, std::span<const Complex> coeffs, Padding padding = Padding::none) {
  const int m = padded_size(basis.modes(), padding);
  std::vector<Complex> buf(detail::grid_total(basis.dim(), m));
  const auto map = detail::padded_indices(basis, m);
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis.retained(i)) buf[map[i]] = coeffs[i];
  detail::fft_inplace(buf, basis.dim(), m, FFTW_BACKWARD);
  PhysicalGrid g{basis.dim(), m, basis.side_length(), std::vector<double>(buf.size())};
  for (std::size_t j = 0; j < buf.size(); ++j) g.values[j] = buf[j].real();
  return g;
}
inline PhysicalGrid to_physical(const ScalarField& f, Padding padding = Padding::none) {
  return to_physical(*f.basis, f.c, padding);
}
/// One grid per component.
inline std::vector<PhysicalGrid> to_physical(const VectorField& v, Padding padding = Padding::none) {
  std::vector<PhysicalGrid> out;
  for (int a = 0; a < v.dim(); ++a) out.push_back(to_physical(*v.basis, v.c[a], padding));
  return out;
}

/// Analyze grid samples and truncate to the retained modes of `basis`.
inline ScalarField to_spectral(const PhysicalGrid& grid, const BasisPtr& basis) {
  if (grid.dim != basis->dim() || grid.points_per_axis < basis->modes())
    throw UsageError("to_spectral: grid does not cover the basis");
  const int m = grid.points_per_axis;
  std::vector<Complex> buf(grid.values.begin(), grid.values.end());
  detail::fft_inplace(buf, grid.dim, m, FFTW_FORWARD);
  const double norm = 1.0 / double(buf.size());
  const auto map = detail::padded_indices(*basis, m);
  auto f = ScalarField::zeros(basis);
  for (std::size_t i = 0; i < basis->size(); ++i)
    if (basis->retained(i)) f.c[i] = buf[map[i]] * norm;
  enforce_hermitian(f);
  return f;
}

/// Spectral product a*b evaluated on the grid appropriate for the stated
/// polynomial degree.  Returns true in `exact` when the retained
/// coefficients equal the truncated convolution; a `false` flag means the
/// product aliased on the 2N grid.
inline ScalarField dealiased_product(const ScalarField& a, const ScalarField& b, int degree, bool* exact = nullptr) {
  if (degree < 2) throw UsageError("dealiased_product: degree must be >= 2");
  const auto choice = padding_for_degree(degree);
  if (exact) *exact = choice.exact;
  auto ga = to_physical(a, choice.padding);
  const auto gb = to_physical(b, choice.padding);
  for (std::size_t j = 0; j < ga.values.size(); ++j) ga.values[j] *= gb.values[j];
  return to_spectral(ga, a.basis);
}

/// Sum over all grid points of prod_i g_i(x), times the cell volume.
/// Used for exact quadrature of trilinear forms on the 3N/2 grid.
inline double grid_inner(const PhysicalGrid& a, const PhysicalGrid& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j) s += a.values[j] * b.values[j];
  return s * a.cell_volume();
}

}  // namespace chcbf
