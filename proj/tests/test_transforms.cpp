#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "chcbf/random_fields.hpp"
#include "chcbf/transforms.hpp"
#include "oracles.hpp"

using namespace chcbf;

namespace {
BasisPtr basis(int dim, int n) { return Basis::make(DomainSpec{dim, 2 * std::numbers::pi, n}); }
}  // namespace

TEST(ToPhysical, ZeroAndCosine) {
  auto b = basis(2, 8);
  const auto z = to_physical(ScalarField::zeros(b));
  for (double v : z.values) EXPECT_EQ(v, 0.0);
  auto f = ScalarField::zeros(b);
  f.c[b->index_of({{1, 0, 0}})] = 0.5;
  f.c[b->index_of({{-1, 0, 0}})] = 0.5;
  for (auto pad : {Padding::none, Padding::three_halves, Padding::twice}) {
    const auto g = to_physical(f, pad);
    const int m = g.points_per_axis;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) EXPECT_NEAR(g.values[i * m + j], std::cos(2 * std::numbers::pi * i / m), 1e-12);
  }
}

TEST(ToPhysical, MatchesDirectDft) {
  std::mt19937_64 rng(11);
  for (int dim : {2, 3}) {
    auto b = basis(dim, 8);
    const auto f = random_scalar(b, rng);
    for (auto pad : {Padding::none, Padding::three_halves, Padding::twice}) {
      const auto g = to_physical(f, pad);
      const auto ref = oracle::evaluate(*b, f.c, oracle::grid_points(dim, g.points_per_axis, b->side_length()));
      double err = 0.0, scale = 0.0;
      for (std::size_t p = 0; p < ref.size(); ++p) {
        err = std::max(err, std::abs(g.values[p] - ref[p]));
        scale = std::max(scale, std::abs(ref[p]));
      }
      EXPECT_LT(err, 1e-12 * scale);
    }
  }
}

TEST(RoundTrip, IdentityAndParseval) {
  std::mt19937_64 rng(12);
  for (int dim : {2, 3}) {
    auto b = basis(dim, dim == 2 ? 16 : 8);
    const auto f = random_scalar(b, rng);
    for (auto pad : {Padding::none, Padding::three_halves, Padding::twice}) {
      const auto back = to_spectral(to_physical(f, pad), b);
      EXPECT_LT(oracle::rel_diff(back.c, f.c), 1e-12);
    }
    const auto g = to_physical(f);
    EXPECT_NEAR(grid_inner(g, g), norm_sq(f), 1e-10 * norm_sq(f));
    EXPECT_NEAR(g.mean(), f.c[0].real(), 1e-12);
  }
}

TEST(ToSpectral, RejectsCoarseGrid) {
  auto b = basis(2, 16);
  const auto g = to_physical(ScalarField::zeros(basis(2, 8)));
  EXPECT_THROW(to_spectral(g, b), UsageError);
}

TEST(DealiasedProduct, ConstantAndDeltas) {
  std::mt19937_64 rng(13);
  auto b = basis(2, 8);
  const auto f = random_scalar(b, rng);
  const auto one = ScalarField::constant(b, 1.0);
  EXPECT_LT(oracle::rel_diff(dealiased_product(one, f, 2).c, f.c), 1e-14);

  auto a = ScalarField::zeros(b), c = ScalarField::zeros(b);
  a.c[b->index_of({{1, 2, 0}})] = Complex(0.5, 0.25);
  a.c[b->index_of({{-1, -2, 0}})] = Complex(0.5, -0.25);
  c.c[b->index_of({{1, 0, 0}})] = 2.0;
  c.c[b->index_of({{-1, 0, 0}})] = 2.0;
  const auto p = dealiased_product(a, c, 2);
  EXPECT_NEAR(std::abs(p.c[b->index_of({{2, 2, 0}})] - Complex(1.0, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(p.c[b->index_of({{0, 2, 0}})] - Complex(1.0, 0.5)), 0.0, 1e-15);
}

TEST(DealiasedProduct, QuadraticAndCubicMatchConvolution) {
  std::mt19937_64 rng(14);
  for (int dim : {2, 3}) {
    auto b = basis(dim, 8);
    for (int t = 0; t < 5; ++t) {
      const auto x = random_scalar(b, rng), y = random_scalar(b, rng);
      bool exact = false;
      const auto q = dealiased_product(x, y, 2, &exact);
      EXPECT_TRUE(exact);
      const auto ref = oracle::truncate(oracle::convolve(oracle::from_field(x), oracle::from_field(y)), *b);
      EXPECT_LT(oracle::rel_diff(q.c, ref), 1e-12);
      if (dim == 2) {
        const auto cube = to_physical(x, Padding::twice);
        auto g = cube;
        for (auto& v : g.values) v = v * v * v;
        const auto refc = oracle::truncate(
            oracle::convolve(oracle::convolve(oracle::from_field(x), oracle::from_field(x)), oracle::from_field(x)), *b);
        EXPECT_LT(oracle::rel_diff(to_spectral(g, b).c, refc), 1e-12);
      }
    }
  }
}

TEST(DealiasedProduct, HighDegreeFlagsAliasing) {
  auto b = basis(2, 8);
  bool exact = true;
  dealiased_product(ScalarField::constant(b, 1.0), ScalarField::constant(b, 1.0), 4, &exact);
  EXPECT_FALSE(exact);
  EXPECT_THROW(dealiased_product(ScalarField::zeros(b), ScalarField::zeros(b), 1), UsageError);
  EXPECT_TRUE(padding_for_degree(3).exact);
  EXPECT_EQ(padding_for_degree(2).padding, Padding::three_halves);
}

TEST(Transforms, LinearityAndConjugateSymmetry) {
  std::mt19937_64 rng(15);
  auto b = basis(2, 16);
  const auto x = random_scalar(b, rng), y = random_scalar(b, rng);
  const auto gx = to_physical(x), gy = to_physical(y), gs = to_physical(2.0 * x + y);
  for (std::size_t p = 0; p < gs.size(); ++p) EXPECT_NEAR(gs.values[p], 2 * gx.values[p] + gy.values[p], 1e-12);
  auto g = gx;
  for (auto& v : g.values) v = std::sin(v);
  const auto s = to_spectral(g, b);
  EXPECT_EQ(hermitian_defect(*b, s.c), 0.0);
}
