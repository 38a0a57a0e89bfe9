// Acceptance suite: one PASS/FAIL line per criterion.  Tolerances and
// budgets are pinned here.  `acceptance 4 11` runs a subset.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "chcbf/experiments.hpp"
#include "oracles.hpp"

using namespace chcbf;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

BasisPtr basis(int dim, int n) { return Basis::make(DomainSpec{dim, 2 * pi, n}); }

// Moderate noise on both channels, as in configs/default_2d.ini.
const std::string moderate =
    "[noise.velocity]\na0 = 0.5\ns_a = 2\nm = 0.1\n[noise.nutrient]\na0 = 0.5\ns_a = 2\nm = 0.1\n"
    "[experiment]\nseed = 20261017\n";

// ---------------------------------------------------------------------------

Outcome identities() {
  const double tol = 1e-8;
  double worst = 0.0;
  std::string where;
  std::size_t fields = 0;
  for (auto [dim, n] : {std::pair{2, 16}, std::pair{2, 32}, std::pair{3, 16}}) {
    auto cfg = parse_config("[domain]\ndim = " + std::to_string(dim) + "\nmodes = " + std::to_string(n) +
                            "\n[experiment]\noperator_samples = 500\nseed = " + std::to_string(100 + 10 * dim + n) + "\n");
    const auto rep = verify_operators(cfg);
    fields += 6 * cfg.experiment.operator_samples;
    for (const auto& [name, value] : rep.metrics.items()) {
      if (name == "samples" || name.starts_with("forchheimer monotone") || name.starts_with("Leray")) continue;
      const double x = value.get<double>();
      if (x > worst) {
        worst = x;
        where = std::to_string(dim) + "D N=" + std::to_string(n) + " " + name;
      }
    }
  }
  return {worst <= tol, std::to_string(fields) + " fields, worst " + fmt(worst) + " (" + where + ") <= " + fmt(tol)};
}

Outcome monotonicity() {
  const double tol = -1e-10;
  std::mt19937_64 rng(2);
  const auto b = basis(2, 16);
  double worst = std::numeric_limits<double>::infinity();
  for (double r : {1.0, 2.0, 3.0, 4.0})
    for (int i = 0; i < 1000; ++i) {
      const auto v1 = random_divfree(b, rng), v2 = random_divfree(b, rng);
      const auto d = v1 - v2;
      const double lhs = inner(forchheimer(v1, r) - forchheimer(v2, r), d);
      const auto g1 = to_physical(v1, Padding::twice), g2 = to_physical(v2, Padding::twice), gd = to_physical(d, Padding::twice);
      double rhs = 0.0;
      for (std::size_t p = 0; p < gd[0].size(); ++p) {
        double m1 = 0, m2 = 0, dd = 0;
        for (int a = 0; a < 2; ++a) {
          m1 += g1[a].values[p] * g1[a].values[p];
          m2 += g2[a].values[p] * g2[a].values[p];
          dd += gd[a].values[p] * gd[a].values[p];
        }
        rhs += 0.5 * (std::pow(m1, 0.5 * (r - 1)) + std::pow(m2, 0.5 * (r - 1))) * dd;
      }
      rhs *= gd[0].cell_volume();
      worst = std::min(worst, lhs - rhs);
    }
  return {worst >= tol, "4000 pairs, min(lhs - rhs) = " + fmt(worst) + " >= " + fmt(tol)};
}

Outcome projections() {
  const double tol = 1e-12;
  const double alphas[] = {0.0, 0.25, 0.5, 1.0, 1.5, 2.0};
  std::mt19937_64 rng(3);
  std::size_t violations = 0, checks = 0, equalities = 0;
  double eq_err = 0.0;
  auto norm = [](const auto& f, double a) { return std::sqrt(frac_norm_sq(f, a)); };
  auto ineq = [&](double lhs, double rhs) {
    ++checks;
    if (lhs > rhs * (1 + 1e-14)) ++violations;
  };
  auto equal = [&](double lhs, double rhs) {
    ++equalities;
    eq_err = std::max(eq_err, std::abs(lhs - rhs) / rhs);
  };
  for (auto [dim, n] : {std::pair{2, 16}, std::pair{3, 8}}) {
    const auto b = basis(dim, n);
    const std::size_t nv = b->velocity_ranks().size(), ns = b->scalar_ranks().size();
    for (int t = 0; t < 10; ++t) {
      const auto v = random_divfree(b, rng);
      const auto phi = random_scalar(b, rng);
      for (std::size_t k : {std::size_t(1), std::size_t(4), std::size_t(17), nv / 3, nv - 1}) {
        const double lam = velocity_rank_eigenvalue(*b, k), beta = scalar_rank_eigenvalue(*b, k + 1);
        const auto pv = project_low(v, k), qv = complement_high(v, k);
        const auto pp = project_low(phi, k + 1), qp = complement_high(phi, k + 1);
        for (double a1 : alphas)
          for (double a2 : alphas) {
            if (!(a1 < a2)) continue;
            ineq(norm(pv, a2), std::pow(lam, a2 - a1) * norm(pv, a1));
            ineq(norm(qv, a1), std::pow(lam, a1 - a2) * norm(qv, a2));
            ineq(norm(pp, a2), std::pow(beta, a2 - a1) * norm(pp, a1));
            ineq(norm(qp, a1), std::pow(beta, a1 - a2) * norm(qp, a2));
          }
      }
    }
    // Equality: the rank-n mode saturates the P bound; on the Q side the
    // first excluded mode does so when its eigenvalue ties with rank n.
    for (std::size_t k = 1; k + 1 <= nv; ++k) {
      const double lam = velocity_rank_eigenvalue(*b, k);
      const bool tied = velocity_rank_eigenvalue(*b, k + 1) == lam;
      auto mode = [&](std::size_t rank) {
        const std::size_t idx = b->velocity_ranks()[rank - 1];
        const auto pol = polarizations(b->wavevector(idx), dim).front();
        auto w = VectorField::zeros(b);
        for (int a = 0; a < dim; ++a) {
          w.c[a][idx] += pol[a];
          w.c[a][b->conj_index(idx)] += pol[a];
        }
        return w;
      };
      const auto at = mode(k), next = mode(k + 1);
      for (double a1 : alphas)
        for (double a2 : alphas) {
          if (!(a1 < a2)) continue;
          equal(norm(project_low(at, k), a2), std::pow(lam, a2 - a1) * norm(project_low(at, k), a1));
          if (tied) equal(norm(complement_high(next, k), a1), std::pow(lam, a1 - a2) * norm(complement_high(next, k), a2));
        }
    }
    for (std::size_t k = 1; k <= ns; ++k) {
      const double beta = scalar_rank_eigenvalue(*b, k);
      if (beta == 0.0) continue;
      auto f = ScalarField::zeros(b);
      const std::size_t idx = b->scalar_ranks()[k - 1];
      f.c[idx] = f.c[b->conj_index(idx)] = 1.0;
      for (double a1 : alphas)
        for (double a2 : alphas)
          if (a1 < a2) equal(norm(project_low(f, k), a2), std::pow(beta, a2 - a1) * norm(project_low(f, k), a1));
    }
  }
  return {violations == 0 && eq_err <= tol, std::to_string(checks) + " inequalities, " + std::to_string(violations) +
                                                " violated; " + std::to_string(equalities) + " equalities, worst " +
                                                fmt(eq_err) + " <= " + fmt(tol)};
}

// Refined-grid oracle for pointwise nonlinearities of v, with Leray projection.
std::array<std::vector<Complex>, 3> forchheimer_oracle(const VectorField& v, double r, int m) {
  const auto& b = *v.basis;
  std::vector<const std::vector<Complex>*> in;
  for (int a = 0; a < b.dim(); ++a) in.push_back(&v.c[a]);
  const auto out = oracle::refined_projection(b, m, in, [&](const std::vector<double>& x) {
    double s = 0;
    for (double xi : x) s += xi * xi;
    const double w = std::pow(s, 0.5 * (r - 1));
    std::vector<double> y(x.size());
    for (std::size_t a = 0; a < x.size(); ++a) y[a] = w * x[a];
    return y;
  }, b.dim());
  std::array<std::vector<Complex>, 3> ref;
  for (int a = 0; a < b.dim(); ++a) ref[a] = out[a];
  return oracle::leray(b, ref);
}

Outcome oracles() {
  const double tol_poly = 1e-12, tol_nonpoly = 1e-6;
  const ModelParams prm;
  const auto pot = double_well();
  const auto h = smoothstep_h();
  const double u = 0.25;
  std::mt19937_64 rng(4);
  std::map<std::string, double> poly, nonpoly;
  auto note = [](std::map<std::string, double>& m, const std::string& k, double x) { m[k] = std::max(m[k], x); };
  auto vec_diff = [](const VectorField& got, const std::array<std::vector<Complex>, 3>& ref) {
    double d = 0.0;
    for (int a = 0; a < got.dim(); ++a) d = std::max(d, oracle::rel_diff(got.c[a], ref[a]));
    return d;
  };
  for (int dim : {2, 3}) {
    const auto b = basis(dim, 8);
    const std::string tag = std::to_string(dim) + "D ";
    const int samples = dim == 2 ? 3 : 1;
    for (int t = 0; t < samples; ++t) {
      const auto y = random_divfree(b, rng), v = random_divfree(b, rng);
      const auto phi = random_scalar(b, rng);
      auto S = [&](const std::vector<Complex>& c) { return oracle::from_field(*b, c); };

      std::array<std::vector<Complex>, 3> ref;
      for (int j = 0; j < dim; ++j) {
        auto acc = oracle::constant(0.0, S(v.c[j]));
        for (int a = 0; a < dim; ++a) acc = oracle::axpy(1.0, oracle::convolve(S(y.c[a]), oracle::derivative(S(v.c[j]), a)), acc);
        ref[j] = oracle::truncate(acc, *b);
      }
      note(poly, tag + "B0", vec_diff(convection_b0(y, v), oracle::leray(*b, ref)));

      auto acc = oracle::constant(0.0, S(phi.c));
      for (int a = 0; a < dim; ++a) acc = oracle::axpy(1.0, oracle::convolve(S(v.c[a]), oracle::derivative(S(phi.c), a)), acc);
      note(poly, tag + "B1", oracle::rel_diff(advection_b1(v, phi).c, oracle::truncate(acc, *b)));

      const auto lap = oracle::laplacian_eigen(S(phi.c));
      for (int a = 0; a < dim; ++a) {
        ref[a] = oracle::truncate(oracle::convolve(lap, oracle::derivative(S(phi.c), a)), *b);
        for (auto& c : ref[a]) c *= prm.epsilon;
      }
      note(poly, tag + "R0", vec_diff(coupling_R0(phi, prm.epsilon), oracle::leray(*b, ref)));

      const int m = 4 * 8;
      auto mu = oracle::refined_projection(*b, m, {&phi.c}, [&](const std::vector<double>& x) { return std::vector<double>{pot.prime(x[0])}; }, 1)[0];
      const auto a1 = oracle::truncate(lap, *b);
      for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = prm.epsilon * a1[i] + mu[i] / prm.epsilon;
      note(poly, tag + "mu", oracle::rel_diff(chemical_potential(phi, pot, prm.epsilon).c, mu));

      for (double r : {1.0, 3.0}) note(poly, tag + "A_r r=" + fmt(r), vec_diff(forchheimer(y, r), forchheimer_oracle(y, r, m)));

      if (dim == 2) {
        // phi inside (-1, 1): h is the cubic branch there.
        const RandomFieldSpec inner{0.12, 2.0, 2};
        const auto ph = random_scalar(b, rng, inner), sg = random_scalar(b, rng, inner), w = random_scalar(b, rng, inner);
        auto source_ref = [&](const ScalarField& p, const ScalarField& s, int grid) {
          auto ref = oracle::refined_projection(*b, grid, {&p.c, &s.c}, [&](const std::vector<double>& x) {
            return std::vector<double>{(prm.P * x[1] - prm.A - prm.alpha * u) * h.h(x[0]), prm.c * x[1] * h.h(x[0])};
          }, 2);
          for (std::size_t i = 0; i < ref[1].size(); ++i) ref[1][i] += prm.b * (s.c[i] - w.c[i]);
          return ref;
        };
        auto ref_in = source_ref(ph, sg, m);
        note(poly, "2D S (|phi|<1)", oracle::rel_diff(phi_source(ph, sg, u, prm, h).c, ref_in[0]));
        note(poly, "2D sigma reaction (|phi|<1)", oracle::rel_diff(sigma_reaction(sg, ph, w, prm, h).c, ref_in[1]));

        const int fine = 256;
        for (double r : {2.0, 3.5}) note(nonpoly, "2D A_r r=" + fmt(r), vec_diff(forchheimer(y, r), forchheimer_oracle(y, r, fine)));
        const auto sg2 = random_scalar(b, rng);
        auto ref_out = source_ref(phi, sg2, fine);
        note(nonpoly, "2D S (phi crosses +-1)", oracle::rel_diff(phi_source(phi, sg2, u, prm, h).c, ref_out[0]));
        note(nonpoly, "2D sigma reaction (phi crosses +-1)", oracle::rel_diff(sigma_reaction(sg2, phi, w, prm, h).c, ref_out[1]));
      }
    }
  }
  bool ok = true;
  std::string detail;
  for (auto [m, tol, label] : {std::tuple{&poly, tol_poly, "polynomial"}, std::tuple{&nonpoly, tol_nonpoly, "non-polynomial"}}) {
    double worst = 0.0;
    std::string failing;
    for (const auto& [k, x] : *m) {
      worst = std::max(worst, x);
      if (x > tol) failing += " [" + k + " " + fmt(x) + "]";
    }
    ok = ok && failing.empty();
    detail += std::string(detail.empty() ? "" : "; ") + label + " worst " + fmt(worst) + " <= " + fmt(tol);
    if (!failing.empty()) detail += ", over:" + failing;
  }
  return {ok, detail};
}

// Criteria 5 and 6 share the three deterministic runs.
std::vector<TrajectoryLog> balance_logs;

Outcome energy_balance() {
  const std::vector<double> dts{1e-3, 5e-4, 2.5e-4};
  balance_logs.assign(dts.size(), {});
  parallel_for(dts.size(), [&](std::size_t i) {
    const auto cfg = parse_config("[domain]\nmodes = 32\n[stepper]\ndt = " + fmt(dts[i]) + "\nT = 0.5\n");
    const auto b = Basis::make(cfg.domain);
    RunOptions opt;
    opt.T = cfg.T;
    balance_logs[i] = run(smooth_initial(b), model_on(cfg, b), cfg.stepper, opt);
  });
  std::vector<double> res;
  for (const auto& log : balance_logs) res.push_back(dissipation_balance(log).max_residual);
  const double slope = richardson_slope(dts, res);
  return {slope >= 1.8, "residuals " + fmt(res[0]) + ", " + fmt(res[1]) + ", " + fmt(res[2]) + "; slope " + fmt(slope) + " >= 1.8"};
}

Outcome mean_identities() {
  if (balance_logs.empty()) energy_balance();
  double mu = 0.0, mean = 0.0;
  std::size_t steps = 0;
  for (const auto& log : balance_logs)
    for (const auto& c : log.checks) {
      mu = std::max(mu, c.mean_mu_residual);
      mean = std::max(mean, c.phi_mean_residual);
      ++steps;
    }
  return {mu <= 1e-10 && mean <= 1e-10,
          std::to_string(steps) + " steps, mean-mu " + fmt(mu) + ", phi mean mode " + fmt(mean) + " <= 1e-10"};
}

Outcome uniqueness_check() {
  const auto cfg = parse_config("[domain]\nmodes = 32\n[params]\nr = 2\n[stepper]\ndt = 1e-3\nT = 0.1\n" + moderate);
  const auto b = Basis::make(cfg.domain);
  const auto res = uniqueness_pair(cfg, initial_state(cfg, b), 1e-6);
  return {res.identical && res.distance.final <= 1e-3, std::string("bitwise identical: ") + (res.identical ? "yes" : "no") +
                                                         "; final H distance " + fmt(res.distance.final) + " <= 1e-3"};
}

Outcome galerkin_decrease() {
  const auto cfg = parse_config("[stepper]\ndt = 1e-3\nT = 0.5\nsnapshot_interval = 10\n" + moderate +
                                "initial = random\ninitial_decay = 3\n");
  const auto t = galerkin_table(cfg, {16, 32, 64});
  std::string d;
  for (std::size_t i = 0; i < t.consecutive.size(); ++i)
    d += (i ? ", " : "") + std::to_string(t.modes[i]) + "-" + std::to_string(t.modes[i + 1]) + ": " + fmt(t.consecutive[i].sup_v);
  return {t.strictly_decreasing, "sup-V distances " + d};
}

Outcome soak() {
  const auto cfg = parse_config("[domain]\nmodes = 64\n[stepper]\ndt = 1e-3\nT = 10\nM = 1000\n" + moderate + "r = 1, 2, 3\n");
  const auto runs = soak_runs(cfg);
  bool ok = true;
  std::string d;
  for (const auto& s : runs) {
    ok = ok && s.completed && s.finite && !s.triggered;
    d += (d.empty() ? "" : "; ") + std::string("r=") + fmt(s.r) + (s.completed ? " completed" : " blew up") +
         ", sup E_tot " + fmt(s.sup_E_tot) + ", monitor " + fmt(s.monitor_quantity) + "/" + fmt(s.monitor_threshold);
  }
  return {ok, d};
}

Outcome moments() {
  const auto cfg = parse_config("[domain]\nmodes = 16\n[stepper]\ndt = 1e-3\nT = 0.5\n" + moderate);
  const auto paths = ensemble_paths(cfg, 128);
  bool ok = true;
  std::string d;
  for (double p : {2.0, 4.0}) {
    const auto m = moment_estimate(paths, p);
    ok = ok && std::isfinite(m.full) && m.change <= 0.2;
    d += (d.empty() ? "" : "; ") + std::string("p=") + fmt(p) + ": 64 paths " + fmt(m.half) + ", 128 paths " + fmt(m.full) +
         ", change " + fmt(m.change) + " <= 0.2";
  }
  return {ok, d};
}

Outcome eigenvalues() {
  // Band of lambda_n n^(-2/d) over n <= 1000 on the 2 pi torus, pinned.
  const std::pair<double, double> band2{0.25, 1.0}, band3{0.291193488245433, 1.0};
  bool ok = true;
  std::string d;
  for (auto [dim, band] : {std::pair{2, band2}, std::pair{3, band3}}) {
    const auto lad = stokes_eigenvalue_ladder(dim, 2 * pi, 1000);
    double lo = 1e300, hi = 0.0;
    for (std::size_t n = 1; n <= lad.size(); ++n) {
      const double q = lad[n - 1] * std::pow(double(n), -2.0 / dim);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    // Weyl: lambda_n n^(-2/d) -> omega_d^(-2/d) with omega_d the unit-ball volume.
    const double omega = dim == 2 ? pi : 4.0 * pi / 3.0;
    const double weyl = std::pow(omega, -2.0 / dim);
    const double tail = lad.back() * std::pow(1000.0, -2.0 / dim);
    const bool in_band = lo >= band.first * (1 - 1e-12) && hi <= band.second * (1 + 1e-12);
    const bool weyl_ok = std::abs(tail / weyl - 1.0) <= 0.1;
    ok = ok && in_band && weyl_ok;
    d += (d.empty() ? "" : "; ") + std::to_string(dim) + "D [" + fmt(lo) + ", " + fmt(hi) + "] in [" + fmt(band.first) + ", " +
         fmt(band.second) + "], n=1000 ratio " + fmt(tail) + " vs Weyl " + fmt(weyl);
  }
  return {ok, d};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "operator identities", 120, identities},
      {2, "Forchheimer monotonicity", 30, monotonicity},
      {3, "projection lemmas", 10, projections},
      {4, "oracle equivalence", 120, oracles},
      {5, "energy balance slope", 300, energy_balance},
      {6, "mean-mu and phi mean-mode identities", 300, mean_identities},
      {7, "pathwise uniqueness", 180, uniqueness_check},
      {8, "Galerkin Cauchy decrease", 600, galerkin_decrease},
      {9, "2D global soak", 1800, soak},
      {10, "moment stability under path doubling", 1200, moments},
      {11, "eigenvalue asymptotics", 1, eigenvalues},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.passed && in_time;
    failed += !pass;
    std::printf("criterion %2d %s: %s | %s | %.1fs (budget %.0fs%s)\n", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
