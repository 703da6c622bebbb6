#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcbsde/bsde.hpp"
#include "mcbsde/gene.hpp"
#include "mcbsde/sde.hpp"
#include "mcbsde/stats.hpp"

#include <cmath>
#include <vector>

using namespace mcbsde;

namespace {

double rmse(const std::vector<double>& a, const std::vector<double>& b)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double col_mean(const Matrix& m, std::size_t c)
{
  double acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    acc += m(r, c);
  return acc / static_cast<double>(m.rows());
}

} // namespace

TEST_CASE("conditional_regress reproduces in-span targets exactly")
{
  const TimeGrid g = build_time_grid(1.0, 4);
  const PathEnsemble ens = simulate_brownian(g, 500, 1);
  const std::vector<double> state = ens.w.col(2);

  const std::vector<double> fitted = conditional_regress(state, state, 1);
  CHECK(rmse(fitted, state) < 1e-12);

  const std::vector<double> constant(state.size(), 3.25);
  const std::vector<double> fit2 = conditional_regress(constant, state, 3);
  CHECK(rmse(fit2, constant) < 1e-12);
}

TEST_CASE("conditional_regress tower property at scale")
{
  const TimeGrid g = build_time_grid(1.0, 4);
  const PathEnsemble ens = simulate_brownian(g, 100000, 42);
  const std::vector<double> state = ens.w.col(1); // W at t = 0.25
  const std::vector<double> values = ens.w.col(4); // W_T, a martingale
  const std::vector<double> fitted = conditional_regress(values, state, 3);
  CHECK(rmse(fitted, state) < 0.02);
}

TEST_CASE("conditional_regress rejects degenerate inputs")
{
  const std::vector<double> flat(100, 1.0);
  std::vector<double> values(100);
  for (std::size_t i = 0; i < 100; ++i)
    values[i] = static_cast<double>(i);
  CHECK_THROWS_AS(conditional_regress(values, flat, 2), std::runtime_error);
  CHECK_THROWS_AS(conditional_regress({ 1.0, 2.0 }, { 1.0, 2.0 }, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(conditional_regress({ 1.0, 2.0, 3.0 }, { 1.0, 2.0 }, 1),
                  std::invalid_argument);
}

TEST_CASE("solve_affine: deterministic discounting")
{
  const TimeGrid g = build_time_grid(1.0, 50);
  const PathEnsemble ens = simulate_brownian(g, 20000, 7);
  const double r = 0.4, c = 2.0;
  AffineCoeffs coeffs;
  coeffs.mu = Coeff(-r);
  const std::vector<double> xi(ens.n_paths, c);
  const BsdeSolution sol = solve_affine(coeffs, xi, ens);

  for (std::size_t i = 0; i <= g.n_steps; i += 10) {
    const double exact = c * std::exp(-r * (g.horizon - g.times[i]));
    CHECK(col_mean(sol.y, i) == doctest::Approx(exact).epsilon(1e-9));
  }
  CHECK(sol.y0 == doctest::Approx(c * std::exp(-r)).epsilon(1e-9));
  double zmax = 0.0;
  for (std::size_t i = 0; i < g.n_steps; ++i)
    zmax = std::max(zmax, std::abs(col_mean(sol.z, i)));
  CHECK(zmax < 0.3);
}

TEST_CASE("solve_affine: pure source term gives Y = T - t exactly")
{
  const TimeGrid g = build_time_grid(1.0, 32);
  const PathEnsemble ens = simulate_brownian(g, 4000, 9);
  AffineCoeffs coeffs;
  coeffs.lambda = Coeff(1.0);
  const std::vector<double> xi(ens.n_paths, 0.0);
  const BsdeSolution sol = solve_affine(coeffs, xi, ens);
  for (std::size_t i = 0; i <= g.n_steps; ++i)
    for (std::size_t p = 0; p < ens.n_paths; p += 511)
      CHECK(sol.y(p, i) == doctest::Approx(g.horizon - g.times[i]).epsilon(1e-10));
}

TEST_CASE("solve_affine: z-linear generator shifts the martingale")
{
  // f = theta z, xi = W_T: Y_t = W_t + theta (T - t), Z = 1
  const TimeGrid g = build_time_grid(1.0, 50);
  const PathEnsemble ens = simulate_brownian(g, 50000, 13);
  const double theta = 0.5;
  AffineCoeffs coeffs;
  coeffs.nu = Coeff(theta);
  const std::vector<double> xi = ens.w.col(g.n_steps);
  const BsdeSolution sol = solve_affine(coeffs, xi, ens);

  for (std::size_t i : { std::size_t{ 10 }, std::size_t{ 25 }, std::size_t{ 40 } }) {
    std::vector<double> exact(ens.n_paths);
    for (std::size_t p = 0; p < ens.n_paths; ++p)
      exact[p] = ens.w(p, i) + theta * (g.horizon - g.times[i]);
    CHECK(rmse(sol.y.col(i), exact) < 0.05);
    CHECK(std::abs(col_mean(sol.y, i) - theta * (g.horizon - g.times[i])) < 0.02);
    CHECK(col_mean(sol.z, i) == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK(sol.y0 == doctest::Approx(theta).epsilon(0.05));
}

TEST_CASE("solve_affine terminal row is xi bit-exactly")
{
  const TimeGrid g = build_time_grid(1.0, 8);
  const PathEnsemble ens = simulate_brownian(g, 256, 3);
  std::vector<double> xi(ens.n_paths);
  for (std::size_t p = 0; p < ens.n_paths; ++p)
    xi[p] = 0.1 * static_cast<double>(p) + ens.w(p, 8);
  AffineCoeffs coeffs;
  coeffs.mu = Coeff(-0.2);
  coeffs.nu = Coeff(0.3);
  const BsdeSolution sol = solve_affine(coeffs, xi, ens);
  for (std::size_t p = 0; p < ens.n_paths; ++p)
    CHECK(sol.y(p, 8) == xi[p]);
}

TEST_CASE("solve_affine with mu = nu = 0 is the plain regression of xi")
{
  const TimeGrid g = build_time_grid(1.0, 10);
  const PathEnsemble ens = simulate_brownian(g, 5000, 77);
  const std::vector<double> xi = ens.w.col(g.n_steps);
  const BsdeSolution sol = solve_affine(AffineCoeffs{}, xi, ens);
  for (std::size_t i : { std::size_t{ 3 }, std::size_t{ 7 } }) {
    const std::vector<double> direct = conditional_regress(xi, ens.w.col(i), 3);
    CHECK(rmse(sol.y.col(i), direct) < 1e-10);
  }
}

TEST_CASE("solve_affine reports exploding girsanov weights")
{
  const TimeGrid g = build_time_grid(1.0, 2);
  PathEnsemble ens = simulate_brownian(g, 64, 5);
  ens.w(3, 1) = 1500.0; // one absurd increment
  ens.w(3, 2) = 1500.0;
  AffineCoeffs coeffs;
  coeffs.nu = Coeff(1.0);
  const std::vector<double> xi(ens.n_paths, 1.0);
  CHECK_THROWS_WITH_AS(solve_affine(coeffs, xi, ens),
                       doctest::Contains("girsanov weight overflow on 1 of 64"),
                       std::runtime_error);
}

TEST_CASE("underdetermined regression names the failing time step")
{
  const TimeGrid g = build_time_grid(1.0, 4);
  const PathEnsemble ens = simulate_brownian(g, 4, 15); // 4 paths, 4 basis columns
  const std::vector<double> xi = ens.w.col(g.n_steps);
  GeneratorSpec zero;
  zero.f = [](double, double, double) { return 0.0; };
  CHECK_THROWS_WITH_AS(solve_lsmc(zero, xi, ens), doctest::Contains("at time step 3"),
                       std::runtime_error);
}

TEST_CASE("collinear state features do not change the fitted projection")
{
  const TimeGrid g = build_time_grid(1.0, 6);
  const PathEnsemble ens = simulate_brownian(g, 2000, 15);
  const Matrix duplicate = ens.w;
  const std::vector<double> xi = ens.w.col(g.n_steps);
  GeneratorSpec zero;
  zero.f = [](double, double, double) { return 0.0; };
  const BsdeSolution plain = solve_lsmc(zero, xi, ens);
  const BsdeSolution doubled = solve_lsmc(zero, xi, ens, {}, { &duplicate });
  for (std::size_t p = 0; p < ens.n_paths; p += 191)
    for (std::size_t i = 0; i <= g.n_steps; ++i)
      CHECK(plain.y(p, i) == doctest::Approx(doubled.y(p, i)).epsilon(1e-8));
}

TEST_CASE("solve_lsmc: zero generator recovers the martingale")
{
  const TimeGrid g = build_time_grid(1.0, 40);
  const PathEnsemble ens = simulate_brownian(g, 50000, 2);
  const std::vector<double> xi = ens.w.col(g.n_steps);
  GeneratorSpec zero;
  zero.f = [](double, double, double) { return 0.0; };
  const BsdeSolution sol = solve_lsmc(zero, xi, ens);
  for (std::size_t i : { std::size_t{ 10 }, std::size_t{ 30 } }) {
    CHECK(rmse(sol.y.col(i), ens.w.col(i)) < 0.03);
    CHECK(col_mean(sol.z, i) == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK(std::abs(sol.y0) < 3.0 * sol.y0_stderr + 1e-3);
  for (std::size_t p = 0; p < ens.n_paths; p += 1001)
    CHECK(sol.y(p, g.n_steps) == xi[p]);
}

TEST_CASE("solve_lsmc one-step self-consistency")
{
  const TimeGrid g = build_time_grid(1.0, 25);
  const PathEnsemble ens = simulate_brownian(g, 100000, 19);
  GeneParams params;
  params.R = 1.0;
  params.a = 1.0;
  params.rho = 0.001;
  const GeneratorSpec gen = gene_generator(params);
  std::vector<double> xi(ens.n_paths);
  for (std::size_t p = 0; p < ens.n_paths; ++p)
    xi[p] = 1.0 + ens.w(p, g.n_steps);
  SolverSettings settings;
  settings.n_picard = 5; // converged fixed point, so f can be evaluated at Y_i itself
  const BsdeSolution sol = solve_lsmc(gen, xi, ens, settings);

  const double n = static_cast<double>(ens.n_paths);
  for (std::size_t i = 1; i < g.n_steps; i += 4) {
    double mean = 0.0, zdw_sq = 0.0, zdw_mean = 0.0;
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
      const double f = gen.f(g.times[i], sol.y(p, i), sol.z(p, i));
      const double zdw = sol.z(p, i) * (ens.w(p, i + 1) - ens.w(p, i));
      const double res = sol.y(p, i) - sol.y(p, i + 1) - f * g.dt + zdw;
      mean += res;
      zdw_mean += zdw;
      zdw_sq += zdw * zdw;
    }
    mean /= n;
    zdw_mean /= n;
    // the regression part of the residual cancels pathwise; what remains is the
    // Z dW average, so its iid spread sets the standard error of the mean
    const double zdw_sd = std::sqrt(zdw_sq / n - zdw_mean * zdw_mean);
    CHECK(std::abs(mean) <= 3.0 * zdw_sd / std::sqrt(n) + 1e-12);
  }
}

TEST_CASE("solve_lsmc self-convergence on the hill generator")
{
  GeneParams params;
  params.R = 1.0;
  params.a = 1.0;
  params.rho = 0.001;
  const GeneratorSpec gen = gene_generator(params);

  const TimeGrid coarse = build_time_grid(1.0, 100);
  const PathEnsemble e1 = simulate_brownian(coarse, 20000, 101);
  std::vector<double> xi1(e1.n_paths);
  for (std::size_t p = 0; p < e1.n_paths; ++p)
    xi1[p] = 1.0 + e1.w(p, coarse.n_steps);
  const BsdeSolution s1 = solve_lsmc(gen, xi1, e1);

  const TimeGrid fine = build_time_grid(1.0, 200);
  const PathEnsemble e2 = simulate_brownian(fine, 40000, 202);
  std::vector<double> xi2(e2.n_paths);
  for (std::size_t p = 0; p < e2.n_paths; ++p)
    xi2[p] = 1.0 + e2.w(p, fine.n_steps);
  const BsdeSolution s2 = solve_lsmc(gen, xi2, e2);

  const double combined =
      std::sqrt(s1.y0_stderr * s1.y0_stderr + s2.y0_stderr * s2.y0_stderr);
  CHECK(std::abs(s1.y0 - s2.y0) < 3.0 * combined + 5e-3);
}

TEST_CASE("cross-solver agreement on an affine generator")
{
  const TimeGrid g = build_time_grid(1.0, 64);
  const PathEnsemble ens = simulate_brownian(g, 30000, 55);
  const double lambda = 0.2, mu = -0.3, nu = 0.25;
  std::vector<double> xi(ens.n_paths);
  for (std::size_t p = 0; p < ens.n_paths; ++p)
    xi[p] = 0.5 + 0.8 * ens.w(p, g.n_steps);

  AffineCoeffs coeffs;
  coeffs.lambda = Coeff(lambda);
  coeffs.mu = Coeff(mu);
  coeffs.nu = Coeff(nu);
  const BsdeSolution closed = solve_affine(coeffs, xi, ens);

  GeneratorSpec gen;
  gen.f = [=](double, double y, double z) { return lambda + mu * y + nu * z; };
  const BsdeSolution lsmc = solve_lsmc(gen, xi, ens);

  const double combined = std::sqrt(closed.y0_stderr * closed.y0_stderr
                                    + lsmc.y0_stderr * lsmc.y0_stderr);
  CHECK(std::abs(closed.y0 - lsmc.y0) < 3.0 * combined + 2e-3);
}

TEST_CASE("running features")
{
  const TimeGrid g = build_time_grid(1.0, 4);
  PathEnsemble ens = simulate_brownian(g, 1, 1);
  for (std::size_t i = 0; i <= 4; ++i)
    ens.w(0, i) = g.times[i]; // ramp
  const Matrix ri = running_integral(ens, [](double x) { return x; });
  CHECK(ri(0, 4) == doctest::Approx(0.5));
  CHECK(ri(0, 2) == doctest::Approx(0.125));
  const Matrix rm = running_max(ens);
  CHECK(rm(0, 4) == doctest::Approx(1.0));
  ens.w(0, 4) = -1.0;
  const Matrix rm2 = running_max(ens);
  CHECK(rm2(0, 4) == doctest::Approx(0.75));
}
