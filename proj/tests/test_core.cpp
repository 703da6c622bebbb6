#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcbsde/core.hpp"
#include "mcbsde/sde.hpp"

#include <cmath>
#include <vector>

using namespace mcbsde;

namespace {

ScalarFunc square_half()
{
  ScalarFunc f;
  f.value = [](double x) { return 0.5 * x * x; };
  f.d1 = [](double x) { return x; };
  f.d2 = [](double) { return 1.0; };
  return f;
}

std::vector<double> ramp_path(const TimeGrid& grid) // W_s = s
{
  return grid.times;
}

std::vector<double> constant_path(const TimeGrid& grid, double level)
{
  return std::vector<double>(grid.n_steps + 1, level);
}

} // namespace

TEST_CASE("build_time_grid produces uniform grids")
{
  const TimeGrid g = build_time_grid(1.0, 4);
  REQUIRE(g.times.size() == 5);
  CHECK(g.times[0] == 0.0);
  CHECK(g.times[1] == doctest::Approx(0.25));
  CHECK(g.times[2] == doctest::Approx(0.5));
  CHECK(g.times[3] == doctest::Approx(0.75));
  CHECK(g.times[4] == 1.0);

  const TimeGrid coarse = build_time_grid(400.0, 400);
  CHECK(coarse.dt == doctest::Approx(1.0));
  CHECK(coarse.times.back() == 400.0);

  const TimeGrid minimal = build_time_grid(1.0, 1);
  CHECK(minimal.times == std::vector<double>{ 0.0, 1.0 });

  CHECK_THROWS_AS(build_time_grid(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_time_grid(-1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_time_grid(1.0, 0), std::invalid_argument);
}

TEST_CASE("index_of accepts grid points and rejects off-grid times")
{
  const TimeGrid g = build_time_grid(1.0, 50);
  CHECK(g.index_of(0.5) == 25);
  CHECK(g.index_of(0.0) == 0);
  CHECK(g.index_of(1.0) == 50);
  CHECK_THROWS_AS(g.index_of(0.513), std::invalid_argument);
}

TEST_CASE("evaluate_terminal on hand-checkable paths")
{
  const TimeGrid g = build_time_grid(1.0, 100);

  auto affine = TerminalSpec::affine_gaussian(1.0, 1.0);
  std::vector<double> path = constant_path(g, 0.0);
  path.back() = 0.5;
  CHECK(evaluate_terminal(affine, path, g) == doctest::Approx(1.5));

  auto integral = TerminalSpec::path_integral(0.0, 0.0, 1.0);
  CHECK(evaluate_terminal(integral, ramp_path(g), g) == doctest::Approx(0.5));

  auto asian = TerminalSpec::asian(lookup_payoff("identity"), lookup_payoff("identity"));
  CHECK(evaluate_terminal(asian, constant_path(g, 1.0), g) == doctest::Approx(1.0));
}

TEST_CASE("evaluate_terminal_malliavin closed forms")
{
  const TimeGrid g = build_time_grid(1.0, 100);
  const std::vector<double> path = ramp_path(g);

  auto affine = TerminalSpec::affine_gaussian(1.0, 2.0);
  CHECK(evaluate_terminal_malliavin(affine, path, g, 0.3) == doctest::Approx(2.0));

  auto integral = TerminalSpec::path_integral(0.0, 1.0, 2.0);
  CHECK(evaluate_terminal_malliavin(integral, path, g, 0.5) == doctest::Approx(2.0));

  CHECK_THROWS_AS(evaluate_terminal_malliavin(affine, path, g, -0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_terminal_malliavin(affine, path, g, 1.1),
                  std::invalid_argument);
}

TEST_CASE("lookback derivative vanishes past the argmax")
{
  const TimeGrid g = build_time_grid(1.0, 10);
  std::vector<double> path(g.n_steps + 1, 0.0);
  path[6] = 1.0; // unique max at s* = 0.6
  auto claim = TerminalSpec::lookback(lookup_payoff("identity"));
  CHECK(evaluate_terminal_malliavin(claim, path, g, 0.7) == 0.0);
  CHECK(evaluate_terminal_malliavin(claim, path, g, 0.5) == 1.0);
  CHECK(evaluate_terminal_malliavin(claim, path, g, 0.6) == 1.0);
}

TEST_CASE("lookback derivative integrates to f'(M_T) tau_T")
{
  const TimeGrid g = build_time_grid(2.0, 64);
  const PathEnsemble ens = simulate_brownian(g, 16, 99);
  auto claim = TerminalSpec::lookback(square_half());
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    const auto path = ens.w.row(p);
    const std::size_t k = argmax_index(path);
    double riemann = 0.0; // right endpoints: exact for the left-closed indicator
    for (std::size_t j = 1; j <= g.n_steps; ++j)
      riemann += evaluate_terminal_malliavin(claim, path, g, g.times[j]) * g.dt;
    CHECK(riemann == doctest::Approx(claim.f.d1(path[k]) * g.times[k]).epsilon(1e-10));
  }
}

TEST_CASE("path_integral reduces to affine_gaussian when gamma is zero")
{
  const TimeGrid g = build_time_grid(1.5, 37);
  const PathEnsemble ens = simulate_brownian(g, 8, 7);
  auto a = TerminalSpec::affine_gaussian(0.7, 1.3);
  auto b = TerminalSpec::path_integral(0.7, 1.3, 0.0);
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    const auto path = ens.w.row(p);
    CHECK(evaluate_terminal(a, path, g) == evaluate_terminal(b, path, g));
    CHECK(evaluate_terminal_malliavin(a, path, g, 0.4)
          == evaluate_terminal_malliavin(b, path, g, 0.4));
  }
}

TEST_CASE("terminal Malliavin derivative matches the shift difference quotient")
{
  // smooth asian claim: quotient (xi(w + eps h) - xi(w)) / eps vs int D_u xi hdot du
  const TimeGrid g = build_time_grid(1.0, 200);
  const PathEnsemble ens = simulate_brownian(g, 4, 2024);
  auto claim = TerminalSpec::asian(lookup_payoff("exp-neg"), lookup_payoff("square"));
  const CameronMartinDirection h{ [](double) { return 1.0; } };
  const double eps = 1e-6;
  const PathEnsemble shifted = shift_paths(ens, h, eps);
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    const double quotient = (evaluate_terminal(claim, shifted.w.row(p), g)
                             - evaluate_terminal(claim, ens.w.row(p), g))
                            / eps;
    std::vector<double> d(g.n_steps + 1);
    for (std::size_t j = 0; j <= g.n_steps; ++j)
      d[j] = evaluate_terminal_malliavin(claim, ens.w.row(p), g, g.times[j]);
    const double pairing = trapezoid(d, g.dt, 0, g.n_steps);
    CHECK(quotient == doctest::Approx(pairing).epsilon(2e-4));
  }
}

TEST_CASE("second Malliavin derivative of asian claims")
{
  const TimeGrid g = build_time_grid(1.0, 50);
  const std::vector<double> zero = constant_path(g, 0.0);

  auto flat = TerminalSpec::asian(lookup_payoff("identity"), lookup_payoff("identity"));
  CHECK(evaluate_terminal_second_malliavin(flat, zero, g, 0.2, 0.8) == 0.0);
  CHECK(evaluate_terminal_second_malliavin(flat, zero, g, 0.0, 0.0) == 0.0);

  auto quad = TerminalSpec::asian(square_half(), lookup_payoff("identity"));
  CHECK(evaluate_terminal_second_malliavin(quad, zero, g, 0.0, 0.0)
        == doctest::Approx(1.0));

  auto lb = TerminalSpec::lookback(lookup_payoff("identity"));
  CHECK_THROWS_AS(evaluate_terminal_second_malliavin(lb, zero, g, 0.1, 0.2),
                  std::domain_error);
}

TEST_CASE("second derivative agrees with the nested difference quotient")
{
  const TimeGrid g = build_time_grid(1.0, 100);
  const PathEnsemble ens = simulate_brownian(g, 1, 11);
  const auto path = ens.w.row(0);
  auto quad = TerminalSpec::asian(square_half(), lookup_payoff("identity"));

  // bilinear claim: nested quotient along (h, h) equals the double integral exactly
  const CameronMartinDirection h{ [](double) { return 1.0; } };
  const double eps = 1e-3;
  const auto up = shift_paths(ens, h, eps);
  const auto upup = shift_paths(up, h, eps);
  const double nested = (evaluate_terminal(quad, upup.w.row(0), g)
                         - 2.0 * evaluate_terminal(quad, up.w.row(0), g)
                         + evaluate_terminal(quad, path, g))
                        / (eps * eps);

  std::vector<double> inner(g.n_steps + 1);
  std::vector<double> outer(g.n_steps + 1);
  for (std::size_t ju = 0; ju <= g.n_steps; ++ju) {
    for (std::size_t jv = 0; jv <= g.n_steps; ++jv)
      inner[jv] =
          evaluate_terminal_second_malliavin(quad, path, g, g.times[ju], g.times[jv]);
    outer[ju] = trapezoid(inner, g.dt, 0, g.n_steps);
  }
  const double dbl = trapezoid(outer, g.dt, 0, g.n_steps);
  CHECK(nested == doctest::Approx(dbl).epsilon(1e-7));
}

TEST_CASE("payoff registry")
{
  const ScalarFunc put = lookup_payoff("put(1.5)");
  CHECK(put.value(1.0) == doctest::Approx(0.5));
  CHECK(put.value(2.0) == 0.0);
  CHECK(put.d1(1.0) == -1.0);
  CHECK(put.d1(2.0) == 0.0);

  const ScalarFunc call = lookup_payoff("call(0.5)");
  CHECK(call.value(1.0) == doctest::Approx(0.5));
  CHECK(call.d1(1.0) == 1.0);

  const ScalarFunc en = lookup_payoff("exp-neg");
  CHECK(en.value(0.0) == 1.0);
  CHECK(en.d1(0.0) == -1.0);
  CHECK(en.d2(0.0) == 1.0);

  CHECK_THROWS_AS(lookup_payoff("mystery"), std::invalid_argument);
}

TEST_CASE("trapezoid quadrature of the path integral is second order")
{
  // sensitivity of the int g(W) ds rule: on a smooth deterministic path the
  // error must shrink by ~4x per grid refinement
  auto claim = TerminalSpec::asian(lookup_payoff("identity"), lookup_payoff("exp-neg"));
  const double exact = 1.0 - std::exp(-1.0); // int_0^1 e^{-s} ds
  double prev_err = 0.0;
  for (std::size_t steps : { 8, 16, 32, 64 }) {
    const TimeGrid g = build_time_grid(1.0, steps);
    const double got = evaluate_terminal(claim, ramp_path(g), g);
    const double err = std::abs(got - exact);
    if (prev_err > 0.0)
      CHECK(err < 0.3 * prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 2e-5);
}

TEST_CASE("cameron-martin profile is the primitive of hdot")
{
  const TimeGrid g = build_time_grid(2.0, 8);
  const CameronMartinDirection unit{ [](double) { return 1.0; } };
  const auto h = unit.profile(g);
  for (std::size_t i = 0; i <= g.n_steps; ++i)
    CHECK(h[i] == doctest::Approx(g.times[i]));

  const CameronMartinDirection linear{ [](double t) { return t; } };
  const auto h2 = linear.profile(g);
  for (std::size_t i = 0; i <= g.n_steps; ++i)
    CHECK(h2[i] == doctest::Approx(0.5 * g.times[i] * g.times[i]));
}
