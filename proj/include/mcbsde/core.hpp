#pragma once

#include "mcbsde/matrix.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mcbsde {

//! Uniform discretization of [0, T].
struct TimeGrid {
  double horizon = 0.0;
  std::size_t n_steps = 0;
  double dt = 0.0;
  std::vector<double> times; // n_steps + 1 points, times[0] = 0, times[n_steps] = T

  //! Index of the grid point closest to t; throws if t is not on the grid.
  std::size_t index_of(double t, double tol = 1e-9) const;
};

TimeGrid build_time_grid(double horizon, std::size_t n_steps);

//! Seeded matrix of Brownian paths; a pure function of (grid, n_paths, master_seed).
struct PathEnsemble {
  TimeGrid grid;
  std::size_t n_paths = 0;
  Matrix w; // n_paths x (n_steps + 1), w(p, 0) = 0
  std::uint64_t master_seed = 0;
};

//! Scalar map together with caller-supplied first and second derivatives.
struct ScalarFunc {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::string name; // registry name when constructed by lookup, else empty
};

//! Named payoff registry used by the CLI config: "identity", "exp-neg", "square",
//! "put(K)", "call(K)".
ScalarFunc lookup_payoff(const std::string& name);

enum class TerminalKind { affine_gaussian, path_integral, asian, lookback };

//! Contingent claim on the Brownian path, with enough structure to evaluate its
//! pathwise Malliavin derivatives:
//!   affine_gaussian: c + sigma2 * W_T
//!   path_integral:   alpha + beta * W_T + gamma * int_0^T W_s ds
//!   asian:           f(int_0^T g(W_s) ds)
//!   lookback:        f(max_{s<=T} W_s)
struct TerminalSpec {
  TerminalKind kind = TerminalKind::affine_gaussian;
  double c = 0.0;
  double sigma2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  ScalarFunc f;
  ScalarFunc g;

  static TerminalSpec affine_gaussian(double c, double sigma2);
  static TerminalSpec path_integral(double alpha, double beta, double gamma);
  static TerminalSpec asian(ScalarFunc f, ScalarFunc g);
  static TerminalSpec lookback(ScalarFunc f);
};

//! Cameron-Martin shift direction, given through its density hdot.
struct CameronMartinDirection {
  std::function<double(double)> hdot;

  //! h(t_i) = int_0^{t_i} hdot, trapezoid on the grid. Throws if int hdot^2 diverges.
  std::vector<double> profile(const TimeGrid& grid) const;
};

//! Trapezoid quadrature of the grid samples v over [t_a, t_b] (grid indices).
double trapezoid(std::span<const double> values, double dt, std::size_t a, std::size_t b);

//! First grid index attaining the path maximum (ties resolved to the first index).
std::size_t argmax_index(std::span<const double> path);

double evaluate_terminal(const TerminalSpec& spec, std::span<const double> path,
                         const TimeGrid& grid);

//! D_u xi along one path:
//!   affine_gaussian: sigma2
//!   path_integral:   beta + gamma * (T - u)
//!   asian:           f'(I) * int_u^T g'(W_s) ds,  I = int_0^T g(W_s) ds
//!   lookback:        f'(M_T) * 1_{u <= tau_T},    tau_T the grid argmax time
double evaluate_terminal_malliavin(const TerminalSpec& spec, std::span<const double> path,
                                   const TimeGrid& grid, double u);

//! D_v(D_u xi); defined for the asian variant only.
double evaluate_terminal_second_malliavin(const TerminalSpec& spec,
                                          std::span<const double> path,
                                          const TimeGrid& grid, double u, double v);

//! Evaluates the claim on every row of the ensemble.
std::vector<double> evaluate_terminal_all(const TerminalSpec& spec,
                                          const PathEnsemble& ens);

} // namespace mcbsde
