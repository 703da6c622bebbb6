#pragma once

#include "mcbsde/core.hpp"

#include <functional>

namespace mcbsde {

//! Coefficient process with broadcast semantics: a scalar constant, a per-time
//! vector, or a full per-path-per-time matrix.
class Coeff {
public:
  Coeff() = default;
  Coeff(double v) : kind_(Kind::constant), value_(v) {}

  static Coeff of_time(std::vector<double> per_time)
  {
    Coeff c;
    c.kind_ = Kind::per_time;
    c.per_time_ = std::move(per_time);
    return c;
  }
  static Coeff of_path_time(Matrix values)
  {
    Coeff c;
    c.kind_ = Kind::per_path_time;
    c.per_path_time_ = std::move(values);
    return c;
  }

  double operator()(std::size_t path, std::size_t step) const
  {
    switch (kind_) {
      case Kind::constant: return value_;
      case Kind::per_time: return per_time_[step];
      case Kind::per_path_time: return per_path_time_(path, step);
    }
    return 0.0;
  }

  bool deterministic() const { return kind_ != Kind::per_path_time; }
  bool is_zero() const { return kind_ == Kind::constant && value_ == 0.0; }

  void check(std::size_t n_paths, std::size_t n_times, const char* what) const;

private:
  enum class Kind { constant, per_time, per_path_time };
  Kind kind_ = Kind::constant;
  double value_ = 0.0;
  std::vector<double> per_time_;
  Matrix per_path_time_;
};

//! Generator f(t,y,z) = lambda_t + mu_t y + nu_t z.
struct AffineCoeffs {
  Coeff lambda;
  Coeff mu;
  Coeff nu;
};

//! General generator with caller-supplied partials (spot-checked in tests by
//! finite differences, not recomputed here).
struct GeneratorSpec {
  std::function<double(double t, double y, double z)> f;
  std::function<double(double t, double y, double z)> f_y;
  std::function<double(double t, double y, double z)> f_z;
};

struct BsdeSolution {
  Matrix y; // n_paths x (n_steps + 1); terminal column equals xi bit-exactly
  Matrix z; // n_paths x n_steps
  double y0 = 0.0;
  double y0_stderr = 0.0;
  // per grid time, the spread of the Y-regression residuals; the Monte Carlo
  // scale against which pathwise statements about fitted values are judged
  std::vector<double> residual_scale;
};

struct SolverSettings {
  std::size_t basis_degree = 3;
  int n_picard = 1;
};

//! Extra per-path regression state beyond W_t (running integrals, rates, ...).
//! Each matrix must be n_paths x (n_steps + 1); pointers are borrowed.
using FeatureList = std::vector<const Matrix*>;

//! Ordinary least squares of values on a polynomial basis in state (degree >= 1,
//! intercept included); returns the fitted values.
std::vector<double> conditional_regress(const std::vector<double>& values,
                                        const std::vector<double>& state,
                                        std::size_t degree);

//! Closed-form affine solve: Y_t as the Girsanov-weighted conditional expectation
//!   Y_t = E_t^Q[ xi e^{int_t^T mu ds} + int_t^T lambda_s e^{int_t^s mu} ds ],
//! with dQ/dP the stochastic exponential of int nu dW. Conditional expectations are
//! realized by regression on the state basis; at t = 0 by the plain weighted mean.
//! Z comes from the regression Z_t = E[Y_{t+dt} dW | state] / dt.
BsdeSolution solve_affine(const AffineCoeffs& coeffs, const std::vector<double>& xi,
                          const PathEnsemble& ens, const SolverSettings& settings = {},
                          const FeatureList& extra_state = {});

//! Least-squares Monte Carlo backward recursion for a general generator:
//!   Z_i = Regress(Y_{i+1} dW_i | basis) / dt,
//!   Y_i = Regress(Y_{i+1} | basis) + f(t_i, Yhat, Z_i) dt,
//! Yhat iterated n_picard times as a fixed point in y.
BsdeSolution solve_lsmc(const GeneratorSpec& gen, const std::vector<double>& xi,
                        const PathEnsemble& ens, const SolverSettings& settings = {},
                        const FeatureList& extra_state = {});

//! Running trapezoid integral of g(W) along each path (state feature for asian and
//! path-integral claims).
Matrix running_integral(const PathEnsemble& ens, const std::function<double(double)>& g);

//! Running maximum of W along each path (state feature for lookback claims).
Matrix running_max(const PathEnsemble& ens);

//! State features the claim's terminal condition needs beyond W_t.
std::vector<Matrix> claim_state_features(const TerminalSpec& spec, const PathEnsemble& ens);

namespace detail {

//! Backbone shared by solve_affine and the Malliavin-derivative solve: conditional
//! expectations of the weighted discounted payoff at every grid time.
BsdeSolution girsanov_conditional_solve(const Coeff& lambda, const Coeff& mu,
                                        const Coeff& nu, const std::vector<double>& xi,
                                        const PathEnsemble& ens,
                                        const SolverSettings& settings,
                                        const FeatureList& extra_state);

//! Conditional Girsanov weights from t_i to T for every step, renormalized to unit
//! sample mean: column i holds exp(sum_{k>=i} nu dW - nu^2 dt / 2).
Matrix conditional_weights(const Coeff& nu, const PathEnsemble& ens);

//! Least squares on the step-i state basis; falls back to the plain mean when the
//! state is degenerate at t = 0.
std::vector<double> regress_step(const std::vector<double>& targets,
                                 const PathEnsemble& ens, const FeatureList& extra_state,
                                 std::size_t step, std::size_t degree);

} // namespace detail

} // namespace mcbsde
