#pragma once

#include "mcbsde/bsde.hpp"
#include "mcbsde/core.hpp"

namespace mcbsde {

//! Constants of the Gaussian density sandwich at a fixed time t.
struct DensityBoundParams {
  double c_y = 0.0;  // E|Y_t - E[Y_t]| / 2
  double k_lo = 0.0; // lower bound on D_u xi, > 0
  double k_hi = 0.0; // upper bound on D_u xi, >= k_lo
  double c_hi = 0.0; // largest drift-linearization constant
  double c_lo = 0.0; // smallest drift-linearization constant
  double t = 0.0;    // in (0, T]
  double horizon = 0.0;
  double mean = 0.0; // E[Y_t]

  void validate() const;
};

struct DensityBounds {
  double f_i = 0.0; // pointwise lower bound on the density
  double f_s = 0.0; // pointwise upper bound
};

//! Malliavin derivative of a BSDE solution in the direction of time u.
//! dy(p, i) holds D_u Y_{t_i}, set to 0 for t_i < u by convention. dy_ext keeps the
//! affine-BSDE continuation on the whole grid; the shift-based difference quotient
//! differentiates the solve map, and that map's derivative integrates the
//! continuation over all u, so the FD oracle checks against dy_ext.
struct MalliavinSlice {
  double u = 0.0;
  Matrix dy;
  Matrix dy_ext;
  Matrix dz; // regression D_u Z, n_paths x n_steps
};

//! Malliavin derivatives of the generator coefficients at direction time u.
struct MalliavinCoeffDerivs {
  Coeff dlambda{ 0.0 };
  Coeff dmu{ 0.0 };
  Coeff dnu{ 0.0 };
};

//! Solves the derivative BSDE of an affine equation in closed form:
//!   D_u Y_t = E_t^Q[ D_u xi e^{int_t^T mu}
//!                    + int_t^T (D_u lambda + D_u mu Y_s + D_u nu Z_s) e^{int_t^s mu} ds ].
MalliavinSlice derivative_bsde_affine(const AffineCoeffs& coeffs, const BsdeSolution& base,
                                      const std::vector<double>& dxi,
                                      const MalliavinCoeffDerivs& dcoeffs, double u,
                                      const PathEnsemble& ens,
                                      const SolverSettings& settings = {},
                                      const FeatureList& extra_state = {});

//! (c_hi, c_lo): extrema of y -> 2Ra y / (1 + a y^2)^2 - rho, in closed form.
std::pair<double, double> extremal_drift_constants(double R, double a, double rho);

//! (lo, hi) with lo = k_lo e^{c_lo (T-t)}, hi = k_hi e^{c_hi (T-t)}; the pathwise
//! envelope of D_u Y_t in the Hill-generator model.
std::pair<double, double> gene_derivative_bounds(double R, double a, double rho,
                                                 double k_lo, double k_hi, double t,
                                                 double horizon);

//! Evaluates the sandwich pair (f_i, f_s) at x.
DensityBounds gaussian_density_bounds(const DensityBoundParams& p, double x);

//! Density at the centered point x from the exact formula
//!   rho(x) = absdev / (2 g(x)) exp(-int_0^x u / g(u) du),
//! with adaptive trapezoid quadrature (relative tolerance 1e-8). Throws when g is
//! not positive on the integration range.
double nv_density(const std::function<double(double)>& g, double absdev, double x);

//! Difference quotient of the solve map: re-runs the solver on the shifted ensemble
//! and returns (Y^eps - Y) / eps for every path and grid time.
Matrix fd_quotient(const std::function<BsdeSolution(const PathEnsemble&)>& solve,
                   const PathEnsemble& ens, const CameronMartinDirection& h, double eps);

} // namespace mcbsde
