#include "mcbsde/malliavin.hpp"

#include "mcbsde/sde.hpp"

#include <cmath>
#include <stdexcept>

namespace mcbsde {

void DensityBoundParams::validate() const
{
  if (!(k_lo > 0.0))
    throw std::invalid_argument("DensityBoundParams: k_lo must be positive");
  if (k_hi < k_lo)
    throw std::invalid_argument("DensityBoundParams: k_hi must be >= k_lo");
  if (c_lo > c_hi)
    throw std::invalid_argument("DensityBoundParams: c_lo must be <= c_hi");
  if (!(t > 0.0) || t > horizon)
    throw std::invalid_argument("DensityBoundParams: t must lie in (0, T]");
}

std::pair<double, double> extremal_drift_constants(double R, double a, double rho)
{
  if (!(a > 0.0))
    throw std::invalid_argument("extremal_drift_constants: a must be positive");
  if (R < 0.0)
    throw std::invalid_argument("extremal_drift_constants: R must be nonnegative");
  const double peak = 1.125 * R * std::sqrt(a / 3.0);
  return { peak - rho, -peak - rho };
}

std::pair<double, double> gene_derivative_bounds(double R, double a, double rho,
                                                 double k_lo, double k_hi, double t,
                                                 double horizon)
{
  if (!(k_lo > 0.0))
    throw std::invalid_argument(
        "gene_derivative_bounds: k_lo must be positive (density hypothesis)");
  if (k_hi < k_lo)
    throw std::invalid_argument("gene_derivative_bounds: k_hi must be >= k_lo");
  const auto [c_hi, c_lo] = extremal_drift_constants(R, a, rho);
  const double gap = horizon - t;
  return { k_lo * std::exp(c_lo * gap), k_hi * std::exp(c_hi * gap) };
}

DensityBounds gaussian_density_bounds(const DensityBoundParams& p, double x)
{
  p.validate();
  const double gap = p.horizon - p.t;
  const double dev = x - p.mean;
  DensityBounds b;
  b.f_i = p.c_y / (p.k_hi * p.k_hi * p.t) * std::exp(-2.0 * p.c_hi * gap)
          * std::exp(-std::exp(-2.0 * p.c_lo * gap) * dev * dev
                     / (2.0 * p.k_lo * p.k_lo * p.t));
  b.f_s = p.c_y / (p.k_lo * p.k_lo * p.t) * std::exp(-2.0 * p.c_lo * gap)
          * std::exp(-std::exp(-2.0 * p.c_hi * gap) * dev * dev
                     / (2.0 * p.k_hi * p.k_hi * p.t));
  return b;
}

namespace {

double checked_g(const std::function<double(double)>& g, double u)
{
  const double v = g(u);
  if (!(v > 0.0))
    throw std::domain_error("nv_density: g(" + std::to_string(u)
                            + ") is not positive; the density criterion fails");
  return v;
}

double adaptive_trapezoid(const std::function<double(double)>& f, double a, double b,
                          double fa, double fb, double rel_tol, int depth)
{
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double coarse = 0.5 * (fa + fb) * (b - a);
  const double fine = 0.25 * (fa + 2.0 * fm + fb) * (b - a);
  if (depth <= 0 || std::abs(fine - coarse) <= rel_tol * std::abs(fine) + 1e-300)
    return fine + (fine - coarse) / 3.0;
  return adaptive_trapezoid(f, a, m, fa, fm, rel_tol, depth - 1)
         + adaptive_trapezoid(f, m, b, fm, fb, rel_tol, depth - 1);
}

} // namespace

double nv_density(const std::function<double(double)>& g, double absdev, double x)
{
  if (!g)
    throw std::invalid_argument("nv_density: g is empty");
  const double gx = checked_g(g, x);
  const auto integrand = [&g](double u) { return u / checked_g(g, u); };
  double integral = 0.0;
  if (x != 0.0) {
    const double lo = std::min(0.0, x);
    const double hi = std::max(0.0, x);
    const double v =
        adaptive_trapezoid(integrand, lo, hi, integrand(lo), integrand(hi), 1e-8, 48);
    integral = x > 0.0 ? v : -v;
  }
  return absdev / (2.0 * gx) * std::exp(-integral);
}

MalliavinSlice derivative_bsde_affine(const AffineCoeffs& coeffs, const BsdeSolution& base,
                                      const std::vector<double>& dxi,
                                      const MalliavinCoeffDerivs& dcoeffs, double u,
                                      const PathEnsemble& ens,
                                      const SolverSettings& settings,
                                      const FeatureList& extra_state)
{
  const std::size_t n = ens.grid.n_steps;
  const std::size_t N = ens.n_paths;
  base.y.require_shape(N, n + 1, "derivative_bsde_affine base");
  if (dxi.size() != N)
    throw std::invalid_argument("derivative_bsde_affine: dxi does not conform");
  const std::size_t u_index = ens.grid.index_of(u);

  Coeff source{ 0.0 };
  if (!(dcoeffs.dlambda.is_zero() && dcoeffs.dmu.is_zero() && dcoeffs.dnu.is_zero())) {
    dcoeffs.dlambda.check(N, n + 1, "derivative_bsde_affine dlambda");
    dcoeffs.dmu.check(N, n + 1, "derivative_bsde_affine dmu");
    dcoeffs.dnu.check(N, n + 1, "derivative_bsde_affine dnu");
    Matrix src(N, n + 1, 0.0);
    for (std::size_t p = 0; p < N; ++p)
      for (std::size_t i = 0; i < n; ++i)
        src(p, i) = dcoeffs.dlambda(p, i) + dcoeffs.dmu(p, i) * base.y(p, i)
                    + dcoeffs.dnu(p, i) * base.z(p, i);
    source = Coeff::of_path_time(std::move(src));
  }

  const BsdeSolution sol = detail::girsanov_conditional_solve(
      source, coeffs.mu, coeffs.nu, dxi, ens, settings, extra_state);

  MalliavinSlice slice;
  slice.u = u;
  slice.dy_ext = sol.y;
  slice.dz = sol.z;
  slice.dy = sol.y;
  for (std::size_t p = 0; p < N; ++p)
    for (std::size_t i = 0; i < u_index; ++i)
      slice.dy(p, i) = 0.0;
  return slice;
}

Matrix fd_quotient(const std::function<BsdeSolution(const PathEnsemble&)>& solve,
                   const PathEnsemble& ens, const CameronMartinDirection& h, double eps)
{
  if (eps == 0.0)
    throw std::invalid_argument("fd_quotient: eps must be nonzero");
  const BsdeSolution base = solve(ens);
  const BsdeSolution bumped = solve(shift_paths(ens, h, eps));
  Matrix out(base.y.rows(), base.y.cols());
  for (std::size_t p = 0; p < out.rows(); ++p)
    for (std::size_t i = 0; i < out.cols(); ++i)
      out(p, i) = (bumped.y(p, i) - base.y(p, i)) / eps;
  return out;
}

} // namespace mcbsde
