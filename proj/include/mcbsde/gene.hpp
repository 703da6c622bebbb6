#pragma once

#include "mcbsde/bsde.hpp"
#include "mcbsde/malliavin.hpp"
#include "mcbsde/stats.hpp"

#include <cstdint>

namespace mcbsde {

//! Hill-generator protein model: dY drift R a y^2 / (1 + a y^2) - rho y.
struct GeneParams {
  double R = 0.0;   // activation rate, >= 0
  double a = 1.0;   // Hill scale, > 0
  double rho = 0.0; // degradation rate, >= 0
  TerminalSpec terminal;

  void validate() const;
};

double hill_generator(double y, const GeneParams& p);

//! GeneratorSpec wrapper for the Hill drift (f_z identically zero).
GeneratorSpec gene_generator(const GeneParams& p);

//! Backward solve of the protein model via LSMC; terminal variant must be
//! affine_gaussian or path_integral.
BsdeSolution solve_gene_bsde(const GeneParams& p, const PathEnsemble& ens,
                             const SolverSettings& settings = {});

//! (k_lo, k_hi) envelope of D_u xi for the supported terminal variants:
//! affine_gaussian -> (sigma2, sigma2); path_integral -> (beta, beta + gamma T).
std::pair<double, double> terminal_derivative_bounds(const TerminalSpec& spec,
                                                     double horizon);

//! One evaluation time of the density-sandwich experiment.
struct DensitySlice {
  double t = 0.0;
  double mean = 0.0;
  double var = 0.0;
  double c_y = 0.0;
  DensityBoundParams bounds;
  HistogramDensity hist;
  std::vector<double> centers;
  std::vector<double> f_i;
  std::vector<double> f_s;
};

//! Histogram of Y_t against the Gaussian sandwich for each requested time (times
//! must be positive grid points; there is no density at t = 0).
std::vector<DensitySlice> gene_density_experiment(const GeneParams& p,
                                                  const std::vector<double>& times,
                                                  const PathEnsemble& ens,
                                                  std::size_t bins,
                                                  const SolverSettings& settings = {});

//! Same, reusing an already-computed solution on the ensemble.
std::vector<DensitySlice> gene_density_slices(const GeneParams& p,
                                              const BsdeSolution& sol,
                                              const std::vector<double>& times,
                                              const PathEnsemble& ens, std::size_t bins);

//! Birth-death chain whose large-volume fluid limit has the Hill drift:
//! birth at Omega R a (n/Omega)^2 / (1 + a (n/Omega)^2), death at rho n.
struct SsaParams {
  double omega = 1.0; // volume scale, > 0
  long n0 = 0;        // initial copy number, >= 0
  double t_max = 1.0;
  std::size_t n_runs = 1;

  void validate() const;
};

struct SsaResult {
  std::vector<double> terminal; // copy number at t_max per run
  std::vector<double> record_times;
  Matrix counts; // n_runs x record_times.size()
};

SsaResult gillespie_ssa(const GeneParams& p, const SsaParams& s, std::uint64_t seed,
                        std::vector<double> record_times = {});

} // namespace mcbsde
