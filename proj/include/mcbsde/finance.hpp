#pragma once

#include "mcbsde/bsde.hpp"
#include "mcbsde/core.hpp"
#include "mcbsde/sde.hpp"

#include <string>

namespace mcbsde {

//! Pricing problem dY = (r Y + theta Z) dt + Z dW, Y_T = xi, with a Vasicek rate
//! and a deterministic risk premium theta (a function of time only).
struct PricingSpec {
  VasicekParams vasicek;
  std::function<double(double)> theta;
  TerminalSpec claim;
};

//! Solves the pricing BSDE through the affine closed form with lambda = 0,
//! mu = -r pathwise and nu = -theta; the regression state is (W_t, r_t) plus the
//! claim's running statistic.
BsdeSolution price_claim(const PricingSpec& spec, const PathEnsemble& ens,
                         const SolverSettings& settings = {});

//! Z_t from the Clark-Ocone route:
//!   Z_t = E_t^Q[ D_t xi e^{-int_t^T r} - int_t^T varpi e^{-a(s-t)} Y_s e^{-int_t^s r} ds ],
//! the second term carrying D_t r_s = varpi e^{-a(s-t)}. Returns n_paths x n_steps.
Matrix clark_ocone_z(const PricingSpec& spec, const BsdeSolution& base,
                     const PathEnsemble& ens, const SolverSettings& settings = {});

enum class TriState { yes, no, indeterminate };

//! Outcome of one sign condition, with the density guarantees it carries.
struct ConditionReport {
  std::string id; // xi+, xi-, A1+, A2+, A1-, A2-, lb+, lb-, DZ-second-order
  TriState holds = TriState::no;
  std::string witness;
  bool y_density = false;            // guaranteed when holds == yes
  TriState z_density = TriState::no; // indeterminate = open (lookback case)
};

//! Evaluates the claim's sign conditions on the sample grid. Weak inequalities must
//! hold at every sampled point; strictness requires at least 1% of the points.
std::vector<ConditionReport> check_density_conditions(const TerminalSpec& claim,
                                                      const std::vector<double>& sample_grid);

//! Named entry points for the CLI; both delegate to evaluate_terminal.
std::vector<double> asian_payoff(const TerminalSpec& claim, const PathEnsemble& ens);
std::vector<double> lookback_payoff(const TerminalSpec& claim, const PathEnsemble& ens);

struct ArcsineReport {
  std::vector<double> taus; // sorted grid-argmax times over T
  double ks_distance = 0.0; // sup |ECDF - arcsine CDF|
  std::size_t n = 0;
};

//! CDF (2/pi) arcsin(sqrt(s)) of the Brownian argmax time over [0, 1].
double arcsine_cdf(double s);

//! Empirical law of the grid-argmax time against the arcsine law.
ArcsineReport arcsine_argmax_check(const PathEnsemble& ens);

//! Streaming variant: generates the same per-path substreams as simulate_brownian
//! without materializing the ensemble, so very fine grids stay in O(1) memory per
//! path. Bit-identical to the ensemble variant for equal (grid, n_paths, seed).
ArcsineReport arcsine_argmax_check(const TimeGrid& grid, std::size_t n_paths,
                                   std::uint64_t master_seed);

} // namespace mcbsde
