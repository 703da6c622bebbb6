#pragma once

#include "mcbsde/core.hpp"

namespace mcbsde {

//! Mean-reverting Gaussian short rate dr = a(b - r)dt + varpi dW.
struct VasicekParams {
  double a = 0.0;     // mean-reversion speed, >= 0
  double b = 0.0;     // long-run level
  double varpi = 0.0; // volatility, > 0
  double r0 = 0.0;

  void validate() const;
};

struct RatePaths {
  TimeGrid grid;
  Matrix r; // n_paths x (n_steps + 1), r(p, 0) = r0
};

//! Brownian ensemble with per-path substreams derived from (master_seed, path index),
//! so results do not depend on how paths are scheduled across workers.
PathEnsemble simulate_brownian(const TimeGrid& grid, std::size_t n_paths,
                               std::uint64_t master_seed);

//! Exact one-step Ornstein-Uhlenbeck recursion on the driving noise; the stochastic
//! integral increment uses the left endpoint so the same dW is shared with the
//! backward solvers.
RatePaths simulate_vasicek(const VasicekParams& params, const PathEnsemble& driving);

//! Ensemble shifted by eps * h, h the Cameron-Martin primitive of hdot.
PathEnsemble shift_paths(const PathEnsemble& ens, const CameronMartinDirection& h,
                         double eps);

} // namespace mcbsde
