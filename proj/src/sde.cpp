#include "mcbsde/sde.hpp"

#include "mcbsde/parallel.hpp"
#include "mcbsde/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mcbsde {

void VasicekParams::validate() const
{
  if (a < 0.0)
    throw std::invalid_argument("VasicekParams: mean-reversion speed must be >= 0");
  if (!(varpi > 0.0))
    throw std::invalid_argument("VasicekParams: volatility must be > 0");
}

PathEnsemble simulate_brownian(const TimeGrid& grid, std::size_t n_paths,
                               std::uint64_t master_seed)
{
  if (n_paths < 1)
    throw std::invalid_argument("simulate_brownian: n_paths must be positive");
  PathEnsemble ens;
  ens.grid = grid;
  ens.n_paths = n_paths;
  ens.master_seed = master_seed;
  ens.w = Matrix(n_paths, grid.n_steps + 1);
  const double sdt = std::sqrt(grid.dt);
  parallel_for_blocks(n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      NormalSampler rng(substream_seed(master_seed, p));
      auto row = ens.w.row(p);
      row[0] = 0.0;
      for (std::size_t i = 0; i < grid.n_steps; ++i)
        row[i + 1] = row[i] + sdt * rng.normal();
    }
  });
  return ens;
}

RatePaths simulate_vasicek(const VasicekParams& params, const PathEnsemble& driving)
{
  params.validate();
  const TimeGrid& grid = driving.grid;
  driving.w.require_shape(driving.n_paths, grid.n_steps + 1, "simulate_vasicek");
  RatePaths out;
  out.grid = grid;
  out.r = Matrix(driving.n_paths, grid.n_steps + 1);
  const double decay = std::exp(-params.a * grid.dt);
  const double pull = params.b * (1.0 - decay);
  parallel_for_blocks(driving.n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      auto w = driving.w.row(p);
      auto r = out.r.row(p);
      r[0] = params.r0;
      for (std::size_t i = 0; i < grid.n_steps; ++i)
        r[i + 1] = r[i] * decay + pull + params.varpi * decay * (w[i + 1] - w[i]);
    }
  });
  return out;
}

PathEnsemble shift_paths(const PathEnsemble& ens, const CameronMartinDirection& h,
                         double eps)
{
  const std::vector<double> profile = h.profile(ens.grid);
  PathEnsemble out = ens;
  parallel_for_blocks(ens.n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      auto row = out.w.row(p);
      for (std::size_t i = 0; i <= ens.grid.n_steps; ++i)
        row[i] += eps * profile[i];
    }
  });
  return out;
}

} // namespace mcbsde
