#include "mcbsde/gene.hpp"

#include "mcbsde/parallel.hpp"
#include "mcbsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcbsde {

namespace {
constexpr std::uint64_t ssa_stream_tag = 0x55a;
}

void GeneParams::validate() const
{
  if (!(a > 0.0))
    throw std::invalid_argument("GeneParams: a must be positive");
  if (R < 0.0 || rho < 0.0)
    throw std::invalid_argument("GeneParams: R and rho must be nonnegative");
}

void SsaParams::validate() const
{
  if (!(omega > 0.0))
    throw std::invalid_argument("SsaParams: omega must be positive");
  if (n0 < 0)
    throw std::invalid_argument("SsaParams: n0 must be nonnegative");
  if (!(t_max > 0.0) || n_runs < 1)
    throw std::invalid_argument("SsaParams: t_max and n_runs must be positive");
}

double hill_generator(double y, const GeneParams& p)
{
  return p.R * p.a * y * y / (1.0 + p.a * y * y) - p.rho * y;
}

GeneratorSpec gene_generator(const GeneParams& p)
{
  GeneratorSpec gen;
  gen.f = [p](double, double y, double) { return hill_generator(y, p); };
  gen.f_y = [p](double, double y, double) {
    const double q = 1.0 + p.a * y * y;
    return 2.0 * p.R * p.a * y / (q * q) - p.rho;
  };
  gen.f_z = [](double, double, double) { return 0.0; };
  return gen;
}

BsdeSolution solve_gene_bsde(const GeneParams& p, const PathEnsemble& ens,
                             const SolverSettings& settings)
{
  p.validate();
  if (p.terminal.kind != TerminalKind::affine_gaussian
      && p.terminal.kind != TerminalKind::path_integral)
    throw std::invalid_argument(
        "solve_gene_bsde: terminal must be affine_gaussian or path_integral");
  const std::vector<double> xi = evaluate_terminal_all(p.terminal, ens);
  const std::vector<Matrix> extra = claim_state_features(p.terminal, ens);
  FeatureList features;
  for (const Matrix& m : extra)
    features.push_back(&m);
  return solve_lsmc(gene_generator(p), xi, ens, settings, features);
}

std::pair<double, double> terminal_derivative_bounds(const TerminalSpec& spec,
                                                     double horizon)
{
  switch (spec.kind) {
    case TerminalKind::affine_gaussian:
      return { spec.sigma2, spec.sigma2 };
    case TerminalKind::path_integral:
      return { spec.beta, spec.beta + spec.gamma * horizon };
    default:
      throw std::invalid_argument(
          "terminal_derivative_bounds: no constant envelope for this variant");
  }
}

std::vector<DensitySlice> gene_density_slices(const GeneParams& p, const BsdeSolution& sol,
                                              const std::vector<double>& times,
                                              const PathEnsemble& ens, std::size_t bins)
{
  const auto [k_lo, k_hi] = terminal_derivative_bounds(p.terminal, ens.grid.horizon);
  const auto [c_hi, c_lo] = extremal_drift_constants(p.R, p.a, p.rho);
  std::vector<DensitySlice> out;
  for (double t : times) {
    if (!(t > 0.0))
      throw std::invalid_argument("gene_density_experiment: no density at t=0");
    const std::size_t idx = ens.grid.index_of(t);
    const std::vector<double> samples = sol.y.col(idx);
    DensitySlice slice;
    slice.t = t;
    const auto [mean, var] = sample_moments(samples);
    slice.mean = mean;
    slice.var = var;
    double absdev = 0.0;
    for (double y : samples)
      absdev += std::abs(y - mean);
    absdev /= static_cast<double>(samples.size());
    slice.c_y = 0.5 * absdev;
    slice.bounds = DensityBoundParams{ slice.c_y, k_lo,  k_hi, c_hi,
                                       c_lo,      t,     ens.grid.horizon, mean };
    const double sd = std::sqrt(var);
    slice.hist = histogram_density(samples, bins, mean - 4.0 * sd, mean + 4.0 * sd);
    slice.centers.resize(bins);
    slice.f_i.resize(bins);
    slice.f_s.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      slice.centers[b] = 0.5 * (slice.hist.edges[b] + slice.hist.edges[b + 1]);
      const DensityBounds db = gaussian_density_bounds(slice.bounds, slice.centers[b]);
      slice.f_i[b] = db.f_i;
      slice.f_s[b] = db.f_s;
    }
    out.push_back(std::move(slice));
  }
  return out;
}

std::vector<DensitySlice> gene_density_experiment(const GeneParams& p,
                                                  const std::vector<double>& times,
                                                  const PathEnsemble& ens,
                                                  std::size_t bins,
                                                  const SolverSettings& settings)
{
  for (double t : times)
    if (!(t > 0.0))
      throw std::invalid_argument("gene_density_experiment: no density at t=0");
  const BsdeSolution sol = solve_gene_bsde(p, ens, settings);
  return gene_density_slices(p, sol, times, ens, bins);
}

SsaResult gillespie_ssa(const GeneParams& p, const SsaParams& s, std::uint64_t seed,
                        std::vector<double> record_times)
{
  p.validate();
  s.validate();
  std::sort(record_times.begin(), record_times.end());
  SsaResult res;
  res.record_times = record_times;
  res.terminal.resize(s.n_runs);
  res.counts = Matrix(s.n_runs, record_times.size());
  parallel_for_blocks(s.n_runs, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t run = lo; run < hi; ++run) {
      NormalSampler rng(substream_seed(seed, run, ssa_stream_tag));
      double x = static_cast<double>(s.n0);
      double t = 0.0;
      std::size_t k = 0;
      while (true) {
        const double conc = x / s.omega;
        const double birth = s.omega * p.R * p.a * conc * conc / (1.0 + p.a * conc * conc);
        const double death = p.rho * x;
        const double total = birth + death;
        double t_next = s.t_max;
        if (total > 0.0)
          t_next = t - std::log(rng.uniform()) / total;
        while (k < record_times.size() && record_times[k] < std::min(t_next, s.t_max)) {
          res.counts(run, k) = x;
          ++k;
        }
        if (total <= 0.0 || t_next >= s.t_max)
          break; // absorbed, or no further jump before the horizon
        t = t_next;
        if (rng.uniform() * total < birth)
          x += 1.0;
        else
          x -= 1.0;
      }
      while (k < record_times.size()) {
        res.counts(run, k) = x;
        ++k;
      }
      res.terminal[run] = x;
    }
  });
  return res;
}

} // namespace mcbsde
