#include "mcbsde/finance.hpp"

#include "mcbsde/parallel.hpp"
#include "mcbsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcbsde {

namespace {

Coeff negated_rate_coeff(const RatePaths& rates)
{
  Matrix neg = rates.r;
  for (double& v : neg.data())
    v = -v;
  return Coeff::of_path_time(std::move(neg));
}

Coeff negated_theta_coeff(const PricingSpec& spec, const TimeGrid& grid)
{
  if (!spec.theta)
    throw std::invalid_argument("PricingSpec: theta is empty");
  std::vector<double> nu(grid.n_steps + 1);
  for (std::size_t i = 0; i <= grid.n_steps; ++i)
    nu[i] = -spec.theta(grid.times[i]);
  return Coeff::of_time(std::move(nu));
}

} // namespace

BsdeSolution price_claim(const PricingSpec& spec, const PathEnsemble& ens,
                         const SolverSettings& settings)
{
  spec.vasicek.validate();
  const RatePaths rates = simulate_vasicek(spec.vasicek, ens);
  const std::vector<double> xi = evaluate_terminal_all(spec.claim, ens);
  AffineCoeffs coeffs;
  coeffs.lambda = Coeff(0.0);
  coeffs.mu = negated_rate_coeff(rates);
  coeffs.nu = negated_theta_coeff(spec, ens.grid);
  std::vector<Matrix> extra = claim_state_features(spec.claim, ens);
  FeatureList features;
  features.push_back(&rates.r);
  for (const Matrix& m : extra)
    features.push_back(&m);
  return solve_affine(coeffs, xi, ens, settings, features);
}

Matrix clark_ocone_z(const PricingSpec& spec, const BsdeSolution& base,
                     const PathEnsemble& ens, const SolverSettings& settings)
{
  spec.vasicek.validate();
  const std::size_t n = ens.grid.n_steps;
  const std::size_t N = ens.n_paths;
  const double dt = ens.grid.dt;
  base.y.require_shape(N, n + 1, "clark_ocone_z base");
  const RatePaths rates = simulate_vasicek(spec.vasicek, ens);
  const Coeff nu = negated_theta_coeff(spec, ens.grid);
  const Matrix weights = detail::conditional_weights(nu, ens);

  // log discount prefix: ps(p, i) = -sum_{j<i} r_j dt
  Matrix ps(N, n + 1, 0.0);
  for (std::size_t p = 0; p < N; ++p)
    for (std::size_t i = 0; i < n; ++i)
      ps(p, i + 1) = ps(p, i) - rates.r(p, i) * dt;

  // suffix(p, i) = sum_{k>=i} varpi e^{-a t_k} Y_k e^{ps_k} dt, the D_t r channel
  Matrix suffix(N, n + 1, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    double acc = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      acc += spec.vasicek.varpi * std::exp(-spec.vasicek.a * ens.grid.times[k])
             * base.y(p, k) * std::exp(ps(p, k)) * dt;
      suffix(p, k) = acc;
    }
  }

  Matrix z(N, n);
  const std::vector<Matrix> extra = claim_state_features(spec.claim, ens);
  FeatureList features;
  features.push_back(&rates.r);
  for (const Matrix& m : extra)
    features.push_back(&m);

  std::vector<double> target(N);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = ens.grid.times[i];
    for (std::size_t p = 0; p < N; ++p) {
      const double dclaim =
          evaluate_terminal_malliavin(spec.claim, ens.w.row(p), ens.grid, t);
      const double disc = std::exp(ps(p, n) - ps(p, i));
      const double rate_term =
          std::exp(spec.vasicek.a * t - ps(p, i)) * suffix(p, i);
      target[p] = (dclaim * disc - rate_term) * weights(p, i);
    }
    const std::vector<double> fitted =
        detail::regress_step(target, ens, features, i, settings.basis_degree);
    for (std::size_t p = 0; p < N; ++p)
      z(p, i) = fitted[p];
  }
  return z;
}

std::vector<double> asian_payoff(const TerminalSpec& claim, const PathEnsemble& ens)
{
  if (claim.kind != TerminalKind::asian)
    throw std::invalid_argument("asian_payoff: claim is not an asian terminal");
  return evaluate_terminal_all(claim, ens);
}

std::vector<double> lookback_payoff(const TerminalSpec& claim, const PathEnsemble& ens)
{
  if (claim.kind != TerminalKind::lookback)
    throw std::invalid_argument("lookback_payoff: claim is not a lookback terminal");
  return evaluate_terminal_all(claim, ens);
}

namespace {

struct SignSummary {
  bool nonneg = true;
  bool nonpos = true;
  std::size_t strict_pos = 0;
  std::size_t strict_neg = 0;
  std::size_t total = 0;
};

SignSummary summarize(const std::function<double(double)>& fn,
                      const std::vector<double>& grid)
{
  SignSummary s;
  s.total = grid.size();
  for (double x : grid) {
    const double v = fn(x);
    if (v < 0.0)
      s.nonneg = false;
    if (v > 0.0)
      s.nonpos = false;
    if (v > 0.0)
      ++s.strict_pos;
    if (v < 0.0)
      ++s.strict_neg;
  }
  return s;
}

bool strict_enough(std::size_t count, std::size_t total)
{
  return count >= 1 && 100 * count >= total;
}

std::string strict_witness(std::size_t count, std::size_t total)
{
  return "strict at " + std::to_string(count) + " of " + std::to_string(total)
         + " sample points";
}

ConditionReport report_no(std::string id, std::string why)
{
  ConditionReport r;
  r.id = std::move(id);
  r.holds = TriState::no;
  r.witness = std::move(why);
  return r;
}

} // namespace

std::vector<ConditionReport> check_density_conditions(const TerminalSpec& claim,
                                                      const std::vector<double>& sample_grid)
{
  if (sample_grid.empty())
    throw std::invalid_argument("check_density_conditions: empty sample grid");
  std::vector<ConditionReport> out;

  if (claim.kind == TerminalKind::affine_gaussian
      || claim.kind == TerminalKind::path_integral) {
    const bool degenerate = claim.kind == TerminalKind::affine_gaussian
                                ? claim.sigma2 == 0.0
                                : (claim.beta == 0.0 && claim.gamma == 0.0);
    const std::string why = degenerate
                                ? "claim is deterministic; no strict set exists"
                                : "claim is Gaussian with full support; xi changes sign";
    out.push_back(report_no("xi+", why));
    out.push_back(report_no("xi-", why));
    return out;
  }

  if (claim.kind == TerminalKind::lookback) {
    if (!claim.f.value || !claim.f.d1) {
      ConditionReport r;
      r.id = "lb+";
      r.holds = TriState::indeterminate;
      r.witness = "payoff derivative not supplied";
      out.push_back(r);
      r.id = "lb-";
      out.push_back(r);
      return out;
    }
    const SignSummary f = summarize(claim.f.value, sample_grid);
    const SignSummary f1 = summarize(claim.f.d1, sample_grid);

    ConditionReport lbp;
    lbp.id = "lb+";
    const bool plus = f.nonneg && f1.nonpos && strict_enough(f1.strict_neg, f1.total);
    lbp.holds = plus ? TriState::yes : TriState::no;
    lbp.witness = plus ? strict_witness(f1.strict_neg, f1.total)
                       : "requires f >= 0 and f' <= 0 with a strict set";
    lbp.y_density = plus;
    lbp.z_density = plus ? TriState::indeterminate : TriState::no;
    out.push_back(lbp);

    ConditionReport lbm;
    lbm.id = "lb-";
    const bool minus = f.nonpos && f1.nonneg && strict_enough(f1.strict_pos, f1.total);
    lbm.holds = minus ? TriState::yes : TriState::no;
    lbm.witness = minus ? strict_witness(f1.strict_pos, f1.total)
                        : "requires f <= 0 and f' >= 0 with a strict set";
    lbm.y_density = minus;
    lbm.z_density = minus ? TriState::indeterminate : TriState::no;
    out.push_back(lbm);

    ConditionReport xp;
    xp.id = "xi+";
    xp.holds = lbp.holds;
    xp.witness = lbp.witness;
    xp.y_density = lbp.y_density;
    xp.z_density = lbp.z_density;
    out.push_back(xp);

    ConditionReport xm = lbm;
    xm.id = "xi-";
    out.push_back(xm);

    ConditionReport dz;
    dz.id = "DZ-second-order";
    dz.holds = TriState::indeterminate;
    dz.witness = "running maximum is not twice Malliavin differentiable";
    dz.z_density = TriState::indeterminate;
    out.push_back(dz);
    return out;
  }

  // asian claim: sign tables on f, f', f'', g', g''
  if (!claim.f.value || !claim.f.d1 || !claim.g.d1) {
    ConditionReport r;
    r.id = "xi+";
    r.holds = TriState::indeterminate;
    r.witness = "payoff derivatives not supplied";
    out.push_back(r);
    return out;
  }
  const bool have_second = static_cast<bool>(claim.f.d2) && static_cast<bool>(claim.g.d2);
  const SignSummary f = summarize(claim.f.value, sample_grid);
  const SignSummary f1 = summarize(claim.f.d1, sample_grid);
  const SignSummary g1 = summarize(claim.g.d1, sample_grid);
  SignSummary f2, g2;
  if (have_second) {
    f2 = summarize(claim.f.d2, sample_grid);
    g2 = summarize(claim.g.d2, sample_grid);
  }

  struct Pattern {
    const char* id;
    bool first_order;
    std::size_t strict_a, strict_b;
    bool second_order;
    std::size_t strict_second;
  };
  const std::vector<Pattern> patterns = {
    { "A1+", f.nonneg && f1.nonneg && g1.nonpos, f1.strict_pos, g1.strict_neg,
      have_second && f2.nonneg && g2.nonneg, f2.strict_pos + g2.strict_pos },
    { "A2+", f.nonneg && f1.nonpos && g1.nonneg, f1.strict_neg, g1.strict_pos,
      have_second && f2.nonneg && g2.nonpos, f2.strict_pos + g2.strict_neg },
    { "A1-", f.nonpos && f1.nonneg && g1.nonneg, f1.strict_pos, g1.strict_pos,
      have_second && f2.nonpos && g2.nonpos, f2.strict_neg + g2.strict_neg },
    { "A2-", f.nonpos && f1.nonpos && g1.nonpos, f1.strict_neg, g1.strict_neg,
      have_second && f2.nonpos && g2.nonneg, f2.strict_neg + g2.strict_pos },
  };

  bool any_plus = false, any_minus = false, any_second = false;
  std::string second_witness;
  for (const Pattern& pat : patterns) {
    ConditionReport r;
    r.id = pat.id;
    const bool first = pat.first_order && strict_enough(pat.strict_a, f1.total)
                       && strict_enough(pat.strict_b, g1.total);
    const bool second = first && pat.second_order
                        && strict_enough(pat.strict_second, f1.total);
    r.holds = first ? TriState::yes : TriState::no;
    r.witness = first ? strict_witness(std::min(pat.strict_a, pat.strict_b), f1.total)
                      : "sign table not satisfied on the sample grid";
    r.y_density = first;
    if (first && !have_second) {
      r.z_density = TriState::indeterminate;
    } else {
      r.z_density = second ? TriState::yes : TriState::no;
    }
    if (first && r.id[2] == '+')
      any_plus = true;
    if (first && r.id[2] == '-')
      any_minus = true;
    if (second) {
      any_second = true;
      second_witness = r.witness;
    }
    out.push_back(r);
  }

  ConditionReport xp;
  xp.id = "xi+";
  xp.holds = any_plus ? TriState::yes : TriState::no;
  xp.witness = any_plus ? "implied by a holding A+ pattern"
                        : "no A+ pattern holds on the sample grid";
  xp.y_density = any_plus;
  out.push_back(xp);

  ConditionReport xm;
  xm.id = "xi-";
  xm.holds = any_minus ? TriState::yes : TriState::no;
  xm.witness = any_minus ? "implied by a holding A- pattern"
                         : "no A- pattern holds on the sample grid";
  xm.y_density = any_minus;
  out.push_back(xm);

  ConditionReport dz;
  dz.id = "DZ-second-order";
  if (!have_second) {
    dz.holds = TriState::indeterminate;
    dz.witness = "second derivatives not supplied";
    dz.z_density = TriState::indeterminate;
  } else {
    dz.holds = any_second ? TriState::yes : TriState::no;
    dz.witness = any_second ? second_witness : "no pattern satisfies the second-order table";
    dz.z_density = dz.holds;
  }
  out.push_back(dz);
  return out;
}

double arcsine_cdf(double s)
{
  if (s <= 0.0)
    return 0.0;
  if (s >= 1.0)
    return 1.0;
  return 2.0 / M_PI * std::asin(std::sqrt(s));
}

namespace {

ArcsineReport finish_arcsine(std::vector<double>&& taus)
{
  std::sort(taus.begin(), taus.end());
  ArcsineReport rep;
  rep.n = taus.size();
  const double n = static_cast<double>(taus.size());
  double d = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double f = arcsine_cdf(taus[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  rep.ks_distance = d;
  rep.taus = std::move(taus);
  return rep;
}

} // namespace

ArcsineReport arcsine_argmax_check(const PathEnsemble& ens)
{
  std::vector<double> taus(ens.n_paths);
  parallel_for_blocks(ens.n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      taus[p] = ens.grid.times[argmax_index(ens.w.row(p))] / ens.grid.horizon;
  });
  return finish_arcsine(std::move(taus));
}

ArcsineReport arcsine_argmax_check(const TimeGrid& grid, std::size_t n_paths,
                                   std::uint64_t master_seed)
{
  if (n_paths < 1)
    throw std::invalid_argument("arcsine_argmax_check: n_paths must be positive");
  std::vector<double> taus(n_paths);
  const double sdt = std::sqrt(grid.dt);
  parallel_for_blocks(n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      NormalSampler rng(substream_seed(master_seed, p));
      double w = 0.0;
      double best = 0.0;
      std::size_t best_idx = 0;
      for (std::size_t i = 0; i < grid.n_steps; ++i) {
        w += sdt * rng.normal();
        if (w > best) {
          best = w;
          best_idx = i + 1;
        }
      }
      taus[p] = grid.times[best_idx] / grid.horizon;
    }
  });
  return finish_arcsine(std::move(taus));
}

} // namespace mcbsde
