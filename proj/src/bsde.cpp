#include "mcbsde/bsde.hpp"

#include "mcbsde/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace mcbsde {

void Coeff::check(std::size_t n_paths, std::size_t n_times, const char* what) const
{
  if (kind_ == Kind::per_time && per_time_.size() != n_times)
    throw std::invalid_argument(std::string(what) + ": per-time coefficient does not conform to the grid");
  if (kind_ == Kind::per_path_time)
    per_path_time_.require_shape(n_paths, n_times, what);
}

namespace {

double mean_of(const std::vector<double>& v)
{
  double acc = 0.0;
  for (double x : v)
    acc += x;
  return acc / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v, double m)
{
  if (v.size() < 2)
    return 0.0;
  double acc = 0.0;
  for (double x : v)
    acc += (x - m) * (x - m);
  const double var = acc / static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

double residual_spread(const std::vector<double>& targets, const std::vector<double>& fit)
{
  double acc = 0.0, m = 0.0;
  for (std::size_t p = 0; p < targets.size(); ++p)
    m += targets[p] - fit[p];
  m /= static_cast<double>(targets.size());
  for (std::size_t p = 0; p < targets.size(); ++p) {
    const double d = targets[p] - fit[p] - m;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(targets.size()));
}

// Columns: intercept, then standardized powers 1..degree of each usable feature.
// Degenerate (constant) features are dropped when drop_degenerate is set; with no
// usable feature left the design is empty and the caller falls back to the mean.
Eigen::MatrixXd build_design(const std::vector<std::vector<double>>& features,
                             std::size_t degree, bool drop_degenerate)
{
  const std::size_t n = features.front().size();
  std::vector<std::vector<double>> cols;
  for (const auto& feat : features) {
    double m = 0.0;
    for (double x : feat)
      m += x;
    m /= static_cast<double>(n);
    double s2 = 0.0;
    for (double x : feat)
      s2 += (x - m) * (x - m);
    const double sd = std::sqrt(s2 / static_cast<double>(n));
    if (sd <= 0.0 || !std::isfinite(sd)) {
      if (drop_degenerate)
        continue;
    }
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
    std::vector<double> base(n);
    for (std::size_t p = 0; p < n; ++p)
      base[p] = (feat[p] - m) * scale;
    std::vector<double> cur = base;
    cols.push_back(cur);
    for (std::size_t d = 2; d <= degree; ++d) {
      for (std::size_t p = 0; p < n; ++p)
        cur[p] *= base[p];
      cols.push_back(cur);
    }
  }
  Eigen::MatrixXd X(n, 1 + cols.size());
  X.col(0).setOnes();
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t p = 0; p < n; ++p)
      X(p, c + 1) = cols[c][p];
  return X;
}

// When strict_rank is off, a rank-deficient basis is tolerated: the least-squares
// projection is unique even if the coefficients are not (structurally collinear
// state features, e.g. the running integral over a single step).
std::vector<double> regress_on_design(const Eigen::MatrixXd& X,
                                      const std::vector<double>& targets,
                                      bool strict_rank)
{
  if (static_cast<Eigen::Index>(targets.size()) <= X.cols())
    throw std::runtime_error("singular regression (" + std::to_string(targets.size())
                             + " samples for " + std::to_string(X.cols())
                             + " basis columns)");
  Eigen::Map<const Eigen::VectorXd> y(targets.data(),
                                      static_cast<Eigen::Index>(targets.size()));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-7); // directions this close to collinear carry only noise
  cod.compute(X);
  if (strict_rank && cod.rank() < X.cols())
    throw std::runtime_error("singular regression (rank " + std::to_string(cod.rank())
                             + " of " + std::to_string(X.cols()) + " basis columns)");
  const Eigen::VectorXd beta = cod.solve(y);
  const Eigen::VectorXd fit = X * beta;
  return { fit.data(), fit.data() + fit.size() };
}

void gather_features_step(const PathEnsemble& ens, const FeatureList& extra_state,
                          std::size_t step, std::vector<std::vector<double>>& out)
{
  out.clear();
  out.push_back(ens.w.col(step));
  for (const Matrix* m : extra_state)
    out.push_back(m->col(step));
}

} // namespace

std::vector<double> conditional_regress(const std::vector<double>& values,
                                        const std::vector<double>& state,
                                        std::size_t degree)
{
  if (degree < 1)
    throw std::invalid_argument("conditional_regress: degree must be >= 1");
  if (values.size() != state.size())
    throw std::invalid_argument("conditional_regress: values/state length mismatch");
  if (values.size() <= degree + 1)
    throw std::invalid_argument("conditional_regress: need more samples than basis columns");
  const Eigen::MatrixXd X = build_design({ state }, degree, /*drop_degenerate=*/false);
  return regress_on_design(X, values, /*strict_rank=*/true);
}

std::vector<double> detail::regress_step(const std::vector<double>& targets,
                                         const PathEnsemble& ens,
                                         const FeatureList& extra_state, std::size_t step,
                                         std::size_t degree)
{
  std::vector<std::vector<double>> feats;
  gather_features_step(ens, extra_state, step, feats);
  const Eigen::MatrixXd X = build_design(feats, degree, /*drop_degenerate=*/true);
  if (X.cols() == 1) {
    // state is deterministic here (t = 0): the conditional expectation is the mean
    const double m = mean_of(targets);
    return std::vector<double>(targets.size(), m);
  }
  return regress_on_design(X, targets, /*strict_rank=*/false);
}

Matrix detail::conditional_weights(const Coeff& nu, const PathEnsemble& ens)
{
  const std::size_t n = ens.grid.n_steps;
  const std::size_t N = ens.n_paths;
  Matrix weights(N, n + 1, 1.0);
  if (nu.is_zero())
    return weights;
  const double dt = ens.grid.dt;
  std::vector<double> logw(N, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    std::size_t overflow = 0;
    for (std::size_t p = 0; p < N; ++p) {
      const double v = nu(p, ii);
      const double dw = ens.w(p, ii + 1) - ens.w(p, ii);
      logw[p] += v * dw - 0.5 * v * v * dt;
      if (!std::isfinite(logw[p]) || logw[p] > 700.0)
        ++overflow;
    }
    if (overflow > 0)
      throw std::runtime_error("girsanov weight overflow on " + std::to_string(overflow)
                               + " of " + std::to_string(N) + " paths");
    double mean = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      weights(p, ii) = std::exp(logw[p]);
      mean += weights(p, ii);
    }
    mean /= static_cast<double>(N);
    for (std::size_t p = 0; p < N; ++p)
      weights(p, ii) /= mean;
  }
  return weights;
}

BsdeSolution detail::girsanov_conditional_solve(const Coeff& lambda, const Coeff& mu,
                                                const Coeff& nu,
                                                const std::vector<double>& xi,
                                                const PathEnsemble& ens,
                                                const SolverSettings& settings,
                                                const FeatureList& extra_state)
{
  const std::size_t n = ens.grid.n_steps;
  const std::size_t N = ens.n_paths;
  const double dt = ens.grid.dt;
  if (xi.size() != N)
    throw std::invalid_argument("solve_affine: xi does not conform to the ensemble");
  lambda.check(N, n + 1, "solve_affine lambda");
  mu.check(N, n + 1, "solve_affine mu");
  nu.check(N, n + 1, "solve_affine nu");

  BsdeSolution sol;
  sol.y = Matrix(N, n + 1);
  sol.z = Matrix(N, n);
  sol.residual_scale.assign(n + 1, 0.0);
  for (std::size_t p = 0; p < N; ++p)
    sol.y(p, n) = xi[p];

  std::vector<double> payoff = xi; // xi e^{int_t^T mu} + int_t^T lambda e^{int_t^s mu}
  std::vector<double> logw(N, 0.0);
  std::vector<double> target(N), ztarget(N), wvec(N, 1.0);
  const bool no_weight = nu.is_zero();
  const bool no_source = lambda.is_zero();

  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t i = ii;
    const bool mu_det = mu.deterministic();
    const double emu_det = mu_det ? std::exp(mu(0, i) * dt) : 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      const double emu = mu_det ? emu_det : std::exp(mu(p, i) * dt);
      payoff[p] = (no_source ? 0.0 : lambda(p, i) * dt) + emu * payoff[p];
    }
    if (!no_weight) {
      std::size_t overflow = 0;
      for (std::size_t p = 0; p < N; ++p) {
        const double v = nu(p, i);
        const double dw = ens.w(p, i + 1) - ens.w(p, i);
        logw[p] += v * dw - 0.5 * v * v * dt;
        if (!std::isfinite(logw[p]) || logw[p] > 700.0)
          ++overflow;
      }
      if (overflow > 0)
        throw std::runtime_error("girsanov weight overflow on " + std::to_string(overflow)
                                 + " of " + std::to_string(N) + " paths");
      double wmean = 0.0;
      for (std::size_t p = 0; p < N; ++p) {
        wvec[p] = std::exp(logw[p]);
        wmean += wvec[p];
      }
      wmean /= static_cast<double>(N);
      for (std::size_t p = 0; p < N; ++p)
        wvec[p] /= wmean;
    }
    for (std::size_t p = 0; p < N; ++p) {
      target[p] = payoff[p] * wvec[p];
      ztarget[p] = sol.y(p, i + 1) * (ens.w(p, i + 1) - ens.w(p, i)) / dt;
    }
    try {
      const std::vector<double> zfit =
          regress_step(ztarget, ens, extra_state, i, settings.basis_degree);
      for (std::size_t p = 0; p < N; ++p)
        sol.z(p, i) = zfit[p];
      if (i == 0) {
        for (std::size_t p = 0; p < N; ++p)
          sol.y(p, 0) = target[p];
        const std::vector<double> flat(N, mean_of(target));
        sol.residual_scale[0] = residual_spread(target, flat);
      } else {
        const std::vector<double> fitted =
            regress_step(target, ens, extra_state, i, settings.basis_degree);
        for (std::size_t p = 0; p < N; ++p)
          sol.y(p, i) = fitted[p];
        sol.residual_scale[i] = residual_spread(target, fitted);
      }
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at time step " + std::to_string(i));
    }
  }
  const std::vector<double> y0col = sol.y.col(0);
  sol.y0 = mean_of(y0col);
  sol.y0_stderr = stderr_of(y0col, sol.y0);
  return sol;
}

BsdeSolution solve_affine(const AffineCoeffs& coeffs, const std::vector<double>& xi,
                          const PathEnsemble& ens, const SolverSettings& settings,
                          const FeatureList& extra_state)
{
  return detail::girsanov_conditional_solve(coeffs.lambda, coeffs.mu, coeffs.nu, xi, ens,
                                            settings, extra_state);
}

BsdeSolution solve_lsmc(const GeneratorSpec& gen, const std::vector<double>& xi,
                        const PathEnsemble& ens, const SolverSettings& settings,
                        const FeatureList& extra_state)
{
  if (!gen.f)
    throw std::invalid_argument("solve_lsmc: generator is empty");
  const std::size_t n = ens.grid.n_steps;
  const std::size_t N = ens.n_paths;
  const double dt = ens.grid.dt;
  if (xi.size() != N)
    throw std::invalid_argument("solve_lsmc: xi does not conform to the ensemble");
  const int picard = std::max(1, settings.n_picard);

  BsdeSolution sol;
  sol.y = Matrix(N, n + 1);
  sol.z = Matrix(N, n);
  sol.residual_scale.assign(n + 1, 0.0);
  for (std::size_t p = 0; p < N; ++p)
    sol.y(p, n) = xi[p];

  std::vector<double> ztarget(N), ycont(N);
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t i = ii;
    const double t = ens.grid.times[i];
    for (std::size_t p = 0; p < N; ++p) {
      ycont[p] = sol.y(p, i + 1);
      ztarget[p] = ycont[p] * (ens.w(p, i + 1) - ens.w(p, i)) / dt;
    }
    try {
      const std::vector<double> zfit =
          detail::regress_step(ztarget, ens, extra_state, i, settings.basis_degree);
      for (std::size_t p = 0; p < N; ++p)
        sol.z(p, i) = zfit[p];
      if (i == 0) {
        // state is deterministic at t = 0; the per-path values are filled with the
        // pathwise rollup below, whose spread carries the honest MC standard error
        const double cont = mean_of(ycont);
        double yhat = cont;
        for (int k = 0; k < picard; ++k)
          yhat = cont + gen.f(t, yhat, zfit[0]) * dt;
        for (std::size_t p = 0; p < N; ++p)
          sol.y(p, 0) = yhat;
        const std::vector<double> flat(N, cont);
        sol.residual_scale[0] = residual_spread(ycont, flat);
      } else {
        const std::vector<double> cont =
            detail::regress_step(ycont, ens, extra_state, i, settings.basis_degree);
        sol.residual_scale[i] = residual_spread(ycont, cont);
        for (std::size_t p = 0; p < N; ++p) {
          double yhat = cont[p];
          for (int k = 0; k < picard; ++k)
            yhat = cont[p] + gen.f(t, yhat, sol.z(p, i)) * dt;
          sol.y(p, i) = yhat;
        }
      }
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at time step " + std::to_string(i));
    }
  }
  // pathwise rollup Y_0 = E[xi + int f(s, Y_s, Z_s) ds]: near-independent summands
  // across paths, so mean and standard error are the plain sample statistics
  const double y00 = sol.y(0, 0);
  for (std::size_t p = 0; p < N; ++p) {
    double acc = xi[p];
    for (std::size_t i = 0; i < n; ++i)
      acc += gen.f(ens.grid.times[i], i == 0 ? y00 : sol.y(p, i), sol.z(p, i)) * dt;
    sol.y(p, 0) = acc;
  }
  const std::vector<double> y0col = sol.y.col(0);
  sol.y0 = mean_of(y0col);
  sol.y0_stderr = stderr_of(y0col, sol.y0);
  return sol;
}

Matrix running_integral(const PathEnsemble& ens, const std::function<double(double)>& g)
{
  const std::size_t n = ens.grid.n_steps;
  Matrix out(ens.n_paths, n + 1);
  parallel_for_blocks(ens.n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      auto w = ens.w.row(p);
      auto row = out.row(p);
      row[0] = 0.0;
      double prev = g(w[0]);
      for (std::size_t i = 0; i < n; ++i) {
        const double next = g(w[i + 1]);
        row[i + 1] = row[i] + 0.5 * (prev + next) * ens.grid.dt;
        prev = next;
      }
    }
  });
  return out;
}

Matrix running_max(const PathEnsemble& ens)
{
  const std::size_t n = ens.grid.n_steps;
  Matrix out(ens.n_paths, n + 1);
  parallel_for_blocks(ens.n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      auto w = ens.w.row(p);
      auto row = out.row(p);
      row[0] = w[0];
      for (std::size_t i = 0; i < n; ++i)
        row[i + 1] = std::max(row[i], w[i + 1]);
    }
  });
  return out;
}

std::vector<Matrix> claim_state_features(const TerminalSpec& spec, const PathEnsemble& ens)
{
  std::vector<Matrix> feats;
  switch (spec.kind) {
    case TerminalKind::affine_gaussian:
      break;
    case TerminalKind::path_integral:
      if (spec.gamma != 0.0)
        feats.push_back(running_integral(ens, [](double x) { return x; }));
      break;
    case TerminalKind::asian:
      feats.push_back(running_integral(ens, spec.g.value));
      break;
    case TerminalKind::lookback:
      feats.push_back(running_max(ens));
      break;
  }
  return feats;
}

} // namespace mcbsde
