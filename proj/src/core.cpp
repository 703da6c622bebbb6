#include "mcbsde/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcbsde {

TimeGrid build_time_grid(double horizon, std::size_t n_steps)
{
  if (!(horizon > 0.0))
    throw std::invalid_argument("build_time_grid: horizon must be positive");
  if (n_steps < 1)
    throw std::invalid_argument("build_time_grid: n_steps must be positive");
  TimeGrid grid;
  grid.horizon = horizon;
  grid.n_steps = n_steps;
  grid.dt = horizon / static_cast<double>(n_steps);
  grid.times.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i)
    grid.times[i] = horizon * static_cast<double>(i) / static_cast<double>(n_steps);
  grid.times.front() = 0.0;
  grid.times.back() = horizon;
  return grid;
}

std::size_t TimeGrid::index_of(double t, double tol) const
{
  const double pos = t / dt;
  const auto i = static_cast<std::size_t>(std::llround(std::max(0.0, pos)));
  if (i > n_steps || std::abs(times[std::min(i, n_steps)] - t) > tol * std::max(1.0, horizon))
    throw std::invalid_argument("TimeGrid::index_of: t is not a grid point");
  return std::min(i, n_steps);
}

TerminalSpec TerminalSpec::affine_gaussian(double c, double sigma2)
{
  TerminalSpec s;
  s.kind = TerminalKind::affine_gaussian;
  s.c = c;
  s.sigma2 = sigma2;
  return s;
}

TerminalSpec TerminalSpec::path_integral(double alpha, double beta, double gamma)
{
  TerminalSpec s;
  s.kind = TerminalKind::path_integral;
  s.alpha = alpha;
  s.beta = beta;
  s.gamma = gamma;
  return s;
}

TerminalSpec TerminalSpec::asian(ScalarFunc f, ScalarFunc g)
{
  TerminalSpec s;
  s.kind = TerminalKind::asian;
  s.f = std::move(f);
  s.g = std::move(g);
  return s;
}

TerminalSpec TerminalSpec::lookback(ScalarFunc f)
{
  TerminalSpec s;
  s.kind = TerminalKind::lookback;
  s.f = std::move(f);
  return s;
}

ScalarFunc lookup_payoff(const std::string& name)
{
  ScalarFunc fn;
  fn.name = name;
  if (name == "identity") {
    fn.value = [](double x) { return x; };
    fn.d1 = [](double) { return 1.0; };
    fn.d2 = [](double) { return 0.0; };
    return fn;
  }
  if (name == "exp-neg") {
    fn.value = [](double x) { return std::exp(-x); };
    fn.d1 = [](double x) { return -std::exp(-x); };
    fn.d2 = [](double x) { return std::exp(-x); };
    return fn;
  }
  if (name == "square") {
    fn.value = [](double x) { return x * x; };
    fn.d1 = [](double x) { return 2.0 * x; };
    fn.d2 = [](double) { return 2.0; };
    return fn;
  }
  const auto open = name.find('(');
  if (open != std::string::npos && name.back() == ')') {
    const std::string base = name.substr(0, open);
    const double strike = std::stod(name.substr(open + 1, name.size() - open - 2));
    if (base == "put") {
      // derivatives are the a.e. values; the kink at K is Lebesgue-null
      fn.value = [strike](double x) { return std::max(strike - x, 0.0); };
      fn.d1 = [strike](double x) { return x < strike ? -1.0 : 0.0; };
      fn.d2 = [](double) { return 0.0; };
      return fn;
    }
    if (base == "call") {
      fn.value = [strike](double x) { return std::max(x - strike, 0.0); };
      fn.d1 = [strike](double x) { return x > strike ? 1.0 : 0.0; };
      fn.d2 = [](double) { return 0.0; };
      return fn;
    }
  }
  throw std::invalid_argument("lookup_payoff: unknown payoff \"" + name + "\"");
}

std::vector<double> CameronMartinDirection::profile(const TimeGrid& grid) const
{
  if (!hdot)
    throw std::invalid_argument("CameronMartinDirection: hdot is empty");
  const std::size_t n = grid.n_steps;
  std::vector<double> d(n + 1);
  double energy = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    d[i] = hdot(grid.times[i]);
    const double sq = d[i] * d[i];
    energy += (i == 0 || i == n) ? 0.5 * sq : sq;
  }
  energy *= grid.dt;
  if (!std::isfinite(energy))
    throw std::invalid_argument("CameronMartinDirection: hdot is not square-integrable");
  std::vector<double> h(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    h[i + 1] = h[i] + 0.5 * (d[i] + d[i + 1]) * grid.dt;
  return h;
}

double trapezoid(std::span<const double> values, double dt, std::size_t a, std::size_t b)
{
  double acc = 0.0;
  for (std::size_t i = a; i < b; ++i)
    acc += 0.5 * (values[i] + values[i + 1]);
  return acc * dt;
}

std::size_t argmax_index(std::span<const double> path)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < path.size(); ++i)
    if (path[i] > path[best])
      best = i;
  return best;
}

namespace {

// Trapezoid of phi(W_s) over [u, T], with the partial first segment handled by
// linear interpolation of the sampled integrand.
double integral_from(const std::function<double(double)>& phi, std::span<const double> path,
                     const TimeGrid& grid, double u)
{
  const std::size_t n = grid.n_steps;
  if (u <= 0.0) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += 0.5 * (phi(path[i]) + phi(path[i + 1]));
    return acc * grid.dt;
  }
  if (u >= grid.horizon)
    return 0.0;
  const auto k = static_cast<std::size_t>(u / grid.dt); // t_k <= u < t_{k+1}
  double acc = 0.0;
  const double pk = phi(path[k]);
  const double pk1 = phi(path[k + 1]);
  const double frac = (u - grid.times[k]) / grid.dt;
  const double pu = pk + frac * (pk1 - pk);
  acc += 0.5 * (pu + pk1) * (grid.times[k + 1] - u);
  for (std::size_t i = k + 1; i < n; ++i)
    acc += 0.5 * (phi(path[i]) + phi(path[i + 1])) * grid.dt;
  return acc;
}

double asian_integral(const TerminalSpec& spec, std::span<const double> path,
                      const TimeGrid& grid)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.n_steps; ++i)
    acc += 0.5 * (spec.g.value(path[i]) + spec.g.value(path[i + 1]));
  return acc * grid.dt;
}

void check_u(double u, const TimeGrid& grid)
{
  if (u < 0.0 || u > grid.horizon)
    throw std::invalid_argument("evaluate_terminal_malliavin: u outside [0, T]");
}

} // namespace

double evaluate_terminal(const TerminalSpec& spec, std::span<const double> path,
                         const TimeGrid& grid)
{
  switch (spec.kind) {
    case TerminalKind::affine_gaussian:
      return spec.c + spec.sigma2 * path[grid.n_steps];
    case TerminalKind::path_integral:
      return spec.alpha + spec.beta * path[grid.n_steps]
             + spec.gamma * trapezoid(path, grid.dt, 0, grid.n_steps);
    case TerminalKind::asian:
      return spec.f.value(asian_integral(spec, path, grid));
    case TerminalKind::lookback:
      return spec.f.value(path[argmax_index(path)]);
  }
  throw std::logic_error("evaluate_terminal: bad variant");
}

double evaluate_terminal_malliavin(const TerminalSpec& spec, std::span<const double> path,
                                   const TimeGrid& grid, double u)
{
  check_u(u, grid);
  switch (spec.kind) {
    case TerminalKind::affine_gaussian:
      return spec.sigma2;
    case TerminalKind::path_integral:
      return spec.beta + spec.gamma * (grid.horizon - u);
    case TerminalKind::asian: {
      const double inner = asian_integral(spec, path, grid);
      return spec.f.d1(inner) * integral_from(spec.g.d1, path, grid, u);
    }
    case TerminalKind::lookback: {
      const std::size_t k = argmax_index(path);
      return u <= grid.times[k] ? spec.f.d1(path[k]) : 0.0;
    }
  }
  throw std::logic_error("evaluate_terminal_malliavin: bad variant");
}

double evaluate_terminal_second_malliavin(const TerminalSpec& spec,
                                          std::span<const double> path,
                                          const TimeGrid& grid, double u, double v)
{
  check_u(u, grid);
  check_u(v, grid);
  if (spec.kind == TerminalKind::lookback)
    throw std::domain_error(
        "second Malliavin derivative: the running maximum is not twice differentiable");
  if (spec.kind != TerminalKind::asian)
    throw std::domain_error("second Malliavin derivative: only the asian variant is supported");
  const double inner = asian_integral(spec, path, grid);
  const double iu = integral_from(spec.g.d1, path, grid, u);
  const double iv = integral_from(spec.g.d1, path, grid, v);
  const double iw = integral_from(spec.g.d2, path, grid, std::min(u, v));
  return spec.f.d2(inner) * iu * iv + spec.f.d1(inner) * iw;
}

std::vector<double> evaluate_terminal_all(const TerminalSpec& spec, const PathEnsemble& ens)
{
  std::vector<double> xi(ens.n_paths);
  for (std::size_t p = 0; p < ens.n_paths; ++p)
    xi[p] = evaluate_terminal(spec, ens.w.row(p), ens.grid);
  return xi;
}

} // namespace mcbsde
