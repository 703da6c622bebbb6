#include "mcbsde/experiment.hpp"

#include "mcbsde/finance.hpp"
#include "mcbsde/gene.hpp"
#include "mcbsde/malliavin.hpp"
#include "mcbsde/sde.hpp"
#include "mcbsde/stats.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mcbsde {

namespace fs = std::filesystem;

void emit_csv(const Table& table, const std::string& path)
{
  if (table.empty())
    throw std::invalid_argument("emit_csv: table has no columns");
  for (const Column& col : table)
    if (col.values.size() != table.front().values.size())
      throw std::invalid_argument("emit_csv: ragged table");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("emit_csv: cannot open " + path);
  for (std::size_t c = 0; c < table.size(); ++c)
    out << (c ? "," : "") << table[c].name;
  out << "\n";
  const std::size_t rows = table.empty() ? 0 : table.front().values.size();
  char buf[40];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < table.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", table[c].values[r]);
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

Config load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config " + path);
  Config j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return j;
}

namespace {

const Config& need(const Config& j, const std::string& key)
{
  if (!j.contains(key))
    throw std::invalid_argument("config: missing field \"" + key + "\"");
  return j.at(key);
}

void write_json(const Config& j, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

std::string num_tag(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

TimeGrid parse_grid(const Config& j)
{
  const Config& g = need(j, "grid");
  return build_time_grid(need(g, "T").get<double>(), need(g, "n_steps").get<std::size_t>());
}

SolverSettings parse_solver(const Config& j)
{
  SolverSettings s;
  if (j.contains("solver")) {
    const Config& v = j.at("solver");
    s.basis_degree = v.value("basis_degree", s.basis_degree);
    s.n_picard = v.value("n_picard", s.n_picard);
  }
  return s;
}

VasicekParams parse_vasicek(const Config& j)
{
  const Config& v = need(j, "vasicek");
  VasicekParams p;
  p.a = need(v, "a").get<double>();
  p.b = need(v, "b").get<double>();
  p.varpi = need(v, "varpi").get<double>();
  p.r0 = need(v, "r0").get<double>();
  p.validate();
  return p;
}

Config condition_reports_json(const std::vector<ConditionReport>& reports)
{
  const auto tri = [](TriState t) {
    switch (t) {
      case TriState::yes: return "yes";
      case TriState::no: return "no";
      default: return "indeterminate";
    }
  };
  Config arr = Config::array();
  for (const ConditionReport& r : reports) {
    Config one;
    one["id"] = r.id;
    one["holds"] = tri(r.holds);
    one["witness"] = r.witness;
    one["y_density"] = r.y_density;
    one["z_density"] = tri(r.z_density);
    arr.push_back(one);
  }
  return arr;
}

std::vector<double> parse_sample_grid(const Config& j)
{
  double lo = -3.0, hi = 3.0;
  std::size_t points = 201;
  if (j.contains("sample_grid")) {
    const Config& g = j.at("sample_grid");
    lo = g.value("lo", lo);
    hi = g.value("hi", hi);
    points = g.value("points", points);
  }
  if (points < 2 || !(hi > lo))
    throw std::invalid_argument("config: bad sample_grid");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

void mean_and_se_columns(const Matrix& m, std::vector<double>& means,
                         std::vector<double>& ses)
{
  means.resize(m.cols());
  ses.resize(m.cols());
  const double n = static_cast<double>(m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mu = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
      mu += m(r, c);
    mu /= n;
    double s2 = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
      s2 += (m(r, c) - mu) * (m(r, c) - mu);
    means[c] = mu;
    ses[c] = m.rows() > 1 ? std::sqrt(s2 / (n - 1.0) / n) : 0.0;
  }
}

// solution grid export: t, mean Y, SE, mean Z, SE
Table solution_curve(const BsdeSolution& sol, const TimeGrid& grid)
{
  std::vector<double> y_mean, y_se, z_mean, z_se;
  mean_and_se_columns(sol.y, y_mean, y_se);
  mean_and_se_columns(sol.z, z_mean, z_se);
  z_mean.push_back(z_mean.back()); // pad the terminal step
  z_se.push_back(z_se.back());
  Table table;
  table.push_back({ "t", grid.times });
  table.push_back({ "y_mean", y_mean });
  table.push_back({ "y_se", y_se });
  table.push_back({ "z_mean", z_mean });
  table.push_back({ "z_se", z_se });
  return table;
}

std::vector<double> read_samples_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open samples file " + path);
  std::vector<double> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    try {
      samples.push_back(std::stod(line));
    } catch (const std::exception&) {
      // header or label row
    }
  }
  if (samples.size() < 4)
    throw std::invalid_argument("samples file " + path + " holds fewer than 4 values");
  return samples;
}

std::vector<std::string> run_gene_density(const Config& cfg, const fs::path& dir)
{
  const TimeGrid grid = parse_grid(cfg);
  const PathEnsemble ens = simulate_brownian(grid, need(cfg, "n_paths").get<std::size_t>(),
                                             need(cfg, "master_seed").get<std::uint64_t>());
  const Config& g = need(cfg, "gene");
  GeneParams params;
  params.R = need(g, "R").get<double>();
  params.a = need(g, "a").get<double>();
  params.rho = need(g, "rho").get<double>();
  params.terminal = parse_terminal(need(cfg, "terminal"));
  const std::vector<double> times = need(cfg, "times").get<std::vector<double>>();
  const std::size_t bins = cfg.value("bins", 60);

  const auto slices =
      gene_density_experiment(params, times, ens, bins, parse_solver(cfg));

  std::vector<std::string> artifacts;
  Config summary;
  summary["experiment"] = "gene-density";
  summary["slices"] = Config::array();
  for (const DensitySlice& s : slices) {
    const std::string name = "gene_density_t" + num_tag(s.t) + ".csv";
    Table table;
    table.push_back({ "bin_left",
                      std::vector<double>(s.hist.edges.begin(), s.hist.edges.end() - 1) });
    table.push_back({ "bin_right",
                      std::vector<double>(s.hist.edges.begin() + 1, s.hist.edges.end()) });
    table.push_back({ "hist_density", s.hist.heights });
    table.push_back({ "hist_stderr", s.hist.stderrs });
    table.push_back({ "f_i", s.f_i });
    table.push_back({ "f_s", s.f_s });
    emit_csv(table, (dir / name).string());
    artifacts.push_back(name);
    Config row;
    row["t"] = s.t;
    row["mean"] = s.mean;
    row["var"] = s.var;
    row["C_Y"] = s.c_y;
    row["k_lo"] = s.bounds.k_lo;
    row["k_hi"] = s.bounds.k_hi;
    row["C_hi"] = s.bounds.c_hi;
    row["C_lo"] = s.bounds.c_lo;
    summary["slices"].push_back(row);
  }
  write_json(summary, (dir / "summary.json").string());
  artifacts.push_back("summary.json");
  return artifacts;
}

std::vector<std::string> run_gene_validate(const Config& cfg, const fs::path& dir)
{
  if (cfg.contains("samples_csv")) {
    // validate an externally produced sample instead of running the model
    const TestReport rep = normality_report(
        read_samples_csv(cfg.at("samples_csv").get<std::string>()));
    Config report;
    report["experiment"] = "gene-validate";
    report["source"] = cfg.at("samples_csv").get<std::string>();
    report["m"] = rep.m;
    report["skew"] = rep.s_skew;
    report["kurtosis"] = rep.k_kurt;
    report["JB"] = rep.jb;
    report["JB_reject"] = rep.jb_reject;
    report["KS"] = rep.ks;
    report["KS_two_sided"] = rep.ks_two_sided;
    report["KS_reject"] = rep.ks_reject;
    report["mean"] = rep.mean;
    report["var"] = rep.var;
    write_json(report, (dir / "validation.json").string());
    return { "validation.json" };
  }

  const TimeGrid grid = parse_grid(cfg);
  const PathEnsemble ens = simulate_brownian(grid, need(cfg, "n_paths").get<std::size_t>(),
                                             need(cfg, "master_seed").get<std::uint64_t>());
  const Config& g = need(cfg, "gene");
  GeneParams params;
  params.R = need(g, "R").get<double>();
  params.a = need(g, "a").get<double>();
  params.rho = need(g, "rho").get<double>();
  params.terminal = parse_terminal(need(cfg, "terminal"));
  const std::vector<double> times = need(cfg, "times").get<std::vector<double>>();

  const BsdeSolution sol = solve_gene_bsde(params, ens, parse_solver(cfg));

  Config rows = Config::array();
  Table csv;
  csv.push_back({ "t", {} });
  csv.push_back({ "JB", {} });
  csv.push_back({ "KS", {} });
  csv.push_back({ "mean", {} });
  csv.push_back({ "var", {} });
  for (double t : times) {
    const std::size_t idx = grid.index_of(t);
    const TestReport rep = normality_report(sol.y.col(idx));
    Config row;
    row["t"] = t;
    row["m"] = rep.m;
    row["skew"] = rep.s_skew;
    row["kurtosis"] = rep.k_kurt;
    row["JB"] = rep.jb;
    row["JB_reject"] = rep.jb_reject;
    row["KS"] = rep.ks;
    row["KS_two_sided"] = rep.ks_two_sided;
    row["KS_reject"] = rep.ks_reject;
    row["mean"] = rep.mean;
    row["var"] = rep.var;
    rows.push_back(row);
    csv[0].values.push_back(t);
    csv[1].values.push_back(rep.jb);
    csv[2].values.push_back(rep.ks);
    csv[3].values.push_back(rep.mean);
    csv[4].values.push_back(rep.var);
  }
  Config report;
  report["experiment"] = "gene-validate";
  report["jb_critical"] = jb_critical;
  report["ks_critical"] = ks_critical;
  report["rows"] = rows;
  write_json(report, (dir / "validation.json").string());
  emit_csv(csv, (dir / "validation.csv").string());
  emit_csv(solution_curve(sol, grid), (dir / "solution_curve.csv").string());
  return { "validation.json", "validation.csv", "solution_curve.csv" };
}

std::vector<std::string> run_price(const Config& cfg, const fs::path& dir, bool asian)
{
  const TimeGrid grid = parse_grid(cfg);
  const PathEnsemble ens = simulate_brownian(grid, need(cfg, "n_paths").get<std::size_t>(),
                                             need(cfg, "master_seed").get<std::uint64_t>());
  PricingSpec spec;
  spec.vasicek = parse_vasicek(cfg);
  const double theta = need(cfg, "theta").get<double>();
  spec.theta = [theta](double) { return theta; };
  spec.claim = parse_terminal(need(cfg, "claim"));
  if (asian && spec.claim.kind != TerminalKind::asian)
    throw std::invalid_argument("price-asian: claim must be an asian terminal");
  if (!asian && spec.claim.kind != TerminalKind::lookback)
    throw std::invalid_argument("price-lookback: claim must be a lookback terminal");

  const SolverSettings settings = parse_solver(cfg);
  const BsdeSolution sol = price_claim(spec, ens, settings);
  const Matrix zco = clark_ocone_z(spec, sol, ens, settings);

  std::vector<double> zreg_mean, zreg_se, zco_mean, zco_se;
  mean_and_se_columns(sol.z, zreg_mean, zreg_se);
  mean_and_se_columns(zco, zco_mean, zco_se);
  Table zcurve;
  zcurve.push_back({ "t", std::vector<double>(grid.times.begin(), grid.times.end() - 1) });
  zcurve.push_back({ "z_regression_mean", zreg_mean });
  zcurve.push_back({ "z_regression_se", zreg_se });
  zcurve.push_back({ "z_clark_ocone_mean", zco_mean });
  zcurve.push_back({ "z_clark_ocone_se", zco_se });
  emit_csv(zcurve, (dir / "z_curve.csv").string());
  emit_csv(solution_curve(sol, grid), (dir / "solution_curve.csv").string());

  Config price;
  price["experiment"] = asian ? "price-asian" : "price-lookback";
  price["Y0"] = sol.y0;
  price["Y0_stderr"] = sol.y0_stderr;
  price["n_paths"] = ens.n_paths;
  price["z_curve"] = "z_curve.csv";
  price["conditions"] = condition_reports_json(
      check_density_conditions(spec.claim, parse_sample_grid(cfg)));
  write_json(price, (dir / "price.json").string());
  return { "z_curve.csv", "solution_curve.csv", "price.json" };
}

std::vector<std::string> run_check_conditions(const Config& cfg, const fs::path& dir)
{
  const TerminalSpec claim = parse_terminal(need(cfg, "claim"));
  Config report;
  report["experiment"] = "check-conditions";
  report["conditions"] =
      condition_reports_json(check_density_conditions(claim, parse_sample_grid(cfg)));
  write_json(report, (dir / "conditions.json").string());
  return { "conditions.json" };
}

std::vector<std::string> run_arcsine(const Config& cfg, const fs::path& dir)
{
  const TimeGrid grid = parse_grid(cfg);
  const auto n_paths = need(cfg, "n_paths").get<std::size_t>();
  const auto seed = need(cfg, "master_seed").get<std::uint64_t>();
  const ArcsineReport rep = arcsine_argmax_check(grid, n_paths, seed);

  Config report;
  report["experiment"] = "arcsine-check";
  report["n_paths"] = rep.n;
  report["n_steps"] = grid.n_steps;
  report["ks_distance"] = rep.ks_distance;
  report["ks_band_1pct"] = 1.628 / std::sqrt(static_cast<double>(rep.n));
  report["within_band"] =
      rep.ks_distance < 1.628 / std::sqrt(static_cast<double>(rep.n));
  write_json(report, (dir / "arcsine.json").string());

  const std::size_t rows = std::min<std::size_t>(rep.n, 1001);
  Table ecdf;
  ecdf.push_back({ "tau_over_T", {} });
  ecdf.push_back({ "ecdf", {} });
  ecdf.push_back({ "arcsine_cdf", {} });
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t i = r * (rep.n - 1) / (rows - 1);
    ecdf[0].values.push_back(rep.taus[i]);
    ecdf[1].values.push_back(static_cast<double>(i + 1) / static_cast<double>(rep.n));
    ecdf[2].values.push_back(arcsine_cdf(rep.taus[i]));
  }
  emit_csv(ecdf, (dir / "arcsine_ecdf.csv").string());
  return { "arcsine.json", "arcsine_ecdf.csv" };
}

std::vector<std::string> run_fd_check(const Config& cfg, const fs::path& dir)
{
  const TimeGrid grid = parse_grid(cfg);
  const PathEnsemble ens = simulate_brownian(grid, need(cfg, "n_paths").get<std::size_t>(),
                                             need(cfg, "master_seed").get<std::uint64_t>());
  const Config& aff = need(cfg, "affine");
  AffineCoeffs coeffs;
  coeffs.lambda = Coeff(need(aff, "lambda").get<double>());
  coeffs.mu = Coeff(need(aff, "mu").get<double>());
  coeffs.nu = Coeff(need(aff, "nu").get<double>());
  const TerminalSpec claim = parse_terminal(need(cfg, "claim"));
  const double eps = cfg.value("eps", 1e-4);
  const SolverSettings settings = parse_solver(cfg);

  const auto solver = [&](const PathEnsemble& e) {
    const std::vector<Matrix> extra = claim_state_features(claim, e);
    FeatureList features;
    for (const Matrix& m : extra)
      features.push_back(&m);
    return solve_affine(coeffs, evaluate_terminal_all(claim, e), e, settings, features);
  };
  const CameronMartinDirection h{ [](double) { return 1.0; } };
  const Matrix quotient = fd_quotient(solver, ens, h, eps);

  // integral over u of the derivative-BSDE continuation, trapezoid on the u-grid
  const BsdeSolution base = solver(ens);
  const std::vector<Matrix> extra = claim_state_features(claim, ens);
  FeatureList features;
  for (const Matrix& m : extra)
    features.push_back(&m);
  Matrix integral(ens.n_paths, grid.n_steps + 1, 0.0);
  for (std::size_t j = 0; j <= grid.n_steps; ++j) {
    const double u = grid.times[j];
    std::vector<double> dxi(ens.n_paths);
    for (std::size_t p = 0; p < ens.n_paths; ++p)
      dxi[p] = evaluate_terminal_malliavin(claim, ens.w.row(p), ens.grid, u);
    const MalliavinSlice slice = derivative_bsde_affine(coeffs, base, dxi, {}, u, ens,
                                                        settings, features);
    const double wq = (j == 0 || j == grid.n_steps) ? 0.5 * grid.dt : grid.dt;
    for (std::size_t p = 0; p < ens.n_paths; ++p)
      for (std::size_t i = 0; i <= grid.n_steps; ++i)
        integral(p, i) += wq * slice.dy_ext(p, i);
  }

  double max_rel = 0.0;
  Table curve;
  curve.push_back({ "t", {} });
  curve.push_back({ "fd_quotient_mean", {} });
  curve.push_back({ "derivative_integral_mean", {} });
  curve.push_back({ "rel_error", {} });
  for (std::size_t i = 0; i <= grid.n_steps; ++i) {
    double qm = 0.0, im = 0.0;
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
      qm += quotient(p, i);
      im += integral(p, i);
    }
    qm /= static_cast<double>(ens.n_paths);
    im /= static_cast<double>(ens.n_paths);
    const double rel = std::abs(qm - im) / std::max(1e-12, std::abs(im));
    max_rel = std::max(max_rel, rel);
    curve[0].values.push_back(grid.times[i]);
    curve[1].values.push_back(qm);
    curve[2].values.push_back(im);
    curve[3].values.push_back(rel);
  }
  emit_csv(curve, (dir / "fd_check.csv").string());
  Config report;
  report["experiment"] = "fd-check";
  report["eps"] = eps;
  report["dt"] = grid.dt;
  report["max_rel_error"] = max_rel;
  write_json(report, (dir / "fd_check.json").string());
  return { "fd_check.csv", "fd_check.json" };
}

} // namespace

TerminalSpec parse_terminal(const Config& j)
{
  const std::string kind = need(j, "kind").get<std::string>();
  if (kind == "affine-gaussian")
    return TerminalSpec::affine_gaussian(need(j, "c").get<double>(),
                                         need(j, "sigma2").get<double>());
  if (kind == "path-integral")
    return TerminalSpec::path_integral(need(j, "alpha").get<double>(),
                                       need(j, "beta").get<double>(),
                                       need(j, "gamma").get<double>());
  if (kind == "asian")
    return TerminalSpec::asian(lookup_payoff(need(j, "f").get<std::string>()),
                               lookup_payoff(need(j, "g").get<std::string>()));
  if (kind == "lookback")
    return TerminalSpec::lookback(lookup_payoff(need(j, "f").get<std::string>()));
  throw std::invalid_argument("config: unknown terminal kind \"" + kind + "\"");
}

RunResult run_experiment(const Config& config, const std::string& out_dir)
{
  const std::string id = need(config, "experiment").get<std::string>();
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  RunResult result;
  result.experiment = id;
  try {
    if (id == "gene-density")
      result.artifacts = run_gene_density(config, dir);
    else if (id == "gene-validate")
      result.artifacts = run_gene_validate(config, dir);
    else if (id == "price-asian")
      result.artifacts = run_price(config, dir, /*asian=*/true);
    else if (id == "price-lookback")
      result.artifacts = run_price(config, dir, /*asian=*/false);
    else if (id == "check-conditions")
      result.artifacts = run_check_conditions(config, dir);
    else if (id == "arcsine-check")
      result.artifacts = run_arcsine(config, dir);
    else if (id == "fd-check")
      result.artifacts = run_fd_check(config, dir);
    else
      throw std::invalid_argument("config: unknown experiment \"" + id + "\"");
  } catch (const std::exception& e) {
    throw std::runtime_error("experiment " + id + ": " + e.what());
  }

  Config manifest;
  manifest["experiment"] = id;
  manifest["artifacts"] = result.artifacts;
  write_json(manifest, (dir / "manifest.json").string());
  return result;
}

} // namespace mcbsde
