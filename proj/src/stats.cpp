#include "mcbsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcbsde {

double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

std::pair<double, double> sample_moments(const std::vector<double>& samples)
{
  if (samples.size() < 2)
    throw std::invalid_argument("sample_moments: need at least two samples");
  const double m = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples)
    mean += x;
  mean /= m;
  double var = 0.0;
  for (double x : samples)
    var += (x - mean) * (x - mean);
  var /= m;
  return { mean, var };
}

namespace {

bool is_constant(const std::vector<double>& samples)
{
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return *lo == *hi;
}

} // namespace

JarqueBeraResult jarque_bera(const std::vector<double>& samples)
{
  if (samples.size() < 4)
    throw std::invalid_argument("jarque_bera: need at least four samples");
  const double m = static_cast<double>(samples.size());
  const auto [mean, var] = sample_moments(samples);
  if (!(var > 0.0) || is_constant(samples))
    throw std::runtime_error("jarque_bera: degenerate sample variance");
  double m3 = 0.0, m4 = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m3 /= m;
  m4 /= m;
  JarqueBeraResult out;
  out.skew = m3 / std::pow(var, 1.5);
  out.kurt = m4 / (var * var);
  out.jb = m * (out.skew * out.skew / 6.0 + (out.kurt - 3.0) * (out.kurt - 3.0) / 24.0);
  out.reject = out.jb > jb_critical;
  return out;
}

KsResult ks_normal(const std::vector<double>& samples)
{
  if (samples.size() < 2)
    throw std::invalid_argument("ks_normal: need at least two samples");
  const auto [mean, var] = sample_moments(samples);
  if (!(var > 0.0) || is_constant(samples))
    throw std::runtime_error("ks_normal: degenerate sample variance");
  const double sd = std::sqrt(var);
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double d_plus = 0.0, d_minus = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mean) / sd);
    d_plus = std::max(d_plus, static_cast<double>(i + 1) / m - f);
    d_minus = std::max(d_minus, f - static_cast<double>(i) / m);
  }
  KsResult out;
  out.ks = std::sqrt(m) * d_plus;
  out.ks_two_sided = std::sqrt(m) * std::max(d_plus, d_minus);
  out.reject = out.ks > ks_critical;
  return out;
}

TestReport normality_report(const std::vector<double>& samples)
{
  TestReport rep;
  rep.m = samples.size();
  const auto [mean, var] = sample_moments(samples);
  rep.mean = mean;
  rep.var = var;
  const JarqueBeraResult jb = jarque_bera(samples);
  rep.s_skew = jb.skew;
  rep.k_kurt = jb.kurt;
  rep.jb = jb.jb;
  rep.jb_reject = jb.reject;
  const KsResult ks = ks_normal(samples);
  rep.ks = ks.ks;
  rep.ks_two_sided = ks.ks_two_sided;
  rep.ks_reject = ks.reject;
  return rep;
}

HistogramDensity histogram_density(const std::vector<double>& samples, std::size_t bins,
                                   double lo, double hi)
{
  if (bins < 1)
    throw std::invalid_argument("histogram_density: bins must be >= 1");
  if (!(hi > lo))
    throw std::invalid_argument("histogram_density: empty range");
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  std::size_t inside = 0;
  for (double x : samples) {
    if (x < lo || x > hi)
      continue;
    auto idx = static_cast<std::size_t>((x - lo) / width);
    if (idx >= bins)
      idx = bins - 1; // x == hi lands in the last bin
    ++counts[idx];
    ++inside;
  }
  if (inside == 0)
    throw std::invalid_argument("histogram_density: no samples in range");
  HistogramDensity out;
  out.m = inside;
  out.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b)
    out.edges[b] = lo + width * static_cast<double>(b);
  out.heights.resize(bins);
  out.stderrs.resize(bins);
  const double m = static_cast<double>(inside);
  for (std::size_t b = 0; b < bins; ++b) {
    const double p = static_cast<double>(counts[b]) / m;
    out.heights[b] = p / width;
    out.stderrs[b] = std::sqrt(p * (1.0 - p) / m) / width;
  }
  return out;
}

} // namespace mcbsde
