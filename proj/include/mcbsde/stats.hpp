#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace mcbsde {

//! Normality validation report. Conventions follow the test definitions exactly:
//! moments use the 1/M normalization, JB rejects above 5.99, KS rejects above 1.36
//! with the one-sided sup of F_M - F (the two-sided sup reported alongside).
struct TestReport {
  std::size_t m = 0;
  double s_skew = 0.0;
  double k_kurt = 0.0;
  double jb = 0.0;
  bool jb_reject = false;
  double ks = 0.0;           // sqrt(M) sup_x { F_M(x) - F(x) }
  double ks_two_sided = 0.0; // sqrt(M) sup_x | F_M(x) - F(x) |
  bool ks_reject = false;
  double mean = 0.0;
  double var = 0.0;
};

inline constexpr double jb_critical = 5.99;
inline constexpr double ks_critical = 1.36;

struct JarqueBeraResult {
  double skew = 0.0;
  double kurt = 0.0;
  double jb = 0.0;
  bool reject = false;
};

//! JB = M (S^2/6 + (K-3)^2/24) with S, K the 1/M sample skewness and kurtosis.
JarqueBeraResult jarque_bera(const std::vector<double>& samples);

struct KsResult {
  double ks = 0.0;
  double ks_two_sided = 0.0;
  bool reject = false;
};

//! One-sided Kolmogorov-Smirnov statistic against the normal law fitted to the
//! sample mean and (1/M) variance, evaluated exactly at the sample points.
KsResult ks_normal(const std::vector<double>& samples);

//! (mean, variance) with the 1/M normalization.
std::pair<double, double> sample_moments(const std::vector<double>& samples);

//! Combined JB + KS + moments report for one sample.
TestReport normality_report(const std::vector<double>& samples);

struct HistogramDensity {
  std::vector<double> edges;   // bins + 1 edges
  std::vector<double> heights; // normalized so sum(height * width) = 1
  std::vector<double> stderrs; // per-bin sqrt(p(1-p)/M) / width
  std::size_t m = 0;           // in-range sample count
};

//! Density-normalized histogram over [lo, hi]; samples outside the range are
//! excluded and the in-range mass integrates to one exactly.
HistogramDensity histogram_density(const std::vector<double>& samples, std::size_t bins,
                                   double lo, double hi);

//! Standard normal cumulative distribution function.
double normal_cdf(double x);

} // namespace mcbsde
