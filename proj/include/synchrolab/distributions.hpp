#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/non_central_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace synchrolab::dist {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

// Two-sided p-value for a t statistic.
inline double t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  const boost::math::students_t_distribution<double> d(df);
  return 2.0 * boost::math::cdf(boost::math::complement(d, std::abs(t)));
}

inline double f_sf(double f, double df1, double df2) {
  if (!(f > 0.0)) return 1.0;
  if (!std::isfinite(f)) return 0.0;
  const boost::math::fisher_f_distribution<double> d(df1, df2);
  return boost::math::cdf(boost::math::complement(d, f));
}

inline double noncentral_f_cdf(double f, double df1, double df2, double lambda) {
  if (lambda <= 0.0) return boost::math::cdf(boost::math::fisher_f_distribution<double>(df1, df2), f);
  return boost::math::cdf(boost::math::non_central_f_distribution<double>(df1, df2, lambda), f);
}

/// P(range of k iid standard normals < w).
inline double normal_range_cdf(double w, int k) {
  if (!(w > 0.0)) return 0.0;
  auto integrand = [w, k](double z) {
    // Phi(z) - Phi(z - w), evaluated on whichever tail keeps precision.
    const double band = z > 0.0 ? normal_sf(z - w) - normal_sf(z) : normal_cdf(z) - normal_cdf(z - w);
    return normal_pdf(z) * std::pow(band, k - 1);
  };
  using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
  double total = 0.0;
  // The normal density is below 1e-18 outside +-9.
  const double edges[] = {-9.0, -3.0, 0.0, w / 2.0, w, 3.0 + w, 9.0 + w};
  for (int s = 0; s + 1 < 7; ++s) {
    if (edges[s + 1] <= edges[s]) continue;
    total += gk::integrate(integrand, edges[s], edges[s + 1], 4, 1e-12);
  }
  return std::min(1.0, k * total);
}

/// CDF of the studentized range distribution with k groups and df degrees of
/// freedom, integrating the normal range CDF against the density of
/// s = sqrt(chi2_df / df).
inline double studentized_range_cdf(double q, int k, double df) {
  if (!(q > 0.0)) return 0.0;
  if (!std::isfinite(df) || df > 1e7) return normal_range_cdf(q, k);
  const double half = df / 2.0;
  const double log_norm = std::log(2.0) + half * std::log(half) - boost::math::lgamma(half);
  auto density = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(log_norm + (df - 1.0) * std::log(s) - half * s * s);
  };
  auto integrand = [&](double s) {
    const double d = density(s);
    return d == 0.0 ? 0.0 : d * normal_range_cdf(q * s, k);
  };
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double mode = std::sqrt(std::max(df - 1.0, 0.0) / df);
  const double spread = 1.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, mode - 40.0 * spread);
  const double hi = mode + 40.0 * spread + (df < 10.0 ? 10.0 : 0.0);
  constexpr int kPieces = 16;
  double total = 0.0;
  for (int p = 0; p < kPieces; ++p) {
    const double a = lo + (hi - lo) * p / kPieces;
    const double b = lo + (hi - lo) * (p + 1) / kPieces;
    total += gk::integrate(integrand, a, b, 3, 1e-10);
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace synchrolab::dist
