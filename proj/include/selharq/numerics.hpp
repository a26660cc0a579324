#pragma once

// Gaussian tail, chi-square, and truncated-MGF machinery used by the
// closed-form error bounds. Everything is pure and reentrant.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace selharq {

// Chi-square with 2*half_degrees degrees of freedom, scaled so each of the
// 2*half_degrees underlying Gaussian components has variance
// component_variance. Mean = 2 * half_degrees * component_variance.
struct ChiSquareSpec {
  int half_degrees = 1;        // n_r
  double component_variance = 0.5;
};

// Scale of an exponentially weighted chi-square integral:
// rho^2 = sigma^2 / (1 + 2 * exponent_rate * sigma^2).
struct MgfScale {
  double rho = 0.0;
  double exponent_rate = 0.0;
};

enum class MgfSide { upper, lower };

namespace detail {

inline void check_chi2_spec(const ChiSquareSpec& spec) {
  if (spec.half_degrees < 1 || !(spec.component_variance > 0.0))
    throw std::domain_error("chi-square spec requires half_degrees >= 1 and positive variance");
}

// log of Q(n, u) = exp(-u) * sum_{k<n} u^k / k!  (regularized upper gamma,
// integer n), evaluated in log space so large u does not underflow term-wise.
inline double log_gamma_q_int(int n, double u) {
  if (u == 0.0) return 0.0;
  if (std::isinf(u)) return -std::numeric_limits<double>::infinity();
  double max_l = 0.0;  // k = 0 term
  const double lu = std::log(u);
  for (int k = 1; k < n; ++k) {
    const double l = k * lu - std::lgamma(k + 1.0);
    if (l > max_l) max_l = l;
  }
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const double l = (k == 0) ? 0.0 : k * lu - std::lgamma(k + 1.0);
    s += std::exp(l - max_l);
  }
  return -u + max_l + std::log(s);
}

// Regularized lower incomplete gamma P(n, u) for integer n. The ascending
// series avoids the 1 - Q cancellation that dominates at small u.
inline double gamma_p_int(int n, double u) {
  if (u <= 0.0) return 0.0;
  if (std::isinf(u)) return 1.0;
  if (u < n + 1.0) {
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < 1000; ++j) {
      term *= u / (n + j);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::exp(n * std::log(u) - u - std::lgamma(n + 1.0)) * sum;
  }
  return 1.0 - std::exp(log_gamma_q_int(n, u));
}

}  // namespace detail

// Gaussian tail probability P(N(0,1) > x).
inline double q_function(double x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  return 0.5 * std::erfc(x * inv_sqrt2);
}

// Inverse of q_function on (0,1), by bisection (runs once per SNR point;
// correctness over speed).
inline double q_inverse(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::domain_error("q_inverse requires 0 < p < 1");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -q_inverse(1.0 - p);
  double lo = 0.0, hi = 45.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (q_function(mid) > p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Exponential two-term approximation of the Gaussian tail,
// (1/12) e^{-x^2/2} + (1/4) e^{-2x^2/3}. Valid for x >= 0 only.
inline double q_approx(double x) {
  if (!(x >= 0.0)) throw std::domain_error("q_approx requires x >= 0");
  const double x2 = x * x;
  return std::exp(-0.5 * x2) / 12.0 + std::exp(-2.0 * x2 / 3.0) / 4.0;
}

// P(chi <= tau) for the scaled chi-square described by spec.
inline double chi2_cdf(const ChiSquareSpec& spec, double tau) {
  detail::check_chi2_spec(spec);
  if (std::isnan(tau) || tau < 0.0) throw std::domain_error("chi2_cdf requires tau >= 0");
  if (std::isinf(tau)) return 1.0;
  return detail::gamma_p_int(spec.half_degrees, tau / (2.0 * spec.component_variance));
}

// Smallest tau with chi2_cdf(spec, tau) >= p, for p in [0, 1).
inline double chi2_quantile(const ChiSquareSpec& spec, double p) {
  detail::check_chi2_spec(spec);
  if (!(p >= 0.0) || !(p < 1.0))
    throw std::domain_error("chi2_quantile requires 0 <= p < 1");
  if (p == 0.0) return 0.0;
  double hi = 2.0 * spec.half_degrees * spec.component_variance;
  while (chi2_cdf(spec, hi) < p) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(spec, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline MgfScale mgf_scale(const ChiSquareSpec& spec, double rate) {
  detail::check_chi2_spec(spec);
  if (!(rate > 0.0)) throw std::domain_error("mgf_scale requires rate > 0");
  const double s2 = spec.component_variance;
  return MgfScale{std::sqrt(s2 / (1.0 + 2.0 * rate * s2)), rate};
}

// Integral of exp(-rate * x) * f(x) over [tau, inf) (upper) or [0, tau]
// (lower), where f is the spec's chi-square density. Closed form
// (rho/sigma)^{2n} * Q(n, tau / (2 rho^2)) evaluated in log space.
inline double truncated_mgf(const ChiSquareSpec& spec, double rate, double tau, MgfSide side) {
  detail::check_chi2_spec(spec);
  if (!(rate > 0.0)) throw std::domain_error("truncated_mgf requires rate > 0");
  if (std::isnan(tau) || tau < 0.0) throw std::domain_error("truncated_mgf requires tau >= 0");
  const int n = spec.half_degrees;
  const double s2 = spec.component_variance;
  const double rho2 = s2 / (1.0 + 2.0 * rate * s2);
  const double log_full = n * std::log(rho2 / s2);
  const double u = std::isinf(tau) ? tau : tau / (2.0 * rho2);
  if (side == MgfSide::upper) return std::exp(log_full + detail::log_gamma_q_int(n, u));
  return std::exp(log_full) * detail::gamma_p_int(n, u);
}

}  // namespace selharq
