#pragma once

// Closed-form BER upper bounds and throughput lower bounds for single
// transmission, full Chase combining, selective Chase combining (SCC), and
// Chase combining with selective retransmission on both slots (CCWS), plus
// frame-error conversion and the expected retransmission fraction m.

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "numerics.hpp"

namespace selharq {

enum class Protocol { single, cc, scc, mscc, ccws };

inline const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::single: return "single";
    case Protocol::cc: return "cc";
    case Protocol::scc: return "scc";
    case Protocol::mscc: return "mscc";
    case Protocol::ccws: return "ccws";
  }
  throw std::invalid_argument("unknown protocol");
}

inline Protocol protocol_from_name(std::string_view name) {
  if (name == "single") return Protocol::single;
  if (name == "cc") return Protocol::cc;
  if (name == "scc") return Protocol::scc;
  if (name == "mscc") return Protocol::mscc;
  if (name == "ccws") return Protocol::ccws;
  throw std::invalid_argument("unknown protocol name: " + std::string(name));
}

namespace detail {

// All emitted numbers use 6 significant digits.
inline std::string format_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

// Link-level parameters shared by the bounds and the simulator. Symbol
// energy is normalized to 1, so the linear SNR is 1/noise_level.
struct LinkParams {
  int constellation_order = 4;      // M, square QAM, power of 4
  double mod_const_c = 1.0;         // c = 2/log2(M)
  double mod_const_g = 2.0;         // distance constant, 2 for 4-QAM
  double noise_level = 1.0;         // N0
  int rx_antennas = 1;              // n_r
  double component_variance = 0.5;  // per real/imag channel component
  int subcarriers = 512;            // N_s
  int taps = 1;                     // L
  int frame_bits = 1024;            // L_f, default N_s * log2(M)

  int bits_per_symbol() const {
    int b = 0;
    while ((1 << b) < constellation_order) ++b;
    return b;
  }

  ChiSquareSpec branch_spec() const { return ChiSquareSpec{rx_antennas, component_variance}; }

  double snr_linear() const { return 1.0 / noise_level; }

  void validate() const {
    const int m = constellation_order;
    if (m < 4 || (m & (m - 1)) != 0 || bits_per_symbol() % 2 != 0)
      throw std::invalid_argument("constellation_order must be a power of 4");
    if (!(mod_const_c > 0.0) || !(mod_const_g > 0.0))
      throw std::invalid_argument("modulation constants must be positive");
    if (!(noise_level > 0.0) || !std::isfinite(noise_level))
      throw std::invalid_argument("noise_level must be positive and finite");
    if (rx_antennas < 1) throw std::invalid_argument("rx_antennas must be >= 1");
    if (!(component_variance > 0.0))
      throw std::invalid_argument("component_variance must be positive");
    if (subcarriers < 1) throw std::invalid_argument("subcarriers must be >= 1");
    if (taps < 1 || taps > subcarriers)
      throw std::invalid_argument("taps must be in [1, subcarriers]");
    if (frame_bits < 1) throw std::invalid_argument("frame_bits must be >= 1");
  }

  static LinkParams from_snr_db(double snr_db, int order = 4, int n_rx = 1,
                                int n_subcarriers = 512, int n_taps = 1) {
    LinkParams p;
    p.constellation_order = order;
    p.noise_level = std::pow(10.0, -snr_db / 10.0);
    p.rx_antennas = n_rx;
    p.subcarriers = n_subcarriers;
    p.taps = n_taps;
    p.mod_const_c = 2.0 / p.bits_per_symbol();
    p.mod_const_g = 2.0;
    p.frame_bits = n_subcarriers * p.bits_per_symbol();
    p.validate();
    return p;
  }
};

// A bound together with a flag recording whether it had to be clamped into
// [0, 1]. With c <= 1 the raw four-term sums stay below c/3, so the flag is
// a guard rail rather than an expected event.
struct BoundValue {
  double value = 0.0;
  bool clamped = false;
  operator double() const { return value; }
};

// All five BER bounds at one (params, tau) point.
struct BerPoint {
  BoundValue single_tx;
  BoundValue full_cc;
  BoundValue scc_joint;
  BoundValue ccws_first;
  BoundValue ccws_joint;
};

// Frame-level inputs to the throughput formulas.
struct ThroughputInputs {
  double p_frame_err_first = 0.0;  // p_eps or p_eps1
  double p_frame_err_joint = 0.0;  // p_eps_s or p_eps2
  double retx_fraction = 0.0;      // m
  double alpha = 0.0;              // product of the two frame-error terms

  static ThroughputInputs from_frame_errors(double first, double joint, double m) {
    return ThroughputInputs{first, joint, m, first * joint};
  }
};

namespace detail {

inline BoundValue clamp_unit(double raw) {
  if (raw > 1.0) return BoundValue{1.0, true};
  if (raw < 0.0) return BoundValue{0.0, true};
  return BoundValue{raw, false};
}

// The two exponential rates of the Gaussian-tail approximation
// (1/12) e^{-x^2/2} + (1/4) e^{-2 x^2/3} evaluated at x^2 = g |H|^2 / N0.
struct BoundRates {
  double rate0;  // g / (2 N0)
  double rate1;  // 2 g / (3 N0)
};

inline BoundRates bound_rates(const LinkParams& p) {
  return BoundRates{p.mod_const_g / (2.0 * p.noise_level),
                    2.0 * p.mod_const_g / (3.0 * p.noise_level)};
}

// Per-rate MGF pieces of the selective-combining bound at threshold tau:
// f = full MGF, u = upper truncation (gain above tau, kept as-is),
// l = lower truncation (gain below tau, to be combined with a fresh draw).
struct BoundTerms {
  double f0, u0, l0;
  double f1, u1, l1;
};

inline BoundTerms bound_terms(const LinkParams& p, double tau) {
  const ChiSquareSpec spec = p.branch_spec();
  const BoundRates r = bound_rates(p);
  BoundTerms t;
  t.f0 = truncated_mgf(spec, r.rate0, 0.0, MgfSide::upper);
  t.f1 = truncated_mgf(spec, r.rate1, 0.0, MgfSide::upper);
  t.u0 = truncated_mgf(spec, r.rate0, tau, MgfSide::upper);
  t.u1 = truncated_mgf(spec, r.rate1, tau, MgfSide::upper);
  t.l0 = truncated_mgf(spec, r.rate0, tau, MgfSide::lower);
  t.l1 = truncated_mgf(spec, r.rate1, tau, MgfSide::lower);
  return t;
}

}  // namespace detail

// Expected fraction of subcarriers whose gain falls below tau.
inline double retx_fraction_m(const LinkParams& params, double tau) {
  params.validate();
  return chi2_cdf(params.branch_spec(), tau);
}

// BER bound for the joint detection of SCC at threshold tau. A subcarrier
// above tau contributes its single observation; one below tau is combined
// with an independent retransmission. tau = 0 gives the single-transmission
// bound, tau = infinity the full Chase-combining bound.
inline BoundValue ber_scc_joint(const LinkParams& params, double tau) {
  params.validate();
  const detail::BoundTerms t = detail::bound_terms(params, tau);
  const double raw =
      params.mod_const_c * ((t.u0 + t.l0 * t.f0) / 12.0 + (t.u1 + t.l1 * t.f1) / 4.0);
  return detail::clamp_unit(raw);
}

inline BoundValue ber_single(const LinkParams& params) { return ber_scc_joint(params, 0.0); }

inline BoundValue ber_full_cc(const LinkParams& params) {
  return ber_scc_joint(params, std::numeric_limits<double>::infinity());
}

// First joint detection of CCWS has the same structure as SCC.
inline BoundValue ber_ccws_first(const LinkParams& params, double tau) {
  return ber_scc_joint(params, tau);
}

// Second joint detection of CCWS: both the original slot and the full
// retransmission slot carry their own selective duplicates, so each rate
// term is the square of the per-slot factor (up to four independent
// realizations per subcarrier).
inline BoundValue ber_ccws_joint(const LinkParams& params, double tau) {
  params.validate();
  const detail::BoundTerms t = detail::bound_terms(params, tau);
  const double a0 = t.u0 + t.l0 * t.f0;
  const double a1 = t.u1 + t.l1 * t.f1;
  const double raw = params.mod_const_c * (a0 * a0 / 12.0 + a1 * a1 / 4.0);
  return detail::clamp_unit(raw);
}

inline BerPoint ber_point(const LinkParams& params, double tau) {
  BerPoint b;
  b.single_tx = ber_single(params);
  b.full_cc = ber_full_cc(params);
  b.scc_joint = ber_scc_joint(params, tau);
  b.ccws_first = ber_ccws_first(params, tau);
  b.ccws_joint = ber_ccws_joint(params, tau);
  return b;
}

// Probability that a frame of frame_bits independent bits contains at least
// one error.
inline double frame_error(double bit_error, int frame_bits) {
  if (!(bit_error >= 0.0) || bit_error > 1.0)
    throw std::domain_error("frame_error: bit_error outside [0, 1]");
  if (frame_bits < 1) throw std::domain_error("frame_error: frame_bits must be >= 1");
  if (bit_error == 1.0) return 1.0;
  return -std::expm1(frame_bits * std::log1p(-bit_error));
}

// Throughput of SCC: a cycle is a full transmission (frame-error p_eps)
// followed, on failure, by a selective pass of expected relative size m and
// a joint decode (frame-error p_eps_s).
inline double throughput_scc(double p_eps, double p_eps_s, double m) {
  if (!(p_eps >= 0.0) || p_eps > 1.0 || !(p_eps_s >= 0.0) || p_eps_s > 1.0 || !(m >= 0.0) ||
      m > 1.0)
    throw std::domain_error("throughput_scc: inputs outside [0, 1]");
  const double alpha = p_eps * p_eps_s;
  const double p_c = 1.0 - p_eps;
  const double p_cs = 1.0 - p_eps_s;
  const double denom = p_c * (1.0 + m * alpha) + p_eps * p_cs * (1.0 + m);
  if (denom == 0.0) return 0.0;
  return (1.0 - alpha) * (1.0 - alpha) / denom;
}

// Throughput of CCWS: every transmission unit (full slot plus its selective
// duplicate pass) costs 1 + m frames; a cycle spends one unit when the first
// joint decode succeeds and two otherwise.
inline double throughput_ccws(double p_eps1, double p_eps2, double m) {
  if (!(p_eps1 >= 0.0) || p_eps1 > 1.0 || !(p_eps2 >= 0.0) || p_eps2 > 1.0 || !(m >= 0.0) ||
      m > 1.0)
    throw std::domain_error("throughput_ccws: inputs outside [0, 1]");
  const double alpha = p_eps1 * p_eps2;
  const double p_c1 = 1.0 - p_eps1;
  const double p_c2 = 1.0 - p_eps2;
  const double denom = (p_c1 * (1.0 + alpha) + 2.0 * p_eps1 * p_c2) * (1.0 + m);
  if (denom == 0.0) return 0.0;
  return (1.0 - alpha) * (1.0 - alpha) / denom;
}

// Analytical reference point for one protocol: BER bound and throughput
// lower bound. tau is ignored for single transmission and conventional CC;
// MSCC has closed forms only for one selective iteration, so omega > 1
// yields NaN rather than a guess.
struct AnalyticPoint {
  double ber = 0.0;
  double eta = 0.0;
};

inline AnalyticPoint analytic_point(Protocol proto, const LinkParams& params, double tau,
                                    int mscc_omega = 1) {
  params.validate();
  const int lf = params.frame_bits;
  switch (proto) {
    case Protocol::single: {
      const double ber = ber_single(params);
      return AnalyticPoint{ber, 1.0 - frame_error(ber, lf)};
    }
    case Protocol::cc: {
      const double p_eps = frame_error(ber_single(params), lf);
      const double p_eps_s = frame_error(ber_full_cc(params), lf);
      return AnalyticPoint{ber_full_cc(params), throughput_scc(p_eps, p_eps_s, 1.0)};
    }
    case Protocol::mscc:
      if (mscc_omega != 1) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return AnalyticPoint{nan, nan};
      }
      [[fallthrough]];
    case Protocol::scc: {
      const double ber = ber_scc_joint(params, tau);
      const double p_eps = frame_error(ber_single(params), lf);
      const double eta =
          throughput_scc(p_eps, frame_error(ber, lf), retx_fraction_m(params, tau));
      return AnalyticPoint{ber, eta};
    }
    case Protocol::ccws: {
      const double ber1 = ber_ccws_first(params, tau);
      const double ber2 = ber_ccws_joint(params, tau);
      const double eta = throughput_ccws(frame_error(ber1, lf), frame_error(ber2, lf),
                                         retx_fraction_m(params, tau));
      return AnalyticPoint{ber2, eta};
    }
  }
  throw std::invalid_argument("unknown protocol");
}

// Threshold at which a subcarrier's instantaneous bound c Q(sqrt(g tau / N0))
// equals target_ber.
inline double threshold_from_target_ber(const LinkParams& params, double target_ber) {
  params.validate();
  const double c = params.mod_const_c;
  if (!(target_ber > 0.0) || !(target_ber < c))
    throw std::domain_error("threshold_from_target_ber: target must be in (0, c)");
  const double z = q_inverse(target_ber / c);
  return params.noise_level / params.mod_const_g * z * z;
}

}  // namespace selharq
