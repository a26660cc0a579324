#pragma once

// Physical layer: frequency-selective Rayleigh channel draws, per-subcarrier
// OFDM gains, square M-QAM with Gray labeling, AWGN, and maximal-ratio joint
// detection over stacked observations of the same symbol.
//
// Signal scaling: constellations have unit average symbol energy, and
// physical_noise() converts the analysis-side noise level into the matching
// complex noise variance, so per-branch SNR on subcarrier k is |H_k|^2 / N0
// regardless of constellation order.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "selharq/analysis.hpp"
#include "selharq/rng.hpp"

namespace selharq {

enum class ChannelMode {
  tap,             // L time-domain taps per antenna, DFT to subcarrier gains
  iid_subcarrier,  // independent Rayleigh gain per subcarrier (analysis model)
};

// Subcarrier gains for one transmission, bin-major: gain(bin, ant) at
// [bin * rx_antennas + ant]. Flat storage; these are allocated per packet in
// tight loops.
struct ChannelFrame {
  int bins = 0;
  int rx_antennas = 0;
  std::vector<std::complex<double>> gain;

  ChannelFrame() = default;
  ChannelFrame(int n_bins, int n_rx)
      : bins(n_bins), rx_antennas(n_rx),
        gain(static_cast<std::size_t>(n_bins) * n_rx) {}

  std::complex<double> at(int bin, int ant) const {
    return gain[static_cast<std::size_t>(bin) * rx_antennas + ant];
  }

  double norm_sq(int bin) const {
    double s = 0.0;
    for (int a = 0; a < rx_antennas; ++a) s += std::norm(at(bin, a));
    return s;
  }
};

// Received samples, same layout as ChannelFrame.
struct RxFrame {
  int bins = 0;
  int rx_antennas = 0;
  std::vector<std::complex<double>> sample;

  RxFrame() = default;
  RxFrame(int n_bins, int n_rx)
      : bins(n_bins), rx_antennas(n_rx),
        sample(static_cast<std::size_t>(n_bins) * n_rx) {}

  std::complex<double> at(int bin, int ant) const {
    return sample[static_cast<std::size_t>(bin) * rx_antennas + ant];
  }
};

// Per-component noise variance of the complex AWGN that gives the analysis
// model's branch SNR with a unit-energy constellation.
inline double physical_noise(const LinkParams& params) {
  return params.noise_level * 3.0 / (2.0 * (params.constellation_order - 1.0));
}

// Draws one channel realization. In tap mode each antenna gets `taps`
// independent complex Gaussian taps with total power equal to
// 2 * component_variance, and bin gains are the tap DFT evaluated per
// subcarrier; with taps == 1 every bin sees the same flat gain. In
// iid_subcarrier mode every (bin, antenna) gain is drawn independently.
inline ChannelFrame draw_channel(const LinkParams& params, ChannelMode mode, Rng& rng) {
  ChannelFrame ch(params.subcarriers, params.rx_antennas);
  if (mode == ChannelMode::iid_subcarrier) {
    const double sigma = std::sqrt(params.component_variance);
    for (auto& g : ch.gain) g = rng.cgaussian(sigma);
    return ch;
  }
  const int n = params.subcarriers;
  const int taps = params.taps;
  const double tap_sigma = std::sqrt(params.component_variance / taps);
  std::vector<std::complex<double>> cur(taps), step(taps);
  for (int a = 0; a < params.rx_antennas; ++a) {
    for (int t = 0; t < taps; ++t) {
      cur[t] = rng.cgaussian(tap_sigma);
      const double phi = -2.0 * 3.141592653589793238462643383280 * t / n;
      step[t] = {std::cos(phi), std::sin(phi)};
    }
    for (int bin = 0; bin < n; ++bin) {
      std::complex<double> sum = 0.0;
      for (int t = 0; t < taps; ++t) {
        sum += cur[t];
        cur[t] *= step[t];
      }
      ch.gain[static_cast<std::size_t>(bin) * params.rx_antennas + a] = sum;
    }
  }
  return ch;
}

namespace detail {

inline std::uint32_t gray_to_bin(std::uint32_t g) {
  std::uint32_t b = 0;
  while (g) {
    b ^= g;
    g >>= 1;
  }
  return b;
}

// Unit-average-energy amplitude spacing for square M-QAM.
inline double qam_scale(int order) { return std::sqrt(3.0 / (2.0 * (order - 1.0))); }

// One PAM rail: `bits` Gray-labeled bits (MSB first) to amplitude.
inline double rail_amplitude(std::uint32_t gray, int levels, double scale) {
  const std::uint32_t i = gray_to_bin(gray);
  return (levels - 1.0 - 2.0 * i) * scale;
}

inline std::uint32_t rail_slice(double value, int levels, double scale) {
  const double idx = (levels - 1.0 - value / scale) / 2.0;
  long i = std::lround(idx);
  if (i < 0) i = 0;
  if (i >= levels) i = levels - 1;
  const std::uint32_t u = static_cast<std::uint32_t>(i);
  return u ^ (u >> 1);  // back to the Gray label
}

}  // namespace detail

// Maps frame bits to unit-energy Gray-labeled square M-QAM symbols. The
// first half of each symbol's bits selects the real rail (MSB first), the
// second half the imaginary rail.
inline std::vector<std::complex<double>> modulate(const std::vector<std::uint8_t>& bits,
                                                  const LinkParams& params) {
  const int bps = params.bits_per_symbol();
  if (bits.size() % bps != 0)
    throw std::invalid_argument("modulate: bit count not a multiple of bits per symbol");
  const int half = bps / 2;
  const int levels = 1 << half;
  const double scale = detail::qam_scale(params.constellation_order);
  std::vector<std::complex<double>> symbols(bits.size() / bps);
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    const std::uint8_t* b = bits.data() + s * bps;
    std::uint32_t gi = 0, gq = 0;
    for (int k = 0; k < half; ++k) {
      gi = (gi << 1) | b[k];
      gq = (gq << 1) | b[half + k];
    }
    symbols[s] = {detail::rail_amplitude(gi, levels, scale),
                  detail::rail_amplitude(gq, levels, scale)};
  }
  return symbols;
}

// Hard decision on one equalized symbol estimate; writes bits_per_symbol
// bits in the modulate() layout.
inline void demap_symbol(std::complex<double> estimate, const LinkParams& params,
                         std::uint8_t* out) {
  const int bps = params.bits_per_symbol();
  const int half = bps / 2;
  const int levels = 1 << half;
  const double scale = detail::qam_scale(params.constellation_order);
  const std::uint32_t gi = detail::rail_slice(estimate.real(), levels, scale);
  const std::uint32_t gq = detail::rail_slice(estimate.imag(), levels, scale);
  for (int k = 0; k < half; ++k) {
    out[k] = static_cast<std::uint8_t>((gi >> (half - 1 - k)) & 1u);
    out[half + k] = static_cast<std::uint8_t>((gq >> (half - 1 - k)) & 1u);
  }
}

// Passes symbols through a channel realization and adds complex AWGN with
// per-component variance n0_phys / 2. With n0_phys == 0 the output is exact
// and no randomness is consumed.
inline RxFrame transmit(const std::vector<std::complex<double>>& symbols,
                        const ChannelFrame& channel, double n0_phys, Rng& rng) {
  if (static_cast<int>(symbols.size()) != channel.bins)
    throw std::invalid_argument("transmit: symbol count does not match channel bins");
  RxFrame rx(channel.bins, channel.rx_antennas);
  const double sigma = n0_phys > 0.0 ? std::sqrt(n0_phys / 2.0) : 0.0;
  for (int bin = 0; bin < channel.bins; ++bin) {
    for (int a = 0; a < channel.rx_antennas; ++a) {
      std::complex<double> y = channel.at(bin, a) * symbols[bin];
      if (sigma > 0.0) y += rng.cgaussian(sigma);
      rx.sample[static_cast<std::size_t>(bin) * channel.rx_antennas + a] = y;
    }
  }
  return rx;
}

// Same channel pass restricted to the listed bins; other bins carry no
// observation and noise is drawn only for the listed bins, in index order.
inline RxFrame transmit_selected(const std::vector<std::complex<double>>& symbols,
                                 const ChannelFrame& channel,
                                 const std::vector<std::uint32_t>& bins, double n0_phys,
                                 Rng& rng) {
  if (static_cast<int>(symbols.size()) != channel.bins)
    throw std::invalid_argument("transmit: symbol count does not match channel bins");
  RxFrame rx(channel.bins, channel.rx_antennas);
  const double sigma = n0_phys > 0.0 ? std::sqrt(n0_phys / 2.0) : 0.0;
  for (std::uint32_t bin : bins) {
    if (bin >= static_cast<std::uint32_t>(channel.bins))
      throw std::invalid_argument("transmit: selected bin out of range");
    for (int a = 0; a < channel.rx_antennas; ++a) {
      std::complex<double> y = channel.at(static_cast<int>(bin), a) * symbols[bin];
      if (sigma > 0.0) y += rng.cgaussian(sigma);
      rx.sample[static_cast<std::size_t>(bin) * channel.rx_antennas + a] = y;
    }
  }
  return rx;
}

struct SymbolDecision {
  std::complex<double> estimate{0.0, 0.0};
  bool erasure = false;  // no observation accumulated on this bin
};

// Per-bin matched-filter accumulator over an arbitrary number of (partial)
// transmissions. Combining Sum conj(H) * y / Sum |H|^2 is maximal-ratio: the
// estimate's noise variance after J observations of one symbol is
// n0_phys / Sum_j |H_j|^2.
class ObservationStack {
 public:
  explicit ObservationStack(int bins)
      : acc_(bins), norm_(bins, 0.0), depth_(bins, 0) {}

  int bins() const { return static_cast<int>(norm_.size()); }

  void add(const ChannelFrame& ch, const RxFrame& rx) {
    check(ch, rx);
    for (int bin = 0; bin < bins(); ++bin) accumulate(ch, rx, bin);
  }

  void add_selected(const ChannelFrame& ch, const RxFrame& rx,
                    const std::vector<std::uint32_t>& sel) {
    check(ch, rx);
    for (std::uint32_t bin : sel) {
      if (bin >= static_cast<std::uint32_t>(bins()))
        throw std::invalid_argument("ObservationStack: selected bin out of range");
      accumulate(ch, rx, static_cast<int>(bin));
    }
  }

  double norm_sq(int bin) const { return norm_[bin]; }
  int depth(int bin) const { return depth_[bin]; }

  int max_depth() const {
    int d = 0;
    for (int v : depth_)
      if (v > d) d = v;
    return d;
  }

  // Accumulated |H|^2 per bin, the quantities thresholded for selective
  // retransmission.
  std::vector<double> norms() const { return norm_; }

  void reset() {
    std::fill(acc_.begin(), acc_.end(), std::complex<double>(0.0, 0.0));
    std::fill(norm_.begin(), norm_.end(), 0.0);
    std::fill(depth_.begin(), depth_.end(), 0);
  }

  SymbolDecision combine(int bin) const {
    if (norm_[bin] <= 0.0) return {{0.0, 0.0}, true};
    return {acc_[bin] / norm_[bin], false};
  }

 private:
  void check(const ChannelFrame& ch, const RxFrame& rx) const {
    if (ch.bins != bins() || rx.bins != bins() || ch.rx_antennas != rx.rx_antennas)
      throw std::invalid_argument("ObservationStack: frame shape mismatch");
  }

  void accumulate(const ChannelFrame& ch, const RxFrame& rx, int bin) {
    std::complex<double> a = 0.0;
    double n = 0.0;
    for (int ant = 0; ant < ch.rx_antennas; ++ant) {
      const std::complex<double> h = ch.at(bin, ant);
      a += std::conj(h) * rx.at(bin, ant);
      n += std::norm(h);
    }
    acc_[bin] += a;
    norm_[bin] += n;
    depth_[bin] += 1;
  }

  std::vector<std::complex<double>> acc_;
  std::vector<double> norm_;
  std::vector<int> depth_;
};

inline SymbolDecision joint_detect(const ObservationStack& stack, int bin) {
  return stack.combine(bin);
}

// Hard-decides every bin of the stack into a frame of bits. Erased bins
// (depth 0) decide to the all-zero label.
inline std::vector<std::uint8_t> detect_frame(const ObservationStack& stack,
                                              const LinkParams& params) {
  const int bps = params.bits_per_symbol();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(stack.bins()) * bps, 0);
  for (int bin = 0; bin < stack.bins(); ++bin) {
    const SymbolDecision d = stack.combine(bin);
    if (!d.erasure) demap_symbol(d.estimate, params, bits.data() + static_cast<std::size_t>(bin) * bps);
  }
  return bits;
}

// Bins whose accumulated |H|^2 falls strictly below tau, ascending.
inline std::vector<std::uint32_t> select_below(const ObservationStack& stack, double tau) {
  std::vector<std::uint32_t> out;
  for (int bin = 0; bin < stack.bins(); ++bin)
    if (stack.norm_sq(bin) < tau) out.push_back(static_cast<std::uint32_t>(bin));
  return out;
}

// Bins whose single-realization |H|^2 falls strictly below tau, ascending.
inline std::vector<std::uint32_t> select_below(const ChannelFrame& ch, double tau) {
  std::vector<std::uint32_t> out;
  for (int bin = 0; bin < ch.bins; ++bin)
    if (ch.norm_sq(bin) < tau) out.push_back(static_cast<std::uint32_t>(bin));
  return out;
}

}  // namespace selharq
