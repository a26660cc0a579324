#pragma once

// MAC retransmission protocols over the PHY: plain ARQ, conventional Chase
// combining (CC), selective Chase combining with up to Omega selective
// iterations per round (SCC / MSCC), and per-transmission selective
// complementary retransmission (CCWS).
//
// Shared round shape: a round opens with a full transmission of the frame
// and closes with a CRC verdict on its last decode. A failed round discards
// its observations; combining never crosses rounds. The MAC counter J grows
// by one per transmission event for MSCC and by one per round for the other
// protocols; a packet is lost when a round ends in failure with J at or
// above the round budget.
//
// The CRC is a genie: a decode passes exactly when every bit matches the
// payload, so false positives never occur and measured error rates are pure
// PHY quantities.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "selharq/analysis.hpp"
#include "selharq/phy.hpp"
#include "selharq/rng.hpp"

namespace selharq {

struct ProtocolConfig {
  Protocol kind = Protocol::scc;
  double tau = 0.0;             // selection threshold on accumulated |H|^2
  int max_mac_rounds = 50;      // round budget M
  int mscc_omega = 1;           // selective iterations per round (mscc only)
  int crc_overhead_bits = 0;    // payload bits consumed by a real CRC field
  ChannelMode channel = ChannelMode::tap;

  // The frame must fill the OFDM symbol exactly: frame_bits = subcarriers *
  // bits per symbol. With crc_overhead_bits > 0 the frame still occupies
  // frame_bits on air but only frame_bits - crc_overhead_bits count as
  // delivered payload.
  void validate(const LinkParams& params) const {
    params.validate();
    if (std::isnan(tau) || tau < 0.0)
      throw std::invalid_argument("tau must be >= 0 (may be infinite)");
    if (max_mac_rounds < 1) throw std::invalid_argument("max_mac_rounds must be >= 1");
    if (mscc_omega < 1) throw std::invalid_argument("mscc_omega must be >= 1");
    if (crc_overhead_bits < 0 || crc_overhead_bits >= params.frame_bits)
      throw std::invalid_argument("crc_overhead_bits must be in [0, frame_bits)");
    if (params.frame_bits != params.subcarriers * params.bits_per_symbol())
      throw std::invalid_argument("frame_bits must equal subcarriers * bits per symbol");
  }
};

struct SelectionSet {
  std::vector<std::uint32_t> indices;  // ascending subcarrier indices
  int beta() const { return static_cast<int>(indices.size()); }
};

// Subcarriers whose accumulated |H|^2 lies strictly below tau.
inline SelectionSet select_for_retx(const std::vector<double>& cumulative_norms, double tau) {
  SelectionSet sel;
  for (std::size_t bin = 0; bin < cumulative_norms.size(); ++bin)
    if (cumulative_norms[bin] < tau) sel.indices.push_back(static_cast<std::uint32_t>(bin));
  return sel;
}

struct TransferRecord {
  enum class Outcome { delivered, lost };

  long long bits_sent = 0;       // frame bits plus all selective retransmissions
  long long bits_delivered = 0;  // payload bits on success, 0 on loss
  int rounds_used = 0;           // MAC counter J at termination
  std::vector<int> retx_symbol_counts;  // beta of each selective pass, in order
  Outcome outcome = Outcome::lost;
};

// TransferRecord plus the measurement side channels the sweeps aggregate.
struct PacketResult {
  TransferRecord record;
  long long decision_errors = 0;  // bit errors of each round's closing decision
  long long decision_bits = 0;    // frame_bits per round
  int failed_rounds = 0;
  int full_transmissions = 0;
  int max_stack_depth = 0;
};

namespace detail {

inline std::vector<double> channel_norms(const ChannelFrame& ch) {
  std::vector<double> norms(ch.bins);
  for (int bin = 0; bin < ch.bins; ++bin) norms[bin] = ch.norm_sq(bin);
  return norms;
}

// Per-packet state shared by the protocol engines.
class PacketSession {
 public:
  PacketSession(const LinkParams& params, const ProtocolConfig& cfg, Rng& rng)
      : p_(params), cfg_(cfg), rng_(rng), n0_(physical_noise(params)) {
    cfg.validate(params);
    payload_.resize(p_.frame_bits);
    std::uint64_t word = 0;
    int left = 0;
    for (auto& b : payload_) {
      if (left == 0) {
        word = rng_.next_u64();
        left = 64;
      }
      b = static_cast<std::uint8_t>(word & 1u);
      word >>= 1;
      --left;
    }
    symbols_ = modulate(payload_, p_);
  }

  ChannelFrame full_pass(ObservationStack& stack) {
    ChannelFrame ch = draw_channel(p_, cfg_.channel, rng_);
    stack.add(ch, transmit(symbols_, ch, n0_, rng_));
    out_.record.bits_sent += p_.frame_bits;
    out_.full_transmissions += 1;
    return ch;
  }

  // An empty selection puts nothing on air and consumes no randomness.
  void selective_pass(ObservationStack& stack, const SelectionSet& sel) {
    out_.record.retx_symbol_counts.push_back(sel.beta());
    out_.record.bits_sent += static_cast<long long>(sel.beta()) * p_.bits_per_symbol();
    if (sel.indices.empty()) return;
    const ChannelFrame ch = draw_channel(p_, cfg_.channel, rng_);
    stack.add_selected(ch, transmit_selected(symbols_, ch, sel.indices, n0_, rng_),
                       sel.indices);
  }

  bool decode(const ObservationStack& stack, std::vector<std::uint8_t>& decision) {
    decision = detect_frame(stack, p_);
    if (stack.max_depth() > out_.max_stack_depth) out_.max_stack_depth = stack.max_depth();
    return decision == payload_;
  }

  void close_round(const std::vector<std::uint8_t>& decision, bool ok, int mac_counter) {
    long long errs = 0;
    for (std::size_t i = 0; i < payload_.size(); ++i) errs += decision[i] != payload_[i];
    out_.decision_errors += errs;
    out_.decision_bits += p_.frame_bits;
    if (!ok) out_.failed_rounds += 1;
    out_.record.rounds_used = mac_counter;
  }

  void deliver() {
    out_.record.bits_delivered = p_.frame_bits - cfg_.crc_overhead_bits;
    out_.record.outcome = TransferRecord::Outcome::delivered;
  }

  PacketResult finish() {
    long long expect = static_cast<long long>(p_.frame_bits) * out_.full_transmissions;
    for (const int beta : out_.record.retx_symbol_counts)
      expect += static_cast<long long>(beta) * p_.bits_per_symbol();
    if (expect != out_.record.bits_sent)
      throw std::logic_error("transmission accounting mismatch");
    return std::move(out_);
  }

  const LinkParams& params() const { return p_; }
  const ProtocolConfig& config() const { return cfg_; }

 private:
  const LinkParams& p_;
  const ProtocolConfig& cfg_;
  Rng& rng_;
  double n0_;
  std::vector<std::uint8_t> payload_;
  std::vector<std::complex<double>> symbols_;
  PacketResult out_;
};

}  // namespace detail

// Plain ARQ: one full transmission and a fresh decode per round.
inline PacketResult run_packet_arq(const LinkParams& params, const ProtocolConfig& cfg,
                                   Rng& rng) {
  detail::PacketSession s(params, cfg, rng);
  std::vector<std::uint8_t> decision;
  for (int j = 1; j <= cfg.max_mac_rounds; ++j) {
    ObservationStack stack(params.subcarriers);
    s.full_pass(stack);
    const bool ok = s.decode(stack, decision);
    s.close_round(decision, ok, j);
    if (ok) {
      s.deliver();
      break;
    }
  }
  return s.finish();
}

// Conventional CC: a failed first decode triggers one full retransmission
// combined at stack depth 2; a failed joint decode discards the round.
inline PacketResult run_packet_cc(const LinkParams& params, const ProtocolConfig& cfg,
                                  Rng& rng) {
  detail::PacketSession s(params, cfg, rng);
  std::vector<std::uint8_t> decision;
  for (int j = 1; j <= cfg.max_mac_rounds; ++j) {
    ObservationStack stack(params.subcarriers);
    s.full_pass(stack);
    bool ok = s.decode(stack, decision);
    if (!ok) {
      s.full_pass(stack);
      ok = s.decode(stack, decision);
    }
    s.close_round(decision, ok, j);
    if (ok) {
      s.deliver();
      break;
    }
  }
  return s.finish();
}

// SCC / MSCC: after a failed decode, up to `omega` selective iterations per
// round retransmit the subcarriers whose accumulated |H|^2 is still below
// tau, fusing each into the running stack before re-decoding. J counts
// transmission events (the opening full pass and every selective iteration),
// so a failed round advances J by 1 + omega.
inline PacketResult run_packet_mscc(const LinkParams& params, const ProtocolConfig& cfg,
                                    Rng& rng) {
  const int omega = cfg.kind == Protocol::scc ? 1 : cfg.mscc_omega;
  detail::PacketSession s(params, cfg, rng);
  std::vector<std::uint8_t> decision;
  int j = 0;
  while (true) {
    ObservationStack stack(params.subcarriers);
    s.full_pass(stack);
    ++j;
    bool ok = s.decode(stack, decision);
    for (int iter = 0; !ok && iter < omega; ++iter) {
      s.selective_pass(stack, select_for_retx(stack.norms(), cfg.tau));
      ++j;
      ok = s.decode(stack, decision);
    }
    s.close_round(decision, ok, j);
    if (ok) {
      s.deliver();
      break;
    }
    if (j >= cfg.max_mac_rounds) break;
  }
  return s.finish();
}

// CCWS: every full transmission is chased by one selective retransmission of
// its own below-threshold subcarriers before the decode, giving decode
// depths of up to 2 after the first slot and up to 4 after the second.
inline PacketResult run_packet_ccws(const LinkParams& params, const ProtocolConfig& cfg,
                                    Rng& rng) {
  detail::PacketSession s(params, cfg, rng);
  std::vector<std::uint8_t> decision;
  for (int j = 1; j <= cfg.max_mac_rounds; ++j) {
    ObservationStack stack(params.subcarriers);
    s.full_pass(stack);
    s.selective_pass(stack, select_for_retx(stack.norms(), cfg.tau));
    bool ok = s.decode(stack, decision);
    if (!ok) {
      const ChannelFrame retx = s.full_pass(stack);
      s.selective_pass(stack, select_for_retx(detail::channel_norms(retx), cfg.tau));
      ok = s.decode(stack, decision);
    }
    s.close_round(decision, ok, j);
    if (ok) {
      s.deliver();
      break;
    }
  }
  return s.finish();
}

inline PacketResult run_packet(const LinkParams& params, const ProtocolConfig& cfg, Rng& rng) {
  switch (cfg.kind) {
    case Protocol::single:
      return run_packet_arq(params, cfg, rng);
    case Protocol::cc:
      return run_packet_cc(params, cfg, rng);
    case Protocol::scc:
    case Protocol::mscc:
      return run_packet_mscc(params, cfg, rng);
    case Protocol::ccws:
      return run_packet_ccws(params, cfg, rng);
  }
  throw std::invalid_argument("unknown protocol");
}

}  // namespace selharq
