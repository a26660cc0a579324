#pragma once

// Monte Carlo driver: sweeps SNR points and protocol configurations,
// aggregates BER / FER / throughput with batch-means standard errors, and
// lines the measurements up against the analytical curves.
//
// Determinism: every packet runs on its own counter-derived RNG stream and
// lands in a batch keyed by packet index, and per-batch tallies are plain
// integers, so merging worker partials is exact and the result is
// byte-identical for any worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "selharq/analysis.hpp"
#include "selharq/protocols.hpp"
#include "selharq/rng.hpp"
#include "selharq/version.hpp"

namespace selharq {

// One protocol entry of a sweep. tau_per_snr, when non-empty, carries one
// threshold per SNR point (e.g. a ThresholdTable column); otherwise
// config.tau applies everywhere.
struct ProtocolSweep {
  ProtocolConfig config;
  std::vector<double> tau_per_snr;
  std::string label;  // CSV protocol column; defaults to the protocol name
};

struct SweepSpec {
  std::vector<double> snr_db_points;
  std::vector<ProtocolSweep> protocols;
  long long packets_per_point = 10000;
  std::uint64_t seed = 1;
  ChannelMode channel_mode = ChannelMode::tap;
  int constellation_order = 4;
  int rx_antennas = 1;
  int subcarriers = 512;
  int taps = 10;
  int workers = 1;
  int batches = 25;

  void validate() const {
    if (snr_db_points.empty()) throw std::invalid_argument("sweep needs at least one SNR point");
    for (const double s : snr_db_points)
      if (!std::isfinite(s)) throw std::invalid_argument("SNR points must be finite");
    if (protocols.empty()) throw std::invalid_argument("sweep needs at least one protocol");
    for (const auto& ps : protocols)
      if (!ps.tau_per_snr.empty() && ps.tau_per_snr.size() != snr_db_points.size())
        throw std::invalid_argument("tau_per_snr must match the SNR grid");
    if (packets_per_point < 1) throw std::invalid_argument("packets_per_point must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (batches < 1) throw std::invalid_argument("batches must be >= 1");
  }
};

struct SweepRow {
  double snr_db = 0.0;
  std::string protocol;
  double tau = 0.0;
  double ber_m = 0.0;
  double ber_a = 0.0;
  double fer_m = 0.0;
  double eta_m = 0.0;
  double eta_a = 0.0;
  double stderr_ber = 0.0;
  double stderr_eta = 0.0;
  double loss_rate = 0.0;
  double mean_rounds = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  static const char* csv_header() {
    return "snr_db,protocol,tau,ber_m,ber_a,fer_m,eta_m,eta_a,stderr_ber,stderr_eta,"
           "loss_rate,mean_rounds";
  }

  void to_csv(std::ostream& os, const std::string& config_echo = "") const {
    os << "# selharq " << version;
    if (!config_echo.empty()) os << " | " << config_echo;
    os << '\n' << csv_header() << '\n';
    for (const auto& r : rows) {
      os << detail::format_g6(r.snr_db) << ',' << r.protocol << ','
         << detail::format_g6(r.tau) << ',' << detail::format_g6(r.ber_m) << ','
         << detail::format_g6(r.ber_a) << ',' << detail::format_g6(r.fer_m) << ','
         << detail::format_g6(r.eta_m) << ',' << detail::format_g6(r.eta_a) << ','
         << detail::format_g6(r.stderr_ber) << ',' << detail::format_g6(r.stderr_eta) << ','
         << detail::format_g6(r.loss_rate) << ',' << detail::format_g6(r.mean_rounds) << '\n';
    }
  }

  void to_json(std::ostream& os, const std::string& config_echo = "") const {
    auto num = [](double v) {
      return std::isfinite(v) ? detail::format_g6(v) : std::string("null");
    };
    os << "{\n  \"tool\": \"selharq\",\n  \"version\": \"" << version << "\",\n"
       << "  \"config\": \"" << config_echo << "\",\n  \"rows\": [";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      os << (i ? ",\n    " : "\n    ") << "{\"snr_db\": " << num(r.snr_db)
         << ", \"protocol\": \"" << r.protocol << "\", \"tau\": " << num(r.tau)
         << ", \"ber_m\": " << num(r.ber_m) << ", \"ber_a\": " << num(r.ber_a)
         << ", \"fer_m\": " << num(r.fer_m) << ", \"eta_m\": " << num(r.eta_m)
         << ", \"eta_a\": " << num(r.eta_a) << ", \"stderr_ber\": " << num(r.stderr_ber)
         << ", \"stderr_eta\": " << num(r.stderr_eta)
         << ", \"loss_rate\": " << num(r.loss_rate)
         << ", \"mean_rounds\": " << num(r.mean_rounds) << "}";
    }
    os << (rows.empty() ? "]" : "\n  ]") << "\n}\n";
  }
};

namespace detail {

struct BatchTally {
  long long decision_errors = 0;
  long long decision_bits = 0;
  long long failed_rounds = 0;
  long long rounds = 0;
  long long bits_delivered = 0;
  long long bits_sent = 0;
  long long lost = 0;
  long long packets = 0;
  long long mac_rounds = 0;

  void merge(const BatchTally& o) {
    decision_errors += o.decision_errors;
    decision_bits += o.decision_bits;
    failed_rounds += o.failed_rounds;
    rounds += o.rounds;
    bits_delivered += o.bits_delivered;
    bits_sent += o.bits_sent;
    lost += o.lost;
    packets += o.packets;
    mac_rounds += o.mac_rounds;
  }
};

// Standard error of a pooled ratio via batch means.
inline double batch_stderr(const std::vector<double>& means) {
  const std::size_t b = means.size();
  if (b < 2) return 0.0;
  double mean = 0.0;
  for (const double x : means) mean += x;
  mean /= static_cast<double>(b);
  double ss = 0.0;
  for (const double x : means) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (static_cast<double>(b) * (b - 1.0)));
}

inline std::vector<BatchTally> run_point(const LinkParams& params, const ProtocolConfig& cfg,
                                         long long packets, std::uint64_t seed,
                                         std::uint64_t snr_idx, std::uint64_t proto_idx,
                                         int workers, int batches) {
  const int frame_bits = params.frame_bits;
  auto work = [&](int w, std::vector<BatchTally>& acc) {
    for (long long i = w; i < packets; i += workers) {
      Rng rng(derive_stream(seed, snr_idx, proto_idx, static_cast<std::uint64_t>(i)));
      const PacketResult r = run_packet(params, cfg, rng);
      BatchTally& b = acc[static_cast<std::size_t>(i % batches)];
      b.decision_errors += r.decision_errors;
      b.decision_bits += r.decision_bits;
      b.failed_rounds += r.failed_rounds;
      b.rounds += r.decision_bits / frame_bits;
      b.bits_delivered += r.record.bits_delivered;
      b.bits_sent += r.record.bits_sent;
      b.lost += r.record.outcome == TransferRecord::Outcome::lost;
      b.packets += 1;
      b.mac_rounds += r.record.rounds_used;
    }
  };

  if (workers == 1) {
    std::vector<BatchTally> acc(batches);
    work(0, acc);
    return acc;
  }
  std::vector<std::vector<BatchTally>> partials(workers, std::vector<BatchTally>(batches));
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        work(w, partials[w]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<BatchTally> acc(batches);
  for (int w = 0; w < workers; ++w)
    for (int b = 0; b < batches; ++b) acc[b].merge(partials[w][b]);
  return acc;
}

}  // namespace detail

inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult out;
  const int batches =
      static_cast<int>(std::min<long long>(spec.batches, spec.packets_per_point));
  for (std::size_t si = 0; si < spec.snr_db_points.size(); ++si) {
    const LinkParams params =
        LinkParams::from_snr_db(spec.snr_db_points[si], spec.constellation_order,
                                spec.rx_antennas, spec.subcarriers, spec.taps);
    for (std::size_t pi = 0; pi < spec.protocols.size(); ++pi) {
      const ProtocolSweep& ps = spec.protocols[pi];
      ProtocolConfig cfg = ps.config;
      cfg.channel = spec.channel_mode;
      if (!ps.tau_per_snr.empty()) cfg.tau = ps.tau_per_snr[si];
      try {
        const auto tallies =
            detail::run_point(params, cfg, spec.packets_per_point, spec.seed,
                              static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(pi),
                              spec.workers, batches);
        detail::BatchTally total;
        std::vector<double> ber_means, eta_means;
        for (const auto& t : tallies) {
          total.merge(t);
          if (t.packets == 0) continue;
          if (t.decision_bits > 0)
            ber_means.push_back(static_cast<double>(t.decision_errors) / t.decision_bits);
          if (t.bits_sent > 0)
            eta_means.push_back(static_cast<double>(t.bits_delivered) / t.bits_sent);
        }
        SweepRow row;
        row.snr_db = spec.snr_db_points[si];
        row.protocol = ps.label.empty() ? protocol_name(cfg.kind) : ps.label;
        row.tau = cfg.tau;
        row.ber_m = static_cast<double>(total.decision_errors) / total.decision_bits;
        row.fer_m = static_cast<double>(total.failed_rounds) / total.rounds;
        row.eta_m = static_cast<double>(total.bits_delivered) / total.bits_sent;
        row.stderr_ber = detail::batch_stderr(ber_means);
        row.stderr_eta = detail::batch_stderr(eta_means);
        row.loss_rate = static_cast<double>(total.lost) / total.packets;
        row.mean_rounds = static_cast<double>(total.mac_rounds) / total.packets;
        const AnalyticPoint a = analytic_point(cfg.kind, params, cfg.tau, cfg.mscc_omega);
        row.ber_a = a.ber;
        row.eta_a = a.eta;
        out.rows.push_back(std::move(row));
      } catch (const std::exception& e) {
        throw std::runtime_error("sweep point failed at " +
                                 detail::format_g6(spec.snr_db_points[si]) + " dB, " +
                                 std::string(protocol_name(cfg.kind)) + ": " + e.what());
      }
    }
  }
  return out;
}

struct ComparisonPoint {
  double snr_db = 0.0;
  std::string protocol;
  double tau = 0.0;
  bool comparable = false;    // analytical curve exists for this protocol
  bool ber_bound_ok = true;   // ber_m <= ber_a + 3 stderr
  bool eta_bound_ok = true;   // eta_m >= eta_a - 3 stderr
  double ber_ratio = 0.0;     // ber_a / ber_m, bound tightness
  double eta_gap = 0.0;       // (eta_m - eta_a) / eta_a
};

struct ComparisonReport {
  std::vector<ComparisonPoint> points;

  int violations() const {
    int v = 0;
    for (const auto& p : points) v += p.comparable && !(p.ber_bound_ok && p.eta_bound_ok);
    return v;
  }

  bool all_ok() const { return violations() == 0; }
};

// Checks every measured row against its analytical bound pair: the BER curve
// is an upper bound and the throughput curve a lower bound, each given 3
// standard errors of slack. Rows without an analytical curve (MSCC with
// omega > 1) are marked not comparable.
inline ComparisonReport compare_to_analysis(const SweepResult& result) {
  ComparisonReport report;
  for (const auto& r : result.rows) {
    ComparisonPoint p;
    p.snr_db = r.snr_db;
    p.protocol = r.protocol;
    p.tau = r.tau;
    p.comparable = std::isfinite(r.ber_a) && std::isfinite(r.eta_a);
    if (p.comparable) {
      p.ber_bound_ok = r.ber_m <= r.ber_a + 3.0 * r.stderr_ber;
      // The absolute floor absorbs deep-fade points where the analytical
      // throughput is positive but far below what any finite packet budget
      // could deliver (eta_m and its stderr both exactly zero).
      p.eta_bound_ok = r.eta_m >= r.eta_a - 3.0 * r.stderr_eta - 1e-12;
      p.ber_ratio = r.ber_m > 0.0 ? r.ber_a / r.ber_m
                                  : std::numeric_limits<double>::infinity();
      p.eta_gap = r.eta_a > 0.0 ? (r.eta_m - r.eta_a) / r.eta_a
                                : std::numeric_limits<double>::infinity();
    }
    report.points.push_back(std::move(p));
  }
  return report;
}

}  // namespace selharq
