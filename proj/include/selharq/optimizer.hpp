#pragma once

// Exhaustive grid search for the throughput-maximizing threshold tau_o per
// SNR point, plus the threshold tau_f whose BER bound matches the
// full-retransmission bound up to a small relative slack.

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "analysis.hpp"

namespace selharq {

struct GridSpec {
  int points = 256;
  double tau_min = 1e-4;
  double quantile = 0.999;  // upper edge: chi-square quantile for (n_r, sigma^2)
};

// Log-spaced grid; low tau needs the resolution since throughput is most
// sensitive there at low SNR.
inline std::vector<double> make_tau_grid(const LinkParams& params, const GridSpec& grid) {
  params.validate();
  if (grid.points < 2) throw std::invalid_argument("make_tau_grid: need at least 2 points");
  if (!(grid.tau_min > 0.0)) throw std::invalid_argument("make_tau_grid: tau_min must be > 0");
  const double edge = chi2_quantile(params.branch_spec(), grid.quantile);
  if (!(edge > grid.tau_min))
    throw std::invalid_argument("make_tau_grid: quantile edge below tau_min");
  std::vector<double> taus(grid.points);
  const double ratio = std::log(edge / grid.tau_min) / (grid.points - 1);
  for (int k = 0; k < grid.points; ++k) taus[k] = grid.tau_min * std::exp(ratio * k);
  taus.back() = edge;
  return taus;
}

struct OptResult {
  double tau = 0.0;
  double eta = 0.0;
};

namespace detail {

inline void check_threshold_protocol(Protocol proto) {
  if (proto != Protocol::scc && proto != Protocol::ccws)
    throw std::invalid_argument("threshold search is defined for scc and ccws only");
}

}  // namespace detail

// Exhaustive search over an explicit candidate list. Candidates within
// 1e-12 of the best throughput tie-break toward the smaller tau.
inline OptResult optimize_tau(Protocol proto, const LinkParams& params,
                              const std::vector<double>& candidates) {
  detail::check_threshold_protocol(proto);
  params.validate();
  if (candidates.empty()) throw std::invalid_argument("optimize_tau: empty candidate grid");
  OptResult best{candidates.front(), analytic_point(proto, params, candidates.front()).eta};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double tau = candidates[i];
    const double eta = analytic_point(proto, params, tau).eta;
    if (eta > best.eta + 1e-12 || (eta > best.eta - 1e-12 && tau < best.tau))
      best = OptResult{tau, eta};
  }
  return best;
}

inline OptResult optimize_tau(Protocol proto, const LinkParams& params, const GridSpec& grid) {
  return optimize_tau(proto, params, make_tau_grid(params, grid));
}

struct TauFullResult {
  double tau = 0.0;
  bool at_ceiling = false;  // slack unreachable below the grid ceiling
};

// Smallest tau whose joint-detection bound is within a relative slack of its
// own full-selection floor. The bound reaches the floor only asymptotically,
// so exact equality has no finite root.
inline TauFullResult tau_full_equivalent(Protocol proto, const LinkParams& params,
                                         double slack = 0.01, double quantile = 0.999) {
  detail::check_threshold_protocol(proto);
  params.validate();
  if (!(slack > 0.0)) throw std::invalid_argument("tau_full_equivalent: slack must be > 0");
  const double inf = std::numeric_limits<double>::infinity();
  auto bound = [&](double tau) {
    return proto == Protocol::scc ? ber_scc_joint(params, tau).value
                                  : ber_ccws_joint(params, tau).value;
  };
  const double target = bound(inf) * (1.0 + slack);
  if (bound(0.0) <= target) return TauFullResult{0.0, false};
  const double ceiling = chi2_quantile(params.branch_spec(), quantile);
  if (bound(ceiling) > target) return TauFullResult{ceiling, true};
  double lo = 0.0, hi = ceiling;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (bound(mid) <= target ? hi : lo) = mid;
  }
  return TauFullResult{hi, false};
}

struct ThresholdTable {
  Protocol protocol = Protocol::scc;
  std::vector<double> snr_db;
  std::vector<double> tau_opt;
  std::vector<double> eta_opt;
  std::vector<double> tau_full;
  std::vector<bool> tau_full_at_ceiling;  // not serialized

  std::size_t size() const { return snr_db.size(); }

  void validate() const {
    const std::size_t n = snr_db.size();
    if (tau_opt.size() != n || eta_opt.size() != n || tau_full.size() != n)
      throw std::invalid_argument("ThresholdTable: column lengths differ");
    for (std::size_t i = 1; i < n; ++i)
      if (!(snr_db[i] > snr_db[i - 1]))
        throw std::invalid_argument("ThresholdTable: snr_db must be strictly increasing");
  }

  static constexpr const char* csv_header = "snr_db,tau_opt,eta_opt,tau_full,protocol";

  void to_csv(std::ostream& out, const std::string& comment = "") const {
    validate();
    if (!comment.empty()) out << "# " << comment << "\n";
    out << csv_header << "\n";
    for (std::size_t i = 0; i < size(); ++i) {
      out << detail::format_g6(snr_db[i]) << ',' << detail::format_g6(tau_opt[i]) << ','
          << detail::format_g6(eta_opt[i]) << ',' << detail::format_g6(tau_full[i]) << ','
          << protocol_name(protocol) << "\n";
    }
  }

  void save_csv(const std::string& path, const std::string& comment = "") const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    to_csv(out, comment);
  }

  static ThresholdTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    ThresholdTable table;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      if (!header_seen) {
        if (line != csv_header)
          throw std::runtime_error("unexpected threshold table header: " + line);
        header_seen = true;
        continue;
      }
      std::istringstream row(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(row, field, ',')) fields.push_back(field);
      if (fields.size() != 5)
        throw std::runtime_error("malformed threshold table row: " + line);
      table.snr_db.push_back(std::stod(fields[0]));
      table.tau_opt.push_back(std::stod(fields[1]));
      table.eta_opt.push_back(std::stod(fields[2]));
      table.tau_full.push_back(std::stod(fields[3]));
      table.protocol = protocol_from_name(fields[4]);
    }
    if (!header_seen) throw std::runtime_error("threshold table has no header: " + path);
    table.tau_full_at_ceiling.assign(table.size(), false);
    table.validate();
    return table;
  }
};

inline ThresholdTable build_table(Protocol proto, const std::vector<double>& snr_grid_db,
                                  const LinkParams& params_template, const GridSpec& grid) {
  detail::check_threshold_protocol(proto);
  if (snr_grid_db.empty()) throw std::invalid_argument("build_table: empty SNR grid");
  ThresholdTable table;
  table.protocol = proto;
  for (double snr_db : snr_grid_db) {
    LinkParams p = params_template;
    p.noise_level = std::pow(10.0, -snr_db / 10.0);
    try {
      const OptResult opt = optimize_tau(proto, p, grid);
      const TauFullResult full = tau_full_equivalent(proto, p);
      table.snr_db.push_back(snr_db);
      table.tau_opt.push_back(opt.tau);
      table.eta_opt.push_back(opt.eta);
      table.tau_full.push_back(full.tau);
      table.tau_full_at_ceiling.push_back(full.at_ceiling);
    } catch (const std::exception& e) {
      throw std::runtime_error("build_table at " + detail::format_g6(snr_db) +
                               " dB: " + e.what());
    }
  }
  table.validate();
  return table;
}

}  // namespace selharq
