// Command-line front end: analytical bound tables, threshold optimization,
// Monte Carlo sweeps, bound-vs-simulation comparison, and figure presets.
// Every command is deterministic for a fixed (config, seed) pair.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selharq/analysis.hpp"
#include "selharq/montecarlo.hpp"
#include "selharq/optimizer.hpp"
#include "selharq/protocols.hpp"
#include "selharq/rng.hpp"
#include "selharq/version.hpp"

namespace {

using namespace selharq;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_snr_grid(const std::string& text) {
  std::vector<double> out;
  auto to_double = [](const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw UsageError("bad SNR value: " + s);
    return v;
  };
  try {
    if (text.find(':') != std::string::npos) {
      std::istringstream in(text);
      std::string a, b, c;
      if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c))
        throw UsageError("SNR grid must be start:step:stop");
      const double start = to_double(a), step = to_double(b), stop = to_double(c);
      if (!(step > 0.0) || stop < start)
        throw UsageError("SNR grid needs step > 0 and stop >= start");
      for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
      return out;
    }
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_double(item));
  } catch (const std::invalid_argument&) {
    throw UsageError("bad SNR spec: " + text);
  }
  if (out.empty()) throw UsageError("empty SNR spec");
  return out;
}

int parse_order(const std::string& mod) {
  if (mod == "4qam" || mod == "4") return 4;
  if (mod == "16qam" || mod == "16") return 16;
  throw UsageError("unknown modulation: " + mod + " (expect 4qam or 16qam)");
}

ChannelMode parse_mode(const std::string& mode) {
  if (mode == "tap") return ChannelMode::tap;
  if (mode == "iid" || mode == "iid_subcarrier") return ChannelMode::iid_subcarrier;
  throw UsageError("unknown channel mode: " + mode + " (expect tap or iid)");
}

Protocol parse_protocol(const std::string& name) {
  if (name == "arq") return Protocol::single;
  try {
    return protocol_from_name(name);
  } catch (const std::invalid_argument&) {
    throw UsageError("unknown protocol: " + name);
  }
}

// Protocol whose threshold tables apply; MSCC reuses the SCC optimum.
Protocol threshold_protocol(Protocol kind) {
  if (kind == Protocol::mscc) return Protocol::scc;
  return kind;
}

struct TauSpec {
  enum class Kind { fixed, opt, full_equiv } kind = Kind::fixed;
  double value = 0.0;
};

TauSpec parse_tau(const std::string& text) {
  if (text == "opt") return {TauSpec::Kind::opt, 0.0};
  if (text == "full-equiv") return {TauSpec::Kind::full_equiv, 0.0};
  if (text == "inf") return {TauSpec::Kind::fixed, std::numeric_limits<double>::infinity()};
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw UsageError("bad tau spec: " + text);
  }
  if (pos != text.size() || std::isnan(v) || v < 0.0) throw UsageError("bad tau spec: " + text);
  return {TauSpec::Kind::fixed, v};
}

// One threshold per SNR point for a protocol entry.
std::vector<double> resolve_tau(const TauSpec& spec, Protocol kind,
                                const std::vector<double>& snr_db, const LinkParams& tmpl,
                                const std::string& table_path) {
  std::vector<double> taus(snr_db.size(), 0.0);
  if (kind == Protocol::single || kind == Protocol::cc) {
    if (spec.kind != TauSpec::Kind::fixed)
      throw UsageError(std::string(protocol_name(kind)) +
                       " has no selection threshold; use a fixed --tau");
    std::fill(taus.begin(), taus.end(), spec.value);
    return taus;
  }
  switch (spec.kind) {
    case TauSpec::Kind::fixed:
      std::fill(taus.begin(), taus.end(), spec.value);
      return taus;
    case TauSpec::Kind::full_equiv:
      for (std::size_t i = 0; i < snr_db.size(); ++i) {
        LinkParams p = tmpl;
        p.noise_level = std::pow(10.0, -snr_db[i] / 10.0);
        taus[i] = tau_full_equivalent(threshold_protocol(kind), p).tau;
      }
      return taus;
    case TauSpec::Kind::opt: {
      if (table_path.empty())
        throw UsageError("--tau opt needs a threshold table (--table FILE)");
      const ThresholdTable table = ThresholdTable::load_csv(table_path);
      if (table.protocol != threshold_protocol(kind))
        throw UsageError("threshold table is for " +
                         std::string(protocol_name(table.protocol)) + ", not " +
                         protocol_name(threshold_protocol(kind)));
      for (std::size_t i = 0; i < snr_db.size(); ++i) {
        bool found = false;
        for (std::size_t r = 0; r < table.size(); ++r) {
          if (std::abs(table.snr_db[r] - snr_db[i]) < 1e-9) {
            taus[i] = table.tau_opt[r];
            found = true;
            break;
          }
        }
        if (!found)
          throw UsageError("threshold table has no row at " + detail::format_g6(snr_db[i]) +
                           " dB");
      }
      return taus;
    }
  }
  throw UsageError("bad tau spec");
}

// Writes through to a file or stdout.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  fn(out);
}

std::string bool_cell(bool v) { return v ? "1" : "0"; }

// Flat key=value config, applied after parsing so that command-line flags
// (and env fallbacks) keep precedence over file values.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file: " + path);
  auto strip = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = strip(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    const auto where = path + ":" + std::to_string(lineno);
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected key=value");
    const std::string key = strip(text.substr(0, eq));
    const std::string value = strip(text.substr(eq + 1));
    if (key.empty() || key == "config") throw UsageError(where + ": bad config key");
    CLI::Option* op = sub->get_option_no_throw("--" + key);
    if (op == nullptr) throw UsageError(where + ": unknown config key: " + key);
    if (op->count() > 0) continue;
    op->add_result(value);
    op->run_callback();
  }
}

// Options shared by the analysis/simulation commands.
struct CommonOpts {
  std::string snr = "10";
  std::vector<std::string> protocols{"scc"};
  std::string tau = "0";
  int omega = 1;
  long long packets = 10000;
  std::uint64_t seed = 1;
  std::string channel_mode = "tap";
  int nr = 1;
  std::string mod = "4qam";
  int ns = 512;
  int taps = 10;
  int rounds = 50;
  int workers = 1;
  std::string out;
  std::string format = "csv";
  std::string table;
  std::string config;

  LinkParams params_at(double snr_db) const {
    return LinkParams::from_snr_db(snr_db, parse_order(mod), nr, ns, taps);
  }

  std::string echo(const std::string& cmd) const {
    std::ostringstream os;
    os << "cmd=" << cmd << " snr=" << snr << " protocols=";
    for (std::size_t i = 0; i < protocols.size(); ++i) os << (i ? "," : "") << protocols[i];
    os << " tau=" << tau << " omega=" << omega << " packets=" << packets
       << " seed=" << seed << " channel=" << channel_mode << " nr=" << nr
       << " mod=" << mod << " ns=" << ns << " taps=" << taps << " rounds=" << rounds;
    return os.str();
  }
};

void add_link_flags(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--snr", o.snr, "SNR grid in dB: start:step:stop, value, or comma list");
  sub->add_option("--nr", o.nr, "receive antennas")->check(CLI::PositiveNumber);
  sub->add_option("--mod", o.mod, "modulation: 4qam or 16qam");
  sub->add_option("--ns", o.ns, "OFDM subcarriers")->check(CLI::PositiveNumber);
  sub->add_option("--taps", o.taps, "channel taps (tap mode)")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output path (default stdout)");
  sub->add_option("--config", o.config, "flat key=value config file");
}

void add_sim_flags(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--protocol", o.protocols, "protocols: arq, cc, scc, mscc, ccws")
      ->delimiter(',');
  sub->add_option("--tau", o.tau, "threshold: 0, inf, opt, full-equiv, or a real");
  sub->add_option("--omega", o.omega, "selective iterations per MSCC round")
      ->check(CLI::PositiveNumber);
  sub->add_option("--packets", o.packets, "packets per sweep point")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "RNG seed")->envname("SELHARQ_SEED");
  sub->add_option("--channel-mode", o.channel_mode, "tap or iid");
  sub->add_option("--rounds", o.rounds, "MAC round budget per packet")
      ->check(CLI::PositiveNumber);
  sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--format", o.format, "csv or json");
  sub->add_option("--table", o.table, "threshold table CSV (for --tau opt)");
}

int cmd_bounds(const CommonOpts& o) {
  const std::vector<double> snr = parse_snr_grid(o.snr);
  const TauSpec tau_spec = parse_tau(o.tau);
  const LinkParams tmpl = o.params_at(snr.front());

  struct Row {
    double snr_db, tau;
    std::string protocol;
    BerPoint bp;
    double eta, m;
    bool clamped;
  };
  std::vector<Row> rows;
  for (const std::string& name : o.protocols) {
    const Protocol kind = parse_protocol(name);
    const std::vector<double> taus = resolve_tau(tau_spec, kind, snr, tmpl, o.table);
    for (std::size_t i = 0; i < snr.size(); ++i) {
      Row r;
      r.snr_db = snr[i];
      r.tau = taus[i];
      r.protocol = name;
      const LinkParams p = o.params_at(snr[i]);
      r.bp = ber_point(p, r.tau);
      r.eta = analytic_point(kind, p, r.tau, o.omega).eta;
      r.m = retx_fraction_m(p, r.tau);
      r.clamped = r.bp.single_tx.clamped || r.bp.full_cc.clamped || r.bp.scc_joint.clamped ||
                  r.bp.ccws_first.clamped || r.bp.ccws_joint.clamped;
      rows.push_back(std::move(r));
    }
  }

  const std::string echo = o.echo("bounds");
  with_output(o.out, [&](std::ostream& os) {
    if (o.format == "json") {
      auto num = [](double v) {
        return std::isfinite(v) ? detail::format_g6(v) : std::string("null");
      };
      os << "{\n  \"tool\": \"selharq\",\n  \"version\": \"" << version << "\",\n"
         << "  \"config\": \"" << echo << "\",\n  \"rows\": [";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        os << (i ? ",\n    " : "\n    ") << "{\"snr_db\": " << num(r.snr_db)
           << ", \"protocol\": \"" << r.protocol << "\", \"tau\": " << num(r.tau)
           << ", \"ber_single\": " << num(r.bp.single_tx)
           << ", \"ber_full_cc\": " << num(r.bp.full_cc)
           << ", \"ber_scc_joint\": " << num(r.bp.scc_joint)
           << ", \"ber_ccws_first\": " << num(r.bp.ccws_first)
           << ", \"ber_ccws_joint\": " << num(r.bp.ccws_joint)
           << ", \"eta_a\": " << num(r.eta) << ", \"m\": " << num(r.m)
           << ", \"clamped\": " << (r.clamped ? "true" : "false") << "}";
      }
      os << (rows.empty() ? "]" : "\n  ]") << "\n}\n";
      return;
    }
    os << "# selharq " << version << " | " << echo << '\n'
       << "snr_db,protocol,tau,ber_single,ber_full_cc,ber_scc_joint,ber_ccws_first,"
          "ber_ccws_joint,eta_a,m,clamped\n";
    for (const Row& r : rows) {
      os << detail::format_g6(r.snr_db) << ',' << r.protocol << ','
         << detail::format_g6(r.tau) << ',' << detail::format_g6(r.bp.single_tx) << ','
         << detail::format_g6(r.bp.full_cc) << ',' << detail::format_g6(r.bp.scc_joint)
         << ',' << detail::format_g6(r.bp.ccws_first) << ','
         << detail::format_g6(r.bp.ccws_joint) << ',' << detail::format_g6(r.eta) << ','
         << detail::format_g6(r.m) << ',' << bool_cell(r.clamped) << '\n';
    }
  });
  return 0;
}

int cmd_optimize(const CommonOpts& o, int grid_points) {
  if (o.protocols.size() != 1)
    throw UsageError("optimize takes exactly one --protocol (scc or ccws)");
  const Protocol kind = parse_protocol(o.protocols.front());
  if (kind != Protocol::scc && kind != Protocol::ccws)
    throw UsageError("optimize supports scc and ccws only");
  const std::vector<double> snr = parse_snr_grid(o.snr);
  GridSpec grid;
  grid.points = grid_points;
  const ThresholdTable table = build_table(kind, snr, o.params_at(snr.front()), grid);
  with_output(o.out, [&](std::ostream& os) {
    table.to_csv(os, "selharq " + std::string(version) + " | " + o.echo("optimize"));
  });
  return 0;
}

SweepResult run_simulation(const CommonOpts& o, const std::string& cmd,
                           std::string* echo_out) {
  const std::vector<double> snr = parse_snr_grid(o.snr);
  const TauSpec tau_spec = parse_tau(o.tau);
  const LinkParams tmpl = o.params_at(snr.front());

  SweepSpec spec;
  spec.snr_db_points = snr;
  spec.packets_per_point = o.packets;
  spec.seed = o.seed;
  spec.channel_mode = parse_mode(o.channel_mode);
  spec.constellation_order = parse_order(o.mod);
  spec.rx_antennas = o.nr;
  spec.subcarriers = o.ns;
  spec.taps = o.taps;
  spec.workers = o.workers;
  for (const std::string& name : o.protocols) {
    ProtocolSweep ps;
    ps.config.kind = parse_protocol(name);
    ps.config.max_mac_rounds = o.rounds;
    ps.config.mscc_omega = o.omega;
    ps.tau_per_snr = resolve_tau(tau_spec, ps.config.kind, snr, tmpl, o.table);
    ps.label = name;
    spec.protocols.push_back(std::move(ps));
  }
  *echo_out = o.echo(cmd);
  return run_sweep(spec);
}

// Per-packet JSON-lines trace: reruns the exact packet streams of a
// single-point sweep.
void write_trace(const CommonOpts& o, const std::string& path) {
  const std::vector<double> snr = parse_snr_grid(o.snr);
  if (snr.size() != 1 || o.protocols.size() != 1)
    throw UsageError("--trace needs a single SNR point and a single protocol");
  const TauSpec tau_spec = parse_tau(o.tau);
  const LinkParams params = o.params_at(snr.front());
  ProtocolConfig cfg;
  cfg.kind = parse_protocol(o.protocols.front());
  cfg.tau = resolve_tau(tau_spec, cfg.kind, snr, params, o.table).front();
  cfg.max_mac_rounds = o.rounds;
  cfg.mscc_omega = o.omega;
  cfg.channel = parse_mode(o.channel_mode);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (long long i = 0; i < o.packets; ++i) {
    Rng rng(derive_stream(o.seed, 0, 0, static_cast<std::uint64_t>(i)));
    const PacketResult r = run_packet(params, cfg, rng);
    out << "{\"packet\": " << i << ", \"outcome\": \""
        << (r.record.outcome == TransferRecord::Outcome::delivered ? "delivered" : "lost")
        << "\", \"rounds_used\": " << r.record.rounds_used
        << ", \"bits_sent\": " << r.record.bits_sent
        << ", \"bits_delivered\": " << r.record.bits_delivered << ", \"betas\": [";
    for (std::size_t k = 0; k < r.record.retx_symbol_counts.size(); ++k)
      out << (k ? "," : "") << r.record.retx_symbol_counts[k];
    out << "], \"decision_errors\": " << r.decision_errors << "}\n";
  }
}

int cmd_simulate(const CommonOpts& o, const std::string& trace_path) {
  std::string echo;
  const SweepResult result = run_simulation(o, "simulate", &echo);
  if (!trace_path.empty()) write_trace(o, trace_path);
  with_output(o.out, [&](std::ostream& os) {
    if (o.format == "json")
      result.to_json(os, echo);
    else
      result.to_csv(os, echo);
  });
  return 0;
}

void write_comparison(const SweepResult& result, const ComparisonReport& report,
                      const std::string& echo, const std::string& format,
                      std::ostream& os) {
  auto num = [](double v) {
    return std::isfinite(v) ? detail::format_g6(v) : std::string("null");
  };
  if (format == "json") {
    os << "{\n  \"tool\": \"selharq\",\n  \"version\": \"" << version << "\",\n"
       << "  \"config\": \"" << echo << "\",\n  \"violations\": " << report.violations()
       << ",\n  \"rows\": [";
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      const SweepRow& r = result.rows[i];
      const ComparisonPoint& c = report.points[i];
      os << (i ? ",\n    " : "\n    ") << "{\"snr_db\": " << num(r.snr_db)
         << ", \"protocol\": \"" << r.protocol << "\", \"tau\": " << num(r.tau)
         << ", \"ber_m\": " << num(r.ber_m) << ", \"ber_a\": " << num(r.ber_a)
         << ", \"eta_m\": " << num(r.eta_m) << ", \"eta_a\": " << num(r.eta_a)
         << ", \"comparable\": " << (c.comparable ? "true" : "false")
         << ", \"ber_bound_ok\": " << (c.ber_bound_ok ? "true" : "false")
         << ", \"eta_bound_ok\": " << (c.eta_bound_ok ? "true" : "false")
         << ", \"ber_ratio\": " << num(c.ber_ratio) << ", \"eta_gap\": " << num(c.eta_gap)
         << "}";
    }
    os << (result.rows.empty() ? "]" : "\n  ]") << "\n}\n";
    return;
  }
  os << "# selharq " << version << " | " << echo << '\n'
     << SweepResult::csv_header()
     << ",comparable,ber_bound_ok,eta_bound_ok,ber_ratio,eta_gap\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const SweepRow& r = result.rows[i];
    const ComparisonPoint& c = report.points[i];
    os << detail::format_g6(r.snr_db) << ',' << r.protocol << ',' << detail::format_g6(r.tau)
       << ',' << detail::format_g6(r.ber_m) << ',' << detail::format_g6(r.ber_a) << ','
       << detail::format_g6(r.fer_m) << ',' << detail::format_g6(r.eta_m) << ','
       << detail::format_g6(r.eta_a) << ',' << detail::format_g6(r.stderr_ber) << ','
       << detail::format_g6(r.stderr_eta) << ',' << detail::format_g6(r.loss_rate) << ','
       << detail::format_g6(r.mean_rounds) << ',' << bool_cell(c.comparable) << ','
       << bool_cell(c.ber_bound_ok) << ',' << bool_cell(c.eta_bound_ok) << ','
       << detail::format_g6(c.ber_ratio) << ',' << detail::format_g6(c.eta_gap) << '\n';
  }
}

int cmd_compare(const CommonOpts& o) {
  std::string echo;
  const SweepResult result = run_simulation(o, "compare", &echo);
  const ComparisonReport report = compare_to_analysis(result);
  with_output(o.out,
              [&](std::ostream& os) { write_comparison(result, report, echo, o.format, os); });
  return report.all_ok() ? 0 : 1;
}

struct Preset {
  const char* name;
  const char* description;
};

constexpr Preset kPresets[] = {
    {"fig-throughput-comparison",
     "CC vs SCC(tau_o) vs CCWS(tau_o) throughput, 0-20 dB, short frames"},
    {"fig-ber-scc", "SCC BER overlay for tau in {0, tau_f, tau_o}, 0-20 dB"},
    {"fig-mscc-gain", "MSCC omega=2 vs SCC throughput at tau_o, 0-6 dB"},
};

// A preset pins everything except the packet budget, so reruns are
// comparable across machines.
int cmd_reproduce(const std::string& name, long long packets_override,
                  const std::string& out, int workers, bool list) {
  if (list) {
    for (const auto& p : kPresets) std::cout << p.name << ": " << p.description << '\n';
    return 0;
  }

  SweepSpec spec;
  spec.channel_mode = ChannelMode::iid_subcarrier;
  spec.workers = workers;
  std::string echo;

  auto tau_opt_column = [](Protocol proto, const std::vector<double>& snr, int ns) {
    std::vector<double> taus(snr.size());
    for (std::size_t i = 0; i < snr.size(); ++i)
      taus[i] = optimize_tau(proto, LinkParams::from_snr_db(snr[i], 4, 1, ns), GridSpec{})
                    .tau;
    return taus;
  };
  auto tau_full_column = [](const std::vector<double>& snr, int ns) {
    std::vector<double> taus(snr.size());
    for (std::size_t i = 0; i < snr.size(); ++i)
      taus[i] =
          tau_full_equivalent(Protocol::scc, LinkParams::from_snr_db(snr[i], 4, 1, ns)).tau;
    return taus;
  };
  auto entry = [](Protocol kind, const char* label, int omega = 1) {
    ProtocolSweep ps;
    ps.config.kind = kind;
    ps.config.mscc_omega = omega;
    ps.label = label;
    return ps;
  };

  if (std::string(name) == "fig-throughput-comparison") {
    spec.snr_db_points = parse_snr_grid("0:2:20");
    spec.subcarriers = 16;
    spec.taps = 1;
    spec.packets_per_point = packets_override > 0 ? packets_override : 10000;
    spec.seed = 1001;
    spec.protocols = {entry(Protocol::cc, "cc"), entry(Protocol::scc, "scc"),
                      entry(Protocol::ccws, "ccws")};
    spec.protocols[1].tau_per_snr = tau_opt_column(Protocol::scc, spec.snr_db_points, 16);
    spec.protocols[2].tau_per_snr = tau_opt_column(Protocol::ccws, spec.snr_db_points, 16);
    echo = "cmd=reproduce preset=fig-throughput-comparison";
  } else if (std::string(name) == "fig-ber-scc") {
    spec.snr_db_points = parse_snr_grid("0:4:20");
    spec.subcarriers = 512;
    spec.taps = 1;
    spec.packets_per_point = packets_override > 0 ? packets_override : 2000;
    spec.seed = 1002;
    spec.protocols = {entry(Protocol::scc, "scc-tau0"), entry(Protocol::scc, "scc-tauf"),
                      entry(Protocol::scc, "scc-tauo")};
    spec.protocols[0].config.tau = 0.0;
    spec.protocols[1].tau_per_snr = tau_full_column(spec.snr_db_points, 512);
    spec.protocols[2].tau_per_snr = tau_opt_column(Protocol::scc, spec.snr_db_points, 512);
    echo = "cmd=reproduce preset=fig-ber-scc";
  } else if (std::string(name) == "fig-mscc-gain") {
    spec.snr_db_points = parse_snr_grid("0:2:6");
    spec.subcarriers = 16;
    spec.taps = 1;
    spec.packets_per_point = packets_override > 0 ? packets_override : 20000;
    spec.seed = 1003;
    spec.protocols = {entry(Protocol::scc, "scc"), entry(Protocol::mscc, "mscc-omega2", 2)};
    const auto taus = tau_opt_column(Protocol::scc, spec.snr_db_points, 16);
    spec.protocols[0].tau_per_snr = taus;
    spec.protocols[1].tau_per_snr = taus;
    echo = "cmd=reproduce preset=fig-mscc-gain";
  } else {
    throw UsageError("unknown preset: " + std::string(name) + " (try --list)");
  }

  echo += " packets=" + std::to_string(spec.packets_per_point) +
          " seed=" + std::to_string(spec.seed);
  const SweepResult result = run_sweep(spec);
  const ComparisonReport report = compare_to_analysis(result);
  with_output(out,
              [&](std::ostream& os) { write_comparison(result, report, echo, "csv", os); });
  return report.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selective Chase combining link simulator and bound toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("selharq ") + version);

  CommonOpts bounds_opts;
  CLI::App* bounds = app.add_subcommand("bounds", "evaluate analytical BER/throughput curves");
  add_link_flags(bounds, bounds_opts);
  bounds->add_option("--protocol", bounds_opts.protocols, "curves to emit")->delimiter(',');
  bounds->add_option("--tau", bounds_opts.tau, "threshold: 0, inf, opt, full-equiv, or real");
  bounds->add_option("--omega", bounds_opts.omega, "MSCC iterations (throughput column)");
  bounds->add_option("--table", bounds_opts.table, "threshold table CSV (for --tau opt)");
  bounds->add_option("--format", bounds_opts.format, "csv or json");

  CommonOpts opt_opts;
  int grid_points = 256;
  CLI::App* optimize = app.add_subcommand("optimize", "grid-search tau and emit a threshold table");
  add_link_flags(optimize, opt_opts);
  optimize->add_option("--protocol", opt_opts.protocols, "scc or ccws")->delimiter(',');
  optimize->add_option("--points", grid_points, "tau grid points")->check(CLI::PositiveNumber);

  CommonOpts sim_opts;
  std::string trace_path;
  CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo sweep");
  add_link_flags(simulate, sim_opts);
  add_sim_flags(simulate, sim_opts);
  simulate->add_option("--trace", trace_path, "per-packet JSON-lines trace file");

  CommonOpts cmp_opts;
  CLI::App* compare = app.add_subcommand("compare", "sweep and check analytical bounds");
  add_link_flags(compare, cmp_opts);
  add_sim_flags(compare, cmp_opts);

  std::string preset_name;
  long long preset_packets = 0;
  std::string preset_out;
  int preset_workers = 1;
  bool preset_list = false;
  CLI::App* reproduce = app.add_subcommand("reproduce", "run a pinned figure recipe");
  reproduce->add_option("preset", preset_name, "preset name (see --list)");
  reproduce->add_flag("--list", preset_list, "list available presets");
  reproduce->add_option("--packets", preset_packets, "override packets per point")
      ->check(CLI::PositiveNumber);
  reproduce->add_option("--out", preset_out, "output path (default stdout)");
  reproduce->add_option("--workers", preset_workers, "worker threads")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
    auto with_config = [](CLI::App* sub, CommonOpts& o) {
      if (!o.config.empty()) apply_config_file(sub, o.config);
    };
    if (bounds->parsed()) {
      with_config(bounds, bounds_opts);
      return cmd_bounds(bounds_opts);
    }
    if (optimize->parsed()) {
      with_config(optimize, opt_opts);
      return cmd_optimize(opt_opts, grid_points);
    }
    if (simulate->parsed()) {
      with_config(simulate, sim_opts);
      return cmd_simulate(sim_opts, trace_path);
    }
    if (compare->parsed()) {
      with_config(compare, cmp_opts);
      return cmd_compare(cmp_opts);
    }
    if (reproduce->parsed()) {
      if (!preset_list && preset_name.empty())
        throw UsageError("reproduce needs a preset name or --list");
      return cmd_reproduce(preset_name, preset_packets, preset_out, preset_workers,
                           preset_list);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
