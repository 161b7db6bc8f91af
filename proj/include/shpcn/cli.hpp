#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "shpcn/engine.hpp"
#include "shpcn/topology_json.hpp"

// Command-line surface: `shpcn generate | run | sweep | report`. Exit codes
// are part of the contract: 0 success, 2 input error (bad flags, unreadable
// or malformed files), 3 internal invariant breach mid-simulation.

namespace shpcn::cli {

class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

// --- config files -----------------------------------------------------
// Flat `key = value` lines, '#' starts a comment. Keys mirror the SimConfig
// and TopologyParams fields; command-line flags override file values.

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(2, "cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto from = s.find_first_not_of(" \t\r");
    const auto to = s.find_last_not_of(" \t\r");
    return from == std::string::npos ? std::string() : s.substr(from, to - from + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError(2, path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw CliError(2, path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace detail {

inline std::int64_t to_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw CliError(2, "config key '" + key + "': not an integer: '" + v + "'");
  }
}

inline double to_dbl(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw CliError(2, "config key '" + key + "': not a number: '" + v + "'");
  }
}

inline RebalanceMode parse_mode(const std::string& v) {
  if (v == "full") return RebalanceMode::Full;
  if (v == "waterfall-only") return RebalanceMode::WaterfallOnly;
  if (v == "none") return RebalanceMode::None;
  throw CliError(2, "unknown rebalancing mode '" + v + "' (full, waterfall-only, none)");
}

inline ProfileKind parse_profile(const std::string& v) {
  if (v == "average-day") return ProfileKind::AverageDay;
  if (v == "peak-day") return ProfileKind::PeakDay;
  throw CliError(2, "unknown profile '" + v + "' (average-day, peak-day)");
}

inline ArrivalProcess parse_arrival(const std::string& v) {
  if (v == "poisson") return ArrivalProcess::Poisson;
  if (v == "deterministic") return ArrivalProcess::Deterministic;
  throw CliError(2, "unknown arrival process '" + v + "' (poisson, deterministic)");
}

// Applies the keys a command understands and erases them from the map so the
// caller can reject leftovers as typos.
inline void apply_sim_keys(std::map<std::string, std::string>& kv, SimConfig& cfg) {
  auto take = [&](const char* key, auto&& set) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    set(it->second);
    kv.erase(it);
  };
  take("hop_delay_ms", [&](const std::string& v) { cfg.hop_delay_ms = to_i64("hop_delay_ms", v); });
  take("deposit_roundtrip_ms",
       [&](const std::string& v) { cfg.deposit_roundtrip_ms = to_i64("deposit_roundtrip_ms", v); });
  take("waterfall_timeout_s",
       [&](const std::string& v) { cfg.waterfall_timeout_s = to_i64("waterfall_timeout_s", v); });
  take("block_time_s", [&](const std::string& v) { cfg.block_time_s = to_i64("block_time_s", v); });
  take("swap_threshold",
       [&](const std::string& v) { cfg.swap_threshold = to_dbl("swap_threshold", v); });
  take("min_deposit", [&](const std::string& v) { cfg.min_deposit = to_i64("min_deposit", v); });
  take("min_reserve", [&](const std::string& v) { cfg.min_reserve = to_i64("min_reserve", v); });
  take("swap_l1_tx_count", [&](const std::string& v) {
    cfg.swap_l1_tx_count = static_cast<std::uint32_t>(to_i64("swap_l1_tx_count", v));
  });
  take("l1_max_tps", [&](const std::string& v) { cfg.l1_max_tps = to_dbl("l1_max_tps", v); });
  take("rebalancing", [&](const std::string& v) { cfg.rebalancing = parse_mode(v); });
  take("seed", [&](const std::string& v) { cfg.seed = static_cast<std::uint64_t>(to_i64("seed", v)); });
}

inline void apply_topo_keys(std::map<std::string, std::string>& kv, TopologyParams& p) {
  auto take = [&](const char* key, auto&& set) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    set(it->second);
    kv.erase(it);
  };
  take("num_countries", [&](const std::string& v) {
    p.num_countries = static_cast<std::uint32_t>(to_i64("num_countries", v));
  });
  take("country_populations", [&](const std::string& v) {
    p.country_populations.clear();
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ','))
      p.country_populations.push_back(
          static_cast<std::uint32_t>(to_i64("country_populations", tok)));
  });
  take("citizens_per_merchant", [&](const std::string& v) {
    p.citizens_per_merchant = static_cast<std::uint32_t>(to_i64("citizens_per_merchant", v));
  });
  take("citizens_per_lsp", [&](const std::string& v) {
    p.citizens_per_lsp = static_cast<std::uint32_t>(to_i64("citizens_per_lsp", v));
  });
  take("cb_clique_capacity",
       [&](const std::string& v) { p.cb_clique_capacity = to_i64("cb_clique_capacity", v); });
  take("cb_lsp_capacity",
       [&](const std::string& v) { p.cb_lsp_capacity = to_i64("cb_lsp_capacity", v); });
  take("lsp_lsp_capacity",
       [&](const std::string& v) { p.lsp_lsp_capacity = to_i64("lsp_lsp_capacity", v); });
  take("ws_degree", [&](const std::string& v) {
    p.ws_degree = static_cast<std::uint32_t>(to_i64("ws_degree", v));
  });
  take("ws_rewire_prob",
       [&](const std::string& v) { p.ws_rewire_prob = to_dbl("ws_rewire_prob", v); });
  take("lognormal_mu", [&](const std::string& v) { p.lognormal_mu = to_dbl("lognormal_mu", v); });
  take("lognormal_sigma",
       [&](const std::string& v) { p.lognormal_sigma = to_dbl("lognormal_sigma", v); });
  take("citizen_cap", [&](const std::string& v) { p.citizen_cap = to_i64("citizen_cap", v); });
  take("merchant_cap_s",
       [&](const std::string& v) { p.merchant_cap_s = to_i64("merchant_cap_s", v); });
  take("merchant_cap_m",
       [&](const std::string& v) { p.merchant_cap_m = to_i64("merchant_cap_m", v); });
  take("merchant_cap_l",
       [&](const std::string& v) { p.merchant_cap_l = to_i64("merchant_cap_l", v); });
  take("merchant_share_s",
       [&](const std::string& v) { p.merchant_share_s = to_dbl("merchant_share_s", v); });
  take("merchant_share_m",
       [&](const std::string& v) { p.merchant_share_m = to_dbl("merchant_share_m", v); });
  take("merchant_share_l",
       [&](const std::string& v) { p.merchant_share_l = to_dbl("merchant_share_l", v); });
  take("citizen_balance_fraction", [&](const std::string& v) {
    p.citizen_balance_fraction = to_dbl("citizen_balance_fraction", v);
  });
  take("merchant_balance_fraction", [&](const std::string& v) {
    p.merchant_balance_fraction = to_dbl("merchant_balance_fraction", v);
  });
  take("lsp_assignment", [&](const std::string& v) {
    if (v == "population-proportional")
      p.lsp_assignment = LspAssignment::PopulationProportional;
    else if (v == "lognormal-subsets")
      p.lsp_assignment = LspAssignment::LogNormalSubsets;
    else
      throw CliError(2, "config key 'lsp_assignment': unknown value '" + v + "'");
  });
  take("seed", [&](const std::string& v) { p.seed = static_cast<std::uint64_t>(to_i64("seed", v)); });
}

inline void reject_leftovers(const std::map<std::string, std::string>& kv) {
  if (!kv.empty()) throw CliError(2, "unknown config key '" + kv.begin()->first + "'");
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError(2, "cannot write " + path.string());
  out << text;
  if (!out) throw CliError(2, "write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(2, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline unsigned sweep_threads(std::size_t points) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("SHPCN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = static_cast<unsigned>(std::min<long>(v, 64));
    } catch (const std::exception&) {
      throw CliError(2, std::string("SHPCN_THREADS is not a number: ") + env);
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, points == 0 ? 1 : points));
}

inline SweepRow make_sweep_row(Money liquidity, const MetricsLog& log,
                               const CostModel& model = {}) {
  SweepRow row;
  row.liquidity = liquidity;
  row.success = success_rate(log).value_or(0.0);
  for (const auto& a : log.actions)
    if (a.kind == ActionKind::SubmarineSwap && a.outcome == ActionOutcome::Completed) ++row.swaps;
  row.liquidity_cost = liquidity_cost_per_day(liquidity, model);
  row.swap_cost = swap_cost(log, model);
  row.total_cost = row.liquidity_cost + row.swap_cost;
  row.mode = log.mode;
  return row;
}

}  // namespace detail

// --- generate ---------------------------------------------------------

struct GenerateOpts {
  std::string preset;
  std::string out;
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
  Money lsp_capacity = -1;     // -1 = not given
  Money cb_lsp_capacity = -1;
};

inline int cmd_generate(const GenerateOpts& o) {
  TopologyParams params;
  if (!o.preset.empty()) {
    if (o.preset != "scaled-europe")
      throw CliError(2, "unknown preset '" + o.preset + "' (available: scaled-europe)");
    if (o.lsp_capacity < 0 || o.cb_lsp_capacity < 0)
      throw CliError(2, "preset scaled-europe needs --lsp-capacity and --cb-lsp-capacity");
    params = scaled_europe_params(o.lsp_capacity, o.cb_lsp_capacity);
  } else if (!o.config.empty()) {
    auto kv = parse_config_file(o.config);
    detail::apply_topo_keys(kv, params);
    detail::reject_leftovers(kv);
    if (o.lsp_capacity >= 0) params.lsp_lsp_capacity = o.lsp_capacity;
    if (o.cb_lsp_capacity >= 0) params.cb_lsp_capacity = o.cb_lsp_capacity;
  } else {
    throw CliError(2, "generate needs --preset or --config");
  }
  if (o.seed_set) params.seed = o.seed;

  const Topology topo = generate_topology(params);
  detail::write_file(o.out, serialize_topology(topo));
  std::cout << "nodes=" << topo.nodes.size() << " channels=" << topo.channels.size()
            << " total_routing_liquidity=" << total_routing_liquidity(topo) << "\n";
  return 0;
}

// --- run --------------------------------------------------------------

struct RunOpts {
  std::string topology;
  std::string profile = "average-day";
  std::string arrival = "poisson";
  std::string out_dir = ".";
  std::string config;
  SimConfig overrides;          // flag values land here...
  std::uint32_t explicit_mask = 0;  // ...bit i set when flag i was passed
  std::int64_t cdf_resolution_ms = 100;
};

// Flag bits for RunOpts::explicit_mask.
enum : std::uint32_t {
  kFlagMode = 1u << 0,
  kFlagSeed = 1u << 1,
  kFlagHopDelay = 1u << 2,
  kFlagThreshold = 1u << 3,
  kFlagL1Tps = 1u << 4,
  kFlagMinReserve = 1u << 5,
  kFlagMinDeposit = 1u << 6,
  kFlagWfTimeout = 1u << 7,
  kFlagBlockTime = 1u << 8,
  kFlagRoundtrip = 1u << 9,
  kFlagTxCount = 1u << 10,
};

namespace detail {

inline SimConfig merge_sim_config(const std::string& config_path, const SimConfig& flags,
                                  std::uint32_t mask) {
  SimConfig cfg;
  if (!config_path.empty()) {
    auto kv = parse_config_file(config_path);
    apply_sim_keys(kv, cfg);
    reject_leftovers(kv);
  }
  if (mask & kFlagMode) cfg.rebalancing = flags.rebalancing;
  if (mask & kFlagSeed) cfg.seed = flags.seed;
  if (mask & kFlagHopDelay) cfg.hop_delay_ms = flags.hop_delay_ms;
  if (mask & kFlagThreshold) cfg.swap_threshold = flags.swap_threshold;
  if (mask & kFlagL1Tps) cfg.l1_max_tps = flags.l1_max_tps;
  if (mask & kFlagMinReserve) cfg.min_reserve = flags.min_reserve;
  if (mask & kFlagMinDeposit) cfg.min_deposit = flags.min_deposit;
  if (mask & kFlagWfTimeout) cfg.waterfall_timeout_s = flags.waterfall_timeout_s;
  if (mask & kFlagBlockTime) cfg.block_time_s = flags.block_time_s;
  if (mask & kFlagRoundtrip) cfg.deposit_roundtrip_ms = flags.deposit_roundtrip_ms;
  if (mask & kFlagTxCount) cfg.swap_l1_tx_count = flags.swap_l1_tx_count;
  return cfg;
}

struct RunStats {
  std::uint64_t payments = 0, succeeded = 0, failed = 0;
  std::uint64_t waterfalls = 0, reverse_waterfalls = 0, swaps = 0;
};

inline RunStats tally(const MetricsLog& log) {
  RunStats s;
  for (const auto& p : log.payments) {
    if (p.kind != PayKind::Retail) continue;
    ++s.payments;
    if (p.status == PayStatus::Succeeded)
      ++s.succeeded;
    else
      ++s.failed;
  }
  for (const auto& a : log.actions) {
    if (a.outcome != ActionOutcome::Completed) continue;
    if (a.kind == ActionKind::WaterfallDeposit) ++s.waterfalls;
    if (a.kind == ActionKind::ReverseWithdrawal) ++s.reverse_waterfalls;
    if (a.kind == ActionKind::SubmarineSwap) ++s.swaps;
  }
  return s;
}

}  // namespace detail

inline int cmd_run(const RunOpts& o) {
  const Topology topo = parse_topology(detail::read_file(o.topology));
  const SimConfig cfg = detail::merge_sim_config(o.config, o.overrides, o.explicit_mask);
  const LoadProfile profile =
      build_profile(detail::parse_profile(o.profile), detail::parse_arrival(o.arrival));

  const auto t0 = std::chrono::steady_clock::now();
  const MetricsLog log = run_simulation(topo, profile, ScenarioTable{}, cfg);
  const auto wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
          .count();

  std::filesystem::create_directories(o.out_dir);
  const auto dir = std::filesystem::path(o.out_dir);
  {
    std::ostringstream os;
    write_latency_cdf(os, completion_cdf(log, o.cdf_resolution_ms));
    detail::write_file(dir / "latency_cdf.csv", os.str());
  }
  {
    std::ostringstream os;
    write_rebalance_per_minute(os, log);
    detail::write_file(dir / "rebalance_per_minute.csv", os.str());
  }

  const auto stats = detail::tally(log);
  const auto rate = success_rate(log);
  char rate_buf[32];
  std::snprintf(rate_buf, sizeof rate_buf, "%.6f", rate.value_or(0.0));
  std::cout << "payments=" << stats.payments << " succeeded=" << stats.succeeded
            << " failed=" << stats.failed << " success_rate=" << (rate ? rate_buf : "nan")
            << " waterfalls=" << stats.waterfalls
            << " reverse_waterfalls=" << stats.reverse_waterfalls << " swaps=" << stats.swaps
            << " l1_txs=" << log.l1_tx_times.size() << " wall_ms=" << wall_ms << "\n";
  return 0;
}

// --- sweep ------------------------------------------------------------

struct SweepOpts {
  std::vector<Money> liquidity;  // total routing liquidity per point, cents
  std::string profile = "average-day";
  std::string arrival = "poisson";
  std::string out_dir = ".";
  std::string config;
  SimConfig overrides;
  std::uint32_t explicit_mask = 0;
  std::uint64_t base_seed = 1;
  bool seed_set = false;
};

inline int cmd_sweep(const SweepOpts& o) {
  if (o.liquidity.empty()) throw CliError(2, "sweep needs at least one --liquidity point");
  for (Money l : o.liquidity)
    if (l < 0) throw CliError(2, "liquidity points must be non-negative");

  SimConfig base = detail::merge_sim_config(o.config, o.overrides, o.explicit_mask);
  if (o.seed_set) base.seed = o.base_seed;
  const LoadProfile profile =
      build_profile(detail::parse_profile(o.profile), detail::parse_arrival(o.arrival));

  struct Point {
    Money requested = 0;
    Money actual = 0;
    MetricsLog log;
    std::string error;
    int error_code = 0;
  };
  std::vector<Point> points(o.liquidity.size());
  for (std::size_t i = 0; i < points.size(); ++i) points[i].requested = o.liquidity[i];

  // Share-nothing workers: each point generates its own topology (same
  // structure seed) and runs with seed base+index.
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1)) {
      Point& pt = points[i];
      try {
        // Spread the requested liquidity across the routing channels the
        // scaled preset creates: 60 LSP-LSP plus 30 CB-LSP edges.
        const Money per_chan = pt.requested / 90;
        TopologyParams tp = scaled_europe_params(per_chan, per_chan);
        tp.seed = base.seed;  // identical structure at every point
        const Topology topo = generate_topology(tp);
        pt.actual = total_routing_liquidity(topo);
        SimConfig cfg = base;
        cfg.seed = base.seed + i;
        pt.log = run_simulation(topo, profile, ScenarioTable{}, cfg);
      } catch (const CliError& e) {
        pt.error = e.what();
        pt.error_code = e.code();
      } catch (const SimInvariantError& e) {
        pt.error = e.what();
        pt.error_code = 3;
      } catch (const std::exception& e) {
        pt.error = e.what();
        pt.error_code = 2;
      }
    }
  };
  const unsigned nthreads = detail::sweep_threads(points.size());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& pt : points)
    if (!pt.error.empty()) {
      std::cerr << "sweep point liquidity=" << pt.requested << " failed: " << pt.error << "\n";
      return pt.error_code == 0 ? 3 : pt.error_code;
    }

  std::vector<SweepRow> rows;
  if (points.size() >= 2) {
    std::vector<std::pair<Money, const MetricsLog*>> runs;
    runs.reserve(points.size());
    for (const auto& pt : points) runs.emplace_back(pt.actual, &pt.log);
    rows = sweep_summary(runs).rows;  // sorted by liquidity
  } else {
    rows.push_back(detail::make_sweep_row(points.front().actual, points.front().log));
  }

  std::filesystem::create_directories(o.out_dir);
  const auto dir = std::filesystem::path(o.out_dir);
  {
    std::ostringstream os;
    write_success_vs_liquidity(os, rows);
    detail::write_file(dir / "success_vs_liquidity.csv", os.str());
  }
  {
    std::ostringstream os;
    write_cost_sweep(os, rows);
    detail::write_file(dir / "cost_sweep.csv", os.str());
  }
  std::cout << "points=" << rows.size() << " out_dir=" << o.out_dir << "\n";
  return 0;
}

// --- report -----------------------------------------------------------

namespace detail {

// Minimal strict CSV reader: exact header, numeric cells.
inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                                 const std::string& header,
                                                 std::vector<std::string>* last_col = nullptr) {
  std::ifstream in(path);
  if (!in) throw CliError(2, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw CliError(2, path.string() + ": unexpected header");
  const std::size_t ncols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::string cell;
    std::stringstream ss(line);
    std::string last;
    while (std::getline(ss, cell, ',')) {
      last = cell;
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        // The trailing column may be text (the mode); tolerate it there only.
        if (row.size() + 1 == ncols && last_col != nullptr) {
          row.push_back(0.0);
        } else {
          throw CliError(2, path.string() + ":" + std::to_string(lineno) + ": bad cell '" +
                                cell + "'");
        }
      }
    }
    if (row.size() != ncols)
      throw CliError(2, path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    if (last_col) last_col->push_back(last);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

struct ReportOpts {
  std::string dir = ".";
};

inline int cmd_report(const ReportOpts& o) {
  namespace fs = std::filesystem;
  const fs::path dir(o.dir);
  bool any = false;

  const fs::path success_csv = dir / "success_vs_liquidity.csv";
  if (fs::exists(success_csv)) {
    any = true;
    std::vector<std::string> modes;
    const auto rows = detail::read_csv(success_csv, "liquidity_cents,success_rate,mode", &modes);
    if (rows.empty()) throw CliError(2, success_csv.string() + ": no data rows");
    bool found = false;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i][1] >= 1.0 - 1e-9) {
        std::cout << "min liquidity for 100% success: " << static_cast<long long>(rows[i][0])
                  << " cents (" << modes[i] << ")\n";
        found = true;
        break;
      }
    if (!found) std::cout << "min liquidity for 100% success: not reached\n";
  }

  const fs::path cost_csv = dir / "cost_sweep.csv";
  if (fs::exists(cost_csv)) {
    any = true;
    const auto rows =
        detail::read_csv(cost_csv, "liquidity_cents,liquidity_cost,swap_cost,total_cost");
    if (rows.empty()) throw CliError(2, cost_csv.string() + ": no data rows");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i][3] < rows[best][3]) best = i;
    std::cout << "cost minimum: " << static_cast<long long>(rows[best][3])
              << " cents/day at liquidity " << static_cast<long long>(rows[best][0])
              << " cents\n";
  }

  const fs::path cdf_csv = dir / "latency_cdf.csv";
  if (fs::exists(cdf_csv)) {
    any = true;
    const auto rows = detail::read_csv(cdf_csv, "latency_ms,cumulative_fraction");
    if (rows.empty()) throw CliError(2, cdf_csv.string() + ": no data rows");
    std::cout << "max latency: " << static_cast<long long>(rows.back()[0]) << " ms\n";
  }

  const fs::path pm_csv = dir / "rebalance_per_minute.csv";
  if (fs::exists(pm_csv)) {
    any = true;
    const auto rows = detail::read_csv(pm_csv, "minute,waterfall,reverse_waterfall,swaps");
    std::size_t peak = 0;
    double peak_v = -1.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i][3] > peak_v) {
        peak_v = rows[i][3];
        peak = i;
      }
    if (rows.empty())
      std::cout << "peak swap rate: no data\n";
    else
      std::cout << "peak swap rate: " << static_cast<long long>(peak_v) << "/min at minute "
                << static_cast<long long>(rows[peak][0]) << "\n";
  }

  if (!any) throw CliError(2, "no metrics files in " + o.dir);
  return 0;
}

// --- entry point ------------------------------------------------------

namespace detail {

// Shared flag wiring for run and sweep (they take the same SimConfig knobs).
template <typename Opts>
inline void add_sim_flags(CLI::App* cmd, Opts& o) {
  auto mark = [&o](std::uint32_t bit) {
    return [&o, bit](auto) { o.explicit_mask |= bit; };
  };
  cmd->add_option_function<std::string>(
         "--rebalancing",
         [&o](const std::string& v) {
           o.overrides.rebalancing = parse_mode(v);
           o.explicit_mask |= kFlagMode;
         },
         "Rebalancing mode: full, waterfall-only, none");
  cmd->add_option("--hop-delay-ms", o.overrides.hop_delay_ms, "Per-hop delay in ms")
      ->each(mark(kFlagHopDelay));
  cmd->add_option("--deposit-roundtrip-ms", o.overrides.deposit_roundtrip_ms,
                  "Bank-transfer round trip in ms")
      ->each(mark(kFlagRoundtrip));
  cmd->add_option("--waterfall-timeout-s", o.overrides.waterfall_timeout_s,
                  "Waterfall deposit timeout in seconds")
      ->each(mark(kFlagWfTimeout));
  cmd->add_option("--block-time-s", o.overrides.block_time_s, "L1 block time in seconds")
      ->each(mark(kFlagBlockTime));
  cmd->add_option("--swap-threshold", o.overrides.swap_threshold,
                  "Swap trigger as a fraction of capacity, in (0.5, 1]")
      ->each(mark(kFlagThreshold));
  cmd->add_option("--min-deposit", o.overrides.min_deposit, "Waterfall deposit floor in cents")
      ->each(mark(kFlagMinDeposit));
  cmd->add_option("--min-reserve", o.overrides.min_reserve,
                  "Reverse-waterfall top-up reserve in cents")
      ->each(mark(kFlagMinReserve));
  cmd->add_option("--swap-l1-tx-count", o.overrides.swap_l1_tx_count,
                  "On-chain transactions per swap")
      ->each(mark(kFlagTxCount));
  cmd->add_option("--l1-max-tps", o.overrides.l1_max_tps,
                  "L1 throughput budget in tx/s (0 = unlimited)")
      ->each(mark(kFlagL1Tps));
}

}  // namespace detail

inline int run_cli(int argc, char** argv) {
  CLI::App app{"Semi-hierarchical payment channel network simulator"};
  app.require_subcommand(1);
  int rc = 0;

  GenerateOpts gen;
  auto* cgen = app.add_subcommand("generate", "Generate a topology file");
  cgen->add_option("--preset", gen.preset, "Topology preset (scaled-europe)");
  cgen->add_option("--config", gen.config, "Topology parameter file (key = value lines)");
  cgen->add_option("-o,--out", gen.out, "Output topology JSON path")->required();
  cgen->add_option("--lsp-capacity", gen.lsp_capacity, "LSP-LSP channel capacity in cents");
  cgen->add_option("--cb-lsp-capacity", gen.cb_lsp_capacity, "CB-LSP channel capacity in cents");
  cgen->add_option("--seed", gen.seed, "Structure seed")->each([&gen](auto) {
    gen.seed_set = true;
  });
  cgen->callback([&] { rc = cmd_generate(gen); });

  RunOpts run;
  auto* crun = app.add_subcommand("run", "Run one simulation over a topology file");
  crun->add_option("--topology", run.topology, "Topology JSON path")->required();
  crun->add_option("--profile", run.profile, "Load profile: average-day or peak-day");
  crun->add_option("--arrival", run.arrival, "Arrival process: poisson or deterministic");
  crun->add_option("--out-dir", run.out_dir, "Directory for metrics CSV files");
  crun->add_option("--config", run.config, "Simulation parameter file (key = value lines)");
  crun->add_option("--cdf-resolution-ms", run.cdf_resolution_ms, "Latency CDF step in ms");
  crun->add_option("--seed", run.overrides.seed, "Load-generation seed")
      ->each([&run](auto) { run.explicit_mask |= kFlagSeed; });
  detail::add_sim_flags(crun, run);
  crun->callback([&] { rc = cmd_run(run); });

  SweepOpts sweep;
  auto* csweep = app.add_subcommand("sweep", "Run one simulation per liquidity point");
  csweep->add_option("--liquidity", sweep.liquidity,
                     "Total routing liquidity points in cents (repeat or comma-separate)")
      ->required()
      ->delimiter(',');
  csweep->add_option("--profile", sweep.profile, "Load profile: average-day or peak-day");
  csweep->add_option("--arrival", sweep.arrival, "Arrival process: poisson or deterministic");
  csweep->add_option("--out-dir", sweep.out_dir, "Directory for sweep CSV files");
  csweep->add_option("--config", sweep.config, "Simulation parameter file");
  csweep->add_option("--seed", sweep.base_seed, "Base seed; point i runs with base+i")
      ->each([&sweep](auto) { sweep.seed_set = true; });
  detail::add_sim_flags(csweep, sweep);
  csweep->callback([&] { rc = cmd_sweep(sweep); });

  ReportOpts rep;
  auto* crep = app.add_subcommand("report", "Summarize metrics CSV files");
  crep->add_option("--dir,--out-dir", rep.dir, "Directory holding the metrics CSV files");
  crep->callback([&] { rc = cmd_report(rep); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code();
  } catch (const TopologyParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SimInvariantError& e) {
    std::cerr << "invariant breach: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}

}  // namespace shpcn::cli

namespace shpcn {
using cli::run_cli;  // the tool's entry point
}
