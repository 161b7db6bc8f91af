#pragma once

#include <array>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shpcn/rng.hpp"
#include "shpcn/topology.hpp"
#include "shpcn/types.hpp"

// Retail payment request stream: who pays whom, how much, and when. Amounts
// follow a seven-bin survey table per scenario; arrivals follow a piecewise
// constant rate profile, either Poisson or evenly spaced.

namespace shpcn {

constexpr std::size_t kAmountBins = 7;

struct ScenarioTable {
  double share_pos = 0.80;
  double share_online = 0.17;
  double share_p2p = 0.03;
  // Bin mass per scenario; bins in euros: [0,5) [5,10) [10,20) [20,30) [30,50)
  // [50,100) [100, top_bin_max].
  std::array<double, kAmountBins> pos_bins{0.21, 0.17, 0.21, 0.13, 0.13, 0.10, 0.05};
  std::array<double, kAmountBins> online_bins{0.10, 0.11, 0.20, 0.15, 0.17, 0.16, 0.11};
  std::array<double, kAmountBins> p2p_bins{0.14, 0.11, 0.22, 0.16, 0.14, 0.11, 0.12};
  Money top_bin_max = euros(1000);
  double cross_border_prob = 0.05;

  const std::array<double, kAmountBins>& row(Scenario s) const {
    return s == Scenario::Pos ? pos_bins : s == Scenario::Online ? online_bins : p2p_bins;
  }
};

// Inclusive cent range of one amount bin. The bottom bin starts at one cent;
// the top bin runs up to top_bin_max.
inline std::pair<Money, Money> amount_bin_range(std::size_t bin, Money top_bin_max) {
  static constexpr Money lo[kAmountBins] = {1, 500, 1000, 2000, 3000, 5000, 10000};
  static constexpr Money hi[kAmountBins] = {499, 999, 1999, 2999, 4999, 9999, 0};
  if (bin >= kAmountBins) throw std::invalid_argument("loadgen: bin index out of range");
  return {lo[bin], bin == kAmountBins - 1 ? top_bin_max : hi[bin]};
}

inline void check_table(const ScenarioTable& t) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("scenario table: " + msg); };
  auto row_ok = [](const std::array<double, kAmountBins>& r) {
    double sum = 0.0;
    for (double x : r) {
      if (x < 0.0) return false;
      sum += x;
    }
    return std::abs(sum - 1.0) <= 1e-9;
  };
  const double shares = t.share_pos + t.share_online + t.share_p2p;
  if (t.share_pos < 0 || t.share_online < 0 || t.share_p2p < 0 || std::abs(shares - 1.0) > 1e-9)
    bad("scenario shares must be non-negative and sum to 1");
  if (!row_ok(t.pos_bins) || !row_ok(t.online_bins) || !row_ok(t.p2p_bins))
    bad("each bin row must be non-negative and sum to 1");
  if (t.cross_border_prob < 0.0 || t.cross_border_prob > 1.0)
    bad("cross_border_prob must be in [0,1]");
  if (t.top_bin_max < euros(100)) bad("top_bin_max must be at least the top bin floor");
}

struct LoadSegment {
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;
  double rate_pps = 0.0;
};

struct LoadProfile {
  std::vector<LoadSegment> segments;
  ArrivalProcess arrival = ArrivalProcess::Poisson;
};

inline void check_profile(const LoadProfile& p) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("load profile: " + msg); };
  if (p.segments.empty()) bad("needs at least one segment");
  std::int64_t prev_end = 0;
  for (std::size_t i = 0; i < p.segments.size(); ++i) {
    const auto& s = p.segments[i];
    if (s.start_s < 0 || s.end_s <= s.start_s) bad("segment " + std::to_string(i) + " is empty");
    if (i > 0 && s.start_s < prev_end) bad("segments overlap or are out of order");
    if (!(s.rate_pps > 0.0)) bad("rates must be positive");
    prev_end = s.end_s;
  }
}

enum class ProfileKind { AverageDay, PeakDay };

// Two stock profiles: a flat day at 2 PPS, and the same day with a tenfold
// surge between 07:00 and 19:00.
inline LoadProfile build_profile(ProfileKind kind,
                                 ArrivalProcess arrival = ArrivalProcess::Poisson) {
  LoadProfile p;
  p.arrival = arrival;
  if (kind == ProfileKind::AverageDay) {
    p.segments = {{0, 86400, 2.0}};
  } else {
    p.segments = {{0, 7 * 3600, 2.0}, {7 * 3600, 19 * 3600, 20.0}, {19 * 3600, 86400, 2.0}};
  }
  check_profile(p);
  return p;
}

// Seconds until the next arrival at the given rate.
inline double next_interarrival(ArrivalProcess process, double rate_pps, Rng& rng) {
  if (!(rate_pps > 0.0)) throw std::invalid_argument("loadgen: rate must be positive");
  if (process == ArrivalProcess::Deterministic) return 1.0 / rate_pps;
  return rng.exponential(1.0 / rate_pps);
}

struct PaymentRequest {
  PaymentId id = 0;
  NodeId sender = 0;
  NodeId receiver = 0;
  Money amount = 0;
  Scenario scenario = Scenario::Pos;
  bool cross_border = false;
  TimeMs created_at = 0;
};

// Citizen and merchant ids grouped by country, built once per topology.
struct UserIndex {
  std::uint32_t num_countries = 0;
  std::vector<std::vector<NodeId>> citizens;
  std::vector<std::vector<NodeId>> merchants;
  std::vector<NodeId> all_citizens;
  std::vector<std::uint32_t> citizen_country;  // parallel to all_citizens
};

inline UserIndex build_user_index(const Topology& t) {
  UserIndex idx;
  idx.num_countries = t.params.num_countries;
  idx.citizens.resize(idx.num_countries);
  idx.merchants.resize(idx.num_countries);
  for (const auto& n : t.nodes) {
    if (n.tier != Tier::EndUser) continue;
    if (n.country >= idx.num_countries) throw std::invalid_argument("loadgen: bad node country");
    if (n.role == Role::Citizen) {
      idx.citizens[n.country].push_back(n.id);
      idx.all_citizens.push_back(n.id);
      idx.citizen_country.push_back(n.country);
    } else {
      idx.merchants[n.country].push_back(n.id);
    }
  }
  return idx;
}

inline Money sample_amount(Scenario scenario, const ScenarioTable& table, Rng& rng) {
  const auto& row = table.row(scenario);
  const std::size_t bin = rng.weighted_pick({row.begin(), row.end()});
  const auto [lo, hi] = amount_bin_range(bin, table.top_bin_max);
  return rng.range(lo, hi);
}

// One payment. Draw order: sender, scenario, cross-border coin, destination
// country (cross only), receiver (redrawn while it hits the sender), bin,
// amount. Fixed order keeps equal seeds byte-for-byte reproducible.
inline PaymentRequest sample_payment(const ScenarioTable& table, const UserIndex& idx, TimeMs now,
                                     Rng& rng) {
  if (idx.all_citizens.empty()) throw std::invalid_argument("loadgen: no citizens to draw from");
  PaymentRequest r;
  r.created_at = now;
  const std::size_t si = rng.below(idx.all_citizens.size());
  r.sender = idx.all_citizens[si];
  const std::uint32_t sender_country = idx.citizen_country[si];

  const double s = rng.real01();
  r.scenario = s < table.share_pos                        ? Scenario::Pos
               : s < table.share_pos + table.share_online ? Scenario::Online
                                                          : Scenario::P2p;
  const bool want_cross = rng.real01() < table.cross_border_prob;
  r.cross_border = want_cross && idx.num_countries > 1;
  std::uint32_t country = sender_country;
  if (r.cross_border) {
    const auto pick = rng.below(idx.num_countries - 1);
    country = static_cast<std::uint32_t>(pick >= sender_country ? pick + 1 : pick);
  }

  const auto& pool =
      r.scenario == Scenario::P2p ? idx.citizens[country] : idx.merchants[country];
  if (pool.empty() || (pool.size() == 1 && pool[0] == r.sender))
    throw std::runtime_error("loadgen: no eligible receiver in country " + std::to_string(country));
  do {
    r.receiver = pool[rng.below(pool.size())];
  } while (r.receiver == r.sender);

  r.amount = sample_amount(r.scenario, table, rng);
  return r;
}

// Streams requests for a whole profile in arrival order. Evenly spaced mode
// places arrivals at each segment start and then every 1/rate; Poisson mode
// accumulates exponential gaps from the segment start. Times are quantized
// to milliseconds.
class LoadGenerator {
 public:
  LoadGenerator(const Topology& topo, ScenarioTable table, LoadProfile profile, std::uint64_t seed)
      : table_(table), profile_(std::move(profile)), rng_(seed), idx_(build_user_index(topo)) {
    check_table(table_);
    check_profile(profile_);
  }

  std::optional<PaymentRequest> next() {
    while (seg_ < profile_.segments.size()) {
      const auto& s = profile_.segments[seg_];
      const TimeMs start_ms = s.start_s * 1000;
      const TimeMs end_ms = s.end_s * 1000;
      TimeMs at = 0;
      if (profile_.arrival == ArrivalProcess::Deterministic) {
        at = start_ms + static_cast<TimeMs>(
                            std::llround(static_cast<double>(k_) * 1000.0 / s.rate_pps));
      } else {
        if (k_ == 0) elapsed_s_ = 0.0;
        elapsed_s_ += next_interarrival(profile_.arrival, s.rate_pps, rng_);
        at = start_ms + static_cast<TimeMs>(std::llround(elapsed_s_ * 1000.0));
      }
      if (at >= end_ms) {
        ++seg_;
        k_ = 0;
        continue;
      }
      ++k_;
      PaymentRequest r = sample_payment(table_, idx_, at, rng_);
      r.id = next_id_++;
      return r;
    }
    return std::nullopt;
  }

  std::vector<PaymentRequest> generate_all() {
    std::vector<PaymentRequest> out;
    while (auto r = next()) out.push_back(*r);
    return out;
  }

  const UserIndex& index() const { return idx_; }

 private:
  ScenarioTable table_;
  LoadProfile profile_;
  Rng rng_;
  UserIndex idx_;
  std::size_t seg_ = 0;
  std::uint64_t k_ = 0;
  double elapsed_s_ = 0.0;
  PaymentId next_id_ = 0;
};

// Dump/replay format: one row per request, millisecond-precision seconds.
inline void write_requests_csv(std::ostream& os, const std::vector<PaymentRequest>& reqs) {
  os << "id,time_s,sender,receiver,amount_cents,scenario,cross_border\n";
  char buf[160];
  for (const auto& r : reqs) {
    std::snprintf(buf, sizeof buf, "%llu,%lld.%03lld,%u,%u,%lld,%s,%d\n",
                  static_cast<unsigned long long>(r.id),
                  static_cast<long long>(r.created_at / 1000),
                  static_cast<long long>(r.created_at % 1000), r.sender, r.receiver,
                  static_cast<long long>(r.amount), to_string(r.scenario),
                  r.cross_border ? 1 : 0);
    os << buf;
  }
}

inline std::vector<PaymentRequest> read_requests_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("request csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,time_s,sender,receiver,amount_cents,scenario,cross_border")
    throw std::runtime_error("request csv: unexpected header");
  std::vector<PaymentRequest> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[7];
    for (int i = 0; i < 7; ++i) {
      if (!std::getline(ss, f[i], ',') && i < 6)
        throw std::runtime_error("request csv: short row at line " + std::to_string(lineno));
    }
    PaymentRequest r;
    try {
      r.id = std::stoull(f[0]);
      r.created_at = static_cast<TimeMs>(std::llround(std::stod(f[1]) * 1000.0));
      r.sender = static_cast<NodeId>(std::stoul(f[2]));
      r.receiver = static_cast<NodeId>(std::stoul(f[3]));
      r.amount = std::stoll(f[4]);
    } catch (const std::exception&) {
      throw std::runtime_error("request csv: bad number at line " + std::to_string(lineno));
    }
    if (f[5] == "pos")
      r.scenario = Scenario::Pos;
    else if (f[5] == "online")
      r.scenario = Scenario::Online;
    else if (f[5] == "p2p")
      r.scenario = Scenario::P2p;
    else
      throw std::runtime_error("request csv: bad scenario at line " + std::to_string(lineno));
    if (f[6] != "0" && f[6] != "1")
      throw std::runtime_error("request csv: bad cross_border at line " + std::to_string(lineno));
    r.cross_border = f[6] == "1";
    out.push_back(r);
  }
  return out;
}

}  // namespace shpcn
