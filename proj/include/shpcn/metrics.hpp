#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shpcn/types.hpp"

// Run log and the aggregations reported on it: success rate, completion-time
// CDF, per-minute rebalancing series, and the daily cost model trading locked
// liquidity against on-chain swap fees.

namespace shpcn {

enum class ActionKind : std::uint8_t { WaterfallDeposit, ReverseWithdrawal, SubmarineSwap };
enum class ActionOutcome : std::uint8_t { Completed, Expired };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::WaterfallDeposit: return "waterfall";
    case ActionKind::ReverseWithdrawal: return "reverse-waterfall";
    default: return "swap";
  }
}

struct RebalanceAction {
  ActionKind kind = ActionKind::WaterfallDeposit;
  NodeId actor = 0;
  ChannelId channel = 0;
  Money amount = 0;
  TimeMs initiated_at = 0;
  TimeMs completed_at = 0;
  ActionOutcome outcome = ActionOutcome::Completed;
};

struct PaymentRecord {
  PaymentId id = 0;
  PayKind kind = PayKind::Retail;
  TimeMs created_at = 0;
  TimeMs completed_at = -1;  // -1 when the payment failed before completing
  PayStatus status = PayStatus::Pending;
  FailReason reason = FailReason::None;
  std::uint32_t attempts = 0;
  std::uint32_t route_len = 0;
  Money amount = 0;
};

// Append-only run log; the engine is the sole writer, everything afterwards
// is read-only aggregation.
struct MetricsLog {
  std::vector<PaymentRecord> payments;
  std::vector<RebalanceAction> actions;
  std::vector<TimeMs> l1_tx_times;
  std::uint64_t swaps_demanded = 0;
  std::uint64_t swaps_admitted = 0;
  std::uint64_t swaps_deferred = 0;
  // Run echo, filled by the driver.
  RebalanceMode mode = RebalanceMode::Full;
  Money total_routing_liquidity = 0;
  std::uint64_t seed = 0;

  void add_payment(const PaymentRecord& r) { payments.push_back(r); }
  void add_action(const RebalanceAction& a) { actions.push_back(a); }
  void add_l1_tx(TimeMs t) { l1_tx_times.push_back(t); }
};

// Fraction of retail payments that succeeded; absent when nothing ran.
inline std::optional<double> success_rate(const MetricsLog& log) {
  std::uint64_t total = 0, good = 0;
  for (const auto& p : log.payments) {
    if (p.kind != PayKind::Retail) continue;
    ++total;
    if (p.status == PayStatus::Succeeded) ++good;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(good) / static_cast<double>(total);
}

struct CdfPoint {
  TimeMs latency_ms = 0;
  double cumulative_fraction = 0.0;
};

// Completion-time distribution of successful retail payments, normalized by
// the full retail count so the terminal value equals the success rate.
inline std::vector<CdfPoint> completion_cdf(const MetricsLog& log, TimeMs resolution_ms) {
  if (resolution_ms <= 0) throw std::invalid_argument("cdf: resolution must be positive");
  std::vector<TimeMs> lat;
  std::uint64_t total = 0;
  for (const auto& p : log.payments) {
    if (p.kind != PayKind::Retail) continue;
    ++total;
    if (p.status == PayStatus::Succeeded) lat.push_back(p.completed_at - p.created_at);
  }
  std::vector<CdfPoint> out;
  if (total == 0) return out;
  std::sort(lat.begin(), lat.end());
  const TimeMs max_lat = lat.empty() ? 0 : lat.back();
  std::size_t i = 0;
  for (TimeMs t = 0;; t += resolution_ms) {
    while (i < lat.size() && lat[i] <= t) ++i;
    out.push_back({t, static_cast<double>(i) / static_cast<double>(total)});
    if (t >= max_lat) break;
  }
  return out;
}

// Completed actions of one kind bucketed by initiation minute; index = minute.
inline std::vector<std::uint64_t> per_minute_series(const MetricsLog& log, ActionKind kind) {
  std::vector<std::uint64_t> out;
  for (const auto& a : log.actions) {
    if (a.kind != kind || a.outcome != ActionOutcome::Completed) continue;
    const std::size_t minute = static_cast<std::size_t>(a.initiated_at / 60000);
    if (minute >= out.size()) out.resize(minute + 1, 0);
    ++out[minute];
  }
  return out;
}

struct CostModel {
  double annual_lending_rate = 0.0475;
  Money l1_fee_per_tx = 10;  // cents
  int horizon_days = 1;
};

// Daily price of keeping L locked at the lending rate.
inline Money liquidity_cost_per_day(Money liquidity, const CostModel& m) {
  if (liquidity < 0) throw std::invalid_argument("cost: liquidity must be non-negative");
  return static_cast<Money>(
      std::llround(static_cast<double>(liquidity) * m.annual_lending_rate / 365.0));
}

inline Money swap_cost(const MetricsLog& log, const CostModel& m) {
  return static_cast<Money>(log.l1_tx_times.size()) * m.l1_fee_per_tx;
}

inline Money total_cost(Money liquidity, const MetricsLog& log, const CostModel& m) {
  return liquidity_cost_per_day(liquidity, m) + swap_cost(log, m);
}

struct SweepRow {
  Money liquidity = 0;
  double success = 0.0;
  std::uint64_t swaps = 0;
  Money liquidity_cost = 0;
  Money swap_cost = 0;
  Money total_cost = 0;
  RebalanceMode mode = RebalanceMode::Full;
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // sorted by liquidity
  std::size_t cheapest = 0;    // index of the total-cost argmin
  std::optional<Money> full_success_liquidity;  // smallest liquidity at 100%
};

inline SweepSummary sweep_summary(const std::vector<std::pair<Money, const MetricsLog*>>& runs,
                                  const CostModel& model = {}) {
  if (runs.size() < 2) throw std::invalid_argument("sweep: need at least two runs");
  SweepSummary s;
  for (const auto& [liq, log] : runs) {
    SweepRow row;
    row.liquidity = liq;
    row.success = success_rate(*log).value_or(0.0);
    for (const auto& a : log->actions)
      if (a.kind == ActionKind::SubmarineSwap && a.outcome == ActionOutcome::Completed)
        ++row.swaps;
    row.liquidity_cost = liquidity_cost_per_day(liq, model);
    row.swap_cost = swap_cost(*log, model);
    row.total_cost = row.liquidity_cost + row.swap_cost;
    row.mode = log->mode;
    s.rows.push_back(row);
  }
  std::stable_sort(s.rows.begin(), s.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.liquidity < b.liquidity; });
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    if (s.rows[i].total_cost < s.rows[s.cheapest].total_cost) s.cheapest = i;
    if (!s.full_success_liquidity && s.rows[i].success >= 1.0)
      s.full_success_liquidity = s.rows[i].liquidity;
  }
  return s;
}

// CSV emitters. Headers are part of the tool's contract; keep them verbatim.

inline void write_success_vs_liquidity(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "liquidity_cents,success_rate,mode\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.6f,%s\n", static_cast<long long>(r.liquidity),
                  r.success, to_string(r.mode));
    os << buf;
  }
}

inline void write_latency_cdf(std::ostream& os, const std::vector<CdfPoint>& cdf) {
  os << "latency_ms,cumulative_fraction\n";
  char buf[64];
  for (const auto& p : cdf) {
    std::snprintf(buf, sizeof buf, "%lld,%.6f\n", static_cast<long long>(p.latency_ms),
                  p.cumulative_fraction);
    os << buf;
  }
}

inline void write_rebalance_per_minute(std::ostream& os, const MetricsLog& log) {
  const auto wf = per_minute_series(log, ActionKind::WaterfallDeposit);
  const auto rw = per_minute_series(log, ActionKind::ReverseWithdrawal);
  const auto sw = per_minute_series(log, ActionKind::SubmarineSwap);
  const std::size_t n = std::max({wf.size(), rw.size(), sw.size()});
  auto at = [](const std::vector<std::uint64_t>& v, std::size_t i) {
    return i < v.size() ? v[i] : 0;
  };
  os << "minute,waterfall,reverse_waterfall,swaps\n";
  char buf[96];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%llu,%llu,%llu\n", i,
                  static_cast<unsigned long long>(at(wf, i)),
                  static_cast<unsigned long long>(at(rw, i)),
                  static_cast<unsigned long long>(at(sw, i)));
    os << buf;
  }
}

inline void write_cost_sweep(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "liquidity_cents,liquidity_cost,swap_cost,total_cost\n";
  char buf[120];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%lld\n", static_cast<long long>(r.liquidity),
                  static_cast<long long>(r.liquidity_cost), static_cast<long long>(r.swap_cost),
                  static_cast<long long>(r.total_cost));
    os << buf;
  }
}

}  // namespace shpcn
