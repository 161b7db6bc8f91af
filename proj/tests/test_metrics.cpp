#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "shpcn/metrics.hpp"

using namespace shpcn;

namespace {

PaymentRecord retail(PaymentId id, TimeMs created, TimeMs completed) {
  PaymentRecord r;
  r.id = id;
  r.kind = PayKind::Retail;
  r.created_at = created;
  r.completed_at = completed;
  r.status = completed >= 0 ? PayStatus::Succeeded : PayStatus::Failed;
  if (completed < 0) r.reason = FailReason::Timeout;
  return r;
}

RebalanceAction action(ActionKind kind, TimeMs initiated, ActionOutcome out) {
  RebalanceAction a;
  a.kind = kind;
  a.amount = 100;
  a.initiated_at = initiated;
  a.completed_at = initiated + 500;
  a.outcome = out;
  return a;
}

}  // namespace

TEST_CASE("success rate counts retail payments only") {
  MetricsLog log;
  CHECK_FALSE(success_rate(log).has_value());

  log.add_payment(retail(0, 0, 400));
  log.add_payment(retail(1, 0, -1));
  log.add_payment(retail(2, 10, 600));
  PaymentRecord dep = retail(3, 0, 500);
  dep.kind = PayKind::Deposit;
  log.add_payment(dep);  // children never count
  PaymentRecord leg = retail(4, 0, -1);
  leg.kind = PayKind::SwapLeg;
  log.add_payment(leg);

  REQUIRE(success_rate(log).has_value());
  CHECK(*success_rate(log) == Catch::Approx(2.0 / 3.0));

  MetricsLog none;
  none.add_payment(retail(0, 0, -1));
  CHECK(*success_rate(none) == 0.0);
}

TEST_CASE("completion cdf steps at the payment latency") {
  // One successful 2-hop payment at hop delay 100: two forward legs and two
  // settle legs, so the sender learns of success 400 ms after sending.
  MetricsLog log;
  log.add_payment(retail(0, 1000, 1400));
  const auto cdf = completion_cdf(log, 100);
  REQUIRE(cdf.size() == 5);
  for (int i = 0; i < 4; ++i) {
    CHECK(cdf[i].latency_ms == 100 * i);
    CHECK(cdf[i].cumulative_fraction == 0.0);
  }
  CHECK(cdf[4].latency_ms == 400);
  CHECK(cdf[4].cumulative_fraction == 1.0);
}

TEST_CASE("cdf is nondecreasing and terminates at the success rate") {
  MetricsLog log;
  log.add_payment(retail(0, 0, 400));
  log.add_payment(retail(1, 0, 400));
  log.add_payment(retail(2, 0, 1250));
  log.add_payment(retail(3, 0, -1));
  const auto cdf = completion_cdf(log, 200);
  REQUIRE(!cdf.empty());
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    CHECK(cdf[i].latency_ms == cdf[i - 1].latency_ms + 200);
    CHECK(cdf[i].cumulative_fraction >= cdf[i - 1].cumulative_fraction);
  }
  CHECK(cdf.back().cumulative_fraction == Catch::Approx(*success_rate(log)));
  // 400 ms latencies land inside the first 200 ms bucket boundary above them.
  CHECK(cdf[2].latency_ms == 400);
  CHECK(cdf[2].cumulative_fraction == Catch::Approx(0.5));
  CHECK(cdf.back().latency_ms == 1400);

  CHECK_THROWS_AS(completion_cdf(log, 0), std::invalid_argument);
  CHECK(completion_cdf(MetricsLog{}, 100).empty());
}

TEST_CASE("per-minute series buckets completed actions by initiation minute") {
  MetricsLog log;
  log.add_action(action(ActionKind::WaterfallDeposit, 0, ActionOutcome::Completed));
  log.add_action(action(ActionKind::WaterfallDeposit, 59999, ActionOutcome::Completed));
  log.add_action(action(ActionKind::WaterfallDeposit, 60000, ActionOutcome::Completed));
  log.add_action(action(ActionKind::WaterfallDeposit, 300000, ActionOutcome::Completed));
  log.add_action(action(ActionKind::WaterfallDeposit, 30000, ActionOutcome::Expired));
  log.add_action(action(ActionKind::SubmarineSwap, 30000, ActionOutcome::Completed));

  const auto wf = per_minute_series(log, ActionKind::WaterfallDeposit);
  REQUIRE(wf.size() == 6);
  CHECK(wf[0] == 2);
  CHECK(wf[1] == 1);
  CHECK(wf[5] == 1);
  CHECK(wf[2] + wf[3] + wf[4] == 0);

  std::uint64_t sum = 0, completed = 0;
  for (auto v : wf) sum += v;
  for (const auto& a : log.actions)
    if (a.kind == ActionKind::WaterfallDeposit && a.outcome == ActionOutcome::Completed)
      ++completed;
  CHECK(sum == completed);

  CHECK(per_minute_series(MetricsLog{}, ActionKind::ReverseWithdrawal).empty());
}

TEST_CASE("cost model arithmetic") {
  CostModel m;
  // 800k units locked at 4.75%/year is about 104.1 units per day.
  const Money l = euros(800000);
  const Money daily = liquidity_cost_per_day(l, m);
  CHECK(daily == 10411);  // cents; 80,000,000 * 0.0475 / 365 rounded
  CHECK(std::abs(static_cast<double>(daily) / 100.0 - 104.1) < 0.02);

  CHECK(liquidity_cost_per_day(0, m) == 0);
  CHECK_THROWS_AS(liquidity_cost_per_day(-1, m), std::invalid_argument);

  MetricsLog log;
  CHECK(swap_cost(log, m) == 0);
  log.add_l1_tx(10);
  log.add_l1_tx(20);
  log.add_l1_tx(30);
  CHECK(swap_cost(log, m) == 30);
  CHECK(total_cost(l, log, m) == daily + 30);
}

TEST_CASE("sweep summary sorts, finds the cost argmin and the success knee") {
  MetricsLog a;  // 50% success, no swaps
  a.add_payment(retail(0, 0, 400));
  a.add_payment(retail(1, 0, -1));
  a.mode = RebalanceMode::Full;

  MetricsLog b;  // 100% success, one swap (2 txs)
  b.add_payment(retail(0, 0, 400));
  b.add_payment(retail(1, 0, 600));
  b.add_action(action(ActionKind::SubmarineSwap, 1000, ActionOutcome::Completed));
  b.add_l1_tx(1000);
  b.add_l1_tx(11000);
  b.mode = RebalanceMode::Full;

  MetricsLog c;  // 100% success at high liquidity
  c.add_payment(retail(0, 0, 400));
  c.mode = RebalanceMode::Full;

  CHECK_THROWS_AS(sweep_summary({{euros(1000), &a}}), std::invalid_argument);

  // Deliberately unsorted input.
  const auto s = sweep_summary({{euros(100000), &c}, {euros(100), &a}, {euros(1000), &b}});
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[0].liquidity == euros(100));
  CHECK(s.rows[1].liquidity == euros(1000));
  CHECK(s.rows[2].liquidity == euros(100000));

  CHECK(s.rows[0].success == Catch::Approx(0.5));
  CHECK(s.rows[1].swaps == 1);
  CHECK(s.rows[1].swap_cost == 20);
  CHECK(s.rows[1].total_cost == s.rows[1].liquidity_cost + 20);

  // Costs: 10000c -> 1c/day, 100000c -> 13c/day + 20c swaps, 10000000c -> 1301c.
  CHECK(s.rows[0].liquidity_cost == 1);
  CHECK(s.rows[1].liquidity_cost == 13);
  CHECK(s.cheapest == 0);
  REQUIRE(s.full_success_liquidity.has_value());
  CHECK(*s.full_success_liquidity == euros(1000));
}

TEST_CASE("csv emitters write the exact headers and rows") {
  std::vector<SweepRow> rows(2);
  rows[0] = {euros(100), 0.5, 0, 1, 0, 1, RebalanceMode::None};
  rows[1] = {euros(1000), 1.0, 3, 13, 60, 73, RebalanceMode::Full};

  std::ostringstream s1;
  write_success_vs_liquidity(s1, rows);
  CHECK(s1.str() ==
        "liquidity_cents,success_rate,mode\n"
        "10000,0.500000,none\n"
        "100000,1.000000,full\n");

  std::ostringstream s2;
  write_latency_cdf(s2, {{0, 0.0}, {100, 0.25}, {200, 1.0}});
  CHECK(s2.str() ==
        "latency_ms,cumulative_fraction\n"
        "0,0.000000\n"
        "100,0.250000\n"
        "200,1.000000\n");

  MetricsLog log;
  log.add_action(action(ActionKind::WaterfallDeposit, 0, ActionOutcome::Completed));
  log.add_action(action(ActionKind::ReverseWithdrawal, 60000, ActionOutcome::Completed));
  log.add_action(action(ActionKind::SubmarineSwap, 120001, ActionOutcome::Completed));
  std::ostringstream s3;
  write_rebalance_per_minute(s3, log);
  CHECK(s3.str() ==
        "minute,waterfall,reverse_waterfall,swaps\n"
        "0,1,0,0\n"
        "1,0,1,0\n"
        "2,0,0,1\n");

  std::ostringstream s4;
  write_cost_sweep(s4, rows);
  CHECK(s4.str() ==
        "liquidity_cents,liquidity_cost,swap_cost,total_cost\n"
        "10000,1,0,1\n"
        "100000,13,60,73\n");
}
