#pragma once

#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "shpcn/loadgen.hpp"
#include "shpcn/metrics.hpp"
#include "shpcn/rebalancer.hpp"
#include "shpcn/topology.hpp"
#include "shpcn/types.hpp"

// Discrete-event core. Payments lock liquidity hop by hop along a shortest
// route, settle backwards on success and unwind backwards on failure, with a
// fixed per-hop message delay. Three rebalancing mechanisms hook into the
// flow: deposits that drain an overflowing receiver wallet, withdrawals that
// fund a short sender, and swaps that re-center service-provider channels.
//
// Everything is deterministic: the event order is a total order on
// (time, payment id, event kind, hop), so runs that differ only in channel
// capacities process the shared retail stream in exactly the same sequence.

namespace shpcn {

constexpr TimeMs kRetailDeadlineMs = 10000;
constexpr TimeMs kNoDeadline = std::numeric_limits<TimeMs>::max();
constexpr PaymentId kChildIdBase = 1ull << 56;  // retail ids stay below this

enum class EventKind : std::uint8_t {
  GeneratePayment,
  FindPath,
  SendPayment,
  ForwardPayment,
  ReceivePayment,
  ForwardSuccess,
  ReceiveSuccess,
  ForwardFail,
  ReceiveFail,
  NotifyPayment,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::GeneratePayment: return "generate-payment";
    case EventKind::FindPath: return "find-path";
    case EventKind::SendPayment: return "send-payment";
    case EventKind::ForwardPayment: return "forward-payment";
    case EventKind::ReceivePayment: return "receive-payment";
    case EventKind::ForwardSuccess: return "forward-success";
    case EventKind::ReceiveSuccess: return "receive-success";
    case EventKind::ForwardFail: return "forward-fail";
    case EventKind::ReceiveFail: return "receive-fail";
    default: return "notify-payment";
  }
}

// One hop of a route: a channel plus the direction value flows through it.
struct Hop {
  ChannelId channel = 0;  // index into the engine's channel array
  bool a_to_b = true;
  bool operator==(const Hop&) const = default;
};

struct Event {
  TimeMs time = 0;
  PaymentId payment = 0;
  EventKind kind = EventKind::GeneratePayment;
  std::uint32_t hop = 0;
  std::uint64_t token = 0;  // nonzero marks a cancellable timeout guard
  std::uint64_t seq = 0;
};

// Min-queue order; the leading fields are semantic so that runs differing
// only in liquidity dequeue the retail stream identically.
struct EventAfter {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    if (x.payment != y.payment) return x.payment > y.payment;
    if (x.kind != y.kind) return x.kind > y.kind;
    if (x.hop != y.hop) return x.hop > y.hop;
    return x.seq > y.seq;
  }
};

struct SimConfig {
  std::int64_t hop_delay_ms = 100;
  std::int64_t deposit_roundtrip_ms = 300;
  std::int64_t waterfall_timeout_s = 5;
  std::int64_t block_time_s = 10;
  double swap_threshold = 0.8;
  Money min_deposit = 0;           // deposit floor for the waterfall
  Money min_reserve = euros(50);   // balance a user tops up to on withdrawal
  std::uint32_t swap_l1_tx_count = 2;
  double l1_max_tps = 0.0;         // 0 = unlimited
  RebalanceMode rebalancing = RebalanceMode::Full;
  std::uint64_t seed = 1;
};

inline void check_config(const SimConfig& c) {
  auto bad = [](const std::string& m) { throw std::invalid_argument("sim config: " + m); };
  if (c.hop_delay_ms <= 0 || c.deposit_roundtrip_ms <= 0 || c.block_time_s <= 0)
    bad("delays must be positive");
  if (c.waterfall_timeout_s < 0) bad("waterfall timeout must be non-negative");
  if (!(c.swap_threshold > 0.5) || c.swap_threshold > 1.0)
    bad("swap threshold must be in (0.5, 1]");
  if (c.min_deposit < 0 || c.min_reserve < 0) bad("deposit floor and reserve must be non-negative");
  if (c.swap_l1_tx_count == 0) bad("swaps need at least one settlement transaction");
  if (c.l1_max_tps < 0) bad("l1_max_tps must be non-negative");
}

struct Payment {
  PaymentRequest req;
  PayKind kind = PayKind::Retail;
  PayStatus status = PayStatus::Pending;
  FailReason reason = FailReason::None;
  TimeMs deadline = kNoDeadline;
  TimeMs send_time = -1;
  TimeMs completed_at = -1;
  std::uint32_t attempts = 0;
  std::vector<Hop> route;
  std::vector<Hop> excluded;
  PaymentId parent = 0;      // children: the payment that spawned this one
  PaymentId waiting_on = 0;  // retail: the child currently awaited
  std::uint32_t pending_hop = 0;
  std::uint64_t guard_token = 0;
  // Why the current backward fail chain started; decides terminal reason.
  FailReason fail_context = FailReason::None;
};

// Test hook: sees every live event right before it is handled. Superseded
// timeout guards are skipped silently and never reach the observer.
struct EventObserver {
  virtual ~EventObserver() = default;
  virtual void on_event(const Event& ev, const Payment& p) = 0;
};

class Engine {
 public:
  Engine(const Topology& topo, const SimConfig& cfg, MetricsLog* log,
         EventObserver* observer = nullptr)
      : cfg_(cfg), log_(log), obs_(observer) {
    check_config(cfg_);
    build_graph(topo);
  }

  // Requests must arrive sorted by creation time. Runs to quiescence.
  void run(const std::vector<PaymentRequest>& requests) {
    for (std::size_t i = 1; i < requests.size(); ++i)
      if (requests[i].created_at < requests[i - 1].created_at)
        throw std::invalid_argument("engine: requests not sorted by time");
    retail_.clear();
    retail_.reserve(requests.size());
    clock_ = 0;

    std::size_t next_req = 0;
    while (true) {
      const bool have_req = next_req < requests.size();
      const bool have_ev = !pq_.empty();
      bool take_req;
      if (have_req && have_ev) {
        const Event& top = pq_.top();
        const TimeMs rt = requests[next_req].created_at;
        take_req = rt != top.time ? rt < top.time
                                  : static_cast<PaymentId>(next_req) <= top.payment;
      } else if (have_req) {
        take_req = true;
      } else if (have_ev) {
        take_req = false;
      } else {
        break;
      }

      if (take_req) {
        Event ev;
        ev.time = requests[next_req].created_at;
        ev.payment = static_cast<PaymentId>(next_req);
        ev.kind = EventKind::GeneratePayment;
        advance_clock(ev.time);
        handle(ev, requests[next_req]);
        ++next_req;
      } else {
        Event ev = pq_.top();
        pq_.pop();
        advance_clock(ev.time);
        handle(ev, {});
      }
    }
  }

  // Minimum-hop route where every hop has capacity for the amount, the first
  // hop has spendable sender-side balance (a sender knows only its own
  // balances), and no hop is excluded. Ties resolve toward the smallest
  // next-node id. End users attach through their one channel; the search
  // itself runs on the service-provider core.
  std::optional<std::vector<Hop>> find_path(NodeId src, NodeId dst, Money amount,
                                            const std::vector<Hop>& excluded) const {
    if (src == dst || amount <= 0) return std::nullopt;
    const std::uint32_t s = node_index(src);
    const std::uint32_t d = node_index(dst);

    std::vector<Hop> head, tail;
    std::uint32_t s_core, d_core;
    if (tier_[s] == Tier::EndUser) {
      const Hop h = eu_hop_[s];
      if (is_excluded(excluded, h)) return std::nullopt;
      const Channel& c = ch_[h.channel];
      if (c.capacity < amount || side_balance(c, h.a_to_b) < amount) return std::nullopt;
      head.push_back(h);
      s_core = core_of_[eu_lsp_[s]];
    } else {
      s_core = core_of_[s];
    }
    if (tier_[d] == Tier::EndUser) {
      Hop h = eu_hop_[d];
      h.a_to_b = !h.a_to_b;  // stored in the user's outgoing direction
      if (is_excluded(excluded, h)) return std::nullopt;
      if (ch_[h.channel].capacity < amount) return std::nullopt;
      tail.push_back(h);
      d_core = core_of_[eu_lsp_[d]];
    } else {
      d_core = core_of_[d];
    }
    if (tier_[s] == Tier::EndUser && tier_[d] == Tier::EndUser && s_core == d_core &&
        head[0].channel == tail[0].channel)
      return std::nullopt;  // same node reached through the same channel

    std::vector<Hop> middle;
    if (s_core != d_core) {
      if (!core_bfs(s_core, d_core, amount, excluded, tier_[s] != Tier::EndUser, middle))
        return std::nullopt;
    }
    std::vector<Hop> route = std::move(head);
    route.insert(route.end(), middle.begin(), middle.end());
    route.insert(route.end(), tail.begin(), tail.end());
    if (route.empty()) return std::nullopt;
    return route;
  }

  const std::vector<Channel>& channels() const { return ch_; }
  ChannelId external_channel_id(std::uint32_t pos) const { return ext_chan_id_[pos]; }
  const Payment* payment(PaymentId id) const {
    if (id < kChildIdBase) return id < retail_.size() ? &retail_[id] : nullptr;
    auto it = children_.find(id);
    return it == children_.end() ? nullptr : &it->second;
  }
  const SwapState* active_swap(ChannelId channel_pos) const {
    auto it = swaps_.find(channel_pos);
    return it == swaps_.end() ? nullptr : &it->second;
  }

 private:
  // --- static graph ---------------------------------------------------

  struct CoreEdge {
    std::uint32_t peer_core;
    NodeId peer_id;
    std::uint32_t chan;
    bool a_to_b;
  };

  void build_graph(const Topology& topo) {
    const auto errs = validate(topo);
    if (!errs.empty()) throw std::invalid_argument("engine: bad topology: " + errs.front());
    const std::size_t n = topo.nodes.size();
    node_id_.resize(n);
    tier_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      node_idx_[topo.nodes[i].id] = static_cast<std::uint32_t>(i);
      node_id_[i] = topo.nodes[i].id;
      tier_[i] = topo.nodes[i].tier;
    }
    ch_ = topo.channels;
    ext_chan_id_.resize(ch_.size());
    for (std::size_t i = 0; i < ch_.size(); ++i) ext_chan_id_[i] = ch_[i].id;

    core_of_.assign(n, UINT32_MAX);
    std::vector<std::uint32_t> core_nodes;
    for (std::size_t i = 0; i < n; ++i)
      if (tier_[i] != Tier::EndUser) {
        core_of_[i] = static_cast<std::uint32_t>(core_nodes.size());
        core_nodes.push_back(static_cast<std::uint32_t>(i));
      }
    core_id_.resize(core_nodes.size());
    for (std::size_t i = 0; i < core_nodes.size(); ++i) core_id_[i] = node_id_[core_nodes[i]];

    eu_hop_.assign(n, Hop{});
    eu_lsp_.assign(n, 0);
    adj_.assign(core_nodes.size(), {});
    for (std::size_t ci = 0; ci < ch_.size(); ++ci) {
      const Channel& c = ch_[ci];
      const std::uint32_t ia = node_idx_.at(c.a);
      const std::uint32_t ib = node_idx_.at(c.b);
      const bool a_eu = tier_[ia] == Tier::EndUser;
      const bool b_eu = tier_[ib] == Tier::EndUser;
      if (a_eu || b_eu) {
        const std::uint32_t eu = a_eu ? ia : ib;
        const std::uint32_t lsp = a_eu ? ib : ia;
        // Outgoing direction from the user's side.
        eu_hop_[eu] = Hop{static_cast<ChannelId>(ci), a_eu};
        eu_lsp_[eu] = lsp;
      } else {
        adj_[core_of_[ia]].push_back(
            {core_of_[ib], node_id_[ib], static_cast<std::uint32_t>(ci), true});
        adj_[core_of_[ib]].push_back(
            {core_of_[ia], node_id_[ia], static_cast<std::uint32_t>(ci), false});
      }
    }
    for (auto& v : adj_)
      std::sort(v.begin(), v.end(),
                [](const CoreEdge& x, const CoreEdge& y) { return x.peer_id < y.peer_id; });
    bfs_parent_.assign(core_nodes.size(), {});
    bfs_seen_.assign(core_nodes.size(), 0);
  }

  std::uint32_t node_index(NodeId id) const {
    auto it = node_idx_.find(id);
    if (it == node_idx_.end()) throw std::invalid_argument("engine: unknown node id");
    return it->second;
  }

  static bool is_excluded(const std::vector<Hop>& excluded, const Hop& h) {
    for (const auto& e : excluded)
      if (e == h) return true;
    return false;
  }

  static Money side_balance(const Channel& c, bool from_a) {
    return from_a ? c.balance_a : c.balance_b;
  }

  bool core_bfs(std::uint32_t from, std::uint32_t to, Money amount,
                const std::vector<Hop>& excluded, bool first_hop_needs_balance,
                std::vector<Hop>& out) const {
    ++bfs_epoch_;
    bfs_seen_[from] = bfs_epoch_;
    bfs_queue_.clear();
    bfs_queue_.push_back(from);
    for (std::size_t head = 0; head < bfs_queue_.size(); ++head) {
      const std::uint32_t u = bfs_queue_[head];
      for (const CoreEdge& e : adj_[u]) {
        if (bfs_seen_[e.peer_core] == bfs_epoch_) continue;
        const Channel& c = ch_[e.chan];
        if (c.capacity < amount) continue;
        const Hop h{static_cast<ChannelId>(e.chan), e.a_to_b};
        if (is_excluded(excluded, h)) continue;
        if (u == from && first_hop_needs_balance && side_balance(c, e.a_to_b) < amount) continue;
        bfs_seen_[e.peer_core] = bfs_epoch_;
        bfs_parent_[e.peer_core] = {u, h};
        if (e.peer_core == to) {
          std::vector<Hop> rev;
          for (std::uint32_t v = to; v != from; v = bfs_parent_[v].first)
            rev.push_back(bfs_parent_[v].second);
          out.assign(rev.rbegin(), rev.rend());
          return true;
        }
        bfs_queue_.push_back(e.peer_core);
      }
    }
    return false;
  }

  // --- event plumbing -------------------------------------------------

  void advance_clock(TimeMs t) {
    if (t < clock_)
      throw SimInvariantError("event time went backwards at t=" + std::to_string(t));
    clock_ = t;
  }

  void schedule(TimeMs t, PaymentId pid, EventKind kind, std::uint32_t hop = 0,
                std::uint64_t token = 0) {
    pq_.push(Event{t, pid, kind, hop, token, seq_++});
  }

  Payment& pay(PaymentId id) {
    return id < kChildIdBase ? retail_[static_cast<std::size_t>(id)] : children_.at(id);
  }

  void handle(const Event& ev, const PaymentRequest& fresh) {
    if (ev.kind == EventKind::GeneratePayment) {
      retail_.emplace_back();
      Payment& p = retail_.back();
      p.req = fresh;
      p.kind = PayKind::Retail;
      p.deadline = fresh.created_at + kRetailDeadlineMs;
      if (obs_) obs_->on_event(ev, p);
      schedule(ev.time, ev.payment, EventKind::FindPath);
      return;
    }
    Payment& p = pay(ev.payment);
    // A timeout guard is dead once the payment moved on.
    if (ev.token != 0 &&
        (p.status != PayStatus::AwaitingDeposit || p.guard_token != ev.token))
      return;
    if (obs_) obs_->on_event(ev, p);
    switch (ev.kind) {
      case EventKind::FindPath: on_find_path(ev, p); break;
      case EventKind::SendPayment: on_send(ev, p); break;
      case EventKind::ForwardPayment: on_forward(ev, p); break;
      case EventKind::ReceivePayment: on_receive(ev, p); break;
      case EventKind::ForwardSuccess: on_forward_success(ev, p); break;
      case EventKind::ReceiveSuccess: on_receive_success(ev, p); break;
      case EventKind::ForwardFail: on_forward_fail(ev, p); break;
      case EventKind::ReceiveFail: on_receive_fail(ev, p); break;
      case EventKind::NotifyPayment: break;  // informational
      default: throw SimInvariantError("unhandled event kind");
    }
  }

  // --- channel arithmetic ----------------------------------------------

  void audit(const Channel& c) const {
    if (c.balance_a < 0 || c.balance_b < 0 || c.locked < 0 ||
        c.balance_a + c.balance_b + c.locked != c.capacity)
      throw SimInvariantError("channel " + std::to_string(c.id) +
                              " broke conservation at t=" + std::to_string(clock_));
  }

  bool try_lock(const Hop& h, Money amount) {
    Channel& c = ch_[h.channel];
    Money& from = h.a_to_b ? c.balance_a : c.balance_b;
    if (from < amount) return false;
    from -= amount;
    c.locked += amount;
    audit(c);
    return true;
  }

  void settle(const Hop& h, Money amount) {
    Channel& c = ch_[h.channel];
    Money& to = h.a_to_b ? c.balance_b : c.balance_a;
    c.locked -= amount;
    to += amount;
    audit(c);
  }

  void unwind(const Hop& h, Money amount) {
    Channel& c = ch_[h.channel];
    Money& from = h.a_to_b ? c.balance_a : c.balance_b;
    c.locked -= amount;
    from += amount;
    audit(c);
  }

  // --- lifecycle -------------------------------------------------------

  void finish(PaymentId pid, Payment& p, PayStatus st, FailReason why, TimeMs t) {
    p.status = st;
    p.reason = why;
    if (st == PayStatus::Succeeded) {
      p.completed_at = t;
      if (p.deadline != kNoDeadline && t > p.deadline)
        throw SimInvariantError("payment " + std::to_string(pid) + " settled past its deadline");
    }
    PaymentRecord r;
    r.id = p.req.id;
    r.kind = p.kind;
    r.created_at = p.req.created_at;
    r.completed_at = st == PayStatus::Succeeded ? p.completed_at : -1;
    r.status = st;
    r.reason = why;
    r.attempts = p.attempts;
    r.route_len = static_cast<std::uint32_t>(p.route.size());
    r.amount = p.req.amount;
    log_->add_payment(r);
    p.route.clear();
    p.route.shrink_to_fit();
    p.excluded.clear();
    p.excluded.shrink_to_fit();
  }

  // Backward fail chain: hops [0, failed_hop) are locked and unwind one per
  // hop delay on the way back to the sender; the failed hop itself never
  // locked. failed_hop == 0 means the sender's own lock failed and it learns
  // instantly.
  void begin_fail(PaymentId pid, Payment& p, std::uint32_t failed_hop, TimeMs t) {
    p.status = PayStatus::InFlight;
    if (failed_hop == 0) {
      schedule(t, pid, EventKind::ReceiveFail, 0);
      return;
    }
    for (std::uint32_t h = failed_hop; h-- > 0;)
      schedule(t + static_cast<TimeMs>(failed_hop - h) * cfg_.hop_delay_ms, pid,
               EventKind::ForwardFail, h);
    schedule(t + static_cast<TimeMs>(failed_hop) * cfg_.hop_delay_ms, pid,
             EventKind::ReceiveFail, failed_hop);
  }

  void on_find_path(const Event& ev, Payment& p) {
    if (p.kind != PayKind::Retail) {  // children carry a forced route
      if (p.kind == PayKind::SwapLeg) {
        auto it = swaps_.find(p.route[0].channel);
        if (it != swaps_.end()) it->second.phase = SwapPhase::OffChainLeg;
      }
      schedule(ev.time, ev.payment, EventKind::SendPayment);
      return;
    }
    const std::uint32_t s = node_index(p.req.sender);
    if (cfg_.rebalancing != RebalanceMode::None && tier_[s] == Tier::EndUser) {
      const Hop out = eu_hop_[s];
      const Channel& c = ch_[out.channel];
      const Money balance = side_balance(c, out.a_to_b);
      if (reverse_trigger(balance, p.req.amount)) {
        if (p.req.amount > c.capacity) {
          finish(ev.payment, p, PayStatus::Failed, FailReason::CapExceeded, ev.time);
          return;
        }
        start_withdrawal(ev.payment, p, s, out, balance, ev.time);
        return;
      }
    }
    auto route = find_path(p.req.sender, p.req.receiver, p.req.amount, p.excluded);
    if (!route) {
      finish(ev.payment, p, PayStatus::Failed, FailReason::NoRoute, ev.time);
      return;
    }
    p.route = std::move(*route);
    p.status = PayStatus::InFlight;
    schedule(ev.time, ev.payment, EventKind::SendPayment);
  }

  void on_send(const Event& ev, Payment& p) {
    ++p.attempts;
    p.send_time = ev.time;
    p.status = PayStatus::InFlight;
    if (!try_lock(p.route[0], p.req.amount)) {
      begin_fail(ev.payment, p, 0, ev.time);
      return;
    }
    next_forward(ev.payment, p, 0, ev.time);
  }

  void next_forward(PaymentId pid, Payment& p, std::uint32_t locked_hop, TimeMs t) {
    const TimeMs at = t + cfg_.hop_delay_ms;
    if (locked_hop + 1 < p.route.size())
      schedule(at, pid, EventKind::ForwardPayment, locked_hop + 1);
    else
      schedule(at, pid, EventKind::ReceivePayment);
  }

  void on_forward(const Event& ev, Payment& p) {
    const std::uint32_t h = ev.hop;
    const Hop hop = p.route[h];
    const bool final_hop = h + 1 == p.route.size();

    if (p.kind == PayKind::Retail && final_hop && cfg_.rebalancing != RebalanceMode::None) {
      const Channel& c = ch_[hop.channel];
      const std::uint32_t recv = node_index(p.req.receiver);
      if (tier_[recv] == Tier::EndUser) {
        const Money balance = side_balance(c, !hop.a_to_b);  // receiver side
        if (waterfall_trigger(balance, p.req.amount, c.capacity)) {
          start_waterfall(ev.payment, p, h, hop, balance, c, ev.time);
          return;
        }
      }
    }
    maybe_swap(p, h, ev.time);
    if (!try_lock(hop, p.req.amount)) {
      begin_fail(ev.payment, p, h, ev.time);
      return;
    }
    next_forward(ev.payment, p, h, ev.time);
  }

  void on_receive(const Event& ev, Payment& p) {
    const std::uint32_t n = static_cast<std::uint32_t>(p.route.size());
    // A late arrival could not settle back to the sender in time; refuse it
    // so no payment ever succeeds past its deadline.
    if (p.deadline != kNoDeadline &&
        ev.time + static_cast<TimeMs>(n) * cfg_.hop_delay_ms > p.deadline) {
      begin_fail(ev.payment, p, n, ev.time);
      return;
    }
    settle(p.route[n - 1], p.req.amount);
    if (p.kind == PayKind::Deposit) resume_after_deposit(p, ev.time);
    if (p.kind == PayKind::Withdrawal) resume_after_withdrawal(p, ev.time);
    if (n >= 2)
      schedule(ev.time + cfg_.hop_delay_ms, ev.payment, EventKind::ForwardSuccess, n - 2);
    else
      schedule(ev.time + cfg_.hop_delay_ms, ev.payment, EventKind::ReceiveSuccess);
  }

  void on_forward_success(const Event& ev, Payment& p) {
    settle(p.route[ev.hop], p.req.amount);
    if (ev.hop > 0)
      schedule(ev.time + cfg_.hop_delay_ms, ev.payment, EventKind::ForwardSuccess, ev.hop - 1);
    else
      schedule(ev.time + cfg_.hop_delay_ms, ev.payment, EventKind::ReceiveSuccess);
  }

  void on_receive_success(const Event& ev, Payment& p) {
    if (p.kind == PayKind::Deposit) {
      log_action(ActionKind::WaterfallDeposit, p, ActionOutcome::Completed, ev.time);
    } else if (p.kind == PayKind::Withdrawal) {
      log_action(ActionKind::ReverseWithdrawal, p, ActionOutcome::Completed, ev.time);
    } else if (p.kind == PayKind::SwapLeg) {
      log_action(ActionKind::SubmarineSwap, p, ActionOutcome::Completed, ev.time);
      swaps_.erase(p.route[0].channel);
      log_->add_l1_tx(p.req.created_at);
      for (std::uint32_t i = 1; i < cfg_.swap_l1_tx_count; ++i) log_->add_l1_tx(ev.time);
    }
    finish(ev.payment, p, PayStatus::Succeeded, FailReason::None, ev.time);
    if (ev.payment >= kChildIdBase) children_.erase(ev.payment);
  }

  void on_forward_fail(const Event& ev, Payment& p) {
    if (ev.token != 0) {
      // Valid waterfall timeout: give up waiting and fail backwards. The
      // pending hop was never locked, so there is nothing to unwind here.
      ++p.guard_token;
      p.waiting_on = 0;
      p.fail_context = FailReason::WaterfallFailed;
      begin_fail(ev.payment, p, p.pending_hop, ev.time);
      return;
    }
    unwind(p.route[ev.hop], p.req.amount);
  }

  void on_receive_fail(const Event& ev, Payment& p) {
    if (p.kind == PayKind::Retail) {
      if (p.fail_context == FailReason::WaterfallFailed) {
        // The receiver could not make room; no alternative route can exist
        // (a user has exactly one channel), so retrying is pointless.
        finish(ev.payment, p, PayStatus::Failed, FailReason::WaterfallFailed, ev.time);
      } else if (ev.time < p.deadline) {
        if (ev.hop < p.route.size()) p.excluded.push_back(p.route[ev.hop]);
        schedule(ev.time, ev.payment, EventKind::FindPath);
      } else {
        finish(ev.payment, p, PayStatus::Failed, FailReason::Timeout, ev.time);
      }
      return;
    }
    // A child failed for good; tell whoever depends on it.
    if (p.kind == PayKind::Deposit) {
      log_action(ActionKind::WaterfallDeposit, p, ActionOutcome::Expired, ev.time);
      Payment& parent = pay(p.parent);
      if (parent.status == PayStatus::AwaitingDeposit && parent.waiting_on == ev.payment) {
        ++parent.guard_token;
        parent.waiting_on = 0;
        parent.fail_context = FailReason::WaterfallFailed;
        begin_fail(p.parent, parent, parent.pending_hop, ev.time);
      }
    } else if (p.kind == PayKind::Withdrawal) {
      log_action(ActionKind::ReverseWithdrawal, p, ActionOutcome::Expired, ev.time);
      Payment& parent = pay(p.parent);
      if (parent.status == PayStatus::AwaitingWithdrawal && parent.waiting_on == ev.payment) {
        parent.waiting_on = 0;
        drop_from_queue(node_index(parent.req.sender), p.parent);
        finish(p.parent, parent, PayStatus::Failed, FailReason::ReverseWaterfallFailed, ev.time);
      }
    } else if (p.kind == PayKind::SwapLeg) {
      log_action(ActionKind::SubmarineSwap, p, ActionOutcome::Expired, ev.time);
      swaps_.erase(p.route[0].channel);
    }
    finish(ev.payment, p, PayStatus::Failed, FailReason::NoRoute, ev.time);
    children_.erase(ev.payment);
  }

  // --- rebalancing hooks ----------------------------------------------

  void start_waterfall(PaymentId pid, Payment& p, std::uint32_t hop_idx, const Hop& hop,
                       Money recv_balance, const Channel& c, TimeMs t) {
    const Money d =
        waterfall_deposit_amount(recv_balance, p.req.amount, c.capacity, cfg_.min_deposit);
    if (d <= 0) {  // an empty wallet cannot make room
      p.fail_context = FailReason::WaterfallFailed;
      begin_fail(pid, p, hop_idx, t);
      return;
    }
    schedule(t, pid, EventKind::NotifyPayment, hop_idx);
    const std::uint32_t recv = node_index(p.req.receiver);
    const PaymentId child =
        spawn_child(PayKind::Deposit, p.req.receiver, node_id_[eu_lsp_[recv]], d,
                    Hop{hop.channel, !hop.a_to_b}, t, t + cfg_.deposit_roundtrip_ms, pid);
    p.status = PayStatus::AwaitingDeposit;
    p.pending_hop = hop_idx;
    p.waiting_on = child;
    ++p.guard_token;
    schedule(t + cfg_.waterfall_timeout_s * 1000, pid, EventKind::ForwardFail, hop_idx,
             p.guard_token);
  }

  void resume_after_deposit(Payment& child, TimeMs t) {
    Payment& parent = pay(child.parent);
    if (parent.status != PayStatus::AwaitingDeposit || parent.waiting_on == 0) return;
    ++parent.guard_token;
    parent.waiting_on = 0;
    parent.status = PayStatus::InFlight;
    schedule(t, child.parent, EventKind::ForwardPayment, parent.pending_hop);
  }

  void start_withdrawal(PaymentId pid, Payment& p, std::uint32_t sender_idx, const Hop& out,
                        Money balance, TimeMs t) {
    const Channel& c = ch_[out.channel];
    const Money w = clamp_withdrawal(withdrawal_amount(balance, p.req.amount, cfg_.min_reserve),
                                     balance, c.capacity);
    const PaymentId child =
        spawn_child(PayKind::Withdrawal, node_id_[eu_lsp_[sender_idx]], p.req.sender, w,
                    Hop{out.channel, !out.a_to_b}, t, t + cfg_.deposit_roundtrip_ms, pid);
    p.status = PayStatus::AwaitingWithdrawal;
    p.waiting_on = child;
    wait_queue_[sender_idx].push_back(pid);
  }

  void resume_after_withdrawal(Payment& child, TimeMs t) {
    Payment& parent = pay(child.parent);
    if (parent.status != PayStatus::AwaitingWithdrawal || parent.waiting_on != child.req.id)
      return;
    parent.waiting_on = 0;
    drop_from_queue(node_index(parent.req.sender), child.parent);
    if (t < parent.deadline) {
      parent.status = PayStatus::Pending;
      schedule(t, child.parent, EventKind::FindPath);
    } else {
      finish(child.parent, parent, PayStatus::Failed, FailReason::Timeout, t);
    }
  }

  void maybe_swap(Payment& p, std::uint32_t h, TimeMs t) {
    if (cfg_.rebalancing != RebalanceMode::Full || p.kind != PayKind::Retail || h == 0) return;
    const Hop up = p.route[h - 1];
    const Channel& c = ch_[up.channel];
    const std::uint32_t ia = node_idx_.at(c.a);
    const std::uint32_t ib = node_idx_.at(c.b);
    if (tier_[ia] == Tier::EndUser || tier_[ib] == Tier::EndUser) return;
    const Money mine = side_balance(c, !up.a_to_b);  // this node's side, post-settle target
    const Money anticipated = mine + p.req.amount;
    if (!swap_trigger(anticipated, c.capacity, cfg_.swap_threshold)) return;
    if (swaps_.count(up.channel) != 0) return;
    const Money amount = std::min(swap_amount(anticipated, c.capacity), mine);
    if (amount <= 0) return;
    ++log_->swaps_demanded;
    if (!l1_admit(t, cfg_.swap_l1_tx_count)) {
      ++log_->swaps_deferred;
      return;
    }
    ++log_->swaps_admitted;
    const NodeId me = up.a_to_b ? c.b : c.a;
    const NodeId peer = up.a_to_b ? c.a : c.b;
    swaps_.emplace(up.channel,
                   SwapState{ext_chan_id_[up.channel], me, amount, SwapPhase::OnChainPrep, t});
    spawn_child(PayKind::SwapLeg, me, peer, amount, Hop{up.channel, !up.a_to_b}, t,
                t + cfg_.block_time_s * 1000, 0);
  }

  bool l1_admit(TimeMs t, std::uint32_t txs) {
    if (cfg_.l1_max_tps <= 0) return true;
    const TimeMs sec = t / 1000;
    if (sec != l1_window_) {
      l1_window_ = sec;
      l1_window_txs_ = 0;
    }
    if (static_cast<double>(l1_window_txs_ + txs) > cfg_.l1_max_tps) return false;
    l1_window_txs_ += txs;
    return true;
  }

  PaymentId spawn_child(PayKind kind, NodeId sender, NodeId receiver, Money amount,
                        Hop route_hop, TimeMs trigger, TimeMs start_at, PaymentId parent) {
    const std::uint32_t tag = kind == PayKind::Deposit ? 1 : kind == PayKind::Withdrawal ? 2 : 3;
    const PaymentId pid = kChildIdBase * tag + child_counter_[tag - 1]++;
    Payment c;
    c.req.id = pid;
    c.req.sender = sender;
    c.req.receiver = receiver;
    c.req.amount = amount;
    c.req.created_at = trigger;
    c.kind = kind;
    c.deadline = kNoDeadline;
    c.route = {route_hop};
    c.parent = parent;
    children_.emplace(pid, std::move(c));
    schedule(start_at, pid, EventKind::FindPath);
    return pid;
  }

  void log_action(ActionKind kind, const Payment& child, ActionOutcome outcome, TimeMs t) {
    RebalanceAction a;
    a.kind = kind;
    a.actor = kind == ActionKind::ReverseWithdrawal ? child.req.receiver : child.req.sender;
    a.channel = ext_chan_id_[child.route[0].channel];
    a.amount = child.req.amount;
    a.initiated_at = child.req.created_at;
    a.completed_at = t;
    a.outcome = outcome;
    log_->add_action(a);
  }

  void drop_from_queue(std::uint32_t eu_idx, PaymentId pid) {
    auto it = wait_queue_.find(eu_idx);
    if (it == wait_queue_.end()) return;
    auto& q = it->second;
    for (auto qi = q.begin(); qi != q.end(); ++qi)
      if (*qi == pid) {
        q.erase(qi);
        break;
      }
    if (q.empty()) wait_queue_.erase(it);
  }

  // --- state -----------------------------------------------------------

  SimConfig cfg_;
  MetricsLog* log_;
  EventObserver* obs_;

  std::unordered_map<NodeId, std::uint32_t> node_idx_;
  std::vector<NodeId> node_id_;
  std::vector<Tier> tier_;
  std::vector<Channel> ch_;
  std::vector<ChannelId> ext_chan_id_;
  std::vector<std::uint32_t> core_of_;
  std::vector<NodeId> core_id_;
  std::vector<Hop> eu_hop_;
  std::vector<std::uint32_t> eu_lsp_;
  std::vector<std::vector<CoreEdge>> adj_;

  mutable std::vector<std::pair<std::uint32_t, Hop>> bfs_parent_;
  mutable std::vector<std::uint32_t> bfs_seen_;
  mutable std::vector<std::uint32_t> bfs_queue_;
  mutable std::uint32_t bfs_epoch_ = 0;

  std::priority_queue<Event, std::vector<Event>, EventAfter> pq_;
  std::uint64_t seq_ = 0;
  TimeMs clock_ = 0;
  std::vector<Payment> retail_;
  std::unordered_map<PaymentId, Payment> children_;
  std::uint64_t child_counter_[3] = {0, 0, 0};
  std::unordered_map<std::uint32_t, std::deque<PaymentId>> wait_queue_;
  std::unordered_map<ChannelId, SwapState> swaps_;  // keyed by channel position

  TimeMs l1_window_ = -1;
  std::uint64_t l1_window_txs_ = 0;
};

// One-call driver over a pre-built request stream.
inline MetricsLog run_simulation(const Topology& topo, const std::vector<PaymentRequest>& reqs,
                                 const SimConfig& cfg, EventObserver* obs = nullptr) {
  MetricsLog log;
  log.mode = cfg.rebalancing;
  log.seed = cfg.seed;
  log.total_routing_liquidity = total_routing_liquidity(topo);
  Engine e(topo, cfg, &log, obs);
  e.run(reqs);
  return log;
}

// One-call driver that also generates the load.
inline MetricsLog run_simulation(const Topology& topo, const LoadProfile& profile,
                                 const ScenarioTable& table, const SimConfig& cfg,
                                 EventObserver* obs = nullptr) {
  LoadGenerator gen(topo, table, profile, cfg.seed);
  return run_simulation(topo, gen.generate_all(), cfg, obs);
}

}  // namespace shpcn
