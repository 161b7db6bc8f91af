#pragma once

#include <algorithm>

#include "shpcn/types.hpp"

// Pure rebalancing decisions. Three mechanisms keep channels usable without
// manual top-ups: a deposit skims off funds that would overflow the receiver's
// wallet cap (waterfall), a withdrawal tops up a sender who cannot cover a
// payment (reverse waterfall), and a swap re-centers a lopsided channel
// between service providers. The engine owns all side effects; everything
// here is arithmetic.

namespace shpcn {

// An incoming amount that would lift the receiver's balance past the channel
// capacity calls for a deposit. Equality does not trigger.
inline bool waterfall_trigger(Money balance, Money amount, Money capacity) {
  return balance + amount > capacity;
}

// Deposit the overflow, but at least min_deposit; never more than the current
// balance (the deposit is paid from it).
inline Money waterfall_deposit_amount(Money balance, Money amount, Money capacity,
                                      Money min_deposit) {
  return std::min(std::max(balance + amount - capacity, min_deposit), balance);
}

// A sender short on funds needs a withdrawal first.
inline bool reverse_trigger(Money balance, Money amount) { return balance < amount; }

// Withdraw enough to cover the payment, but at least up to the reserve level
// min_reserve the user wants to keep.
inline Money withdrawal_amount(Money balance, Money amount, Money min_reserve) {
  return std::max(min_reserve - balance, amount - balance);
}

// The withdrawal may not lift the balance past the channel capacity.
inline Money clamp_withdrawal(Money withdrawal, Money balance, Money capacity) {
  return std::min(withdrawal, capacity - balance);
}

// A forward that would leave one side holding more than threshold x capacity
// calls for a swap. Strict inequality: sitting exactly at the threshold is
// still balanced enough.
inline bool swap_trigger(Money balance_after_forward, Money capacity, double threshold) {
  return static_cast<double>(balance_after_forward) >
         threshold * static_cast<double>(capacity);
}

// Swap away everything above the 50/50 midpoint.
inline Money swap_amount(Money balance_after_forward, Money capacity) {
  return balance_after_forward - capacity / 2;
}

// A swap walks through an on-chain preparation, then an off-chain leg that
// moves the surplus to the counterparty, and finishes with the on-chain
// claims. At most one may be active per channel.
enum class SwapPhase : std::uint8_t { OnChainPrep, OffChainLeg, Done };

struct SwapState {
  ChannelId channel = 0;
  NodeId initiator = 0;
  Money amount = 0;
  SwapPhase phase = SwapPhase::OnChainPrep;
  TimeMs initiated_at = 0;
};

}  // namespace shpcn
