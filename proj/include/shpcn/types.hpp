#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

// Shared domain types. All money amounts are integer euro cents and all
// simulation timestamps are integer milliseconds; floating point never touches
// a balance.

namespace shpcn {

using Money = std::int64_t;   // euro cents
using TimeMs = std::int64_t;  // simulation time, milliseconds
using NodeId = std::uint32_t;
using ChannelId = std::uint32_t;
using PaymentId = std::uint64_t;

constexpr Money kCentsPerEuro = 100;

constexpr Money euros(std::int64_t e) { return e * kCentsPerEuro; }

enum class Tier : std::uint8_t { CentralBank, Lsp, EndUser };

enum class Role : std::uint8_t { Cb, Lsp, Citizen, Merchant };

enum class MerchantSize : std::uint8_t { S, M, L };

enum class Scenario : std::uint8_t { Pos, Online, P2p };

enum class PayKind : std::uint8_t { Retail, Deposit, Withdrawal, SwapLeg };

enum class PayStatus : std::uint8_t {
  Pending,
  AwaitingWithdrawal,
  AwaitingDeposit,
  InFlight,
  Succeeded,
  Failed,
};

enum class FailReason : std::uint8_t {
  None,
  Timeout,
  NoRoute,
  CapExceeded,
  WaterfallFailed,
  ReverseWaterfallFailed,
};

enum class RebalanceMode : std::uint8_t { Full, WaterfallOnly, None };

enum class ArrivalProcess : std::uint8_t { Poisson, Deterministic };

inline const char* to_string(Tier t) {
  switch (t) {
    case Tier::CentralBank: return "cb";
    case Tier::Lsp: return "lsp";
    case Tier::EndUser: return "eu";
  }
  return "?";
}

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Cb: return "cb";
    case Role::Lsp: return "lsp";
    case Role::Citizen: return "citizen";
    case Role::Merchant: return "merchant";
  }
  return "?";
}

inline const char* to_string(MerchantSize s) {
  switch (s) {
    case MerchantSize::S: return "S";
    case MerchantSize::M: return "M";
    case MerchantSize::L: return "L";
  }
  return "?";
}

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Pos: return "pos";
    case Scenario::Online: return "online";
    case Scenario::P2p: return "p2p";
  }
  return "?";
}

inline const char* to_string(PayKind k) {
  switch (k) {
    case PayKind::Retail: return "retail";
    case PayKind::Deposit: return "deposit";
    case PayKind::Withdrawal: return "withdrawal";
    case PayKind::SwapLeg: return "swap_leg";
  }
  return "?";
}

inline const char* to_string(FailReason r) {
  switch (r) {
    case FailReason::None: return "none";
    case FailReason::Timeout: return "timeout";
    case FailReason::NoRoute: return "no-route";
    case FailReason::CapExceeded: return "cap-exceeded";
    case FailReason::WaterfallFailed: return "waterfall-failed";
    case FailReason::ReverseWaterfallFailed: return "reverse-waterfall-failed";
  }
  return "?";
}

inline const char* to_string(RebalanceMode m) {
  switch (m) {
    case RebalanceMode::Full: return "full";
    case RebalanceMode::WaterfallOnly: return "waterfall-only";
    case RebalanceMode::None: return "none";
  }
  return "?";
}

// Thrown when the engine detects a broken runtime invariant (conservation,
// negative balance, time regression). The CLI maps it to exit code 3.
class SimInvariantError : public std::runtime_error {
 public:
  explicit SimInvariantError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shpcn
