#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "shpcn/rng.hpp"
#include "shpcn/types.hpp"

// Three-tier network construction: a clique of central banks, a small-world
// LSP mesh on top of them, and end users (citizens and merchants) attached to
// exactly one LSP of their own country.

namespace shpcn {

struct Node {
  NodeId id = 0;
  Tier tier = Tier::EndUser;
  Role role = Role::Citizen;
  MerchantSize msize = MerchantSize::S;  // meaningful for merchants only
  std::uint32_t country = 0;
};

struct Channel {
  ChannelId id = 0;
  NodeId a = 0;
  NodeId b = 0;
  Money capacity = 0;
  Money balance_a = 0;
  Money balance_b = 0;
  Money locked = 0;  // in-flight amounts; balance_a + balance_b + locked == capacity
};

enum class LspAssignment : std::uint8_t {
  PopulationProportional,  // used by the scaled-europe preset
  LogNormalSubsets,        // generic rule: per-country subset sizes from log-normal draws
};

struct TopologyParams {
  std::uint32_t num_countries = 0;
  std::vector<std::uint32_t> country_populations;  // citizens per country
  std::uint32_t citizens_per_merchant = 100;
  std::uint32_t citizens_per_lsp = 10000;
  Money cb_clique_capacity = euros(500000000);
  Money cb_lsp_capacity = euros(1000000);
  Money lsp_lsp_capacity = euros(1000000);
  std::uint32_t ws_degree = 4;
  double ws_rewire_prob = 0.1;
  double lognormal_mu = 0.0;
  double lognormal_sigma = 1.0;
  Money citizen_cap = euros(3000);
  Money merchant_cap_s = euros(5000);
  Money merchant_cap_m = euros(50000);
  Money merchant_cap_l = euros(500000);
  double merchant_share_s = 0.80;
  double merchant_share_m = 0.15;
  double merchant_share_l = 0.05;
  double citizen_balance_fraction = 0.5;
  double merchant_balance_fraction = 0.0;
  LspAssignment lsp_assignment = LspAssignment::LogNormalSubsets;
  std::uint64_t seed = 1;
};

struct Topology {
  TopologyParams params;
  std::vector<Node> nodes;
  std::vector<Channel> channels;
};

// Largest-remainder apportionment of `total` units over `weights`; ties break
// toward lower indices. With min_one, every positive-weight entry receives at
// least one unit, the deficit taken from the largest allocation.
inline std::vector<std::uint32_t> apportion_largest_remainder(std::uint64_t total,
                                                              const std::vector<double>& weights,
                                                              bool min_one) {
  const std::size_t n = weights.size();
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  std::vector<std::uint32_t> out(n, 0);
  std::vector<double> frac(n, 0.0);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = wsum > 0.0 ? static_cast<double>(total) * weights[i] / wsum : 0.0;
    out[i] = static_cast<std::uint32_t>(quota);
    frac[i] = quota - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total; ++i) {
    out[order[i % n]] += 1;
    ++assigned;
  }
  if (min_one) {
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] > 0.0 && out[i] == 0) {
        const std::size_t big =
            static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
        out[big] -= 1;
        out[i] += 1;
      }
    }
  }
  return out;
}

// Euro-area model at 1:1000 scale: 300k citizens split 1:6:60 over a small,
// a medium and a large country, one merchant per 100 citizens, one LSP per
// 10k citizens, one central bank per country.
inline TopologyParams scaled_europe_params(Money lsp_lsp_capacity, Money cb_lsp_capacity) {
  TopologyParams p;
  p.num_countries = 3;
  p.country_populations = apportion_largest_remainder(300000, {1.0, 6.0, 60.0}, false);
  p.citizens_per_merchant = 100;
  p.citizens_per_lsp = 10000;
  p.cb_clique_capacity = euros(500000000);
  p.cb_lsp_capacity = cb_lsp_capacity;
  p.lsp_lsp_capacity = lsp_lsp_capacity;
  p.ws_degree = 4;
  p.ws_rewire_prob = 0.1;
  p.lsp_assignment = LspAssignment::PopulationProportional;
  return p;
}

namespace detail {

struct DerivedCounts {
  std::uint64_t total_citizens = 0;
  std::uint32_t total_merchants = 0;
  std::uint32_t total_lsps = 0;
  std::vector<std::uint32_t> merchants;  // per country
  std::vector<std::uint32_t> lsps;       // per country
};

inline void check_params(const TopologyParams& p) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("topology params: " + msg); };
  if (p.num_countries == 0) bad("need at least one country");
  if (p.country_populations.size() != p.num_countries)
    bad("country_populations size does not match num_countries");
  if (p.citizens_per_merchant == 0 || p.citizens_per_lsp == 0)
    bad("citizens_per_merchant and citizens_per_lsp must be positive");
  if (p.cb_clique_capacity < 0 || p.cb_lsp_capacity < 0 || p.lsp_lsp_capacity < 0)
    bad("capacities must be non-negative");
  if (p.citizen_cap <= 0 || p.merchant_cap_s <= 0 || p.merchant_cap_m <= 0 || p.merchant_cap_l <= 0)
    bad("end-user caps must be positive");
  if (p.ws_degree % 2 != 0) bad("ws_degree must be even");
  if (p.ws_rewire_prob < 0.0 || p.ws_rewire_prob > 1.0) bad("ws_rewire_prob must be in [0,1]");
  const double share_sum = p.merchant_share_s + p.merchant_share_m + p.merchant_share_l;
  if (p.merchant_share_s < 0 || p.merchant_share_m < 0 || p.merchant_share_l < 0 ||
      std::abs(share_sum - 1.0) > 1e-9)
    bad("merchant size shares must be non-negative and sum to 1");
  if (p.citizen_balance_fraction < 0.0 || p.citizen_balance_fraction > 1.0 ||
      p.merchant_balance_fraction < 0.0 || p.merchant_balance_fraction > 1.0)
    bad("balance fractions must be in [0,1]");
  if (p.lognormal_sigma < 0.0) bad("lognormal_sigma must be non-negative");
}

inline DerivedCounts derive_counts(const TopologyParams& p, Rng& rng) {
  DerivedCounts d;
  for (auto c : p.country_populations) d.total_citizens += c;
  d.total_merchants = static_cast<std::uint32_t>(
      std::llround(static_cast<double>(d.total_citizens) / p.citizens_per_merchant));
  // Every country keeps at least one LSP so its central bank has a subordinate.
  d.total_lsps = std::max<std::uint32_t>(
      p.num_countries, static_cast<std::uint32_t>(std::llround(
                           static_cast<double>(d.total_citizens) / p.citizens_per_lsp)));

  std::vector<double> pop_weights(p.num_countries);
  for (std::size_t i = 0; i < p.num_countries; ++i)
    pop_weights[i] = static_cast<double>(p.country_populations[i]);

  d.merchants = apportion_largest_remainder(d.total_merchants, pop_weights, false);

  if (p.lsp_assignment == LspAssignment::PopulationProportional) {
    std::vector<double> w = pop_weights;
    // Zero-population countries still carry weight epsilon so min_one applies.
    for (auto& x : w)
      if (x == 0.0) x = 1e-12;
    d.lsps = apportion_largest_remainder(d.total_lsps, w, true);
  } else {
    // Subset sizes drawn log-normally, one draw per country in index order.
    std::vector<double> w(p.num_countries);
    for (std::size_t i = 0; i < p.num_countries; ++i)
      w[i] = std::exp(rng.normal(p.lognormal_mu, p.lognormal_sigma));
    d.lsps = apportion_largest_remainder(d.total_lsps, w, true);
  }

  for (std::size_t i = 0; i < p.num_countries; ++i) {
    if (d.lsps[i] == 0 && (p.country_populations[i] > 0 || d.merchants[i] > 0))
      throw std::invalid_argument("topology params: country " + std::to_string(i) +
                                  " has end users but no LSP");
  }
  if (p.ws_degree >= d.total_lsps && p.ws_degree > 0)
    throw std::invalid_argument("topology params: ws_degree must be below the LSP count");
  return d;
}

}  // namespace detail

// Deterministic generation. Random draws happen in this fixed order: country
// subset weights (log-normal mode only), mesh rewiring, per-LSP attachment
// weights, merchant sizes, end-user attachment; each pass walks ids ascending.
inline Topology generate_topology(const TopologyParams& params) {
  detail::check_params(params);
  Rng rng(params.seed);
  detail::DerivedCounts counts = detail::derive_counts(params, rng);

  Topology t;
  t.params = params;
  const std::uint32_t C = params.num_countries;
  const std::uint32_t L = counts.total_lsps;
  const std::uint32_t M = counts.total_merchants;

  // Nodes: central banks, LSPs, merchants, citizens; country-major per block.
  for (std::uint32_t c = 0; c < C; ++c)
    t.nodes.push_back({static_cast<NodeId>(t.nodes.size()), Tier::CentralBank, Role::Cb,
                       MerchantSize::S, c});
  for (std::uint32_t c = 0; c < C; ++c)
    for (std::uint32_t i = 0; i < counts.lsps[c]; ++i)
      t.nodes.push_back(
          {static_cast<NodeId>(t.nodes.size()), Tier::Lsp, Role::Lsp, MerchantSize::S, c});
  for (std::uint32_t c = 0; c < C; ++c)
    for (std::uint32_t i = 0; i < counts.merchants[c]; ++i)
      t.nodes.push_back(
          {static_cast<NodeId>(t.nodes.size()), Tier::EndUser, Role::Merchant, MerchantSize::S, c});
  for (std::uint32_t c = 0; c < C; ++c)
    for (std::uint32_t i = 0; i < params.country_populations[c]; ++i)
      t.nodes.push_back(
          {static_cast<NodeId>(t.nodes.size()), Tier::EndUser, Role::Citizen, MerchantSize::S, c});

  const NodeId first_lsp = C;
  const NodeId first_eu = C + L;

  auto add_channel = [&](NodeId a, NodeId b, Money cap, Money bal_a) {
    Channel ch;
    ch.id = static_cast<ChannelId>(t.channels.size());
    ch.a = a;
    ch.b = b;
    ch.capacity = cap;
    ch.balance_a = bal_a;
    ch.balance_b = cap - bal_a;
    ch.locked = 0;
    t.channels.push_back(ch);
  };
  auto add_split = [&](NodeId a, NodeId b, Money cap) { add_channel(a, b, cap, cap - cap / 2); };

  // Tier 1 clique.
  for (NodeId i = 0; i < C; ++i)
    for (NodeId j = i + 1; j < C; ++j) add_split(i, j, params.cb_clique_capacity);

  // Each LSP to its country's central bank.
  for (NodeId l = first_lsp; l < first_lsp + L; ++l)
    add_split(t.nodes[l].country, l, params.cb_lsp_capacity);

  // Watts-Strogatz mesh over LSPs in global id order: ring lattice with
  // ws_degree/2 right neighbors, then one rewiring pass in edge order.
  if (params.ws_degree > 0 && L > 1) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set;
    auto key = [](std::uint32_t u, std::uint32_t v) {
      return std::make_pair(std::min(u, v), std::max(u, v));
    };
    for (std::uint32_t i = 0; i < L; ++i) {
      for (std::uint32_t off = 1; off <= params.ws_degree / 2; ++off) {
        const std::uint32_t j = (i + off) % L;
        edges.push_back({i, j});
        edge_set.insert(key(i, j));
      }
    }
    std::vector<std::uint32_t> degree(L, params.ws_degree);
    for (auto& [u, v] : edges) {
      if (rng.real01() >= params.ws_rewire_prob) continue;
      if (degree[u] >= L - 1) continue;  // u already sees everyone
      std::uint32_t w;
      do {
        w = static_cast<std::uint32_t>(rng.below(L));
      } while (w == u || edge_set.count(key(u, w)) != 0);
      edge_set.erase(key(u, v));
      degree[v]--;
      edge_set.insert(key(u, w));
      degree[w]++;
      v = w;
    }
    for (const auto& [u, v] : edges) {
      const NodeId nu = first_lsp + std::min(u, v);
      const NodeId nv = first_lsp + std::max(u, v);
      add_split(nu, nv, params.lsp_lsp_capacity);
    }
  }

  // Attachment weights, one log-normal draw per LSP in id order.
  std::vector<std::vector<double>> country_weights(C);
  std::vector<std::vector<NodeId>> country_lsps(C);
  for (NodeId l = first_lsp; l < first_lsp + L; ++l) {
    country_lsps[t.nodes[l].country].push_back(l);
    country_weights[t.nodes[l].country].push_back(
        std::exp(rng.normal(params.lognormal_mu, params.lognormal_sigma)));
  }

  // Merchant sizes, then attachment for every end user in id order.
  const std::vector<double> size_shares{params.merchant_share_s, params.merchant_share_m,
                                        params.merchant_share_l};
  for (NodeId m = first_eu; m < first_eu + M; ++m)
    t.nodes[m].msize = static_cast<MerchantSize>(rng.weighted_pick(size_shares));

  for (NodeId u = first_eu; u < static_cast<NodeId>(t.nodes.size()); ++u) {
    const Node& n = t.nodes[u];
    const auto& lsps = country_lsps[n.country];
    const auto& weights = country_weights[n.country];
    const NodeId lsp = lsps[rng.weighted_pick(weights)];
    Money cap = params.citizen_cap;
    double frac = params.citizen_balance_fraction;
    if (n.role == Role::Merchant) {
      cap = n.msize == MerchantSize::S   ? params.merchant_cap_s
            : n.msize == MerchantSize::M ? params.merchant_cap_m
                                         : params.merchant_cap_l;
      frac = params.merchant_balance_fraction;
    }
    const Money eu_side = static_cast<Money>(std::llround(frac * static_cast<double>(cap)));
    add_channel(lsp, u, cap, cap - eu_side);
  }

  return t;
}

// Capacity available for routing between service providers: the LSP mesh plus
// the CB-LSP links. The CB clique and end-user channels do not count.
inline Money total_routing_liquidity(const Topology& t) {
  std::unordered_map<NodeId, Tier> tier;
  tier.reserve(t.nodes.size());
  for (const auto& n : t.nodes) tier[n.id] = n.tier;
  Money sum = 0;
  for (const auto& c : t.channels) {
    const Tier ta = tier.at(c.a);
    const Tier tb = tier.at(c.b);
    if (ta == Tier::EndUser || tb == Tier::EndUser) continue;
    if (ta == Tier::CentralBank && tb == Tier::CentralBank) continue;
    sum += c.capacity;
  }
  return sum;
}

// Structural audit; returns one human-readable line per violation.
inline std::vector<std::string> validate(const Topology& t) {
  std::vector<std::string> out;
  std::unordered_map<NodeId, const Node*> node_of;
  for (const auto& n : t.nodes) {
    if (!node_of.emplace(n.id, &n).second)
      out.push_back("node " + std::to_string(n.id) + ": duplicate id");
    if (n.country >= t.params.num_countries && t.params.num_countries > 0)
      out.push_back("node " + std::to_string(n.id) + ": country index out of range");
  }

  std::unordered_map<NodeId, std::uint32_t> eu_channels;
  std::unordered_map<NodeId, std::uint32_t> lsp_cb_links;
  std::set<std::pair<NodeId, NodeId>> pairs;
  std::unordered_map<NodeId, std::vector<NodeId>> adj;

  for (const auto& c : t.channels) {
    const std::string tag = "channel " + std::to_string(c.id);
    auto ia = node_of.find(c.a);
    auto ib = node_of.find(c.b);
    if (c.a == c.b) out.push_back(tag + ": self loop");
    if (ia == node_of.end() || ib == node_of.end()) {
      out.push_back(tag + ": endpoint does not exist");
      continue;
    }
    if (c.capacity < 0 || c.balance_a < 0 || c.balance_b < 0 || c.locked < 0)
      out.push_back(tag + ": negative amount");
    if (c.balance_a + c.balance_b + c.locked != c.capacity)
      out.push_back(tag + ": conservation broken (balance_a + balance_b + locked != capacity)");
    auto mm = std::minmax(c.a, c.b);
    if (!pairs.insert({mm.first, mm.second}).second)
      out.push_back(tag + ": duplicate channel between nodes");

    const Node& na = *ia->second;
    const Node& nb = *ib->second;
    if (na.tier == Tier::EndUser && nb.tier == Tier::EndUser)
      out.push_back(tag + ": EU-EU channels are not allowed");
    for (const Node* n : {&na, &nb})
      if (n->tier == Tier::EndUser) eu_channels[n->id]++;
    if (na.tier == Tier::EndUser || nb.tier == Tier::EndUser) {
      const Node& eu = na.tier == Tier::EndUser ? na : nb;
      const Node& other = na.tier == Tier::EndUser ? nb : na;
      if (other.tier != Tier::Lsp)
        out.push_back(tag + ": EU attached to a non-LSP node");
      else if (other.country != eu.country)
        out.push_back(tag + ": EU attached to an LSP of another country");
    }
    if ((na.tier == Tier::Lsp && nb.tier == Tier::CentralBank) ||
        (na.tier == Tier::CentralBank && nb.tier == Tier::Lsp)) {
      const Node& lsp = na.tier == Tier::Lsp ? na : nb;
      const Node& cb = na.tier == Tier::Lsp ? nb : na;
      lsp_cb_links[lsp.id]++;
      if (cb.country != lsp.country)
        out.push_back(tag + ": LSP linked to a foreign central bank");
    }
    adj[c.a].push_back(c.b);
    adj[c.b].push_back(c.a);
  }

  std::vector<NodeId> cbs;
  for (const auto& n : t.nodes) {
    if (n.tier == Tier::EndUser) {
      const auto it = eu_channels.find(n.id);
      const std::uint32_t deg = it == eu_channels.end() ? 0 : it->second;
      if (deg != 1)
        out.push_back("node " + std::to_string(n.id) + ": EU must have exactly one channel, has " +
                      std::to_string(deg));
    }
    if (n.tier == Tier::Lsp) {
      const auto it = lsp_cb_links.find(n.id);
      const std::uint32_t deg = it == lsp_cb_links.end() ? 0 : it->second;
      if (deg != 1)
        out.push_back("node " + std::to_string(n.id) +
                      ": LSP must have exactly one CB channel, has " + std::to_string(deg));
    }
    if (n.tier == Tier::CentralBank) cbs.push_back(n.id);
  }
  for (std::size_t i = 0; i < cbs.size(); ++i)
    for (std::size_t j = i + 1; j < cbs.size(); ++j) {
      auto mm = std::minmax(cbs[i], cbs[j]);
      if (pairs.find({mm.first, mm.second}) == pairs.end())
        out.push_back("node " + std::to_string(cbs[i]) + ": CB clique misses link to " +
                      std::to_string(cbs[j]));
    }

  if (!t.nodes.empty()) {
    std::set<NodeId> seen;
    std::queue<NodeId> q;
    q.push(t.nodes.front().id);
    seen.insert(t.nodes.front().id);
    while (!q.empty()) {
      NodeId u = q.front();
      q.pop();
      for (NodeId v : adj[u])
        if (seen.insert(v).second) q.push(v);
    }
    if (seen.size() != t.nodes.size())
      out.push_back("graph: not connected (" + std::to_string(seen.size()) + " of " +
                    std::to_string(t.nodes.size()) + " nodes reachable)");
  }
  return out;
}

}  // namespace shpcn
