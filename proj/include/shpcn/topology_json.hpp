#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "shpcn/topology.hpp"

// Topology file format: a single JSON object with "params", "nodes" and
// "channels". Node roles are "cb" / "lsp" / "citizen" / "merchant" (merchants
// carry a "size" of S/M/L); channels list both balances so files can be
// checked for conservation by eye.

namespace shpcn {

class TopologyParseError : public std::runtime_error {
 public:
  explicit TopologyParseError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline nlohmann::ordered_json params_to_json(const TopologyParams& p) {
  nlohmann::ordered_json j;
  j["num_countries"] = p.num_countries;
  j["country_populations"] = p.country_populations;
  j["citizens_per_merchant"] = p.citizens_per_merchant;
  j["citizens_per_lsp"] = p.citizens_per_lsp;
  j["cb_clique_capacity_cents"] = p.cb_clique_capacity;
  j["cb_lsp_capacity_cents"] = p.cb_lsp_capacity;
  j["lsp_lsp_capacity_cents"] = p.lsp_lsp_capacity;
  j["ws_degree"] = p.ws_degree;
  j["ws_rewire_prob"] = p.ws_rewire_prob;
  j["lognormal_mu"] = p.lognormal_mu;
  j["lognormal_sigma"] = p.lognormal_sigma;
  j["citizen_cap_cents"] = p.citizen_cap;
  j["merchant_cap_s_cents"] = p.merchant_cap_s;
  j["merchant_cap_m_cents"] = p.merchant_cap_m;
  j["merchant_cap_l_cents"] = p.merchant_cap_l;
  j["merchant_share_s"] = p.merchant_share_s;
  j["merchant_share_m"] = p.merchant_share_m;
  j["merchant_share_l"] = p.merchant_share_l;
  j["citizen_balance_fraction"] = p.citizen_balance_fraction;
  j["merchant_balance_fraction"] = p.merchant_balance_fraction;
  j["lsp_assignment"] = p.lsp_assignment == LspAssignment::PopulationProportional
                            ? "population-proportional"
                            : "lognormal-subsets";
  j["seed"] = p.seed;
  return j;
}

inline TopologyParams params_from_json(const nlohmann::json& j) {
  TopologyParams p;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("num_countries", p.num_countries);
  get("country_populations", p.country_populations);
  get("citizens_per_merchant", p.citizens_per_merchant);
  get("citizens_per_lsp", p.citizens_per_lsp);
  get("cb_clique_capacity_cents", p.cb_clique_capacity);
  get("cb_lsp_capacity_cents", p.cb_lsp_capacity);
  get("lsp_lsp_capacity_cents", p.lsp_lsp_capacity);
  get("ws_degree", p.ws_degree);
  get("ws_rewire_prob", p.ws_rewire_prob);
  get("lognormal_mu", p.lognormal_mu);
  get("lognormal_sigma", p.lognormal_sigma);
  get("citizen_cap_cents", p.citizen_cap);
  get("merchant_cap_s_cents", p.merchant_cap_s);
  get("merchant_cap_m_cents", p.merchant_cap_m);
  get("merchant_cap_l_cents", p.merchant_cap_l);
  get("merchant_share_s", p.merchant_share_s);
  get("merchant_share_m", p.merchant_share_m);
  get("merchant_share_l", p.merchant_share_l);
  get("citizen_balance_fraction", p.citizen_balance_fraction);
  get("merchant_balance_fraction", p.merchant_balance_fraction);
  if (j.contains("lsp_assignment"))
    p.lsp_assignment = j.at("lsp_assignment").get<std::string>() == "population-proportional"
                           ? LspAssignment::PopulationProportional
                           : LspAssignment::LogNormalSubsets;
  get("seed", p.seed);
  return p;
}

}  // namespace detail

inline std::string serialize_topology(const Topology& t) {
  nlohmann::ordered_json j;
  j["params"] = detail::params_to_json(t.params);
  auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : t.nodes) {
    nlohmann::ordered_json nj;
    nj["id"] = n.id;
    nj["tier"] = to_string(n.tier);
    nj["role"] = to_string(n.role);
    if (n.role == Role::Merchant) nj["size"] = to_string(n.msize);
    nj["country"] = n.country;
    nodes.push_back(std::move(nj));
  }
  auto& channels = j["channels"] = nlohmann::ordered_json::array();
  for (const auto& c : t.channels) {
    nlohmann::ordered_json cj;
    cj["id"] = c.id;
    cj["a"] = c.a;
    cj["b"] = c.b;
    cj["capacity"] = c.capacity;
    cj["balance_a"] = c.balance_a;
    cj["balance_b"] = c.balance_b;
    channels.push_back(std::move(cj));
  }
  return j.dump(1);
}

inline Topology parse_topology(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw TopologyParseError(std::string("topology: ") + e.what());
  }
  Topology t;
  try {
    if (j.contains("params")) t.params = detail::params_from_json(j.at("params"));
    if (!j.contains("nodes") || !j.at("nodes").is_array() || j.at("nodes").empty())
      throw TopologyParseError("topology: no nodes");

    std::set<NodeId> ids;
    for (const auto& nj : j.at("nodes")) {
      Node n;
      n.id = nj.at("id").get<NodeId>();
      if (!ids.insert(n.id).second)
        throw TopologyParseError("topology: node " + std::to_string(n.id) + ": duplicate id");
      const std::string tier = nj.at("tier").get<std::string>();
      if (tier == "cb")
        n.tier = Tier::CentralBank;
      else if (tier == "lsp")
        n.tier = Tier::Lsp;
      else if (tier == "eu")
        n.tier = Tier::EndUser;
      else
        throw TopologyParseError("topology: node " + std::to_string(n.id) + ": unknown tier '" +
                                 tier + "'");
      const std::string role = nj.at("role").get<std::string>();
      if (role == "cb")
        n.role = Role::Cb;
      else if (role == "lsp")
        n.role = Role::Lsp;
      else if (role == "citizen")
        n.role = Role::Citizen;
      else if (role == "merchant")
        n.role = Role::Merchant;
      else
        throw TopologyParseError("topology: node " + std::to_string(n.id) + ": unknown role '" +
                                 role + "'");
      if ((n.tier == Tier::CentralBank) != (n.role == Role::Cb) ||
          (n.tier == Tier::Lsp) != (n.role == Role::Lsp))
        throw TopologyParseError("topology: node " + std::to_string(n.id) +
                                 ": tier and role disagree");
      if (n.role == Role::Merchant && nj.contains("size")) {
        const std::string size = nj.at("size").get<std::string>();
        if (size == "S")
          n.msize = MerchantSize::S;
        else if (size == "M")
          n.msize = MerchantSize::M;
        else if (size == "L")
          n.msize = MerchantSize::L;
        else
          throw TopologyParseError("topology: node " + std::to_string(n.id) +
                                   ": unknown merchant size '" + size + "'");
      }
      n.country = nj.at("country").get<std::uint32_t>();
      t.nodes.push_back(n);
    }

    for (const auto& cj : j.value("channels", nlohmann::json::array())) {
      Channel c;
      c.id = cj.at("id").get<ChannelId>();
      c.a = cj.at("a").get<NodeId>();
      c.b = cj.at("b").get<NodeId>();
      c.capacity = cj.at("capacity").get<Money>();
      c.balance_a = cj.at("balance_a").get<Money>();
      c.balance_b = cj.at("balance_b").get<Money>();
      c.locked = 0;
      if (c.capacity < 0 || c.balance_a < 0 || c.balance_b < 0)
        throw TopologyParseError("topology: channel " + std::to_string(c.id) +
                                 ": negative amount");
      t.channels.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw TopologyParseError(std::string("topology: malformed document: ") + e.what());
  }
  return t;
}

}  // namespace shpcn
