// Hand-built 4-node micro chain (supplier -> manufacturer -> retailer ->
// market) used for hand-computed episode oracles and the deterministic
// trade-off toy. All parameters default to zero so a test states exactly
// the terms it exercises.
#pragma once

#include "miracl/supply_chain.hpp"

namespace support {

struct MicroChainParams {
  double price = 20.0;
  double mfg_cost = 2.0, mfg_yield = 1.0, mfg_emission = 0.0;
  double cost_sm = 0.0, emission_sm = 0.0;  // supplier -> manufacturer edge
  double cost_mr = 0.0, emission_mr = 0.0;  // manufacturer -> retailer edge
  int lead_sm = 1, lead_mr = 1;
  double inv_cost_m = 0.0, inv_cost_r = 0.0;
  double inv_emission_m = 0.0, inv_emission_r = 0.0;
  double init_inv_m = 0.0, init_inv_r = 0.0;
  miracl::DemandModel::Kind demand_kind = miracl::DemandModel::Kind::Normal;
  double demand_mean = 0.0, demand_sigma = 0.0;
  double season_amplitude = 0.0;
  int horizon = 3;
  double transport_cap = 200.0, mfg_cap = 400.0;
};

inline miracl::ScTask make_micro_chain(const MicroChainParams& p) {
  miracl::ScTask t;
  t.name = "micro-chain";
  t.topology.layers = {{1}, {2}, {3}, {4}};
  t.topology.edges = {{1, 2}, {2, 3}};
  t.topology.manufacturers = {2};
  t.topology.retailers = {3};
  t.topology.retailer_market = {0};
  t.topology.node_count = 4;
  t.inv_cost = {0, 0, p.inv_cost_m, p.inv_cost_r, 0};
  t.inv_emission = {0, 0, p.inv_emission_m, p.inv_emission_r, 0};
  t.initial_inventory = {0, 0, p.init_inv_m, p.init_inv_r, 0};
  t.mfg_cost = {p.mfg_cost};
  t.mfg_yield = {p.mfg_yield};
  t.mfg_emission = {p.mfg_emission};
  t.transport_cost = {p.cost_sm, p.cost_mr};
  t.transport_emission = {p.emission_sm, p.emission_mr};
  t.lead_time = {p.lead_sm, p.lead_mr};
  t.market_price = {p.price};
  miracl::DemandModel dm;
  dm.kind = p.demand_kind;
  dm.mean = p.demand_mean;
  dm.sigma = p.demand_sigma;
  dm.season_amplitude = p.season_amplitude;
  dm.season_period = static_cast<double>(p.horizon);
  t.demand = {dm};
  t.horizon = p.horizon;
  t.transport_cap = p.transport_cap;
  t.mfg_cap = p.mfg_cap;
  t.emission_scale = 1.0;
  t.validate();
  return t;
}

/// Zero action of the right shape for a micro chain.
inline miracl::ActionVector zero_action(const miracl::ScTask& t) {
  miracl::ActionVector a;
  a.transport.assign(t.topology.edges.size(), 0.0);
  a.manufacture.assign(t.topology.manufacturers.size(), 0.0);
  return a;
}

}  // namespace support
