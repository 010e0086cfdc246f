// Multi-echelon supply-chain MOMDP simulator.
//
// The network is strictly layered: suppliers -> manufacturers ->
// (distributor tiers...) -> retailers -> markets. Transport on the
// action-controlled edges takes a per-edge integer lead time; retailer ->
// market fulfilment is automatic (ship what demand asks for, bounded by
// stock, unmet demand is lost). Per period the simulator reports a
// three-component objective vector (profit, emission, service-level
// inequality); emission and inequality are minimised.
#pragma once

#include <array>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "miracl/common.hpp"
#include "miracl/rng.hpp"

namespace miracl {

struct TransportEdge {
  int from = 0;
  int to = 0;
};

enum class NodeRole { Supplier, Manufacturer, Distributor, Retailer, Market };

// Node ids are 1-based and contiguous; layers list them front (suppliers)
// to back (markets). Transport edges exclude retailer->market links, so
// edge count + manufacturer count equals the action dimensionality.
struct NetworkTopology {
  std::vector<std::vector<int>> layers;
  std::vector<TransportEdge> edges;
  std::vector<int> manufacturers;           // = layers[1]
  std::vector<int> retailers;               // = layers[size-2]
  std::vector<int> retailer_market;         // market index per retailer
  int node_count = 0;

  NodeRole role(int node) const {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (int id : layers[l]) {
        if (id != node) continue;
        if (l == 0) return NodeRole::Supplier;
        if (l == 1) return NodeRole::Manufacturer;
        if (l + 1 == layers.size()) return NodeRole::Market;
        if (l + 2 == layers.size()) return NodeRole::Retailer;
        return NodeRole::Distributor;
      }
    }
    throw std::invalid_argument("unknown node id " + std::to_string(node));
  }

  /// Nodes that carry inventory (manufacturers, distributors, retailers),
  /// in layer order. This is also the observation's inventory block order.
  std::vector<int> inventory_nodes() const {
    std::vector<int> out;
    for (std::size_t l = 1; l + 1 < layers.size(); ++l)
      out.insert(out.end(), layers[l].begin(), layers[l].end());
    return out;
  }

  std::vector<int> markets() const { return layers.back(); }

  void validate() const {
    if (layers.size() < 4) throw std::invalid_argument("topology: need at least 4 layers");
    std::map<int, std::size_t> layer_of;
    int count = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].empty()) throw std::invalid_argument("topology: empty layer");
      for (int id : layers[l]) {
        if (!layer_of.emplace(id, l).second)
          throw std::invalid_argument("topology: duplicate node id " + std::to_string(id));
        ++count;
      }
    }
    if (count != node_count) throw std::invalid_argument("topology: node_count mismatch");
    for (const auto& e : edges) {
      auto fi = layer_of.find(e.from), ti = layer_of.find(e.to);
      if (fi == layer_of.end() || ti == layer_of.end())
        throw std::invalid_argument("topology: edge references unknown node");
      if (ti->second != fi->second + 1)
        throw std::invalid_argument("topology: edge must go from layer l to l+1");
      if (ti->second + 1 == layers.size())
        throw std::invalid_argument("topology: retailer->market links are not transport edges");
    }
    if (manufacturers != layers[1]) throw std::invalid_argument("topology: manufacturers must be layer 1");
    if (retailers != layers[layers.size() - 2])
      throw std::invalid_argument("topology: retailers must be the layer before markets");
    if (retailer_market.size() != retailers.size())
      throw std::invalid_argument("topology: retailer_market size mismatch");
    for (int m : retailer_market)
      if (m < 0 || m >= static_cast<int>(layers.back().size()))
        throw std::invalid_argument("topology: retailer_market index out of range");
  }
};

struct DemandModel {
  enum class Kind { Normal, Poisson };
  Kind kind = Kind::Normal;
  double mean = 0.0;    // mu for Normal, lambda for Poisson
  double sigma = 0.0;   // Normal only
  double season_amplitude = 0.0;
  double season_period = 1.0;
};

/// A fully instantiated task: topology plus every cost, emission, lead
/// time, price, demand model and capacity. Values are immutable once built.
struct ScTask {
  std::string name;
  NetworkTopology topology;
  // Per node id (vectors sized node_count + 1; index 0 unused).
  Vec inv_cost, inv_emission, initial_inventory;
  // Per manufacturer, parallel to topology.manufacturers.
  Vec mfg_cost, mfg_yield, mfg_emission;
  // Per edge, parallel to topology.edges.
  Vec transport_cost, transport_emission;
  std::vector<int> lead_time;
  // Per market, parallel to topology.markets().
  Vec market_price;
  std::vector<DemandModel> demand;

  int horizon = 100;
  double transport_cap = 200.0;
  double mfg_cap = 400.0;
  int lead_max = 3;
  double emission_scale = 1.0;  // observation scale, from random rollouts at build
  std::uint64_t rng_seed = 0;

  int action_dim() const {
    return static_cast<int>(topology.edges.size() + topology.manufacturers.size());
  }
  int n_markets() const { return static_cast<int>(market_price.size()); }

  // Observation layout: inventories (one per inventory node, layer order),
  // pipeline slots (lead_max per edge, edge order), then CE, AF, t/T.
  int obs_dim() const {
    return static_cast<int>(topology.inventory_nodes().size()) +
           static_cast<int>(topology.edges.size()) * lead_max + 3;
  }

  void validate() const {
    topology.validate();
    auto need = [&](const Vec& v, std::size_t n, const char* what) {
      if (v.size() != n) throw std::invalid_argument(std::string("task: bad size for ") + what);
    };
    const std::size_t per_node = static_cast<std::size_t>(topology.node_count) + 1;
    need(inv_cost, per_node, "inv_cost");
    need(inv_emission, per_node, "inv_emission");
    need(initial_inventory, per_node, "initial_inventory");
    need(mfg_cost, topology.manufacturers.size(), "mfg_cost");
    need(mfg_yield, topology.manufacturers.size(), "mfg_yield");
    need(mfg_emission, topology.manufacturers.size(), "mfg_emission");
    need(transport_cost, topology.edges.size(), "transport_cost");
    need(transport_emission, topology.edges.size(), "transport_emission");
    if (lead_time.size() != topology.edges.size()) throw std::invalid_argument("task: bad lead_time size");
    need(market_price, topology.markets().size(), "market_price");
    if (demand.size() != topology.markets().size()) throw std::invalid_argument("task: bad demand size");
    for (double c : inv_cost) if (c < 0) throw std::invalid_argument("task: negative inventory cost");
    for (double e : inv_emission) if (e < 0) throw std::invalid_argument("task: negative inventory emission");
    for (double v : mfg_yield) if (v <= 0) throw std::invalid_argument("task: yield must be positive");
    for (int l : lead_time)
      if (l < 1 || l > lead_max) throw std::invalid_argument("task: lead time out of [1, lead_max]");
    if (transport_cap <= 0 || mfg_cap <= 0 || horizon <= 0)
      throw std::invalid_argument("task: capacities and horizon must be positive");
  }
};

struct ObjectiveVector {
  double profit = 0.0;
  double emission = 0.0;
  double inequality = 0.0;

  /// Maximisation orientation: minimised components sign-flipped.
  Vec oriented() const { return {profit, -emission, -inequality}; }

  ObjectiveVector& operator+=(const ObjectiveVector& o) {
    profit += o.profit;
    emission += o.emission;
    inequality += o.inequality;
    return *this;
  }
};

struct ActionVector {
  Vec transport;    // per edge, units, in [0, transport_cap]
  Vec manufacture;  // per manufacturer, units, in [0, mfg_cap]

  /// Decodes a flat unit-cube action (edges first, then manufacturers).
  static ActionVector from_unit(const ScTask& task, std::span<const double> unit) {
    if (unit.size() != static_cast<std::size_t>(task.action_dim()))
      throw std::invalid_argument("action: wrong dimension");
    ActionVector a;
    const std::size_t ne = task.topology.edges.size();
    a.transport.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) a.transport[e] = clamp01(unit[e]) * task.transport_cap;
    a.manufacture.resize(task.topology.manufacturers.size());
    for (std::size_t k = 0; k < a.manufacture.size(); ++k)
      a.manufacture[k] = clamp01(unit[ne + k]) * task.mfg_cap;
    return a;
  }
};

struct ScState {
  int t = 0;
  Vec inventory;                  // per node id; zero for suppliers/markets
  std::vector<Vec> pipeline;      // per edge: lead_max slots; slot r arrives after r+1 steps
  double cumulative_emission = 0.0;
  double avg_inequality = 0.0;
  Vec cum_demand, cum_fulfilled;  // per market
  RngStream rng{0};
};

/// Per-step bookkeeping for traces and invariant checks. The inventory of
/// node j after a step equals, in this exact evaluation order,
///   ((I_prev - departures[j]) + manufactured[j] + arrivals[j]) - market_shipment[j].
struct StepInfo {
  Vec flows;              // per edge, dispatched after rationing
  Vec departures;         // per node id
  Vec arrivals;           // per node id
  Vec manufactured;       // per node id
  Vec market_shipment;    // per node id (retailers only)
  Vec rationing_factor;   // per node id, 1 when no rationing applied
  Vec demand;             // per market, realised this period
  Vec fulfilled;          // per market
  Vec service_level;      // per retailer, cumulative
};

/// Demand for `market` (0-based) in period t (1-based): the base
/// distribution with its mean scaled by 1 + a*sin(2*pi*t/P), negative
/// draws clipped, rounded to the nearest integer.
inline std::int64_t sample_demand(const ScTask& task, int t, int market, RngStream& rng) {
  if (t < 1 || t > task.horizon) throw std::invalid_argument("sample_demand: period out of range");
  const DemandModel& dm = task.demand.at(static_cast<std::size_t>(market));
  const double season = 1.0 + dm.season_amplitude *
      std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / dm.season_period);
  const double mean = dm.mean * season;
  if (dm.kind == DemandModel::Kind::Poisson) return rng.poisson(mean);
  const double draw = rng.normal(mean, dm.sigma);
  return static_cast<std::int64_t>(std::llround(std::max(0.0, draw)));
}

inline ScState reset(const ScTask& task, std::uint64_t episode_seed) {
  ScState s;
  s.t = 0;
  s.inventory.assign(static_cast<std::size_t>(task.topology.node_count) + 1, 0.0);
  for (int j : task.topology.inventory_nodes()) s.inventory[j] = task.initial_inventory[j];
  s.pipeline.assign(task.topology.edges.size(), Vec(static_cast<std::size_t>(task.lead_max), 0.0));
  s.cum_demand.assign(task.market_price.size(), 0.0);
  s.cum_fulfilled.assign(task.market_price.size(), 0.0);
  s.rng = RngStream(derive_seed(episode_seed, {0x5cdef0ull, task.rng_seed}));
  return s;
}

/// Everything the per-period objective functions need.
struct TransitionContext {
  std::span<const double> flows;              // per edge, dispatched this period
  std::span<const double> manufactured_qty;   // per manufacturer (task order)
  std::span<const double> retailer_arrivals;  // per retailer, units arrived this period
  std::span<const double> end_inventory;      // per node id
  std::span<const double> service_level;      // per retailer
};

/// Profit / emission / inequality for one period. Revenue accrues on
/// arrivals at retailers, priced at the retailer's market price; transport
/// cost and emission are charged at dispatch, scaled by the edge lead time.
inline ObjectiveVector compute_objectives(const ScTask& task, const TransitionContext& ctx) {
  ObjectiveVector out;
  const auto& topo = task.topology;

  double revenue = 0.0;
  for (std::size_t y = 0; y < topo.retailers.size(); ++y)
    revenue += ctx.retailer_arrivals[y] * task.market_price[topo.retailer_market[y]];

  double mfg_cost = 0.0, mfg_emission = 0.0;
  for (std::size_t k = 0; k < topo.manufacturers.size(); ++k) {
    mfg_cost += ctx.manufactured_qty[k] * task.mfg_cost[k] / task.mfg_yield[k];
    mfg_emission += ctx.manufactured_qty[k] * task.mfg_emission[k];
  }

  double transport_cost = 0.0, transport_emission = 0.0;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const double ql = ctx.flows[e] * static_cast<double>(task.lead_time[e]);
    transport_cost += ql * task.transport_cost[e];
    transport_emission += ql * task.transport_emission[e];
  }

  double inventory_cost = 0.0, inventory_emission = 0.0;
  for (int j : topo.inventory_nodes()) {
    inventory_cost += ctx.end_inventory[j] * task.inv_cost[j];
    inventory_emission += ctx.end_inventory[j] * task.inv_emission[j];
  }

  out.profit = revenue - mfg_cost - transport_cost - inventory_cost;
  out.emission = inventory_emission + mfg_emission + transport_emission;

  double ineq = 0.0;
  const std::size_t nr = topo.retailers.size();
  for (std::size_t y = 0; y < nr; ++y)
    for (std::size_t z = 0; z < nr; ++z)
      if (z != y) ineq += std::abs(ctx.service_level[y] - ctx.service_level[z]);
  out.inequality = 0.5 * ineq;
  return out;
}

struct StepResult {
  ScState state;
  ObjectiveVector objectives;
  StepInfo info;
};

/// Advances one period. Order: proportional rationing of transport
/// requests against start-of-period stock (suppliers exempt), dispatch
/// into the pipeline, pipeline advance with arrivals, same-period
/// manufacturing credit, retailer->market fulfilment, objectives.
inline StepResult step(const ScTask& task, const ScState& state, const ActionVector& action) {
  const auto& topo = task.topology;
  if (state.t >= task.horizon) throw std::invalid_argument("step: episode already finished");
  if (action.transport.size() != topo.edges.size() ||
      action.manufacture.size() != topo.manufacturers.size())
    throw std::invalid_argument("step: action dimension mismatch");
  for (double q : action.transport)
    if (!(q >= 0.0 && q <= task.transport_cap)) throw std::invalid_argument("step: transport quantity out of bounds");
  for (double q : action.manufacture)
    if (!(q >= 0.0 && q <= task.mfg_cap)) throw std::invalid_argument("step: manufacture quantity out of bounds");

  StepResult r;
  r.state = state;
  ScState& s = r.state;
  StepInfo& info = r.info;
  const std::size_t per_node = static_cast<std::size_t>(topo.node_count) + 1;
  info.flows.assign(topo.edges.size(), 0.0);
  info.departures.assign(per_node, 0.0);
  info.arrivals.assign(per_node, 0.0);
  info.manufactured.assign(per_node, 0.0);
  info.market_shipment.assign(per_node, 0.0);
  info.rationing_factor.assign(per_node, 1.0);
  info.demand.assign(task.market_price.size(), 0.0);
  info.fulfilled.assign(task.market_price.size(), 0.0);

  // Outgoing action edges per node, in edge order.
  std::vector<std::vector<std::size_t>> outgoing(per_node);
  for (std::size_t e = 0; e < topo.edges.size(); ++e)
    outgoing[topo.edges[e].from].push_back(e);

  // 1. Feasibility repair. Requested outflow above available stock is
  // scaled down proportionally; the running-remainder form keeps the
  // dispatched total <= inventory exactly in floating point.
  for (int j = 1; j <= topo.node_count; ++j) {
    if (outgoing[j].empty()) continue;
    if (topo.role(j) == NodeRole::Supplier) {
      for (std::size_t e : outgoing[j]) {
        info.flows[e] = action.transport[e];
        info.departures[j] += action.transport[e];
      }
      continue;
    }
    double requested = 0.0;
    for (std::size_t e : outgoing[j]) requested += action.transport[e];
    const double stock = s.inventory[j];
    if (requested <= stock) {
      for (std::size_t e : outgoing[j]) info.flows[e] = action.transport[e];
      info.departures[j] = requested;
    } else {
      const double factor = stock / requested;
      info.rationing_factor[j] = factor;
      double remaining = stock;
      for (std::size_t e : outgoing[j]) {
        const double f = std::min(action.transport[e] * factor, remaining);
        info.flows[e] = f;
        remaining -= f;
      }
      info.departures[j] = stock - remaining;
    }
  }

  // 2. Pipeline advance: slot 0 arrives now, everything else moves up one,
  // and this period's dispatches enter at slot lead-1 (arriving t + lead).
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    Vec& pipe = s.pipeline[e];
    info.arrivals[topo.edges[e].to] += pipe[0];
    for (int rlead = 0; rlead + 1 < task.lead_max; ++rlead) pipe[rlead] = pipe[rlead + 1];
    pipe[task.lead_max - 1] = 0.0;
    pipe[task.lead_time[e] - 1] += info.flows[e];
  }

  // 3. Manufacturing output joins the manufacturer's stock this period.
  for (std::size_t k = 0; k < topo.manufacturers.size(); ++k)
    info.manufactured[topo.manufacturers[k]] = action.manufacture[k];

  for (int j : topo.inventory_nodes())
    s.inventory[j] = ((s.inventory[j] - info.departures[j]) + info.manufactured[j]) + info.arrivals[j];

  // 4. Market fulfilment; unmet demand is lost.
  const int period = state.t + 1;
  for (std::size_t m = 0; m < task.market_price.size(); ++m) {
    const double demand = static_cast<double>(sample_demand(task, period, static_cast<int>(m), s.rng));
    info.demand[m] = demand;
    double unmet = demand;
    for (std::size_t y = 0; y < topo.retailers.size(); ++y) {
      if (topo.retailer_market[y] != static_cast<int>(m)) continue;
      const int node = topo.retailers[y];
      const double ship = std::min(s.inventory[node], unmet);
      info.market_shipment[node] = ship;
      s.inventory[node] -= ship;
      unmet -= ship;
    }
    info.fulfilled[m] = demand - unmet;
    s.cum_demand[m] += demand;
    s.cum_fulfilled[m] += info.fulfilled[m];
  }

  // 5. Cumulative service level per retailer; 1 while no demand has arrived.
  info.service_level.resize(topo.retailers.size());
  for (std::size_t y = 0; y < topo.retailers.size(); ++y) {
    const int m = topo.retailer_market[y];
    info.service_level[y] = s.cum_demand[m] > 0.0 ? s.cum_fulfilled[m] / s.cum_demand[m] : 1.0;
  }

  Vec mfg_qty(topo.manufacturers.size());
  Vec retail_arr(topo.retailers.size());
  for (std::size_t k = 0; k < topo.manufacturers.size(); ++k)
    mfg_qty[k] = info.manufactured[topo.manufacturers[k]];
  for (std::size_t y = 0; y < topo.retailers.size(); ++y)
    retail_arr[y] = info.arrivals[topo.retailers[y]];
  r.objectives = compute_objectives(
      task, TransitionContext{info.flows, mfg_qty, retail_arr, s.inventory, info.service_level});

  s.t = period;
  s.cumulative_emission += r.objectives.emission;
  s.avg_inequality = (s.avg_inequality * (period - 1) + r.objectives.inequality) / period;
  return r;
}

/// Fixed-length observation; see ScTask::obs_dim for the layout.
inline void observe(const ScTask& task, const ScState& state, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(task.obs_dim()))
    throw std::invalid_argument("observe: output size mismatch");
  std::size_t i = 0;
  for (int j : task.topology.inventory_nodes()) {
    const double scale = std::max(2.0 * task.initial_inventory[j], 1.0);
    out[i++] = state.inventory[j] / scale;
  }
  for (const Vec& pipe : state.pipeline)
    for (double q : pipe) out[i++] = q / task.transport_cap;
  out[i++] = state.cumulative_emission / task.emission_scale;
  out[i++] = state.avg_inequality;
  out[i++] = static_cast<double>(state.t) / static_cast<double>(task.horizon);
}

inline Vec observe(const ScTask& task, const ScState& state) {
  Vec out(static_cast<std::size_t>(task.obs_dim()));
  observe(task, state, out);
  return out;
}

}  // namespace miracl
