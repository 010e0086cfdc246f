// Canonical task instances (simple / moderate / complex), randomised task
// generation for meta-training, and the JSON task-file format.
#pragma once

#include <json.hpp>

#include <optional>
#include <string>

#include "miracl/supply_chain.hpp"

namespace miracl {

enum class Complexity { Simple, Moderate, Complex };

inline Complexity complexity_from_string(const std::string& s) {
  if (s == "simple") return Complexity::Simple;
  if (s == "moderate") return Complexity::Moderate;
  if (s == "complex") return Complexity::Complex;
  throw std::invalid_argument("unknown complexity '" + s + "' (expected simple|moderate|complex)");
}

inline std::string to_string(Complexity c) {
  switch (c) {
    case Complexity::Simple: return "simple";
    case Complexity::Moderate: return "moderate";
    default: return "complex";
  }
}

struct BuildOptions {
  // Random-rollout episodes used to calibrate the observation's emission
  // scale at build time.
  int emission_scale_episodes = 100;
  double season_amplitude = 0.2;
};

namespace detail {

struct NodeParam {
  int id;
  double init_inv, inv_cost, inv_emission;
  double mfg_cost = -1.0, mfg_yield = 0.0, mfg_emission = 0.0;  // mfg_cost < 0: not a manufacturer
};

struct EdgeParam {
  int from, to;
  double cost, emission;
};

struct MarketParam {
  double price;
  DemandModel::Kind kind;
  double mean, sigma;
};

inline ScTask assemble(const std::string& name, std::vector<std::vector<int>> layers,
                       const std::vector<NodeParam>& nodes, const std::vector<EdgeParam>& edges,
                       const std::vector<MarketParam>& markets, const BuildOptions& opt) {
  ScTask t;
  t.name = name;
  t.topology.layers = std::move(layers);
  t.topology.manufacturers = t.topology.layers[1];
  t.topology.retailers = t.topology.layers[t.topology.layers.size() - 2];
  int count = 0;
  for (const auto& l : t.topology.layers) count += static_cast<int>(l.size());
  t.topology.node_count = count;
  for (const auto& e : edges) t.topology.edges.push_back({e.from, e.to});
  // Canonical instances pair retailer i with market i.
  t.topology.retailer_market.resize(t.topology.retailers.size());
  for (std::size_t i = 0; i < t.topology.retailers.size(); ++i)
    t.topology.retailer_market[i] = static_cast<int>(i);

  const std::size_t per_node = static_cast<std::size_t>(count) + 1;
  t.inv_cost.assign(per_node, 0.0);
  t.inv_emission.assign(per_node, 0.0);
  t.initial_inventory.assign(per_node, 0.0);
  t.mfg_cost.assign(t.topology.manufacturers.size(), 0.0);
  t.mfg_yield.assign(t.topology.manufacturers.size(), 1.0);
  t.mfg_emission.assign(t.topology.manufacturers.size(), 0.0);
  for (const auto& n : nodes) {
    t.initial_inventory[n.id] = n.init_inv;
    t.inv_cost[n.id] = n.inv_cost;
    t.inv_emission[n.id] = n.inv_emission;
    if (n.mfg_cost >= 0.0) {
      for (std::size_t k = 0; k < t.topology.manufacturers.size(); ++k) {
        if (t.topology.manufacturers[k] != n.id) continue;
        t.mfg_cost[k] = n.mfg_cost;
        t.mfg_yield[k] = n.mfg_yield;
        t.mfg_emission[k] = n.mfg_emission;
      }
    }
  }
  for (const auto& e : edges) {
    t.transport_cost.push_back(e.cost);
    t.transport_emission.push_back(e.emission);
  }
  // Canonical lead times cycle through {1,2,3}; perturbation redraws them.
  t.lead_time.resize(t.topology.edges.size());
  for (std::size_t e = 0; e < t.lead_time.size(); ++e) t.lead_time[e] = 1 + static_cast<int>(e % 3);
  for (const auto& m : markets) {
    t.market_price.push_back(m.price);
    DemandModel dm;
    dm.kind = m.kind;
    dm.mean = m.mean;
    dm.sigma = m.sigma;
    dm.season_amplitude = opt.season_amplitude;
    dm.season_period = static_cast<double>(t.horizon);
    t.demand.push_back(dm);
  }
  return t;
}

inline ScTask canonical(Complexity c, const BuildOptions& opt) {
  using K = DemandModel::Kind;
  switch (c) {
    case Complexity::Simple:
      return assemble(
          "simple", {{1}, {2, 3}, {4, 5}, {6, 7}},
          {{2, 380, 0.11, 0.0002, 2.0, 1.0, 5.0126},
           {3, 350, 0.13, 0.0002, 2.2, 1.0, 4.5754},
           {4, 400, 0.12, 0.0002},
           {5, 80, 0.15, 0.0002}},
          {{1, 2, 0.22, 0.1258}, {1, 3, 0.69, 0.3947},
           {2, 4, 1.055, 0.6035}, {2, 5, 0.43, 0.246},
           {3, 4, 0.485, 0.2774}, {3, 5, 0.75, 0.429}},
          {{20.0, K::Normal, 150, 60}, {20.0, K::Normal, 100, 40}}, opt);
    case Complexity::Moderate:
      return assemble(
          "moderate", {{1, 2}, {3, 4, 5}, {6, 7}, {8, 9, 10}, {11, 12, 13}},
          {{3, 380, 0.11, 0.0002, 2.0, 1.0, 5.0126},
           {4, 350, 0.13, 0.0002, 2.2, 1.0, 4.5754},
           {5, 400, 0.12, 0.0002, 2.3, 1.0, 5.4491},
           {6, 80, 0.15, 0.0002},
           {7, 110, 0.20, 0.0002},
           {8, 100, 0.25, 0.0002},
           {9, 80, 0.30, 0.0002},
           {10, 120, 0.20, 0.0002}},
          {{1, 3, 0.22, 0.1258}, {1, 4, 0.69, 0.3947}, {1, 5, 0.565, 0.3232},
           {2, 3, 1.055, 0.6035}, {2, 4, 0.65, 0.3718}, {2, 5, 0.63, 0.3604},
           {3, 6, 0.075, 0.0429}, {3, 7, 0.43, 0.246},
           {4, 6, 0.63, 0.3604}, {4, 7, 0.23, 0.1316},
           {5, 6, 0.495, 0.2831}, {5, 7, 0.075, 0.0429},
           {6, 8, 1.095, 0.6263}, {6, 9, 0.625, 0.3575}, {6, 10, 0.95, 0.5434},
           {7, 8, 1.64, 0.9381}, {7, 9, 1.16, 0.6635}, {7, 10, 0.58, 0.3318}},
          {{20.0, K::Normal, 150, 60}, {21.0, K::Normal, 100, 40}, {20.5, K::Poisson, 200, 0}},
          opt);
    case Complexity::Complex:
    default:
      return assemble(
          "complex",
          {{1, 2, 3}, {4, 5, 6, 7, 8}, {9, 10, 11}, {12, 13, 14}, {15, 16, 17, 18, 19},
           {20, 21, 22, 23, 24}},
          {{4, 155, 0.23, 0.0002, 2.0, 1.0, 5.0126},
           {5, 267, 0.35, 0.0002, 2.2, 1.0, 4.5754},
           {6, 342, 0.22, 0.0002, 2.1, 1.0, 5.4491},
           {7, 211, 0.11, 0.0002, 2.0, 1.0, 6.1232},
           {8, 162, 0.29, 0.0002, 2.3, 1.0, 5.5157},
           {9, 195, 0.37, 0.0002},
           {10, 333, 0.11, 0.0002},
           {11, 96, 0.36, 0.0002},
           {12, 285, 0.33, 0.0002},
           {13, 68, 0.26, 0.0002},
           {14, 379, 0.30, 0.0002},
           {15, 344, 0.17, 0.0002},
           {16, 66, 0.29, 0.0002},
           {17, 356, 0.27, 0.0002},
           {18, 382, 0.23, 0.0002},
           {19, 362, 0.37, 0.0002}},
          {{1, 4, 0.535, 0.306}, {1, 5, 0.265, 0.1516}, {1, 6, 1.845, 1.0553},
           {1, 7, 1.6, 0.9152}, {1, 8, 1.44, 0.8237},
           {2, 4, 0.36, 0.2059}, {2, 5, 0.295, 0.1687}, {2, 6, 1.235, 0.7064},
           {2, 7, 0.625, 0.3575}, {2, 8, 1.855, 1.0611},
           {3, 4, 0.6, 0.3432}, {3, 5, 0.175, 0.1001}, {3, 6, 0.745, 0.4261},
           {3, 7, 1.33, 0.7608}, {3, 8, 0.17, 0.0972},
           {4, 9, 1.99, 1.1383}, {4, 10, 0.34, 0.1945}, {4, 11, 0.81, 0.4633},
           {5, 9, 1.515, 0.8666}, {5, 10, 0.66, 0.3775}, {5, 11, 0.645, 0.3689},
           {6, 9, 1.695, 0.9695}, {6, 10, 1.58, 0.9038}, {6, 11, 0.815, 0.4662},
           {7, 9, 1.615, 0.9238}, {7, 10, 1.26, 0.7207}, {7, 11, 0.675, 0.3861},
           {8, 9, 1.03, 0.5892}, {8, 10, 1.09, 0.6235}, {8, 11, 1.63, 0.9324},
           {9, 12, 1.965, 1.124}, {9, 13, 1.925, 1.1011}, {9, 14, 1.62, 0.9266},
           {10, 12, 1.49, 0.8523}, {10, 13, 1.96, 1.1211}, {10, 14, 0.635, 0.3632},
           {11, 12, 1.87, 1.0696}, {11, 13, 0.2, 0.1144}, {11, 14, 1.855, 1.0611},
           {12, 15, 1.945, 1.1125}, {12, 16, 0.965, 0.552}, {12, 17, 1.905, 1.0897},
           {12, 18, 0.9, 0.5148}, {12, 19, 0.69, 0.3947},
           {13, 15, 0.805, 0.4605}, {13, 16, 1.065, 0.6092}, {13, 17, 1.84, 1.0525},
           {13, 18, 0.83, 0.4748}, {13, 19, 1.885, 1.0782},
           {14, 15, 1.66, 0.9495}, {14, 16, 1.51, 0.8637}, {14, 17, 0.59, 0.3375},
           {14, 18, 0.4, 0.2288}, {14, 19, 1.395, 0.7979}},
          {{100.0, K::Normal, 150, 60},
           {101.0, K::Normal, 100, 40},
           {105.0, K::Poisson, 200, 0},
           {103.0, K::Poisson, 100, 0},
           {104.0, K::Poisson, 150, 0}},
          opt);
  }
}

}  // namespace detail

/// One uniform-random-action episode; returns the episode-total objectives.
inline ObjectiveVector random_rollout(const ScTask& task, std::uint64_t episode_seed) {
  ScState s = reset(task, episode_seed);
  RngStream arng(derive_seed(episode_seed, {0xac7100ull, task.rng_seed}));
  ObjectiveVector total;
  ActionVector a;
  a.transport.resize(task.topology.edges.size());
  a.manufacture.resize(task.topology.manufacturers.size());
  for (int t = 0; t < task.horizon; ++t) {
    for (double& q : a.transport) q = arng.uniform(0.0, task.transport_cap);
    for (double& q : a.manufacture) q = arng.uniform(0.0, task.mfg_cap);
    StepResult r = step(task, s, a);
    s = std::move(r.state);
    total += r.objectives;
  }
  return total;
}

inline double calibrate_emission_scale(const ScTask& task, int episodes, std::uint64_t seed) {
  double sum = 0.0;
  for (int i = 0; i < episodes; ++i)
    sum += random_rollout(task, derive_seed(seed, {0xe5ca1eull, static_cast<std::uint64_t>(i)})).emission;
  return std::max(sum / std::max(episodes, 1), 1e-9);
}

/// Builds one of the three canonical instances. With perturb set, every
/// cost, price and demand mean/sigma/lambda is scaled by an independent
/// uniform factor in [0.90, 1.10] and per-edge lead times are redrawn
/// uniformly from {1,2,3}. Deterministic given the seed.
inline ScTask build_task(Complexity complexity, bool perturb, std::uint64_t rng_seed,
                         const BuildOptions& opt = {}) {
  ScTask t = detail::canonical(complexity, opt);
  t.rng_seed = rng_seed;
  if (perturb) {
    RngStream rng(derive_seed(rng_seed, {0x7a5bull}));
    auto jitter = [&](double v) { return v * rng.uniform(0.90, 1.10); };
    for (int j : t.topology.inventory_nodes()) t.inv_cost[j] = jitter(t.inv_cost[j]);
    for (double& c : t.mfg_cost) c = jitter(c);
    for (double& c : t.transport_cost) c = jitter(c);
    for (std::size_t m = 0; m < t.market_price.size(); ++m) {
      t.market_price[m] = jitter(t.market_price[m]);
      t.demand[m].mean = jitter(t.demand[m].mean);
      if (t.demand[m].kind == DemandModel::Kind::Normal) t.demand[m].sigma = jitter(t.demand[m].sigma);
    }
    for (int& l : t.lead_time) l = static_cast<int>(rng.uniform_int(1, 3));
    t.name += "-perturbed";
  }
  t.validate();
  t.emission_scale =
      calibrate_emission_scale(t, opt.emission_scale_episodes, derive_seed(rng_seed, {0xe5ccull}));
  return t;
}

inline ScTask build_task(const std::string& complexity, bool perturb, std::uint64_t rng_seed,
                         const BuildOptions& opt = {}) {
  return build_task(complexity_from_string(complexity), perturb, rng_seed, opt);
}

// ---- Task file format (JSON) ----

inline nlohmann::json task_to_json(const ScTask& t) {
  nlohmann::json j;
  j["name"] = t.name;
  j["seed"] = t.rng_seed;
  j["horizon"] = t.horizon;
  j["transport_cap"] = t.transport_cap;
  j["mfg_cap"] = t.mfg_cap;
  j["lead_max"] = t.lead_max;
  j["emission_scale"] = t.emission_scale;
  j["layers"] = t.topology.layers;
  nlohmann::json nodes = nlohmann::json::array();
  for (int id : t.topology.inventory_nodes()) {
    nlohmann::json n;
    n["id"] = id;
    n["initial_inventory"] = t.initial_inventory[id];
    n["inventory_cost"] = t.inv_cost[id];
    n["inventory_emission"] = t.inv_emission[id];
    for (std::size_t k = 0; k < t.topology.manufacturers.size(); ++k) {
      if (t.topology.manufacturers[k] != id) continue;
      n["mfg_cost"] = t.mfg_cost[k];
      n["mfg_yield"] = t.mfg_yield[k];
      n["mfg_emission"] = t.mfg_emission[k];
    }
    nodes.push_back(n);
  }
  j["nodes"] = nodes;
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t e = 0; e < t.topology.edges.size(); ++e) {
    edges.push_back({{"from", t.topology.edges[e].from},
                     {"to", t.topology.edges[e].to},
                     {"cost", t.transport_cost[e]},
                     {"emission", t.transport_emission[e]},
                     {"lead_time", t.lead_time[e]}});
  }
  j["edges"] = edges;
  nlohmann::json markets = nlohmann::json::array();
  const auto market_ids = t.topology.markets();
  for (std::size_t m = 0; m < t.market_price.size(); ++m) {
    int retailer = -1;
    for (std::size_t y = 0; y < t.topology.retailers.size(); ++y)
      if (t.topology.retailer_market[y] == static_cast<int>(m)) retailer = t.topology.retailers[y];
    const DemandModel& dm = t.demand[m];
    markets.push_back(
        {{"id", market_ids[m]},
         {"retailer", retailer},
         {"price", t.market_price[m]},
         {"demand",
          {{"kind", dm.kind == DemandModel::Kind::Normal ? "normal" : "poisson"},
           {"mean", dm.mean},
           {"sigma", dm.sigma},
           {"season_amplitude", dm.season_amplitude},
           {"season_period", dm.season_period}}}});
  }
  j["markets"] = markets;
  return j;
}

inline ScTask task_from_json(const nlohmann::json& j) {
  ScTask t;
  t.name = j.at("name").get<std::string>();
  t.rng_seed = j.at("seed").get<std::uint64_t>();
  t.horizon = j.at("horizon").get<int>();
  t.transport_cap = j.at("transport_cap").get<double>();
  t.mfg_cap = j.at("mfg_cap").get<double>();
  t.lead_max = j.value("lead_max", 3);
  t.topology.layers = j.at("layers").get<std::vector<std::vector<int>>>();
  t.topology.manufacturers = t.topology.layers.at(1);
  t.topology.retailers = t.topology.layers.at(t.topology.layers.size() - 2);
  int count = 0;
  for (const auto& l : t.topology.layers) count += static_cast<int>(l.size());
  t.topology.node_count = count;

  const std::size_t per_node = static_cast<std::size_t>(count) + 1;
  t.inv_cost.assign(per_node, 0.0);
  t.inv_emission.assign(per_node, 0.0);
  t.initial_inventory.assign(per_node, 0.0);
  t.mfg_cost.assign(t.topology.manufacturers.size(), 0.0);
  t.mfg_yield.assign(t.topology.manufacturers.size(), 1.0);
  t.mfg_emission.assign(t.topology.manufacturers.size(), 0.0);
  for (const auto& n : j.at("nodes")) {
    const int id = n.at("id").get<int>();
    t.initial_inventory.at(id) = n.at("initial_inventory").get<double>();
    t.inv_cost.at(id) = n.at("inventory_cost").get<double>();
    t.inv_emission.at(id) = n.at("inventory_emission").get<double>();
    if (n.contains("mfg_cost")) {
      for (std::size_t k = 0; k < t.topology.manufacturers.size(); ++k) {
        if (t.topology.manufacturers[k] != id) continue;
        t.mfg_cost[k] = n.at("mfg_cost").get<double>();
        t.mfg_yield[k] = n.at("mfg_yield").get<double>();
        t.mfg_emission[k] = n.at("mfg_emission").get<double>();
      }
    }
  }
  for (const auto& e : j.at("edges")) {
    t.topology.edges.push_back({e.at("from").get<int>(), e.at("to").get<int>()});
    t.transport_cost.push_back(e.at("cost").get<double>());
    t.transport_emission.push_back(e.at("emission").get<double>());
    t.lead_time.push_back(e.at("lead_time").get<int>());
  }
  const auto market_ids = t.topology.markets();
  t.topology.retailer_market.assign(t.topology.retailers.size(), -1);
  for (const auto& m : j.at("markets")) {
    const int id = m.at("id").get<int>();
    int index = -1;
    for (std::size_t i = 0; i < market_ids.size(); ++i)
      if (market_ids[i] == id) index = static_cast<int>(i);
    if (index < 0) throw std::invalid_argument("task json: market id not in last layer");
    if (static_cast<std::size_t>(index) != t.market_price.size())
      throw std::invalid_argument("task json: markets must be listed in layer order");
    const int retailer = m.at("retailer").get<int>();
    for (std::size_t y = 0; y < t.topology.retailers.size(); ++y)
      if (t.topology.retailers[y] == retailer) t.topology.retailer_market[y] = index;
    t.market_price.push_back(m.at("price").get<double>());
    const auto& d = m.at("demand");
    DemandModel dm;
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "normal") dm.kind = DemandModel::Kind::Normal;
    else if (kind == "poisson") dm.kind = DemandModel::Kind::Poisson;
    else throw std::invalid_argument("task json: unknown demand kind '" + kind + "'");
    dm.mean = d.at("mean").get<double>();
    dm.sigma = d.value("sigma", 0.0);
    dm.season_amplitude = d.value("season_amplitude", 0.0);
    dm.season_period = d.value("season_period", static_cast<double>(t.horizon));
    t.demand.push_back(dm);
  }
  t.validate();
  if (j.contains("emission_scale")) {
    t.emission_scale = j.at("emission_scale").get<double>();
  } else {
    t.emission_scale = calibrate_emission_scale(t, 100, derive_seed(t.rng_seed, {0xe5ccull}));
  }
  return t;
}

}  // namespace miracl
