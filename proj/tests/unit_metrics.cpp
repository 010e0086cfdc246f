#include <doctest.h>

#include <algorithm>

#include "miracl/metrics.hpp"
#include "miracl/scalarize.hpp"
#include "support/micro_chain.hpp"
#include "support/oracles.hpp"

using namespace miracl;

namespace {
std::vector<Vec> sorted(std::vector<Vec> v) {
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace

TEST_CASE("dominance basics") {
  CHECK(dominates(Vec{0.5, 0.5, 0.5}, Vec{0.4, 0.5, 0.5}));
  CHECK_FALSE(dominates(Vec{0.5, 0.5, 0.5}, Vec{0.5, 0.5, 0.5}));  // needs strict improvement
  CHECK_FALSE(dominates(Vec{0.9, 0.1, 0.5}, Vec{0.1, 0.9, 0.5}));
  CHECK_FALSE(dominates(Vec{0.1, 0.9, 0.5}, Vec{0.9, 0.1, 0.5}));
  CHECK_THROWS_AS(dominates(Vec{1, 2}, Vec{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("non-dominated filter basics and oracle agreement") {
  const std::vector<Vec> axes{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK(non_dominated_filter(axes).size() == 3);
  CHECK(non_dominated_filter({{0.5, 0.5, 0.5}, {0.4, 0.4, 0.4}}) ==
        std::vector<Vec>{{0.5, 0.5, 0.5}});
  CHECK_THROWS_AS(non_dominated_filter({}), std::invalid_argument);

  for (int trial = 0; trial < 25; ++trial) {
    RngStream rng(1000 + trial);
    std::vector<Vec> pts;
    for (int i = 0; i < 120; ++i) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    CHECK(sorted(non_dominated_filter(pts)) == sorted(oracles::brute_force_filter(pts)));
  }
}

TEST_CASE("hypervolume closed-form cases") {
  const Vec ref{0, 0, 0};
  CHECK(hypervolume({{0.5, 0.5, 0.5}}, ref) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(hypervolume({{1, 0.5, 0.5}, {0.5, 1, 0.5}}, ref) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(hypervolume({}, ref) == 0.0);
  CHECK_THROWS_AS(hypervolume({{0.5, 0.5, -0.1}}, ref), std::invalid_argument);
  CHECK_THROWS_AS(hypervolume({{0.5, 0.5}}, ref), std::invalid_argument);
}

TEST_CASE("hypervolume matches the inclusion-exclusion oracle") {
  const Vec ref{0, 0, 0};
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = oracles::random_non_dominated_set(40, 12, 2000 + trial);
    CHECK(hypervolume(pts, ref) ==
          doctest::Approx(oracles::hv_inclusion_exclusion(pts, ref)).epsilon(1e-12));
  }
}

TEST_CASE("hypervolume matches Monte Carlo on a larger set") {
  const Vec ref{0, 0, 0};
  const auto pts = oracles::random_non_dominated_set(400, 40, 37);
  const double exact = hypervolume(pts, ref);
  const double mc = oracles::hv_monte_carlo(pts, ref, 400000, 99);
  CHECK(std::abs(exact - mc) < 5e-3);
}

TEST_CASE("dominated points contribute nothing to hypervolume") {
  const Vec ref{0, 0, 0};
  RngStream rng(55);
  std::vector<Vec> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  CHECK(hypervolume(pts, ref) ==
        doctest::Approx(hypervolume(non_dominated_filter(pts), ref)).epsilon(1e-12));
}

TEST_CASE("hypervolume is monotone under non-dominated insertion") {
  const Vec ref{0, 0, 0};
  RngStream rng(66);
  std::vector<Vec> pts{{0.5, 0.5, 0.5}};
  double hv = hypervolume(pts, ref);
  for (int i = 0; i < 200; ++i) {
    const Vec p{rng.uniform(), rng.uniform(), rng.uniform()};
    bool dominated = false;
    for (const Vec& q : pts) dominated = dominated || dominates(q, p) || q == p;
    if (dominated) continue;
    pts.push_back(p);
    const double hv2 = hypervolume(pts, ref);
    REQUIRE(hv2 >= hv - 1e-15);
    hv = hv2;
  }
}

TEST_CASE("sparsity formula") {
  CHECK(sparsity({{1, 0}, {0, 1}}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sparsity({{0.3, 0.7}, {0.3, 0.7}}) == 0.0);
  CHECK(sparsity({{0.3, 0.7}}) == 0.0);
  CHECK(sparsity({}) == 0.0);

  for (int trial = 0; trial < 30; ++trial) {
    RngStream rng(3000 + trial);
    std::vector<Vec> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    CHECK(sparsity(pts) == doctest::Approx(oracles::sparsity_direct(pts)).epsilon(1e-12));
  }
}

TEST_CASE("two-point sparsity equals the squared euclidean distance") {
  RngStream rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec a{rng.uniform(), rng.uniform(), rng.uniform()};
    const Vec b{rng.uniform(), rng.uniform(), rng.uniform()};
    CHECK(sparsity({a, b}) == doctest::Approx(squared_distance(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("expected utility metric") {
  RngStream rng(81);
  const auto weights = sample_simplex_weights(20, 3, rng);
  CHECK(eum({{1, 1, 1}}, weights) == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<Vec> vertices{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const std::vector<Vec> simplex_corners{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK(eum(vertices, simplex_corners) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(eum({}, weights), std::invalid_argument);

  for (int trial = 0; trial < 30; ++trial) {
    RngStream r2(4000 + trial);
    std::vector<Vec> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({r2.uniform(), r2.uniform(), r2.uniform()});
    const auto w = sample_simplex_weights(17, 3, r2);
    CHECK(eum(pts, w) == doctest::Approx(oracles::eum_direct(pts, w)).epsilon(1e-12));
  }
}

TEST_CASE("eum is monotone under point insertion") {
  RngStream rng(91);
  const auto weights = sample_simplex_weights(25, 3, rng);
  std::vector<Vec> pts{{0.2, 0.2, 0.2}};
  double best = eum(pts, weights);
  for (int i = 0; i < 100; ++i) {
    pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    const double v = eum(pts, weights);
    REQUIRE(v >= best - 1e-15);
    best = v;
  }
}

TEST_CASE("bounds: endpoints, clamping, determinism, degenerate widening") {
  support::MicroChainParams p;
  p.demand_mean = 5.0;
  p.demand_sigma = 2.0;
  p.price = 20.0;
  p.cost_mr = 0.5;
  p.emission_mr = 0.2;
  p.init_inv_m = 100.0;
  const ScTask t = support::make_micro_chain(p);

  const ObjectiveBounds b1 = fit_bounds(t, 10, 42);
  const ObjectiveBounds b2 = fit_bounds(t, 10, 42);
  CHECK(b1.lo == b2.lo);
  CHECK(b1.hi == b2.hi);
  CHECK_THROWS_AS(fit_bounds(t, 0, 42), std::invalid_argument);

  const Vec at_min = normalize(b1.lo, b1);
  const Vec at_max = normalize(b1.hi, b1);
  for (int d = 0; d < 3; ++d) {
    CHECK(at_min[d] == doctest::Approx(0.0));
    CHECK(at_max[d] == doctest::Approx(1.0));
  }
  const Vec outside = normalize(Vec{b1.hi[0] + 100, b1.lo[1] - 100, b1.lo[2] - 100}, b1);
  CHECK(outside[0] == 1.0);
  CHECK(outside[1] == 0.0);

  // Single retailer: inequality is constantly zero, so its interval is
  // degenerate and must be widened by +-1.
  CHECK(b1.hi[2] - b1.lo[2] == doctest::Approx(2.0));

  const auto j = b1.to_json();
  const ObjectiveBounds round = ObjectiveBounds::from_json(j);
  CHECK(round.lo == b1.lo);
  CHECK(round.hi == b1.hi);
}

TEST_CASE("archive stays mutually non-dominated and matches the filter oracle") {
  RngStream rng(123);
  ParetoArchive archive;
  std::vector<Vec> inserted;
  for (int i = 0; i < 5000; ++i) {
    Vec p{rng.uniform(), rng.uniform(), rng.uniform()};
    inserted.push_back(p);
    archive.insert(ArchiveEntry{p, p, 0, {}, i});
  }
  const auto pts = archive.points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (i != j) REQUIRE_FALSE(dominates(pts[i], pts[j]));
  CHECK(sorted(pts) == sorted(oracles::brute_force_filter(inserted)));
}

TEST_CASE("archive insert semantics") {
  ParetoArchive a;
  CHECK(a.insert({{0.5, 0.5, 0.5}, {}, 0, {}, 0}));
  CHECK_FALSE(a.insert({{0.4, 0.4, 0.4}, {}, 0, {}, 1}));  // dominated: no-op
  CHECK(a.size() == 1);
  CHECK_FALSE(a.insert({{0.5, 0.5, 0.5}, {}, 0, {}, 2}));  // duplicate: no-op
  CHECK(a.insert({{0.9, 0.9, 0.9}, {}, 0, {}, 3}));        // evicts the incumbent
  CHECK(a.size() == 1);
  CHECK(a.entries()[0].policy_id == 3);

  a.insert({{0.1, 0.95, 0.1}, {}, 0, {}, 4});
  CHECK(a.nearest(Vec{0.0, 1.0, 0.0}) == 1);
  CHECK(a.nearest(Vec{0.9, 0.9, 0.9}) == 0);
}

TEST_CASE("archive csv round trip") {
  ParetoArchive a;
  a.insert({{0.25, 0.5, 0.75}, {100.0, -3.0, 0.5}, 42, {0.2, 0.3, 0.5}, 7});
  a.insert({{0.9, 0.4, 0.1}, {250.0, -9.0, 1.5}, 42, {0.6, 0.2, 0.2}, 8});
  const ParetoArchive b = ParetoArchive::from_csv(a.to_csv());
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b.entries()[i].point == a.entries()[i].point);
    CHECK(b.entries()[i].raw == a.entries()[i].raw);
    CHECK(b.entries()[i].weight == a.entries()[i].weight);
    CHECK(b.entries()[i].task_id == a.entries()[i].task_id);
    CHECK(b.entries()[i].policy_id == a.entries()[i].policy_id);
  }
}
