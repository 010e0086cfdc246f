#include <doctest.h>

#include "miracl/scalarize.hpp"

using namespace miracl;

TEST_CASE("linear scalarisation") {
  CHECK(linear_scalarize(Vec{1, 0, 0}, Vec{0.7, 0.2, 0.9}) == doctest::Approx(0.7));
  CHECK(linear_scalarize(Vec{1.0 / 3, 1.0 / 3, 1.0 / 3}, Vec{0.3, 0.6, 0.9}) ==
        doctest::Approx(0.6));
  CHECK(linear_scalarize(Vec{0.4, 0.6}, Vec{0, 0}) == 0.0);
  CHECK_THROWS_AS(linear_scalarize(Vec{1, 0}, Vec{1, 0, 0}), std::invalid_argument);
}

TEST_CASE("tchebycheff scalarisation") {
  CHECK(tchebycheff_scalarize(Vec{1, 0, 0}, Vec{0.7, 0.2, 0.9}) == doctest::Approx(-0.3));
  CHECK(tchebycheff_scalarize(Vec{0.2, 0.3, 0.5}, Vec{1, 1, 1}) == doctest::Approx(0.0));
  CHECK(tchebycheff_scalarize(Vec{0.5, 0.5}, Vec{0.8, 0.4}, Vec{1, 1}) == doctest::Approx(-0.3));
  CHECK_THROWS_AS(tchebycheff_scalarize(Vec{1, 0}, Vec{1, 0, 0}), std::invalid_argument);
}

TEST_CASE("simplex sampling: validity, moments, determinism") {
  RngStream rng(7);
  const auto ws = sample_simplex_weights(100000, 3, rng);
  Vec mean(3, 0.0);
  for (const Vec& w : ws) {
    double sum = 0.0;
    for (double x : w) {
      REQUIRE(x >= 0.0);
      sum += x;
    }
    REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) mean[j] += w[j];
  }
  for (int j = 0; j < 3; ++j) CHECK(mean[j] / ws.size() == doctest::Approx(1.0 / 3).epsilon(0.03));

  RngStream r1(9), r2(9);
  CHECK(sample_simplex_weights(5, 3, r1) == sample_simplex_weights(5, 3, r2));
  CHECK_THROWS_AS(sample_simplex_weights(0, 3, rng), std::invalid_argument);
}

TEST_CASE("psa update: worked example") {
  // r beats r' in objective 1 only.
  const Vec w{0.5, 0.3, 0.2};
  const Vec r{0.9, 0.1, 0.1}, r_ref{0.5, 0.5, 0.5};
  const Vec out = psa_update_step(w, r, r_ref, 0.05);
  CHECK(out[0] == doctest::Approx(0.524376).epsilon(1e-6));
  CHECK(out[1] == doctest::Approx(0.285374).epsilon(1e-6));
  CHECK(out[2] == doctest::Approx(0.190250).epsilon(1e-6));
}

TEST_CASE("psa update: no-ops and tie handling") {
  const Vec w{0.5, 0.3, 0.2};
  const Vec r{0.9, 0.1, 0.1}, r_ref{0.5, 0.5, 0.5};
  CHECK(psa_update_step(w, r, r_ref, 0.0) == w);  // bit-identical no-op at rate 0

  // Uniform improvement: the common factor cancels under normalisation.
  const Vec all_better = psa_update_step(w, Vec{0.9, 0.9, 0.9}, r_ref, 0.05);
  for (int j = 0; j < 3; ++j) CHECK(all_better[j] == doctest::Approx(w[j]).epsilon(1e-12));

  // Ties take the multiplicative branch (the rule's >=).
  const Vec tie = psa_update_step(Vec{0.5, 0.5}, Vec{0.5, 0.3}, Vec{0.5, 0.5}, 0.05);
  CHECK(tie[0] > tie[1]);

  CHECK_THROWS_AS(psa_update_step(w, r, r_ref, -0.1), std::invalid_argument);
}

TEST_CASE("psa update preserves the simplex under fuzzing") {
  RngStream rng(31);
  for (int trial = 0; trial < 20000; ++trial) {
    const auto w = sample_simplex_weights(1, 3, rng)[0];
    const Vec r{rng.uniform(), rng.uniform(), rng.uniform()};
    const Vec r_ref{rng.uniform(), rng.uniform(), rng.uniform()};
    const Vec out = psa_update_step(w, r, r_ref, rng.uniform(0.0, 0.5));
    double sum = 0.0;
    for (double x : out) {
      REQUIRE(x >= 0.0);
      sum += x;
    }
    REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("weight ratio rises exactly when a beats its neighbour and b does not") {
  RngStream rng(37);
  for (int trial = 0; trial < 2000; ++trial) {
    auto w = sample_simplex_weights(1, 3, rng)[0];
    bool interior = true;
    for (double x : w) interior = interior && x > 1e-4;
    if (!interior) continue;
    const Vec r{rng.uniform(), rng.uniform(), rng.uniform()};
    const Vec r_ref{rng.uniform(), rng.uniform(), rng.uniform()};
    const Vec out = psa_update_step(w, r, r_ref, 0.05);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (a == b) continue;
        const bool a_beats = r[a] >= r_ref[a], b_beats = r[b] >= r_ref[b];
        const double before = w[a] / w[b], after = out[a] / out[b];
        if (a_beats && !b_beats) REQUIRE(after > before);
        if (a_beats == b_beats) REQUIRE(after == doctest::Approx(before).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("diversity mechanism: empty archive leaves weights unchanged") {
  std::vector<Vec> weights{{0.5, 0.3, 0.2}, {0.2, 0.2, 0.6}};
  const auto weights_before = weights;
  ParetoArchive archive;
  std::vector<ArchiveEntry> rewards{{{0.9, 0.1, 0.2}, {}, 1, weights[0], 0},
                                    {{0.1, 0.9, 0.2}, {}, 1, weights[1], 1}};
  diversity_mechanism(weights, rewards, archive, 10, 0.05);
  CHECK(weights == weights_before);
  CHECK(archive.size() == 2);  // both mutually non-dominated, both inserted
}

TEST_CASE("diversity mechanism: S = 0 skips updates but still archives") {
  std::vector<Vec> weights{{0.5, 0.5, 0.0}};
  const auto before = weights;
  ParetoArchive archive;
  archive.insert({{0.5, 0.5, 0.5}, {}, 0, {}, 0});
  std::vector<ArchiveEntry> rewards{{{0.6, 0.4, 0.5}, {}, 1, weights[0], 0}};
  diversity_mechanism(weights, rewards, archive, 0, 0.05);
  CHECK(weights == before);
  CHECK(archive.size() == 2);
}

TEST_CASE("diversity mechanism: single-step trace against the PSA rule") {
  std::vector<Vec> weights{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  ParetoArchive archive;
  archive.insert({{0.5, 0.5, 0.5}, {}, 0, {}, 0});
  std::vector<ArchiveEntry> rewards{{{0.6, 0.4, 0.5}, {}, 1, weights[0], 0}};
  diversity_mechanism(weights, rewards, archive, 1, 0.05);

  // One PSA step against the only archived point; tie on the third
  // objective takes the multiplicative branch.
  const Vec expected =
      psa_update_step(Vec{1.0 / 3, 1.0 / 3, 1.0 / 3}, Vec{0.6, 0.4, 0.5}, Vec{0.5, 0.5, 0.5}, 0.05);
  for (int j = 0; j < 3; ++j) CHECK(weights[0][j] == doctest::Approx(expected[j]).epsilon(1e-12));
  CHECK(weights[0][0] > weights[0][1]);
  CHECK(weights[0][2] > weights[0][1]);

  // The incomparable new reward joins; the incumbent is retained.
  CHECK(archive.size() == 2);
}

TEST_CASE("diversity mechanism leaves the archive mutually non-dominated") {
  RngStream rng(53);
  ParetoArchive archive;
  for (int round = 0; round < 50; ++round) {
    auto weights = sample_simplex_weights(4, 3, rng);
    std::vector<ArchiveEntry> rewards;
    for (int k = 0; k < 4; ++k)
      rewards.push_back({{rng.uniform(), rng.uniform(), rng.uniform()}, {}, 0, weights[k], k});
    diversity_mechanism(weights, rewards, archive, 3, 0.05);
    const auto pts = archive.points();
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (i != j) REQUIRE_FALSE(dominates(pts[i], pts[j]));
  }
  CHECK_THROWS_AS(
      [&] {
        std::vector<Vec> none;
        std::vector<ArchiveEntry> r2;
        diversity_mechanism(none, r2, archive, 1, 0.05);
      }(),
      std::invalid_argument);
}
