// Scalarisation functions, simplex weight sampling, and the
// archive-guided Pareto-Simulated-Annealing weight rule.
#pragma once

#include <span>
#include <vector>

#include "miracl/common.hpp"
#include "miracl/metrics.hpp"
#include "miracl/rng.hpp"

namespace miracl {

struct PsaConfig {
  int steps = 10;      // S
  double rate = 0.05;  // delta
};

inline double linear_scalarize(std::span<const double> w, std::span<const double> r) {
  return dot(w, r);
}

/// Negated weighted Chebyshev distance to the utopia point; larger is
/// better, maximum 0 at r = utopia.
inline double tchebycheff_scalarize(std::span<const double> w, std::span<const double> r,
                                    std::span<const double> utopia) {
  if (w.size() != r.size() || w.size() != utopia.size())
    throw std::invalid_argument("tchebycheff: dimension mismatch");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < w.size(); ++j) worst = std::max(worst, w[j] * (utopia[j] - r[j]));
  return -worst;
}

inline double tchebycheff_scalarize(std::span<const double> w, std::span<const double> r) {
  const Vec utopia(w.size(), 1.0);
  return tchebycheff_scalarize(w, r, utopia);
}

/// K i.i.d. uniform draws from the (d-1)-simplex (normalised unit-rate
/// exponentials, i.e. Dirichlet(1,...,1)).
inline std::vector<Vec> sample_simplex_weights(int k, int d, RngStream& rng) {
  if (k < 1 || d < 2) throw std::invalid_argument("sample_simplex_weights: need k >= 1, d >= 2");
  std::vector<Vec> out(static_cast<std::size_t>(k), Vec(static_cast<std::size_t>(d)));
  for (Vec& w : out) {
    double sum = 0.0;
    for (double& x : w) {
      x = rng.exponential();
      sum += x;
    }
    for (double& x : w) x /= sum;
  }
  return out;
}

/// One PSA step: boost the weight of objectives where r beats the
/// reference r_ref, shrink it elsewhere, then renormalise onto the
/// simplex. Components are floored at 1e-6 before normalising so the
/// multiplicative rule cannot freeze a coordinate at zero. Inputs must be
/// in maximisation orientation. delta = 0 is an exact no-op.
inline Vec psa_update_step(std::span<const double> w, std::span<const double> r,
                           std::span<const double> r_ref, double delta) {
  if (delta < 0.0) throw std::invalid_argument("psa_update_step: negative rate");
  if (w.size() != r.size() || w.size() != r_ref.size())
    throw std::invalid_argument("psa_update_step: dimension mismatch");
  Vec out(w.begin(), w.end());
  if (delta == 0.0) return out;
  double sum = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = r[j] >= r_ref[j] ? out[j] * (1.0 + delta) : out[j] / (1.0 + delta);
    out[j] = std::max(out[j], 1e-6);
    sum += out[j];
  }
  for (double& x : out) x /= sum;
  return out;
}

/// The diversity mechanism: S PSA sweeps of every weight against its
/// nearest archived neighbour, then insertion of the non-dominated reward
/// vectors into the archive. `rewards` carry provenance for the archive.
inline void diversity_mechanism(std::vector<Vec>& weights, const std::vector<ArchiveEntry>& rewards,
                                ParetoArchive& archive, int steps, double rate) {
  if (weights.empty()) throw std::invalid_argument("diversity_mechanism: no subproblems");
  if (weights.size() != rewards.size())
    throw std::invalid_argument("diversity_mechanism: weights/rewards size mismatch");
  for (int s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (archive.empty()) continue;
      const ArchiveEntry& nearest = archive.entries()[archive.nearest(rewards[k].point)];
      weights[k] = psa_update_step(weights[k], rewards[k].point, nearest.point, rate);
    }
  }
  for (const ArchiveEntry& r : rewards) archive.insert(r);
}

}  // namespace miracl
