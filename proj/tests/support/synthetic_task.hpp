// Synthetic two-objective quadratic task family for fast meta-learning
// checks: a scalar action a scores (-(a - c1)^2, -(a - c2)^2) per step,
// with task-specific centers drawn from [-1, 1]^2. The scalarised optimum
// is the weighted mean of the centers, so adaptation quality is directly
// measurable. The unit action maps to a = 4u - 2.
//


#pragma once

#include "miracl/metrics.hpp"
#include "miracl/policy.hpp"

namespace synthetic {

using miracl::ObjectiveBounds;
using miracl::Vec;

class QuadraticTask {
 public:
  struct State {
    int t = 0;
  };

  QuadraticTask(double c1, double c2, int horizon = 10) : c1_(c1), c2_(c2), horizon_(horizon) {
    bounds_.lo = {-9.0 * horizon, -9.0 * horizon};
    bounds_.hi = {0.0, 0.0};
    bounds_.episodes = 0;
  }

  int obs_dim() const { return 2; }
  int act_dim() const { return 1; }
  int objective_dim() const { return 2; }
  int horizon() const { return horizon_; }

  State reset(std::uint64_t) const { return State{}; }

  Vec step(State& s, std::span<const double> action) const {
    const double a = 4.0 * miracl::clamp01(action[0]) - 2.0;
    ++s.t;
    return {-(a - c1_) * (a - c1_), -(a - c2_) * (a - c2_)};
  }

  void observe(const State& s, std::span<double> out) const {
    out[0] = 1.0;
    out[1] = static_cast<double>(s.t) / horizon_;
  }

  Vec orient(std::span<const double> raw) const { return {raw.begin(), raw.end()}; }

  const ObjectiveBounds& bounds() const { return bounds_; }

  double c1() const { return c1_; }
  double c2() const { return c2_; }

 private:
  double c1_, c2_;
  int horizon_;
  ObjectiveBounds bounds_;
};

static_assert(miracl::MoTask<QuadraticTask>);

class QuadraticSampler {
 public:
  explicit QuadraticSampler(int horizon = 10) : horizon_(horizon) {}

  QuadraticTask sample(std::uint64_t seed) const {
    miracl::RngStream rng(seed);
    return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), horizon_};
  }

  int obs_dim() const { return 2; }
  int act_dim() const { return 1; }
  int objective_dim() const { return 2; }

 private:
  int horizon_;
};

}  // namespace synthetic
