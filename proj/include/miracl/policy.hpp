// Feedforward Gaussian policy with a shared tanh trunk, diagonal
// state-independent log-std, and a scalar value head. Parameters live in
// one flat vector; forward and reverse passes are hand-written so the
// whole training stack stays dependency-free and the analytic gradient
// can be checked against finite differences.
#pragma once

#include <concepts>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <span>
#include <vector>

#include "miracl/common.hpp"
#include "miracl/metrics.hpp"
#include "miracl/rng.hpp"

namespace miracl {

struct PolicyShape {
  int obs = 0;
  int act = 0;
  int hidden1 = 64;
  int hidden2 = 64;

  int w1() const { return 0; }
  int b1() const { return w1() + hidden1 * obs; }
  int w2() const { return b1() + hidden1; }
  int b2() const { return w2() + hidden2 * hidden1; }
  int wm() const { return b2() + hidden2; }
  int bm() const { return wm() + act * hidden2; }
  int wv() const { return bm() + act; }
  int bv() const { return wv() + hidden2; }
  int log_std() const { return bv() + 1; }
  int param_count() const { return log_std() + act; }

  bool operator==(const PolicyShape&) const = default;
};

struct ForwardCache {
  Vec a1, a2;  // post-tanh activations
};

inline void policy_forward(const PolicyShape& s, std::span<const double> p,
                           std::span<const double> obs, std::span<double> mu, double& value,
                           ForwardCache* cache = nullptr) {
  if (obs.size() != static_cast<std::size_t>(s.obs) || mu.size() != static_cast<std::size_t>(s.act) ||
      p.size() != static_cast<std::size_t>(s.param_count()))
    throw std::invalid_argument("policy_forward: dimension mismatch");
  Vec a1(static_cast<std::size_t>(s.hidden1)), a2(static_cast<std::size_t>(s.hidden2));
  for (int i = 0; i < s.hidden1; ++i) {
    double z = p[s.b1() + i];
    const double* row = &p[s.w1() + i * s.obs];
    for (int j = 0; j < s.obs; ++j) z += row[j] * obs[j];
    a1[i] = std::tanh(z);
  }
  for (int i = 0; i < s.hidden2; ++i) {
    double z = p[s.b2() + i];
    const double* row = &p[s.w2() + i * s.hidden1];
    for (int j = 0; j < s.hidden1; ++j) z += row[j] * a1[j];
    a2[i] = std::tanh(z);
  }
  for (int i = 0; i < s.act; ++i) {
    double z = p[s.bm() + i];
    const double* row = &p[s.wm() + i * s.hidden2];
    for (int j = 0; j < s.hidden2; ++j) z += row[j] * a2[j];
    mu[i] = z;
  }
  value = p[s.bv()];
  for (int j = 0; j < s.hidden2; ++j) value += p[s.wv() + j] * a2[j];
  if (cache) {
    cache->a1 = std::move(a1);
    cache->a2 = std::move(a2);
  }
}

/// Accumulates d(loss)/d(params) into `grad` given upstream gradients on
/// the action mean and the value output of one sample.
inline void policy_backward(const PolicyShape& s, std::span<const double> p,
                            std::span<const double> obs, const ForwardCache& cache,
                            std::span<const double> dmu, double dvalue, std::span<double> grad) {
  Vec da2(static_cast<std::size_t>(s.hidden2), 0.0);
  for (int i = 0; i < s.act; ++i) {
    grad[s.bm() + i] += dmu[i];
    const double* row = &p[s.wm() + i * s.hidden2];
    double* grow = &grad[s.wm() + i * s.hidden2];
    for (int j = 0; j < s.hidden2; ++j) {
      grow[j] += dmu[i] * cache.a2[j];
      da2[j] += dmu[i] * row[j];
    }
  }
  grad[s.bv()] += dvalue;
  for (int j = 0; j < s.hidden2; ++j) {
    grad[s.wv() + j] += dvalue * cache.a2[j];
    da2[j] += dvalue * p[s.wv() + j];
  }
  Vec da1(static_cast<std::size_t>(s.hidden1), 0.0);
  for (int i = 0; i < s.hidden2; ++i) {
    const double dz = da2[i] * (1.0 - cache.a2[i] * cache.a2[i]);
    grad[s.b2() + i] += dz;
    const double* row = &p[s.w2() + i * s.hidden1];
    double* grow = &grad[s.w2() + i * s.hidden1];
    for (int j = 0; j < s.hidden1; ++j) {
      grow[j] += dz * cache.a1[j];
      da1[j] += dz * row[j];
    }
  }
  for (int i = 0; i < s.hidden1; ++i) {
    const double dz = da1[i] * (1.0 - cache.a1[i] * cache.a1[i]);
    grad[s.b1() + i] += dz;
    double* grow = &grad[s.w1() + i * s.obs];
    for (int j = 0; j < s.obs; ++j) grow[j] += dz * obs[j];
  }
}

namespace detail {

// Orthogonal rows/columns (modified Gram-Schmidt on the shorter side),
// scaled by `gain`. Written into params[offset ... offset + rows*cols).
inline void orthogonal_init(std::span<double> p, int offset, int rows, int cols, double gain,
                            RngStream& rng) {
  std::vector<Vec> m(static_cast<std::size_t>(rows), Vec(static_cast<std::size_t>(cols)));
  for (auto& row : m)
    for (double& x : row) x = rng.normal();
  auto orthonormalize = [](std::vector<Vec>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      for (std::size_t k = 0; k < i; ++k) {
        const double proj = dot(vs[i], vs[k]);
        for (std::size_t j = 0; j < vs[i].size(); ++j) vs[i][j] -= proj * vs[k][j];
      }
      const double norm = l2_norm(vs[i]);
      for (double& x : vs[i]) x /= std::max(norm, 1e-12);
    }
  };
  if (rows <= cols) {
    orthonormalize(m);
  } else {
    std::vector<Vec> cols_of(static_cast<std::size_t>(cols), Vec(static_cast<std::size_t>(rows)));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) cols_of[j][i] = m[i][j];
    orthonormalize(cols_of);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m[i][j] = cols_of[j][i];
  }
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) p[offset + i * cols + j] = gain * m[i][j];
}

}  // namespace detail

/// Orthogonal trunk (gain sqrt 2), small policy head (0.01), unit value
/// head, zero biases, log-std initialised to log(0.5).
inline Vec init_params(const PolicyShape& s, RngStream& rng) {
  Vec p(static_cast<std::size_t>(s.param_count()), 0.0);
  detail::orthogonal_init(p, s.w1(), s.hidden1, s.obs, std::sqrt(2.0), rng);
  detail::orthogonal_init(p, s.w2(), s.hidden2, s.hidden1, std::sqrt(2.0), rng);
  detail::orthogonal_init(p, s.wm(), s.act, s.hidden2, 0.01, rng);
  detail::orthogonal_init(p, s.wv(), 1, s.hidden2, 1.0, rng);
  for (int i = 0; i < s.act; ++i) p[s.log_std() + i] = std::log(0.5);
  return p;
}

// The network's action-mean head parameterises an offset around the middle
// of the unit action box, so a zero-initialised policy acts at mid-range
// (half capacity) instead of pinned to the lower bound. The effective mean
// saturates smoothly into (-0.1, 1.1): a mean far outside the box would
// clip every sample to the same action, erase the advantage signal, and
// leave the policy stuck at the boundary, while the smooth map keeps a
// nonzero gradient back toward the box everywhere.
constexpr double kActionMeanOffset = 0.5;
constexpr double kActionMeanSpan = 0.6;

inline double effective_action_mean(double mu_raw) {
  return kActionMeanOffset + kActionMeanSpan * std::tanh(mu_raw / kActionMeanSpan);
}

/// d(effective mean)/d(raw head output).
inline double effective_action_mean_grad(double mu_raw) {
  const double t = std::tanh(mu_raw / kActionMeanSpan);
  return 1.0 - t * t;
}

inline double gaussian_log_pdf(double x, double mean, double log_std) {
  const double sigma = std::exp(log_std);
  const double z = (x - mean) / sigma;
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += 0.5 * (1.0 + std::log(2.0 * std::numbers::pi)) + ls;
  return h;
}

/// Gaussian draw per component, clipped to [0,1]. The log-prob is the
/// unclipped Gaussian density evaluated at the stored (clipped) action.
inline double sample_action(std::span<const double> mu, std::span<const double> log_std,
                            RngStream& rng, std::span<double> action) {
  double logp = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double x = mu[j] + std::exp(log_std[j]) * rng.normal();
    action[j] = clamp01(x);
    logp += gaussian_log_pdf(action[j], mu[j], log_std[j]);
  }
  return logp;
}

struct GaeResult {
  Vec advantages, returns;
};

/// Generalised advantage estimation over a (possibly multi-episode) batch.
/// Done flags cut the recursion; `bootstrap_value` is used after the last
/// sample only if it is not terminal.
inline GaeResult gae(std::span<const double> rewards, std::span<const double> values,
                     std::span<const std::uint8_t> done, double bootstrap_value, double gamma,
                     double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || done.size() != n) throw std::invalid_argument("gae: length mismatch");
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double last_gae = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_nonterminal = done[i] ? 0.0 : 1.0;
    const double next_value = done[i] ? 0.0 : (i + 1 < n ? values[i + 1] : bootstrap_value);
    const double delta = rewards[i] + gamma * next_value - values[i];
    last_gae = delta + gamma * lambda * next_nonterminal * last_gae;
    out.advantages[i] = last_gae;
    out.returns[i] = out.advantages[i] + values[i];
  }
  return out;
}

struct RolloutBatch {
  int obs_dim = 0, act_dim = 0, n = 0;
  Vec obs;                        // n x obs_dim
  Vec actions;                    // n x act_dim, as executed (clipped)
  Vec logp;                       // n
  Vec value;                      // n
  Vec reward;                     // n, already scalarised
  std::vector<std::uint8_t> done; // n
  Vec mu_old;                     // n x act_dim
  Vec log_std_old;                // act_dim snapshot at collection time

  void append(std::span<const double> o, std::span<const double> a, double lp, double v, double r,
              bool d, std::span<const double> mu) {
    obs.insert(obs.end(), o.begin(), o.end());
    actions.insert(actions.end(), a.begin(), a.end());
    logp.push_back(lp);
    value.push_back(v);
    reward.push_back(r);
    done.push_back(d ? 1 : 0);
    mu_old.insert(mu_old.end(), mu.begin(), mu.end());
    ++n;
  }
};

struct PpoHyper {
  double learning_rate = 3e-4;
  int steps_per_update = 2048;
  int minibatch_size = 64;
  int epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  double kl_target = 0.01;
  double kl_coef = 0.001;
  bool use_adam = true;
  // Updates project log-std into [min, max]; the floor keeps exploration
  // alive and the Gaussian score terms bounded.
  double log_std_min = -3.0;
  double log_std_max = 1.0;
};

struct PpoLossResult {
  double loss = 0.0;  // minimised composite objective
  Vec grad;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  bool finite = true;
};

/// Composite clipped-surrogate loss and its analytic gradient over the
/// given sample indices. `advantages` must already be normalised and
/// `returns` computed; both are treated as constants of the batch.
inline PpoLossResult ppo_loss_grad(const PolicyShape& s, std::span<const double> params,
                                   const RolloutBatch& batch, std::span<const double> advantages,
                                   std::span<const double> returns, const PpoHyper& h,
                                   std::span<const int> idx) {
  PpoLossResult out;
  out.grad.assign(params.size(), 0.0);
  if (idx.empty()) return out;
  const int act = s.act;
  Vec mu(static_cast<std::size_t>(act)), dmu(static_cast<std::size_t>(act));
  ForwardCache cache;
  double loss_sum = 0.0, kl_sum = 0.0;
  int clipped = 0;
  const double entropy = gaussian_entropy(std::span<const double>(&params[s.log_std()], act));

  for (int i : idx) {
    const std::span<const double> obs(&batch.obs[static_cast<std::size_t>(i) * s.obs], s.obs);
    const std::span<const double> a(&batch.actions[static_cast<std::size_t>(i) * act], act);
    const std::span<const double> mu_old(&batch.mu_old[static_cast<std::size_t>(i) * act], act);
    double v = 0.0;
    policy_forward(s, params, obs, mu, v, &cache);
    Vec mean_grad(static_cast<std::size_t>(act));
    for (int j = 0; j < act; ++j) {
      mean_grad[j] = effective_action_mean_grad(mu[j]);
      mu[j] = effective_action_mean(mu[j]);
    }

    double logp_new = 0.0;
    for (int j = 0; j < act; ++j) logp_new += gaussian_log_pdf(a[j], mu[j], params[s.log_std() + j]);
    const double ratio = std::exp(logp_new - batch.logp[i]);
    const double adv = advantages[i];
    const double unclipped = ratio * adv;
    const double clipped_term = std::clamp(ratio, 1.0 - h.clip_range, 1.0 + h.clip_range) * adv;
    const bool clip_active = clipped_term < unclipped;
    if (clip_active) ++clipped;
    const double surrogate = clip_active ? clipped_term : unclipped;
    const double dlogp_coeff = clip_active ? 0.0 : ratio * adv;

    double kl = 0.0;
    const double v_err = v - returns[i];
    std::fill(dmu.begin(), dmu.end(), 0.0);
    for (int j = 0; j < act; ++j) {
      const double ls = params[s.log_std() + j];
      const double sigma2 = std::exp(2.0 * ls);
      const double sigma_old2 = std::exp(2.0 * batch.log_std_old[j]);
      const double diff_a = a[j] - mu[j];
      const double diff_mu = mu_old[j] - mu[j];
      kl += (ls - batch.log_std_old[j]) + (sigma_old2 + diff_mu * diff_mu) / (2.0 * sigma2) - 0.5;
      // d(-surrogate)/dmu + d(kl_coef * KL)/dmu, through the saturating
      // effective-mean map.
      dmu[j] += mean_grad[j] * (-dlogp_coeff * (diff_a / sigma2) + h.kl_coef * (-diff_mu / sigma2));
      out.grad[s.log_std() + j] +=
          -dlogp_coeff * (diff_a * diff_a / sigma2 - 1.0) +
          h.kl_coef * (1.0 - (sigma_old2 + diff_mu * diff_mu) / sigma2) - h.ent_coef;
    }
    kl_sum += kl;
    loss_sum += -surrogate + h.vf_coef * v_err * v_err + h.kl_coef * kl - h.ent_coef * entropy;
    policy_backward(s, params, obs, cache, dmu, 2.0 * h.vf_coef * v_err, out.grad);
  }

  const double inv_n = 1.0 / static_cast<double>(idx.size());
  out.loss = loss_sum * inv_n;
  for (double& g : out.grad) g *= inv_n;
  out.mean_kl = kl_sum * inv_n;
  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  out.finite = std::isfinite(out.loss) && all_finite(out.grad);
  return out;
}

/// Scales `g` so its global L2 norm is at most `max_norm` (<= 0 disables).
inline void clip_global_norm(std::span<double> g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = l2_norm(g);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& x : g) x *= scale;
  }
}

struct AdamState {
  Vec m, v;
  long long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void ensure_size(std::size_t n) {
    if (m.size() != n) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
      t = 0;
    }
  }

  void apply(std::span<double> params, std::span<const double> grad, double lr) {
    ensure_size(params.size());
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

struct PpoDiagnostics {
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double loss = 0.0;
  double kl_coef = 0.0;
  bool aborted = false;
  int minibatch_updates = 0;
};

/// Normalises advantages over the update batch (zero mean, unit std).
inline void normalize_advantages(Vec& adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double std_dev = std::sqrt(var / static_cast<double>(adv.size()));
  for (double& a : adv) a = (a - mean) / (std_dev + 1e-8);
}

/// Multiple epochs of shuffled-minibatch gradient steps on the clipped
/// surrogate. The KL penalty coefficient adapts between epochs (doubled
/// above 2x target, halved below half target). A non-finite loss aborts
/// the update and restores the incoming parameters.
inline PpoDiagnostics ppo_update(const PolicyShape& s, Vec& params, const RolloutBatch& batch,
                                 const PpoHyper& hyper, RngStream& rng, AdamState* adam = nullptr) {
  if (batch.n == 0) throw std::invalid_argument("ppo_update: empty batch");
  PpoDiagnostics diag;
  diag.kl_coef = hyper.kl_coef;
  const Vec params_in = params;

  GaeResult g = gae(batch.reward, batch.value, batch.done, 0.0, hyper.gamma, hyper.gae_lambda);
  normalize_advantages(g.advantages);

  PpoHyper h = hyper;
  std::vector<int> order(static_cast<std::size_t>(batch.n));
  for (int i = 0; i < batch.n; ++i) order[i] = i;
  const int mb = std::max(1, std::min(h.minibatch_size, batch.n));

  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    // Fisher-Yates with the caller's stream keeps updates reproducible.
    for (int i = batch.n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    double epoch_kl = 0.0, epoch_clip = 0.0, epoch_loss = 0.0;
    int chunks = 0;
    for (int start = 0; start < batch.n; start += mb) {
      const int len = std::min(mb, batch.n - start);
      PpoLossResult r = ppo_loss_grad(s, params, batch, g.advantages, g.returns, h,
                                      std::span<const int>(&order[start], len));
      if (!r.finite) {
        params = params_in;
        diag.aborted = true;
        return diag;
      }
      clip_global_norm(r.grad, h.max_grad_norm);
      if (h.learning_rate != 0.0) {
        if (adam) {
          adam->apply(params, r.grad, h.learning_rate);
        } else {
          for (std::size_t i = 0; i < params.size(); ++i) params[i] -= h.learning_rate * r.grad[i];
        }
        for (int j = 0; j < s.act; ++j)
          params[s.log_std() + j] = std::clamp(params[s.log_std() + j], h.log_std_min, h.log_std_max);
      }
      epoch_kl += r.mean_kl;
      epoch_clip += r.clip_fraction;
      epoch_loss = r.loss;
      ++chunks;
      ++diag.minibatch_updates;
    }
    diag.mean_kl = epoch_kl / chunks;
    diag.clip_fraction = epoch_clip / chunks;
    diag.loss = epoch_loss;
    if (diag.mean_kl > 2.0 * h.kl_target) h.kl_coef *= 2.0;
    else if (diag.mean_kl < 0.5 * h.kl_target) h.kl_coef *= 0.5;
  }
  diag.kl_coef = h.kl_coef;
  return diag;
}

// ---- Parameter checkpoints ----

inline void save_params(const std::string& path, const PolicyShape& s, std::span<const double> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  const char magic[8] = {'M', 'I', 'R', 'A', 'C', 'L', 'P', '1'};
  out.write(magic, 8);
  const std::int32_t dims[4] = {s.obs, s.act, s.hidden1, s.hidden2};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  const std::uint64_t n = params.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(params.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

inline std::pair<PolicyShape, Vec> load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "MIRACLP1", 8) != 0) throw std::runtime_error("bad checkpoint magic: " + path);
  std::int32_t dims[4];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  PolicyShape s{dims[0], dims[1], dims[2], dims[3]};
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (n != static_cast<std::uint64_t>(s.param_count()))
    throw std::runtime_error("checkpoint size does not match its shape header: " + path);
  Vec params(n);
  in.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return {s, std::move(params)};
}

// ---- Generic rollout over any multi-objective task ----

template <typename T>
concept MoTask = requires(const T& t, typename T::State& s, std::span<const double> a,
                          std::span<double> o, std::uint64_t seed) {
  { t.obs_dim() } -> std::convertible_to<int>;
  { t.act_dim() } -> std::convertible_to<int>;
  { t.objective_dim() } -> std::convertible_to<int>;
  { t.horizon() } -> std::convertible_to<int>;
  { t.reset(seed) } -> std::same_as<typename T::State>;
  { t.step(s, a) } -> std::same_as<Vec>;  // raw step objectives, domain orientation
  { t.observe(s, o) };
  { t.orient(a) } -> std::same_as<Vec>;   // to maximisation orientation
  { t.bounds() } -> std::convertible_to<const ObjectiveBounds&>;
};

struct EpisodeSummary {
  std::uint64_t episode_seed = 0;
  Vec raw_total;       // domain orientation
  Vec oriented_total;  // maximisation orientation
  double scalarized_return = 0.0;
};

struct RolloutResult {
  RolloutBatch batch;
  std::vector<EpisodeSummary> episodes;
  long long env_steps = 0;

  Vec mean_oriented_total() const {
    Vec m(episodes.at(0).oriented_total.size(), 0.0);
    for (const auto& e : episodes)
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += e.oriented_total[i];
    for (double& x : m) x /= static_cast<double>(episodes.size());
    return m;
  }
  Vec mean_raw_total() const {
    Vec m(episodes.at(0).raw_total.size(), 0.0);
    for (const auto& e : episodes)
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += e.raw_total[i];
    for (double& x : m) x /= static_cast<double>(episodes.size());
    return m;
  }
};

/// Runs full episodes under the policy, scalarising each step's reward as
/// w . r_hat with r_hat the per-step normalised, sign-flipped objective
/// vector; the per-step shift is bounds.lo / horizon so an episode's
/// scalarised return equals the (unclamped) normalised episode total under
/// w. With `deterministic` the clipped action mean is executed instead of
/// a Gaussian sample.
template <MoTask T>
RolloutResult scalarized_rollout(const T& task, const PolicyShape& shape,
                                 std::span<const double> params, std::span<const double> weight,
                                 int n_episodes, std::uint64_t seed, bool deterministic = false) {
  if (weight.size() != static_cast<std::size_t>(task.objective_dim()))
    throw std::invalid_argument("scalarized_rollout: weight dimension mismatch");
  const ObjectiveBounds& b = task.bounds();
  const int horizon = task.horizon();
  RolloutResult out;
  out.batch.obs_dim = task.obs_dim();
  out.batch.act_dim = task.act_dim();
  out.batch.log_std_old.assign(&params[shape.log_std()], &params[shape.log_std()] + shape.act);

  Vec obs(static_cast<std::size_t>(task.obs_dim()));
  Vec mu(static_cast<std::size_t>(task.act_dim()));
  Vec action(static_cast<std::size_t>(task.act_dim()));
  const std::span<const double> log_std(&params[shape.log_std()], shape.act);

  for (int ep = 0; ep < n_episodes; ++ep) {
    EpisodeSummary summary;
    summary.episode_seed = derive_seed(seed, {0xe915ull, static_cast<std::uint64_t>(ep)});
    RngStream arng(derive_seed(seed, {0xac7ull, static_cast<std::uint64_t>(ep)}));
    auto state = task.reset(summary.episode_seed);
    summary.raw_total.assign(static_cast<std::size_t>(task.objective_dim()), 0.0);
    for (int t = 0; t < horizon; ++t) {
      task.observe(state, obs);
      double value = 0.0;
      policy_forward(shape, params, obs, mu, value);
      for (double& m : mu) m = effective_action_mean(m);
      double logp;
      if (deterministic) {
        for (std::size_t j = 0; j < action.size(); ++j) action[j] = clamp01(mu[j]);
        logp = 0.0;
        for (std::size_t j = 0; j < action.size(); ++j)
          logp += gaussian_log_pdf(action[j], mu[j], log_std[j]);
      } else {
        logp = sample_action(mu, log_std, arng, action);
      }
      const Vec raw = task.step(state, action);
      const Vec oriented = task.orient(raw);
      double scal = 0.0;
      for (std::size_t j = 0; j < oriented.size(); ++j)
        scal += weight[j] * (oriented[j] - b.lo[j] / horizon) / (b.hi[j] - b.lo[j]);
      for (std::size_t j = 0; j < raw.size(); ++j) summary.raw_total[j] += raw[j];
      out.batch.append(obs, action, logp, value, scal, t + 1 == horizon, mu);
      summary.scalarized_return += scal;
      ++out.env_steps;
    }
    summary.oriented_total = task.orient(summary.raw_total);
    out.episodes.push_back(std::move(summary));
  }
  return out;
}

}  // namespace miracl
