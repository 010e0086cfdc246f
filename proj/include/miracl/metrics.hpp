// Non-dominated sorting, Pareto archive and the evaluation metrics
// (exact 3-D hypervolume, expected utility, sparsity), plus the
// normalisation bounds shared by every evaluated algorithm.
//
// All points handled here are in maximisation orientation: minimised
// objectives are sign-flipped before normalisation, and normalised values
// live in [0,1] with the hypervolume reference at the origin.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "miracl/common.hpp"
#include "miracl/supply_chain.hpp"
#include "miracl/task_library.hpp"

namespace miracl {

/// True iff a >= b componentwise with strict improvement somewhere.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dominates: dimension mismatch");
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

/// Points not dominated by any other input point; duplicates kept once.
inline std::vector<Vec> non_dominated_filter(const std::vector<Vec>& points) {
  if (points.empty()) throw std::invalid_argument("non_dominated_filter: empty input");
  std::vector<Vec> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < points.size() && keep; ++j)
      if (j != i && dominates(points[j], points[i])) keep = false;
    if (keep && std::find(out.begin(), out.end(), points[i]) == out.end()) out.push_back(points[i]);
  }
  return out;
}

namespace detail {

// 2-D hypervolume of a maximisation point set against (ref_x, ref_y).
inline double hv2(std::vector<std::pair<double, double>> pts, double ref_x, double ref_y) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second > b.second);
  });
  double area = 0.0, best_y = ref_y;
  for (const auto& [x, y] : pts) {
    if (y > best_y) {
      area += (x - ref_x) * (y - best_y);
      best_y = y;
    }
  }
  return area;
}

}  // namespace detail

/// Exact 3-D hypervolume by sweeping the third dimension: each slab of
/// distinct z contributes its 2-D cross-section area times its thickness.
inline double hypervolume(const std::vector<Vec>& points, std::span<const double> ref) {
  if (ref.size() != 3) throw std::invalid_argument("hypervolume: reference must be 3-D");
  if (points.empty()) return 0.0;
  for (const Vec& p : points) {
    if (p.size() != 3) throw std::invalid_argument("hypervolume: points must be 3-D");
    for (int d = 0; d < 3; ++d)
      if (p[d] < ref[d]) throw std::invalid_argument("hypervolume: point below reference");
  }
  Vec zs;
  for (const Vec& p : points) zs.push_back(p[2]);
  std::sort(zs.begin(), zs.end(), std::greater<>());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

  double volume = 0.0;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const double z_top = zs[k];
    const double z_bottom = k + 1 < zs.size() ? zs[k + 1] : ref[2];
    std::vector<std::pair<double, double>> slab;
    for (const Vec& p : points)
      if (p[2] >= z_top) slab.emplace_back(p[0], p[1]);
    volume += detail::hv2(std::move(slab), ref[0], ref[1]) * (z_top - z_bottom);
  }
  return volume;
}

/// Mean squared gap between consecutive values, per objective, with each
/// objective's values sorted descending (Xu et al. convention). Zero for
/// fewer than two points.
inline double sparsity(const std::vector<Vec>& points) {
  if (points.size() < 2) return 0.0;
  const std::size_t d = points[0].size();
  double total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    Vec col;
    col.reserve(points.size());
    for (const Vec& p : points) col.push_back(p.at(j));
    std::sort(col.begin(), col.end(), std::greater<>());
    for (std::size_t i = 0; i + 1 < col.size(); ++i) {
      const double gap = col[i] - col[i + 1];
      total += gap * gap;
    }
  }
  return total / static_cast<double>(points.size() - 1);
}

/// Expected utility: mean over weight samples of the best scalarised point.
inline double eum(const std::vector<Vec>& points, const std::vector<Vec>& weight_samples) {
  if (points.empty() || weight_samples.empty()) throw std::invalid_argument("eum: empty input");
  double sum = 0.0;
  for (const Vec& w : weight_samples) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& p : points) best = std::max(best, dot(w, p));
    sum += best;
  }
  return sum / static_cast<double>(weight_samples.size());
}

/// Per-objective normalisation interval for episode totals in
/// maximisation orientation, estimated from random rollouts.
struct ObjectiveBounds {
  Vec lo, hi;
  int episodes = 0;

  void validate() const {
    if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("bounds: bad shape");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(hi[i] > lo[i])) throw std::invalid_argument("bounds: max must exceed min");
  }

  nlohmann::json to_json() const {
    return {{"lo", lo}, {"hi", hi}, {"episodes", episodes}};
  }
  static ObjectiveBounds from_json(const nlohmann::json& j) {
    ObjectiveBounds b;
    b.lo = j.at("lo").get<Vec>();
    b.hi = j.at("hi").get<Vec>();
    b.episodes = j.value("episodes", 0);
    b.validate();
    return b;
  }
};

/// Affine map into [0,1] with clamping; input in maximisation orientation.
inline Vec normalize(std::span<const double> oriented, const ObjectiveBounds& b) {
  if (oriented.size() != b.lo.size()) throw std::invalid_argument("normalize: dimension mismatch");
  Vec out(oriented.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = clamp01((oriented[i] - b.lo[i]) / (b.hi[i] - b.lo[i]));
  return out;
}

/// Min/max of episode-total (profit, -emission, -inequality) over
/// uniform-random-action episodes, widened by 10%; degenerate intervals
/// are widened by +-1 instead.
inline ObjectiveBounds fit_bounds(const ScTask& task, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw std::invalid_argument("fit_bounds: need at least one episode");
  ObjectiveBounds b;
  b.episodes = n_episodes;
  b.lo.assign(3, std::numeric_limits<double>::infinity());
  b.hi.assign(3, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < n_episodes; ++i) {
    const Vec v =
        random_rollout(task, derive_seed(seed, {0xb01dull, static_cast<std::uint64_t>(i)})).oriented();
    for (int d = 0; d < 3; ++d) {
      b.lo[d] = std::min(b.lo[d], v[d]);
      b.hi[d] = std::max(b.hi[d], v[d]);
    }
  }
  for (int d = 0; d < 3; ++d) {
    if (b.hi[d] > b.lo[d]) {
      const double pad = 0.05 * (b.hi[d] - b.lo[d]);
      b.lo[d] -= pad;
      b.hi[d] += pad;
    } else {
      b.lo[d] -= 1.0;
      b.hi[d] += 1.0;
    }
  }
  return b;
}

struct ArchiveEntry {
  Vec point;                 // normalised, maximisation orientation
  Vec raw;                   // episode-total objectives in domain units
  std::uint64_t task_id = 0;
  Vec weight;
  int policy_id = -1;
};

/// Set of mutually non-dominated normalised points with provenance.
/// Inserting a dominated or duplicate point is a no-op; a successful
/// insert evicts any incumbent the new point dominates.
class ParetoArchive {
 public:
  bool insert(ArchiveEntry entry) {
    for (const ArchiveEntry& e : entries_) {
      if (e.point == entry.point) return false;
      if (dominates(e.point, entry.point)) return false;
    }
    std::erase_if(entries_, [&](const ArchiveEntry& e) { return dominates(entry.point, e.point); });
    entries_.push_back(std::move(entry));
    return true;
  }

  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::vector<Vec> points() const {
    std::vector<Vec> out;
    out.reserve(entries_.size());
    for (const ArchiveEntry& e : entries_) out.push_back(e.point);
    return out;
  }

  /// Index of the entry nearest to `point` (Euclidean); ties go to the
  /// lowest index. Archive must be non-empty.
  std::size_t nearest(std::span<const double> point) const {
    if (entries_.empty()) throw std::invalid_argument("archive: nearest on empty archive");
    std::size_t best = 0;
    double best_d = squared_distance(entries_[0].point, point);
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      const double d = squared_distance(entries_[i].point, point);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  std::string to_csv() const {
    std::ostringstream out;
    const std::size_t d = entries_.empty() ? 3 : entries_[0].point.size();
    out << "task_id,policy_id";
    for (std::size_t i = 0; i < d; ++i) out << ",weight_" << i;
    for (std::size_t i = 0; i < d; ++i) out << ",raw_" << i;
    for (std::size_t i = 0; i < d; ++i) out << ",norm_" << i;
    out << "\n";
    for (const ArchiveEntry& e : entries_) {
      out << e.task_id << "," << e.policy_id;
      for (std::size_t i = 0; i < d; ++i)
        out << "," << (i < e.weight.size() ? format_double(e.weight[i]) : "");
      for (std::size_t i = 0; i < d; ++i)
        out << "," << (i < e.raw.size() ? format_double(e.raw[i]) : "");
      for (double v : e.point) out << "," << format_double(v);
      out << "\n";
    }
    return out.str();
  }

  static ParetoArchive from_csv(const std::string& csv) {
    ParetoArchive a;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) return a;
    const auto header = split_csv_line(line);
    const std::size_t d = (header.size() - 2) / 3;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != 2 + 3 * d) throw std::runtime_error("archive csv: bad row width");
      ArchiveEntry e;
      e.task_id = std::stoull(f[0]);
      e.policy_id = std::stoi(f[1]);
      for (std::size_t i = 0; i < d; ++i)
        if (!f[2 + i].empty()) e.weight.push_back(std::stod(f[2 + i]));
      for (std::size_t i = 0; i < d; ++i)
        if (!f[2 + d + i].empty()) e.raw.push_back(std::stod(f[2 + d + i]));
      for (std::size_t i = 0; i < d; ++i) e.point.push_back(std::stod(f[2 + 2 * d + i]));
      a.entries_.push_back(std::move(e));
    }
    return a;
  }

 private:
  std::vector<ArchiveEntry> entries_;
};

}  // namespace miracl
