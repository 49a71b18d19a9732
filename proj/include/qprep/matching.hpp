#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

#include "qprep/detectors.hpp"

namespace qprep {

// Minimum-weight perfect matching decoder. The graph keeps faults that flip
// at most two detectors as edges (single-detector faults connect to the
// boundary node); heavier faults are decomposed into existing edges when an
// exact decomposition exists and are otherwise dropped from the graph.
// Edge weights are -ln(p/(1-p)).
class MatchingGraph {
 public:
  struct Edge {
    int u, v;  // v == boundary() for boundary edges
    double w;
    double p;
    uint32_t obs;
  };

  MatchingGraph() = default;

  explicit MatchingGraph(const DetectorModel& dm) : num_det_(static_cast<int>(dm.detectors.size())) {
    std::map<std::pair<int, int>, std::map<uint32_t, double>> probs;
    std::vector<const DemFault*> heavy;
    for (const auto& f : dm.faults) {
      if (f.p <= 0.0) continue;
      if (f.dets.empty()) continue;  // pure observable flips are undecodable
      if (f.dets.size() <= 2) {
        int u = f.dets[0];
        int v = f.dets.size() == 2 ? f.dets[1] : boundary();
        merge_prob(probs[{u, v}][f.obs], f.p);
      } else {
        heavy.push_back(&f);
      }
    }
    // Exact decomposition of multi-detector faults into existing edges.
    for (const DemFault* f : heavy) {
      std::vector<std::pair<std::pair<int, int>, uint32_t>> parts;
      if (decompose(f->dets, f->obs, probs, parts)) {
        for (auto& [key, obs] : parts) merge_prob(probs[key][obs], f->p);
      } else {
        ++dropped_;
      }
    }
    for (auto& [key, by_obs] : probs) {
      // Conflicting observable masks on the same endpoints: keep the likeliest.
      auto best = std::max_element(by_obs.begin(), by_obs.end(),
                                   [](auto& a, auto& b) { return a.second < b.second; });
      if (by_obs.size() > 1) ++obs_conflicts_;
      double p = best->second;
      if (p >= 0.5) p = 0.4999999;  // weights stay nonnegative
      edges_.push_back({key.first, key.second, -std::log(p / (1 - p)), p, best->first});
    }
    adj_.assign(static_cast<size_t>(num_det_) + 1, {});
    for (size_t e = 0; e < edges_.size(); ++e) {
      adj_[static_cast<size_t>(edges_[e].u)].push_back(static_cast<int>(e));
      adj_[static_cast<size_t>(edges_[e].v)].push_back(static_cast<int>(e));
    }
  }

  int boundary() const { return num_det_; }
  int num_detectors() const { return num_det_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int dropped_faults() const { return dropped_; }
  int observable_conflicts() const { return obs_conflicts_; }

  struct Decoded {
    uint32_t obs = 0;
    double weight = 0.0;
  };

  // Exact MWPM over the fired detectors: each fired detector pairs with
  // another fired detector or with the boundary, along shortest paths in the
  // detector graph. Subset DP is exact; syndromes here are sparse.
  Decoded decode(const std::vector<int>& fired) const {
    if (fired.empty()) return {};
    int k = static_cast<int>(fired.size());
    if (k > 22) throw std::runtime_error("syndrome too dense for subset matching");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dist(static_cast<size_t>(k));
    std::vector<std::vector<uint32_t>> pobs(static_cast<size_t>(k));
    std::vector<double> bdist(static_cast<size_t>(k), inf);
    std::vector<uint32_t> bobs(static_cast<size_t>(k), 0);
    for (int i = 0; i < k; ++i) {
      auto [d, o] = dijkstra(fired[static_cast<size_t>(i)]);
      dist[static_cast<size_t>(i)].resize(static_cast<size_t>(k));
      pobs[static_cast<size_t>(i)].resize(static_cast<size_t>(k));
      for (int j = 0; j < k; ++j) {
        dist[static_cast<size_t>(i)][static_cast<size_t>(j)] = d[static_cast<size_t>(fired[static_cast<size_t>(j)])];
        pobs[static_cast<size_t>(i)][static_cast<size_t>(j)] = o[static_cast<size_t>(fired[static_cast<size_t>(j)])];
      }
      bdist[static_cast<size_t>(i)] = d[static_cast<size_t>(boundary())];
      bobs[static_cast<size_t>(i)] = o[static_cast<size_t>(boundary())];
    }

    // Subset DP, lowest fired detector pairs first. Odd subsets resolve via
    // boundary matches.
    size_t full = (1ull << k) - 1;
    std::vector<double> memo(full + 1, inf);
    std::vector<int> choice(full + 1, -2);  // -1 = boundary, j = partner
    memo[0] = 0.0;
    for (size_t s = 1; s <= full; ++s) {
      int i = std::countr_zero(s);
      double best = inf;
      int bestc = -2;
      if (bdist[static_cast<size_t>(i)] < inf) {
        double cand = bdist[static_cast<size_t>(i)] + memo[s & (s - 1)];
        if (cand < best) { best = cand; bestc = -1; }
      }
      for (int j = i + 1; j < k; ++j) {
        if (!(s >> j & 1)) continue;
        if (dist[static_cast<size_t>(i)][static_cast<size_t>(j)] >= inf) continue;
        size_t rest = s & ~(1ull << i) & ~(1ull << j);
        double cand = dist[static_cast<size_t>(i)][static_cast<size_t>(j)] + memo[rest];
        if (cand < best) { best = cand; bestc = j; }
      }
      memo[s] = best;
      choice[s] = bestc;
    }
    if (!(memo[full] < inf))
      throw std::runtime_error("syndrome cannot be matched: odd component disconnected from boundary");

    Decoded result;
    result.weight = memo[full];
    size_t s = full;
    while (s) {
      int i = std::countr_zero(s);
      int c = choice[s];
      if (c == -1) {
        result.obs ^= bobs[static_cast<size_t>(i)];
        s &= s - 1;
      } else {
        result.obs ^= pobs[static_cast<size_t>(i)][static_cast<size_t>(c)];
        s = s & ~(1ull << i) & ~(1ull << c);
      }
    }
    return result;
  }

 private:
  static void merge_prob(double& slot, double p) { slot = slot * (1 - p) + p * (1 - slot); }

  bool decompose(const std::vector<int>& dets, uint32_t obs,
                 const std::map<std::pair<int, int>, std::map<uint32_t, double>>& probs,
                 std::vector<std::pair<std::pair<int, int>, uint32_t>>& parts) const {
    // DFS partition of `dets` into existing edges (pairs or boundary
    // singles) whose observable masks XOR to `obs`.
    parts.clear();
    std::vector<int> remaining = dets;
    return decompose_rec(remaining, obs, probs, parts);
  }

  bool decompose_rec(std::vector<int>& rem, uint32_t obs,
                     const std::map<std::pair<int, int>, std::map<uint32_t, double>>& probs,
                     std::vector<std::pair<std::pair<int, int>, uint32_t>>& parts) const {
    if (rem.empty()) return obs == 0;
    int a = rem.front();
    auto try_edge = [&](std::pair<int, int> key, std::vector<int> next) {
      auto it = probs.find(key);
      if (it == probs.end()) return false;
      for (const auto& [mask, p] : it->second) {
        (void)p;
        parts.push_back({key, mask});
        if (decompose_rec(next, obs ^ mask, probs, parts)) return true;
        parts.pop_back();
      }
      return false;
    };
    {
      std::vector<int> next(rem.begin() + 1, rem.end());
      if (try_edge({a, boundary()}, next)) return true;
    }
    for (size_t j = 1; j < rem.size(); ++j) {
      std::vector<int> next;
      for (size_t t = 1; t < rem.size(); ++t)
        if (t != j) next.push_back(rem[t]);
      if (try_edge({std::min(a, rem[j]), std::max(a, rem[j])}, next)) return true;
    }
    return false;
  }

  std::pair<std::vector<double>, std::vector<uint32_t>> dijkstra(int src) const {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<size_t>(num_det_) + 1, inf);
    std::vector<uint32_t> obs(static_cast<size_t>(num_det_) + 1, 0);
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, std::greater<>> pq;
    dist[static_cast<size_t>(src)] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[static_cast<size_t>(u)]) continue;
      if (u == boundary()) continue;  // paths through the boundary are not shorter pairings
      for (int ei : adj_[static_cast<size_t>(u)]) {
        const Edge& e = edges_[static_cast<size_t>(ei)];
        int v = e.u == u ? e.v : e.u;
        double nd = d + e.w;
        if (nd < dist[static_cast<size_t>(v)]) {
          dist[static_cast<size_t>(v)] = nd;
          obs[static_cast<size_t>(v)] = obs[static_cast<size_t>(u)] ^ e.obs;
          pq.push({nd, v});
        }
      }
    }
    return {dist, obs};
  }

  int num_det_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  int dropped_ = 0;
  int obs_conflicts_ = 0;
};

}  // namespace qprep
