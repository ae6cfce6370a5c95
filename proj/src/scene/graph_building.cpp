#include "sga/scene/graph_building.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace sga::scene {

namespace {

void check_pairs(std::span<const PredicateDistribution> dists, std::span<const ObjectInstance> objects) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& d : dists) {
    if (d.subject_idx >= objects.size() || d.object_idx >= objects.size()) {
      throw ValidationError("graph building: pair (" + std::to_string(d.subject_idx) + ", " +
                            std::to_string(d.object_idx) + ") references a missing object");
    }
    if (d.subject_idx == d.object_idx) throw ValidationError("graph building: self pair");
    if (d.scores.empty()) throw ValidationError("graph building: empty score vector");
    for (float s : d.scores) {
      if (!std::isfinite(s)) throw ValidationError("graph building: non-finite score");
    }
    if (!seen.emplace(d.subject_idx, d.object_idx).second) {
      throw ValidationError("graph building: pair (" + std::to_string(d.subject_idx) + ", " +
                            std::to_string(d.object_idx) + ") appears twice");
    }
  }
}

}  // namespace

SceneGraph build_graph_with_constraint(std::span<const PredicateDistribution> dists,
                                       std::span<const ObjectInstance> objects, std::int64_t frame_index) {
  check_pairs(dists, objects);
  SceneGraph g;
  g.frame_index = frame_index;
  g.objects.assign(objects.begin(), objects.end());
  for (const auto& d : dists) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < d.scores.size(); ++p) {
      if (d.scores[p] > d.scores[best]) best = p;
    }
    g.triplets.push_back({d.subject_idx, d.object_idx, best, d.scores[best]});
  }
  return g;
}

SceneGraph build_graph_no_constraint(std::span<const PredicateDistribution> dists,
                                     std::span<const ObjectInstance> objects,
                                     std::optional<std::size_t> k_cap, std::int64_t frame_index) {
  check_pairs(dists, objects);
  struct Ranked {
    float score;
    std::size_t predicate;
    std::size_t pair_pos;
  };
  std::vector<Ranked> all;
  for (std::size_t k = 0; k < dists.size(); ++k) {
    for (std::size_t p = 0; p < dists[k].scores.size(); ++p) all.push_back({dists[k].scores[p], p, k});
  }
  std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.predicate != b.predicate) return a.predicate < b.predicate;
    return a.pair_pos < b.pair_pos;
  });
  if (k_cap && all.size() > *k_cap) all.resize(*k_cap);
  SceneGraph g;
  g.frame_index = frame_index;
  g.objects.assign(objects.begin(), objects.end());
  for (const auto& r : all) {
    const auto& d = dists[r.pair_pos];
    g.triplets.push_back({d.subject_idx, d.object_idx, r.predicate, r.score});
  }
  return g;
}

}  // namespace sga::scene
