#include "sga/engine/metrics.hpp"

#include <algorithm>
#include <map>

#include "sga/scene/graph_building.hpp"
#include "sga/util/errors.hpp"

namespace sga::engine {

Strategy parse_strategy(const std::string& name) {
  if (name == "with" || name == "with-constraint" || name == "with_constraint") return Strategy::with_constraint;
  if (name == "no" || name == "no-constraint" || name == "no_constraint") return Strategy::no_constraint;
  throw ConfigError("strategy: unknown value '" + name + "' (with-constraint | no-constraint | both)");
}

std::string to_string(Strategy s) {
  return s == Strategy::with_constraint ? "with-constraint" : "no-constraint";
}

std::vector<TripletKey> triplet_keys(const scene::SceneGraph& frame) {
  std::vector<TripletKey> out;
  out.reserve(frame.triplets.size());
  for (const auto& t : frame.triplets) {
    out.emplace_back(frame.objects.at(t.subject_idx).category, t.predicate, frame.objects.at(t.object_idx).category);
  }
  return out;
}

FrameMatch match_frame(const std::vector<TripletKey>& gt, const std::vector<ScoredTriplet>& ranked, std::size_t k,
                       std::size_t num_predicates) {
  FrameMatch m;
  m.class_hits.assign(num_predicates, 0);
  m.class_total.assign(num_predicates, 0);
  std::map<TripletKey, std::size_t> available;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) ++available[ranked[i].key];
  for (const auto& key : gt) {
    const std::size_t p = std::get<1>(key);
    if (p >= num_predicates) throw ConfigError("metrics: predicate id out of range");
    ++m.total;
    ++m.class_total[p];
    auto it = available.find(key);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++m.hits;
      ++m.class_hits[p];
    }
  }
  return m;
}

std::optional<double> recall_at_k(const std::vector<TripletKey>& gt, const std::vector<ScoredTriplet>& ranked,
                                  std::size_t k) {
  if (gt.empty()) return std::nullopt;
  std::size_t max_pred = 0;
  for (const auto& g : gt) max_pred = std::max(max_pred, std::get<1>(g));
  const auto m = match_frame(gt, ranked, k, max_pred + 1);
  return static_cast<double>(m.hits) / static_cast<double>(m.total);
}

MeanRecall mean_recall(const std::vector<FrameMatch>& frames, std::size_t num_predicates) {
  std::vector<std::size_t> hits(num_predicates, 0), total(num_predicates, 0);
  for (const auto& f : frames) {
    for (std::size_t p = 0; p < num_predicates; ++p) {
      hits[p] += f.class_hits.at(p);
      total[p] += f.class_total.at(p);
    }
  }
  MeanRecall out;
  out.per_class.resize(num_predicates);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t p = 0; p < num_predicates; ++p) {
    if (total[p] == 0) continue;
    const double r = static_cast<double>(hits[p]) / static_cast<double>(total[p]);
    out.per_class[p] = r;
    sum += r;
    ++present;
  }
  out.mean = present ? sum / static_cast<double>(present) : 0.0;
  return out;
}

std::vector<ScoredTriplet> rank_forecast(const model::Forecast& forecast, std::size_t step, Strategy strategy) {
  std::vector<scene::ObjectInstance> objects;
  std::vector<scene::PredicateDistribution> dists;
  for (const auto& p : forecast.pairs) {
    const std::size_t need = std::max(p.subject_local, p.object_local) + 1;
    if (objects.size() < need) objects.resize(need);
    objects[p.subject_local].category = p.subject_category;
    objects[p.object_local].category = p.object_category;
    scene::PredicateDistribution d;
    d.subject_idx = p.subject_local;
    d.object_idx = p.object_local;
    d.scores = p.scores.at(step);
    dists.push_back(std::move(d));
  }
  auto graph = strategy == Strategy::with_constraint ? scene::build_graph_with_constraint(dists, objects)
                                                     : scene::build_graph_no_constraint(dists, objects);
  std::vector<std::size_t> order(graph.triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (strategy == Strategy::with_constraint) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ta = graph.triplets[a];
      const auto& tb = graph.triplets[b];
      if (*ta.score != *tb.score) return *ta.score > *tb.score;
      return ta.predicate < tb.predicate;
    });
  }
  std::vector<ScoredTriplet> out;
  out.reserve(order.size());
  for (std::size_t i : order) {
    const auto& t = graph.triplets[i];
    out.push_back({{objects[t.subject_idx].category, t.predicate, objects[t.object_idx].category}, *t.score});
  }
  return out;
}

}  // namespace sga::engine
