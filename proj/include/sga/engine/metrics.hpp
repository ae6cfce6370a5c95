#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "sga/model/sga_model.hpp"
#include "sga/scene/types.hpp"

namespace sga::engine {

enum class Strategy { with_constraint, no_constraint };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

/// (subject category, predicate, object category).
using TripletKey = std::tuple<std::size_t, std::size_t, std::size_t>;

struct ScoredTriplet {
  TripletKey key;
  float score = 0.0f;
};

/// Ground-truth triplets of a frame as category keys.
std::vector<TripletKey> triplet_keys(const scene::SceneGraph& frame);

/// Per-class hit/total counts of one frame (multiset match against the
/// top-k predictions). `ranked` must already be sorted.
struct FrameMatch {
  std::size_t hits = 0;
  std::size_t total = 0;
  std::vector<std::size_t> class_hits;
  std::vector<std::size_t> class_total;
};

FrameMatch match_frame(const std::vector<TripletKey>& gt, const std::vector<ScoredTriplet>& ranked, std::size_t k,
                       std::size_t num_predicates);

/// Fraction of gt triplets found in the top-k; nullopt when gt is empty.
std::optional<double> recall_at_k(const std::vector<TripletKey>& gt, const std::vector<ScoredTriplet>& ranked,
                                  std::size_t k);

struct MeanRecall {
  double mean = 0.0;
  std::vector<std::optional<double>> per_class;  // nullopt: class never in gt
};

/// Per-class recall over the pooled counts, averaged over classes with gt.
MeanRecall mean_recall(const std::vector<FrameMatch>& frames, std::size_t num_predicates);

/// Ranked triplets of anticipated step `step` under a graph strategy.
std::vector<ScoredTriplet> rank_forecast(const model::Forecast& forecast, std::size_t step, Strategy strategy);

}  // namespace sga::engine
