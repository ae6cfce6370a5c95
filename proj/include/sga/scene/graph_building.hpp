#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "sga/scene/types.hpp"

namespace sga::scene {

/// One triplet per pair: the argmax predicate (lowest id on ties), scored by
/// its probability. Pairs must be unique within `dists`.
SceneGraph build_graph_with_constraint(std::span<const PredicateDistribution> dists,
                                       std::span<const ObjectInstance> objects,
                                       std::int64_t frame_index = 0);

/// Every (pair, predicate) as a scored triplet, sorted by score descending
/// (ties: lower predicate id, then input pair order), optionally truncated
/// to the `k_cap` best.
SceneGraph build_graph_no_constraint(std::span<const PredicateDistribution> dists,
                                     std::span<const ObjectInstance> objects,
                                     std::optional<std::size_t> k_cap = std::nullopt,
                                     std::int64_t frame_index = 0);

}  // namespace sga::scene
