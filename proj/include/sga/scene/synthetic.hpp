#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sga/scene/types.hpp"

namespace sga::scene {

using Matrix = std::vector<std::vector<double>>;

enum class DynamicsPreset {
  identity,  // every predicate absorbing
  cyclic,    // p -> p+1 mod |P|
  mixed,     // lower half absorbing, upper half cycles among itself
  uniform,   // every row uniform
};

DynamicsPreset parse_dynamics_preset(const std::string& name);
std::string to_string(DynamicsPreset preset);
Matrix preset_transition(DynamicsPreset preset, std::size_t num_predicates);

/// Synthetic single-actor scenes. Every video has one actor (category
/// `actor_category`) and a handful of uniquely categorized objects; each
/// (actor, object) pair carries one predicate per frame that evolves as a
/// Markov chain under `transition`. The predicate is observable through
/// geometry: the object sits at angle 2*pi*p/|P| around the actor.
struct SynthConfig {
  std::size_t num_object_classes = 8;
  std::size_t num_predicates = 10;
  std::size_t num_videos = 50;
  std::size_t min_frames = 8;
  std::size_t max_frames = 12;
  std::size_t min_pairs = 2;
  std::size_t max_pairs = 4;
  std::size_t actor_category = 0;
  std::size_t max_frame_stride = 1;
  double position_jitter = 0.01;
  double orbit_radius = 0.25;
  Matrix transition;            // |P| x |P|, rows sum to 1; empty = mixed preset
  std::vector<double> initial;  // empty = uniform

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  Matrix transition;
  std::vector<double> initial;
};

SyntheticCorpus generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

/// Probability that a chain observed with marginal `marginal` shows the same
/// predicate `horizon` steps later: sum_p marginal[p] * (M^horizon)[p][p].
double persistence_hit_probability(const Matrix& transition, const std::vector<double>& marginal,
                                   std::size_t horizon);

/// marginal * M^steps.
std::vector<double> propagate(const Matrix& transition, std::vector<double> marginal, std::size_t steps);

}  // namespace sga::scene
