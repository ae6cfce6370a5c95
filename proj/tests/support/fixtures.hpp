#pragma once

#include "sga/model/sga_model.hpp"
#include "sga/scene/synthetic.hpp"

namespace sga::testing {

inline scene::Corpus small_corpus(scene::DynamicsPreset preset, std::size_t videos, std::uint64_t seed,
                                  std::size_t min_frames = 6, std::size_t max_frames = 8) {
  scene::SynthConfig cfg;
  cfg.num_object_classes = 6;
  cfg.num_predicates = 5;
  cfg.num_videos = videos;
  cfg.min_frames = min_frames;
  cfg.max_frames = max_frames;
  cfg.min_pairs = 2;
  cfg.max_pairs = 3;
  cfg.transition = scene::preset_transition(preset, cfg.num_predicates);
  return scene::generate_synthetic(cfg, seed).corpus;
}

/// Narrow dimensions so double-precision pipelines stay cheap.
inline model::ModelConfig tiny_config(model::ModelKind kind, std::size_t classes = 6, std::size_t predicates = 5) {
  auto cfg = model::ModelConfig::defaults(kind, classes, predicates);
  cfg.encoder.d_obj_embed = 6;
  cfg.encoder.d_proj = 8;
  cfg.encoder.d_sem = 4;
  cfg.encoder.ff_obj = 12;
  cfg.encoder.ff_rel = 16;
  cfg.field_hidden = 10;
  cfg.head_hidden = 10;
  cfg.solver.h = 1.0 / 4;
  return cfg;
}

}  // namespace sga::testing
