#include "sga/scene/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "sga/util/errors.hpp"
#include "sga/util/rng.hpp"

namespace sga::scene {

DynamicsPreset parse_dynamics_preset(const std::string& name) {
  if (name == "identity") return DynamicsPreset::identity;
  if (name == "cyclic") return DynamicsPreset::cyclic;
  if (name == "mixed") return DynamicsPreset::mixed;
  if (name == "uniform") return DynamicsPreset::uniform;
  throw ConfigError("dynamics: unknown preset '" + name + "' (identity|cyclic|mixed|uniform)");
}

std::string to_string(DynamicsPreset preset) {
  switch (preset) {
    case DynamicsPreset::identity: return "identity";
    case DynamicsPreset::cyclic: return "cyclic";
    case DynamicsPreset::mixed: return "mixed";
    case DynamicsPreset::uniform: return "uniform";
  }
  return "unknown";
}

Matrix preset_transition(DynamicsPreset preset, std::size_t n) {
  Matrix m(n, std::vector<double>(n, 0.0));
  switch (preset) {
    case DynamicsPreset::identity:
      for (std::size_t p = 0; p < n; ++p) m[p][p] = 1.0;
      break;
    case DynamicsPreset::cyclic:
      for (std::size_t p = 0; p < n; ++p) m[p][(p + 1) % n] = 1.0;
      break;
    case DynamicsPreset::mixed: {
      const std::size_t persistent = n / 2;
      const std::size_t cycle = n - persistent;
      for (std::size_t p = 0; p < persistent; ++p) m[p][p] = 1.0;
      for (std::size_t k = 0; k < cycle; ++k) m[persistent + k][persistent + (k + 1) % cycle] = 1.0;
      break;
    }
    case DynamicsPreset::uniform:
      for (auto& row : m) std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(n));
      break;
  }
  return m;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synth." + msg); };
  if (num_predicates == 0) fail("num_predicates: must be positive");
  if (num_object_classes < 2) fail("num_object_classes: need an actor class and at least one object class");
  if (actor_category >= num_object_classes) fail("actor_category: out of range");
  if (min_frames == 0 || min_frames > max_frames) fail("min_frames/max_frames: need 1 <= min <= max");
  if (min_pairs == 0 || min_pairs > max_pairs) fail("min_pairs/max_pairs: need 1 <= min <= max");
  if (max_pairs > num_object_classes - 1) fail("max_pairs: exceeds the number of non-actor classes");
  if (max_frame_stride == 0) fail("max_frame_stride: must be positive");
  if (!transition.empty() && transition.size() != num_predicates) {
    fail("transition: expected a square matrix of size num_predicates");
  }
  for (std::size_t p = 0; p < transition.size(); ++p) {
    const auto& row = transition[p];
    if (row.size() != num_predicates) fail("transition: row " + std::to_string(p) + " has wrong length");
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail("transition: row " + std::to_string(p) + " has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("transition: row " + std::to_string(p) + " does not sum to 1");
  }
  if (!initial.empty()) {
    if (initial.size() != num_predicates) fail("initial: expected num_predicates entries");
    double sum = 0.0;
    for (double v : initial) {
      if (!(v >= 0.0)) fail("initial: negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("initial: does not sum to 1");
  }
}

namespace {

std::size_t sample_categorical(Rng& rng, const std::vector<double>& probs) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_nonzero = i;
    if (u < acc) return i;
  }
  return last_nonzero;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

BBox centered_box(double cx, double cy, double w, double h) {
  return {clamp01(cx - w / 2), clamp01(cy - h / 2), clamp01(cx + w / 2), clamp01(cy + h / 2)};
}

}  // namespace

SyntheticCorpus generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t P = cfg.num_predicates;
  const Matrix transition =
      cfg.transition.empty() ? preset_transition(DynamicsPreset::mixed, P) : cfg.transition;
  std::vector<double> initial = cfg.initial;
  if (initial.empty()) initial.assign(P, 1.0 / static_cast<double>(P));

  auto taxonomy = std::make_shared<Taxonomy>();
  for (std::size_t c = 0; c < cfg.num_object_classes; ++c) {
    taxonomy->object_classes.push_back(c == cfg.actor_category ? "person" : "object_" + std::to_string(c));
  }
  for (std::size_t p = 0; p < P; ++p) taxonomy->predicate_classes.push_back("predicate_" + std::to_string(p));

  std::vector<std::size_t> object_classes;
  for (std::size_t c = 0; c < cfg.num_object_classes; ++c) {
    if (c != cfg.actor_category) object_classes.push_back(c);
  }

  SyntheticCorpus out;
  out.transition = transition;
  out.initial = initial;
  out.corpus.taxonomy = taxonomy;
  Rng rng(seed);
  for (std::size_t v = 0; v < cfg.num_videos; ++v) {
    VideoAnnotation video;
    char id[32];
    std::snprintf(id, sizeof id, "synth_%05zu", v);
    video.video_id = id;
    video.taxonomy = taxonomy;

    const auto num_frames = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.min_frames), static_cast<std::int64_t>(cfg.max_frames)));
    const auto num_pairs = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.min_pairs), static_cast<std::int64_t>(cfg.max_pairs)));

    // Partial Fisher-Yates for distinct object categories.
    auto pool = object_classes;
    for (std::size_t i = 0; i < num_pairs; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                              static_cast<std::int64_t>(pool.size() - 1)));
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> categories(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(num_pairs));

    const double ax = rng.uniform(0.38, 0.62), ay = rng.uniform(0.38, 0.62);
    const double aw = rng.uniform(0.18, 0.26), ah = rng.uniform(0.25, 0.35);
    std::vector<double> ow(num_pairs), oh(num_pairs);
    for (std::size_t i = 0; i < num_pairs; ++i) {
      ow[i] = rng.uniform(0.08, 0.14);
      oh[i] = rng.uniform(0.08, 0.14);
    }

    std::vector<std::size_t> state(num_pairs);
    for (auto& s : state) s = sample_categorical(rng, initial);

    std::int64_t frame_index = rng.uniform_int(0, 5);
    for (std::size_t f = 0; f < num_frames; ++f) {
      if (f > 0) {
        for (auto& s : state) s = sample_categorical(rng, transition[s]);
        frame_index += rng.uniform_int(1, static_cast<std::int64_t>(cfg.max_frame_stride));
      }
      SceneGraph frame;
      frame.frame_index = frame_index;
      const double jx = ax + rng.uniform(-cfg.position_jitter, cfg.position_jitter);
      const double jy = ay + rng.uniform(-cfg.position_jitter, cfg.position_jitter);
      frame.objects.push_back({cfg.actor_category, centered_box(jx, jy, aw, ah)});
      for (std::size_t i = 0; i < num_pairs; ++i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(state[i]) / static_cast<double>(P);
        const double cx = jx + cfg.orbit_radius * std::cos(theta) + rng.uniform(-cfg.position_jitter, cfg.position_jitter);
        const double cy = jy + cfg.orbit_radius * std::sin(theta) + rng.uniform(-cfg.position_jitter, cfg.position_jitter);
        frame.objects.push_back({categories[i], centered_box(cx, cy, ow[i], oh[i])});
        frame.triplets.push_back({0, i + 1, state[i], std::nullopt});
      }
      video.frames.push_back(std::move(frame));
    }
    out.corpus.videos.push_back(std::move(video));
  }
  return out;
}

std::vector<double> propagate(const Matrix& transition, std::vector<double> marginal, std::size_t steps) {
  const std::size_t n = marginal.size();
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next[j] += marginal[i] * transition[i][j];
    marginal = std::move(next);
  }
  return marginal;
}

double persistence_hit_probability(const Matrix& transition, const std::vector<double>& marginal,
                                   std::size_t horizon) {
  double hit = 0.0;
  for (std::size_t p = 0; p < marginal.size(); ++p) {
    std::vector<double> start(marginal.size(), 0.0);
    start[p] = 1.0;
    hit += marginal[p] * propagate(transition, start, horizon)[p];
  }
  return hit;
}

}  // namespace sga::scene
