#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sga/engine/evaluate.hpp"
#include "sga/engine/train.hpp"
#include "sga/model/sga_model.hpp"
#include "sga/scene/synthetic.hpp"

namespace sga::io {

struct EvalSection {
  std::vector<double> context_fractions;
  std::vector<std::size_t> future_frames;
  std::vector<std::size_t> ks{10, 20, 50};
  std::vector<engine::Strategy> strategies{engine::Strategy::with_constraint, engine::Strategy::no_constraint};
  std::optional<std::uint64_t> seed;  // defaults to the global seed
  std::size_t samples = 1;
  bool count_future_only_objects = false;
  std::size_t threads = 0;

  /// Context fractions 0.3/0.5/0.7/0.9 when no regime is configured.
  [[nodiscard]] std::vector<engine::EvalRegime> regimes() const;
};

/// Every hyperparameter of a run. Taxonomy sizes come from the corpus.
struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  model::ModelConfig model;                     // encoder taxonomy sizes unset
  std::optional<dyn::SolverMethod> solver_method;  // unset: kind default
  std::optional<model::LossWeights> weights;    // unset: kind default
  engine::TrainConfig train;
  scene::DynamicsPreset synth_preset = scene::DynamicsPreset::mixed;
  scene::SynthConfig synth;
  EvalSection eval;

  /// Explicit seed, else SGA_SEED, else 0. Throws ConfigError on a
  /// malformed SGA_SEED.
  [[nodiscard]] std::uint64_t resolved_seed() const;
  [[nodiscard]] model::LossWeights resolved_weights() const;
  [[nodiscard]] std::uint64_t eval_seed() const;
  /// Model config with the corpus taxonomy sizes filled in.
  [[nodiscard]] model::ModelConfig model_for(std::size_t num_object_classes, std::size_t num_predicates) const;
  /// Training config with resolved weights and the training seed.
  [[nodiscard]] engine::TrainConfig train_for() const;
  [[nodiscard]] scene::SynthConfig synth_for() const;

  /// Throws ConfigError with the offending field.
  void validate() const;
};

ExperimentConfig default_config();
/// Throws IoError (unreadable) or ConfigError (syntax, unknown key, bad value).
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
/// Fully resolved TOML (defaults and the effective seed included).
std::string dump_config(const ExperimentConfig& cfg);

nlohmann::json model_config_json(const model::ModelConfig& cfg);
/// Throws CompatibilityError on missing or malformed fields.
model::ModelConfig model_config_from_json(const nlohmann::json& j);

/// Comma-separated lists as used by the CLI flags ("10,20,50").
std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& field);
std::vector<double> parse_double_list(const std::string& text, const std::string& field);

/// Writes via a temporary sibling and rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
/// Throws IoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace sga::io
