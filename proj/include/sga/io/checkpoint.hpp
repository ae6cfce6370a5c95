#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "sga/engine/train.hpp"
#include "sga/model/sga_model.hpp"
#include "sga/scene/types.hpp"

namespace sga::io {

/// File layout: 8-byte magic "SGACKPT1", uint64 little-endian header
/// length, JSON header, then the tensor body as little-endian float32.
inline constexpr char kCheckpointMagic[8] = {'S', 'G', 'A', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

struct Checkpoint {
  model::ModelConfig model;
  scene::Taxonomy taxonomy;
  std::size_t epochs_done = 0;
  std::uint64_t adam_step = 0;
  std::vector<NamedTensor> tensors;  // parameters, then "adam.m/<name>", "adam.v/<name>"
};

/// Stable hash of the model config JSON, hex encoded.
std::string config_hash(const model::ModelConfig& cfg);

Checkpoint make_checkpoint(const model::SgaModel<float>& m, const scene::Taxonomy& taxonomy,
                           const engine::TrainState& state);

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws CompatibilityError on a bad magic, version or manifest.
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws IoError when unreadable, CompatibilityError when malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct RestoredModel {
  std::unique_ptr<model::SgaModel<float>> model;
  engine::TrainState state;
};

/// Rebuilds the model and optimizer state; parameter names and shapes must
/// match the architecture exactly.
RestoredModel restore(const Checkpoint& ckpt);

/// CompatibilityError unless the corpus taxonomy equals the checkpoint's.
void check_taxonomy(const Checkpoint& ckpt, const scene::Taxonomy& corpus_taxonomy);

}  // namespace sga::io
