#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sga/nn/layers.hpp"
#include "sga/scene/types.hpp"

namespace sga::model {

using ad::BasicTensor;
using scene::BBox;

inline constexpr std::size_t kBoxGeometry = 8;
// Union-box geometry (8) + center offset (2) + size difference (2).
inline constexpr std::size_t kUnionGeometry = 12;

/// Two objects of one category in the same frame: category-based tracking
/// cannot tell them apart.
class TrackingError : public scene::ValidationError {
 public:
  using scene::ValidationError::ValidationError;
};

struct EncoderConfig {
  std::size_t num_object_classes = 0;
  std::size_t num_predicates = 0;
  std::size_t actor_category = 0;
  std::size_t d_obj_embed = 24;
  std::size_t d_proj = 32;
  std::size_t d_sem = 16;
  std::size_t depth = 1;
  std::size_t heads = 1;
  std::size_t ff_obj = 64;
  std::size_t ff_rel = 256;
  std::size_t max_positions = 256;

  [[nodiscard]] std::size_t d_obj() const { return d_obj_embed + kBoxGeometry; }
  [[nodiscard]] std::size_t d_rel() const { return 3 * d_proj + 2 * d_sem; }
  /// Throws ConfigError.
  void validate() const;
};

struct PairRow {
  std::size_t frame = 0;          // position of the frame within the video
  std::size_t subject_row = 0;    // rows into VideoInputs object arrays
  std::size_t object_row = 0;
  std::size_t track = 0;          // object category; identifies the pair across frames
  std::size_t subject_local = 0;  // frame-local object indices
  std::size_t object_local = 0;
  std::vector<std::size_t> positives;  // annotated predicates of this pair
  std::array<float, kUnionGeometry> union_geometry{};
};

/// Index bookkeeping for one video (or a prefix of it); no learnable state.
/// Objects are tracked by category; pairs are (actor, other object).
struct VideoInputs {
  std::size_t num_frames = 0;
  std::vector<std::size_t> obj_category;
  std::vector<std::size_t> obj_frame;
  std::vector<std::array<float, kBoxGeometry>> obj_geometry;
  std::vector<BBox> obj_box;
  std::vector<PairRow> pairs;
  std::vector<std::size_t> frame_object_count;
  std::vector<std::vector<std::size_t>> frame_pairs;  // pair rows per frame

  /// Pair row of `track` at `frame`, or npos.
  [[nodiscard]] std::size_t find_pair(std::size_t frame, std::size_t track) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  [[nodiscard]] std::vector<std::size_t> pair_frames() const;
  [[nodiscard]] std::vector<std::size_t> pair_tracks() const;
};

/// Uses the first `num_frames` frames (all when 0). Throws TrackingError on
/// duplicate categories within a frame.
VideoInputs prepare_video(const scene::VideoAnnotation& video, std::size_t actor_category,
                          std::size_t num_frames = 0);

std::array<float, kUnionGeometry> union_geometry(const BBox& subject, const BBox& object);

/// Object, spatial and temporal encoders plus the pair-representation maps.
template <typename T>
class RelationEncoder {
 public:
  RelationEncoder() = default;
  RelationEncoder(nn::ParameterStore<T>& store, const EncoderConfig& cfg, Rng& rng);

  /// Category embedding concatenated with box geometry: [objects, d_obj].
  [[nodiscard]] BasicTensor<T> object_features(const VideoInputs& in) const;
  /// Attention over each object track, causal in time.
  [[nodiscard]] BasicTensor<T> encode_objects(const VideoInputs& in, const BasicTensor<T>& features) const;
  /// [W1 v_i | W2 v_j | W3 u_ij | S_i | S_j] per pair row: [pairs, d_rel].
  [[nodiscard]] BasicTensor<T> build_pairs(const VideoInputs& in, const BasicTensor<T>& objects) const;
  /// Attention within each frame (rows with equal `frame` ids).
  [[nodiscard]] BasicTensor<T> spatial_encode(const BasicTensor<T>& rels,
                                              const std::vector<std::size_t>& frame) const;
  /// Causal attention along each track after adding frame-position embeddings.
  [[nodiscard]] BasicTensor<T> temporal_encode(const BasicTensor<T>& rels, const std::vector<std::size_t>& track,
                                               const std::vector<std::size_t>& position) const;

  [[nodiscard]] const EncoderConfig& config() const { return cfg_; }

  nn::Embedding<T> object_embedding;
  nn::Embedding<T> semantic_embedding;
  nn::Embedding<T> position_embedding;
  nn::Linear<T> w_subject, w_object, w_union;
  nn::EncoderStack<T> object_encoder, spatial_encoder, temporal_encoder;

 private:
  EncoderConfig cfg_;
};

template <typename T>
struct Encoded {
  BasicTensor<T> objects;   // object encoder output
  BasicTensor<T> pairs;     // pair representations before attention
  BasicTensor<T> spatial;   // spatial encoder output
  BasicTensor<T> temporal;  // temporal encoder output (undefined when skipped)
};

template <typename T>
Encoded<T> encode_video(const RelationEncoder<T>& enc, const VideoInputs& in, bool temporal = true);

}  // namespace sga::model
