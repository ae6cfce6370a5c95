#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sga::scene {

/// Normalized (x1, y1, x2, y2) box in [0,1]^4.
using BBox = std::array<float, 4>;

struct ObjectInstance {
  std::size_t category = 0;
  BBox bbox{};

  bool operator==(const ObjectInstance&) const = default;
};

struct RelationshipTriplet {
  std::size_t subject_idx = 0;
  std::size_t object_idx = 0;
  std::size_t predicate = 0;
  std::optional<float> score;

  bool operator==(const RelationshipTriplet&) const = default;
};

struct SceneGraph {
  std::int64_t frame_index = 0;
  std::vector<ObjectInstance> objects;
  std::vector<RelationshipTriplet> triplets;

  bool operator==(const SceneGraph&) const = default;
};

struct Taxonomy {
  std::vector<std::string> object_classes;
  std::vector<std::string> predicate_classes;

  [[nodiscard]] std::size_t num_object_classes() const { return object_classes.size(); }
  [[nodiscard]] std::size_t num_predicates() const { return predicate_classes.size(); }
  bool operator==(const Taxonomy&) const = default;
};

struct VideoAnnotation {
  std::string video_id;
  std::vector<SceneGraph> frames;
  std::shared_ptr<const Taxonomy> taxonomy;

  bool operator==(const VideoAnnotation& other) const;
};

struct Corpus {
  std::shared_ptr<const Taxonomy> taxonomy;
  std::vector<VideoAnnotation> videos;

  bool operator==(const Corpus& other) const;
};

/// Per-pair scores over the predicate classes.
struct PredicateDistribution {
  std::size_t subject_idx = 0;
  std::size_t object_idx = 0;
  std::vector<float> scores;

  /// Scores rescaled to sum to 1 (requires nonnegative scores with a positive sum).
  [[nodiscard]] PredicateDistribution normalized() const;
};

/// An annotation or construction invariant does not hold.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed corpus document; message carries line/field context.
class CorpusParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (x1, y1, x2, y2, w, h, cx, cy).
std::array<float, 8> box_geometry(const BBox& box);

/// Smallest box enclosing both.
BBox union_box(const BBox& a, const BBox& b);

/// Checks box bounds, category and predicate ranges, and triplet indices.
/// `where` prefixes error messages.
void validate_frame(const SceneGraph& frame, const Taxonomy& taxonomy, const std::string& where);

}  // namespace sga::scene
