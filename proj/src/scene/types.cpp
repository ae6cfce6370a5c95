#include "sga/scene/types.hpp"

#include <algorithm>
#include <cmath>

namespace sga::scene {

namespace {

bool same_taxonomy(const std::shared_ptr<const Taxonomy>& a, const std::shared_ptr<const Taxonomy>& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

}  // namespace

bool VideoAnnotation::operator==(const VideoAnnotation& other) const {
  return video_id == other.video_id && frames == other.frames && same_taxonomy(taxonomy, other.taxonomy);
}

bool Corpus::operator==(const Corpus& other) const {
  return same_taxonomy(taxonomy, other.taxonomy) && videos == other.videos;
}

PredicateDistribution PredicateDistribution::normalized() const {
  double sum = 0.0;
  for (float s : scores) {
    if (!(s >= 0.f) || !std::isfinite(s)) {
      throw ValidationError("normalized: scores must be finite and nonnegative");
    }
    sum += s;
  }
  if (sum <= 0.0) throw ValidationError("normalized: scores sum to zero");
  PredicateDistribution out = *this;
  for (auto& s : out.scores) s = static_cast<float>(s / sum);
  return out;
}

std::array<float, 8> box_geometry(const BBox& b) {
  const float w = b[2] - b[0];
  const float h = b[3] - b[1];
  return {b[0], b[1], b[2], b[3], w, h, b[0] + 0.5f * w, b[1] + 0.5f * h};
}

BBox union_box(const BBox& a, const BBox& b) {
  return {std::min(a[0], b[0]), std::min(a[1], b[1]), std::max(a[2], b[2]), std::max(a[3], b[3])};
}

void validate_frame(const SceneGraph& frame, const Taxonomy& taxonomy, const std::string& where) {
  for (std::size_t i = 0; i < frame.objects.size(); ++i) {
    const auto& o = frame.objects[i];
    const std::string at = where + " object " + std::to_string(i);
    if (o.category >= taxonomy.num_object_classes()) {
      throw ValidationError(at + ": category " + std::to_string(o.category) + " >= " +
                            std::to_string(taxonomy.num_object_classes()));
    }
    const auto& b = o.bbox;
    for (float v : b) {
      if (!std::isfinite(v)) throw ValidationError(at + ": non-finite bbox coordinate");
    }
    if (!(0.f <= b[0] && b[0] <= b[2] && b[2] <= 1.f && 0.f <= b[1] && b[1] <= b[3] && b[3] <= 1.f)) {
      throw ValidationError(at + ": bbox violates 0 <= x1 <= x2 <= 1, 0 <= y1 <= y2 <= 1");
    }
  }
  for (std::size_t k = 0; k < frame.triplets.size(); ++k) {
    const auto& t = frame.triplets[k];
    const std::string at = where + " relationship " + std::to_string(k);
    if (t.subject_idx >= frame.objects.size() || t.object_idx >= frame.objects.size()) {
      throw ValidationError(at + ": object index out of range");
    }
    if (t.subject_idx == t.object_idx) throw ValidationError(at + ": subject and object coincide");
    if (t.predicate >= taxonomy.num_predicates()) {
      throw ValidationError(at + ": predicate " + std::to_string(t.predicate) + " >= " +
                            std::to_string(taxonomy.num_predicates()));
    }
  }
}

}  // namespace sga::scene
