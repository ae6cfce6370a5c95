#include "sga/model/encoders.hpp"

#include <algorithm>
#include <string>

#include "sga/util/errors.hpp"

namespace sga::model {

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("encoder." + msg); };
  if (num_object_classes == 0) fail("num_object_classes: must be positive");
  if (num_predicates == 0) fail("num_predicates: must be positive");
  if (actor_category >= num_object_classes) fail("actor_category: out of range");
  if (d_obj_embed == 0 || d_proj == 0 || d_sem == 0) fail("d_obj_embed/d_proj/d_sem: must be positive");
  if (depth == 0) fail("depth: must be positive");
  if (heads != 1) fail("heads: only single-head attention is implemented");
  if (ff_obj == 0 || ff_rel == 0) fail("ff_obj/ff_rel: must be positive");
  if (max_positions == 0) fail("max_positions: must be positive");
}

std::size_t VideoInputs::find_pair(std::size_t frame, std::size_t track) const {
  for (std::size_t r : frame_pairs.at(frame)) {
    if (pairs[r].track == track) return r;
  }
  return npos;
}

std::vector<std::size_t> VideoInputs::pair_frames() const {
  std::vector<std::size_t> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.frame);
  return out;
}

std::vector<std::size_t> VideoInputs::pair_tracks() const {
  std::vector<std::size_t> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.track);
  return out;
}

std::array<float, kUnionGeometry> union_geometry(const BBox& subject, const BBox& object) {
  const auto u = scene::box_geometry(scene::union_box(subject, object));
  const auto s = scene::box_geometry(subject);
  const auto o = scene::box_geometry(object);
  std::array<float, kUnionGeometry> out{};
  std::copy(u.begin(), u.end(), out.begin());
  out[8] = o[6] - s[6];
  out[9] = o[7] - s[7];
  out[10] = o[4] - s[4];
  out[11] = o[5] - s[5];
  return out;
}

VideoInputs prepare_video(const scene::VideoAnnotation& video, std::size_t actor_category,
                          std::size_t num_frames) {
  VideoInputs in;
  in.num_frames = num_frames == 0 ? video.frames.size() : std::min(num_frames, video.frames.size());
  in.frame_object_count.resize(in.num_frames);
  in.frame_pairs.resize(in.num_frames);
  for (std::size_t f = 0; f < in.num_frames; ++f) {
    const auto& frame = video.frames[f];
    const std::size_t first_row = in.obj_category.size();
    std::size_t actor_local = VideoInputs::npos;
    std::vector<bool> seen;
    for (std::size_t i = 0; i < frame.objects.size(); ++i) {
      const auto& o = frame.objects[i];
      if (o.category >= seen.size()) seen.resize(o.category + 1, false);
      if (seen[o.category]) {
        throw TrackingError("video '" + video.video_id + "' frame " + std::to_string(frame.frame_index) +
                            ": category " + std::to_string(o.category) +
                            " appears twice; objects are tracked by category");
      }
      seen[o.category] = true;
      if (o.category == actor_category) actor_local = i;
      in.obj_category.push_back(o.category);
      in.obj_frame.push_back(f);
      in.obj_geometry.push_back(scene::box_geometry(o.bbox));
      in.obj_box.push_back(o.bbox);
    }
    in.frame_object_count[f] = frame.objects.size();
    if (actor_local == VideoInputs::npos) continue;
    for (std::size_t j = 0; j < frame.objects.size(); ++j) {
      if (j == actor_local) continue;
      PairRow row;
      row.frame = f;
      row.subject_row = first_row + actor_local;
      row.object_row = first_row + j;
      row.track = frame.objects[j].category;
      row.subject_local = actor_local;
      row.object_local = j;
      for (const auto& t : frame.triplets) {
        if (t.subject_idx == actor_local && t.object_idx == j) row.positives.push_back(t.predicate);
      }
      std::sort(row.positives.begin(), row.positives.end());
      row.positives.erase(std::unique(row.positives.begin(), row.positives.end()), row.positives.end());
      row.union_geometry = union_geometry(frame.objects[actor_local].bbox, frame.objects[j].bbox);
      in.frame_pairs[f].push_back(in.pairs.size());
      in.pairs.push_back(std::move(row));
    }
  }
  return in;
}

template <typename T>
RelationEncoder<T>::RelationEncoder(nn::ParameterStore<T>& store, const EncoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  const std::size_t d_obj = cfg.d_obj(), d_rel = cfg.d_rel();
  object_embedding = nn::Embedding<T>(store, "enc.object_embedding", cfg.num_object_classes, cfg.d_obj_embed, rng);
  semantic_embedding = nn::Embedding<T>(store, "enc.semantic_embedding", cfg.num_object_classes, cfg.d_sem, rng);
  position_embedding = nn::Embedding<T>(store, "enc.position_embedding", cfg.max_positions, d_rel, rng);
  object_encoder = nn::EncoderStack<T>(store, "enc.object", d_obj, cfg.ff_obj, cfg.depth, rng);
  w_subject = nn::Linear<T>(store, "enc.w_subject", d_obj, cfg.d_proj, rng);
  w_object = nn::Linear<T>(store, "enc.w_object", d_obj, cfg.d_proj, rng);
  w_union = nn::Linear<T>(store, "enc.w_union", kUnionGeometry, cfg.d_proj, rng);
  spatial_encoder = nn::EncoderStack<T>(store, "enc.spatial", d_rel, cfg.ff_rel, cfg.depth, rng);
  temporal_encoder = nn::EncoderStack<T>(store, "enc.temporal", d_rel, cfg.ff_rel, cfg.depth, rng);
}

template <typename T>
BasicTensor<T> RelationEncoder<T>::object_features(const VideoInputs& in) const {
  const std::size_t n = in.obj_category.size();
  std::vector<T> geom;
  geom.reserve(n * kBoxGeometry);
  for (const auto& g : in.obj_geometry) geom.insert(geom.end(), g.begin(), g.end());
  auto geometry = BasicTensor<T>::from({n, kBoxGeometry}, std::move(geom));
  return ad::concat<T>({object_embedding(in.obj_category), geometry}, 1);
}

template <typename T>
BasicTensor<T> RelationEncoder<T>::encode_objects(const VideoInputs& in, const BasicTensor<T>& features) const {
  auto mask = nn::group_mask<T>(in.obj_category, in.obj_frame, true);
  return object_encoder(features, &mask);
}

template <typename T>
BasicTensor<T> RelationEncoder<T>::build_pairs(const VideoInputs& in, const BasicTensor<T>& objects) const {
  const std::size_t n = in.pairs.size();
  std::vector<std::size_t> subj, obj, subj_cat, obj_cat;
  std::vector<T> geom;
  geom.reserve(n * kUnionGeometry);
  for (const auto& p : in.pairs) {
    subj.push_back(p.subject_row);
    obj.push_back(p.object_row);
    subj_cat.push_back(in.obj_category[p.subject_row]);
    obj_cat.push_back(in.obj_category[p.object_row]);
    geom.insert(geom.end(), p.union_geometry.begin(), p.union_geometry.end());
  }
  if (n == 0) return BasicTensor<T>::zeros({0, cfg_.d_rel()});
  auto u = BasicTensor<T>::from({n, kUnionGeometry}, std::move(geom));
  return ad::concat<T>({w_subject(ad::gather_rows(objects, subj)), w_object(ad::gather_rows(objects, obj)),
                        w_union(u), semantic_embedding(subj_cat), semantic_embedding(obj_cat)},
                       1);
}

template <typename T>
BasicTensor<T> RelationEncoder<T>::spatial_encode(const BasicTensor<T>& rels,
                                                  const std::vector<std::size_t>& frame) const {
  if (rels.rows() == 0) return rels;
  auto mask = nn::group_mask<T>(frame, std::vector<std::size_t>(frame.size(), 0), false);
  return spatial_encoder(rels, &mask);
}

template <typename T>
BasicTensor<T> RelationEncoder<T>::temporal_encode(const BasicTensor<T>& rels, const std::vector<std::size_t>& track,
                                                   const std::vector<std::size_t>& position) const {
  if (rels.rows() == 0) throw ad::ContractError("temporal_encode: empty history");
  for (std::size_t p : position) {
    if (p >= cfg_.max_positions) {
      throw ConfigError("encoder.max_positions: video has more than " + std::to_string(cfg_.max_positions) +
                        " frames");
    }
  }
  auto mask = nn::group_mask<T>(track, position, true);
  return temporal_encoder(ad::add(rels, position_embedding(position)), &mask);
}

template <typename T>
Encoded<T> encode_video(const RelationEncoder<T>& enc, const VideoInputs& in, bool temporal) {
  Encoded<T> out;
  out.objects = enc.encode_objects(in, enc.object_features(in));
  out.pairs = enc.build_pairs(in, out.objects);
  out.spatial = enc.spatial_encode(out.pairs, in.pair_frames());
  if (temporal && !in.pairs.empty()) out.temporal = enc.temporal_encode(out.spatial, in.pair_tracks(), in.pair_frames());
  return out;
}

template class RelationEncoder<float>;
template class RelationEncoder<double>;
template Encoded<float> encode_video(const RelationEncoder<float>&, const VideoInputs&, bool);
template Encoded<double> encode_video(const RelationEncoder<double>&, const VideoInputs&, bool);

}  // namespace sga::model
