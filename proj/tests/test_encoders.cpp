#include <algorithm>
#include <vector>

#include "doctest.h"
#include "sga/model/encoders.hpp"

using namespace sga;
using namespace sga::model;
using ad::Tensor;
using ad::Tensor64;

namespace {

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.num_object_classes = 5;
  cfg.num_predicates = 4;
  cfg.d_obj_embed = 6;
  cfg.d_proj = 4;
  cfg.d_sem = 3;
  cfg.ff_obj = 8;
  cfg.ff_rel = 10;
  cfg.max_positions = 16;
  return cfg;
}

scene::SceneGraph frame_with(std::vector<std::pair<std::size_t, scene::BBox>> objs, std::int64_t index = 0) {
  scene::SceneGraph g;
  g.frame_index = index;
  for (auto& [cat, box] : objs) g.objects.push_back({cat, box});
  for (std::size_t j = 1; j < g.objects.size(); ++j) g.triplets.push_back({0, j, j % 4, std::nullopt});
  return g;
}

scene::VideoAnnotation video_of(std::vector<scene::SceneGraph> frames) {
  scene::VideoAnnotation v;
  v.video_id = "v";
  for (std::size_t f = 0; f < frames.size(); ++f) frames[f].frame_index = static_cast<std::int64_t>(f);
  v.frames = std::move(frames);
  return v;
}

Tensor random_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
  return Tensor::from({rows, cols}, v);
}

bool rows_equal(const Tensor& a, std::size_t ra, const Tensor& b, std::size_t rb) {
  for (std::size_t c = 0; c < a.cols(); ++c) {
    if (a.at(ra, c) != b.at(rb, c)) return false;
  }
  return true;
}

void zero(Tensor t) {
  auto d = t.mutable_data();
  std::fill(d.begin(), d.end(), 0.f);
}

const scene::BBox kActor{0.3f, 0.3f, 0.5f, 0.6f};
const scene::BBox kCup{0.55f, 0.4f, 0.65f, 0.5f};
const scene::BBox kBook{0.1f, 0.2f, 0.2f, 0.3f};

}  // namespace

TEST_CASE("prepare_video pairs the actor with every other object") {
  auto v = video_of({frame_with({{0, kActor}, {2, kCup}, {3, kBook}})});
  auto in = prepare_video(v, 0);
  REQUIRE(in.pairs.size() == 2);
  CHECK(in.pairs[0].track == 2);
  CHECK(in.pairs[1].track == 3);
  CHECK(in.pairs[0].positives == std::vector<std::size_t>{1});
  CHECK(in.frame_object_count[0] == 3);

  auto lonely = prepare_video(video_of({frame_with({{0, kActor}})}), 0);
  CHECK(lonely.pairs.empty());
  CHECK_THROWS_AS(prepare_video(video_of({frame_with({{0, kActor}, {2, kCup}, {2, kBook}})}), 0), TrackingError);
}

TEST_CASE("encode_objects preserves shapes and symmetric inputs") {
  Rng rng(1);
  nn::ParameterStore<float> store;
  RelationEncoder<float> enc(store, small_config(), rng);
  auto single = prepare_video(video_of({frame_with({{0, kActor}, {2, kCup}})}), 0);
  auto feats = enc.object_features(single);
  auto out = enc.encode_objects(single, feats);
  CHECK(out.shape() == feats.shape());
  CHECK(out.cols() == small_config().d_obj());

  auto f = frame_with({{0, kActor}, {2, kCup}});
  auto twin = prepare_video(video_of({f, f}), 0);
  auto twin_out = enc.encode_objects(twin, enc.object_features(twin));
  CHECK(rows_equal(twin_out, 0, twin_out, 2));
  CHECK(rows_equal(twin_out, 1, twin_out, 3));
}

TEST_CASE("zeroed output projections make the object encoder the identity") {
  Rng rng(2);
  nn::ParameterStore<float> store;
  RelationEncoder<float> enc(store, small_config(), rng);
  for (auto& layer : enc.object_encoder.layers) {
    zero(layer.output.weight);
    zero(layer.output.bias);
    zero(layer.ff_out.weight);
    zero(layer.ff_out.bias);
  }
  auto in = prepare_video(video_of({frame_with({{0, kActor}, {2, kCup}}), frame_with({{0, kBook}, {4, kCup}})}), 0);
  auto feats = enc.object_features(in);
  CHECK(enc.encode_objects(in, feats).to_vector() == feats.to_vector());
  // Geometry columns follow the embedding.
  const auto g = scene::box_geometry(kCup);
  for (std::size_t k = 0; k < kBoxGeometry; ++k) CHECK(feats.at(1, 6 + k) == g[k]);
}

TEST_CASE("pair representations follow the concatenation layout") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    EncoderConfig cfg = small_config();
    cfg.d_proj = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
    cfg.d_sem = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
    nn::ParameterStore<float> store;
    RelationEncoder<float> enc(store, cfg, rng);
    auto in = prepare_video(video_of({frame_with({{0, kActor}, {2, kCup}, {3, kBook}})}), 0);
    auto objs = enc.encode_objects(in, enc.object_features(in));
    auto pairs = enc.build_pairs(in, objs);
    CHECK(pairs.rows() == 2);
    CHECK(pairs.cols() == 3 * cfg.d_proj + 2 * cfg.d_sem);
    CHECK(cfg.d_rel() == 3 * cfg.d_proj + 2 * cfg.d_sem);
    // The trailing block is the object category's semantic embedding.
    const std::size_t off = 3 * cfg.d_proj + cfg.d_sem;
    for (std::size_t k = 0; k < cfg.d_sem; ++k) CHECK(pairs.at(1, off + k) == enc.semantic_embedding.table.at(3, k));
  }
  Rng rng(3);
  nn::ParameterStore<float> store;
  RelationEncoder<float> enc(store, small_config(), rng);
  auto f = frame_with({{0, kActor}, {2, kCup}});
  auto in = prepare_video(video_of({f, f}), 0);
  auto pairs = enc.build_pairs(in, enc.encode_objects(in, enc.object_features(in)));
  CHECK(rows_equal(pairs, 0, pairs, 1));
}

TEST_CASE("spatial encoder is permutation equivariant within frames") {
  Rng rng(4);
  nn::ParameterStore<float> store;
  auto cfg = small_config();
  RelationEncoder<float> enc(store, cfg, rng);
  const std::size_t d = cfg.d_rel();

  auto one = random_rows(rng, 1, d);
  auto w = enc.spatial_encoder.layers[0].attention_weights(one);
  CHECK(w.item() == 1.f);

  auto x = random_rows(rng, 4, d);
  std::vector<std::size_t> frames(4, 0);
  auto y = enc.spatial_encode(x, frames);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  auto yp = enc.spatial_encode(ad::gather_rows(x, perm), frames);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t c = 0; c < d; ++c) CHECK(yp.at(i, c) == doctest::Approx(y.at(perm[i], c)).epsilon(1e-5));
  }

  // Frames never mix: changing frame 1's rows leaves frame 0's outputs alone.
  std::vector<std::size_t> two_frames{0, 0, 1, 1};
  auto base = enc.spatial_encode(x, two_frames);
  auto x2 = x.clone();
  x2.mutable_data()[2 * d] += 1.f;
  x2.mutable_data()[3 * d + 1] -= 1.f;
  auto changed = enc.spatial_encode(x2, two_frames);
  CHECK(rows_equal(base, 0, changed, 0));
  CHECK(rows_equal(base, 1, changed, 1));
  CHECK_FALSE(rows_equal(base, 2, changed, 2));
}

TEST_CASE("temporal encoder is causal along each track") {
  Rng rng(5);
  nn::ParameterStore<float> store;
  auto cfg = small_config();
  RelationEncoder<float> enc(store, cfg, rng);
  const std::size_t d = cfg.d_rel();
  for (std::size_t len : {1, 2, 5, 9}) {
    auto x = random_rows(rng, len, d);
    std::vector<std::size_t> track(len, 0), pos(len);
    for (std::size_t t = 0; t < len; ++t) pos[t] = t;
    auto y = enc.temporal_encode(x, track, pos);
    CHECK(y.shape() == x.shape());
    if (len < 2) continue;
    for (std::size_t t = 0; t + 1 < len; ++t) {
      auto x2 = x.clone();
      for (std::size_t c = 0; c < d; ++c) x2.mutable_data()[(t + 1) * d + c] += 0.5f;
      auto y2 = enc.temporal_encode(x2, track, pos);
      for (std::size_t s = 0; s <= t; ++s) CHECK(rows_equal(y, s, y2, s));
      CHECK_FALSE(rows_equal(y, t + 1, y2, t + 1));
    }
  }
  CHECK_THROWS_AS((void)enc.temporal_encode(Tensor::zeros({0, d}), {}, {}), ad::ContractError);
}

TEST_CASE("encoding a prefix equals the prefix of the full encoding") {
  Rng rng(6);
  nn::ParameterStore<float> store;
  RelationEncoder<float> enc(store, small_config(), rng);
  std::vector<scene::SceneGraph> frames;
  for (int f = 0; f < 5; ++f) {
    scene::BBox moved = kCup;
    moved[0] += 0.05f * f;
    moved[2] += 0.05f * f;
    frames.push_back(frame_with({{0, kActor}, {2, moved}, {3, kBook}}));
  }
  auto v = video_of(frames);
  auto full = encode_video(enc, prepare_video(v, 0));
  auto prefix = encode_video(enc, prepare_video(v, 0, 3));
  REQUIRE(prefix.temporal.rows() == 6);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < full.temporal.cols(); ++c) {
      CHECK(prefix.temporal.at(r, c) == doctest::Approx(full.temporal.at(r, c)).epsilon(1e-6));
    }
  }
  // Deterministic for fixed parameters.
  CHECK(encode_video(enc, prepare_video(v, 0)).temporal.to_vector() == full.temporal.to_vector());
}
