#include <algorithm>
#include <cmath>
#include <tuple>

#include "doctest.h"
#include "sga/scene/corpus_io.hpp"
#include "sga/scene/graph_building.hpp"
#include "sga/scene/synthetic.hpp"
#include "sga/util/errors.hpp"
#include "sga/util/rng.hpp"

using namespace sga;
using namespace sga::scene;

namespace {

const char* kThreeFrameFixture = R"({
  "object_classes": ["person", "cup"],
  "predicate_classes": ["holding"],
  "videos": [
    {"id": "v1", "frames": [
      {"frame": 0, "objects": [{"category": 0, "bbox": [0.1, 0.1, 0.4, 0.6]},
                               {"category": 1, "bbox": [0.3, 0.4, 0.5, 0.5]}],
       "relationships": [{"subject": 0, "object": 1, "predicate": 0}]},
      {"frame": 4, "objects": [{"category": 0, "bbox": [0.1, 0.1, 0.4, 0.6]},
                               {"category": 1, "bbox": [0.3, 0.4, 0.5, 0.5]}],
       "relationships": [{"subject": 0, "object": 1, "predicate": 0}]},
      {"frame": 9, "objects": [{"category": 0, "bbox": [0.1, 0.1, 0.4, 0.6]},
                               {"category": 1, "bbox": [0.3, 0.4, 0.5, 0.5]}],
       "relationships": []}
    ]}
  ]
})";

std::vector<ObjectInstance> objects(std::size_t n) {
  std::vector<ObjectInstance> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].category = i;
  return out;
}

SynthConfig preset_config(DynamicsPreset preset) {
  SynthConfig cfg;
  cfg.transition = preset_transition(preset, cfg.num_predicates);
  return cfg;
}

}  // namespace

TEST_CASE("videos with fewer than three frames are dropped") {
  const char* doc = R"({"object_classes": ["a", "b"], "predicate_classes": ["p"], "videos": [
    {"id": "short", "frames": [
      {"frame": 0, "objects": [], "relationships": []},
      {"frame": 1, "objects": [], "relationships": []}]}]})";
  CHECK(parse_corpus(doc).videos.empty());
}

TEST_CASE("empty document is a parse error") {
  CHECK_THROWS_AS(parse_corpus(""), CorpusParseError);
}

TEST_CASE("three-frame fixture keeps its triplets") {
  auto corpus = parse_corpus(kThreeFrameFixture);
  REQUIRE(corpus.videos.size() == 1);
  const auto& v = corpus.videos[0];
  CHECK(v.frames.size() == 3);
  std::size_t triplets = 0;
  for (const auto& f : v.frames) triplets += f.triplets.size();
  CHECK(triplets == 2);
  CHECK(corpus.taxonomy->num_predicates() == 1);
}

TEST_CASE("schema errors name the offending field") {
  const char* doc = R"({"object_classes": [], "predicate_classes": [], "videos": [{"id": "x"}]})";
  try {
    parse_corpus(doc);
    FAIL("expected a parse error");
  } catch (const CorpusParseError& e) {
    CHECK(std::string(e.what()).find("$.videos[0]") != std::string::npos);
    CHECK(std::string(e.what()).find("frames") != std::string::npos);
  }
}

TEST_CASE("invariant violations name the video and frame") {
  std::string doc = kThreeFrameFixture;
  doc.replace(doc.find("\"predicate\": 0"), 14, "\"predicate\": 3");
  try {
    parse_corpus(doc);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("video 'v1' frame 0") != std::string::npos);
  }
}

TEST_CASE("videos are ordered by id") {
  SynthConfig cfg = preset_config(DynamicsPreset::identity);
  cfg.num_videos = 5;
  auto corpus = generate_synthetic(cfg, 3).corpus;
  std::reverse(corpus.videos.begin(), corpus.videos.end());
  auto reloaded = parse_corpus(serialize_corpus(corpus));
  REQUIRE(reloaded.videos.size() == 5);
  for (std::size_t i = 1; i < reloaded.videos.size(); ++i) {
    CHECK(reloaded.videos[i - 1].video_id < reloaded.videos[i].video_id);
  }
}

TEST_CASE("load, serialize, load round trip is the identity") {
  SynthConfig cfg = preset_config(DynamicsPreset::mixed);
  cfg.num_videos = 12;
  auto corpus = generate_synthetic(cfg, 5).corpus;
  auto once = parse_corpus(serialize_corpus(corpus));
  auto twice = parse_corpus(serialize_corpus(once));
  CHECK(once == corpus);
  CHECK(twice == once);
  CHECK(serialize_corpus(twice) == serialize_corpus(once));
}

TEST_CASE("with-constraint building takes the argmax") {
  auto objs = objects(2);
  std::vector<PredicateDistribution> d{{0, 1, {0.1f, 0.7f, 0.2f}}};
  auto g = build_graph_with_constraint(d, objs);
  REQUIRE(g.triplets.size() == 1);
  CHECK(g.triplets[0].subject_idx == 0);
  CHECK(g.triplets[0].object_idx == 1);
  CHECK(g.triplets[0].predicate == 1);
  CHECK(*g.triplets[0].score == doctest::Approx(0.7));

  std::vector<PredicateDistribution> tie{{0, 1, {0.5f, 0.5f}}};
  CHECK(build_graph_with_constraint(tie, objs).triplets[0].predicate == 0);
}

TEST_CASE("with-constraint keeps one triplet per pair") {
  auto objs = objects(4);
  std::vector<PredicateDistribution> d{
      {0, 1, {0.8f, 0.1f, 0.1f}}, {0, 2, {0.1f, 0.8f, 0.1f}}, {0, 3, {0.1f, 0.1f, 0.8f}}};
  auto g = build_graph_with_constraint(d, objs);
  REQUIRE(g.triplets.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(g.triplets[k].object_idx == k + 1);
    CHECK(g.triplets[k].predicate == k);
  }
}

TEST_CASE("graph building rejects bad pairs") {
  auto objs = objects(2);
  std::vector<PredicateDistribution> dup{{0, 1, {0.5f}}, {0, 1, {0.5f}}};
  CHECK_THROWS_AS(build_graph_with_constraint(dup, objs), ValidationError);
  std::vector<PredicateDistribution> missing{{0, 5, {0.5f}}};
  CHECK_THROWS_AS(build_graph_no_constraint(missing, objs), ValidationError);
}

TEST_CASE("no-constraint building emits every predicate and truncates") {
  auto objs = objects(3);
  std::vector<PredicateDistribution> one{{0, 1, {0.2f, 0.5f, 0.3f}}};
  CHECK(build_graph_no_constraint(one, objs).triplets.size() == 3);

  std::vector<PredicateDistribution> two{{0, 1, {0.2f, 0.5f, 0.3f}}, {0, 2, {0.9f, 0.05f, 0.05f}}};
  auto g = build_graph_no_constraint(two, objs, 2);
  REQUIRE(g.triplets.size() == 2);
  CHECK(*g.triplets[0].score == doctest::Approx(0.9));
  CHECK(g.triplets[1].predicate == 1);
  CHECK(g.triplets[1].object_idx == 1);
}

TEST_CASE("no-constraint ranking matches a brute-force sort") {
  Rng rng(21);
  auto objs = objects(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PredicateDistribution> d{{0, 1, {}}, {0, 2, {}}};
    // Coarse scores so ties occur.
    for (auto& pd : d)
      for (int p = 0; p < 3; ++p) pd.scores.push_back(static_cast<float>(rng.uniform_int(0, 4)) / 4.f);
    using Key = std::tuple<float, std::size_t, std::size_t>;  // (-score, predicate, pair position)
    std::vector<Key> brute;
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t p = 0; p < 3; ++p) brute.emplace_back(-d[k].scores[p], p, k);
    std::sort(brute.begin(), brute.end());
    auto g = build_graph_no_constraint(d, objs);
    REQUIRE(g.triplets.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(g.triplets[i].predicate == std::get<1>(brute[i]));
      CHECK(g.triplets[i].object_idx == std::get<2>(brute[i]) + 1);
    }
    // The constrained graph is each pair's top-1 in the unconstrained ranking.
    auto wc = build_graph_with_constraint(d, objs);
    for (const auto& t : wc.triplets) {
      auto first = std::find_if(g.triplets.begin(), g.triplets.end(),
                                [&](const RelationshipTriplet& u) { return u.object_idx == t.object_idx; });
      CHECK(first->predicate == t.predicate);
    }
  }
}

TEST_CASE("identity dynamics keep predicates constant") {
  auto s = generate_synthetic(preset_config(DynamicsPreset::identity), 1);
  CHECK(s.corpus.videos.size() == 50);
  for (const auto& v : s.corpus.videos) {
    for (std::size_t f = 1; f < v.frames.size(); ++f) {
      REQUIRE(v.frames[f].triplets.size() == v.frames[0].triplets.size());
      for (std::size_t k = 0; k < v.frames[f].triplets.size(); ++k) {
        CHECK(v.frames[f].triplets[k].predicate == v.frames[0].triplets[k].predicate);
      }
    }
  }
}

TEST_CASE("cyclic dynamics advance predicates by the horizon") {
  auto cfg = preset_config(DynamicsPreset::cyclic);
  auto s = generate_synthetic(cfg, 2);
  const std::size_t P = cfg.num_predicates;
  for (const auto& v : s.corpus.videos) {
    for (std::size_t h = 1; h < v.frames.size(); ++h) {
      for (std::size_t k = 0; k < v.frames[0].triplets.size(); ++k) {
        CHECK(v.frames[h].triplets[k].predicate == (v.frames[0].triplets[k].predicate + h) % P);
      }
    }
  }
}

TEST_CASE("uniform dynamics give uniform transition frequencies") {
  auto cfg = preset_config(DynamicsPreset::uniform);
  cfg.num_videos = 400;
  auto s = generate_synthetic(cfg, 9);
  const std::size_t P = cfg.num_predicates;
  std::vector<std::vector<double>> counts(P, std::vector<double>(P, 0.0));
  std::vector<double> row_total(P, 0.0);
  std::size_t transitions = 0;
  for (const auto& v : s.corpus.videos) {
    for (std::size_t f = 1; f < v.frames.size(); ++f) {
      for (std::size_t k = 0; k < v.frames[f].triplets.size(); ++k) {
        const auto from = v.frames[f - 1].triplets[k].predicate;
        const auto to = v.frames[f].triplets[k].predicate;
        counts[from][to] += 1;
        row_total[from] += 1;
        ++transitions;
      }
    }
  }
  REQUIRE(transitions >= 10000);
  // Destination frequencies pooled over source rows: each is a binomial
  // proportion with mean 1/|P|.
  const double p = 1.0 / static_cast<double>(P);
  const double n = static_cast<double>(transitions);
  const double sigma = std::sqrt(p * (1 - p) / n);
  for (std::size_t j = 0; j < P; ++j) {
    double to_j = 0.0;
    for (std::size_t i = 0; i < P; ++i) to_j += counts[i][j];
    CHECK(std::abs(to_j / n - p) < 3.0 * sigma);
  }
  // Each source row is visited in proportion to the stationary (uniform) law too.
  for (std::size_t i = 0; i < P; ++i) CHECK(std::abs(row_total[i] / n - p) < 3.0 * sigma);
}

TEST_CASE("synthetic generation is deterministic and geometry encodes the predicate") {
  auto cfg = preset_config(DynamicsPreset::mixed);
  auto a = generate_synthetic(cfg, 17);
  auto b = generate_synthetic(cfg, 17);
  CHECK(serialize_corpus(a.corpus) == serialize_corpus(b.corpus));
  CHECK(a.transition == cfg.transition);
  const double two_pi = 2.0 * 3.14159265358979;
  for (const auto& v : a.corpus.videos) {
    for (const auto& f : v.frames) {
      validate_frame(f, *a.corpus.taxonomy, v.video_id);
      const auto actor = box_geometry(f.objects[0].bbox);
      for (const auto& t : f.triplets) {
        const auto obj = box_geometry(f.objects[t.object_idx].bbox);
        double angle = std::atan2(obj[7] - actor[7], obj[6] - actor[6]);
        if (angle < 0) angle += two_pi;
        const double expected = two_pi * static_cast<double>(t.predicate) / 10.0;
        double diff = std::abs(angle - expected);
        diff = std::min(diff, two_pi - diff);
        CHECK(diff < 0.2);
      }
    }
  }
}

TEST_CASE("non-stochastic transition matrices are rejected") {
  auto cfg = preset_config(DynamicsPreset::identity);
  cfg.transition[3][3] = 0.5;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), ConfigError);
  cfg = preset_config(DynamicsPreset::identity);
  cfg.transition[0] = {1.5, -0.5, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), ConfigError);
  CHECK_THROWS_AS(parse_dynamics_preset("spiral"), ConfigError);
}

TEST_CASE("persistence hit probability follows the matrix powers") {
  const std::size_t P = 10;
  std::vector<double> uniform(P, 0.1);
  CHECK(persistence_hit_probability(preset_transition(DynamicsPreset::identity, P), uniform, 3) ==
        doctest::Approx(1.0));
  CHECK(persistence_hit_probability(preset_transition(DynamicsPreset::cyclic, P), uniform, 1) ==
        doctest::Approx(0.0));
  // Mixed: the persistent half always hits; the 5-cycle hits only at multiples of 5.
  auto mixed = preset_transition(DynamicsPreset::mixed, P);
  CHECK(persistence_hit_probability(mixed, uniform, 3) == doctest::Approx(0.5));
  CHECK(persistence_hit_probability(mixed, uniform, 5) == doctest::Approx(1.0));
}
