#include <cmath>
#include <vector>

#include "doctest.h"
#include "sga/engine/metrics.hpp"
#include "sga/util/errors.hpp"
#include "support/recall_oracle.hpp"

using namespace sga;
using namespace sga::engine;

namespace {

model::Forecast to_forecast(const testing::OracleInstance& inst) {
  model::Forecast f;
  f.observed = 3;
  f.horizon = 1;
  for (std::size_t q = 0; q < inst.pairs.size(); ++q) {
    model::PairForecast p;
    p.subject_local = inst.pairs[q].first;
    p.object_local = inst.pairs[q].second;
    p.subject_category = inst.categories[p.subject_local];
    p.object_category = inst.categories[p.object_local];
    p.scores = {inst.scores[q]};
    f.pairs.push_back(std::move(p));
  }
  return f;
}

std::vector<ScoredTriplet> ranked(std::vector<std::pair<TripletKey, float>> items) {
  std::vector<ScoredTriplet> out;
  for (auto& [k, s] : items) out.push_back({k, s});
  return out;
}

}  // namespace

TEST_CASE("recall fixtures") {
  const std::vector<TripletKey> gt{{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}};
  auto preds = ranked({{{0, 1, 2}, .9f}, {{0, 2, 3}, .8f}, {{0, 9, 9}, .7f}, {{0, 3, 4}, .6f}});
  CHECK(*recall_at_k(gt, preds, 10) == doctest::Approx(0.75));
  CHECK(*recall_at_k(gt, preds, 2) == doctest::Approx(0.5));
  CHECK(*recall_at_k(gt, preds, 4) == *recall_at_k(gt, preds, 1000));
  CHECK_FALSE(recall_at_k({}, preds, 10).has_value());
  auto superset = preds;
  superset.push_back({{0, 4, 5}, .1f});
  CHECK(*recall_at_k(gt, superset, 10) == 1.0);
}

TEST_CASE("recall uses multiset matching") {
  const std::vector<TripletKey> gt{{1, 0, 2}, {1, 0, 2}};
  CHECK(*recall_at_k(gt, ranked({{{1, 0, 2}, .5f}}), 10) == 0.5);
  CHECK(*recall_at_k(gt, ranked({{{1, 0, 2}, .5f}, {{1, 0, 2}, .4f}}), 10) == 1.0);
}

TEST_CASE("mean recall fixtures") {
  FrameMatch a;
  a.class_hits = {3, 0, 0};
  a.class_total = {3, 0, 0};
  auto single = mean_recall({a}, 3);
  CHECK(single.mean == 1.0);
  CHECK_FALSE(single.per_class[1].has_value());

  FrameMatch b;  // class 0 all found, class 1 none, very different counts
  b.class_hits = {1, 0, 0};
  b.class_total = {1, 9, 0};
  auto balanced = mean_recall({b}, 3);
  CHECK(balanced.mean == doctest::Approx(0.5));
  CHECK_FALSE(balanced.per_class[2].has_value());

  // single class present: mean recall equals pooled recall
  FrameMatch c;
  c.class_hits = {0, 2, 0};
  c.class_total = {0, 5, 0};
  FrameMatch d;
  d.class_hits = {0, 1, 0};
  d.class_total = {0, 1, 0};
  CHECK(mean_recall({c, d}, 3).mean == doctest::Approx(3.0 / 6.0));
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("with-constraint") == Strategy::with_constraint);
  CHECK(parse_strategy("no") == Strategy::no_constraint);
  CHECK(to_string(Strategy::no_constraint) == "no-constraint");
  CHECK_THROWS_AS(parse_strategy("semi"), ConfigError);
}

TEST_CASE("recall equals the brute-force oracle") {
  Rng rng(2024);
  std::vector<FrameMatch> pooled_engine;
  std::vector<std::size_t> class_hits(8, 0), class_total(8, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = testing::random_instance(rng);
    const auto fc = to_forecast(inst);
    std::vector<TripletKey> gt(inst.gt.begin(), inst.gt.end());
    for (auto strategy : {Strategy::with_constraint, Strategy::no_constraint}) {
      const auto ranks = rank_forecast(fc, 0, strategy);
      double previous = 0.0;
      for (std::size_t k : {1, 2, 3, 5, 10, 20, 50}) {
        const auto m = match_frame(gt, ranks, k, inst.num_predicates);
        const auto o = testing::oracle_recall(inst, k, strategy == Strategy::with_constraint);
        REQUIRE(m.hits == o.hits);
        REQUIRE(m.total == o.total);
        REQUIRE(m.class_hits == o.class_hits);
        REQUIRE(m.class_total == o.class_total);
        const double r = *recall_at_k(gt, ranks, k);
        CHECK(r >= previous);
        previous = r;
        if (strategy == Strategy::with_constraint && k == 10) {
          FrameMatch padded = m;
          padded.class_hits.resize(8, 0);
          padded.class_total.resize(8, 0);
          pooled_engine.push_back(padded);
          for (std::size_t p = 0; p < inst.num_predicates; ++p) {
            class_hits[p] += o.class_hits[p];
            class_total[p] += o.class_total[p];
          }
        }
      }
    }
  }
  double sum = 0;
  int present = 0;
  for (std::size_t p = 0; p < 8; ++p) {
    if (class_total[p] == 0) continue;
    sum += static_cast<double>(class_hits[p]) / class_total[p];
    ++present;
  }
  CHECK(mean_recall(pooled_engine, 8).mean == doctest::Approx(sum / present).epsilon(1e-12));
}

TEST_CASE("with-constraint top-K is not always inside no-constraint top-K") {
  // Pair A has two strong predicates, so with K = 2 no-constraint spends both
  // slots on A while with-constraint keeps B's argmax.
  testing::OracleInstance inst;
  inst.categories = {0, 1, 2};
  inst.pairs = {{0, 1}, {0, 2}};
  inst.scores = {{.45f, .44f, .11f}, {.4f, .3f, .3f}};
  inst.num_predicates = 3;
  inst.gt = {{0, 0, 2}};
  const auto fc = to_forecast(inst);
  const std::vector<TripletKey> gt{{0, 0, 2}};
  CHECK(*recall_at_k(gt, rank_forecast(fc, 0, Strategy::with_constraint), 2) == 1.0);
  CHECK(*recall_at_k(gt, rank_forecast(fc, 0, Strategy::no_constraint), 2) == 0.0);
  // once K covers every candidate the ordering holds
  CHECK(*recall_at_k(gt, rank_forecast(fc, 0, Strategy::no_constraint), 6) == 1.0);
}
