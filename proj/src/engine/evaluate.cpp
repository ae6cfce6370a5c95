#include "sga/engine/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "sga/util/errors.hpp"
#include "sga/util/hash.hpp"
#include "sga/util/rng.hpp"

namespace sga::engine {

EvalRegime EvalRegime::context(double f) {
  EvalRegime r;
  r.kind = RegimeKind::context_fraction;
  r.fraction = f;
  r.validate();
  return r;
}

EvalRegime EvalRegime::future_frame(std::size_t h) {
  EvalRegime r;
  r.kind = RegimeKind::future_frames;
  r.future = h;
  r.validate();
  return r;
}

std::string EvalRegime::label() const {
  if (kind == RegimeKind::future_frames) return "future-" + std::to_string(future);
  char buf[32];
  std::snprintf(buf, sizeof buf, "context-%g", fraction);
  return buf;
}

void EvalRegime::validate() const {
  if (kind == RegimeKind::context_fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("eval.context_fraction: must lie in (0, 1)");
    if (future != 0) throw ConfigError("eval: a context-fraction regime cannot also set future_frame");
  } else {
    if (future == 0) throw ConfigError("eval.future_frame: must be >= 1");
    if (fraction != 0.0) throw ConfigError("eval: a future-frame regime cannot also set context_fraction");
  }
}

std::size_t EvalRegime::observed_frames(std::size_t num_frames) const {
  // small slack so that e.g. 0.7 * 30 lands on 21
  const auto t = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(num_frames) + 1e-9));
  return std::max(model::kMinContext, t);
}

void EvalOptions::validate() const {
  if (ks.empty()) throw ConfigError("eval.k: at least one K required");
  for (std::size_t k : ks) {
    if (k == 0) throw ConfigError("eval.k: K must be positive");
  }
  if (strategies.empty()) throw ConfigError("eval.strategy: at least one strategy required");
  if (samples == 0) throw ConfigError("eval.samples: must be >= 1");
}

std::size_t ModelPredictor::num_object_classes() const { return model_.config().encoder.num_object_classes; }
std::size_t ModelPredictor::num_predicates() const { return model_.config().encoder.num_predicates; }

model::Forecast ModelPredictor::forecast(const model::VideoInputs& observed, std::size_t horizon, std::uint64_t seed,
                                         std::size_t samples) const {
  const bool stochastic = model_.config().kind == model::ModelKind::scenesayer_sde;
  if (!stochastic || samples <= 1) return model_.forecast(observed, horizon, seed);
  auto out = model_.forecast(observed, horizon, mix_seed(seed, 0));
  for (std::size_t s = 1; s < samples; ++s) {
    const auto more = model_.forecast(observed, horizon, mix_seed(seed, s));
    for (std::size_t p = 0; p < out.pairs.size(); ++p)
      for (std::size_t h = 0; h < horizon; ++h)
        for (std::size_t c = 0; c < out.pairs[p].scores[h].size(); ++c) out.pairs[p].scores[h][c] += more.pairs[p].scores[h][c];
  }
  const float inv = 1.0f / static_cast<float>(samples);
  for (auto& p : out.pairs)
    for (auto& step : p.scores)
      for (auto& v : step) v *= inv;
  return out;
}

model::Forecast PersistencePredictor::forecast(const model::VideoInputs& in, std::size_t horizon, std::uint64_t,
                                               std::size_t) const {
  model::Forecast out;
  out.observed = in.num_frames;
  out.horizon = horizon;
  if (in.num_frames == 0 || horizon == 0) return out;
  for (std::size_t r : in.frame_pairs[in.num_frames - 1]) {
    const auto& p = in.pairs[r];
    model::PairForecast pf;
    pf.subject_local = p.subject_local;
    pf.object_local = p.object_local;
    pf.subject_category = in.obj_category[p.subject_row];
    pf.object_category = in.obj_category[p.object_row];
    std::vector<float> s(predicates_, 0.0f);
    for (std::size_t q : p.positives) s.at(q) = 1.0f;
    pf.scores.assign(horizon, s);
    out.pairs.push_back(std::move(pf));
  }
  return out;
}

const MetricRow& MetricReport::find(const std::string& regime, Strategy s, std::size_t k) const {
  for (const auto& r : rows) {
    if (r.regime == regime && r.strategy == s && r.k == k) return r;
  }
  throw ConfigError("report: no row for " + regime + "/" + to_string(s) + "/K=" + std::to_string(k));
}

namespace {

struct Cell {
  double recall_sum = 0.0;  // sum of frame recalls
  std::size_t frames = 0;
  std::vector<std::size_t> class_hits, class_total;
};

struct VideoResult {
  bool skipped = false;
  std::vector<Cell> cells;  // strategy-major, then K
};

VideoResult evaluate_video(const Predictor& predictor, const scene::VideoAnnotation& video, const EvalRegime& regime,
                           const EvalOptions& opt) {
  const std::size_t n = video.frames.size();
  const std::size_t P = predictor.num_predicates();
  VideoResult res;
  // (observed, horizon, first scored step)
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> plan;
  if (regime.kind == RegimeKind::context_fraction) {
    const std::size_t t = regime.observed_frames(n);
    if (t < n) plan.emplace_back(t, n - t, 0);
  } else {
    for (std::size_t t : model::window_starts(n, regime.future)) plan.emplace_back(t, regime.future, regime.future - 1);
  }
  if (plan.empty()) {
    res.skipped = true;
    return res;
  }
  const std::size_t ncells = opt.strategies.size() * opt.ks.size();
  res.cells.resize(ncells);
  for (auto& c : res.cells) {
    c.class_hits.assign(P, 0);
    c.class_total.assign(P, 0);
  }
  const std::uint64_t vid = fnv1a64(video.video_id);
  for (const auto& [t, horizon, first] : plan) {
    std::set<std::size_t> seen;
    for (std::size_t f = 0; f < t; ++f)
      for (const auto& o : video.frames[f].objects) seen.insert(o.category);
    const auto in = model::prepare_video(video, opt.actor_category, t);
    const auto fc = predictor.forecast(in, horizon, mix_seed(opt.seed, vid ^ (static_cast<std::uint64_t>(t) << 48)),
                                       opt.samples);
    for (std::size_t step = first; step < horizon; ++step) {
      std::vector<TripletKey> gt;
      for (const auto& key : triplet_keys(video.frames[t + step])) {
        if (!opt.count_future_only_objects && (!seen.count(std::get<0>(key)) || !seen.count(std::get<2>(key)))) continue;
        gt.push_back(key);
      }
      if (gt.empty()) continue;
      for (std::size_t si = 0; si < opt.strategies.size(); ++si) {
        const auto ranked = fc.pairs.empty() ? std::vector<ScoredTriplet>{} : rank_forecast(fc, step, opt.strategies[si]);
        for (std::size_t ki = 0; ki < opt.ks.size(); ++ki) {
          auto& cell = res.cells[si * opt.ks.size() + ki];
          const auto m = match_frame(gt, ranked, opt.ks[ki], P);
          cell.recall_sum += static_cast<double>(m.hits) / static_cast<double>(m.total);
          ++cell.frames;
          for (std::size_t p = 0; p < P; ++p) {
            cell.class_hits[p] += m.class_hits[p];
            cell.class_total[p] += m.class_total[p];
          }
        }
      }
    }
  }
  return res;
}

}  // namespace

MetricReport evaluate(const Predictor& predictor, const scene::Corpus& corpus, const std::vector<EvalRegime>& regimes,
                      const EvalOptions& options) {
  options.validate();
  if (!corpus.taxonomy) throw CompatibilityError("evaluate: corpus has no taxonomy");
  if (predictor.num_object_classes() != corpus.taxonomy->num_object_classes() ||
      predictor.num_predicates() != corpus.taxonomy->num_predicates()) {
    throw CompatibilityError("evaluate: " + predictor.name() + " expects " +
                             std::to_string(predictor.num_object_classes()) + " object classes / " +
                             std::to_string(predictor.num_predicates()) + " predicates, corpus has " +
                             std::to_string(corpus.taxonomy->num_object_classes()) + " / " +
                             std::to_string(corpus.taxonomy->num_predicates()));
  }
  const std::size_t P = predictor.num_predicates();
  MetricReport report;
  report.model = predictor.name();
  report.seed = options.seed;
  report.samples = options.samples;
  const std::size_t nthreads = std::max<std::size_t>(
      1, std::min<std::size_t>(options.threads ? options.threads : std::thread::hardware_concurrency(),
                               corpus.videos.size()));

  for (const auto& regime : regimes) {
    regime.validate();
    std::vector<VideoResult> results(corpus.videos.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < corpus.videos.size(); i = next++) {
        try {
          results[i] = evaluate_video(predictor, corpus.videos[i], regime, options);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    RegimeSummary summary;
    summary.regime = regime.label();
    const std::size_t ncells = options.strategies.size() * options.ks.size();
    std::vector<double> video_recall_sum(ncells, 0.0);
    std::vector<std::size_t> videos_counted(ncells, 0);
    std::vector<FrameMatch> pooled(ncells);
    for (auto& m : pooled) {
      m.class_hits.assign(P, 0);
      m.class_total.assign(P, 0);
    }
    for (const auto& r : results) {
      if (r.skipped) {
        ++summary.videos_skipped;
        continue;
      }
      ++summary.videos_evaluated;
      summary.frames_scored += r.cells.empty() ? 0 : r.cells[0].frames;
      for (std::size_t c = 0; c < ncells; ++c) {
        const auto& cell = r.cells[c];
        if (cell.frames > 0) {
          video_recall_sum[c] += cell.recall_sum / static_cast<double>(cell.frames);
          ++videos_counted[c];
        }
        for (std::size_t p = 0; p < P; ++p) {
          pooled[c].class_hits[p] += cell.class_hits[p];
          pooled[c].class_total[p] += cell.class_total[p];
        }
      }
    }
    for (std::size_t si = 0; si < options.strategies.size(); ++si) {
      for (std::size_t ki = 0; ki < options.ks.size(); ++ki) {
        const std::size_t c = si * options.ks.size() + ki;
        MetricRow row;
        row.model = predictor.name();
        row.regime = summary.regime;
        row.strategy = options.strategies[si];
        row.k = options.ks[ki];
        row.recall = videos_counted[c] ? video_recall_sum[c] / static_cast<double>(videos_counted[c]) : 0.0;
        const auto mr = mean_recall({pooled[c]}, P);
        row.mean_recall = mr.mean;
        row.per_class = mr.per_class;
        report.rows.push_back(std::move(row));
      }
    }
    report.regimes.push_back(std::move(summary));
  }
  return report;
}

}  // namespace sga::engine
