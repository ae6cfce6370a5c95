#include "sga/engine/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "sga/util/errors.hpp"
#include "sga/util/rng.hpp"

namespace sga::engine {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs: must be >= 1");
  if (horizon == 0) throw ConfigError("train.horizon: must be >= 1");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw ConfigError("train.lr: must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("train.beta1: must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("train.beta2: must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("train.eps: must be positive");
  weights.validate();
}

std::size_t TrainWindowPlan::total() const {
  std::size_t n = 0;
  for (const auto& w : windows) n += w.size();
  return n;
}

TrainWindowPlan plan_windows(const scene::Corpus& corpus, std::size_t horizon) {
  TrainWindowPlan plan;
  plan.horizon = horizon;
  for (const auto& v : corpus.videos) {
    plan.windows.push_back(model::window_starts(v.frames.size(), horizon));
    if (plan.windows.back().empty()) ++plan.skipped_videos;
  }
  return plan;
}

namespace {

std::string describe_windows(std::size_t num_frames, std::size_t horizon) {
  const auto w = model::window_starts(num_frames, horizon);
  if (w.empty()) return "none";
  return "T=" + std::to_string(w.front()) + ".." + std::to_string(w.back());
}

}  // namespace

std::vector<EpochLog> train(model::SgaModel<float>& m, const scene::Corpus& corpus, const TrainConfig& cfg,
                            TrainState& state, const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.videos.empty()) throw ConfigError("train: corpus is empty");
  if (!corpus.taxonomy || corpus.taxonomy->num_object_classes() != m.config().encoder.num_object_classes ||
      corpus.taxonomy->num_predicates() != m.config().encoder.num_predicates) {
    throw CompatibilityError("train: model taxonomy sizes differ from the corpus");
  }
  std::vector<model::VideoInputs> inputs;
  inputs.reserve(corpus.videos.size());
  for (const auto& v : corpus.videos) inputs.push_back(model::prepare_video(v, cfg.actor_category));

  auto params = m.parameters().tensors();
  std::vector<EpochLog> logs;
  for (std::size_t epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    EpochLog log;
    log.epoch = epoch + 1;
    for (std::size_t v : order) {
      const auto& in = inputs[v];
      if (in.obj_category.empty()) continue;
      ad::Tape<float> tape;
      ad::TapeScope<float> scope(tape);
      m.parameters().zero_grad();
      model::LossBreakdown parts;
      const auto loss = m.video_loss(in, cfg.horizon, cfg.weights, mix_seed(mix_seed(cfg.seed, epoch), v), &parts);
      const std::string where = "epoch " + std::to_string(epoch + 1) + ", video " + corpus.videos[v].video_id +
                                ", windows " + describe_windows(in.num_frames, cfg.horizon);
      if (!std::isfinite(parts.total)) {
        char buf[256];
        std::snprintf(buf, sizeof buf, " (gen %g, object %g, ant %g, boxes %g, recon %g)", parts.gen, parts.object,
                      parts.ant, parts.boxes, parts.recon);
        throw NumericalError("non-finite loss at " + where + buf);
      }
      if (loss.impl()->tape == nullptr) continue;
      ad::backward(loss);
      for (std::size_t k = 0; k < params.size(); ++k) {
        for (float g : params[k].grad()) {
          if (!std::isfinite(g)) {
            throw NumericalError("non-finite gradient of " + m.parameters().entries()[k].first + " at " + where);
          }
        }
      }
      ad::adam_step<float>(params, state.adam, cfg.adam);
      log.loss += parts.total;
      log.gen += parts.gen;
      log.object += parts.object;
      log.ant += parts.ant;
      log.boxes += parts.boxes;
      log.recon += parts.recon;
      log.windows += parts.windows;
      log.clamped += parts.clamped;
      ++log.videos;
    }
    if (log.videos > 0) {
      const double n = static_cast<double>(log.videos);
      log.loss /= n;
      log.gen /= n;
      log.object /= n;
      log.ant /= n;
      log.boxes /= n;
      log.recon /= n;
    }
    state.epochs_done = epoch + 1;
    logs.push_back(log);
    if (on_epoch) on_epoch(log, state);
  }
  return logs;
}

std::string epoch_log_header() { return "epoch,loss,gen,object,ant,boxes,recon,videos,windows,clamped"; }

std::string epoch_log_line(const EpochLog& l) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu,%zu", l.epoch, l.loss, l.gen, l.object,
                l.ant, l.boxes, l.recon, l.videos, l.windows, l.clamped);
  return buf;
}

}  // namespace sga::engine
