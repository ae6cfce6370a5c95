#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sga/autodiff/adam.hpp"
#include "sga/model/sga_model.hpp"
#include "sga/scene/types.hpp"

namespace sga::engine {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t horizon = 3;  // H_t
  ad::AdamConfig adam;
  model::LossWeights weights;
  std::uint64_t seed = 0;  // shuffling and Brownian paths
  std::size_t actor_category = 0;

  void validate() const;
};

/// Observed-prefix lengths per video.
struct TrainWindowPlan {
  std::size_t horizon = 0;
  std::vector<std::vector<std::size_t>> windows;
  std::size_t skipped_videos = 0;  // shorter than 3 + H

  [[nodiscard]] std::size_t total() const;
};

TrainWindowPlan plan_windows(const scene::Corpus& corpus, std::size_t horizon);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean over videos
  double gen = 0.0, object = 0.0, ant = 0.0, boxes = 0.0, recon = 0.0;
  std::size_t videos = 0;
  std::size_t windows = 0;
  std::size_t clamped = 0;
};

struct TrainState {
  ad::AdamState<float> adam;
  std::size_t epochs_done = 0;
};

using EpochCallback = std::function<void(const EpochLog&, const TrainState&)>;

/// Runs epochs state.epochs_done+1 .. cfg.epochs with one Adam step per
/// video. Visiting order is reshuffled every epoch from the seed, so a
/// resumed run continues exactly where an uninterrupted one would be.
/// Throws NumericalError on a non-finite loss or gradient.
std::vector<EpochLog> train(model::SgaModel<float>& m, const scene::Corpus& corpus, const TrainConfig& cfg,
                            TrainState& state, const EpochCallback& on_epoch = {});

/// CSV header and line for the training log (no timing columns, so logs of
/// identical runs are byte-identical).
std::string epoch_log_header();
std::string epoch_log_line(const EpochLog& log);

}  // namespace sga::engine
