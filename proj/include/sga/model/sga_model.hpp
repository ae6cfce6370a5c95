#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sga/dyn/solvers.hpp"
#include "sga/model/anticipator.hpp"
#include "sga/model/encoders.hpp"
#include "sga/model/heads.hpp"

namespace sga::model {

enum class ModelKind { scenesayer_ode, scenesayer_sde, baseline_plus, baseline_plus_plus };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);
[[nodiscard]] bool is_scenesayer(ModelKind kind);

/// Observed frames needed before anything is anticipated.
inline constexpr std::size_t kMinContext = 3;

/// Observed-prefix lengths T = 3 .. num_frames - horizon (empty when the
/// video is shorter than 3 + horizon).
std::vector<std::size_t> window_starts(std::size_t num_frames, std::size_t horizon);

struct ModelConfig {
  ModelKind kind = ModelKind::scenesayer_ode;
  EncoderConfig encoder;
  std::size_t field_hidden = 64;
  std::size_t head_hidden = 64;
  dyn::SolverSpec solver;
  bool teacher_forcing = true;
  bool temporal_prepass = true;  // baseline_plus_plus only

  /// Kind-appropriate solver (adams-bashforth4 or reversible-heun, h = 1/25).
  static ModelConfig defaults(ModelKind kind, std::size_t num_object_classes, std::size_t num_predicates);
  /// Throws ConfigError.
  void validate() const;
};

struct PairForecast {
  std::size_t subject_local = 0;
  std::size_t object_local = 0;
  std::size_t subject_category = 0;
  std::size_t object_category = 0;
  std::vector<std::vector<float>> scores;  // per anticipated frame, |P| probabilities
};

struct Forecast {
  std::size_t observed = 0;
  std::size_t horizon = 0;
  std::vector<PairForecast> pairs;
};

struct LossBreakdown {
  double total = 0.0;
  double gen = 0.0;
  double object = 0.0;
  double ant = 0.0;
  double boxes = 0.0;
  double recon = 0.0;
  std::size_t windows = 0;
  std::size_t clamped = 0;
};

/// SceneSayer (ODE/SDE) and the two autoregressive baselines over shared
/// encoders and heads.
template <typename T>
class SgaModel {
 public:
  SgaModel(const ModelConfig& cfg, std::uint64_t seed);
  SgaModel(const SgaModel&) = delete;
  SgaModel& operator=(const SgaModel&) = delete;

  [[nodiscard]] const ModelConfig& config() const { return cfg_; }
  [[nodiscard]] nn::ParameterStore<T>& parameters() { return store_; }
  [[nodiscard]] const nn::ParameterStore<T>& parameters() const { return store_; }

  /// Full objective of one video for anticipation windows of `horizon`
  /// frames; recorded on the active tape.
  [[nodiscard]] BasicTensor<T> video_loss(const VideoInputs& video, std::size_t horizon, const LossWeights& weights,
                                          std::uint64_t noise_seed, LossBreakdown* parts = nullptr) const;

  /// Predicate distributions for frames observed+1 .. observed+horizon of
  /// every pair in the last observed frame. `observed` holds only the
  /// observed prefix.
  [[nodiscard]] Forecast forecast(const VideoInputs& observed, std::size_t horizon, std::uint64_t noise_seed) const;

  /// Generation-head distributions of every observed pair row (row order of
  /// `observed.pairs`); empty for models without that head.
  [[nodiscard]] std::vector<std::vector<float>> observed_scores(const VideoInputs& observed) const;

  /// Integrates each row of `z0` over `horizon` frames (SceneSayer kinds).
  [[nodiscard]] std::vector<BasicTensor<T>> anticipate_latent(const BasicTensor<T>& z0, std::size_t horizon,
                                                              std::uint64_t noise_seed) const;

  RelationEncoder<T> encoder;
  Heads<T> heads;
  nn::Mlp<T> field;                 // ODE vector field
  nn::Mlp<T> drift, diffusion;      // SDE
  Anticipator<T> anticipator;       // baselines

 private:
  [[nodiscard]] BasicTensor<T> baseline_sequence(const Encoded<T>& enc) const;
  void baseline_terms(const VideoInputs& in, const BasicTensor<T>& seq, std::size_t horizon,
                      AnticipatedTerms<T>& terms, std::size_t& windows) const;

  ModelConfig cfg_;
  nn::ParameterStore<T> store_;
};

}  // namespace sga::model
