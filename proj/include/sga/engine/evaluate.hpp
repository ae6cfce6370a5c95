#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sga/engine/metrics.hpp"
#include "sga/model/encoders.hpp"
#include "sga/model/sga_model.hpp"
#include "sga/scene/types.hpp"

namespace sga::engine {

enum class RegimeKind { context_fraction, future_frames };

struct EvalRegime {
  RegimeKind kind = RegimeKind::future_frames;
  double fraction = 0.0;    // context_fraction
  std::size_t future = 0;   // future_frames (H_e)

  static EvalRegime context(double f);
  static EvalRegime future_frame(std::size_t h);
  /// "context-0.5" or "future-3".
  [[nodiscard]] std::string label() const;
  void validate() const;
  /// Observed frames for a context-fraction regime: max(3, floor(F * N_F)).
  [[nodiscard]] std::size_t observed_frames(std::size_t num_frames) const;
};

struct EvalOptions {
  std::vector<std::size_t> ks{10, 20, 50};
  std::vector<Strategy> strategies{Strategy::with_constraint, Strategy::no_constraint};
  bool count_future_only_objects = false;
  std::uint64_t seed = 0;    // Brownian paths of stochastic models
  std::size_t samples = 1;   // SDE score averaging
  std::size_t threads = 0;   // 0: hardware concurrency
  std::size_t actor_category = 0;

  void validate() const;
};

/// Anything that maps an observed prefix to anticipated predicate scores.
class Predictor {
 public:
  virtual ~Predictor() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t num_object_classes() const = 0;
  [[nodiscard]] virtual std::size_t num_predicates() const = 0;
  /// Must be safe to call concurrently.
  [[nodiscard]] virtual model::Forecast forecast(const model::VideoInputs& observed, std::size_t horizon,
                                                 std::uint64_t seed, std::size_t samples) const = 0;
};

class ModelPredictor final : public Predictor {
 public:
  ModelPredictor(const model::SgaModel<float>& m, std::string name) : model_(m), name_(std::move(name)) {}
  [[nodiscard]] std::string name() const override { return name_; }
  [[nodiscard]] std::size_t num_object_classes() const override;
  [[nodiscard]] std::size_t num_predicates() const override;
  [[nodiscard]] model::Forecast forecast(const model::VideoInputs& observed, std::size_t horizon, std::uint64_t seed,
                                         std::size_t samples) const override;

 private:
  const model::SgaModel<float>& model_;
  std::string name_;
};

/// Copies the last observed graph forward: every positive predicate of a
/// pair in the last observed frame scores 1, the rest 0.
class PersistencePredictor final : public Predictor {
 public:
  PersistencePredictor(std::size_t num_object_classes, std::size_t num_predicates)
      : classes_(num_object_classes), predicates_(num_predicates) {}
  [[nodiscard]] std::string name() const override { return "persistence"; }
  [[nodiscard]] std::size_t num_object_classes() const override { return classes_; }
  [[nodiscard]] std::size_t num_predicates() const override { return predicates_; }
  [[nodiscard]] model::Forecast forecast(const model::VideoInputs& observed, std::size_t horizon, std::uint64_t seed,
                                         std::size_t samples) const override;

 private:
  std::size_t classes_, predicates_;
};

struct MetricRow {
  std::string model;
  std::string regime;
  Strategy strategy = Strategy::with_constraint;
  std::size_t k = 0;
  double recall = 0.0;
  double mean_recall = 0.0;
  std::vector<std::optional<double>> per_class;
};

struct RegimeSummary {
  std::string regime;
  std::size_t videos_evaluated = 0;
  std::size_t videos_skipped = 0;
  std::size_t frames_scored = 0;
};

struct MetricReport {
  std::string model;
  std::uint64_t seed = 0;
  std::size_t samples = 1;
  std::vector<RegimeSummary> regimes;
  std::vector<MetricRow> rows;  // regime-major, then strategy, then K

  [[nodiscard]] const MetricRow& find(const std::string& regime, Strategy s, std::size_t k) const;
};

/// Throws CompatibilityError when the predictor's taxonomy sizes differ
/// from the corpus.
MetricReport evaluate(const Predictor& predictor, const scene::Corpus& corpus, const std::vector<EvalRegime>& regimes,
                      const EvalOptions& options);

}  // namespace sga::engine
