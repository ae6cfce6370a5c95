#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sga/engine/evaluate.hpp"

namespace sga::engine {

/// model,regime,strategy,K,recall,mean_recall; one line per row.
std::string report_csv(const std::vector<MetricReport>& reports);
nlohmann::json report_json(const MetricReport& report);

/// Display name in the solver-ablation layout, e.g. "SceneSayerSDE (Euler-Maruyama, Ito)".
std::string method_label(const model::ModelConfig& cfg);

struct AblationTable {
  struct Row {
    std::string method;
    std::string regime;
    std::vector<double> recall;       // one per column
    std::vector<double> mean_recall;
  };
  std::vector<std::string> columns;   // "with-constraint@10", ...
  std::vector<Row> rows;              // method-major, then regime
};

/// Evaluates every predictor under every regime. Needs at least two
/// predictors with the corpus taxonomy (CompatibilityError otherwise).
AblationTable run_ablation(const std::vector<const Predictor*>& predictors, const scene::Corpus& corpus,
                           const std::vector<EvalRegime>& regimes, const EvalOptions& options);

std::string ablation_csv(const AblationTable& table);
std::string ablation_markdown(const AblationTable& table);

}  // namespace sga::engine
