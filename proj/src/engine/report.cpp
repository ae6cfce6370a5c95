#include "sga/engine/report.hpp"

#include <cstdio>
#include <sstream>

#include "sga/util/errors.hpp"

namespace sga::engine {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string report_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  out << "model,regime,strategy,K,recall,mean_recall\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      out << r.model << ',' << r.regime << ',' << to_string(r.strategy) << ',' << r.k << ',' << fmt(r.recall) << ','
          << fmt(r.mean_recall) << '\n';
    }
  }
  return out.str();
}

nlohmann::json report_json(const MetricReport& rep) {
  nlohmann::json j;
  j["model"] = rep.model;
  j["eval_seed"] = rep.seed;
  j["samples"] = rep.samples;
  j["regimes"] = nlohmann::json::array();
  for (const auto& s : rep.regimes) {
    j["regimes"].push_back({{"regime", s.regime},
                            {"videos_evaluated", s.videos_evaluated},
                            {"videos_skipped", s.videos_skipped},
                            {"frames_scored", s.frames_scored}});
  }
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& c : r.per_class) per_class.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
    j["rows"].push_back({{"regime", r.regime},
                         {"strategy", to_string(r.strategy)},
                         {"K", r.k},
                         {"recall", r.recall},
                         {"mean_recall", r.mean_recall},
                         {"per_class_recall", per_class}});
  }
  return j;
}

std::string method_label(const model::ModelConfig& cfg) {
  switch (cfg.kind) {
    case model::ModelKind::scenesayer_ode:
      return cfg.solver.method == dyn::SolverMethod::euler ? "SceneSayerODE (Euler)" : "SceneSayerODE (Adams-Bashforth)";
    case model::ModelKind::scenesayer_sde:
      return cfg.solver.method == dyn::SolverMethod::euler_maruyama_ito ? "SceneSayerSDE (Euler-Maruyama, Ito)"
                                                                        : "SceneSayerSDE (reversible Heun, Stratonovich)";
    case model::ModelKind::baseline_plus:
      return "Baseline+";
    case model::ModelKind::baseline_plus_plus:
      return "Baseline++";
  }
  return "unknown";
}

AblationTable run_ablation(const std::vector<const Predictor*>& predictors, const scene::Corpus& corpus,
                           const std::vector<EvalRegime>& regimes, const EvalOptions& options) {
  if (predictors.size() < 2) throw ConfigError("ablate: at least two checkpoints required");
  for (const auto* p : predictors) {
    if (p->num_object_classes() != predictors[0]->num_object_classes() ||
        p->num_predicates() != predictors[0]->num_predicates()) {
      throw CompatibilityError("ablate: " + p->name() + " and " + predictors[0]->name() + " use different taxonomies");
    }
  }
  AblationTable table;
  for (auto s : options.strategies)
    for (auto k : options.ks) table.columns.push_back(to_string(s) + "@" + std::to_string(k));
  for (const auto* p : predictors) {
    const auto rep = evaluate(*p, corpus, regimes, options);
    for (const auto& regime : regimes) {
      AblationTable::Row row;
      row.method = p->name();
      row.regime = regime.label();
      for (auto s : options.strategies) {
        for (auto k : options.ks) {
          const auto& r = rep.find(row.regime, s, k);
          row.recall.push_back(r.recall);
          row.mean_recall.push_back(r.mean_recall);
        }
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string ablation_csv(const AblationTable& t) {
  std::ostringstream out;
  out << "method,regime";
  for (const auto& c : t.columns) out << ",R@" << c;
  for (const auto& c : t.columns) out << ",mR@" << c;
  out << '\n';
  for (const auto& r : t.rows) {
    out << '"' << r.method << "\"," << r.regime;
    for (double v : r.recall) out << ',' << fmt(v);
    for (double v : r.mean_recall) out << ',' << fmt(v);
    out << '\n';
  }
  return out.str();
}

std::string ablation_markdown(const AblationTable& t) {
  std::ostringstream out;
  out << "| method | regime |";
  for (const auto& c : t.columns) out << " R@" << c << " |";
  for (const auto& c : t.columns) out << " mR@" << c << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < 2 * t.columns.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& r : t.rows) {
    out << "| " << r.method << " | " << r.regime << " |";
    char buf[16];
    for (double v : r.recall) {
      std::snprintf(buf, sizeof buf, " %.1f |", 100 * v);
      out << buf;
    }
    for (double v : r.mean_recall) {
      std::snprintf(buf, sizeof buf, " %.1f |", 100 * v);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace sga::engine
