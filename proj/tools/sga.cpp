#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sga/engine/evaluate.hpp"
#include "sga/engine/report.hpp"
#include "sga/engine/train.hpp"
#include "sga/io/checkpoint.hpp"
#include "sga/io/config.hpp"
#include "sga/model/encoders.hpp"
#include "sga/scene/corpus_io.hpp"
#include "sga/scene/synthetic.hpp"
#include "sga/util/errors.hpp"

namespace fs = std::filesystem;
using namespace sga;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

struct RegimeFlags {
  std::string context_fractions, future_frames, ks, strategy;
  std::optional<std::uint64_t> eval_seed;
  std::optional<std::size_t> samples, threads;
  bool count_future_only = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--context-fraction", context_fractions, "Observed fraction(s) F, e.g. 0.3,0.5");
    cmd->add_option("--future-frame", future_frames, "Future-frame horizon(s) H_e, e.g. 3");
    cmd->add_option("--k", ks, "Recall cutoffs, e.g. 10,20,50");
    cmd->add_option("--strategy", strategy, "with | no | both");
    cmd->add_option("--eval-seed", eval_seed, "Brownian seed for stochastic models");
    cmd->add_option("--samples", samples, "SDE paths averaged per forecast");
    cmd->add_option("--threads", threads, "Evaluation threads (0: all cores)");
    cmd->add_flag("--count-future-only", count_future_only, "Count objects first seen after the context as misses");
  }

  void apply(io::ExperimentConfig& cfg) const {
    if (!context_fractions.empty() || !future_frames.empty()) {
      cfg.eval.context_fractions.clear();
      cfg.eval.future_frames.clear();
    }
    if (!context_fractions.empty()) cfg.eval.context_fractions = io::parse_double_list(context_fractions, "--context-fraction");
    if (!future_frames.empty()) cfg.eval.future_frames = io::parse_size_list(future_frames, "--future-frame");
    if (!ks.empty()) cfg.eval.ks = io::parse_size_list(ks, "--k");
    if (strategy == "both") {
      cfg.eval.strategies = {engine::Strategy::with_constraint, engine::Strategy::no_constraint};
    } else if (!strategy.empty()) {
      cfg.eval.strategies = {engine::parse_strategy(strategy)};
    }
    if (eval_seed) cfg.eval.seed = eval_seed;
    if (samples) cfg.eval.samples = *samples;
    if (threads) cfg.eval.threads = *threads;
    if (count_future_only) cfg.eval.count_future_only_objects = true;
  }
};

io::ExperimentConfig base_config(const Common& common) {
  auto cfg = common.config_path.empty() ? io::default_config() : io::load_config(common.config_path);
  if (common.seed) cfg.seed = common.seed;
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

engine::EvalOptions eval_options(const io::ExperimentConfig& cfg) {
  engine::EvalOptions opt;
  opt.ks = cfg.eval.ks;
  opt.strategies = cfg.eval.strategies;
  opt.count_future_only_objects = cfg.eval.count_future_only_objects;
  opt.seed = cfg.eval_seed();
  opt.samples = cfg.eval.samples;
  opt.threads = cfg.eval.threads;
  opt.actor_category = cfg.model.encoder.actor_category;
  return opt;
}

scene::Corpus corpus_or_synth(const std::string& path, const io::ExperimentConfig& cfg) {
  if (!path.empty()) return scene::load_corpus(path);
  return scene::generate_synthetic(cfg.synth_for(), cfg.resolved_seed()).corpus;
}

// ---- synth ----

struct SynthArgs {
  std::string preset, out;
  std::optional<std::size_t> videos;
};

void run_synth(const Common& common, const SynthArgs& a) {
  auto cfg = base_config(common);
  if (!a.preset.empty()) cfg.synth_preset = scene::parse_dynamics_preset(a.preset);
  if (a.videos) cfg.synth.num_videos = *a.videos;
  cfg.validate();
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  auto corpus = scene::generate_synthetic(cfg.synth_for(), cfg.resolved_seed()).corpus;
  io::write_file_atomic(out, scene::serialize_corpus(corpus, 1));
  auto resolved = out;
  resolved += ".config.toml";
  io::write_file_atomic(resolved, io::dump_config(cfg));
  std::cerr << "wrote " << corpus.videos.size() << " videos to " << out.string() << "\n";
}

// ---- train ----

struct TrainArgs {
  std::string corpus, model, solver, out_dir;
  std::optional<double> h, lr;
  std::optional<std::size_t> epochs, horizon;
  bool resume = false;
};

std::vector<std::string> read_log_prefix(const fs::path& log, std::size_t epochs) {
  std::vector<std::string> lines;
  if (!fs::exists(log)) return lines;
  std::istringstream in(io::read_file(log));
  std::string line;
  std::getline(in, line);  // header
  while (lines.size() < epochs && std::getline(in, line)) lines.push_back(line);
  return lines;
}

void run_train(const Common& common, const TrainArgs& a) {
  auto cfg = base_config(common);
  if (!a.model.empty()) cfg.model.kind = model::parse_model_kind(a.model);
  if (!a.solver.empty()) cfg.solver_method = dyn::parse_solver_method(a.solver);
  if (a.h) cfg.model.solver.h = *a.h;
  if (a.lr) cfg.train.adam.lr = *a.lr;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.horizon) cfg.train.horizon = *a.horizon;
  cfg.validate();

  const auto corpus = corpus_or_synth(a.corpus, cfg);
  const auto& tax = *corpus.taxonomy;
  const auto mcfg = cfg.model_for(tax.num_object_classes(), tax.num_predicates());
  mcfg.validate();
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  io::write_file_atomic(dir / "resolved_config.toml", io::dump_config(cfg));

  const fs::path ckpt_path = dir / "checkpoint.bin";
  const fs::path log_path = dir / "train_log.csv";
  std::unique_ptr<model::SgaModel<float>> m;
  engine::TrainState state;
  std::vector<std::string> log_lines;
  if (a.resume && fs::exists(ckpt_path)) {
    auto ckpt = io::load_checkpoint(ckpt_path);
    io::check_taxonomy(ckpt, tax);
    if (io::config_hash(ckpt.model) != io::config_hash(mcfg)) {
      throw CompatibilityError("resume: " + ckpt_path.string() + " was trained with a different model config");
    }
    auto restored = io::restore(ckpt);
    m = std::move(restored.model);
    state = std::move(restored.state);
    log_lines = read_log_prefix(log_path, state.epochs_done);
    std::cerr << "resuming after epoch " << state.epochs_done << "\n";
  } else {
    m = std::make_unique<model::SgaModel<float>>(mcfg, cfg.resolved_seed());
  }

  const auto tcfg = cfg.train_for();
  const auto plan = engine::plan_windows(corpus, tcfg.horizon);
  std::cerr << model::to_string(mcfg.kind) << ": " << corpus.videos.size() << " videos, " << plan.total()
            << " windows (" << plan.skipped_videos << " videos too short for H=" << tcfg.horizon << ")\n";
  const auto start = std::chrono::steady_clock::now();
  engine::train(*m, corpus, tcfg, state, [&](const engine::EpochLog& log, const engine::TrainState& st) {
    log_lines.push_back(engine::epoch_log_line(log));
    std::string text = engine::epoch_log_header() + "\n";
    for (const auto& l : log_lines) text += l + "\n";
    io::save_checkpoint(ckpt_path, io::make_checkpoint(*m, tax, st));
    io::write_file_atomic(log_path, text);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "epoch %zu/%zu loss %.4f (%.1f s)\n", log.epoch, tcfg.epochs, log.loss, secs);
  });
  if (!fs::exists(ckpt_path)) io::save_checkpoint(ckpt_path, io::make_checkpoint(*m, tax, state));
}

// ---- eval / ablate ----

struct EvalArgs {
  std::string checkpoint, corpus, out_dir;
  bool persistence = false;
  RegimeFlags regimes;
};

void write_reports(const fs::path& dir, const std::vector<engine::MetricReport>& reports) {
  io::write_file_atomic(dir / "metrics.csv", engine::report_csv(reports));
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back(engine::report_json(r));
  io::write_file_atomic(dir / "metrics.json", (reports.size() == 1 ? j[0] : j).dump(2) + "\n");
}

void run_eval(const Common& common, const EvalArgs& a) {
  auto cfg = base_config(common);
  a.regimes.apply(cfg);
  cfg.validate();
  if (a.checkpoint.empty() == !a.persistence) throw ConfigError("eval: pass exactly one of --checkpoint or --persistence");
  std::optional<io::Checkpoint> ckpt;
  if (!a.persistence) ckpt = io::load_checkpoint(a.checkpoint);
  const auto corpus = scene::load_corpus(a.corpus);
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  io::write_file_atomic(dir / "resolved_config.toml", io::dump_config(cfg));

  const auto regimes = cfg.eval.regimes();
  const auto opt = eval_options(cfg);
  engine::MetricReport report;
  if (ckpt) {
    io::check_taxonomy(*ckpt, *corpus.taxonomy);
    auto restored = io::restore(*ckpt);
    engine::ModelPredictor predictor(*restored.model, engine::method_label(ckpt->model));
    report = engine::evaluate(predictor, corpus, regimes, opt);
  } else {
    engine::PersistencePredictor predictor(corpus.taxonomy->num_object_classes(), corpus.taxonomy->num_predicates());
    report = engine::evaluate(predictor, corpus, regimes, opt);
  }
  write_reports(dir, {report});
  std::cout << engine::report_csv({report});
  for (const auto& s : report.regimes) {
    std::cerr << s.regime << ": " << s.videos_evaluated << " videos evaluated, " << s.videos_skipped << " skipped\n";
  }
}

struct AblateArgs {
  std::vector<std::string> checkpoints;
  std::string corpus, out_dir;
  RegimeFlags regimes;
};

void run_ablate(const Common& common, const AblateArgs& a) {
  auto cfg = base_config(common);
  a.regimes.apply(cfg);
  cfg.validate();
  if (a.checkpoints.size() < 2) throw ConfigError("ablate: at least two --checkpoint files required");
  const auto corpus = scene::load_corpus(a.corpus);
  std::vector<io::RestoredModel> models;
  std::vector<std::unique_ptr<engine::ModelPredictor>> predictors;
  std::vector<const engine::Predictor*> views;
  for (const auto& path : a.checkpoints) {
    auto ckpt = io::load_checkpoint(path);
    io::check_taxonomy(ckpt, *corpus.taxonomy);
    models.push_back(io::restore(ckpt));
    predictors.push_back(std::make_unique<engine::ModelPredictor>(*models.back().model, engine::method_label(ckpt.model)));
    views.push_back(predictors.back().get());
  }
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  io::write_file_atomic(dir / "resolved_config.toml", io::dump_config(cfg));
  const auto table = engine::run_ablation(views, corpus, cfg.eval.regimes(), eval_options(cfg));
  io::write_file_atomic(dir / "ablation.csv", engine::ablation_csv(table));
  io::write_file_atomic(dir / "ablation.md", engine::ablation_markdown(table));
  std::cout << engine::ablation_markdown(table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene graph anticipation: synthesize corpora, train, evaluate and compare models"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  Common common;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "TOML experiment config");
    cmd->add_option("--seed", common.seed, "Global seed (default: config, then SGA_SEED, then 0)");
  };

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic annotation corpus");
  add_common(synth_cmd);
  synth_cmd->add_option("--preset", synth.preset, "identity | cyclic | mixed | uniform");
  synth_cmd->add_option("--videos", synth.videos, "Number of videos");
  synth_cmd->add_option("--out", synth.out, "Corpus JSON path")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint.bin and train_log.csv");
  add_common(train_cmd);
  train_cmd->add_option("--corpus", train.corpus, "Corpus JSON (default: synthesize from [synth])");
  train_cmd->add_option("--model", train.model, "scenesayer-ode | scenesayer-sde | baseline-plus | baseline-plus-plus");
  train_cmd->add_option("--solver", train.solver, "euler | adams-bashforth4 | euler-maruyama | reversible-heun");
  train_cmd->add_option("--h", train.h, "Solver step in frames");
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--horizon", train.horizon, "Training anticipation horizon H_t");
  train_cmd->add_option("--lr", train.lr);
  train_cmd->add_option("--out-dir", train.out_dir)->required();
  train_cmd->add_flag("--resume", train.resume, "Continue from out-dir/checkpoint.bin");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and write metrics.csv and metrics.json");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval.checkpoint);
  eval_cmd->add_flag("--persistence", eval.persistence, "Evaluate the copy-last-graph baseline instead");
  eval_cmd->add_option("--corpus", eval.corpus)->required();
  eval_cmd->add_option("--out-dir", eval.out_dir)->required();
  eval.regimes.add_to(eval_cmd);

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare checkpoints side by side");
  add_common(ablate_cmd);
  ablate_cmd->add_option("--checkpoint", ablate.checkpoints, "Checkpoint (repeat)")->required();
  ablate_cmd->add_option("--corpus", ablate.corpus)->required();
  ablate_cmd->add_option("--out-dir", ablate.out_dir)->required();
  ablate.regimes.add_to(ablate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) run_synth(common, synth);
    if (*train_cmd) run_train(common, train);
    if (*eval_cmd) run_eval(common, eval);
    if (*ablate_cmd) run_ablate(common, ablate);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const scene::CorpusParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const scene::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CompatibilityError& e) {
    std::cerr << "compatibility error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
