#include "sga/io/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "toml.hpp"
#include "sga/util/errors.hpp"
#include "sga/util/rng.hpp"

namespace sga::io {

namespace {

// Typed reads from one TOML table; remembers keys so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  [[nodiscard]] bool has(const char* key) const { return table_ && table_->contains(key); }
  void allow(const char* key) { seen_.insert(key); }

  void size(const char* key, std::size_t& out) {
    if (auto n = node(key)) {
      auto v = n->value<std::int64_t>();
      if (!n->is_integer() || !v || *v < 0) fail(key, "expected a nonnegative integer");
      out = static_cast<std::size_t>(*v);
    }
  }
  void u64(const char* key, std::optional<std::uint64_t>& out) {
    if (auto n = node(key)) {
      auto v = n->value<std::int64_t>();
      if (!n->is_integer() || !v || *v < 0) fail(key, "expected a nonnegative integer");
      out = static_cast<std::uint64_t>(*v);
    }
  }
  void real(const char* key, double& out) {
    if (auto n = node(key)) {
      if (!n->is_number()) fail(key, "expected a number");
      out = *n->value<double>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (auto n = node(key)) {
      if (!n->is_boolean()) fail(key, "expected true or false");
      out = *n->value<bool>();
    }
  }
  std::optional<std::string> string(const char* key) {
    if (auto n = node(key)) {
      if (!n->is_string()) fail(key, "expected a string");
      return *n->value<std::string>();
    }
    return std::nullopt;
  }
  template <typename F>
  void array(const char* key, F&& each) {
    if (auto n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) fail(key, "expected an array");
      arr->for_each([&](const toml::node& el) { each(el, std::string(key)); });
    }
  }
  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.count(std::string(k.str()))) {
        throw ConfigError(prefix() + std::string(k.str()) + ": unknown key");
      }
    }
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(prefix() + key + ": " + msg);
  }

 private:
  const toml::node* node(const char* key) {
    seen_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }
  [[nodiscard]] std::string prefix() const { return name_.empty() ? "" : name_ + "."; }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

const toml::table* subtable(const toml::table& root, const char* name) {
  const auto* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(std::string(name) + ": expected a table");
  return n->as_table();
}

}  // namespace

std::vector<engine::EvalRegime> EvalSection::regimes() const {
  std::vector<engine::EvalRegime> out;
  for (double f : context_fractions) out.push_back(engine::EvalRegime::context(f));
  for (std::size_t h : future_frames) out.push_back(engine::EvalRegime::future_frame(h));
  if (out.empty()) {
    for (double f : {0.3, 0.5, 0.7, 0.9}) out.push_back(engine::EvalRegime::context(f));
  }
  return out;
}

std::uint64_t ExperimentConfig::resolved_seed() const {
  if (seed) return *seed;
  const char* env = std::getenv("SGA_SEED");
  if (env == nullptr || *env == '\0') return 0;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw ConfigError(std::string("SGA_SEED: expected a nonnegative integer, got '") + env + "'");
  }
  return v;
}

model::LossWeights ExperimentConfig::resolved_weights() const {
  if (weights) return *weights;
  switch (model.kind) {
    case model::ModelKind::baseline_plus: return model::LossWeights::variant_plus();
    case model::ModelKind::baseline_plus_plus: return model::LossWeights::variant_plus_plus();
    default: return model::LossWeights{};
  }
}

std::uint64_t ExperimentConfig::eval_seed() const { return eval.seed ? *eval.seed : resolved_seed(); }

model::ModelConfig ExperimentConfig::model_for(std::size_t num_object_classes, std::size_t num_predicates) const {
  auto out = model;
  out.encoder.num_object_classes = num_object_classes;
  out.encoder.num_predicates = num_predicates;
  if (solver_method) {
    out.solver.method = *solver_method;
  } else {
    out.solver.method = model::ModelConfig::defaults(model.kind, 0, 0).solver.method;
  }
  return out;
}

engine::TrainConfig ExperimentConfig::train_for() const {
  auto out = train;
  out.weights = resolved_weights();
  out.seed = mix_seed(resolved_seed(), 1);
  out.actor_category = model.encoder.actor_category;
  return out;
}

scene::SynthConfig ExperimentConfig::synth_for() const {
  auto out = synth;
  out.actor_category = model.encoder.actor_category;
  if (out.transition.empty()) out.transition = scene::preset_transition(synth_preset, out.num_predicates);
  return out;
}

void ExperimentConfig::validate() const {
  (void)resolved_seed();
  synth_for().validate();
  model_for(synth.num_object_classes, synth.num_predicates).validate();
  resolved_weights().validate();
  train_for().validate();
  if (model.encoder.actor_category >= synth.num_object_classes) {
    throw ConfigError("model.actor_category: out of range for synth.num_object_classes");
  }
  for (const auto& r : eval.regimes()) r.validate();
  engine::EvalOptions opt;
  opt.ks = eval.ks;
  opt.strategies = eval.strategies;
  opt.samples = eval.samples;
  opt.validate();
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.model.encoder = model::EncoderConfig{};
  return cfg;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(msg.str());
  }
  auto cfg = default_config();
  Section top(&root, "");
  top.u64("seed", cfg.seed);
  for (const char* name : {"model", "solver", "loss_weights", "train", "synth", "eval"}) top.allow(name);

  Section m(subtable(root, "model"), "model");
  if (auto kind = m.string("kind")) cfg.model.kind = model::parse_model_kind(*kind);
  auto& e = cfg.model.encoder;
  m.size("actor_category", e.actor_category);
  m.size("d_obj_embed", e.d_obj_embed);
  m.size("d_proj", e.d_proj);
  m.size("d_sem", e.d_sem);
  m.size("depth", e.depth);
  m.size("heads", e.heads);
  m.size("ff_obj", e.ff_obj);
  m.size("ff_rel", e.ff_rel);
  m.size("max_positions", e.max_positions);
  m.size("field_hidden", cfg.model.field_hidden);
  m.size("head_hidden", cfg.model.head_hidden);
  m.boolean("teacher_forcing", cfg.model.teacher_forcing);
  m.boolean("temporal_prepass", cfg.model.temporal_prepass);
  m.finish();

  Section s(subtable(root, "solver"), "solver");
  if (auto method = s.string("method")) cfg.solver_method = dyn::parse_solver_method(*method);
  s.real("h", cfg.model.solver.h);
  s.finish();

  Section w(subtable(root, "loss_weights"), "loss_weights");
  if (w.has("gen") || w.has("object") || w.has("ant") || w.has("boxes") || w.has("recon")) {
    model::LossWeights lw = cfg.resolved_weights();
    w.real("gen", lw.gen);
    w.real("object", lw.object);
    w.real("ant", lw.ant);
    w.real("boxes", lw.boxes);
    w.real("recon", lw.recon);
    cfg.weights = lw;
  }
  w.finish();

  Section t(subtable(root, "train"), "train");
  t.size("epochs", cfg.train.epochs);
  t.size("horizon", cfg.train.horizon);
  t.real("lr", cfg.train.adam.lr);
  t.real("beta1", cfg.train.adam.beta1);
  t.real("beta2", cfg.train.adam.beta2);
  t.real("eps", cfg.train.adam.eps);
  t.finish();

  Section y(subtable(root, "synth"), "synth");
  if (auto preset = y.string("preset")) cfg.synth_preset = scene::parse_dynamics_preset(*preset);
  y.size("num_object_classes", cfg.synth.num_object_classes);
  y.size("num_predicates", cfg.synth.num_predicates);
  y.size("num_videos", cfg.synth.num_videos);
  y.size("min_frames", cfg.synth.min_frames);
  y.size("max_frames", cfg.synth.max_frames);
  y.size("min_pairs", cfg.synth.min_pairs);
  y.size("max_pairs", cfg.synth.max_pairs);
  y.size("max_frame_stride", cfg.synth.max_frame_stride);
  y.real("position_jitter", cfg.synth.position_jitter);
  y.real("orbit_radius", cfg.synth.orbit_radius);
  y.finish();

  Section v(subtable(root, "eval"), "eval");
  v.array("context_fractions", [&](const toml::node& n, const std::string& key) {
    if (!n.is_number()) v.fail(key, "expected numbers");
    cfg.eval.context_fractions.push_back(*n.value<double>());
  });
  v.array("future_frames", [&](const toml::node& n, const std::string& key) {
    auto x = n.value<std::int64_t>();
    if (!n.is_integer() || !x || *x < 1) v.fail(key, "expected positive integers");
    cfg.eval.future_frames.push_back(static_cast<std::size_t>(*x));
  });
  if (v.has("k")) cfg.eval.ks.clear();
  v.array("k", [&](const toml::node& n, const std::string& key) {
    auto x = n.value<std::int64_t>();
    if (!n.is_integer() || !x || *x < 1) v.fail(key, "expected positive integers");
    cfg.eval.ks.push_back(static_cast<std::size_t>(*x));
  });
  if (v.has("strategies")) cfg.eval.strategies.clear();
  v.array("strategies", [&](const toml::node& n, const std::string& key) {
    if (!n.is_string()) v.fail(key, "expected strings");
    cfg.eval.strategies.push_back(engine::parse_strategy(*n.value<std::string>()));
  });
  v.u64("seed", cfg.eval.seed);
  v.size("samples", cfg.eval.samples);
  v.boolean("count_future_only_objects", cfg.eval.count_future_only_objects);
  v.size("threads", cfg.eval.threads);
  v.finish();

  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

namespace {

// Minimal TOML writer; doubles use the shortest representation that parses
// back to the same value.
class TomlWriter {
 public:
  void section(const char* name) { out_ << "\n[" << name << "]\n"; }
  void put(const char* key, const std::string& v) { out_ << key << " = \"" << v << "\"\n"; }
  void put(const char* key, const char* v) { put(key, std::string(v)); }
  void put(const char* key, bool v) { out_ << key << " = " << (v ? "true" : "false") << '\n'; }
  void put(const char* key, std::uint64_t v) { out_ << key << " = " << v << '\n'; }
  void put(const char* key, std::size_t v, int) { out_ << key << " = " << v << '\n'; }
  void put(const char* key, double v) { out_ << key << " = " << real(v) << '\n'; }
  template <typename T, typename F>
  void list(const char* key, const std::vector<T>& items, F&& fmt) {
    out_ << key << " = [";
    for (std::size_t i = 0; i < items.size(); ++i) out_ << (i ? ", " : "") << fmt(items[i]);
    out_ << "]\n";
  }
  static std::string real(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  [[nodiscard]] std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

}  // namespace

std::string dump_config(const ExperimentConfig& cfg) {
  const auto mc = cfg.model_for(cfg.synth.num_object_classes, cfg.synth.num_predicates);
  const auto& e = mc.encoder;
  const auto w = cfg.resolved_weights();
  TomlWriter t;
  t.put("seed", cfg.resolved_seed());

  t.section("model");
  t.put("kind", model::to_string(mc.kind));
  t.put("actor_category", e.actor_category, 0);
  t.put("d_obj_embed", e.d_obj_embed, 0);
  t.put("d_proj", e.d_proj, 0);
  t.put("d_sem", e.d_sem, 0);
  t.put("depth", e.depth, 0);
  t.put("heads", e.heads, 0);
  t.put("ff_obj", e.ff_obj, 0);
  t.put("ff_rel", e.ff_rel, 0);
  t.put("max_positions", e.max_positions, 0);
  t.put("field_hidden", mc.field_hidden, 0);
  t.put("head_hidden", mc.head_hidden, 0);
  t.put("teacher_forcing", mc.teacher_forcing);
  t.put("temporal_prepass", mc.temporal_prepass);

  t.section("solver");
  t.put("method", dyn::to_string(mc.solver.method));
  t.put("h", mc.solver.h);

  t.section("loss_weights");
  t.put("gen", w.gen);
  t.put("object", w.object);
  t.put("ant", w.ant);
  t.put("boxes", w.boxes);
  t.put("recon", w.recon);

  t.section("train");
  t.put("epochs", cfg.train.epochs, 0);
  t.put("horizon", cfg.train.horizon, 0);
  t.put("lr", cfg.train.adam.lr);
  t.put("beta1", cfg.train.adam.beta1);
  t.put("beta2", cfg.train.adam.beta2);
  t.put("eps", cfg.train.adam.eps);

  t.section("synth");
  t.put("preset", scene::to_string(cfg.synth_preset));
  t.put("num_object_classes", cfg.synth.num_object_classes, 0);
  t.put("num_predicates", cfg.synth.num_predicates, 0);
  t.put("num_videos", cfg.synth.num_videos, 0);
  t.put("min_frames", cfg.synth.min_frames, 0);
  t.put("max_frames", cfg.synth.max_frames, 0);
  t.put("min_pairs", cfg.synth.min_pairs, 0);
  t.put("max_pairs", cfg.synth.max_pairs, 0);
  t.put("max_frame_stride", cfg.synth.max_frame_stride, 0);
  t.put("position_jitter", cfg.synth.position_jitter);
  t.put("orbit_radius", cfg.synth.orbit_radius);

  std::vector<double> fractions;
  std::vector<std::size_t> futures;
  for (const auto& r : cfg.eval.regimes()) {
    if (r.kind == engine::RegimeKind::context_fraction) {
      fractions.push_back(r.fraction);
    } else {
      futures.push_back(r.future);
    }
  }
  t.section("eval");
  t.list("context_fractions", fractions, TomlWriter::real);
  t.list("future_frames", futures, [](std::size_t v) { return std::to_string(v); });
  t.list("k", cfg.eval.ks, [](std::size_t v) { return std::to_string(v); });
  t.list("strategies", cfg.eval.strategies, [](engine::Strategy s) { return "\"" + engine::to_string(s) + "\""; });
  t.put("seed", cfg.eval_seed());
  t.put("samples", cfg.eval.samples, 0);
  t.put("count_future_only_objects", cfg.eval.count_future_only_objects);
  t.put("threads", cfg.eval.threads, 0);
  return t.str();
}

nlohmann::json model_config_json(const model::ModelConfig& c) {
  const auto& e = c.encoder;
  return {{"kind", model::to_string(c.kind)},
          {"encoder",
           {{"num_object_classes", e.num_object_classes},
            {"num_predicates", e.num_predicates},
            {"actor_category", e.actor_category},
            {"d_obj_embed", e.d_obj_embed},
            {"d_proj", e.d_proj},
            {"d_sem", e.d_sem},
            {"depth", e.depth},
            {"heads", e.heads},
            {"ff_obj", e.ff_obj},
            {"ff_rel", e.ff_rel},
            {"max_positions", e.max_positions}}},
          {"field_hidden", c.field_hidden},
          {"head_hidden", c.head_hidden},
          {"solver", {{"method", dyn::to_string(c.solver.method)}, {"h", c.solver.h}}},
          {"teacher_forcing", c.teacher_forcing},
          {"temporal_prepass", c.temporal_prepass}};
}

model::ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    model::ModelConfig c;
    c.kind = model::parse_model_kind(j.at("kind").get<std::string>());
    const auto& e = j.at("encoder");
    c.encoder.num_object_classes = e.at("num_object_classes").get<std::size_t>();
    c.encoder.num_predicates = e.at("num_predicates").get<std::size_t>();
    c.encoder.actor_category = e.at("actor_category").get<std::size_t>();
    c.encoder.d_obj_embed = e.at("d_obj_embed").get<std::size_t>();
    c.encoder.d_proj = e.at("d_proj").get<std::size_t>();
    c.encoder.d_sem = e.at("d_sem").get<std::size_t>();
    c.encoder.depth = e.at("depth").get<std::size_t>();
    c.encoder.heads = e.at("heads").get<std::size_t>();
    c.encoder.ff_obj = e.at("ff_obj").get<std::size_t>();
    c.encoder.ff_rel = e.at("ff_rel").get<std::size_t>();
    c.encoder.max_positions = e.at("max_positions").get<std::size_t>();
    c.field_hidden = j.at("field_hidden").get<std::size_t>();
    c.head_hidden = j.at("head_hidden").get<std::size_t>();
    c.solver.method = dyn::parse_solver_method(j.at("solver").at("method").get<std::string>());
    c.solver.h = j.at("solver").at("h").get<double>();
    c.teacher_forcing = j.at("teacher_forcing").get<bool>();
    c.temporal_prepass = j.at("temporal_prepass").get<bool>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw CompatibilityError(std::string("checkpoint model config: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw CompatibilityError(std::string("checkpoint model config: ") + ex.what());
  }
}

namespace {

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, const std::string& field, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw ConfigError(field + ": empty list entry in '" + text + "'");
    char* end = nullptr;
    errno = 0;
    const T v = parse(item.c_str(), &end);
    if (errno != 0 || *end != '\0') throw ConfigError(field + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(field + ": empty list");
  return out;
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& field) {
  return parse_list<std::size_t>(text, field, [&](const char* s, char** end) -> std::size_t {
    if (*s == '-') throw ConfigError(field + ": negative value '" + std::string(s) + "'");
    return std::strtoull(s, end, 10);
  });
}

std::vector<double> parse_double_list(const std::string& text, const std::string& field) {
  return parse_list<double>(text, field, [](const char* s, char** end) { return std::strtod(s, end); });
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

}  // namespace sga::io
