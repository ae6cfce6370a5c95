#include "sga/model/sga_model.hpp"

#include <map>

#include "sga/util/errors.hpp"
#include "sga/util/rng.hpp"

namespace sga::model {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "scenesayer-ode") return ModelKind::scenesayer_ode;
  if (name == "scenesayer-sde") return ModelKind::scenesayer_sde;
  if (name == "baseline-plus") return ModelKind::baseline_plus;
  if (name == "baseline-plus-plus") return ModelKind::baseline_plus_plus;
  throw ConfigError("model: unknown kind '" + name +
                    "' (scenesayer-ode|scenesayer-sde|baseline-plus|baseline-plus-plus)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::scenesayer_ode: return "scenesayer-ode";
    case ModelKind::scenesayer_sde: return "scenesayer-sde";
    case ModelKind::baseline_plus: return "baseline-plus";
    case ModelKind::baseline_plus_plus: return "baseline-plus-plus";
  }
  return "unknown";
}

bool is_scenesayer(ModelKind kind) {
  return kind == ModelKind::scenesayer_ode || kind == ModelKind::scenesayer_sde;
}

std::vector<std::size_t> window_starts(std::size_t num_frames, std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t t = kMinContext; t + horizon <= num_frames; ++t) out.push_back(t);
  return out;
}

ModelConfig ModelConfig::defaults(ModelKind kind, std::size_t num_object_classes, std::size_t num_predicates) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.encoder.num_object_classes = num_object_classes;
  cfg.encoder.num_predicates = num_predicates;
  cfg.solver.method = kind == ModelKind::scenesayer_sde ? dyn::SolverMethod::reversible_heun_stratonovich
                                                        : dyn::SolverMethod::adams_bashforth4;
  return cfg;
}

void ModelConfig::validate() const {
  encoder.validate();
  if (field_hidden == 0) throw ConfigError("model.field_hidden: must be positive");
  if (head_hidden == 0) throw ConfigError("model.head_hidden: must be positive");
  if (is_scenesayer(kind)) {
    solver.validate();
    const bool sde = dyn::is_sde_method(solver.method);
    if (kind == ModelKind::scenesayer_sde && !sde) {
      throw ConfigError("solver.method: scenesayer-sde needs euler-maruyama or reversible-heun");
    }
    if (kind == ModelKind::scenesayer_ode && sde) {
      throw ConfigError("solver.method: scenesayer-ode needs euler or adams-bashforth4");
    }
  }
}

namespace {

// Anticipated rows paired with their ground truth at the anticipated frame.
struct Supervision {
  std::vector<std::size_t> pred_rows;
  std::vector<std::size_t> target_rows;
  std::vector<double> weights;
  std::vector<std::size_t> ant_rows;
  std::vector<std::vector<std::size_t>> ant_positives;
  std::vector<float> boxes;

  void add(const VideoInputs& in, std::size_t pred_row, std::size_t frame, std::size_t track) {
    const std::size_t q = in.find_pair(frame, track);
    if (q == VideoInputs::npos) return;
    const auto& pair = in.pairs[q];
    pred_rows.push_back(pred_row);
    target_rows.push_back(q);
    const double n = static_cast<double>(in.frame_object_count[frame]);
    weights.push_back(1.0 / (n * n));
    if (!pair.positives.empty()) {
      ant_rows.push_back(pred_row);
      ant_positives.push_back(pair.positives);
    }
    for (const auto* box : {&in.obj_box[pair.subject_row], &in.obj_box[pair.object_row]}) {
      boxes.insert(boxes.end(), box->begin(), box->end());
    }
  }
};

template <typename T>
double value_of(const BasicTensor<T>& t) {
  return t.defined() ? static_cast<double>(t.item()) : 0.0;
}

}  // namespace

template <typename T>
SgaModel<T>::SgaModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg.validate();
  Rng rng(seed);
  const auto& e = cfg.encoder;
  const std::size_t d = e.d_rel();
  encoder = RelationEncoder<T>(store_, e, rng);
  const bool scenesayer = is_scenesayer(cfg.kind);
  const bool gen = cfg.kind != ModelKind::baseline_plus;
  heads = Heads<T>(store_, d, e.d_obj(), e.num_predicates, e.num_object_classes, cfg.head_hidden, scenesayer, gen, rng);
  const std::vector<std::size_t> widths{d, cfg.field_hidden, cfg.field_hidden, d};
  switch (cfg.kind) {
    case ModelKind::scenesayer_ode:
      field = nn::Mlp<T>(store_, "dyn.field", widths, nn::Activation::tanh, rng, nn::Init::small_normal);
      break;
    case ModelKind::scenesayer_sde:
      drift = nn::Mlp<T>(store_, "dyn.drift", widths, nn::Activation::tanh, rng, nn::Init::small_normal);
      diffusion = nn::Mlp<T>(store_, "dyn.diffusion", widths, nn::Activation::tanh, rng, nn::Init::small_normal);
      break;
    case ModelKind::baseline_plus:
    case ModelKind::baseline_plus_plus:
      anticipator = Anticipator<T>(store_, "anticipator", d, e.ff_rel, e.max_positions, rng);
      break;
  }
}

template <typename T>
std::vector<BasicTensor<T>> SgaModel<T>::anticipate_latent(const BasicTensor<T>& z0, std::size_t horizon,
                                                           std::uint64_t noise_seed) const {
  if (cfg_.kind == ModelKind::scenesayer_ode) {
    dyn::Field<T> f = [this](const BasicTensor<T>& z) { return field(z); };
    return dyn::ode_solve<T>(f, z0, horizon, cfg_.solver);
  }
  if (cfg_.kind == ModelKind::scenesayer_sde) {
    dyn::Field<T> mu = [this](const BasicTensor<T>& z) { return drift(z); };
    dyn::Field<T> sigma = [this](const BasicTensor<T>& z) { return diffusion(z); };
    dyn::BrownianPath path(noise_seed, cfg_.solver.h, z0.size());
    return dyn::sde_solve<T>(mu, sigma, z0, horizon, cfg_.solver, path);
  }
  throw ad::ContractError("anticipate_latent: baselines have no latent dynamics");
}

template <typename T>
BasicTensor<T> SgaModel<T>::baseline_sequence(const Encoded<T>& enc) const {
  if (cfg_.kind == ModelKind::baseline_plus_plus && cfg_.temporal_prepass) return enc.temporal;
  return enc.spatial;
}

template <typename T>
BasicTensor<T> SgaModel<T>::video_loss(const VideoInputs& in, std::size_t horizon, const LossWeights& weights,
                                       std::uint64_t noise_seed, LossBreakdown* parts) const {
  if (horizon == 0) throw ConfigError("train.horizon: must be at least 1");
  const bool need_temporal = cfg_.kind != ModelKind::baseline_plus;
  auto enc = encode_video(encoder, in, need_temporal);

  ObservedTerms<T> observed;
  std::size_t clamped = 0;
  if (!in.obj_category.empty()) {
    observed.object = object_ce_loss(heads.object_probs(enc.objects), in.obj_category, &clamped);
  }
  AnticipatedTerms<T> anticipated;
  std::size_t windows = 0;
  if (!in.pairs.empty()) {
    const BasicTensor<T> reps = is_scenesayer(cfg_.kind) ? enc.temporal : baseline_sequence(enc);
    if (heads.has_gen()) {
      std::vector<std::size_t> rows;
      std::vector<std::vector<std::size_t>> positives;
      for (std::size_t r = 0; r < in.pairs.size(); ++r) {
        if (in.pairs[r].positives.empty()) continue;
        rows.push_back(r);
        positives.push_back(in.pairs[r].positives);
      }
      if (!rows.empty()) observed.gen = predicate_margin_loss(heads.gen_logits(ad::gather_rows(reps, rows)), positives);
    }
    if (is_scenesayer(cfg_.kind)) {
      const auto starts = window_starts(in.num_frames, horizon);
      std::vector<std::size_t> z0_rows, z0_window;
      for (std::size_t w = 0; w < starts.size(); ++w) {
        for (std::size_t r : in.frame_pairs[starts[w] - 1]) {
          z0_rows.push_back(r);
          z0_window.push_back(starts[w]);
        }
      }
      windows = starts.size();
      if (!z0_rows.empty()) {
        const std::size_t n = z0_rows.size();
        auto traj = anticipate_latent(ad::gather_rows(reps, z0_rows), horizon, noise_seed);
        auto all = ad::concat<T>(traj, 0);
        Supervision sup;
        for (std::size_t h = 1; h <= horizon; ++h) {
          for (std::size_t i = 0; i < n; ++i) {
            sup.add(in, (h - 1) * n + i, z0_window[i] - 1 + h, in.pairs[z0_rows[i]].track);
          }
        }
        if (!sup.pred_rows.empty()) {
          auto pred = ad::gather_rows(all, sup.pred_rows);
          anticipated.recon = reconstruction_loss(pred, ad::gather_rows(reps, sup.target_rows), sup.weights);
          auto gt = BasicTensor<T>::from({sup.pred_rows.size(), 8}, std::vector<T>(sup.boxes.begin(), sup.boxes.end()));
          anticipated.boxes = bbox_regression_loss(heads.boxes(pred), gt);
          if (!sup.ant_rows.empty()) {
            anticipated.ant =
                predicate_margin_loss(heads.ant_logits(ad::gather_rows(all, sup.ant_rows)), sup.ant_positives);
          }
        }
      }
    } else {
      baseline_terms(in, reps, horizon, anticipated, windows);
    }
  }
  auto total = total_loss<T>(observed, {anticipated}, weights);
  if (parts != nullptr) {
    parts->gen = value_of(observed.gen);
    parts->object = value_of(observed.object);
    parts->ant = value_of(anticipated.ant);
    parts->boxes = value_of(anticipated.boxes);
    parts->recon = value_of(anticipated.recon);
    parts->total = value_of(total);
    parts->windows = windows;
    parts->clamped = clamped;
  }
  return total;
}

template <typename T>
void SgaModel<T>::baseline_terms(const VideoInputs& in, const BasicTensor<T>& reps, std::size_t horizon,
                                 AnticipatedTerms<T>& terms, std::size_t& windows) const {
  const auto starts = window_starts(in.num_frames, horizon);
  windows = starts.size();
  if (starts.empty()) return;
  Supervision sup;
  BasicTensor<T> preds;
  if (cfg_.teacher_forcing) {
    // With ground-truth context every anticipated frame is a one-step
    // prediction; the windows cover frames 3 .. N_F-1 once each.
    Sequence<T> seq{reps, {}, in.pair_frames()};
    std::map<std::size_t, std::size_t> dense;
    for (const auto& p : in.pairs) seq.group.push_back(dense.emplace(p.track, dense.size()).first->second);
    preds = anticipator.predict_next(seq);
    for (std::size_t r = 0; r < in.pairs.size(); ++r) {
      const std::size_t next = in.pairs[r].frame + 1;
      if (next < kMinContext || next >= in.num_frames) continue;
      sup.add(in, r, next, in.pairs[r].track);
    }
  } else {
    Sequence<T> ctx;
    std::vector<std::size_t> rows, group_window, group_track;
    for (std::size_t T0 : starts) {
      for (std::size_t last : in.frame_pairs[T0 - 1]) {
        const std::size_t g = group_window.size();
        group_window.push_back(T0);
        group_track.push_back(in.pairs[last].track);
        for (std::size_t r = 0; r < in.pairs.size(); ++r) {
          if (in.pairs[r].track != in.pairs[last].track || in.pairs[r].frame >= T0) continue;
          rows.push_back(r);
          ctx.group.push_back(g);
          ctx.position.push_back(in.pairs[r].frame);
        }
      }
    }
    if (rows.empty()) return;
    ctx.rows = ad::gather_rows(reps, rows);
    auto rollout = anticipator.anticipate(ctx, horizon);
    preds = ad::concat<T>(rollout.generated, 0);
    const std::size_t groups = group_window.size();
    for (std::size_t h = 1; h <= horizon; ++h) {
      for (std::size_t g = 0; g < groups; ++g) sup.add(in, (h - 1) * groups + g, group_window[g] - 1 + h, group_track[g]);
    }
  }
  if (sup.pred_rows.empty()) return;
  auto pred = ad::gather_rows(preds, sup.pred_rows);
  terms.recon = reconstruction_loss(pred, ad::gather_rows(reps, sup.target_rows), sup.weights);
  if (!sup.ant_rows.empty()) {
    terms.ant = predicate_margin_loss(heads.ant_logits(ad::gather_rows(preds, sup.ant_rows)), sup.ant_positives);
  }
}

template <typename T>
Forecast SgaModel<T>::forecast(const VideoInputs& in, std::size_t horizon, std::uint64_t noise_seed) const {
  ad::NoGradScope<T> no_grad;
  Forecast out;
  out.observed = in.num_frames;
  out.horizon = horizon;
  if (horizon == 0 || in.num_frames == 0) return out;
  const auto& last = in.frame_pairs[in.num_frames - 1];
  if (last.empty()) return out;
  const bool need_temporal = cfg_.kind != ModelKind::baseline_plus;
  auto enc = encode_video(encoder, in, need_temporal);

  std::vector<BasicTensor<T>> steps;
  if (is_scenesayer(cfg_.kind)) {
    steps = anticipate_latent(ad::gather_rows(enc.temporal, last), horizon, noise_seed);
  } else {
    const auto reps = baseline_sequence(enc);
    Sequence<T> ctx;
    std::vector<std::size_t> rows;
    for (std::size_t g = 0; g < last.size(); ++g) {
      const std::size_t track = in.pairs[last[g]].track;
      for (std::size_t r = 0; r < in.pairs.size(); ++r) {
        if (in.pairs[r].track != track) continue;
        rows.push_back(r);
        ctx.group.push_back(g);
        ctx.position.push_back(in.pairs[r].frame);
      }
    }
    ctx.rows = ad::gather_rows(reps, rows);
    steps = anticipator.anticipate(ctx, horizon).generated;
  }
  for (std::size_t g = 0; g < last.size(); ++g) {
    const auto& p = in.pairs[last[g]];
    PairForecast pf;
    pf.subject_local = p.subject_local;
    pf.object_local = p.object_local;
    pf.subject_category = in.obj_category[p.subject_row];
    pf.object_category = in.obj_category[p.object_row];
    out.pairs.push_back(std::move(pf));
  }
  for (const auto& step : steps) {
    auto probs = ad::softmax(heads.ant_logits(step));
    const std::size_t P = probs.cols();
    for (std::size_t g = 0; g < last.size(); ++g) {
      std::vector<float> s(P);
      for (std::size_t k = 0; k < P; ++k) s[k] = static_cast<float>(probs.at(g, k));
      out.pairs[g].scores.push_back(std::move(s));
    }
  }
  return out;
}

template <typename T>
std::vector<std::vector<float>> SgaModel<T>::observed_scores(const VideoInputs& in) const {
  ad::NoGradScope<T> no_grad;
  std::vector<std::vector<float>> out;
  if (!heads.has_gen() || in.pairs.empty()) return out;
  auto enc = encode_video(encoder, in, cfg_.kind != ModelKind::baseline_plus);
  const auto reps = is_scenesayer(cfg_.kind) ? enc.temporal : baseline_sequence(enc);
  auto probs = ad::softmax(heads.gen_logits(reps));
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    std::vector<float> s(probs.cols());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<float>(probs.at(r, k));
    out.push_back(std::move(s));
  }
  return out;
}

template class SgaModel<float>;
template class SgaModel<double>;

}  // namespace sga::model
