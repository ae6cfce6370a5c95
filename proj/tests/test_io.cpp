#include <cstdlib>
#include <string>

#include "doctest.h"
#include "sga/engine/train.hpp"
#include "sga/io/checkpoint.hpp"
#include "sga/io/config.hpp"
#include "sga/util/errors.hpp"
#include "support/fixtures.hpp"

using namespace sga;

namespace {

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (const char* old = std::getenv("SGA_SEED")) saved = old;
    if (value) {
      setenv("SGA_SEED", value, 1);
    } else {
      unsetenv("SGA_SEED");
    }
  }
  ~EnvGuard() {
    if (saved) {
      setenv("SGA_SEED", saved->c_str(), 1);
    } else {
      unsetenv("SGA_SEED");
    }
  }
  std::optional<std::string> saved;
};

}  // namespace

TEST_CASE("config: defaults dump the kind loss weights and round-trip") {
  EnvGuard env(nullptr);
  auto cfg = io::default_config();
  const auto text = io::dump_config(cfg);
  CHECK(text.find("gen = 1.0") != std::string::npos);
  CHECK(text.find("object = 1.0") != std::string::npos);
  CHECK(text.find("ant = 2.0") != std::string::npos);
  CHECK(text.find("boxes = 2.0") != std::string::npos);
  CHECK(text.find("recon = 2.0") != std::string::npos);
  CHECK(io::dump_config(io::parse_config(text)) == text);
}

TEST_CASE("config: doubles survive the dump exactly") {
  auto cfg = io::parse_config("seed = 3\n[solver]\nh = 0.3333333333333333\n[train]\nlr = 0.00031415926535\n");
  const auto back = io::parse_config(io::dump_config(cfg));
  CHECK(back.model.solver.h == cfg.model.solver.h);
  CHECK(back.train.adam.lr == 0.00031415926535);
  CHECK(back.resolved_seed() == 3);
}

TEST_CASE("config: unknown keys and bad values are ConfigError") {
  CHECK_THROWS_AS(io::parse_config("[train]\nepoch = 3\n"), ConfigError);
  CHECK_THROWS_AS(io::parse_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(io::parse_config("[model]\nkind = \"lstm\"\n"), ConfigError);
  CHECK_THROWS_AS(io::parse_config("[train]\nepochs = 0\n").validate(), ConfigError);
  CHECK_THROWS_AS(io::parse_config("[train\n"), ConfigError);
}

TEST_CASE("config: SGA_SEED is the fallback seed") {
  {
    EnvGuard env("41");
    CHECK(io::default_config().resolved_seed() == 41);
    CHECK(io::parse_config("seed = 5\n").resolved_seed() == 5);
    CHECK(io::parse_config("[eval]\nseed = 9\n").eval_seed() == 9);
    CHECK(io::default_config().eval_seed() == 41);
  }
  {
    EnvGuard env("nope");
    CHECK_THROWS_AS((void)io::default_config().resolved_seed(), ConfigError);
  }
  EnvGuard env(nullptr);
  CHECK(io::default_config().resolved_seed() == 0);
}

TEST_CASE("config: baseline kinds default to their own weights") {
  auto cfg = io::parse_config("[model]\nkind = \"baseline-plus-plus\"\n");
  const auto w = cfg.resolved_weights();
  CHECK(w == model::LossWeights::variant_plus_plus());
  auto plus = io::parse_config("[model]\nkind = \"baseline-plus\"\n").resolved_weights();
  CHECK(plus == model::LossWeights::variant_plus());
}

TEST_CASE("checkpoint: encode, decode and re-encode are byte identical") {
  const auto corpus = testing::small_corpus(scene::DynamicsPreset::mixed, 3, 2);
  model::SgaModel<float> m(testing::tiny_config(model::ModelKind::scenesayer_sde), 4);
  engine::TrainConfig tc;
  tc.epochs = 1;
  tc.seed = 6;
  engine::TrainState state;
  engine::train(m, corpus, tc, state);

  const auto ckpt = io::make_checkpoint(m, *corpus.taxonomy, state);
  const auto bytes = io::encode_checkpoint(ckpt);
  const auto decoded = io::decode_checkpoint(bytes);
  CHECK(io::encode_checkpoint(decoded) == bytes);

  auto restored = io::restore(decoded);
  CHECK(restored.state.epochs_done == 1);
  CHECK(restored.state.adam.step == state.adam.step);
  const auto again = io::make_checkpoint(*restored.model, *corpus.taxonomy, restored.state);
  CHECK(io::encode_checkpoint(again) == bytes);

  const auto in = model::prepare_video(corpus.videos[0], 0, 3);
  const auto a = m.forecast(in, 2, 11);
  const auto b = restored.model->forecast(in, 2, 11);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t g = 0; g < a.pairs.size(); ++g) CHECK(a.pairs[g].scores == b.pairs[g].scores);
}

TEST_CASE("checkpoint: corruption and taxonomy mismatch are CompatibilityError") {
  const auto corpus = testing::small_corpus(scene::DynamicsPreset::identity, 2, 1);
  model::SgaModel<float> m(testing::tiny_config(model::ModelKind::scenesayer_ode), 1);
  const auto ckpt = io::make_checkpoint(m, *corpus.taxonomy, engine::TrainState{});
  auto bytes = io::encode_checkpoint(ckpt);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(io::decode_checkpoint(bad_magic), CompatibilityError);
  CHECK_THROWS_AS(io::decode_checkpoint(bytes.substr(0, bytes.size() - 4)), CompatibilityError);
  CHECK_THROWS_AS(io::decode_checkpoint(bytes.substr(0, 12)), CompatibilityError);

  auto other = *corpus.taxonomy;
  other.predicate_classes.push_back("extra");
  CHECK_THROWS_AS(io::check_taxonomy(ckpt, other), CompatibilityError);
  CHECK_NOTHROW(io::check_taxonomy(ckpt, *corpus.taxonomy));
}

TEST_CASE("checkpoint: missing file is IoError") {
  CHECK_THROWS_AS(io::load_checkpoint("/nonexistent/dir/ckpt.bin"), IoError);
}
