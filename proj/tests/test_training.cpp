#include <cmath>
#include <limits>

#include "doctest.h"
#include "mmax/checkpoint.hpp"
#include "mmax/config.hpp"
#include "mmax/errors.hpp"
#include "mmax/training.hpp"
#include "support.hpp"

using namespace mmax;
using namespace mmax::test;

namespace {

RunConfig desk() {
  RunConfig cfg;
  cfg.load_file(config_path("desk.cfg"));
  return cfg;
}

Model fresh_model(const RunConfig& cfg, const FusedLexicon& lex) {
  Model model(cfg.model_dims(lex.dims()), cfg.get_double("dropout"));
  Rng init = Rng::stream(cfg.get_u64("seed"), "init");
  model.params().initialize(init);
  return model;
}

Objective objective_of(const RunConfig& cfg) { return Objective{cfg.task(), cfg.score_spec()}; }

bool same_params(const Model& a, const Model& b) {
  auto pa = a.params().all();
  auto pb = b.params().all();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->name != pb[i]->name || !(pa[i]->value == pb[i]->value)) return false;
  }
  return true;
}

// Oracle for one AdaDelta entry.
struct ScalarAdaDelta {
  double eg2 = 0, edx2 = 0, rho = 0.95, eps = 1e-6;
  double step(double g) {
    eg2 = rho * eg2 + (1 - rho) * g * g;
    const double dx = -std::sqrt(edx2 + eps) / std::sqrt(eg2 + eps) * g;
    edx2 = rho * edx2 + (1 - rho) * dx * dx;
    return dx;
  }
};

}  // namespace

TEST_CASE("AdaDelta: first step on a unit gradient") {
  Parameter w("w", 1, 1);
  std::vector<Parameter*> ps{&w};
  AdaDeltaState state(ps);
  w.grad(0, 0) = 1.0;
  state.step(ps);
  CHECK(state.mean_sq_grad()[0](0, 0) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(w.value(0, 0) == doctest::Approx(-4.4721e-3).epsilon(1e-4));
  CHECK(w.value(0, 0) == doctest::Approx(-std::sqrt(1e-6) / std::sqrt(0.050001)).epsilon(1e-14));
}

TEST_CASE("AdaDelta: the second identical step is larger") {
  Parameter w("w", 1, 1);
  std::vector<Parameter*> ps{&w};
  AdaDeltaState state(ps);
  ScalarAdaDelta oracle;
  w.grad(0, 0) = 1.0;
  state.step(ps);
  const double d1 = w.value(0, 0);
  state.step(ps);
  const double d2 = w.value(0, 0) - d1;
  CHECK(std::abs(d2) > std::abs(d1));
  const double o1 = oracle.step(1.0);
  const double o2 = oracle.step(1.0);
  CHECK(d1 == doctest::Approx(o1).epsilon(1e-14));
  CHECK(d2 == doctest::Approx(o2).epsilon(1e-12));
}

TEST_CASE("AdaDelta property: matches the scalar oracle, keeps accumulators nonnegative") {
  Rng rng = Rng::stream(1, "test");
  Parameter a("a", 2, 3), b("b", 4, 1);
  std::vector<Parameter*> ps{&a, &b};
  AdaDeltaState state(ps);
  std::vector<ScalarAdaDelta> oracle(10);
  std::vector<double> expect(10, 0.0);
  for (int step = 0; step < 200; ++step) {
    std::size_t k = 0;
    for (Parameter* p : ps) {
      for (double& g : p->grad.data()) {
        g = rng.uniform() < 0.2 ? 0.0 : rng.uniform(-10, 10);
        expect[k] += oracle[k].step(g);
        ++k;
      }
    }
    state.step(ps);
    for (const auto* acc : {&state.mean_sq_grad(), &state.mean_sq_update()}) {
      for (const Matrix& m : *acc) {
        for (double v : m.data()) {
          CHECK(v >= 0.0);
          CHECK(std::isfinite(v));
        }
      }
    }
  }
  std::size_t k = 0;
  for (Parameter* p : ps)
    for (double v : p->value.data()) CHECK(v == doctest::Approx(expect[k++]).epsilon(1e-9));
}

TEST_CASE("AdaDelta: zero gradients decay the accumulators and leave parameters bit-identical") {
  Rng rng = Rng::stream(2, "test");
  Parameter w("w", 3, 3);
  randomize(w, rng);
  std::vector<Parameter*> ps{&w};
  AdaDeltaState state(ps);
  for (double& g : w.grad.data()) g = rng.uniform(-1, 1);
  state.step(ps);
  const Matrix before = w.value;
  const Matrix eg2 = state.mean_sq_grad()[0];
  const Matrix edx2 = state.mean_sq_update()[0];
  w.zero_grad();
  state.step(ps);
  CHECK(w.value == before);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(state.mean_sq_grad()[0].data()[i] == doctest::Approx(0.95 * eg2.data()[i]).epsilon(1e-15));
    CHECK(state.mean_sq_update()[0].data()[i] == doctest::Approx(0.95 * edx2.data()[i]).epsilon(1e-15));
  }
}

TEST_CASE("train: one example and one epoch make exactly one step") {
  RunConfig cfg = desk();
  auto lex = load_lexicon(cfg);
  Model model = fresh_model(cfg, *lex);
  PairDataset data = load_pairs(data_path("sts_toy.tsv"), Task::Sts);
  data.examples.resize(1);
  TrainConfig tc = cfg.train_config();
  tc.epochs = 1;
  const TrainResult r = train(model, *lex, data, nullptr, objective_of(cfg), tc);
  CHECK(r.steps == 1);
  CHECK(r.history.size() == 1);
  CHECK(std::isnan(r.history[0].valid_metric));

  PairDataset empty;
  CHECK_THROWS_AS(train(model, *lex, empty, nullptr, objective_of(cfg), tc), DataError);
}

TEST_CASE("train: loss decreases over the first five epochs on the toy set") {
  RunConfig cfg = desk();
  auto lex = load_lexicon(cfg);
  Model model = fresh_model(cfg, *lex);
  const PairDataset data = load_pairs(data_path("sts_toy.tsv"), Task::Sts);
  REQUIRE(data.examples.size() == 16);
  TrainConfig tc = cfg.train_config();
  tc.epochs = 5;
  const Objective obj = objective_of(cfg);
  std::vector<double> losses{mean_loss(model, *lex, data, obj)};
  train(model, *lex, data, nullptr, obj, tc, [&](const EpochRecord&) { losses.push_back(mean_loss(model, *lex, data, obj)); });
  REQUIRE(losses.size() == 6);
  for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("train: identical seeds give bit-identical parameters and checkpoints") {
  RunConfig cfg = desk();
  cfg.set("dropout", "0.5");
  auto lex = load_lexicon(cfg);
  const PairDataset data = load_pairs(data_path("sts_toy.tsv"), Task::Sts);
  TrainConfig tc = cfg.train_config();
  tc.epochs = 3;
  tc.batch_size = 5;
  Model a = fresh_model(cfg, *lex);
  Model b = fresh_model(cfg, *lex);
  const TrainResult ra = train(a, *lex, data, &data, objective_of(cfg), tc);
  const TrainResult rb = train(b, *lex, data, &data, objective_of(cfg), tc);
  CHECK(same_params(a, b));
  CHECK(ra.steps == 12);
  CheckpointMeta meta;
  meta.dims = a.dims();
  CHECK(encode_checkpoint(a, &*ra.optimizer, meta) == encode_checkpoint(b, &*rb.optimizer, meta));
}

TEST_CASE("train: embeddings are never modified") {
  RunConfig cfg = desk();
  auto lex = load_lexicon(cfg);
  const auto before = lex->content_hash();
  Model model = fresh_model(cfg, *lex);
  const PairDataset data = load_pairs(data_path("sts_toy.tsv"), Task::Sts);
  TrainConfig tc = cfg.train_config();
  tc.epochs = 2;
  train(model, *lex, data, nullptr, objective_of(cfg), tc);
  CHECK(lex->content_hash() == before);
}

TEST_CASE("train: a non-finite loss names the batch") {
  RunConfig cfg = desk();
  auto lex = load_lexicon(cfg);
  Model model = fresh_model(cfg, *lex);
  model.params().head.b_l2.value(0, 0) = std::numeric_limits<double>::infinity();
  const PairDataset data = load_pairs(data_path("sts_toy.tsv"), Task::Sts);
  TrainConfig tc = cfg.train_config();
  tc.epochs = 1;
  try {
    train(model, *lex, data, nullptr, objective_of(cfg), tc);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}

TEST_CASE("checkpoint: round trip is bit-exact") {
  RunConfig cfg = desk();
  auto lex = load_lexicon(cfg);
  Model model = fresh_model(cfg, *lex);
  const PairDataset data = load_pairs(data_path("sts_toy.tsv"), Task::Sts);
  TrainConfig tc = cfg.train_config();
  tc.epochs = 2;
  const TrainResult r = train(model, *lex, data, nullptr, objective_of(cfg), tc);

  CheckpointMeta meta;
  meta.dims = model.dims();
  meta.score = cfg.score_spec();
  meta.dropout = model.dropout_p();
  meta.epoch = 2;
  meta.config = cfg.values();
  meta.config_fingerprint = cfg.fingerprint();
  TempDir dir;
  const std::string path = dir.file("m.ckpt");
  save_checkpoint(path, model, &*r.optimizer, meta);
  const LoadedCheckpoint back = load_checkpoint(path, &model.dims());
  CHECK(same_params(model, *back.model));
  CHECK(back.meta.dims == model.dims());
  CHECK(back.meta.epoch == 2);
  CHECK(back.meta.config == cfg.values());
  CHECK(back.meta.config_fingerprint == cfg.fingerprint());
  REQUIRE(back.optimizer.has_value());
  CHECK(back.optimizer->mean_sq_grad() == r.optimizer->mean_sq_grad());
  CHECK(back.optimizer->mean_sq_update() == r.optimizer->mean_sq_update());
  CHECK(encode_checkpoint(*back.model, &*back.optimizer, back.meta) == read_file(path));
}

TEST_CASE("checkpoint: errors") {
  RunConfig cfg = desk();
  auto lex = load_lexicon(cfg);
  Model model = fresh_model(cfg, *lex);
  CheckpointMeta meta;
  meta.dims = model.dims();
  const std::string bytes = encode_checkpoint(model, nullptr, meta);

  ModelDims other = model.dims();
  other.filters = 17;
  try {
    decode_checkpoint(bytes, &other);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("filters") != std::string::npos);
    CHECK(msg.find("16") != std::string::npos);
    CHECK(msg.find("17") != std::string::npos);
  }

  for (std::size_t cut : {std::size_t{0}, std::size_t{7}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, cut)), DataError);
  }

  std::string versioned = bytes;
  versioned[8] = 9;
  try {
    decode_checkpoint(versioned);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("version 9") != std::string::npos);
  }

  std::string corrupt = bytes;
  corrupt[bytes.size() - 100] ^= 0x01;
  CHECK_THROWS_WITH_AS(decode_checkpoint(corrupt), doctest::Contains("checksum"), DataError);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), DataError);
  TempDir dir;
  CHECK_THROWS_AS(load_checkpoint(dir.file("none.ckpt")), DataError);
}
