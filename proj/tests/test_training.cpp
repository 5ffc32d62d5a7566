#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "memce/training.hpp"

using namespace memce;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.embed_dim = 8;
  c.hidden = 6;
  c.dec_embed = 8;
  c.memory_slots = 4;
  c.temperature = 0.1;
  c.dropout = 0.0;
  return c;
}

}  // namespace

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  ParameterSet params;
  RandomSource rng(1);
  Tensor w = params.create("w", {4}, rng);
  std::vector<double> before(w.value().begin(), w.value().end());
  params.zero_grad();
  adam_step(params, 0.001);
  for (std::size_t i = 0; i < 4; ++i) CHECK(w.value()[i] == before[i]);
}

TEST_CASE("adam: first step from zero moments has magnitude ~lr") {
  // closed form: mhat = g, vhat = g^2, so the update is lr * g / (|g| + eps)
  ParameterSet params;
  RandomSource rng(2);
  Tensor w = params.create("w", {3}, rng);
  std::vector<double> before(w.value().begin(), w.value().end());
  w.grad_mut()[0] = 0.5;
  w.grad_mut()[1] = -2.0;
  w.grad_mut()[2] = 1e-3;
  adam_step(params, 0.01);
  CHECK(before[0] - w.value()[0] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(before[1] - w.value()[1] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(before[2] - w.value()[2] == doctest::Approx(0.01).epsilon(1e-4));

  w.grad_mut()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(params, 0.01), std::runtime_error);
}

TEST_CASE("gradient clipping caps the global norm") {
  ParameterSet params;
  RandomSource rng(3);
  Tensor a = params.create("a", {3}, rng);
  Tensor b = params.create("b", {2}, rng);
  for (double& g : a.grad_mut()) g = 3.0;
  for (double& g : b.grad_mut()) g = 4.0;
  const double norm = clip_gradients(params, 5.0);
  CHECK(norm == doctest::Approx(std::sqrt(9.0 * 3 + 16.0 * 2)));
  double after2 = 0.0;
  for (double g : a.grad()) after2 += g * g;
  for (double g : b.grad()) after2 += g * g;
  CHECK(std::sqrt(after2) == doctest::Approx(5.0).epsilon(1e-12));

  for (double& g : a.grad_mut()) g = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(clip_gradients(params, 5.0), std::runtime_error);
}

TEST_CASE("plateau scheduler semantics") {
  // strictly decreasing losses: rate unchanged
  PlateauScheduler s1(0.1, 0.8, 3, 1e-4, 1e-5);
  double lr = 0.1;
  for (int e = 0; e < 6; ++e) lr = s1.observe(1.0 - 0.1 * e);
  CHECK(lr == doctest::Approx(0.1));

  // flat losses for patience+1 epochs: exactly one decay
  PlateauScheduler s2(0.1, 0.8, 3, 1e-4, 1e-5);
  for (int e = 0; e < 4; ++e) lr = s2.observe(0.5);
  CHECK(lr == doctest::Approx(0.08));

  // flat forever: clamps at lr_min
  PlateauScheduler s3(0.1, 0.8, 1, 1e-4, 1e-3);
  for (int e = 0; e < 100; ++e) lr = s3.observe(0.5);
  CHECK(lr == doctest::Approx(1e-3));

  CHECK_THROWS_AS(PlateauScheduler(0.1, 0.8, 0, 1e-4, 1e-5), std::invalid_argument);
}

TEST_CASE("interaction loss: perfect and uniform predictors, equal weighting") {
  Tape tape(false);
  // a perfect predictor has zero loss
  Tensor sure = Tensor::from({3}, {50.0, 0.0, 0.0});
  CHECK(cross_entropy(tape, sure, 0).item() < 1e-12);
  // a uniform predictor over V classes scores ln V
  Tensor uniform = Tensor::zeros({8});
  CHECK(cross_entropy(tape, uniform, 5).item() == doctest::Approx(std::log(8.0)));

  // utterances of unequal length weight equally: the interaction loss is the
  // mean of the per-utterance means
  Tensor turn_a = Tensor::scalar(1.0);  // e.g. 10 tokens averaging 1.0
  Tensor turn_b = Tensor::scalar(3.0);  // e.g. 2 tokens averaging 3.0
  std::vector<Tensor> losses{turn_a, turn_b};
  CHECK(interaction_loss(tape, losses).item() == doctest::Approx(2.0));
}

TEST_CASE("validation split carves the trailing slice") {
  std::vector<InteractionRecord> data = generate_dataset(9, 40, PhenomenonMix{});
  auto [train_part, val_part] = split_validation(data, 0.05);
  CHECK(train_part.size() == 38);
  CHECK(val_part.size() == 2);
  CHECK(val_part[0].interaction_id == data[38].interaction_id);

  auto [t2, v2] = split_validation(data, 0.0);
  CHECK(v2.size() == 1);  // at least one interaction held out
  CHECK(t2.size() == 39);
}

TEST_CASE("zero epochs returns the initialized model") {
  std::vector<InteractionRecord> data = generate_dataset(11, 8, PhenomenonMix{});
  ToyDatabase db = ToyDatabase::generate(11, 100);
  Vocabulary vocab = Vocabulary::build(data);
  TrainConfig cfg;
  cfg.model = small_config();
  cfg.max_epochs = 0;
  MemceModel model(cfg.model, vocab, 5);
  std::vector<double> before(model.params().get("embed").value().begin(),
                             model.params().get("embed").value().end());
  auto [train_part, val_part] = split_validation(data, 0.25);
  TrainResult r = train(model, train_part, val_part, db, cfg);
  CHECK(r.best_epoch == 0);
  CHECK(r.epochs.empty());
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK(model.params().get("embed").value()[i] == before[i]);
}

TEST_CASE("training is deterministic and reduces the loss") {
  std::vector<InteractionRecord> data = generate_dataset(13, 10, PhenomenonMix{});
  ToyDatabase db = ToyDatabase::generate(13, 100);
  Vocabulary vocab = Vocabulary::build(data);
  TrainConfig cfg;
  cfg.model = small_config();
  cfg.model.dropout = 0.5;
  cfg.max_epochs = 3;
  cfg.seed = 21;

  auto [train_part, val_part] = split_validation(data, 0.2);

  MemceModel m1(cfg.model, vocab, cfg.seed);
  TrainResult r1 = train(m1, train_part, val_part, db, cfg);
  MemceModel m2(cfg.model, vocab, cfg.seed);
  TrainResult r2 = train(m2, train_part, val_part, db, cfg);

  REQUIRE(r1.epochs.size() == 3);
  REQUIRE(r2.epochs.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    // bit-identical per-epoch losses
    CHECK(r1.epochs[e].train_loss == r2.epochs[e].train_loss);
    CHECK(r1.epochs[e].val_loss == r2.epochs[e].val_loss);
    CHECK(r1.epochs[e].val_query_acc == r2.epochs[e].val_query_acc);
  }
  for (const std::string& name : m1.params().names()) {
    auto a = m1.params().get(name).value();
    auto b = m2.params().get(name).value();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  // the optimizer makes progress on the training objective
  CHECK(r1.epochs.back().train_loss < r1.epochs.front().train_loss);
}

TEST_CASE("checkpoint save and reload are bit-exact") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "memce_training_test";
  fs::create_directories(dir);
  const std::string path = (dir / "ckpt.json").string();

  std::vector<InteractionRecord> data = generate_dataset(17, 6, PhenomenonMix{});
  ToyDatabase db = ToyDatabase::generate(17, 80);
  Vocabulary vocab = Vocabulary::build(data);
  TrainConfig cfg;
  cfg.model = small_config();
  cfg.max_epochs = 1;
  cfg.seed = 33;
  MemceModel model(cfg.model, vocab, cfg.seed);
  auto [train_part, val_part] = split_validation(data, 0.2);
  train(model, train_part, val_part, db, cfg);

  CheckpointMeta meta{1, 0.5, 0.25};
  save_checkpoint(path, model, cfg, meta);
  LoadedCheckpoint loaded = load_checkpoint(path);
  CHECK(loaded.meta.epoch == 1);
  CHECK(loaded.meta.val_loss == 0.5);
  CHECK(loaded.meta.val_query_acc == 0.25);

  for (const std::string& name : model.params().names()) {
    REQUIRE(loaded.model->params().contains(name));
    auto a = model.params().get(name).value();
    auto b = loaded.model->params().get(name).value();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);  // bitwise
    const AdamState& sa = model.params().adam_state(name);
    const AdamState& sb = loaded.model->params().adam_state(name);
    CHECK(sa.step == sb.step);
    for (std::size_t i = 0; i < sa.m.size(); ++i) {
      CHECK(sa.m[i] == sb.m[i]);
      CHECK(sa.v[i] == sb.v[i]);
    }
  }

  // the reloaded model behaves identically
  Tape t1(false), t2(false);
  auto p1 = model.forward_interaction(t1, data[0], MemceModel::Mode::Eval);
  auto p2 = loaded.model->forward_interaction(t2, data[0], MemceModel::Mode::Eval);
  CHECK(p1.predictions == p2.predictions);

  // tampered checkpoints are rejected
  {
    std::ofstream bad(path);
    bad << "{\"format\":\"other\"}\n";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  fs::remove_all(dir);
}

TEST_CASE("evaluate produces coherent metrics on an untrained model") {
  std::vector<InteractionRecord> data = generate_dataset(19, 6, PhenomenonMix{});
  ToyDatabase db = ToyDatabase::generate(19, 120);
  Vocabulary vocab = Vocabulary::build(data);
  MemceModel model(small_config(), vocab, 3);

  EvalResult r = evaluate(model, data, db);
  CHECK(r.loss > 0.0);
  CHECK(r.query_acc >= 0.0);
  CHECK(r.query_acc < 0.5);  // an untrained model scores near zero
  CHECK(r.query_acc <= 1.0);
  CHECK(r.denotation_relaxed >= r.denotation_strict);
  CHECK(r.question_acc == r.query_acc);  // same correctness, same micro average
  CHECK(r.predictions.size() == data.size());
  std::size_t turns = 0;
  for (const auto& p : r.predictions) turns += p.size();
  std::size_t expected = 0;
  for (const auto& rec : data) expected += rec.turns.size();
  CHECK(turns == expected);
  // per-phenomenon keys are exactly the labels present
  for (const auto& [label, st] : r.per_phenomenon) CHECK(st.count > 0);
  CHECK(r.per_phenomenon.count("independent") == 1);
}

TEST_CASE("epoch csv format") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "memce_csv_test";
  fs::create_directories(dir);
  const std::string path = (dir / "epochs.csv").string();
  write_epoch_csv(path, {{1, 2.5, 2.25, 0.125, 0.001}});
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "epoch,train_loss,val_loss,val_query_acc,lr");
  CHECK(line == "1,2.5,2.25,0.125,0.001");
  fs::remove_all(dir);
}
