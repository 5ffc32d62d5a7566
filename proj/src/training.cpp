#include "memce/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace memce {

using nlohmann::json;

std::string TrainConfig::to_json_string() const {
  json j{{"model", json::parse(model.to_json_string())},
         {"learning_rate", learning_rate},
         {"lr_decay", lr_decay},
         {"plateau_patience", plateau_patience},
         {"min_delta", min_delta},
         {"lr_min", lr_min},
         {"clip_norm", clip_norm},
         {"max_epochs", max_epochs},
         {"val_fraction", val_fraction},
         {"seed", seed}};
  return j.dump();
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  json j = json::parse(text);
  TrainConfig c;
  c.model = ModelConfig::from_json_string(j.at("model").dump());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.plateau_patience = j.at("plateau_patience").get<std::size_t>();
  c.min_delta = j.at("min_delta").get<double>();
  c.lr_min = j.at("lr_min").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.val_fraction = j.at("val_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

double clip_gradients(ParameterSet& params, double max_norm) {
  double norm2 = 0.0;
  for (const Tensor& t : params.tensors())
    for (double g : t.grad()) norm2 += g * g;
  if (!std::isfinite(norm2))
    throw std::runtime_error("training aborted: non-finite gradients");
  const double norm = std::sqrt(norm2);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor t : params.tensors())
      for (double& g : t.grad_mut()) g *= scale;
  }
  return norm;
}

void adam_step(ParameterSet& params, double learning_rate) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  for (const std::string& name : params.names()) {
    Tensor t = params.get(name);
    AdamState& st = params.adam_state(name);
    ++st.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
    std::span<double> value = t.value_mut();
    std::span<const double> grad = t.grad();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      if (!std::isfinite(g)) throw std::runtime_error("training aborted: non-finite gradient");
      st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
      st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      value[i] -= learning_rate * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, std::size_t patience,
                                   double min_delta, double lr_min)
    : lr_(initial_lr),
      factor_(factor),
      min_delta_(min_delta),
      lr_min_(lr_min),
      patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {
  if (patience_ < 1) throw std::invalid_argument("plateau patience must be >= 1");
}

double PlateauScheduler::observe(double val_loss) {
  if (val_loss < best_ - min_delta_) {
    best_ = val_loss;
    stale_ = 0;
  } else {
    ++stale_;
    if (stale_ >= patience_) {
      lr_ = std::max(lr_min_, lr_ * factor_);
      stale_ = 0;
    }
  }
  return lr_;
}

Tensor interaction_loss(Tape& tape, std::span<const Tensor> turn_losses) {
  return mean(tape, turn_losses);
}

EvalResult evaluate(MemceModel& model, const std::vector<InteractionRecord>& data,
                    const ToyDatabase& db) {
  EvalResult out;
  std::vector<std::string> flat_preds, flat_golds;
  std::vector<std::vector<bool>> grouped;
  double loss_sum = 0.0;

  for (const InteractionRecord& rec : data) {
    Tape tape(false);
    MemceModel::ForwardResult fr =
        model.forward_interaction(tape, rec, MemceModel::Mode::Eval);
    double turn_loss_sum = 0.0;
    for (const Tensor& l : fr.turn_losses) turn_loss_sum += l.item();
    loss_sum += turn_loss_sum / static_cast<double>(rec.turns.size());

    std::vector<bool> correct;
    for (std::size_t i = 0; i < rec.turns.size(); ++i) {
      const std::string& pred = fr.predictions[i];
      const std::string& gold = rec.turns[i].gold_query;
      const bool qmatch = query_match(pred, gold);
      correct.push_back(qmatch);
      flat_preds.push_back(pred);
      flat_golds.push_back(gold);
      const bool dmatch = denotation_match(pred, gold, db, DenotationMode::Strict);
      for (const std::string& label : rec.turns[i].phenomena) {
        PhenomenonStats& st = out.per_phenomenon[label];
        ++st.count;
        if (qmatch) ++st.query_correct;
        if (dmatch) ++st.denotation_strict_correct;
      }
    }
    grouped.push_back(std::move(correct));
    out.predictions.push_back(fr.predictions);
  }

  if (!data.empty()) out.loss = loss_sum / static_cast<double>(data.size());
  if (!flat_preds.empty()) {
    out.query_acc = query_accuracy(flat_preds, flat_golds);
    out.denotation_strict =
        denotation_accuracy(flat_preds, flat_golds, db, DenotationMode::Strict);
    out.denotation_relaxed =
        denotation_accuracy(flat_preds, flat_golds, db, DenotationMode::Relaxed);
  }
  InteractionMetrics im = interaction_metrics(grouped);
  out.question_acc = im.question_accuracy;
  out.interaction_acc = im.interaction_accuracy;
  return out;
}

namespace {

struct Snapshot {
  std::map<std::string, std::vector<double>> values;
  std::map<std::string, AdamState> adam;

  static Snapshot take(ParameterSet& params) {
    Snapshot s;
    for (const std::string& name : params.names()) {
      Tensor t = params.get(name);
      s.values[name].assign(t.value().begin(), t.value().end());
      s.adam[name] = params.adam_state(name);
    }
    return s;
  }

  void restore(ParameterSet& params) const {
    for (const auto& [name, vals] : values) {
      Tensor t = params.get(name);
      std::copy(vals.begin(), vals.end(), t.value_mut().begin());
      params.adam_state(name) = adam.at(name);
    }
  }
};

}  // namespace

std::pair<std::vector<InteractionRecord>, std::vector<InteractionRecord>> split_validation(
    const std::vector<InteractionRecord>& train_split, double fraction) {
  if (train_split.empty()) throw std::invalid_argument("empty training set");
  std::size_t val_count = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(train_split.size())));
  val_count = std::max<std::size_t>(1, std::min(val_count, train_split.size() - 1));
  std::vector<InteractionRecord> train(train_split.begin(),
                                       train_split.end() - static_cast<std::ptrdiff_t>(val_count));
  std::vector<InteractionRecord> val(train_split.end() - static_cast<std::ptrdiff_t>(val_count),
                                     train_split.end());
  return {std::move(train), std::move(val)};
}

TrainResult train(MemceModel& model, const std::vector<InteractionRecord>& train_data,
                  const std::vector<InteractionRecord>& val_data, const ToyDatabase& db,
                  const TrainConfig& config) {
  if (train_data.empty()) throw std::invalid_argument("train: empty dataset");
  TrainResult result;
  RandomSource rng(config.seed);

  EvalResult init_eval = evaluate(model, val_data, db);
  Snapshot best = Snapshot::take(model.params());
  result.best_epoch = 0;
  result.best_val_query_acc = init_eval.query_acc;
  result.best_val_loss = init_eval.loss;

  PlateauScheduler scheduler(config.learning_rate, config.lr_decay, config.plateau_patience,
                             config.min_delta, config.lr_min);
  double lr = config.learning_rate;

  std::vector<std::size_t> order(train_data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    // deterministic Fisher-Yates reshuffle per epoch
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(i)]);

    double train_loss_sum = 0.0;
    for (std::size_t idx : order) {
      model.params().zero_grad();
      Tape tape;
      MemceModel::ForwardResult fr =
          model.forward_interaction(tape, train_data[idx], MemceModel::Mode::Train, &rng);
      Tensor loss = interaction_loss(tape, fr.turn_losses);
      train_loss_sum += loss.item();
      tape.backward(loss);
      clip_gradients(model.params(), config.clip_norm);
      adam_step(model.params(), lr);
    }

    EvalResult val = evaluate(model, val_data, db);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_loss_sum / static_cast<double>(train_data.size());
    stats.val_loss = val.loss;
    stats.val_query_acc = val.query_acc;
    stats.lr = lr;
    result.epochs.push_back(stats);
    log_info("epoch " + std::to_string(epoch) + " train_loss " +
             std::to_string(stats.train_loss) + " val_loss " + std::to_string(val.loss) +
             " val_query_acc " + std::to_string(val.query_acc) + " lr " + std::to_string(lr));

    const bool better = val.query_acc > result.best_val_query_acc ||
                        (val.query_acc == result.best_val_query_acc &&
                         val.loss < result.best_val_loss);
    if (better) {
      best = Snapshot::take(model.params());
      result.best_epoch = epoch;
      result.best_val_query_acc = val.query_acc;
      result.best_val_loss = val.loss;
    }
    lr = scheduler.observe(val.loss);
  }

  best.restore(model.params());
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint io
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kCheckpointFormat = "memce-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const MemceModel& model,
                     const TrainConfig& config, const CheckpointMeta& meta) {
  json params = json::array();
  const ParameterSet& ps = model.params();
  for (const std::string& name : ps.names()) {
    Tensor t = ps.get(name);
    const AdamState& st = const_cast<ParameterSet&>(ps).adam_state(name);
    params.push_back({{"name", name},
                      {"shape", t.shape()},
                      {"values", std::vector<double>(t.value().begin(), t.value().end())},
                      {"adam_m", st.m},
                      {"adam_v", st.v},
                      {"adam_step", st.step}});
  }
  json j{{"format", kCheckpointFormat},
         {"version", kCheckpointVersion},
         {"epoch", meta.epoch},
         {"val_loss", meta.val_loss},
         {"val_query_acc", meta.val_query_acc},
         {"train_config", json::parse(config.to_json_string())},
         {"vocab", json::parse(model.vocabulary().to_json_string())},
         {"params", params}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out << j.dump() << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error&) {
    throw DataError("malformed checkpoint: " + path);
  }
  if (j.value("format", "") != kCheckpointFormat || j.value("version", -1) != kCheckpointVersion)
    throw DataError("not a memce checkpoint: " + path);

  LoadedCheckpoint out;
  out.config = TrainConfig::from_json_string(j.at("train_config").dump());
  out.meta.epoch = j.at("epoch").get<std::size_t>();
  out.meta.val_loss = j.at("val_loss").get<double>();
  out.meta.val_query_acc = j.at("val_query_acc").get<double>();
  out.vocab = Vocabulary::from_json_string(j.at("vocab").dump());
  out.model = std::make_unique<MemceModel>(out.config.model, out.vocab, out.config.seed);

  for (const json& jp : j.at("params")) {
    const std::string name = jp.at("name").get<std::string>();
    if (!out.model->params().contains(name))
      throw ConsistencyError("checkpoint parameter does not fit the model: " + name);
    Tensor t = out.model->params().get(name);
    const Shape shape = jp.at("shape").get<Shape>();
    if (shape != t.shape())
      throw ConsistencyError("checkpoint shape mismatch for " + name);
    const std::vector<double> values = jp.at("values").get<std::vector<double>>();
    std::copy(values.begin(), values.end(), t.value_mut().begin());
    AdamState& st = out.model->params().adam_state(name);
    st.m = jp.at("adam_m").get<std::vector<double>>();
    st.v = jp.at("adam_v").get<std::vector<double>>();
    st.step = jp.at("adam_step").get<std::uint64_t>();
    if (st.m.size() != t.size() || st.v.size() != t.size())
      throw ConsistencyError("checkpoint optimizer state mismatch for " + name);
  }
  return out;
}

void write_epoch_csv(const std::string& path, const std::vector<EpochStats>& stats) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "epoch,train_loss,val_loss,val_query_acc,lr\n";
  out.precision(17);
  for (const EpochStats& s : stats)
    out << s.epoch << "," << s.train_loss << "," << s.val_loss << "," << s.val_query_acc
        << "," << s.lr << "\n";
}

}  // namespace memce
