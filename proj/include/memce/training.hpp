#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memce/model.hpp"
#include "memce/toytask.hpp"

namespace memce {

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 0.001;
  double lr_decay = 0.8;
  std::size_t plateau_patience = 3;
  double min_delta = 1e-4;
  double lr_min = 1e-5;
  double clip_norm = 5.0;
  std::size_t max_epochs = 30;
  double val_fraction = 0.05;
  std::uint64_t seed = 1;

  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm. Non-finite gradients abort training.
double clip_gradients(ParameterSet& params, double max_norm);

/// One bias-corrected Adam update (beta1 0.9, beta2 0.999, eps 1e-8) at the
/// given learning rate, consuming the accumulated gradients.
void adam_step(ParameterSet& params, double learning_rate);

/// ReduceLROnPlateau: after `patience` consecutive epochs without the
/// validation loss improving by min_delta, multiply the rate by `factor`,
/// never dropping below lr_min.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, double factor, std::size_t patience, double min_delta,
                   double lr_min);
  /// Records one epoch's validation loss; returns the rate to use next.
  double observe(double val_loss);
  double lr() const { return lr_; }

 private:
  double lr_, factor_, min_delta_, lr_min_;
  std::size_t patience_, stale_ = 0;
  double best_;
};

/// Mean over utterances of the per-utterance mean token losses.
Tensor interaction_loss(Tape& tape, std::span<const Tensor> turn_losses);

struct PhenomenonStats {
  std::size_t count = 0;
  std::size_t query_correct = 0;
  std::size_t denotation_strict_correct = 0;
};

struct EvalResult {
  double loss = 0.0;
  double query_acc = 0.0;
  double denotation_strict = 0.0;
  double denotation_relaxed = 0.0;
  double question_acc = 0.0;
  double interaction_acc = 0.0;
  std::map<std::string, PhenomenonStats> per_phenomenon;
  std::vector<std::vector<std::string>> predictions;  // per interaction, per turn
};

/// Greedy-decodes every interaction and scores all metrics against the
/// database. Read-only over the model parameters.
EvalResult evaluate(MemceModel& model, const std::vector<InteractionRecord>& data,
                    const ToyDatabase& db);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_query_acc = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 0 = the initialized model
  double best_val_query_acc = 0.0;
  double best_val_loss = 0.0;
};

/// Trains on `train_data` with batch size one interaction, evaluating on
/// `val_data` after each epoch and restoring the checkpoint with the best
/// validation query accuracy (ties broken by lower validation loss) into the
/// model before returning.
TrainResult train(MemceModel& model, const std::vector<InteractionRecord>& train_data,
                  const std::vector<InteractionRecord>& val_data, const ToyDatabase& db,
                  const TrainConfig& config);

/// Splits off the held-out validation slice (the trailing fraction, at least
/// one interaction) from a training set.
std::pair<std::vector<InteractionRecord>, std::vector<InteractionRecord>> split_validation(
    const std::vector<InteractionRecord>& train_split, double fraction);

// ---------------------------------------------------------------------------
// Checkpointing: a versioned JSON blob holding the config, the vocabulary,
// every parameter tensor and its optimizer state. Reload is bit-exact.
// ---------------------------------------------------------------------------

struct CheckpointMeta {
  std::size_t epoch = 0;
  double val_loss = 0.0;
  double val_query_acc = 0.0;
};

void save_checkpoint(const std::string& path, const MemceModel& model,
                     const TrainConfig& config, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  TrainConfig config;
  CheckpointMeta meta;
  Vocabulary vocab;
  // parameters are restored into a freshly built model
  std::unique_ptr<MemceModel> model;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

void write_epoch_csv(const std::string& path, const std::vector<EpochStats>& stats);

}  // namespace memce
