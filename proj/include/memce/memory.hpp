#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "memce/parameters.hpp"
#include "memce/tensor.hpp"

namespace memce {

/// Two tanh hidden layers plus an affine output projection. Both sides of
/// every comparison go through the same weights.
struct SiameseParams {
  Tensor w1, b1;
  Tensor w2, b2;
  Tensor w_out, b_out;
};

SiameseParams make_siamese(ParameterSet& params, const std::string& prefix,
                           std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t output_dim, RandomSource& rng);

Tensor siamese_project(Tape& tape, const SiameseParams& p, const Tensor& x);

/// Scalar convex-combination gate: sigma(w . w_s + b).
struct GateParams {
  Tensor w;  // (1, L)
  Tensor b;  // (1)
};

GateParams make_gate(ParameterSet& params, const std::string& prefix, std::size_t slots,
                     RandomSource& rng);

struct MemorySettings {
  std::size_t slots = 25;       // L
  std::size_t dim = 128;        // d
  double decay = 0.5;           // lambda
  double temperature = 0.1;     // tau
  double cosine_eps = 1e-8;
};

/// The L x d memory matrix with usage weights and phrase-step counter. One
/// instance is owned by one interaction's forward pass; reset() starts a new
/// interaction (matrix and usage zeroed, settings preserved).
class ContextMemory {
 public:
  explicit ContextMemory(MemorySettings settings);

  void reset();
  /// Starts an interaction from an explicit initial matrix (typically a
  /// learned parameter; gradients flow into it through later reads). Usage
  /// weights and the step counter still start at zero.
  void reset_to(const Tensor& initial);
  const MemorySettings& settings() const { return settings_; }
  const Tensor& matrix() const { return matrix_; }
  const Tensor& usage() const { return usage_; }
  std::size_t step() const { return step_; }

  /// Applies the additive update M += outer(w_w, h), then folds w_w into the
  /// decayed usage weights and advances the step counter.
  void write(Tape& tape, const Tensor& write_w, const Tensor& phrase);

 private:
  MemorySettings settings_;
  Tensor matrix_;
  Tensor usage_;
  std::size_t step_ = 0;
};

/// Similarity distribution over slots (Siamese projections compared with the
/// epsilon-guarded cosine, then softmax).
Tensor conflict_distribution(Tape& tape, const Tensor& phrase, const Tensor& memory,
                             const SiameseParams& sia, double eps);

/// softmin of the usage weights from the previous step.
Tensor least_used(Tape& tape, const Tensor& usage);

/// mu in (0, 1), a scalar tensor.
Tensor gate(Tape& tape, const GateParams& p, const Tensor& w_s);

/// softmax((mu * w_s + (1 - mu) * w_lu) / tau).
Tensor write_weights(Tape& tape, const Tensor& w_s, const Tensor& w_lu, const Tensor& mu,
                     double tau);

/// Key-value ablation replacing the controller: softmax(M . W_p . h).
Tensor kv_write_weights(Tape& tape, const Tensor& memory, const Tensor& phrase,
                        const Tensor& w_p);

/// Per-phrase controller record kept for interpretability dumps. Vectors are
/// detached copies; `mu` is absent (-1) under the key-value ablation.
struct TraceRecord {
  std::string phrase;
  std::size_t turn_index = 0;
  std::vector<double> w_s;
  std::vector<double> w_lu;
  double mu = -1.0;
  std::vector<double> w_w;
  std::size_t argmax_slot = 0;
};

using ControllerTrace = std::vector<TraceRecord>;

/// Runs conflict -> least-used -> gate -> write-weights -> write and appends
/// one trace record. Fully differentiable end to end.
void process_phrase(Tape& tape, ContextMemory& mem, const Tensor& phrase,
                    const SiameseParams& sia, const GateParams& gp,
                    ControllerTrace* trace, const std::string& phrase_text,
                    std::size_t turn_index);

/// Ablation counterpart of process_phrase (kv attention write, no usage).
void process_phrase_kv(Tape& tape, ContextMemory& mem, const Tensor& phrase,
                       const Tensor& w_p, ControllerTrace* trace,
                       const std::string& phrase_text, std::size_t turn_index);

/// CSV heatmap: rows = slots, columns = phrase steps, cell = w_w(slot) at
/// that step. First row is a header of column indices.
void write_trace_csv(std::ostream& out, const ControllerTrace& trace, std::size_t slots);

/// JSON sidecar mapping columns to phrase text, plus the per-slot narrative
/// (the phrase whose write-weight argmax last landed on each slot).
void write_trace_sidecar(std::ostream& out, const ControllerTrace& trace, std::size_t slots);

}  // namespace memce
