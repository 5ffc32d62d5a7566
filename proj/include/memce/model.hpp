#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memce/decoder.hpp"
#include "memce/encoder.hpp"
#include "memce/memory.hpp"
#include "memce/parameters.hpp"
#include "memce/segmentation.hpp"
#include "memce/toytask.hpp"
#include "memce/vocab.hpp"

namespace memce {

enum class Ablation { None, NoController, TokenPhrases, UtterancePhrases };

std::string ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t hidden = 64;  // H; states are 2H wide and d = 2H
  std::size_t dec_embed = 32;
  std::size_t memory_slots = 25;  // L
  double decay = 0.5;             // lambda
  double temperature = 0.1;       // tau
  double dropout = 0.5;
  double cosine_eps = 1e-8;
  std::size_t max_decode_len = 120;
  Ablation ablation = Ablation::None;
  /// Context-blind baseline: the memory is zeroed before every turn, so no
  /// information crosses turn boundaries.
  bool context_blind = false;

  std::size_t state_dim() const { return 2 * hidden; }    // 2H
  std::size_t memory_dim() const { return 2 * hidden; }   // d = 2H
  std::size_t dec_hidden() const { return 2 * hidden; }
  std::size_t siamese_hidden() const { return state_dim() / 2 == 0 ? 1 : state_dim() / 2; }

  std::string to_json_string() const;
  static ModelConfig from_json_string(const std::string& text);
};

/// The full context-dependent parser: shared input embeddings, utterance and
/// phrase bi-LSTMs, the memory controller, and the dual-attention decoder.
class MemceModel {
 public:
  MemceModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  enum class Mode { Train, Eval };

  struct ForwardResult {
    std::vector<Tensor> turn_losses;          // teacher-forced, one per turn
    std::vector<std::string> predictions;     // eval mode only
    std::vector<bool> truncated;              // eval mode only
    ControllerTrace trace;
    std::size_t phrase_count = 0;
  };

  /// Runs one interaction end to end: resets the memory, then per turn
  /// encodes, feeds every phrase through the controller, and decodes with
  /// teacher forcing (both modes) plus greedy search (eval mode). Gradients
  /// flow through the memory across all turns.
  ForwardResult forward_interaction(Tape& tape, const InteractionRecord& rec, Mode mode,
                                    RandomSource* dropout_rng = nullptr);

  /// Phrase spans for a turn under the configured ablation.
  std::vector<SegSpan> phrase_spans(const Turn& turn) const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ParameterSet params_;

  Tensor embed_;
  BiLstmParams enc_utt_;
  BiLstmParams enc_phr_;
  Tensor mem_init_;
  SiameseParams sia_;
  GateParams gate_;
  Tensor kv_w_;  // NoController ablation only
  DecoderParams dec_;
};

}  // namespace memce
