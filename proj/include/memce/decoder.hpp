#pragma once

#include <span>
#include <string>
#include <vector>

#include "memce/parameters.hpp"
#include "memce/tensor.hpp"
#include "memce/vocab.hpp"

namespace memce {

struct DecoderParams {
  Tensor out_embed;  // (V_out + placeholder rows, E_out)
  LstmCellParams l1, l2;
  Tensor att_u;  // (2H, Hd)
  Tensor att_m;  // (d, Hd)
  Tensor w_ohat;  // (proj, Hd + 2H + d)
  Tensor w_o;     // (V_out, proj)
  Tensor b_o;     // (V_out)
  Tensor init1_w, init1_b;  // (Hd, 2H), (Hd)
  Tensor init2_w, init2_b;
  std::size_t vocab_size = 0;  // V_out
};

DecoderParams make_decoder(ParameterSet& params, const std::string& prefix,
                           std::size_t vocab_size, std::size_t placeholder_rows,
                           std::size_t out_embed_dim, std::size_t utt_state_dim,
                           std::size_t mem_dim, std::size_t dec_hidden, RandomSource& rng);

struct DecoderState {
  LstmState l1, l2;
  Tensor c_u;  // previous utterance context
  Tensor c_m;  // previous memory context
};

/// Layer hidden states are linear projections of the utterance encoder's
/// final forward||backward state; cells and attention contexts start at zero.
DecoderState init_decoder(Tape& tape, const DecoderParams& p, const Tensor& utt_final);

struct AttendResult {
  Tensor scores;   // pre-softmax attention scores v
  Tensor alpha;    // simplex over states
  Tensor context;  // convex combination of states
};

/// v(j) = states[j] . (W_A h_dec); alpha = softmax(v); context = sum alpha_j states[j].
AttendResult attend(Tape& tape, std::span<const Tensor> states, const Tensor& dec_state,
                    const Tensor& w_a);

/// Copy channel bookkeeping for one turn: for every placeholder in scope, its
/// positions in the current (anonymized) utterance, its output embedding row
/// and its surface value for de-anonymization.
struct CopyScope {
  std::vector<std::vector<std::size_t>> positions;
  std::vector<std::size_t> embed_rows;
  std::vector<std::string> values;
  std::size_t size() const { return positions.size(); }
};

struct DropoutCtx {
  double p = 0.0;
  RandomSource* rng = nullptr;
  bool enabled = false;
};

struct StepResult {
  Tensor logits;    // (V_out + scope size): vocabulary scores ++ placeholder scores
  Tensor alpha_u;   // utterance attention of this step
  Tensor scores_u;  // pre-softmax utterance attention scores
  DecoderState state;
};

/// One decoder step: LSTM over [phi_o(prev); c_m; c_u], fresh dual attention,
/// scores tanh([h; c_u; c_m] W_ohat) W_o + b_o over the vocabulary and the
/// reserved placeholder rows. A placeholder occurring in this utterance gets
/// its best position's attention score added as copy evidence (max over its
/// positions); elided placeholders keep their generation score alone, which
/// is how memory-carried entities are produced.
StepResult decode_step(Tape& tape, const DecoderParams& p, const DecoderState& state,
                       std::size_t prev_token, std::span<const Tensor> utt_states,
                       std::span<const Tensor> memory_rows, const CopyScope& scope,
                       const DropoutCtx& dropout_ctx);

struct GreedyResult {
  std::vector<std::size_t> ids;      // emitted ids (EOS excluded)
  std::vector<std::string> tokens;   // de-anonymized surface tokens
  bool truncated = false;
};

/// Argmax decoding from SOS until EOS or max_len. Copied placeholders are
/// de-anonymized to their surface values.
GreedyResult greedy_decode(Tape& tape, const DecoderParams& p, DecoderState state,
                           std::span<const Tensor> utt_states,
                           std::span<const Tensor> memory_rows, const CopyScope& scope,
                           const Vocabulary& vocab, std::size_t max_len);

}  // namespace memce
