#include "memce/decoder.hpp"

#include <algorithm>

namespace memce {

DecoderParams make_decoder(ParameterSet& params, const std::string& prefix,
                           std::size_t vocab_size, std::size_t placeholder_rows,
                           std::size_t out_embed_dim, std::size_t utt_state_dim,
                           std::size_t mem_dim, std::size_t dec_hidden, RandomSource& rng) {
  DecoderParams p;
  p.vocab_size = vocab_size;
  p.out_embed =
      params.create(prefix + ".embed", {vocab_size + placeholder_rows, out_embed_dim}, rng);
  const std::size_t in_dim = out_embed_dim + mem_dim + utt_state_dim;
  p.l1.w = params.create(prefix + ".l1.w", {4 * dec_hidden, in_dim + dec_hidden}, rng);
  p.l1.b = params.create(prefix + ".l1.b", {4 * dec_hidden}, rng);
  p.l2.w = params.create(prefix + ".l2.w", {4 * dec_hidden, dec_hidden + dec_hidden}, rng);
  p.l2.b = params.create(prefix + ".l2.b", {4 * dec_hidden}, rng);
  p.att_u = params.create(prefix + ".att_u", {utt_state_dim, dec_hidden}, rng);
  p.att_m = params.create(prefix + ".att_m", {mem_dim, dec_hidden}, rng);
  const std::size_t feat = dec_hidden + utt_state_dim + mem_dim;
  p.w_ohat = params.create(prefix + ".w_ohat", {dec_hidden, feat}, rng);
  // output head covers the vocabulary block plus one generation row per
  // reserved placeholder (entities elided from the current utterance can
  // only be produced through these rows, informed by the memory context)
  p.w_o = params.create(prefix + ".w_o", {vocab_size + placeholder_rows, dec_hidden}, rng);
  p.b_o = params.create(prefix + ".b_o", {vocab_size + placeholder_rows}, rng);
  p.init1_w = params.create(prefix + ".init1.w", {dec_hidden, utt_state_dim}, rng);
  p.init1_b = params.create(prefix + ".init1.b", {dec_hidden}, rng);
  p.init2_w = params.create(prefix + ".init2.w", {dec_hidden, utt_state_dim}, rng);
  p.init2_b = params.create(prefix + ".init2.b", {dec_hidden}, rng);
  return p;
}

DecoderState init_decoder(Tape& tape, const DecoderParams& p, const Tensor& utt_final) {
  const std::size_t hd = p.init1_b.size();
  DecoderState s;
  s.l1 = {affine(tape, p.init1_w, utt_final, p.init1_b), Tensor::zeros({hd})};
  s.l2 = {affine(tape, p.init2_w, utt_final, p.init2_b), Tensor::zeros({hd})};
  s.c_u = Tensor::zeros({p.att_u.shape()[0]});
  s.c_m = Tensor::zeros({p.att_m.shape()[0]});
  return s;
}

AttendResult attend(Tape& tape, std::span<const Tensor> states, const Tensor& dec_state,
                    const Tensor& w_a) {
  if (states.empty()) throw std::invalid_argument("attend: empty state list");
  Tensor keyed = matvec(tape, w_a, dec_state);
  std::vector<Tensor> per_state;
  per_state.reserve(states.size());
  for (const Tensor& s : states) per_state.push_back(dot(tape, s, keyed));
  Tensor scores = concat(tape, std::span<const Tensor>(per_state));
  Tensor alpha = softmax(tape, scores);
  Tensor context = weighted_sum(tape, states, alpha);
  return {scores, alpha, context};
}

StepResult decode_step(Tape& tape, const DecoderParams& p, const DecoderState& state,
                       std::size_t prev_token, std::span<const Tensor> utt_states,
                       std::span<const Tensor> memory_rows, const CopyScope& scope,
                       const DropoutCtx& dropout_ctx) {
  std::size_t embed_row;
  if (prev_token < p.vocab_size) {
    embed_row = prev_token;
  } else {
    const std::size_t scope_idx = prev_token - p.vocab_size;
    if (scope_idx >= scope.size())
      throw std::invalid_argument("decode_step: unknown previous token id");
    embed_row = p.vocab_size + scope.embed_rows[scope_idx];
  }

  Tensor prev_embed = embedding(tape, p.out_embed, embed_row);
  Tensor x = concat(tape, {prev_embed, state.c_m, state.c_u});
  if (dropout_ctx.enabled && dropout_ctx.rng != nullptr)
    x = dropout(tape, x, dropout_ctx.p, *dropout_ctx.rng, true);

  StepResult out;
  out.state.l1 = lstm_cell(tape, p.l1, x, state.l1);
  out.state.l2 = lstm_cell(tape, p.l2, out.state.l1.h, state.l2);
  const Tensor& h_dec = out.state.l2.h;

  AttendResult att_u = attend(tape, utt_states, h_dec, p.att_u);
  AttendResult att_m = attend(tape, memory_rows, h_dec, p.att_m);
  out.state.c_u = att_u.context;
  out.state.c_m = att_m.context;
  out.alpha_u = att_u.alpha;
  out.scores_u = att_u.scores;

  Tensor feat = concat(tape, {h_dec, att_u.context, att_m.context});
  Tensor hidden = tanh(tape, matvec(tape, p.w_ohat, feat));
  Tensor all_scores = affine(tape, p.w_o, hidden, p.b_o);
  Tensor vocab_scores = slice(tape, all_scores, 0, p.vocab_size);

  if (scope.size() == 0) {
    out.logits = vocab_scores;
    return out;
  }

  // Placeholder block: the generation score of the placeholder's reserved
  // row, plus the attention score at its best position as copy evidence when
  // it occurs in this utterance.
  std::vector<Tensor> parts;
  parts.reserve(1 + scope.size());
  parts.push_back(vocab_scores);
  for (std::size_t s = 0; s < scope.size(); ++s) {
    Tensor gen = slice(tape, all_scores, p.vocab_size + scope.embed_rows[s], 1);
    const std::vector<std::size_t>& positions = scope.positions[s];
    if (positions.empty()) {
      parts.push_back(gen);
      continue;
    }
    std::size_t best = positions[0];
    for (std::size_t pos : positions)
      if (att_u.scores[pos] > att_u.scores[best]) best = pos;
    parts.push_back(add(tape, gen, slice(tape, att_u.scores, best, 1)));
  }
  out.logits = concat(tape, std::span<const Tensor>(parts));
  return out;
}

GreedyResult greedy_decode(Tape& tape, const DecoderParams& p, DecoderState state,
                           std::span<const Tensor> utt_states,
                           std::span<const Tensor> memory_rows, const CopyScope& scope,
                           const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  GreedyResult out;
  std::size_t prev = vocab.sos_id();
  for (std::size_t step = 0; step < max_len; ++step) {
    StepResult sr = decode_step(tape, p, state, prev, utt_states, memory_rows, scope, {});
    state = sr.state;
    std::size_t best = 0;
    for (std::size_t i = 1; i < sr.logits.size(); ++i)
      if (sr.logits[i] > sr.logits[best]) best = i;
    if (best == vocab.eos_id()) return out;
    out.ids.push_back(best);
    out.tokens.push_back(best < p.vocab_size ? vocab.output_token(best)
                                             : scope.values[best - p.vocab_size]);
    prev = best;
  }
  out.truncated = true;
  return out;
}

}  // namespace memce
