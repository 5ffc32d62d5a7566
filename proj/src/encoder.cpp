#include "memce/encoder.hpp"

namespace memce {

BiLstmParams make_bilstm(ParameterSet& params, const std::string& prefix,
                         std::size_t input_dim, std::size_t hidden, RandomSource& rng) {
  BiLstmParams p;
  p.fwd.w = params.create(prefix + ".fwd.w", {4 * hidden, input_dim + hidden}, rng);
  p.fwd.b = params.create(prefix + ".fwd.b", {4 * hidden}, rng);
  p.bwd.w = params.create(prefix + ".bwd.w", {4 * hidden, input_dim + hidden}, rng);
  p.bwd.b = params.create(prefix + ".bwd.b", {4 * hidden}, rng);
  return p;
}

namespace {

std::vector<Tensor> run_direction(Tape& tape, const LstmCellParams& cell,
                                  std::span<const Tensor> inputs, bool reversed) {
  const std::size_t hidden = cell.hidden();
  LstmState state{Tensor::zeros({hidden}), Tensor::zeros({hidden})};
  std::vector<Tensor> states(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::size_t pos = reversed ? inputs.size() - 1 - i : i;
    state = lstm_cell(tape, cell, inputs[pos], state);
    states[pos] = state.h;
  }
  return states;
}

std::vector<Tensor> embed_all(Tape& tape, const Tensor& embed_table,
                              std::span<const std::size_t> tokens) {
  std::vector<Tensor> out;
  out.reserve(tokens.size());
  for (std::size_t id : tokens) out.push_back(embedding(tape, embed_table, id));
  return out;
}

}  // namespace

std::vector<Tensor> encode_utterance(Tape& tape, const Tensor& embed_table,
                                     const BiLstmParams& p,
                                     std::span<const std::size_t> tokens) {
  if (tokens.empty()) throw std::invalid_argument("encode_utterance: empty token list");
  std::vector<Tensor> inputs = embed_all(tape, embed_table, tokens);
  std::vector<Tensor> fwd = run_direction(tape, p.fwd, inputs, false);
  std::vector<Tensor> bwd = run_direction(tape, p.bwd, inputs, true);
  std::vector<Tensor> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.push_back(concat(tape, {fwd[i], bwd[i]}));
  return out;
}

std::vector<Tensor> encode_phrases(Tape& tape, const Tensor& embed_table,
                                   const BiLstmParams& p,
                                   std::span<const std::size_t> tokens,
                                   std::span<const SegSpan> segments) {
  std::vector<Tensor> out;
  out.reserve(segments.size());
  for (const SegSpan& seg : segments) {
    if (seg.length == 0) throw std::invalid_argument("encode_phrases: empty segment");
    if (seg.start + seg.length > tokens.size())
      throw std::invalid_argument("encode_phrases: segment out of range");
    std::vector<Tensor> inputs =
        embed_all(tape, embed_table, tokens.subspan(seg.start, seg.length));
    std::vector<Tensor> fwd = run_direction(tape, p.fwd, inputs, false);
    std::vector<Tensor> bwd = run_direction(tape, p.bwd, inputs, true);
    out.push_back(concat(tape, {fwd.back(), bwd.front()}));
  }
  return out;
}

}  // namespace memce
