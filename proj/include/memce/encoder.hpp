#pragma once

#include <span>
#include <utility>
#include <vector>

#include "memce/parameters.hpp"
#include "memce/tensor.hpp"

namespace memce {

/// Forward and backward cells of one bi-directional LSTM.
struct BiLstmParams {
  LstmCellParams fwd;
  LstmCellParams bwd;
  std::size_t hidden() const { return fwd.hidden(); }
};

BiLstmParams make_bilstm(ParameterSet& params, const std::string& prefix,
                         std::size_t input_dim, std::size_t hidden, RandomSource& rng);

/// Token span of a phrase within the utterance.
struct SegSpan {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Per-token states: h_j = forward_j || backward_j, each of dimension 2H.
std::vector<Tensor> encode_utterance(Tape& tape, const Tensor& embed_table,
                                     const BiLstmParams& p,
                                     std::span<const std::size_t> tokens);

/// One vector per segment: final forward state || final backward state. Each
/// segment runs through the biLSTM independently (state reset per segment,
/// shared weights).
std::vector<Tensor> encode_phrases(Tape& tape, const Tensor& embed_table,
                                   const BiLstmParams& p,
                                   std::span<const std::size_t> tokens,
                                   std::span<const SegSpan> segments);

}  // namespace memce
