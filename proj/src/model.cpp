#include "memce/model.hpp"

#include <algorithm>

#include "json.hpp"

namespace memce {

using nlohmann::json;

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::NoController: return "no_controller";
    case Ablation::TokenPhrases: return "token_phrases";
    case Ablation::UtterancePhrases: return "utterance_phrases";
  }
  throw std::invalid_argument("bad ablation");
}

Ablation ablation_from_name(const std::string& name) {
  if (name == "none" || name.empty()) return Ablation::None;
  if (name == "no_controller") return Ablation::NoController;
  if (name == "token_phrases") return Ablation::TokenPhrases;
  if (name == "utterance_phrases") return Ablation::UtterancePhrases;
  throw std::invalid_argument("unknown ablation: " + name);
}

std::string ModelConfig::to_json_string() const {
  json j{{"embed_dim", embed_dim},
         {"hidden", hidden},
         {"dec_embed", dec_embed},
         {"memory_slots", memory_slots},
         {"decay", decay},
         {"temperature", temperature},
         {"dropout", dropout},
         {"cosine_eps", cosine_eps},
         {"max_decode_len", max_decode_len},
         {"ablation", ablation_name(ablation)},
         {"context_blind", context_blind}};
  return j.dump();
}

ModelConfig ModelConfig::from_json_string(const std::string& text) {
  json j = json::parse(text);
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.dec_embed = j.at("dec_embed").get<std::size_t>();
  c.memory_slots = j.at("memory_slots").get<std::size_t>();
  c.decay = j.at("decay").get<double>();
  c.temperature = j.at("temperature").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.cosine_eps = j.at("cosine_eps").get<double>();
  c.max_decode_len = j.at("max_decode_len").get<std::size_t>();
  c.ablation = ablation_from_name(j.at("ablation").get<std::string>());
  c.context_blind = j.at("context_blind").get<bool>();
  return c;
}

MemceModel::MemceModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  RandomSource rng(seed);
  embed_ = params_.create("embed", {vocab_.input_size(), config_.embed_dim}, rng);
  enc_utt_ = make_bilstm(params_, "enc_utt", config_.embed_dim, config_.hidden, rng);
  enc_phr_ = make_bilstm(params_, "enc_phr", config_.embed_dim, config_.hidden, rng);
  // Learned initial memory state. An all-zero start is an exact symmetric
  // fixed point of the controller (identical rows stay identical under
  // uniform writes and the controller parameters get zero gradient), so the
  // interaction memory starts from a trained per-slot matrix instead.
  mem_init_ = params_.create("mem.init", {config_.memory_slots, config_.memory_dim()}, rng);
  if (config_.ablation == Ablation::NoController) {
    kv_w_ = params_.create("kv.w_p", {config_.memory_dim(), config_.memory_dim()}, rng);
  } else {
    sia_ = make_siamese(params_, "sia", config_.memory_dim(), config_.siamese_hidden(),
                        config_.siamese_hidden(), rng);
    gate_ = make_gate(params_, "gate", config_.memory_slots, rng);
  }
  dec_ = make_decoder(params_, "dec", vocab_.output_size(),
                      std::max<std::size_t>(vocab_.placeholder_rows(), 1), config_.dec_embed,
                      config_.state_dim(), config_.memory_dim(), config_.dec_hidden(), rng);

  // forget-gate biases start at +1 so cell state flows from the beginning
  for (const LstmCellParams* cell :
       {&enc_utt_.fwd, &enc_utt_.bwd, &enc_phr_.fwd, &enc_phr_.bwd, &dec_.l1, &dec_.l2}) {
    Tensor b = cell->b;
    const std::size_t h = cell->hidden();
    for (std::size_t i = h; i < 2 * h; ++i) b.value_mut()[i] += 1.0;
  }
}

std::vector<SegSpan> MemceModel::phrase_spans(const Turn& turn) const {
  std::vector<SegSpan> spans;
  switch (config_.ablation) {
    case Ablation::TokenPhrases:
      for (std::size_t i = 0; i < turn.tokens.size(); ++i) spans.push_back({i, 1});
      break;
    case Ablation::UtterancePhrases:
      spans.push_back({0, turn.tokens.size()});
      break;
    default: {
      ChunkedUtterance u = chunked_from_turn(turn);
      std::vector<Segment> segments = merge_chunks(u);
      align_anonymization(u, segments);
      for (const Segment& s : segments) spans.push_back({s.start, s.length});
      break;
    }
  }
  return spans;
}

namespace {

std::string span_text(const Turn& turn, const SegSpan& span) {
  std::string out;
  for (std::size_t i = 0; i < span.length; ++i) {
    if (i > 0) out += " ";
    out += turn.tokens[span.start + i];
  }
  return out;
}

}  // namespace

MemceModel::ForwardResult MemceModel::forward_interaction(Tape& tape,
                                                          const InteractionRecord& rec,
                                                          Mode mode,
                                                          RandomSource* dropout_rng) {
  if (rec.turns.empty()) throw DataError("interaction has no turns: " + rec.interaction_id);
  const bool training = mode == Mode::Train;
  const bool apply_dropout = training && config_.dropout > 0.0 && dropout_rng != nullptr;

  ForwardResult result;
  MemorySettings ms;
  ms.slots = config_.memory_slots;
  ms.dim = config_.memory_dim();
  ms.decay = config_.decay;
  ms.temperature = config_.temperature;
  ms.cosine_eps = config_.cosine_eps;
  ContextMemory memory(ms);
  memory.reset_to(mem_init_);

  PlaceholderScope scope;

  for (std::size_t turn_idx = 0; turn_idx < rec.turns.size(); ++turn_idx) {
    const Turn& turn = rec.turns[turn_idx];
    if (turn.tokens.empty()) throw DataError("empty utterance in " + rec.interaction_id);
    if (config_.context_blind) memory.reset_to(mem_init_);
    scope.add_turn(turn);

    // --- encode ---
    std::vector<std::string> anon = anonymized_tokens(turn);
    std::vector<std::size_t> token_ids;
    token_ids.reserve(anon.size());
    for (const std::string& tok : anon) token_ids.push_back(vocab_.input_id(tok));

    std::vector<Tensor> utt_states = encode_utterance(tape, embed_, enc_utt_, token_ids);
    if (apply_dropout)
      for (Tensor& s : utt_states)
        s = dropout(tape, s, config_.dropout, *dropout_rng, true);

    std::vector<SegSpan> spans = phrase_spans(turn);
    std::vector<Tensor> phrases = encode_phrases(tape, embed_, enc_phr_, token_ids, spans);
    if (apply_dropout)
      for (Tensor& p : phrases) p = dropout(tape, p, config_.dropout, *dropout_rng, true);

    // --- memory update with all of this turn's phrases, before decoding ---
    for (std::size_t k = 0; k < phrases.size(); ++k) {
      if (config_.ablation == Ablation::NoController)
        process_phrase_kv(tape, memory, phrases[k], kv_w_, &result.trace,
                          span_text(turn, spans[k]), turn_idx);
      else
        process_phrase(tape, memory, phrases[k], sia_, gate_, &result.trace,
                       span_text(turn, spans[k]), turn_idx);
      ++result.phrase_count;
    }

    std::vector<Tensor> memory_rows;
    memory_rows.reserve(config_.memory_slots);
    for (std::size_t m = 0; m < config_.memory_slots; ++m)
      memory_rows.push_back(row(tape, memory.matrix(), m));

    // --- copy channel bookkeeping ---
    CopyScope copy;
    copy.positions.resize(scope.size());
    copy.embed_rows.reserve(scope.size());
    copy.values = scope.values();
    for (std::size_t s = 0; s < scope.size(); ++s) {
      copy.embed_rows.push_back(vocab_.placeholder_row(scope.names()[s]));
      for (std::size_t pos = 0; pos < anon.size(); ++pos)
        if (anon[pos] == scope.names()[s]) copy.positions[s].push_back(pos);
    }

    // --- gold ids: entity values route through their scope placeholder, so
    // the whole entity pipeline lives in anonymized space ---
    std::vector<std::size_t> gold;
    for (const std::string& tok : split_query(turn.gold_query)) {
      std::size_t id = vocab_.output_size();
      for (std::size_t s = 0; s < scope.size(); ++s) {
        if (copy.values[s] == tok) {
          id = vocab_.output_size() + s;
          break;
        }
      }
      gold.push_back(id != vocab_.output_size() ? id : vocab_.output_id(tok));
    }
    gold.push_back(vocab_.eos_id());

    // --- decoder initial state from the utterance's final fwd||bwd pair ---
    const std::size_t h = config_.hidden;
    Tensor utt_final = concat(
        tape, {slice(tape, utt_states.back(), 0, h), slice(tape, utt_states.front(), h, h)});

    DropoutCtx dctx;
    if (apply_dropout) {
      dctx.p = config_.dropout;
      dctx.rng = dropout_rng;
      dctx.enabled = true;
    }

    // teacher-forced loss (both modes; dropout only when training)
    {
      DecoderState st = init_decoder(tape, dec_, utt_final);
      std::vector<Tensor> token_losses;
      token_losses.reserve(gold.size());
      std::size_t prev = vocab_.sos_id();
      for (std::size_t g : gold) {
        StepResult sr = decode_step(tape, dec_, st, prev, utt_states, memory_rows, copy, dctx);
        st = sr.state;
        token_losses.push_back(cross_entropy(tape, sr.logits, g));
        prev = g;
      }
      result.turn_losses.push_back(mean(tape, token_losses));
    }

    if (!training) {
      DecoderState st = init_decoder(tape, dec_, utt_final);
      GreedyResult gr = greedy_decode(tape, dec_, st, utt_states, memory_rows, copy, vocab_,
                                      config_.max_decode_len);
      std::string pred;
      for (std::size_t i = 0; i < gr.tokens.size(); ++i) {
        if (i > 0) pred += " ";
        pred += gr.tokens[i];
      }
      result.predictions.push_back(std::move(pred));
      result.truncated.push_back(gr.truncated);
    }
  }
  return result;
}

}  // namespace memce
