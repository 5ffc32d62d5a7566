#include "memce/memory.hpp"

#include <algorithm>
#include <ostream>

#include "json.hpp"

namespace memce {

SiameseParams make_siamese(ParameterSet& params, const std::string& prefix,
                           std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t output_dim, RandomSource& rng) {
  SiameseParams p;
  p.w1 = params.create(prefix + ".w1", {hidden_dim, input_dim}, rng);
  p.b1 = params.create(prefix + ".b1", {hidden_dim}, rng);
  p.w2 = params.create(prefix + ".w2", {hidden_dim, hidden_dim}, rng);
  p.b2 = params.create(prefix + ".b2", {hidden_dim}, rng);
  p.w_out = params.create(prefix + ".w", {output_dim, hidden_dim}, rng);
  p.b_out = params.create(prefix + ".b", {output_dim}, rng);
  return p;
}

Tensor siamese_project(Tape& tape, const SiameseParams& p, const Tensor& x) {
  Tensor h1 = tanh(tape, affine(tape, p.w1, x, p.b1));
  Tensor h2 = tanh(tape, affine(tape, p.w2, h1, p.b2));
  return affine(tape, p.w_out, h2, p.b_out);
}

GateParams make_gate(ParameterSet& params, const std::string& prefix, std::size_t slots,
                     RandomSource& rng) {
  GateParams p;
  p.w = params.create(prefix + ".w", {1, slots}, rng);
  p.b = params.create(prefix + ".b", {1}, rng);
  return p;
}

ContextMemory::ContextMemory(MemorySettings settings) : settings_(settings) { reset(); }

void ContextMemory::reset() {
  matrix_ = Tensor::zeros({settings_.slots, settings_.dim});
  usage_ = Tensor::zeros({settings_.slots});
  step_ = 0;
}

void ContextMemory::reset_to(const Tensor& initial) {
  if (initial.shape() != Shape{settings_.slots, settings_.dim})
    throw std::invalid_argument("reset_to: initial matrix shape mismatch");
  matrix_ = initial;
  usage_ = Tensor::zeros({settings_.slots});
  step_ = 0;
}

void ContextMemory::write(Tape& tape, const Tensor& write_w, const Tensor& phrase) {
  matrix_ = rank_one_update(tape, matrix_, write_w, phrase);
  usage_ = add(tape, write_w, scale(tape, usage_, settings_.decay));
  ++step_;
}

Tensor conflict_distribution(Tape& tape, const Tensor& phrase, const Tensor& memory,
                             const SiameseParams& sia, double eps) {
  if (memory.shape().size() != 2 || phrase.size() != memory.shape()[1])
    throw std::invalid_argument("conflict_distribution: dimension mismatch");
  const std::size_t slots = memory.shape()[0];
  Tensor projected_phrase = siamese_project(tape, sia, phrase);
  std::vector<Tensor> sims;
  sims.reserve(slots);
  for (std::size_t m = 0; m < slots; ++m) {
    Tensor slot = siamese_project(tape, sia, row(tape, memory, m));
    sims.push_back(cosine_similarity(tape, projected_phrase, slot, eps));
  }
  return softmax(tape, concat(tape, std::span<const Tensor>(sims)));
}

Tensor least_used(Tape& tape, const Tensor& usage) { return softmin(tape, usage); }

Tensor gate(Tape& tape, const GateParams& p, const Tensor& w_s) {
  return sigmoid(tape, affine(tape, p.w, w_s, p.b));
}

Tensor write_weights(Tape& tape, const Tensor& w_s, const Tensor& w_lu, const Tensor& mu,
                     double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("write_weights: tau must be positive");
  if (w_s.size() != w_lu.size())
    throw std::invalid_argument("write_weights: distribution length mismatch");
  Tensor one_minus_mu = sub(tape, Tensor::scalar(1.0), mu);
  Tensor blended =
      add(tape, scale_by(tape, w_s, mu), scale_by(tape, w_lu, one_minus_mu));
  return softmax(tape, scale(tape, blended, 1.0 / tau));
}

Tensor kv_write_weights(Tape& tape, const Tensor& memory, const Tensor& phrase,
                        const Tensor& w_p) {
  Tensor keyed = matvec(tape, w_p, phrase);
  Tensor scores = matvec(tape, memory, keyed);
  return softmax(tape, scores);
}

namespace {

std::size_t argmax_of(std::span<const double> v) {
  return static_cast<std::size_t>(
      std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

TraceRecord make_record(const std::string& phrase_text, std::size_t turn_index,
                        const Tensor& w_w) {
  TraceRecord rec;
  rec.phrase = phrase_text;
  rec.turn_index = turn_index;
  rec.w_w.assign(w_w.value().begin(), w_w.value().end());
  rec.argmax_slot = argmax_of(w_w.value());
  return rec;
}

}  // namespace

void process_phrase(Tape& tape, ContextMemory& mem, const Tensor& phrase,
                    const SiameseParams& sia, const GateParams& gp,
                    ControllerTrace* trace, const std::string& phrase_text,
                    std::size_t turn_index) {
  Tensor w_s =
      conflict_distribution(tape, phrase, mem.matrix(), sia, mem.settings().cosine_eps);
  Tensor w_lu = least_used(tape, mem.usage());
  Tensor mu = gate(tape, gp, w_s);
  Tensor w_w = write_weights(tape, w_s, w_lu, mu, mem.settings().temperature);
  mem.write(tape, w_w, phrase);
  if (trace != nullptr) {
    TraceRecord rec = make_record(phrase_text, turn_index, w_w);
    rec.w_s.assign(w_s.value().begin(), w_s.value().end());
    rec.w_lu.assign(w_lu.value().begin(), w_lu.value().end());
    rec.mu = mu.item();
    trace->push_back(std::move(rec));
  }
}

void process_phrase_kv(Tape& tape, ContextMemory& mem, const Tensor& phrase,
                       const Tensor& w_p, ControllerTrace* trace,
                       const std::string& phrase_text, std::size_t turn_index) {
  Tensor w_w = kv_write_weights(tape, mem.matrix(), phrase, w_p);
  mem.write(tape, w_w, phrase);
  if (trace != nullptr) trace->push_back(make_record(phrase_text, turn_index, w_w));
}

void write_trace_csv(std::ostream& out, const ControllerTrace& trace, std::size_t slots) {
  out << "slot";
  for (std::size_t c = 0; c < trace.size(); ++c) out << ",step" << c;
  out << "\n";
  out.precision(17);
  for (std::size_t m = 0; m < slots; ++m) {
    out << m;
    for (const TraceRecord& rec : trace) out << "," << rec.w_w.at(m);
    out << "\n";
  }
}

void write_trace_sidecar(std::ostream& out, const ControllerTrace& trace,
                         std::size_t slots) {
  nlohmann::json columns = nlohmann::json::array();
  for (std::size_t c = 0; c < trace.size(); ++c) {
    columns.push_back({{"column", c},
                       {"turn", trace[c].turn_index},
                       {"phrase", trace[c].phrase},
                       {"argmax_slot", trace[c].argmax_slot}});
  }
  nlohmann::json slot_info = nlohmann::json::array();
  for (std::size_t m = 0; m < slots; ++m) {
    std::string last_phrase;
    bool written = false;
    for (const TraceRecord& rec : trace) {
      if (rec.argmax_slot == m) {
        last_phrase = rec.phrase;
        written = true;
      }
    }
    slot_info.push_back(
        {{"slot", m}, {"written", written}, {"last_argmax_phrase", last_phrase}});
  }
  out << nlohmann::json{{"columns", columns}, {"slots", slot_info}}.dump(2) << "\n";
}

}  // namespace memce
