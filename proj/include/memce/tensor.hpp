#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "memce/util.hpp"

namespace memce {

using Shape = std::vector<std::size_t>;

struct TensorImpl {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // same length as value when requires_grad
  bool requires_grad = false;
};

/// Value-semantics handle to a tensor node. Copies share the underlying
/// buffer; all forward values are written once at construction and gradients
/// accumulate into `grad` during Tape::backward.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  std::size_t size() const { return impl_->value.size(); }
  const Shape& shape() const { return impl_->shape; }
  bool requires_grad() const { return impl_->requires_grad; }

  std::span<const double> value() const { return impl_->value; }
  std::span<double> value_mut() { return impl_->value; }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> grad_mut() { return impl_->grad; }

  double operator[](std::size_t i) const { return impl_->value[i]; }
  /// Scalar tensors only.
  double item() const;

  void zero_grad();
  /// Asserts every stored value (and gradient) is finite.
  bool all_finite() const;

  TensorImpl* impl() const { return impl_.get(); }
  std::shared_ptr<TensorImpl> shared() const { return impl_; }
  static Tensor wrap(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

/// Wengert list. Ops append their backward closures in execution order;
/// backward() replays them in reverse, which is a valid topological order.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }
  std::size_t node_count() const { return steps_.size(); }

  /// Seeds the (scalar) loss gradient with 1 and accumulates gradients into
  /// every recorded ancestor, including parameter leaves.
  void backward(const Tensor& loss);

 private:
  bool recording_;
  std::vector<std::function<void()>> steps_;
};

// ---------------------------------------------------------------------------
// Operations. Every op computes the forward value eagerly and, when the tape
// is recording and any input requires grad, registers a backward closure.
// ---------------------------------------------------------------------------

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(Tape& tape, const Tensor& a, double c);
/// x scaled by a (differentiable) scalar tensor.
Tensor scale_by(Tape& tape, const Tensor& x, const Tensor& s);
Tensor neg(Tape& tape, const Tensor& a);
/// Sum_j weights[j] * states[j]. States must share one shape; weights is a
/// vector of matching length.
Tensor weighted_sum(Tape& tape, std::span<const Tensor> states, const Tensor& weights);

/// w has shape (m, n), x has shape (n); result (m).
Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x);
/// matvec(w, x) + b fused for convenience.
Tensor affine(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b);

Tensor tanh(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor relu(Tape& tape, const Tensor& a);

/// Shift-invariant softmax over a non-empty vector.
Tensor softmax(Tape& tape, const Tensor& x);
/// softmin(x) == softmax(-x), computed exactly that way.
Tensor softmin(Tape& tape, const Tensor& x);

Tensor dot(Tape& tape, const Tensor& a, const Tensor& b);

/// a.b / max(|a| |b|, eps). The backward pass is piecewise: when the guard is
/// active the denominator is a constant, and the |a|-direction term is
/// dropped for exactly-zero vectors (where it vanishes identically).
Tensor cosine_similarity(Tape& tape, const Tensor& a, const Tensor& b, double eps);

Tensor concat(Tape& tape, std::span<const Tensor> parts);
Tensor concat(Tape& tape, std::initializer_list<Tensor> parts);
Tensor slice(Tape& tape, const Tensor& x, std::size_t offset, std::size_t len);

/// Row m of a (rows, cols) matrix as a vector.
Tensor row(Tape& tape, const Tensor& m, std::size_t r);
/// m + outer(w, h) for m of shape (L, d), w (L), h (d).
Tensor rank_one_update(Tape& tape, const Tensor& m, const Tensor& w, const Tensor& h);

/// Row lookup in an embedding table of shape (V, E).
Tensor embedding(Tape& tape, const Tensor& table, std::size_t id);

/// Inverted dropout: keeps each component with probability 1-p and scales
/// by 1/(1-p). Identity when disabled (evaluation) or p == 0.
Tensor dropout(Tape& tape, const Tensor& x, double p, RandomSource& rng, bool enabled);

/// -log softmax(logits)[gold], computed via log-sum-exp.
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t gold);

/// Mean of scalar tensors.
Tensor mean(Tape& tape, std::span<const Tensor> scalars);

struct LstmState {
  Tensor h;
  Tensor c;
};

/// Single-matrix LSTM parameters: w has shape (4H, X+H) with gate blocks in
/// i, f, g, o order; b has shape (4H).
struct LstmCellParams {
  Tensor w;
  Tensor b;
  std::size_t hidden() const { return b.size() / 4; }
};

/// Standard LSTM recurrence: c' = f*c + i*g, h' = o*tanh(c').
LstmState lstm_cell(Tape& tape, const LstmCellParams& p, const Tensor& x, const LstmState& prev);

}  // namespace memce
