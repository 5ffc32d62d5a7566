#include "memce/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace memce {

namespace {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw std::invalid_argument("tensor extents must be positive");
    n *= e;
  }
  return n;
}

std::shared_ptr<TensorImpl> make_impl(Shape shape, std::vector<double> values, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(values);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->value.size(), 0.0);
  return impl;
}

// Output tensor for an op: requires grad iff recording and any input does.
Tensor make_output(Tape& tape, Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs) {
  bool rg = false;
  if (tape.recording()) {
    for (const Tensor* t : inputs) rg = rg || t->requires_grad();
  }
  return Tensor::wrap(make_impl(std::move(shape), std::move(values), rg));
}

void check_vector(const Tensor& x, const char* what) {
  if (!x.defined() || x.shape().size() != 1)
    throw std::invalid_argument(std::string(what) + ": expected a vector");
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor::wrap(make_impl(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size())
    throw std::invalid_argument("tensor shape does not match element count");
  return Tensor::wrap(make_impl(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item(): tensor is not a scalar");
  return impl_->value[0];
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : impl_->value)
    if (!std::isfinite(v)) return false;
  for (double g : impl_->grad)
    if (!std::isfinite(g)) return false;
  return true;
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  if (!loss.requires_grad())
    throw std::invalid_argument("backward: loss does not depend on any differentiable input");
  loss.impl()->grad[0] += 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

// ---------------------------------------------------------------------------

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("add: shape mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  Tensor y = make_output(tape, a.shape(), std::move(out), {&a, &b});
  if (y.requires_grad()) {
    auto ai = a.shared(), bi = b.shared(), yi = y.shared();
    tape.record([ai, bi, yi] {
      for (std::size_t i = 0; i < yi->value.size(); ++i) {
        const double g = yi->grad[i];
        if (ai->requires_grad) ai->grad[i] += g;
        if (bi->requires_grad) bi->grad[i] += g;
      }
    });
  }
  return y;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("sub: shape mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  Tensor y = make_output(tape, a.shape(), std::move(out), {&a, &b});
  if (y.requires_grad()) {
    auto ai = a.shared(), bi = b.shared(), yi = y.shared();
    tape.record([ai, bi, yi] {
      for (std::size_t i = 0; i < yi->value.size(); ++i) {
        const double g = yi->grad[i];
        if (ai->requires_grad) ai->grad[i] += g;
        if (bi->requires_grad) bi->grad[i] -= g;
      }
    });
  }
  return y;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("mul: shape mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  Tensor y = make_output(tape, a.shape(), std::move(out), {&a, &b});
  if (y.requires_grad()) {
    auto ai = a.shared(), bi = b.shared(), yi = y.shared();
    tape.record([ai, bi, yi] {
      for (std::size_t i = 0; i < yi->value.size(); ++i) {
        const double g = yi->grad[i];
        if (ai->requires_grad) ai->grad[i] += g * bi->value[i];
        if (bi->requires_grad) bi->grad[i] += g * ai->value[i];
      }
    });
  }
  return y;
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * c;
  Tensor y = make_output(tape, a.shape(), std::move(out), {&a});
  if (y.requires_grad()) {
    auto ai = a.shared();
    auto yi = y.shared();
    tape.record([ai, yi, c] {
      for (std::size_t i = 0; i < yi->value.size(); ++i) ai->grad[i] += yi->grad[i] * c;
    });
  }
  return y;
}

Tensor neg(Tape& tape, const Tensor& a) { return scale(tape, a, -1.0); }

Tensor scale_by(Tape& tape, const Tensor& x, const Tensor& s) {
  if (s.size() != 1) throw std::invalid_argument("scale_by: scale must be a scalar");
  const double c = s.item();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * c;
  Tensor y = make_output(tape, x.shape(), std::move(out), {&x, &s});
  if (y.requires_grad()) {
    auto xi = x.shared(), si = s.shared(), yi = y.shared();
    tape.record([xi, si, yi] {
      const double c = si->value[0];
      double accum = 0.0;
      for (std::size_t i = 0; i < yi->value.size(); ++i) {
        const double g = yi->grad[i];
        if (xi->requires_grad) xi->grad[i] += g * c;
        accum += g * xi->value[i];
      }
      if (si->requires_grad) si->grad[0] += accum;
    });
  }
  return y;
}

Tensor weighted_sum(Tape& tape, std::span<const Tensor> states, const Tensor& weights) {
  if (states.empty()) throw std::invalid_argument("weighted_sum: no states");
  if (weights.size() != states.size())
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  const Shape& shape = states[0].shape();
  bool rg = weights.requires_grad();
  for (const Tensor& s : states) {
    if (s.shape() != shape) throw std::invalid_argument("weighted_sum: state shape mismatch");
    rg = rg || s.requires_grad();
  }
  const std::size_t n = states[0].size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < states.size(); ++j) {
    const double w = weights[j];
    for (std::size_t i = 0; i < n; ++i) out[i] += w * states[j][i];
  }
  Tensor y = Tensor::from(shape, std::move(out), tape.recording() && rg);
  if (y.requires_grad()) {
    std::vector<std::shared_ptr<TensorImpl>> ins;
    ins.reserve(states.size());
    for (const Tensor& s : states) ins.push_back(s.shared());
    auto wi = weights.shared();
    auto yi = y.shared();
    tape.record([ins, wi, yi] {
      const std::size_t n = yi->value.size();
      for (std::size_t j = 0; j < ins.size(); ++j) {
        const double w = wi->value[j];
        double accum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double g = yi->grad[i];
          if (ins[j]->requires_grad) ins[j]->grad[i] += g * w;
          accum += g * ins[j]->value[i];
        }
        if (wi->requires_grad) wi->grad[j] += accum;
      }
    });
  }
  return y;
}

Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x) {
  if (w.shape().size() != 2) throw std::invalid_argument("matvec: w must be a matrix");
  check_vector(x, "matvec");
  const std::size_t rows = w.shape()[0], cols = w.shape()[1];
  if (cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<double> out(rows, 0.0);
  const double* wp = w.value().data();
  const double* xp = x.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    const double* wr = wp + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += wr[c] * xp[c];
    out[r] = s;
  }
  Tensor y = make_output(tape, {rows}, std::move(out), {&w, &x});
  if (y.requires_grad()) {
    auto wi = w.shared(), xi = x.shared(), yi = y.shared();
    tape.record([wi, xi, yi, rows, cols] {
      const double* g = yi->grad.data();
      if (wi->requires_grad) {
        double* wg = wi->grad.data();
        const double* xv = xi->value.data();
        for (std::size_t r = 0; r < rows; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          double* wgr = wg + r * cols;
          for (std::size_t c = 0; c < cols; ++c) wgr[c] += gr * xv[c];
        }
      }
      if (xi->requires_grad) {
        double* xg = xi->grad.data();
        const double* wv = wi->value.data();
        for (std::size_t r = 0; r < rows; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          const double* wr = wv + r * cols;
          for (std::size_t c = 0; c < cols; ++c) xg[c] += gr * wr[c];
        }
      }
    });
  }
  return y;
}

Tensor affine(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b) {
  return add(tape, matvec(tape, w, x), b);
}

namespace {

template <typename F, typename DF>
Tensor unary_elementwise(Tape& tape, const Tensor& a, F f, DF df_from_y) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
  Tensor y = make_output(tape, a.shape(), std::move(out), {&a});
  if (y.requires_grad()) {
    auto ai = a.shared();
    auto yi = y.shared();
    tape.record([ai, yi, df_from_y] {
      for (std::size_t i = 0; i < yi->value.size(); ++i)
        ai->grad[i] += yi->grad[i] * df_from_y(ai->value[i], yi->value[i]);
    });
  }
  return y;
}

}  // namespace

Tensor tanh(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a,
      [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax(Tape& tape, const Tensor& x) {
  check_vector(x, "softmax");
  if (x.size() == 0) throw std::invalid_argument("softmax: empty input");
  const std::size_t n = x.size();
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  std::vector<double> out(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(x[i] - mx);
    z += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= z;
  Tensor y = make_output(tape, {n}, std::move(out), {&x});
  if (y.requires_grad()) {
    auto xi = x.shared();
    auto yi = y.shared();
    tape.record([xi, yi] {
      const std::size_t n = yi->value.size();
      double dotgy = 0.0;
      for (std::size_t i = 0; i < n; ++i) dotgy += yi->grad[i] * yi->value[i];
      for (std::size_t i = 0; i < n; ++i)
        xi->grad[i] += yi->value[i] * (yi->grad[i] - dotgy);
    });
  }
  return y;
}

Tensor softmin(Tape& tape, const Tensor& x) {
  check_vector(x, "softmin");
  if (x.size() == 0) throw std::invalid_argument("softmin: empty input");
  return softmax(tape, neg(tape, x));
}

Tensor dot(Tape& tape, const Tensor& a, const Tensor& b) {
  check_vector(a, "dot");
  check_vector(b, "dot");
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  Tensor y = make_output(tape, {1}, {s}, {&a, &b});
  if (y.requires_grad()) {
    auto ai = a.shared(), bi = b.shared(), yi = y.shared();
    tape.record([ai, bi, yi] {
      const double g = yi->grad[0];
      for (std::size_t i = 0; i < ai->value.size(); ++i) {
        if (ai->requires_grad) ai->grad[i] += g * bi->value[i];
        if (bi->requires_grad) bi->grad[i] += g * ai->value[i];
      }
    });
  }
  return y;
}

Tensor cosine_similarity(Tape& tape, const Tensor& a, const Tensor& b, double eps) {
  check_vector(a, "cosine_similarity");
  check_vector(b, "cosine_similarity");
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  if (!(eps > 0.0)) throw std::invalid_argument("cosine_similarity: eps must be positive");
  const std::size_t n = a.size();
  double s = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += a[i] * b[i];
    na2 += a[i] * a[i];
    nb2 += b[i] * b[i];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double prod = na * nb;
  const double denom = std::max(prod, eps);
  const double out = s / denom;
  Tensor y = make_output(tape, {1}, {out}, {&a, &b});
  if (y.requires_grad()) {
    auto ai = a.shared(), bi = b.shared(), yi = y.shared();
    const bool guarded = !(prod > eps);
    tape.record([ai, bi, yi, denom, na2, nb2, out, guarded] {
      const double g = yi->grad[0];
      const std::size_t n = ai->value.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (ai->requires_grad) {
          double d = bi->value[i] / denom;
          if (!guarded) d -= out * ai->value[i] / na2;
          ai->grad[i] += g * d;
        }
        if (bi->requires_grad) {
          double d = ai->value[i] / denom;
          if (!guarded) d -= out * bi->value[i] / nb2;
          bi->grad[i] += g * d;
        }
      }
    });
  }
  return y;
}

Tensor concat(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::size_t total = 0;
  bool rg = false;
  for (const Tensor& t : parts) {
    check_vector(t, "concat");
    total += t.size();
    rg = rg || t.requires_grad();
  }
  std::vector<double> out;
  out.reserve(total);
  for (const Tensor& t : parts) out.insert(out.end(), t.value().begin(), t.value().end());
  Tensor y = Tensor::from({total}, std::move(out), tape.recording() && rg);
  if (y.requires_grad()) {
    std::vector<std::shared_ptr<TensorImpl>> ins;
    ins.reserve(parts.size());
    for (const Tensor& t : parts) ins.push_back(t.shared());
    auto yi = y.shared();
    tape.record([ins, yi] {
      std::size_t off = 0;
      for (const auto& in : ins) {
        if (in->requires_grad)
          for (std::size_t i = 0; i < in->value.size(); ++i) in->grad[i] += yi->grad[off + i];
        off += in->value.size();
      }
    });
  }
  return y;
}

Tensor concat(Tape& tape, std::initializer_list<Tensor> parts) {
  std::vector<Tensor> v(parts);
  return concat(tape, std::span<const Tensor>(v));
}

Tensor slice(Tape& tape, const Tensor& x, std::size_t offset, std::size_t len) {
  check_vector(x, "slice");
  if (offset + len > x.size()) throw std::invalid_argument("slice: out of range");
  std::vector<double> out(x.value().begin() + offset, x.value().begin() + offset + len);
  Tensor y = make_output(tape, {len}, std::move(out), {&x});
  if (y.requires_grad()) {
    auto xi = x.shared();
    auto yi = y.shared();
    tape.record([xi, yi, offset, len] {
      for (std::size_t i = 0; i < len; ++i) xi->grad[offset + i] += yi->grad[i];
    });
  }
  return y;
}

Tensor row(Tape& tape, const Tensor& m, std::size_t r) {
  if (m.shape().size() != 2) throw std::invalid_argument("row: expected a matrix");
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  if (r >= rows) throw std::invalid_argument("row: index out of range");
  std::vector<double> out(m.value().begin() + r * cols, m.value().begin() + (r + 1) * cols);
  Tensor y = make_output(tape, {cols}, std::move(out), {&m});
  if (y.requires_grad()) {
    auto mi = m.shared();
    auto yi = y.shared();
    tape.record([mi, yi, r, cols] {
      for (std::size_t i = 0; i < cols; ++i) mi->grad[r * cols + i] += yi->grad[i];
    });
  }
  return y;
}

Tensor rank_one_update(Tape& tape, const Tensor& m, const Tensor& w, const Tensor& h) {
  if (m.shape().size() != 2) throw std::invalid_argument("rank_one_update: expected a matrix");
  check_vector(w, "rank_one_update");
  check_vector(h, "rank_one_update");
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  if (w.size() != rows || h.size() != cols)
    throw std::invalid_argument("rank_one_update: dimension mismatch");
  std::vector<double> out(m.value().begin(), m.value().end());
  for (std::size_t r = 0; r < rows; ++r) {
    const double wr = w[r];
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += wr * h[c];
  }
  Tensor y = make_output(tape, m.shape(), std::move(out), {&m, &w, &h});
  if (y.requires_grad()) {
    auto mi = m.shared(), wi = w.shared(), hi = h.shared(), yi = y.shared();
    tape.record([mi, wi, hi, yi, rows, cols] {
      const double* g = yi->grad.data();
      if (mi->requires_grad)
        for (std::size_t i = 0; i < rows * cols; ++i) mi->grad[i] += g[i];
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = g + r * cols;
        if (wi->requires_grad) {
          double s = 0.0;
          for (std::size_t c = 0; c < cols; ++c) s += gr[c] * hi->value[c];
          wi->grad[r] += s;
        }
        if (hi->requires_grad) {
          const double wr = wi->value[r];
          for (std::size_t c = 0; c < cols; ++c) hi->grad[c] += gr[c] * wr;
        }
      }
    });
  }
  return y;
}

Tensor embedding(Tape& tape, const Tensor& table, std::size_t id) {
  if (table.shape().size() != 2) throw std::invalid_argument("embedding: table must be 2-D");
  if (id >= table.shape()[0]) throw std::invalid_argument("embedding: id out of range");
  return row(tape, table, id);
}

Tensor dropout(Tape& tape, const Tensor& x, double p, RandomSource& rng, bool enabled) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
  if (!enabled || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  Tensor y = make_output(tape, x.shape(), std::move(out), {&x});
  if (y.requires_grad()) {
    auto xi = x.shared();
    auto yi = y.shared();
    tape.record([xi, yi, mask = std::move(mask)] {
      for (std::size_t i = 0; i < yi->value.size(); ++i) xi->grad[i] += yi->grad[i] * mask[i];
    });
  }
  return y;
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t gold) {
  check_vector(logits, "cross_entropy");
  if (gold >= logits.size()) throw DataError("cross_entropy: gold index out of range");
  const std::size_t n = logits.size();
  double mx = logits[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
  const double lse = mx + std::log(z);
  Tensor y = make_output(tape, {1}, {lse - logits[gold]}, {&logits});
  if (y.requires_grad()) {
    auto li = logits.shared();
    auto yi = y.shared();
    tape.record([li, yi, gold, mx, z] {
      const double g = yi->grad[0];
      const std::size_t n = li->value.size();
      for (std::size_t i = 0; i < n; ++i)
        li->grad[i] += g * std::exp(li->value[i] - mx) / z;
      li->grad[gold] -= g;
    });
  }
  return y;
}

Tensor mean(Tape& tape, std::span<const Tensor> scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean: no inputs");
  double s = 0.0;
  bool rg = false;
  for (const Tensor& t : scalars) {
    if (t.size() != 1) throw std::invalid_argument("mean: inputs must be scalars");
    s += t.item();
    rg = rg || t.requires_grad();
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  Tensor y = Tensor::from({1}, {s * inv}, tape.recording() && rg);
  if (y.requires_grad()) {
    std::vector<std::shared_ptr<TensorImpl>> ins;
    for (const Tensor& t : scalars) ins.push_back(t.shared());
    auto yi = y.shared();
    tape.record([ins, yi, inv] {
      for (const auto& in : ins)
        if (in->requires_grad) in->grad[0] += yi->grad[0] * inv;
    });
  }
  return y;
}

LstmState lstm_cell(Tape& tape, const LstmCellParams& p, const Tensor& x, const LstmState& prev) {
  const std::size_t hidden = p.hidden();
  if (p.w.shape().size() != 2 || p.w.shape()[0] != 4 * hidden)
    throw std::invalid_argument("lstm_cell: weight shape mismatch");
  if (prev.h.size() != hidden || prev.c.size() != hidden)
    throw std::invalid_argument("lstm_cell: state dimension mismatch");
  if (p.w.shape()[1] != x.size() + hidden)
    throw std::invalid_argument("lstm_cell: input dimension mismatch");
  Tensor z = affine(tape, p.w, concat(tape, {x, prev.h}), p.b);
  Tensor i = sigmoid(tape, slice(tape, z, 0, hidden));
  Tensor f = sigmoid(tape, slice(tape, z, hidden, hidden));
  Tensor g = tanh(tape, slice(tape, z, 2 * hidden, hidden));
  Tensor o = sigmoid(tape, slice(tape, z, 3 * hidden, hidden));
  Tensor c = add(tape, mul(tape, f, prev.c), mul(tape, i, g));
  Tensor h = mul(tape, o, tanh(tape, c));
  return {h, c};
}

}  // namespace memce
