#include <cmath>
#include <vector>

#include "doctest.h"
#include "memce/grad_check.hpp"
#include "memce/tensor.hpp"

using namespace memce;

namespace {

Tensor random_vec(RandomSource& rng, std::size_t n, bool requires_grad = true,
                  double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from({n}, std::move(v), requires_grad);
}

Tensor random_mat(RandomSource& rng, std::size_t r, std::size_t c, bool requires_grad = true) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from({r, c}, std::move(v), requires_grad);
}

void check_simplex(const Tensor& w) {
  double sum = 0.0;
  for (double v : w.value()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0 + 1e-15);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

constexpr int kSeeds = 50;

}  // namespace

TEST_CASE("softmax matches hand examples") {
  Tape tape(false);
  Tensor a = softmax(tape, Tensor::from({2}, {0.0, 0.0}));
  CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.5).epsilon(1e-12));

  Tensor b = softmax(tape, Tensor::from({2}, {std::log(1.0), std::log(3.0)}));
  CHECK(b[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax is shift invariant and simplex-valued") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    RandomSource rng(seed);
    Tape tape(false);
    const std::size_t n = 1 + rng.uniform_int(8);
    Tensor x = random_vec(rng, n, false, -50.0, 50.0);
    const double c = rng.uniform(-100.0, 100.0);
    std::vector<double> shifted(x.value().begin(), x.value().end());
    for (double& v : shifted) v += c;
    Tensor y1 = softmax(tape, x);
    Tensor y2 = softmax(tape, Tensor::from({n}, std::move(shifted)));
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));
    check_simplex(y1);
  }
}

TEST_CASE("softmax rejects empty input and survives huge magnitudes") {
  Tape tape(false);
  // empty vectors are unrepresentable: construction itself rejects them
  CHECK_THROWS_AS(Tensor::from({0}, {}), std::invalid_argument);
  CHECK_THROWS_AS(softmax(tape, Tensor::from({2, 2}, {0.0, 0.0, 0.0, 0.0})),
                  std::invalid_argument);
  Tensor big = softmax(tape, Tensor::from({3}, {1e6, -1e6, 0.0}));
  CHECK(big.all_finite());
  double sum = 0.0;
  for (double v : big.value()) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmin matches hand examples") {
  Tape tape(false);
  Tensor a = softmin(tape, Tensor::from({3}, {0.0, 0.0, 0.0}));
  for (double v : a.value()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Tensor b = softmin(tape, Tensor::from({2}, {0.0, std::log(2.0)}));
  CHECK(b[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmin equals softmax of negated input exactly") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    RandomSource rng(100 + seed);
    Tape tape(false);
    const std::size_t n = 1 + rng.uniform_int(10);
    Tensor x = random_vec(rng, n, false, -30.0, 30.0);
    std::vector<double> negated(x.value().begin(), x.value().end());
    for (double& v : negated) v = -v;
    Tensor a = softmin(tape, x);
    Tensor b = softmax(tape, Tensor::from({n}, std::move(negated)));
    for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == b[i]);
    check_simplex(a);
  }
}

TEST_CASE("cosine similarity hand examples") {
  Tape tape(false);
  Tensor same = cosine_similarity(tape, Tensor::from({3}, {1, 2, 3}),
                                  Tensor::from({3}, {1, 2, 3}), 1e-8);
  CHECK(same.item() == doctest::Approx(1.0).epsilon(1e-12));

  Tensor ortho = cosine_similarity(tape, Tensor::from({2}, {1, 0}),
                                   Tensor::from({2}, {0, 1}), 1e-8);
  CHECK(ortho.item() == doctest::Approx(0.0));

  Tensor anti = cosine_similarity(tape, Tensor::from({2}, {1, 1}),
                                  Tensor::from({2}, {-1, -1}), 1e-8);
  CHECK(anti.item() == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_THROWS_AS(cosine_similarity(tape, Tensor::from({2}, {1, 0}),
                                    Tensor::from({3}, {0, 1, 0}), 1e-8),
                  std::invalid_argument);
}

TEST_CASE("cosine similarity stays in [-1, 1] and finite at zero vectors") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    RandomSource rng(200 + seed);
    Tape tape;
    Tensor a = random_vec(rng, 6, true, -1e3, 1e3);
    Tensor b = random_vec(rng, 6, true, -1e3, 1e3);
    Tensor c = cosine_similarity(tape, a, b, 1e-8);
    CHECK(std::abs(c.item()) <= 1.0 + 1e-12);
    tape.backward(c);
    CHECK(a.all_finite());
    CHECK(b.all_finite());
  }
  // zero against non-zero: guard active, gradient defined and finite
  Tape tape;
  Tensor z = Tensor::from({3}, {0, 0, 0}, true);
  Tensor b = Tensor::from({3}, {1, 2, 2}, true);
  Tensor c = cosine_similarity(tape, z, b, 1e-8);
  CHECK(c.item() == 0.0);
  tape.backward(c);
  CHECK(z.all_finite());
  CHECK(b.all_finite());
}

TEST_CASE("lstm cell closed forms with zero parameters") {
  Tape tape(false);
  const std::size_t h = 3, x = 2;
  LstmCellParams p{Tensor::zeros({4 * h, x + h}), Tensor::zeros({4 * h})};
  LstmState zero{Tensor::zeros({h}), Tensor::zeros({h})};
  Tensor input = Tensor::from({x}, {0.7, -0.3});

  LstmState s1 = lstm_cell(tape, p, input, zero);
  for (double v : s1.h.value()) CHECK(v == doctest::Approx(0.0));
  for (double v : s1.c.value()) CHECK(v == doctest::Approx(0.0));

  Tensor c0 = Tensor::from({h}, {0.4, -1.2, 0.9});
  LstmState s2 = lstm_cell(tape, p, input, {Tensor::zeros({h}), c0});
  for (std::size_t i = 0; i < h; ++i) {
    CHECK(s2.c.value()[i] == doctest::Approx(0.5 * c0[i]).epsilon(1e-12));
    CHECK(s2.h.value()[i] == doctest::Approx(0.5 * std::tanh(0.5 * c0[i])).epsilon(1e-12));
  }

  CHECK_THROWS_AS(lstm_cell(tape, p, Tensor::from({4}, {1, 2, 3, 4}), zero),
                  std::invalid_argument);
}

TEST_CASE("grad_check closed forms") {
  Tensor x = Tensor::scalar(0.0, true);
  auto tanh_f = [&](Tape& t) { return tanh(t, x); };
  std::vector<Tensor> leaves{x};
  GradCheckReport r = grad_check_report(leaves, tanh_f);
  CHECK(r.max_rel_error < 1e-8);

  // analytic gradient of tanh at 0 is exactly 1
  x.zero_grad();
  Tape t;
  Tensor y = tanh(t, x);
  t.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(1.0).epsilon(1e-12));

  Tensor q = Tensor::scalar(3.0, true);
  auto square = [&](Tape& t2) { return mul(t2, q, q); };
  std::vector<Tensor> leaves2{q};
  CHECK(grad_check(leaves2, square) < 1e-8);
  q.zero_grad();
  Tape t3;
  Tensor y3 = mul(t3, q, q);
  t3.backward(y3);
  CHECK(q.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));

  auto vector_valued = [&](Tape& t4) { return concat(t4, {q, q}); };
  CHECK_THROWS_AS(grad_check(leaves2, vector_valued), std::invalid_argument);
}

// Finite-difference property suite: every differentiable op, random
// instances, loss = random linear functional of the op output.
TEST_CASE("finite differences: elementwise, arithmetic, reductions") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    RandomSource rng(300 + seed);
    const std::size_t n = 2 + rng.uniform_int(6);
    Tensor a = random_vec(rng, n);
    Tensor b = random_vec(rng, n);
    Tensor probe = random_vec(rng, n, false);
    std::vector<Tensor> leaves{a, b};

    auto mk = [&](auto op) {
      return [&, op](Tape& t) { return dot(t, op(t), probe); };
    };
    CHECK(grad_check(leaves, mk([&](Tape& t) { return add(t, a, b); })) < 1e-4);
    CHECK(grad_check(leaves, mk([&](Tape& t) { return sub(t, a, b); })) < 1e-4);
    CHECK(grad_check(leaves, mk([&](Tape& t) { return mul(t, a, b); })) < 1e-4);
    CHECK(grad_check(leaves, mk([&](Tape& t) { return scale(t, a, 1.7); })) < 1e-4);
    CHECK(grad_check(leaves, mk([&](Tape& t) { return tanh(t, a); })) < 1e-4);
    CHECK(grad_check(leaves, mk([&](Tape& t) { return sigmoid(t, a); })) < 1e-4);
    CHECK(grad_check(leaves, mk([&](Tape& t) { return softmax(t, a); })) < 1e-4);
    CHECK(grad_check(leaves, mk([&](Tape& t) { return softmin(t, a); })) < 1e-4);
    CHECK(grad_check(leaves, [&](Tape& t) { return dot(t, a, b); }) < 1e-4);
    CHECK(grad_check(leaves, [&](Tape& t) {
            return cosine_similarity(t, a, b, 1e-8);
          }) < 1e-4);
  }
}

TEST_CASE("finite differences: relu away from the kink") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    RandomSource rng(400 + seed);
    const std::size_t n = 4;
    std::vector<double> v(n);
    for (double& x : v) {
      x = rng.uniform(0.2, 2.0);
      if (rng.bernoulli(0.5)) x = -x;
    }
    Tensor a = Tensor::from({n}, std::move(v), true);
    Tensor probe = random_vec(rng, n, false);
    std::vector<Tensor> leaves{a};
    CHECK(grad_check(leaves, [&](Tape& t) { return dot(t, relu(t, a), probe); }) < 1e-4);
  }
}

TEST_CASE("finite differences: matvec, affine, concat, slice, row, rank-one") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    RandomSource rng(500 + seed);
    const std::size_t rows = 2 + rng.uniform_int(4), cols = 2 + rng.uniform_int(4);
    Tensor w = random_mat(rng, rows, cols);
    Tensor x = random_vec(rng, cols);
    Tensor bias = random_vec(rng, rows);
    Tensor probe = random_vec(rng, rows, false);
    std::vector<Tensor> leaves{w, x, bias};

    CHECK(grad_check(leaves, [&](Tape& t) { return dot(t, matvec(t, w, x), probe); }) < 1e-4);
    CHECK(grad_check(leaves, [&](Tape& t) {
            return dot(t, affine(t, w, x, bias), probe);
          }) < 1e-4);
    CHECK(grad_check(leaves, [&](Tape& t) {
            Tensor cat = concat(t, {x, bias});
            Tensor probe2 = Tensor::zeros({cols + rows});
            for (std::size_t i = 0; i < cols + rows; ++i)
              probe2.value_mut()[i] = 0.1 * static_cast<double>(i + 1);
            return dot(t, cat, probe2);
          }) < 1e-4);
    CHECK(grad_check(leaves, [&](Tape& t) {
            Tensor s = slice(t, x, 1, cols - 1);
            Tensor probe3 = Tensor::zeros({cols - 1});
            for (std::size_t i = 0; i + 1 < cols; ++i) probe3.value_mut()[i] = 1.0;
            return dot(t, s, probe3);
          }) < 1e-4);

    Tensor m = random_mat(rng, rows, cols);
    Tensor ww = random_vec(rng, rows);
    Tensor h = random_vec(rng, cols);
    Tensor colprobe = random_vec(rng, cols, false);
    std::vector<Tensor> leaves2{m, ww, h};
    CHECK(grad_check(leaves2, [&](Tape& t) {
            Tensor m2 = rank_one_update(t, m, ww, h);
            return dot(t, row(t, m2, rows - 1), colprobe);
          }) < 1e-4);
  }
}

TEST_CASE("finite differences: embedding, dropout, cross entropy, mean, lstm cell") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    RandomSource rng(600 + seed);
    Tensor table = random_mat(rng, 5, 4);
    Tensor probe = random_vec(rng, 4, false);
    const std::size_t id = rng.uniform_int(5);
    std::vector<Tensor> leaves{table};
    CHECK(grad_check(leaves, [&](Tape& t) {
            return dot(t, embedding(t, table, id), probe);
          }) < 1e-4);

    Tensor x = random_vec(rng, 6);
    Tensor probe6 = random_vec(rng, 6, false);
    std::vector<Tensor> leavesx{x};
    const std::uint64_t mask_seed = rng.raw();
    CHECK(grad_check(leavesx, [&](Tape& t) {
            RandomSource mask_rng(mask_seed);
            return dot(t, dropout(t, x, 0.4, mask_rng, true), probe6);
          }) < 1e-4);

    Tensor logits = random_vec(rng, 7);
    const std::size_t gold = rng.uniform_int(7);
    std::vector<Tensor> leavesl{logits};
    CHECK(grad_check(leavesl, [&](Tape& t) { return cross_entropy(t, logits, gold); }) < 1e-4);

    const std::size_t hidden = 3, in = 2;
    Tensor w = random_mat(rng, 4 * hidden, in + hidden);
    Tensor b = random_vec(rng, 4 * hidden);
    Tensor xin = random_vec(rng, in);
    Tensor h0 = random_vec(rng, hidden);
    Tensor c0 = random_vec(rng, hidden);
    Tensor probeh = random_vec(rng, hidden, false);
    std::vector<Tensor> lstm_leaves{w, b, xin, h0, c0};
    CHECK(grad_check(lstm_leaves, [&](Tape& t) {
            LstmState s = lstm_cell(t, {w, b}, xin, {h0, c0});
            Tensor lh = dot(t, s.h, probeh);
            Tensor lc = dot(t, s.c, probeh);
            std::vector<Tensor> parts{lh, lc};
            return mean(t, parts);
          }) < 1e-4);
  }
}

TEST_CASE("cross entropy basics") {
  Tape tape(false);
  // uniform predictor over V classes has loss ln V
  const std::size_t v = 9;
  Tensor logits = Tensor::zeros({v});
  CHECK(cross_entropy(tape, logits, 3).item() == doctest::Approx(std::log(9.0)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(tape, logits, 9), DataError);
}

TEST_CASE("dropout is identity when disabled and unbiased in scale") {
  RandomSource rng(7);
  Tape tape(false);
  Tensor x = random_vec(rng, 8, false);
  Tensor y = dropout(tape, x, 0.5, rng, false);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
  Tensor z = dropout(tape, x, 0.5, rng, true);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool dropped = z[i] == 0.0;
    if (!dropped) CHECK(z[i] == doctest::Approx(2.0 * x[i]));
  }
  CHECK_THROWS_AS(dropout(tape, x, 1.0, rng, true), std::invalid_argument);
}

TEST_CASE("tape gradients accumulate across shared subexpressions") {
  // y = x*x + x used twice; dy/dx = 2x + 1
  Tensor x = Tensor::scalar(1.5, true);
  Tape tape;
  Tensor y = add(tape, mul(tape, x, x), x);
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(2.0 * 1.5 + 1.0).epsilon(1e-12));
}
