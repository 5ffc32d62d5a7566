#include <vector>

#include "doctest.h"
#include "memce/encoder.hpp"
#include "memce/grad_check.hpp"

using namespace memce;

namespace {

struct Fixture {
  ParameterSet params;
  RandomSource rng;
  Tensor embed;
  BiLstmParams enc;

  Fixture(std::uint64_t seed, std::size_t vocab, std::size_t embed_dim, std::size_t hidden)
      : rng(seed) {
    embed = params.create("embed", {vocab, embed_dim}, rng);
    enc = make_bilstm(params, "enc", embed_dim, hidden, rng);
  }
};

}  // namespace

TEST_CASE("utterance encoding shapes") {
  Fixture fx(1, 12, 4, 8);
  Tape tape(false);
  std::vector<std::size_t> tokens{3, 1, 4, 1, 5};
  std::vector<Tensor> states = encode_utterance(tape, fx.embed, fx.enc, tokens);
  REQUIRE(states.size() == 5);
  for (const Tensor& s : states) CHECK(s.size() == 16);

  CHECK_THROWS_AS(encode_utterance(tape, fx.embed, fx.enc, std::vector<std::size_t>{}),
                  std::invalid_argument);
}

TEST_CASE("palindrome with tied directions yields mirror states") {
  Fixture fx(2, 10, 4, 6);
  // tie backward weights to forward weights
  std::copy(fx.enc.fwd.w.value().begin(), fx.enc.fwd.w.value().end(),
            fx.enc.bwd.w.value_mut().begin());
  std::copy(fx.enc.fwd.b.value().begin(), fx.enc.fwd.b.value().end(),
            fx.enc.bwd.b.value_mut().begin());

  Tape tape(false);
  std::vector<std::size_t> palindrome{2, 7, 5, 7, 2};
  std::vector<Tensor> states = encode_utterance(tape, fx.embed, fx.enc, palindrome);
  const std::size_t n = palindrome.size(), h = 6;
  for (std::size_t j = 0; j < n; ++j) {
    const Tensor& a = states[j];
    const Tensor& b = states[n - 1 - j];
    // forward half of position j equals backward half of the mirror position
    for (std::size_t k = 0; k < h; ++k) {
      CHECK(a[k] == doctest::Approx(b[h + k]).epsilon(1e-12));
      CHECK(a[h + k] == doctest::Approx(b[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("pooled utterance scalar gradient matches finite differences") {
  Fixture fx(3, 8, 3, 4);
  std::vector<std::size_t> tokens{1, 6, 2, 6};
  RandomSource prng(99);
  std::vector<double> pv(8);
  for (double& v : pv) v = prng.uniform(-1, 1);
  Tensor probe = Tensor::from({8}, std::move(pv));

  std::vector<Tensor> leaves = fx.params.tensors();
  auto f = [&](Tape& t) {
    std::vector<Tensor> states = encode_utterance(t, fx.embed, fx.enc, tokens);
    Tensor pooled = Tensor::scalar(0.0);
    for (const Tensor& s : states) pooled = add(t, pooled, dot(t, s, probe));
    return pooled;
  };
  CHECK(grad_check(leaves, f) < 1e-4);
}

TEST_CASE("phrase encoding shapes and per-segment independence") {
  Fixture fx(4, 15, 4, 8);
  Tape tape(false);
  std::vector<std::size_t> tokens{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<SegSpan> segs{{0, 2}, {2, 1}, {3, 3}, {6, 2}, {8, 2}, {10, 2}};
  std::vector<Tensor> phrases = encode_phrases(tape, fx.embed, fx.enc, tokens, segs);
  REQUIRE(phrases.size() == 6);
  for (const Tensor& p : phrases) CHECK(p.size() == 16);

  // permuting two segments permutes the two outputs and changes nothing else
  std::vector<SegSpan> swapped = segs;
  std::swap(swapped[1], swapped[3]);
  std::vector<Tensor> permuted = encode_phrases(tape, fx.embed, fx.enc, tokens, swapped);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(permuted[1][i] == phrases[3][i]);
    CHECK(permuted[3][i] == phrases[1][i]);
    CHECK(permuted[0][i] == phrases[0][i]);
    CHECK(permuted[2][i] == phrases[2][i]);
    CHECK(permuted[4][i] == phrases[4][i]);
    CHECK(permuted[5][i] == phrases[5][i]);
  }
}

TEST_CASE("one-token segment equals the bilstm over that single token") {
  Fixture fx(5, 9, 3, 5);
  Tape tape(false);
  std::vector<std::size_t> tokens{4, 7, 2};
  std::vector<SegSpan> segs{{1, 1}};
  std::vector<Tensor> phrase = encode_phrases(tape, fx.embed, fx.enc, tokens, segs);

  std::vector<std::size_t> single{7};
  std::vector<Tensor> states = encode_utterance(tape, fx.embed, fx.enc, single);
  REQUIRE(phrase.size() == 1);
  REQUIRE(states.size() == 1);
  for (std::size_t i = 0; i < 10; ++i)
    CHECK(phrase[0][i] == doctest::Approx(states[0][i]).epsilon(1e-12));
}

TEST_CASE("phrase encoder rejects empty and out-of-range segments") {
  Fixture fx(6, 9, 3, 5);
  Tape tape(false);
  std::vector<std::size_t> tokens{4, 7, 2};
  CHECK_THROWS_AS(
      encode_phrases(tape, fx.embed, fx.enc, tokens, std::vector<SegSpan>{{1, 0}}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      encode_phrases(tape, fx.embed, fx.enc, tokens, std::vector<SegSpan>{{2, 2}}),
      std::invalid_argument);
}

TEST_CASE("phrase gradients flow into the shared embedding table") {
  Fixture fx(7, 8, 3, 4);
  std::vector<std::size_t> tokens{1, 6, 2, 6};
  std::vector<SegSpan> segs{{0, 2}, {2, 2}};
  RandomSource prng(98);
  std::vector<double> pv(8);
  for (double& v : pv) v = prng.uniform(-1, 1);
  Tensor probe = Tensor::from({8}, std::move(pv));

  std::vector<Tensor> leaves = fx.params.tensors();
  auto f = [&](Tape& t) {
    std::vector<Tensor> phrases = encode_phrases(t, fx.embed, fx.enc, tokens, segs);
    Tensor pooled = Tensor::scalar(0.0);
    for (const Tensor& p : phrases) pooled = add(t, pooled, dot(t, p, probe));
    return pooled;
  };
  CHECK(grad_check(leaves, f) < 1e-4);
}
