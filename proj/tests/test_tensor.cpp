#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bimcq/rng.hpp"
#include "bimcq/tensor.hpp"

using namespace bimcq;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(-2.0, 2.0);
  return t;
}

}  // namespace

TEST_CASE("matmul: identity, annihilator and a hand-multiplied case") {
  const Tensor i3 = Tensor::identity(3);
  Rng rng(1);
  const Tensor b = random_tensor({3, 5}, rng);
  const Tensor ib = matmul(i3, b);
  for (std::size_t i = 0; i < b.numel(); ++i) CHECK(ib.data()[i] == b.data()[i]);

  const Tensor zero = Tensor::zeros({4, 3});
  const Tensor zb = matmul(zero, b);
  for (std::size_t i = 0; i < zb.numel(); ++i) CHECK(zb.data()[i] == 0.0);

  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor c = Tensor::from({2, 2}, {5, 6, 7, 8});
  const Tensor p = matmul(a, c);
  CHECK(p.data()[0] == 19.0);
  CHECK(p.data()[1] == 22.0);
  CHECK(p.data()[2] == 43.0);
  CHECK(p.data()[3] == 50.0);
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({4, 5});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random 4x4 triples") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = random_tensor({4, 4}, rng);
    const Tensor b = random_tensor({4, 4}, rng);
    const Tensor c = random_tensor({4, 4}, rng);
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.numel(); ++i)
      CHECK(left.data()[i] == doctest::Approx(right.data()[i]).epsilon(1e-9));
  }
}

TEST_CASE("softmax: uniform input, shift invariance, closed form") {
  for (const double c : {0.0, -3.5, 41.0}) {
    const Tensor x = Tensor::from({4}, {c, c, c, c});
    const Tensor y = softmax(x);
    for (int i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(0.25).epsilon(1e-12));
  }

  Rng rng(3);
  const Tensor x = random_tensor({6}, rng);
  Tensor shifted = Tensor::zeros({6});
  for (int i = 0; i < 6; ++i) shifted.data()[i] = x.data()[i] + 12.75;
  const Tensor y0 = softmax(x);
  const Tensor y1 = softmax(shifted);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(y0.data()[i] - y1.data()[i]) < 1e-12);

  const Tensor two = softmax(Tensor::from({2}, {std::log(1.0), std::log(3.0)}));
  CHECK(two.data()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(two.data()[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax: outputs in (0,1), rows sum to 1, non-finite input rejected") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_tensor({5, 7}, rng);
    const Tensor y = softmax(x);
    for (int r = 0; r < 5; ++r) {
      double sum = 0;
      for (int c = 0; c < 7; ++c) {
        const double v = y.at(r, c);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
  Tensor bad = Tensor::from({3}, {1.0, std::nan(""), 2.0});
  CHECK_THROWS_AS(softmax(bad), std::runtime_error);
  bad = Tensor::from({2}, {1.0, std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(softmax(bad), std::runtime_error);
}

TEST_CASE("cross_entropy: uniform, saturated, direct formula, bounds") {
  const Tensor uniform = Tensor::from({4}, {0.7, 0.7, 0.7, 0.7});
  CHECK(cross_entropy(uniform, 2).value() == doctest::Approx(1.3862943611198906).epsilon(1e-12));

  const Tensor saturated = Tensor::from({3}, {30.0, 0.0, 0.0});
  CHECK(cross_entropy(saturated, 0).value() < 1e-9);

  const Tensor logits = Tensor::from({3}, {1.0, 2.0, 3.0});
  CHECK(cross_entropy(logits, 0).value() == doctest::Approx(2.4076059644443806).epsilon(1e-12));

  CHECK_THROWS_AS(cross_entropy(logits, 3), std::out_of_range);
  CHECK_THROWS_AS(cross_entropy(logits, -1), std::out_of_range);

  // nonnegative always; equals ln n iff the logits are constant
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor x = random_tensor({5}, rng);
    double mn = x.data()[0], mx = x.data()[0];
    for (int i = 1; i < 5; ++i) {
      mn = std::min(mn, x.data()[i]);
      mx = std::max(mx, x.data()[i]);
    }
    bool some_target_differs = false;
    for (int t = 0; t < 5; ++t) {
      const double loss = cross_entropy(x, t).value();
      CHECK(loss >= 0.0);
      if (std::abs(loss - std::log(5.0)) > 1e-9) some_target_differs = true;
    }
    if (mx - mn > 1e-3) CHECK(some_target_differs);
  }
}

TEST_CASE("cross_entropy gradient is softmax minus one-hot") {
  const Tensor logits = Tensor::from({4}, {0.3, -1.2, 2.0, 0.5}, true);
  const Tensor loss = cross_entropy(logits, 1);
  backward(loss);
  const Tensor probs = softmax(logits);
  for (int i = 0; i < 4; ++i) {
    const double expected = probs.data()[i] - (i == 1 ? 1.0 : 0.0);
    CHECK(logits.grad()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("scaled_dot_attention: single key with identity projection returns the value row") {
  const int d = 8;
  const Tensor q = Tensor::from({1, d}, {0.2, -1, 0.5, 2, 0.1, -0.4, 1.5, 0.9});
  Rng rng(6);
  Tensor k = Tensor::zeros({1, d});
  Tensor v = Tensor::zeros({1, d});
  for (int i = 0; i < d; ++i) {
    k.data()[i] = rng.uniform(-1, 1);
    v.data()[i] = rng.uniform(-1, 1);
  }
  const Tensor out = scaled_dot_attention(q, k, v, Tensor::identity(d), Tensor::zeros({d}), 2);
  for (int i = 0; i < d; ++i) CHECK(out.data()[i] == doctest::Approx(v.data()[i]).epsilon(1e-12));
}

TEST_CASE("scaled_dot_attention: identical keys average the value rows") {
  const int d = 8, s = 5;
  Rng rng(7);
  const Tensor q = random_tensor({1, d}, rng);
  Tensor k = Tensor::zeros({s, d});
  for (int r = 0; r < s; ++r)
    for (int c = 0; c < d; ++c) k.data()[static_cast<std::size_t>(r) * d + c] = 0.3 * c - 0.7;
  const Tensor v = random_tensor({s, d}, rng);
  const Tensor out = scaled_dot_attention(q, k, v, Tensor::identity(d), Tensor::zeros({d}), 4);
  for (int c = 0; c < d; ++c) {
    double mean = 0;
    for (int r = 0; r < s; ++r) mean += v.at(r, c);
    mean /= s;
    CHECK(out.data()[c] == doctest::Approx(mean).epsilon(1e-10));
  }
}

TEST_CASE("scaled_dot_attention matches a straight-line reimplementation") {
  const int d = 8, s = 3, heads = 2, hd = d / heads;
  Rng rng(8);
  const Tensor q = random_tensor({1, d}, rng);
  const Tensor k = random_tensor({s, d}, rng);
  const Tensor v = random_tensor({s, d}, rng);
  const Tensor w = random_tensor({d, d}, rng);
  const Tensor b = random_tensor({d}, rng);

  // oracle: plain loops, no graph machinery
  std::vector<double> merged(d, 0.0);
  for (int h = 0; h < heads; ++h) {
    std::vector<double> scores(s);
    double mx = -1e300;
    for (int r = 0; r < s; ++r) {
      double dot = 0;
      for (int c = 0; c < hd; ++c) dot += q.at(0, h * hd + c) * k.at(r, h * hd + c);
      scores[static_cast<std::size_t>(r)] = dot / std::sqrt(static_cast<double>(hd));
      mx = std::max(mx, scores[static_cast<std::size_t>(r)]);
    }
    double z = 0;
    for (double& sc : scores) {
      sc = std::exp(sc - mx);
      z += sc;
    }
    for (double& sc : scores) sc /= z;
    for (int c = 0; c < hd; ++c) {
      double acc = 0;
      for (int r = 0; r < s; ++r) acc += scores[static_cast<std::size_t>(r)] * v.at(r, h * hd + c);
      merged[static_cast<std::size_t>(h * hd + c)] = acc;
    }
  }
  std::vector<double> expected(d, 0.0);
  for (int j = 0; j < d; ++j) {
    double acc = b.data()[j];
    for (int i = 0; i < d; ++i) acc += merged[static_cast<std::size_t>(i)] * w.at(i, j);
    expected[static_cast<std::size_t>(j)] = acc;
  }

  const Tensor out = scaled_dot_attention(q, k, v, w, b, heads);
  for (int j = 0; j < d; ++j)
    CHECK(out.data()[j] == doctest::Approx(expected[static_cast<std::size_t>(j)]).epsilon(1e-10));
}

TEST_CASE("scaled_dot_attention rejects widths not divisible by heads") {
  const Tensor q = Tensor::zeros({1, 6});
  const Tensor kv = Tensor::zeros({2, 6});
  CHECK_THROWS_AS(scaled_dot_attention(q, kv, kv, Tensor::identity(6), Tensor::zeros({6}), 4),
                  std::invalid_argument);
}

TEST_CASE("backward: linear case gives all-ones, disconnected tensors stay zero") {
  Rng rng(9);
  for (const auto& shape : std::vector<std::vector<int>>{{7}, {3, 4}, {1, 1}}) {
    Tensor p = random_tensor(shape, rng, true);
    backward(sum(p));
    REQUIRE(p.has_grad());
    for (std::size_t i = 0; i < p.numel(); ++i) CHECK(p.grad()[i] == 1.0);
  }

  Tensor p = random_tensor({5}, rng, true);
  Tensor q = random_tensor({5}, rng, true);
  backward(sum(q));
  CHECK_FALSE(p.has_grad());  // never touched

  // repeated backward without zeroing accumulates
  Tensor r = random_tensor({3}, rng, true);
  const Tensor loss = sum(r);
  backward(loss);
  backward(loss);
  for (std::size_t i = 0; i < r.numel(); ++i) CHECK(r.grad()[i] == 2.0);
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor p = Tensor::zeros({3}, true);
  CHECK_THROWS_AS(backward(scale(p, 2.0)), std::invalid_argument);
}

TEST_CASE("constants never accumulate gradient") {
  Rng rng(10);
  const Tensor constant = random_tensor({4, 4}, rng, false);
  Tensor param = random_tensor({4, 4}, rng, true);
  backward(sum(matmul(constant, param)));
  CHECK_FALSE(constant.has_grad());
  CHECK(param.has_grad());
}

TEST_CASE("NoGradGuard suppresses graph recording") {
  Tensor p = Tensor::zeros({3}, true);
  {
    NoGradGuard guard;
    const Tensor y = scale(p, 2.0);
    CHECK_FALSE(y.requires_grad());
  }
  const Tensor y = scale(p, 2.0);
  CHECK(y.requires_grad());
}

TEST_CASE("l2_normalize_rows produces unit rows and rejects zero rows") {
  Rng rng(11);
  const Tensor x = random_tensor({4, 6}, rng);
  const Tensor y = l2_normalize_rows(x);
  for (int r = 0; r < 4; ++r) {
    double sq = 0;
    for (int c = 0; c < 6; ++c) sq += y.at(r, c) * y.at(r, c);
    CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(l2_normalize_rows(Tensor::zeros({2, 3})), std::runtime_error);
}

TEST_CASE("structural ops move data where expected") {
  const Tensor a = Tensor::from({1, 3}, {1, 2, 3});
  const Tensor b = Tensor::from({2, 3}, {4, 5, 6, 7, 8, 9});
  const Tensor rows = concat_rows({a, b});
  CHECK(rows.shape() == std::vector<int>{3, 3});
  CHECK(rows.at(2, 2) == 9.0);

  const Tensor cols = concat_cols({b, b});
  CHECK(cols.shape() == std::vector<int>{2, 6});
  CHECK(cols.at(1, 3) == 7.0);

  const Tensor sc = slice_cols(b, 1, 2);
  CHECK(sc.shape() == std::vector<int>{2, 2});
  CHECK(sc.at(0, 0) == 5.0);

  const Tensor sr = slice_rows(b, 1, 1);
  CHECK(sr.shape() == std::vector<int>{1, 3});
  CHECK(sr.at(0, 1) == 8.0);

  const Tensor g = gather_rows(b, {1, 0, 1});
  CHECK(g.shape() == std::vector<int>{3, 3});
  CHECK(g.at(0, 0) == 7.0);
  CHECK(g.at(1, 0) == 4.0);
  CHECK_THROWS_AS(gather_rows(b, {2}), std::out_of_range);

  const Tensor stacked = stack_scalars({Tensor::scalar(1.5), Tensor::scalar(-2.5)});
  CHECK(stacked.shape() == std::vector<int>{2});
  CHECK(stacked.data()[1] == -2.5);

  const Tensor m = mean_rows(b);
  CHECK(m.shape() == std::vector<int>{1, 3});
  CHECK(m.at(0, 0) == doctest::Approx(5.5));
}
