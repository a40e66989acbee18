#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "trustgnn/error.hpp"
#include "trustgnn/sparse.hpp"
#include "trustgnn/tensor.hpp"

using namespace trustgnn;
using nd::Tensor;
using testing::random_tensor;

namespace {

std::complex<double> entry(const Tensor& t, std::size_t r, std::size_t k) {
  const std::size_t half = t.cols() / 2;
  return {t(r, k), t(r, k + half)};
}

Tensor unit_random(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  return nd::complex_unit_normalize(random_tensor(rows, cols, rng));
}

}  // namespace

TEST_CASE("matmul identity and triple-loop oracle") {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(3, 4, rng);
  CHECK(nd::matmul(Tensor::identity(3), x) == x);

  const Tensor a = random_tensor(5, 4, rng);
  const Tensor b = random_tensor(4, 3, rng);
  Tensor oracle(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) oracle(i, j) += a(i, k) * b(k, j);
  CHECK(nd::max_abs_diff(nd::matmul(a, b), oracle) <= 1e-12);
  CHECK(nd::max_abs_diff(nd::matmul_tn(nd::transpose(a), b), oracle) <= 1e-12);
  CHECK(nd::max_abs_diff(nd::matmul_nt(a, nd::transpose(b)), oracle) <= 1e-12);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    (void)nd::matmul(Tensor(2, 3), Tensor(2, 3));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("tensor data length must match shape") {
  CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("complex_hadamard closed forms") {
  // x = 1 + 0i is the identity
  std::mt19937_64 rng(2);
  const Tensor y = random_tensor(2, 6, rng);
  Tensor one(2, 6);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t k = 0; k < 3; ++k) one(r, k) = 1.0;
  CHECK(nd::complex_hadamard(one, y) == y);

  // i * i = -1
  const Tensor i_unit = Tensor::from_rows({{0.0, 1.0}});
  const Tensor sq = nd::complex_hadamard(i_unit, i_unit);
  CHECK(sq(0, 0) == -1.0);
  CHECK(sq(0, 1) == 0.0);

  CHECK_THROWS_AS(nd::complex_hadamard(Tensor(1, 3), Tensor(1, 3)), ShapeError);
}

TEST_CASE("complex_hadamard matches std::complex arithmetic") {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor(4, 10, rng);
  const Tensor y = random_tensor(4, 10, rng);
  const Tensor out = nd::complex_hadamard(x, y);
  double worst = 0.0;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < 5; ++k) worst = std::max(worst, std::abs(entry(out, r, k) - entry(x, r, k) * entry(y, r, k)));
  CHECK(worst <= 1e-12);

  // one row broadcast over all rows
  const Tensor row = random_tensor(1, 10, rng);
  const Tensor b = nd::complex_hadamard(x, row);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(entry(b, r, k) - entry(x, r, k) * entry(row, 0, k)) <= 1e-12);
}

TEST_CASE("complex_conjugate negates imaginary halves and is an involution") {
  const Tensor x = Tensor::from_rows({{1.0, 2.0, 3.0, 4.0}});
  CHECK(nd::complex_conjugate(x) == Tensor::from_rows({{1.0, 2.0, -3.0, -4.0}}));
  std::mt19937_64 rng(4);
  const Tensor y = random_tensor(3, 8, rng);
  CHECK(nd::complex_conjugate(nd::complex_conjugate(y)) == y);
}

TEST_CASE("complex_unit_normalize") {
  const Tensor out = nd::complex_unit_normalize(Tensor::from_rows({{3.0, 4.0}}));
  CHECK(out(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(out(0, 1) == doctest::Approx(0.8).epsilon(1e-15));

  const Tensor zero = nd::complex_unit_normalize(Tensor::from_rows({{0.0, 0.0}}), 1e-12);
  CHECK(zero == Tensor::from_rows({{0.0, 0.0}}));

  std::mt19937_64 rng(5);
  const Tensor r = unit_random(6, 16, rng);
  const Tensor mod = nd::complex_modulus(r);
  for (double m : mod.data()) CHECK(std::abs(m - 1.0) <= 1e-9);
}

TEST_CASE("rotation properties") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor h = random_tensor(3, 12, rng, 3.0);
    const Tensor r1 = unit_random(1, 12, rng);
    const Tensor r2 = unit_random(1, 12, rng);

    SUBCASE("modulus preservation") {
      CHECK(nd::max_abs_diff(nd::complex_modulus(nd::complex_hadamard(h, r1)), nd::complex_modulus(h)) <= 1e-10);
    }
    SUBCASE("composition associativity") {
      const Tensor stepwise = nd::complex_hadamard(nd::complex_hadamard(h, r1), r2);
      const Tensor once = nd::complex_hadamard(h, nd::complex_hadamard(r1, r2));
      CHECK(nd::max_abs_diff(stepwise, once) <= 1e-10);
    }
    SUBCASE("inversion") {
      const Tensor back = nd::complex_hadamard(nd::complex_hadamard(h, r1), nd::complex_conjugate(r1));
      CHECK(nd::max_abs_diff(back, h) <= 1e-10);
    }
    SUBCASE("commutativity is exact") {
      const Tensor a = random_tensor(2, 12, rng);
      const Tensor b = random_tensor(2, 12, rng);
      CHECK(nd::complex_hadamard(a, b) == nd::complex_hadamard(b, a));
    }
  }
}

TEST_CASE("softmax") {
  const Tensor even = nd::softmax_rows(Tensor::from_rows({{2.5, 2.5}}));
  CHECK(even(0, 0) == doctest::Approx(0.5));
  CHECK(even(0, 1) == doctest::Approx(0.5));

  const Tensor closed = nd::softmax_rows(Tensor::from_rows({{0.0, std::log(3.0)}}));
  CHECK(std::abs(closed(0, 0) - 0.25) <= 1e-12);
  CHECK(std::abs(closed(0, 1) - 0.75) <= 1e-12);

  // Extended-precision oracle for large logits.
  const Tensor big = nd::softmax_rows(Tensor::from_rows({{1000.0, 1000.1}}));
  CHECK(big.all_finite());
  const long double e = std::exp(0.1L);
  CHECK(std::abs(big(0, 1) - static_cast<double>(e / (1.0L + e))) <= 1e-12);

  std::mt19937_64 rng(7);
  const Tensor x = random_tensor(5, 7, rng, 20.0);
  const Tensor s = nd::softmax_rows(x);
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (double v : s.row(r)) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }

  // permutation equivariance
  Tensor rev(1, 7);
  for (std::size_t k = 0; k < 7; ++k) rev(0, k) = x(0, 6 - k);
  const Tensor srev = nd::softmax_rows(rev);
  for (std::size_t k = 0; k < 7; ++k) CHECK(std::abs(srev(0, k) - s(0, 6 - k)) <= 1e-15);
}

TEST_CASE("csr multiply matches dense product") {
  std::mt19937_64 rng(8);
  const auto g = testing::random_graph(15, 40, 1, rng);
  const auto& a = g.out_adjacency(0);
  Tensor dense(15, 15);
  for (const auto& e : g.edges()) dense(e.src, e.dst) += 1.0;
  const Tensor x = random_tensor(15, 4, rng);
  CHECK(nd::max_abs_diff(a.multiply(x), nd::matmul(dense, x)) <= 1e-12);
  CHECK(nd::max_abs_diff(a.transposed().multiply(x), nd::matmul(nd::transpose(dense), x)) <= 1e-12);
  CHECK(a.transposed().nnz() == a.nnz());
}
