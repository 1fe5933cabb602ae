#include "cstar/module.hpp"
#include "cstar/tensor.hpp"

#include <doctest.h>

#include <random>

using namespace cstar;

namespace {

std::mt19937_64 rng(31337);

Vec random_coeffs(Index d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(d);
  for (Index i = 0; i < d; ++i) v(i) = Cplx(u(rng), u(rng));
  return v;
}

Mat unit_matrix(Index n, Index i, Index j) {
  Mat e = Mat::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

AlgebraPtr full_matrix_algebra(Index n) {
  std::vector<Mat> basis;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) basis.push_back(unit_matrix(n, i, j));
  return FiniteCStarAlgebra::validate(std::move(basis));
}

AlgebraPtr scalars() {
  return FiniteCStarAlgebra::validate({Mat::Identity(1, 1)});
}

AlgebraPtr diagonal_algebra(Index n) {
  std::vector<Mat> basis;
  for (Index i = 0; i < n; ++i) basis.push_back(unit_matrix(n, i, i));
  return FiniteCStarAlgebra::validate(std::move(basis));
}

// Brute-force dimension of the space of B-linear adjointable endomorphisms:
// solve the linear system for pairs (conj T, S) with T and S B-linear and
// <T e_i|e_j> = <e_i|S e_j> on all basis pairs.
Index adjointable_dimension(const HilbertModule& f) {
  const Index m = f.dim;
  const Index d = f.algebra->dim();
  const Index mm = m * m;
  std::vector<Mat> rows;
  Mat im = Mat::Identity(m, m);
  for (Index k = 0; k < d; ++k) {
    Mat ak = f.action[k];
    Mat block = Mat::Zero(mm, 2 * mm);
    block.leftCols(mm) =
        kron(im, ak.conjugate().transpose()) - kron(ak.conjugate(), im);
    rows.push_back(block);
    block.setZero();
    block.rightCols(mm) = kron(im, ak.transpose()) - kron(ak, im);
    rows.push_back(block);
  }
  Mat pairing = Mat::Zero(m * m * d, 2 * mm);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      for (Index t = 0; t < d; ++t) {
        Index r = (i * m + j) * d + t;
        for (Index u = 0; u < m; ++u)
          pairing(r, u * m + i) += f.gram_entry(u, j)(t);
        for (Index v = 0; v < m; ++v)
          pairing(r, mm + v * m + j) -= f.gram_entry(i, v)(t);
      }
  rows.push_back(pairing);
  Index total = 0;
  for (const Mat& b : rows) total += b.rows();
  Mat sys(total, 2 * mm);
  Index at = 0;
  for (const Mat& b : rows) {
    sys.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return kernel(sys).dim();
}

}  // namespace

TEST_CASE("standard module: B over itself validates") {
  for (AlgebraPtr b : {full_matrix_algebra(2), diagonal_algebra(3)}) {
    HilbertModule f = standard_module(b);
    CHECK(f.dim == b->dim());
    Vec x = random_coeffs(f.dim), y = random_coeffs(f.dim);
    Vec ip = f.inner(x, y);
    CHECK((b->rep(ip) - b->rep(x).adjoint() * b->rep(y)).norm() < 1e-10);
  }
}

TEST_CASE("column module over the scalars") {
  HilbertModule f = free_module(scalars(), 2);
  CHECK(f.dim == 2);
  CHECK(f.algebra->dim() == 1);
}

TEST_CASE("negative gram block is rejected") {
  auto c = scalars();
  std::vector<Mat> action{Mat::Identity(2, 2)};
  Mat gram(1, 4);
  gram << 1.0, 0.0, 0.0, -1.0;  // diag(1,-1): not PSD
  CHECK_THROWS_WITH_AS((void)validate_module(c, action, gram),
                       doctest::Contains("not-positive"), ValidationError);
  Mat gram0(1, 4);
  gram0 << 1.0, 0.0, 0.0, 0.0;  // PSD but degenerate
  CHECK_THROWS_WITH_AS((void)validate_module(c, action, gram0),
                       doctest::Contains("degenerate-inner-product"),
                       ValidationError);
}

TEST_CASE("module inner product axioms on random pairs") {
  auto b = full_matrix_algebra(2);
  HilbertModule f = direct_sum(standard_module(b), standard_module(b));
  for (int trial = 0; trial < 50; ++trial) {
    Vec x = random_coeffs(f.dim), y = random_coeffs(f.dim);
    Vec bb = random_coeffs(b->dim());
    CHECK((b->involute(f.inner(x, y)) - f.inner(y, x)).norm() < 1e-10);
    CHECK((f.inner(x, (f.act_of(bb) * y).eval()) -
           b->multiply(f.inner(x, y), bb))
              .norm() < 1e-10);
  }
}

TEST_CASE("compacts of C^n over C is the full matrix algebra") {
  HilbertModule f = free_module(scalars(), 3);
  AlgebraPtr k = compacts(f);
  CHECK(k->dim() == 9);
  CHECK(adjointable_dimension(f) == 9);
}

TEST_CASE("compacts of B over B is B acting by left multiplication") {
  auto b = full_matrix_algebra(2);
  HilbertModule f = standard_module(b);
  AlgebraPtr k = compacts(f);
  CHECK(k->dim() == 4);
  CHECK(adjointable_dimension(f) == 4);
  for (int trial = 0; trial < 5; ++trial) {
    Vec x = random_coeffs(4), y = random_coeffs(4);
    Mat theta = rank_one_matrix(f, x, y);
    Mat expected = b->lmul_of(b->multiply(x, b->involute(y)));
    CHECK((theta - expected).norm() < 1e-10);
  }
}

TEST_CASE("rank-one composition law") {
  for (AlgebraPtr b : {full_matrix_algebra(2), diagonal_algebra(3)}) {
    HilbertModule f = direct_sum(standard_module(b), standard_module(b));
    for (int trial = 0; trial < 20; ++trial) {
      Vec x = random_coeffs(f.dim), y = random_coeffs(f.dim),
          h = random_coeffs(f.dim), k = random_coeffs(f.dim);
      Mat lhs = rank_one_matrix(f, x, y) * rank_one_matrix(f, h, k);
      Mat rhs = rank_one_matrix(f, (f.act_of(f.inner(y, h)) * x).eval(), k);
      CHECK((lhs - rhs).norm() < 1e-9);
    }
  }
}

TEST_CASE("correspondence: M2 on itself is faithful with bijective eta") {
  auto b = full_matrix_algebra(2);
  HilbertModule f = standard_module(b);
  std::vector<Mat> la(4);
  for (Index k = 0; k < 4; ++k) la[k] = b->lmul(k);
  Correspondence corr = make_correspondence(b, f, la);
  CHECK(corr.faithful);
  CHECK(corr.eta.rows() == 4);
  CHECK(rank(corr.eta) == 4);
}

TEST_CASE("correspondence: C^2 acting on C through the first coordinate") {
  auto a = diagonal_algebra(2);
  HilbertModule f = standard_module(scalars());
  std::vector<Mat> la{Mat::Identity(1, 1), Mat::Zero(1, 1)};
  Correspondence corr = make_correspondence(a, f, la);
  CHECK_FALSE(corr.faithful);
}

TEST_CASE("correspondence from the covering inclusion is faithful") {
  auto cm = diagonal_algebra(2);
  auto cn = diagonal_algebra(3);
  Mat emb = Mat::Zero(3, 2);
  emb(0, 0) = emb(1, 0) = emb(2, 1) = 1;
  Correspondence corr =
      correspondence_from_inclusion(check_inclusion(cm, cn, emb));
  CHECK(corr.faithful);
  CHECK(corr.compacts_algebra->dim() == adjointable_dimension(corr.module));
}

TEST_CASE("correspondence failure codes") {
  auto b = full_matrix_algebra(2);
  HilbertModule f = standard_module(b);
  std::vector<Mat> bad(4);
  for (Index k = 0; k < 4; ++k) bad[k] = b->rmul(k);
  CHECK_THROWS_WITH_AS((void)make_correspondence(b, f, bad),
                       doctest::Contains("actions-do-not-commute"),
                       ValidationError);
  std::vector<Mat> scaled(4);
  for (Index k = 0; k < 4; ++k) scaled[k] = 2.0 * b->lmul(k);
  CHECK_THROWS_WITH_AS((void)make_correspondence(b, f, scaled),
                       doctest::Contains("not-homomorphism"), ValidationError);
}

TEST_CASE("adjoint module: K-valued inner product is the rank-one operator") {
  auto b = full_matrix_algebra(2);
  HilbertModule f = standard_module(b);
  std::vector<Mat> la(4);
  for (Index k = 0; k < 4; ++k) la[k] = b->lmul(k);
  Correspondence corr = make_correspondence(b, f, la);
  AdjointModule adj = adjoint_module(corr);
  AlgebraPtr k = corr.compacts_algebra;
  CHECK(adj.module.algebra == k);
  for (int trial = 0; trial < 10; ++trial) {
    Vec x = random_coeffs(4);
    Vec fstar = adj.star_from_module * x.conjugate();
    Vec ip = adj.module.inner(fstar, fstar);
    Mat direct = rank_one_matrix(f, x, x);
    CHECK((k->rep(ip) - direct).norm() < 1e-9);
    CHECK(is_psd(k->rep(ip)));
  }
  // Unwinding the conjugations of the adjoint actions recovers the module.
  for (Index t = 0; t < 4; ++t) {
    Mat twice = adj.left_b_action[t].conjugate();
    Mat expected = f.act_of(b->involute(Vec::Unit(4, t)));
    CHECK((twice - expected).norm() < 1e-12);
  }
}
