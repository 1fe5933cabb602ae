#include "cstar/connection.hpp"

#include <doctest.h>

#include <random>

using namespace cstar;

namespace {

std::mt19937_64 rng(5150);

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

Inclusion scalars_in_m2() {
  Mat emb(4, 1);
  emb << 1, 0, 0, 1;
  return check_inclusion(scalars(), full_matrix_algebra(2), emb);
}

Inclusion covering_inclusion() {
  Mat emb = Mat::Zero(3, 2);
  emb(0, 0) = emb(1, 0) = emb(2, 1) = 1;
  return check_inclusion(diagonal_algebra(2), diagonal_algebra(3), emb);
}

Inclusion identity_inclusion() {
  auto b = full_matrix_algebra(2);
  return check_inclusion(b, b, Mat::Identity(4, 4));
}

}  // namespace

TEST_CASE("omega dimensions: identity, covering, scalars in M2") {
  Report rep;
  FormsPtr f1 = relative_forms(identity_inclusion(), &rep);
  CHECK(f1->dim() == 0);  // A = B: multiplication is an isomorphism

  FormsPtr f2 = relative_forms(covering_inclusion(), &rep);
  CHECK(f2->coalgebra->dim() == 5);
  CHECK(f2->dim() == 2);  // dim C - dim B = 5 - 3

  FormsPtr f3 = relative_forms(scalars_in_m2(), &rep);
  CHECK(f3->coalgebra->dim() == 16);
  CHECK(f3->dim() == 12);
  CHECK(rep.all_pass());
}

TEST_CASE("nabla = d on Z = B is a flat Hermitian connection") {
  Report rep;
  FormsPtr forms = relative_forms(covering_inclusion(), &rep);
  HilbertModule z = standard_module(forms->pair->B);
  BalancedTensor zo = balanced_tensor(z.dim, z.action, forms->dim(),
                                      forms->left_b, forms->pair->B,
                                      forms->pair->tol);
  // nabla(b_u) is the class of 1 (x) d(b_u).
  Mat nabla(zo.dim(), z.dim);
  Vec unit = forms->pair->B->unit();
  for (Index u = 0; u < z.dim; ++u) {
    Vec dcol = forms->d.col(u);
    nabla.col(u) = zo.project(as_vector(Mat(unit * dcol.transpose())));
  }
  Connection conn = validate_connection(forms, z, nabla, &rep);
  CHECK(rep.all_pass());
  CHECK(conn.hermitian);
  CHECK(conn.flat);
  CHECK(conn.curvature_norm <= 1e-9);

  // Its descent gives X = A.
  ConnectionDescent desc = descend_via_connection(conn, &rep);
  CHECK(rep.all_pass());
  CHECK(desc.module.dim == forms->pair->A->dim());
  CHECK(desc.witness_residual <= 1e-9);
}

TEST_CASE("free modules carry the diagonal flat connection") {
  Report rep;
  FormsPtr forms = relative_forms(scalars_in_m2(), &rep);
  HilbertModule z = free_module(forms->pair->B, 2);
  Connection conn = grassmann_connection(forms, z, std::nullopt, &rep);
  CHECK(rep.all_pass());
  CHECK(conn.hermitian);
  CHECK(conn.flat);
  ConnectionDescent desc = descend_via_connection(conn, &rep);
  CHECK(rep.all_pass());
  CHECK(desc.module.dim == 2 * forms->pair->A->dim());
}

TEST_CASE("perturbing nabla breaks the Leibniz rule") {
  Report rep;
  FormsPtr forms = relative_forms(covering_inclusion(), &rep);
  HilbertModule z = standard_module(forms->pair->B);
  Connection conn = grassmann_connection(forms, z, std::nullopt, &rep);
  REQUIRE(rep.all_pass());
  Mat bad = conn.nabla;
  bad(0, 0) += 0.25;  // no longer satisfies nabla(z.b) = nabla(z).b + z (x) db
  CHECK_THROWS_WITH_AS((void)validate_connection(forms, z, bad),
                       doctest::Contains("leibniz-failure"), ValidationError);
}

TEST_CASE("comodule <-> connection dictionary is a bit-exact round trip") {
  Report rep;
  FormsPtr forms = relative_forms(covering_inclusion(), &rep);
  for (int trial = 0; trial < 5; ++trial) {
    // random flat instance: comparison of a weighted module over A
    const Index da = forms->pair->A->dim();
    Vec h = random_coeffs(da);
    Vec q = forms->pair->A->unit() +
            forms->pair->A->multiply(forms->pair->A->involute(h), h);
    std::vector<Mat> action(da);
    for (Index k = 0; k < da; ++k) action[k] = forms->pair->A->rmul(k);
    Mat gram(da, da * da);
    for (Index i = 0; i < da; ++i)
      for (Index j = 0; j < da; ++j)
        gram.col(i * da + j) = forms->pair->A->multiply(
            forms->pair->A->multiply(
                forms->pair->A->involute(Vec::Unit(da, i)), q),
            Vec::Unit(da, j));
    HilbertModule x =
        validate_module(forms->pair->A, std::move(action), std::move(gram));
    Comodule zc = comparison(x, forms->coalgebra, &rep);

    Connection conn = comodule_to_connection(zc, forms, &rep);
    CHECK(conn.flat);
    CHECK(conn.hermitian);
    Comodule back = connection_to_comodule(conn, &rep);
    // E then D is the identity on the stored coaction matrix, bit for bit.
    CHECK((back.coaction - zc.coaction).norm() == 0.0);

    // D then E on the connection data.
    Connection conn2 = comodule_to_connection(back, forms, nullptr);
    CHECK((conn2.nabla_zc - conn.nabla_zc).norm() == 0.0);
  }
  CHECK(rep.all_pass());
}

TEST_CASE("kernel descent matches fibre dimensions on the covering") {
  Report rep;
  FormsPtr forms = relative_forms(covering_inclusion(), &rep);
  // X over C(M) with fibre dimensions (1,2): its comparison descends back.
  auto cm = forms->pair->A;
  std::vector<Mat> action(2);
  Mat a0 = Mat::Zero(3, 3), a1 = Mat::Zero(3, 3);
  a0(0, 0) = 1;             // fibre over the first point: dim 1
  a1(1, 1) = a1(2, 2) = 1;  // fibre over the second point: dim 2
  action[0] = a0;
  action[1] = a1;
  Mat gram = Mat::Zero(2, 9);
  gram.col(0 * 3 + 0) = Vec::Unit(2, 0);
  gram.col(1 * 3 + 1) = Vec::Unit(2, 1);
  gram.col(2 * 3 + 2) = Vec::Unit(2, 1);
  HilbertModule x = validate_module(cm, std::move(action), std::move(gram));
  CHECK(x.dim == 3);

  Comodule zc = comparison(x, forms->coalgebra, &rep);
  Connection conn = comodule_to_connection(zc, forms, &rep);
  CHECK(conn.flat);
  CHECK(conn.hermitian);
  ConnectionDescent desc = descend_via_connection(conn, &rep);
  CHECK(rep.all_pass());
  CHECK(desc.module.dim == 3);
  // fibre dimensions recovered: ranks of the two coordinate projections
  CHECK(rank(desc.module.act_of(Vec::Unit(2, 0))) == 1);
  CHECK(rank(desc.module.act_of(Vec::Unit(2, 1))) == 2);
}

TEST_CASE("column module over M2 with A = C: Grassmann connection not flat") {
  Report rep;
  FormsPtr forms = relative_forms(scalars_in_m2(), &rep);
  HilbertModule z = row_module(forms->pair->B);
  CHECK(z.dim == 2);
  Connection conn = grassmann_connection(forms, z, std::nullopt, &rep);
  CHECK(conn.hermitian);
  CHECK_FALSE(conn.flat);
  CHECK(conn.curvature_norm > 0.1);
  CHECK_THROWS_WITH_AS((void)connection_to_comodule(conn),
                       doctest::Contains("not-flat"), ValidationError);
}

TEST_CASE("descent equivalence dimension obstruction for non-free modules") {
  // Over A = C, descended modules are free: Z = C^2 over M2 has dimension 2,
  // but every X (x)_A M2 has dimension a multiple of 4.
  Report rep;
  FormsPtr forms = relative_forms(scalars_in_m2(), &rep);
  HilbertModule z = row_module(forms->pair->B);
  HilbertModule x1 = standard_module(forms->pair->A);
  InteriorTensor it =
      interior_tensor_with(x1, forms->pair->L, forms->pair->left_a_on_L);
  CHECK(it.module.dim == 4);
  CHECK(z.dim % it.module.dim != 0);
}
