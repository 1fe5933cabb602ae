#include "cstar/algebra.hpp"

#include <cmath>

namespace cstar {

AlgebraPtr FiniteCStarAlgebra::validate(std::vector<Mat> basis,
                                        const Tolerance& tol) {
  if (basis.empty())
    throw ValidationError("linearly-dependent-basis", "empty basis");
  const Index n = basis.front().rows();
  const Index d = static_cast<Index>(basis.size());
  for (const Mat& b : basis) {
    if (b.rows() != n || b.cols() != n)
      throw ValidationError("shape-mismatch",
                            "basis matrices must be square with one shape");
    if (!finite_entries(b))
      throw ValidationError("non-finite", "basis entries must be finite");
  }

  auto alg = std::shared_ptr<FiniteCStarAlgebra>(new FiniteCStarAlgebra());
  alg->ambient_dim_ = n;
  alg->basis_ = std::move(basis);
  alg->tol_ = tol;

  Mat flat(n * n, d);
  for (Index k = 0; k < d; ++k) flat.col(k) = as_vector(alg->basis_[k]);
  alg->flat_ = SpanSolver(flat, tol);
  if (alg->flat_.rank() != d)
    throw ValidationError("linearly-dependent-basis",
                          "basis has rank " + std::to_string(alg->flat_.rank()) +
                              " < " + std::to_string(d));

  // Structure constants: solve every product back into the span.
  alg->lmul_.assign(d, Mat::Zero(d, d));
  alg->rmul_.assign(d, Mat::Zero(d, d));
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      auto c = alg->flat_.solve_in_span(as_vector(alg->basis_[i] * alg->basis_[j]));
      if (!c)
        throw ValidationError("not-multiplicatively-closed",
                              "product of basis " + std::to_string(i) + "," +
                                  std::to_string(j) + " leaves the span");
      alg->lmul_[i].col(j) = *c;
      alg->rmul_[j].col(i) = *c;
    }
  }

  // Involution: adjoints of basis elements, in coordinates.
  alg->invol_ = Mat::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    auto c = alg->flat_.solve_in_span(as_vector(alg->basis_[i].adjoint().eval()));
    if (!c)
      throw ValidationError("not-star-closed",
                            "adjoint of basis " + std::to_string(i) +
                                " leaves the span");
    alg->invol_.col(i) = *c;
  }

  // Unit: solve u.b_i = b_i = b_i.u over the span.
  Mat sys(2 * d * d, d);
  Vec rhs(2 * d * d);
  for (Index i = 0; i < d; ++i) {
    for (Index l = 0; l < d; ++l) {
      for (Index k = 0; k < d; ++k) {
        sys(i * d + l, k) = alg->lmul_[k](l, i);            // (u b_i)_l
        sys(d * d + i * d + l, k) = alg->rmul_[k](l, i);    // (b_i u)_l
      }
      rhs(i * d + l) = (i == l) ? 1.0 : 0.0;
      rhs(d * d + i * d + l) = (i == l) ? 1.0 : 0.0;
    }
  }
  SpanSolver unit_solver(sys, tol);
  double unit_residual = 0.0;
  alg->unit_ = unit_solver.solve(rhs, &unit_residual);
  if (unit_residual > tol.threshold(rhs.norm()))
    throw ValidationError("no-unit", "span has no multiplicative unit");

  // Trace functional.
  alg->tau_ = Vec(d);
  for (Index k = 0; k < d; ++k) alg->tau_(k) = alg->basis_[k].trace();

  // Casimir / separability element. The trace form g(i,j) = tau(b_i b_j) is
  // nondegenerate on a *-closed matrix algebra; its Casimir sum_{ij}
  // g^{-1}(i,j) b_i (x) b_j commutes with every b, and dividing by the
  // central invertible element mult(Casimir) normalises mult(e) = 1.
  Mat g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      g(i, j) = alg->tau_.conjugate().dot(alg->lmul_[i].col(j));
  Eigen::FullPivLU<Mat> lu(g);
  if (!lu.isInvertible())
    throw ValidationError("no-unit", "degenerate trace form (not semisimple)");
  Mat ginv = lu.inverse();
  Vec c_center = Vec::Zero(d);
  for (Index i = 0; i < d; ++i)
    c_center += alg->lmul_[i] * ginv.row(i).transpose();
  Vec c_inv = Eigen::FullPivLU<Mat>(alg->lmul_of(c_center))
                  .solve(alg->unit_);
  alg->casimir_ = alg->lmul_of(c_inv) * ginv;

  // Internal consistency: the separability identities must hold on the nose.
  const double sep_scale = std::max(1.0, alg->casimir_.norm());
  for (Index j = 0; j < d; ++j) {
    double r = (alg->lmul_[j] * alg->casimir_ -
                alg->casimir_ * alg->rmul_[j].transpose())
                   .norm();
    if (r > 1e3 * tol.threshold(sep_scale))
      throw ValidationError("no-unit", "separability element construction failed");
  }
  Vec mu = Vec::Zero(d);
  for (Index k = 0; k < d; ++k)
    mu += alg->lmul_[k] * alg->casimir_.row(k).transpose();
  if ((mu - alg->unit_).norm() > 1e3 * tol.threshold(sep_scale))
    throw ValidationError("no-unit", "separability element not unital");

  return alg;
}

Mat FiniteCStarAlgebra::rep(const Vec& x) const {
  Mat m = Mat::Zero(ambient_dim_, ambient_dim_);
  for (Index k = 0; k < dim(); ++k) m += x(k) * basis_[k];
  return m;
}

Vec FiniteCStarAlgebra::multiply(const Vec& x, const Vec& y) const {
  if (x.size() != dim() || y.size() != dim())
    throw ValidationError("shape-mismatch", "coefficient length mismatch");
  return lmul_of(x) * y;
}

Vec FiniteCStarAlgebra::involute(const Vec& x) const {
  if (x.size() != dim())
    throw ValidationError("shape-mismatch", "coefficient length mismatch");
  return invol_ * x.conjugate();
}

Mat FiniteCStarAlgebra::lmul_of(const Vec& x) const {
  Mat m = Mat::Zero(dim(), dim());
  for (Index k = 0; k < dim(); ++k) m += x(k) * lmul_[k];
  return m;
}

Mat FiniteCStarAlgebra::rmul_of(const Vec& x) const {
  Mat m = Mat::Zero(dim(), dim());
  for (Index k = 0; k < dim(); ++k) m += x(k) * rmul_[k];
  return m;
}

std::optional<Vec> FiniteCStarAlgebra::coordinates(const Mat& m) const {
  if (m.rows() != ambient_dim_ || m.cols() != ambient_dim_)
    throw ValidationError("shape-mismatch", "wrong ambient dimension");
  return flat_.solve_in_span(as_vector(m));
}

Inclusion check_inclusion(AlgebraPtr sub, AlgebraPtr amb, const Mat& embedding,
                          const Tolerance& tol) {
  const Index da = sub->dim();
  const Index db = amb->dim();
  if (embedding.rows() != db || embedding.cols() != da)
    throw ValidationError("shape-mismatch", "embedding must be dim(B) x dim(A)");

  if (rank(embedding, tol) != da)
    throw ValidationError("not-injective", "embedding has nontrivial kernel");

  const double scale = std::max(1.0, op_norm(embedding));
  for (Index i = 0; i < da; ++i) {
    for (Index j = 0; j < da; ++j) {
      Vec lhs = embedding * sub->lmul(i).col(j);
      Vec rhs = amb->multiply(embedding.col(i), embedding.col(j));
      if ((lhs - rhs).norm() > tol.threshold(scale * scale))
        throw ValidationError("not-homomorphism",
                              "embedding is not multiplicative");
    }
  }

  if ((embedding * sub->invol_matrix() -
       amb->invol_matrix() * embedding.conjugate())
          .norm() > tol.threshold(scale))
    throw ValidationError("not-star-map", "embedding does not preserve adjoints");

  // Nondegeneracy: span(embedding(A).B) and span(B.embedding(A)) fill B.
  Mat left(db, da * db), right(db, da * db);
  for (Index i = 0; i < da; ++i) {
    Mat l = amb->lmul_of(embedding.col(i));
    Mat r = amb->rmul_of(embedding.col(i));
    left.middleCols(i * db, db) = l;
    right.middleCols(i * db, db) = r;
  }
  if (rank(left, tol) != db || rank(right, tol) != db)
    throw ValidationError("degenerate", "span(A.B) or span(B.A) is not all of B");

  if ((embedding * sub->unit() - amb->unit()).norm() > tol.threshold(scale))
    throw ValidationError("degenerate", "embedding does not map unit to unit");

  return Inclusion{std::move(sub), std::move(amb), embedding};
}

}  // namespace cstar
