#include "cstar/module.hpp"

#include <cmath>

namespace cstar {

Mat HilbertModule::act_of(const Vec& b) const {
  Mat m = Mat::Zero(dim, dim);
  for (Index k = 0; k < algebra->dim(); ++k) m += b(k) * action[k];
  return m;
}

Vec HilbertModule::inner(const Vec& x, const Vec& y) const {
  Vec out = Vec::Zero(algebra->dim());
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j)
      out += std::conj(x(i)) * y(j) * gram.col(i * dim + j);
  return out;
}

Mat HilbertModule::scalar_gram() const {
  Mat s(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j)
      s(i, j) = algebra->trace(gram_entry(i, j));
  return s;
}

double HilbertModule::norm(const Vec& x) const {
  return std::sqrt(op_norm(algebra->rep(inner(x, x))));
}

HilbertModule validate_module(AlgebraPtr algebra, std::vector<Mat> action,
                              Mat gram, const Tolerance& tol) {
  const Index d = algebra->dim();
  if (static_cast<Index>(action.size()) != d)
    throw ValidationError("shape-mismatch", "one action matrix per basis element");
  const Index m = action.empty() ? 0 : action.front().rows();
  for (const Mat& a : action)
    if (a.rows() != m || a.cols() != m)
      throw ValidationError("shape-mismatch", "action matrices must be m x m");
  if (gram.rows() != d || gram.cols() != m * m)
    throw ValidationError("shape-mismatch", "gram must be dim(B) x m^2");

  HilbertModule f{std::move(algebra), m, std::move(action), std::move(gram)};
  const auto& B = *f.algebra;
  double scale = 1.0;
  for (const Mat& a : f.action) scale = std::max(scale, op_norm(a));

  // Nondegeneracy and the right-action homomorphism law.
  if ((f.act_of(B.unit()) - Mat::Identity(m, m)).norm() >
      tol.threshold(scale))
    throw ValidationError("action-not-homomorphic", "unit does not act as identity");
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      Mat lhs = Mat::Zero(m, m);
      for (Index k = 0; k < d; ++k)
        lhs += B.structure_constant(i, j, k) * f.action[k];
      if ((lhs - f.action[j] * f.action[i]).norm() >
          tol.threshold(scale * scale))
        throw ValidationError("action-not-homomorphic",
                              "act(b_i b_j) != act(b_i) then act(b_j)");
    }

  // <e_i|e_j.b_k> = <e_i|e_j>.b_k and <e_i|e_j>* = <e_j|e_i>.
  const double gscale = std::max(1.0, f.gram.norm());
  for (Index k = 0; k < d; ++k) {
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) {
        Vec lhs = Vec::Zero(d);
        for (Index l = 0; l < m; ++l)
          lhs += f.action[k](l, j) * f.gram_entry(i, l);
        Vec rhs = B.rmul(k) * f.gram_entry(i, j);
        if ((lhs - rhs).norm() > tol.threshold(gscale * scale))
          throw ValidationError("inner-product-not-sesquilinear",
                                "<x|y.b> != <x|y>.b");
      }
  }
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      if ((B.involute(f.gram_entry(i, j)) - f.gram_entry(j, i)).norm() >
          tol.threshold(gscale))
        throw ValidationError("inner-product-not-sesquilinear",
                              "<x|y>* != <y|x>");

  // Positivity of the Gram block matrix in M_m(B).
  const Index n = B.ambient_dim();
  Mat block(m * n, m * n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      block.block(i * n, j * n, n, n) = B.rep(f.gram_entry(i, j));
  if (!is_psd(block, tol))
    throw ValidationError("not-positive", "Gram block matrix is not PSD");

  if (rank(f.scalar_gram(), tol) != m)
    throw ValidationError("degenerate-inner-product",
                          "<x|x> = 0 for a nonzero x");

  return f;
}

HilbertModule standard_module(AlgebraPtr algebra) {
  const Index d = algebra->dim();
  std::vector<Mat> action(d);
  for (Index k = 0; k < d; ++k) action[k] = algebra->rmul(k);
  Mat gram(d, d * d);
  for (Index i = 0; i < d; ++i) {
    Vec istar = algebra->involute(Vec::Unit(d, i));
    Mat l = algebra->lmul_of(istar);
    for (Index j = 0; j < d; ++j) gram.col(i * d + j) = l.col(j);
  }
  return validate_module(std::move(algebra), std::move(action), std::move(gram));
}

HilbertModule direct_sum(const HilbertModule& x, const HilbertModule& y) {
  if (x.algebra != y.algebra)
    throw ValidationError("shape-mismatch", "direct sum needs one base algebra");
  const Index d = x.algebra->dim();
  const Index m = x.dim + y.dim;
  std::vector<Mat> action(d, Mat::Zero(m, m));
  for (Index k = 0; k < d; ++k) {
    action[k].topLeftCorner(x.dim, x.dim) = x.action[k];
    action[k].bottomRightCorner(y.dim, y.dim) = y.action[k];
  }
  Mat gram = Mat::Zero(d, m * m);
  for (Index i = 0; i < x.dim; ++i)
    for (Index j = 0; j < x.dim; ++j)
      gram.col(i * m + j) = x.gram_entry(i, j);
  for (Index i = 0; i < y.dim; ++i)
    for (Index j = 0; j < y.dim; ++j)
      gram.col((x.dim + i) * m + (x.dim + j)) = y.gram_entry(i, j);
  return validate_module(x.algebra, std::move(action), std::move(gram));
}

HilbertModule free_module(AlgebraPtr algebra, Index copies) {
  HilbertModule f = standard_module(algebra);
  HilbertModule out = f;
  for (Index c = 1; c < copies; ++c) out = direct_sum(out, f);
  return out;
}

HilbertModule row_module(AlgebraPtr algebra) {
  const Index n = algebra->ambient_dim();
  const Index d = algebra->dim();
  std::vector<Mat> action(d);
  for (Index k = 0; k < d; ++k) action[k] = algebra->basis()[k].transpose();
  Mat gram(d, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      Mat e = Mat::Zero(n, n);
      e(i, j) = 1.0;  // e_i^* e_j as matrices
      auto c = algebra->coordinates(e);
      if (!c)
        throw ValidationError("not-in-span",
                              "row module needs x*y to lie in the algebra");
      gram.col(i * n + j) = *c;
    }
  return validate_module(std::move(algebra), std::move(action), std::move(gram));
}

Mat rank_one_matrix(const HilbertModule& f, const Vec& x, const Vec& y) {
  const Index m = f.dim;
  Mat theta(m, m);
  for (Index l = 0; l < m; ++l) {
    Vec b = Vec::Zero(f.algebra->dim());
    for (Index j = 0; j < m; ++j) b += std::conj(y(j)) * f.gram_entry(j, l);
    theta.col(l) = f.act_of(b) * x;
  }
  return theta;
}

AlgebraPtr compacts(const HilbertModule& f, const Tolerance& tol) {
  const Index m = f.dim;
  std::vector<Mat> candidates;
  candidates.reserve(m * m);
  double scale = 0.0;
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      candidates.push_back(rank_one_matrix(f, Vec::Unit(m, i), Vec::Unit(m, j)));
      scale = std::max(scale, candidates.back().norm());
    }

  // Deterministic greedy selection of an independent generating subset.
  std::vector<Mat> selected;
  Mat ortho(m * m, 0);
  for (const Mat& c : candidates) {
    Vec v = as_vector(c);
    if (ortho.cols() > 0) v -= ortho * (ortho.adjoint() * v);
    if (v.norm() > tol.threshold(scale)) {
      selected.push_back(c);
      ortho.conservativeResize(Eigen::NoChange, ortho.cols() + 1);
      ortho.col(ortho.cols() - 1) = v / v.norm();
    }
  }

  Mat all(m * m, static_cast<Index>(candidates.size()));
  for (std::size_t k = 0; k < candidates.size(); ++k)
    all.col(static_cast<Index>(k)) = as_vector(candidates[k]);
  if (rank(all, tol) != static_cast<Index>(selected.size()))
    throw ValidationError("rank-mismatch",
                          "compacts generator selection is inconsistent");

  AlgebraPtr k = FiniteCStarAlgebra::validate(std::move(selected), tol);
  if ((k->rep(k->unit()) - Mat::Identity(m, m)).norm() > tol.threshold(1.0))
    throw ValidationError("degenerate", "compacts have no identity on the module");
  return k;
}

Vec rank_one(const HilbertModule& f, const AlgebraPtr& k, const Vec& x,
             const Vec& y) {
  auto c = k->coordinates(rank_one_matrix(f, x, y));
  if (!c)
    throw ValidationError("not-in-span", "rank-one operator escapes the compacts");
  return *c;
}

Mat Correspondence::left_act_of(const Vec& a) const {
  Mat m = Mat::Zero(module.dim, module.dim);
  for (Index k = 0; k < left_algebra->dim(); ++k) m += a(k) * left_action[k];
  return m;
}

Correspondence make_correspondence(AlgebraPtr left_algebra, HilbertModule f,
                                   std::vector<Mat> left_action,
                                   const Tolerance& tol) {
  const Index da = left_algebra->dim();
  const Index m = f.dim;
  if (static_cast<Index>(left_action.size()) != da)
    throw ValidationError("shape-mismatch", "one left action matrix per A-basis");
  for (const Mat& a : left_action)
    if (a.rows() != m || a.cols() != m)
      throw ValidationError("shape-mismatch", "left action matrices must be m x m");

  double scale = 1.0;
  for (const Mat& a : left_action) scale = std::max(scale, op_norm(a));

  for (Index k = 0; k < da; ++k)
    for (Index l = 0; l < f.algebra->dim(); ++l)
      if ((left_action[k] * f.action[l] - f.action[l] * left_action[k]).norm() >
          tol.threshold(scale * scale))
        throw ValidationError("actions-do-not-commute",
                              "left and right actions do not commute");

  for (Index i = 0; i < da; ++i)
    for (Index j = 0; j < da; ++j) {
      Mat lhs = Mat::Zero(m, m);
      for (Index k = 0; k < da; ++k)
        lhs += left_algebra->structure_constant(i, j, k) * left_action[k];
      if ((lhs - left_action[i] * left_action[j]).norm() >
          tol.threshold(scale * scale))
        throw ValidationError("not-homomorphism",
                              "left action is not multiplicative");
    }

  Correspondence corr{std::move(left_algebra), std::move(f),
                      std::move(left_action), nullptr, Mat(), false};
  if ((corr.left_act_of(corr.left_algebra->unit()) - Mat::Identity(m, m)).norm() >
      tol.threshold(scale))
    throw ValidationError("degenerate", "left action of the unit is not identity");

  // Adjointability: <a.x|y> = <x|a*.y> on basis pairs.
  const double gscale = std::max(1.0, corr.module.gram.norm());
  for (Index k = 0; k < da; ++k) {
    Mat astar = corr.left_act_of(corr.left_algebra->involute(Vec::Unit(da, k)));
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) {
        Vec lhs = Vec::Zero(corr.module.algebra->dim());
        for (Index u = 0; u < m; ++u)
          lhs += std::conj(corr.left_action[k](u, i)) * corr.module.gram_entry(u, j);
        Vec rhs = Vec::Zero(corr.module.algebra->dim());
        for (Index v = 0; v < m; ++v)
          rhs += astar(v, j) * corr.module.gram_entry(i, v);
        if ((lhs - rhs).norm() > tol.threshold(gscale * scale))
          throw ValidationError("left-action-not-adjointable",
                                "<a.x|y> != <x|a*.y>");
      }
  }

  corr.compacts_algebra = compacts(corr.module, tol);
  corr.eta = Mat(corr.compacts_algebra->dim(), da);
  for (Index k = 0; k < da; ++k) {
    auto c = corr.compacts_algebra->coordinates(corr.left_action[k]);
    if (!c)
      throw ValidationError("left-action-not-adjointable",
                            "left action escapes the compacts");
    corr.eta.col(k) = *c;
  }
  corr.faithful = (rank(corr.eta, tol) == da);
  return corr;
}

Correspondence correspondence_from_inclusion(const Inclusion& incl,
                                             const Tolerance& tol) {
  HilbertModule b = standard_module(incl.amb);
  std::vector<Mat> la(incl.sub->dim());
  for (Index k = 0; k < incl.sub->dim(); ++k)
    la[k] = incl.amb->lmul_of(incl.embedding.col(k));
  return make_correspondence(incl.sub, std::move(b), std::move(la), tol);
}

AdjointModule adjoint_module(const Correspondence& f, const Tolerance& tol) {
  const HilbertModule& F = f.module;
  const auto& B = *F.algebra;
  const auto& A = *f.left_algebra;
  const Index m = F.dim;

  AdjointModule adj;
  adj.star_from_module = Mat::Identity(m, m);

  adj.left_b_action.resize(B.dim());
  for (Index k = 0; k < B.dim(); ++k) {
    Vec bstar = B.involute(Vec::Unit(B.dim(), k));
    adj.left_b_action[k] = F.act_of(bstar).conjugate();
  }
  adj.right_a_action.resize(A.dim());
  for (Index k = 0; k < A.dim(); ++k) {
    Vec astar = A.involute(Vec::Unit(A.dim(), k));
    adj.right_a_action[k] = f.left_act_of(astar).conjugate();
  }

  AlgebraPtr K = f.compacts_algebra;
  std::vector<Mat> action(K->dim());
  for (Index t = 0; t < K->dim(); ++t)
    action[t] = K->basis()[t].transpose();
  Mat gram(K->dim(), m * m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      gram.col(i * m + j) = rank_one(F, K, Vec::Unit(m, i), Vec::Unit(m, j));
  adj.module = validate_module(K, std::move(action), std::move(gram), tol);
  return adj;
}

}  // namespace cstar
