#include "cstar/tensor.hpp"

#include <cmath>

namespace cstar {

Mat pair_projector(const FiniteCStarAlgebra& middle,
                   const std::vector<Mat>& right_action,
                   const std::vector<Mat>& left_action) {
  const Index d = middle.dim();
  const Index n = (d && right_action[0].rows() && left_action[0].rows())
                      ? right_action[0].rows() * left_action[0].rows()
                      : 0;
  Mat phi = Mat::Zero(n, n);
  const Mat& e = middle.separability_coefficients();
  for (Index k = 0; k < d; ++k)
    for (Index l = 0; l < d; ++l)
      if (std::abs(e(k, l)) > 0)
        phi += e(k, l) * kron(right_action[k], left_action[l]);
  return phi;
}

BalancedTensor balanced_tensor(Index dim_left,
                               const std::vector<Mat>& right_action,
                               Index dim_right,
                               const std::vector<Mat>& left_action,
                               AlgebraPtr middle, const Tolerance& tol) {
  const Index d = middle->dim();
  if (static_cast<Index>(right_action.size()) != d ||
      static_cast<Index>(left_action.size()) != d)
    throw ValidationError("shape-mismatch", "one action matrix per basis element");

  BalancedTensor t;
  t.dim_left = dim_left;
  t.dim_right = dim_right;
  t.middle = middle;
  const Index n = dim_left * dim_right;
  if (n == 0) {
    t.relation_basis = Mat(n, 0);
    t.quotient_basis = Mat(n, 0);
    t.membership = Mat(n, n);
    return t;
  }

  // Unital actions are a precondition for the separability projector.
  const Vec& u = middle->unit();
  Mat ru = Mat::Zero(dim_left, dim_left), lu = Mat::Zero(dim_right, dim_right);
  for (Index k = 0; k < d; ++k) {
    ru += u(k) * right_action[k];
    lu += u(k) * left_action[k];
  }
  if ((ru - Mat::Identity(dim_left, dim_left)).norm() > tol.threshold(1.0) ||
      (lu - Mat::Identity(dim_right, dim_right)).norm() > tol.threshold(1.0))
    throw ValidationError("nondegenerate-action-required",
                          "balancing needs unital actions on both factors");

  Mat generators(n, d * n);
  const Mat il = Mat::Identity(dim_left, dim_left);
  const Mat ir = Mat::Identity(dim_right, dim_right);
  for (Index k = 0; k < d; ++k)
    generators.middleCols(k * n, n) =
        kron(right_action[k], ir) - kron(il, left_action[k]);

  Eigen::BDCSVD<Mat> svd(generators, Eigen::ComputeFullU);
  const auto& sigma = svd.singularValues();
  const double thresh = tol.threshold(sigma.size() ? sigma(0) : 0.0);
  Index r = 0;
  while (r < sigma.size() && sigma(r) > thresh) ++r;
  t.relation_basis = svd.matrixU().leftCols(r);
  // U-columns for zero singular values are unreliable; rebuild the
  // complement from a full QR of the trustworthy relation columns.
  if (r == 0) {
    t.quotient_basis = Mat::Identity(n, n);
  } else {
    Eigen::HouseholderQR<Mat> qr(t.relation_basis);
    Mat full = qr.householderQ() * Mat::Identity(n, n);
    t.quotient_basis = full.rightCols(n - r);
  }

  t.membership = pair_projector(*middle, right_action, left_action);
  // Exactness of the projector against the computed relation span.
  if ((t.membership * t.relation_basis).norm() > 1e3 * tol.threshold(1.0) ||
      std::abs(t.membership.trace().real() - static_cast<double>(t.dim())) >
          1e3 * tol.threshold(static_cast<double>(n)))
    throw ValidationError("rank-mismatch",
                          "separability projector disagrees with relation span");
  return t;
}

Mat push_pair(const BalancedTensor& src, const BalancedTensor& dst,
              const Mat& f, const Mat& g, const Tolerance& tol,
              const std::string& what) {
  Mat big = kron(f, g);
  const double scale = std::max(1.0, op_norm(f) * op_norm(g));
  if (src.relation_basis.cols() > 0 &&
      (dst.quotient_basis.adjoint() * (big * src.relation_basis)).norm() >
          tol.threshold(scale))
    throw ValidationError("ill-defined-quotient-map", what);
  return dst.project_cols(big * src.quotient_basis);
}

void TensorChain::add_link(int pos, const FiniteCStarAlgebra& middle,
                           const std::vector<Mat>& right_action,
                           const std::vector<Mat>& left_action) {
  links_.emplace_back(pos, pair_projector(middle, right_action, left_action));
}

Vec TensorChain::reduce(Vec v) const {
  for (const auto& [pos, phi] : links_) v = apply_on_pair(v, shape_, pos, phi);
  return v;
}

double TensorChain::residual(const Mat& cols) const {
  double worst = 0.0;
  for (Index c = 0; c < cols.cols(); ++c)
    worst = std::max(worst, reduce(cols.col(c)).norm());
  return worst;
}

Index TensorChain::full_dim() const {
  Index n = 1;
  for (Index s : shape_) n *= s;
  return n;
}

InteriorTensor interior_tensor(const HilbertModule& x, const Correspondence& f,
                               const Tolerance& tol) {
  return interior_tensor_with(x, f.module, f.left_action, tol);
}

InteriorTensor interior_tensor_with(const HilbertModule& x,
                                    const HilbertModule& l,
                                    const std::vector<Mat>& left_action,
                                    const Tolerance& tol) {
  if (x.algebra->dim() != static_cast<Index>(left_action.size()))
    throw ValidationError("shape-mismatch",
                          "left action must match the module's base algebra");
  const auto& A = *x.algebra;
  const auto& B = *l.algebra;
  const Index mx = x.dim, mf = l.dim, full = mx * mf;

  InteriorTensor it;
  it.coords = balanced_tensor(mx, x.action, mf, left_action, x.algebra, tol);

  // B-valued semi-inner product on the full tensor coordinates.
  std::vector<Mat> w(B.dim(), Mat::Zero(full, full));
  for (Index i = 0; i < mx; ++i)
    for (Index j = 0; j < mx; ++j) {
      Mat amat = Mat::Zero(mf, mf);
      Vec gx = x.gram_entry(i, j);
      for (Index k = 0; k < A.dim(); ++k) amat += gx(k) * left_action[k];
      for (Index p = 0; p < mf; ++p)
        for (Index q = 0; q < mf; ++q) {
          Vec v = Vec::Zero(B.dim());
          for (Index s = 0; s < mf; ++s)
            if (std::abs(amat(s, q)) > 0) v += amat(s, q) * l.gram_entry(p, s);
          for (Index t = 0; t < B.dim(); ++t)
            w[t](i * mf + p, j * mf + q) = v(t);
        }
    }

  // The pushed form must vanish against the relation span on both slots.
  double ill = 0.0;
  for (const Mat& wt : w) {
    if (it.coords.relation_basis.cols() > 0) {
      ill = std::max(ill, (wt * it.coords.relation_basis).norm());
      ill = std::max(ill, (it.coords.relation_basis.adjoint() * wt).norm());
    }
  }
  double wscale = 1.0;
  for (const Mat& wt : w) wscale = std::max(wscale, wt.norm());
  if (ill > tol.threshold(wscale))
    throw ValidationError("inner-product-ill-defined",
                          "semi-inner product does not vanish on relations");

  const Index q = it.coords.dim();
  Mat gram(B.dim(), q * q);
  for (Index t = 0; t < B.dim(); ++t) {
    Mat gt = it.coords.quotient_basis.adjoint() * w[t] * it.coords.quotient_basis;
    for (Index a = 0; a < q; ++a)
      for (Index b = 0; b < q; ++b) gram(t, a * q + b) = gt(a, b);
  }

  std::vector<Mat> action(B.dim());
  const Mat ix = Mat::Identity(mx, mx);
  for (Index k = 0; k < B.dim(); ++k)
    action[k] = push_pair(it.coords, it.coords, ix, l.action[k], tol,
                          "right action on a balanced tensor");

  it.module = validate_module(l.algebra, std::move(action), std::move(gram), tol);

  // The balanced quotient dimension must equal the rank of the scalarised
  // semi-inner product (the two constructions of the tensor product agree).
  Mat s_full = Mat::Zero(full, full);
  for (Index t = 0; t < B.dim(); ++t) s_full += B.trace_vector()(t) * w[t];
  if (rank(s_full, tol) != q)
    throw ValidationError("rank-mismatch",
                          "semi-inner-product rank disagrees with quotient dim");
  return it;
}

bool exactness_check(const Subspace& submodule, Index dim_x,
                     const std::vector<Mat>& right_action_x, Index dim_y,
                     const std::vector<Mat>& left_action_y, AlgebraPtr middle,
                     const Tolerance& tol) {
  const Mat& kappa = submodule.basis;
  if (submodule.ambient != dim_x)
    throw ValidationError("shape-mismatch", "submodule ambient must be dim(X)");
  for (const Mat& r : right_action_x) {
    Mat moved = r * kappa;
    if (kappa.cols() > 0 &&
        (moved - kappa * (kappa.adjoint() * moved)).norm() >
            tol.threshold(std::max(1.0, op_norm(r))))
      throw ValidationError("not-a-submodule",
                            "subspace is not invariant under the action");
  }

  BalancedTensor xy =
      balanced_tensor(dim_x, right_action_x, dim_y, left_action_y, middle, tol);

  // image(i (x) id) inside the quotient.
  Mat injected =
      xy.project_cols(kron(kappa, Mat::Identity(dim_y, dim_y)));
  Subspace image = column_space(injected, tol);

  // X/I with the induced action, and the pushed quotient map.
  Subspace comp = orthogonal_complement(submodule, tol);
  std::vector<Mat> action_q(right_action_x.size());
  for (std::size_t k = 0; k < right_action_x.size(); ++k)
    action_q[k] = comp.basis.adjoint() * right_action_x[k] * comp.basis;
  BalancedTensor qy = balanced_tensor(comp.dim(), action_q, dim_y,
                                      left_action_y, middle, tol);
  Mat pushed = push_pair(xy, qy, comp.basis.adjoint(),
                         Mat::Identity(dim_y, dim_y), tol,
                         "quotient map tensor identity");
  Subspace ker = kernel(pushed, tol);
  return subspace_equal(image, ker, tol);
}

}  // namespace cstar
