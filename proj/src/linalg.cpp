#include "cstar/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace cstar {

namespace {

// Orthonormal complement of a set of orthonormal columns, from the trailing
// columns of a full Householder QR. The singular-vector columns an SVD
// returns for (numerically) zero singular values are not reliable, so every
// complement is rebuilt this way from the columns that are.
Mat complement_of(const Mat& basis, Index ambient) {
  if (basis.cols() == 0) return Mat::Identity(ambient, ambient);
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat full = qr.householderQ() * Mat::Identity(ambient, ambient);
  return full.rightCols(ambient - basis.cols());
}

// Full SVD wrapper. BDCSVD for anything nontrivial; it is deterministic.
struct Svd {
  Mat u, v;
  Eigen::VectorXd sigma;

  explicit Svd(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) {
      u = Mat::Identity(m.rows(), m.rows());
      v = Mat::Identity(m.cols(), m.cols());
      sigma = Eigen::VectorXd::Zero(std::min(m.rows(), m.cols()));
      return;
    }
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    u = svd.matrixU();
    v = svd.matrixV();
    sigma = svd.singularValues();
  }

  double scale() const { return sigma.size() ? sigma(0) : 0.0; }

  Index rank(const Tolerance& tol) const {
    const double thresh = tol.threshold(scale());
    Index r = 0;
    while (r < sigma.size() && sigma(r) > thresh) ++r;
    return r;
  }
};

}  // namespace

double Subspace::distance(const Vec& v) const {
  if (basis.cols() == 0) return v.norm();
  return (v - basis * (basis.adjoint() * v)).norm();
}

bool Subspace::contains(const Vec& v, double threshold) const {
  return distance(v) <= threshold;
}

bool finite_entries(const Mat& m) { return m.allFinite(); }

double op_norm(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return Eigen::BDCSVD<Mat>(m).singularValues()(0);
}

Index rank(const Mat& m, const Tolerance& tol) {
  return Svd(m).rank(tol);
}

Subspace kernel(const Mat& m, const Tolerance& tol) {
  Svd svd(m);
  const Index r = svd.rank(tol);
  Subspace s;
  s.ambient = m.cols();
  s.basis = complement_of(svd.v.leftCols(r), m.cols());
  s.tol = tol.threshold(svd.scale());
  return s;
}

Subspace column_space(const Mat& m, const Tolerance& tol) {
  Svd svd(m);
  const Index r = svd.rank(tol);
  Subspace s;
  s.ambient = m.rows();
  s.basis = svd.u.leftCols(r);
  s.tol = tol.threshold(svd.scale());
  return s;
}

Subspace orthogonal_complement(const Subspace& s, const Tolerance& tol) {
  Svd svd(s.basis);
  const Index r = svd.rank(tol);
  Subspace c;
  c.ambient = s.ambient;
  c.basis = complement_of(svd.u.leftCols(r), s.ambient);
  c.tol = s.tol;
  return c;
}

bool subspace_equal(const Subspace& a, const Subspace& b,
                    const Tolerance& tol) {
  if (a.ambient != b.ambient)
    throw ValidationError("ambient-mismatch",
                          "subspaces live in different coordinate spaces");
  if (a.dim() != b.dim()) return false;
  return op_norm(a.projector() - b.projector()) <= tol.threshold(1.0);
}

std::optional<Vec> solve_in_span(const std::vector<Mat>& vectors,
                                 const Mat& target, const Tolerance& tol) {
  if (vectors.empty()) {
    if (target.norm() <= tol.threshold(1.0)) return Vec::Zero(0);
    return std::nullopt;
  }
  const Index rows = vectors.front().rows();
  const Index cols = vectors.front().cols();
  Mat columns(rows * cols, static_cast<Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].rows() != rows || vectors[k].cols() != cols ||
        target.rows() != rows || target.cols() != cols)
      throw ValidationError("shape-mismatch",
                            "span vectors and target must share one shape");
    columns.col(static_cast<Index>(k)) = as_vector(vectors[k]);
  }
  return SpanSolver(columns, tol).solve_in_span(as_vector(target));
}

bool is_psd(const Mat& m, const Tolerance& tol) {
  if (m.rows() != m.cols())
    throw ValidationError("non-square", "positivity test needs a square matrix");
  if (m.rows() == 0) return true;
  const double scale = std::max(1.0, m.norm());
  if ((m - m.adjoint()).norm() > tol.threshold(scale)) return false;
  Eigen::SelfAdjointEigenSolver<Mat> eig((m + m.adjoint()) / 2.0);
  return eig.eigenvalues().minCoeff() >= -tol.threshold(scale);
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < a.cols(); ++k)
      out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
  return out;
}

Mat as_matrix(const Vec& v, Index rows, Index cols) {
  Mat out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = v(i * cols + j);
  return out;
}

Vec as_vector(const Mat& m) {
  Vec out(m.rows() * m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out(i * m.cols() + j) = m(i, j);
  return out;
}

SpanSolver::SpanSolver(Mat columns, const Tolerance& tol) : tol_(tol) {
  Svd svd(columns);
  rank_ = svd.rank(tol);
  scale_ = svd.scale();
  u_ = svd.u.leftCols(rank_);
  v_ = svd.v.leftCols(rank_);
  sigma_ = svd.sigma.head(rank_);
}

Vec SpanSolver::solve(const Vec& rhs, double* residual) const {
  Vec projected = u_.adjoint() * rhs;
  Vec x = v_ * (projected.array() / sigma_.array()).matrix();
  if (residual) *residual = (rhs - u_ * projected).norm();
  return x;
}

std::optional<Vec> SpanSolver::solve_in_span(const Vec& rhs) const {
  double residual = 0.0;
  Vec x = solve(rhs, &residual);
  if (residual > tol_.threshold(std::max(rhs.norm(), scale_)))
    return std::nullopt;
  return x;
}

Vec apply_on_pair(const Vec& v, const std::vector<Index>& shape, int pos,
                  const Mat& m) {
  Index pre = 1, post = 1;
  for (int i = 0; i < pos; ++i) pre *= shape[i];
  for (std::size_t i = pos + 2; i < shape.size(); ++i) post *= shape[i];
  const Index mid = shape[pos] * shape[pos + 1];
  Vec out(v.size());
  Vec slice(mid);
  for (Index p = 0; p < pre; ++p) {
    for (Index q = 0; q < post; ++q) {
      for (Index t = 0; t < mid; ++t) slice(t) = v((p * mid + t) * post + q);
      Vec mapped = m * slice;
      for (Index t = 0; t < mid; ++t) out((p * mid + t) * post + q) = mapped(t);
    }
  }
  return out;
}

Mat apply_on_pair_cols(const Mat& columns, const std::vector<Index>& shape,
                       int pos, const Mat& m) {
  Mat out(columns.rows(), columns.cols());
  for (Index c = 0; c < columns.cols(); ++c)
    out.col(c) = apply_on_pair(columns.col(c), shape, pos, m);
  return out;
}

}  // namespace cstar
