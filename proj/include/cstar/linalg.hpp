// Tolerance-aware dense complex linear algebra: ranks, kernels, images,
// subspace comparison, least-squares span membership, positivity tests.
// Every rank decision goes through singular-value thresholding.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cstar {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Error with a stable machine-readable code ("not-star-closed", ...).
class ValidationError : public std::runtime_error {
public:
  ValidationError(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

struct Tolerance {
  double absolute = 1e-9;
  double relative = 1e-9;

  /// Threshold used when comparing against a quantity of the given scale.
  double threshold(double scale) const {
    return std::max(absolute, relative * scale);
  }
};

/// A subspace of C^ambient, stored as an orthonormal basis (columns).
struct Subspace {
  Index ambient = 0;
  Mat basis;  // ambient x dim, orthonormal columns
  double tol = 0.0;

  Index dim() const { return basis.cols(); }
  Mat projector() const { return basis * basis.adjoint(); }

  /// Residual of v after orthogonal projection onto the subspace.
  double distance(const Vec& v) const;
  bool contains(const Vec& v, double threshold) const;
};

bool finite_entries(const Mat& m);

/// Largest singular value (0 for empty matrices).
double op_norm(const Mat& m);

Index rank(const Mat& m, const Tolerance& tol = {});

/// Right null space: span of right-singular directions with sigma <= threshold.
Subspace kernel(const Mat& m, const Tolerance& tol = {});

/// Column space: span of left-singular directions with sigma > threshold.
Subspace column_space(const Mat& m, const Tolerance& tol = {});

Subspace orthogonal_complement(const Subspace& s, const Tolerance& tol = {});

/// True iff the orthogonal projectors differ by <= tol in operator norm.
/// Throws ValidationError("ambient-mismatch") on different ambient spaces.
bool subspace_equal(const Subspace& a, const Subspace& b,
                    const Tolerance& tol = {});

/// Least-squares coefficients expressing `target` in the span of `vectors`,
/// or nullopt ("not-in-span") when the residual exceeds the threshold.
/// All matrices must share one shape.
std::optional<Vec> solve_in_span(const std::vector<Mat>& vectors,
                                 const Mat& target, const Tolerance& tol = {});

/// Hermitian within tol and minimal eigenvalue >= -threshold.
bool is_psd(const Mat& m, const Tolerance& tol = {});

/// Kronecker product with pair index (i,j) -> i*cols(b)+j on both sides.
Mat kron(const Mat& a, const Mat& b);

/// vec/unvec with the same row-major pair-index convention as kron().
Mat as_matrix(const Vec& v, Index rows, Index cols);
Vec as_vector(const Mat& m);

/// Reusable min-norm least-squares solver for a fixed set of columns.
/// Factored once; rank decisions use the construction tolerance.
class SpanSolver {
public:
  SpanSolver() = default;
  SpanSolver(Mat columns, const Tolerance& tol = {});

  /// Min-norm least-squares solution; sets *residual to |columns*x - rhs|.
  Vec solve(const Vec& rhs, double* residual = nullptr) const;

  /// nullopt when the residual exceeds threshold(max(|rhs|, scale)).
  std::optional<Vec> solve_in_span(const Vec& rhs) const;

  Index rank() const { return rank_; }
  double scale() const { return scale_; }  // largest singular value

private:
  Mat u_, v_;
  Eigen::VectorXd sigma_;
  Index rank_ = 0;
  double scale_ = 0.0;
  Tolerance tol_;
};

/// Apply M to the combined index of adjacent tensor factors (pos, pos+1).
/// `shape` lists the factor dimensions of the chain; v has product size.
Vec apply_on_pair(const Vec& v, const std::vector<Index>& shape, int pos,
                  const Mat& m);
Mat apply_on_pair_cols(const Mat& columns, const std::vector<Index>& shape,
                       int pos, const Mat& m);

}  // namespace cstar
