// Finite-dimensional C*-algebras, concretely represented as *-closed unital
// matrix subalgebras given by a basis. Validation computes structure
// constants, the unit, the involution in coordinates, and the Casimir
// (separability) element used by the balanced tensor engine.

#pragma once

#include "cstar/linalg.hpp"

#include <memory>
#include <vector>

namespace cstar {

class FiniteCStarAlgebra;
using AlgebraPtr = std::shared_ptr<const FiniteCStarAlgebra>;

class FiniteCStarAlgebra {
public:
  /// Validates a basis of n x n matrices: linear independence, closure under
  /// products and adjoints, existence of a unit. Throws ValidationError with
  /// codes "linearly-dependent-basis", "not-multiplicatively-closed",
  /// "not-star-closed", "no-unit".
  static AlgebraPtr validate(std::vector<Mat> basis, const Tolerance& tol = {});

  Index ambient_dim() const { return ambient_dim_; }
  Index dim() const { return static_cast<Index>(basis_.size()); }
  const std::vector<Mat>& basis() const { return basis_; }
  const Vec& unit() const { return unit_; }
  const Tolerance& tol() const { return tol_; }

  /// Ambient matrix of a coordinate vector.
  Mat rep(const Vec& x) const;

  /// Structure constant c(i,j,k): coefficient of basis k in basis_i * basis_j.
  Cplx structure_constant(Index i, Index j, Index k) const {
    return lmul_[i](k, j);
  }

  /// Coordinates of products/adjoints, via structure constants.
  Vec multiply(const Vec& x, const Vec& y) const;
  Vec involute(const Vec& x) const;

  /// Matrix of y -> x*y (resp. y -> y*x) on coordinates.
  Mat lmul_of(const Vec& x) const;
  Mat rmul_of(const Vec& x) const;
  const Mat& lmul(Index k) const { return lmul_[k]; }
  const Mat& rmul(Index k) const { return rmul_[k]; }

  /// Involution as a matrix: involute(x) = invol_matrix * conj(x).
  const Mat& invol_matrix() const { return invol_; }

  /// Faithful positive trace functional tau(x) = Tr(rep(x)).
  Cplx trace(const Vec& x) const { return tau_.cwiseProduct(x).sum(); }
  const Vec& trace_vector() const { return tau_; }

  /// Coefficients E of the separability element e = sum E(k,l) b_k (x) b_l,
  /// satisfying b.e = e.b for all b and mult(e) = 1. Built from the Casimir
  /// element of the trace form; powers the relation projectors of the
  /// balanced tensor engine.
  const Mat& separability_coefficients() const { return casimir_; }

  /// Coordinates of the ambient matrix m, or nullopt if not in the span.
  std::optional<Vec> coordinates(const Mat& m) const;

private:
  FiniteCStarAlgebra() = default;

  Index ambient_dim_ = 0;
  std::vector<Mat> basis_;
  std::vector<Mat> lmul_, rmul_;
  Mat invol_;
  Vec unit_;
  Vec tau_;
  Mat casimir_;
  Tolerance tol_;
  SpanSolver flat_;  // flattened basis, for coordinates()
};

/// A validated nondegenerate unital inclusion A -> B of finite-dimensional
/// C*-algebras, given by a linear map on coordinates.
struct Inclusion {
  AlgebraPtr sub;   // A
  AlgebraPtr amb;   // B
  Mat embedding;    // dim(B) x dim(A)

  Vec embed(const Vec& a) const { return embedding * a; }
};

/// Verifies injectivity, multiplicativity, *-preservation, nondegeneracy
/// (span(A.B) = B = span(B.A)) and unit preservation. Error codes:
/// "not-homomorphism", "not-star-map", "not-injective", "degenerate".
Inclusion check_inclusion(AlgebraPtr sub, AlgebraPtr amb, const Mat& embedding,
                          const Tolerance& tol = {});

}  // namespace cstar
