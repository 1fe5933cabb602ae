// Hilbert C*-modules over finite-dimensional C*-algebras: validation,
// standard and free modules, compact operators, correspondences, and the
// adjoint module.

#pragma once

#include "cstar/algebra.hpp"

namespace cstar {

/// A right Hilbert C*-module over B in coordinates: an action matrix per
/// B-basis element and a B-valued Gram matrix of the coordinate basis.
struct HilbertModule {
  AlgebraPtr algebra;        // B
  Index dim = 0;             // m
  std::vector<Mat> action;   // coords(z . b_k) = action[k] * z
  Mat gram;                  // dim(B) x m*m, column i*m+j = <e_i|e_j>

  Vec gram_entry(Index i, Index j) const { return gram.col(i * dim + j); }

  /// Matrix of z -> z.b for a coefficient vector b.
  Mat act_of(const Vec& b) const;

  /// B-valued inner product of two coordinate vectors.
  Vec inner(const Vec& x, const Vec& y) const;

  /// Scalarised Gram matrix S(i,j) = tau(<e_i|e_j>); Hermitian positive
  /// definite for a valid module.
  Mat scalar_gram() const;

  /// C*-module norm |x| = |rep<x|x>|^(1/2).
  double norm(const Vec& x) const;
};

/// Verifies the right-action axioms, sesquilinearity and Hermitian symmetry
/// of the inner product, positivity of the Gram block matrix, and
/// definiteness. Error codes: "action-not-homomorphic",
/// "inner-product-not-sesquilinear", "not-positive",
/// "degenerate-inner-product".
HilbertModule validate_module(AlgebraPtr algebra, std::vector<Mat> action,
                              Mat gram, const Tolerance& tol = {});

/// B as a module over itself, with <b1|b2> = b1* b2.
HilbertModule standard_module(AlgebraPtr algebra);

/// B^n (outer direct sum of standard modules).
HilbertModule free_module(AlgebraPtr algebra, Index copies);

HilbertModule direct_sum(const HilbertModule& x, const HilbertModule& y);

/// Row vectors over a concretely represented algebra whose span contains all
/// products x* y (e.g. a full matrix algebra): right action z.b = z b,
/// inner product <x|y> = x* y.
HilbertModule row_module(AlgebraPtr algebra);

/// The compact operators K_B(F) = span of theta_{f,g} : h -> f.<g|h>, as a
/// validated algebra concretely represented on the module coordinates.
AlgebraPtr compacts(const HilbertModule& f, const Tolerance& tol = {});

/// Matrix of theta_{f,g} on module coordinates.
Mat rank_one_matrix(const HilbertModule& f, const Vec& x, const Vec& y);

/// Coordinates of theta_{x,y} in a compacts algebra.
Vec rank_one(const HilbertModule& f, const AlgebraPtr& k, const Vec& x,
             const Vec& y);

/// A C*-correspondence from A to B: a Hilbert module over B with a left
/// action of A by adjointable operators, together with the action
/// homomorphism eta into the compacts.
struct Correspondence {
  AlgebraPtr left_algebra;        // A
  HilbertModule module;           // F over B
  std::vector<Mat> left_action;   // coords(a_k . f) = left_action[k] * f
  AlgebraPtr compacts_algebra;    // K_B(F)
  Mat eta;                        // dim(K) x dim(A)
  bool faithful = false;

  Mat left_act_of(const Vec& a) const;
};

/// Verifies commuting actions, the homomorphism property, nondegeneracy and
/// adjointability of the left action, then expresses it in the compacts.
/// Error codes: "actions-do-not-commute", "left-action-not-adjointable",
/// "not-homomorphism", "degenerate".
Correspondence make_correspondence(AlgebraPtr left_algebra, HilbertModule f,
                                   std::vector<Mat> left_action,
                                   const Tolerance& tol = {});

/// B as a correspondence from A to B along a validated inclusion.
Correspondence correspondence_from_inclusion(const Inclusion& incl,
                                             const Tolerance& tol = {});

/// The adjoint module F*: conjugate coordinate space with
/// b . f* . a = (a* f b*)* and K-valued inner product <f1*|f2*> = theta_{f1,f2}.
struct AdjointModule {
  HilbertModule module;            // F* as a Hilbert module over K_B(F)
  std::vector<Mat> left_b_action;  // coords(b_k . f*)
  std::vector<Mat> right_a_action; // coords(f* . a_k)
  Mat star_from_module;            // coords(f*) = star_from_module * conj(coords(f))
};

AdjointModule adjoint_module(const Correspondence& f, const Tolerance& tol = {});

}  // namespace cstar
