// The balanced tensor engine. A balanced tensor X (x)_A Y is realised as the
// orthogonal complement of the span of relation vectors
// (x.a)(x)y - x(x)(a.y), with explicit representative projection and lift.
// Longer chains are handled without large factorisations through exact
// idempotents built from each algebra's separability element: the composed
// pairwise projectors annihilate precisely the total relation span.

#pragma once

#include "cstar/module.hpp"

namespace cstar {

struct BalancedTensor {
  Index dim_left = 0, dim_right = 0;
  AlgebraPtr middle;
  Mat relation_basis;   // full x r, orthonormal
  Mat quotient_basis;   // full x q, orthonormal complement of the relations
  Mat membership;       // idempotent with kernel exactly the relation span

  Index full_dim() const { return dim_left * dim_right; }
  Index dim() const { return quotient_basis.cols(); }

  Vec project(const Vec& full) const { return quotient_basis.adjoint() * full; }
  Vec lift(const Vec& q) const { return quotient_basis * q; }
  Mat project_cols(const Mat& full) const { return quotient_basis.adjoint() * full; }
  Mat lift_cols(const Mat& q) const { return quotient_basis * q; }

  /// Distance of v from the relation span (exact membership test).
  double relation_residual(const Vec& v) const { return (membership * v).norm(); }
};

/// Quotient of C^{dim_left} (x) C^{dim_right} by the middle algebra's
/// balancing relations. `right_action` acts on the left factor, `left_action`
/// on the right factor, one matrix per basis element of `middle`.
BalancedTensor balanced_tensor(Index dim_left,
                               const std::vector<Mat>& right_action,
                               Index dim_right,
                               const std::vector<Mat>& left_action,
                               AlgebraPtr middle, const Tolerance& tol = {});

/// The separability projector for one balanced pair: sum of
/// E(k,l) kron(R_k, L_l); an idempotent whose kernel is the relation span.
Mat pair_projector(const FiniteCStarAlgebra& middle,
                   const std::vector<Mat>& right_action,
                   const std::vector<Mat>& left_action);

/// Push f (x) g to the quotients, asserting well-definedness (the map must
/// carry the source relations into the target relations).
Mat push_pair(const BalancedTensor& src, const BalancedTensor& dst,
              const Mat& f, const Mat& g, const Tolerance& tol,
              const std::string& what);

/// A chain of tensor factors with balancing links between consecutive
/// factors; provides the exact membership projector for the total relation
/// span (used where indexing the quotient is never needed).
class TensorChain {
public:
  TensorChain(std::vector<Index> shape) : shape_(std::move(shape)) {}

  void add_link(int pos, const FiniteCStarAlgebra& middle,
                const std::vector<Mat>& right_action,
                const std::vector<Mat>& left_action);

  /// Component of v transverse to the total relation span; zero iff v is a
  /// relation.
  Vec reduce(Vec v) const;
  double residual(const Mat& cols) const;
  Index full_dim() const;

private:
  std::vector<Index> shape_;
  std::vector<std::pair<int, Mat>> links_;
};

/// Interior tensor product X (x)_A F of a Hilbert module over A with a
/// correspondence A -> B: the balanced quotient carrying the B-valued inner
/// product <x1 (x) f1 | x2 (x) f2> = <f1 | <x1|x2>.f2>. Validated, with the
/// quotient dimension cross-checked against the rank of the scalarised
/// semi-inner product. Error code "inner-product-ill-defined" when the
/// pushed form does not vanish on the relations.
struct InteriorTensor {
  BalancedTensor coords;
  HilbertModule module;  // over B
};

InteriorTensor interior_tensor(const HilbertModule& x, const Correspondence& f,
                               const Tolerance& tol = {});

/// Same construction from raw bimodule data (a module over B with a left
/// action of X's base algebra).
InteriorTensor interior_tensor_with(const HilbertModule& x,
                                    const HilbertModule& l,
                                    const std::vector<Mat>& left_action,
                                    const Tolerance& tol = {});

/// Exactness of balancing: for an A-submodule I of X (right module data) and
/// a left A-module Y, image(i (x) id) equals kernel(q (x) id) inside
/// X (x)_A Y. Throws "not-a-submodule" when I is not action-invariant.
bool exactness_check(const Subspace& submodule, Index dim_x,
                     const std::vector<Mat>& right_action_x, Index dim_y,
                     const std::vector<Mat>& left_action_y, AlgebraPtr middle,
                     const Tolerance& tol = {});

}  // namespace cstar
