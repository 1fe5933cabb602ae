// Adjoint pairs of bimodules, the coalgebra C = R (x)_A L with its coproduct
// and involution, Hermitian comodules, the comparison functor, the cotensor
// reconstruction, and both round-trip isomorphisms.

#pragma once

#include "cstar/report.hpp"
#include "cstar/tensor.hpp"

#include <memory>

namespace cstar {

/// An adjoint pair (L, R) of bimodules between A and B, with unit
/// eta : A -> K = L (x)_B R and counit eps : C = R (x)_A L -> B satisfying
/// the triangle identities. K is carried by a concrete algebra acting on L;
/// R is a Hilbert module over K. The identification l -> l* between L and R
/// is conjugate-linear, stored as a matrix applied to conjugated coordinates.
struct AdjointPair {
  AlgebraPtr A, B, K;

  HilbertModule L;                  // over B
  std::vector<Mat> left_a_on_L;     // a_k . l

  HilbertModule R_over_K;           // R with its K-valued inner product
  std::vector<Mat> left_b_on_R;     // b_k . r
  std::vector<Mat> right_a_on_R;    // r . a_k

  Mat star_L_to_R;                  // coords(l*) = star_L_to_R * conj(coords(l))

  BalancedTensor K_T;               // L (x)_B R
  BalancedTensor C_T;               // R (x)_A L
  Mat k_ident;                      // K_T quotient coords -> K coords
  Mat k_ident_inv;
  Mat eta;                          // dim(K) x dim(A)
  Vec eta_unit_full;                // representative of eta(1_A) in L (x) R
  Mat eps_full;                     // dim(B) x (dim R * dim L)
  Mat eps_q;                        // dim(B) x dim(C)
  bool faithful = false;
  Tolerance tol;

  Index dim_L() const { return L.dim; }
  Index dim_R() const { return R_over_K.dim; }
  Index dim_C() const { return C_T.dim(); }
  Index dim_K() const { return K->dim(); }

  /// L = F, R = F* for a C*-correspondence, with eta the action map into the
  /// compacts and eps(f1* (x) f2) = <f1|f2>.
  static AdjointPair from_correspondence(const Correspondence& f,
                                         Report* report = nullptr,
                                         const Tolerance& tol = {});

  /// L = R = B for a nondegenerate inclusion A in B, with eta the embedding
  /// and eps the multiplication.
  static AdjointPair from_inclusion(const Inclusion& incl,
                                    Report* report = nullptr,
                                    const Tolerance& tol = {});
};

using AdjointPairPtr = std::shared_ptr<const AdjointPair>;

/// The product mu(l1 (x) r1, l2 (x) r2) = l1.eps(r1 (x) l2) (x) r2 on
/// K-coordinates, verified associative and compatible with eta and with
/// operator composition in the compacts. Returned as a matrix acting on
/// kron(u, v).
Mat k_algebra_product(const AdjointPair& pair, Report* report = nullptr);

/// The coalgebra structure on C: coproduct delta = eta_R (x) id_L, counit
/// eps, and (for pairs coming from a *-identification) the conjugate-linear
/// involution (r (x) l)* = l* (x) *^{-1}(r).
struct Coalgebra {
  AdjointPairPtr pair;
  std::vector<Mat> left_b, right_b;  // B-bimodule actions on C coordinates
  BalancedTensor CC_T;               // C (x)_B C
  Mat coproduct;                     // dim C -> dim CC
  Mat star_c;                        // c* = star_c * conj(c)
  Mat star_cc;                       // same on C (x) C
  Index dim() const { return pair->dim_C(); }
};

using CoalgebraPtr = std::shared_ptr<const Coalgebra>;

CoalgebraPtr build_coalgebra(AdjointPairPtr pair, Report* report = nullptr);

/// A validated Hermitian comodule: a Hilbert module Z over B with a coaction
/// Z -> Z (x)_B C satisfying coassociativity, the counit law and the
/// Hermitian symmetry <z1|delta(z2)>_C = <z2|delta(z1)>_C^*.
struct Comodule {
  CoalgebraPtr coalgebra;
  HilbertModule carrier;   // Z over B
  BalancedTensor ZC_T;     // Z (x)_B C
  Mat coaction;            // dim Z -> dim(ZC)
  bool hermitian_checked = false;
};

/// Error codes: "not-b-linear", "coassociativity-failure", "counit-failure",
/// "not-hermitian".
Comodule validate_comodule(CoalgebraPtr coalgebra, HilbertModule carrier,
                           Mat coaction, Report* report = nullptr);

/// The comparison functor on objects: X -> (X (x)_A L, eta_X (x) id_L),
/// validated as a Hermitian comodule.
Comodule comparison(const HilbertModule& x, CoalgebraPtr coalgebra,
                    Report* report = nullptr);

/// The subspace of K cut out by the linear conditions
/// l1* (x) k(l2) = (k*(l1))* (x) l2 in C, verified equal to image(eta).
/// Error code "characterization-mismatch".
Subspace unit_image_subspace(const AdjointPair& pair, Report* report = nullptr);

/// The cotensor Z [x]_C R = ker(id_Z (x) eta_R - delta_Z (x) id_R), as a
/// Hilbert module over A with inner product pulled back through eta.
/// Error codes: "eta-not-faithful", "inner-product-escapes-eta(A)".
struct Cotensor {
  BalancedTensor ZR_T;       // Z (x)_B R
  Subspace kernel_subspace;  // reconstruction inside the ZR coordinates
  std::vector<Mat> action;   // right A-action on kernel coordinates
  Mat gram_k;                // dim(K) x dim^2, the K-valued inner products
  HilbertModule module;      // over A
};

Cotensor cotensor(const Comodule& z, Report* report = nullptr);

/// eta_X : X -> (X (x)_A L) [x]_C R is bijective and Gram-preserving.
/// Error codes: "not-surjective", "not-isometric".
struct ModuleRoundTrip {
  Comodule image_comodule;   // comparison(X)
  Cotensor reconstruction;
  Mat unit_map;              // X -> kernel coordinates, bijective
  double gram_residual = 0.0;
};

ModuleRoundTrip roundtrip_module(const HilbertModule& x, CoalgebraPtr coalgebra,
                                 Report* report = nullptr);

/// delta_Z maps Z unitarily onto (Z [x]_C R) (x)_A L inside Z (x)_B C.
/// Error codes: "image-mismatch", "not-unitary".
struct ComoduleRoundTrip {
  Cotensor reconstruction;
  InteriorTensor reconstructed_carrier;  // (Z [x]_C R) (x)_A L
  Mat embedding;             // its coordinates inside Z (x)_B C
  Mat unitary;               // Z -> reconstructed carrier
  double gram_residual = 0.0;
};

ComoduleRoundTrip roundtrip_comodule(const Comodule& z, Report* report = nullptr);

/// Restricts t (x) id_R to the cotensors after checking the comodule-map
/// square; asserts adjoint compatibility and the factorisation certificate.
/// Error codes: "not-a-comodule-map", "not-adjointable".
Mat descend_morphism(const Comodule& z, const Comodule& w, const Mat& t,
                     Report* report = nullptr);

/// Adjoint of a module map for the B-valued inner products; errors with
/// "not-adjointable" when the defining identity fails.
Mat module_adjoint(const HilbertModule& z, const HilbertModule& w, const Mat& t,
                   const Tolerance& tol = {});

/// Basis of the B-linear endomorphisms of Z (the commutant of the action).
std::vector<Mat> module_endomorphism_basis(const HilbertModule& z,
                                           const Tolerance& tol = {});

/// C*-norm of an adjointable map: sqrt of the spectral radius of t* t.
double module_map_norm(const HilbertModule& z, const HilbertModule& w,
                       const Mat& t, const Tolerance& tol = {});

/// M_n(B) as a concrete algebra, and M_n(Z) over it.
AlgebraPtr amplify_algebra(const AlgebraPtr& b, Index n);
HilbertModule amplify_module(const HilbertModule& z, const AlgebraPtr& bn,
                             Index n);

/// Norms of the amplifications of t at matrix levels 1..levels, computed
/// independently at each level from the amplified module data.
std::vector<double> cb_audit(const HilbertModule& z, const HilbertModule& w,
                             const Mat& t, int levels, Report* report = nullptr,
                             const std::string& label = "map");

}  // namespace cstar
