// Relative one-forms Omega(B,A) = ker(mult : B (x)_A B -> B), the
// differentials d and d^1 with their Leibniz rules, Hermitian connections
// with curvature, and the dictionary between flat Hermitian connections and
// comodules over B (x)_A B.

#pragma once

#include "cstar/descent.hpp"

#include <optional>

namespace cstar {

/// Omega(B,A) inside C = B (x)_A B, with the differentials. Also owns the
/// inclusion's adjoint pair and coalgebra, which connection operations share.
struct RelativeForms {
  Inclusion inclusion;
  AdjointPairPtr pair;        // L = R = B
  CoalgebraPtr coalgebra;     // C = B (x)_A B
  Subspace omega;             // ker(eps) in C coordinates
  std::vector<Mat> left_b, right_b;  // B-bimodule actions on Omega
  Mat star_omega;             // w* = star_omega * conj(w)
  Mat d;                      // dim(Omega) x dim(B): b -> 1 (x) b - b (x) 1
  BalancedTensor OO_T;        // Omega (x)_B Omega
  Mat d1;                     // dim(OO) x dim(Omega): q o (d (x) d)
  Mat embed_b_one;            // dim(C) x dim(B): b -> b (x) 1
  Index dim() const { return omega.dim(); }
};

using FormsPtr = std::shared_ptr<const RelativeForms>;

/// Builds Omega(B,A) and verifies: Omega = ker(mult), stability under the
/// involution, both Leibniz rules, d1 o d = 0, d(b*) = -d(b)*,
/// d1(w*) = d1(w)*, and ker(d) = A. Error code "leibniz-failure".
FormsPtr relative_forms(const Inclusion& incl, Report* report = nullptr,
                        const Tolerance& tol = {});

/// A connection Z -> Z (x)_B Omega. The map is stored both in
/// Z (x) C coordinates (image constrained to Z (x) Omega; this is the
/// representation the comodule dictionary is exact on) and in Z (x) Omega
/// coordinates (the serialisation format).
struct Connection {
  FormsPtr forms;
  HilbertModule module;   // Z over B
  BalancedTensor ZC_T;    // Z (x)_B C
  BalancedTensor ZO_T;    // Z (x)_B Omega
  Mat nabla_zc;           // dim(ZC) x dim(Z)
  Mat nabla;              // dim(ZO) x dim(Z)
  Mat embed_one;          // dim(ZC) x dim(Z): z -> z (x) 1 (x) 1
  bool flat = false;
  bool hermitian = false;
  double curvature_norm = 0.0;
};

/// Verifies the Leibniz rule, evaluates the Hermitian identity and the
/// curvature, and sets the flags. Error code "leibniz-failure".
Connection validate_connection(FormsPtr forms, HilbertModule z, Mat nabla,
                               Report* report = nullptr);

/// The curvature (id_Z (x) d1 - nabla (x) id_Omega) o nabla, realised on the
/// canonical transversal of the chain Z (x) Omega (x) Omega.
struct Curvature {
  Mat reduced;   // (z * w * w) x z, zero iff the connection is flat
  double norm = 0.0;
};

Curvature curvature(const Connection& conn);

/// Flat Hermitian connection of a comodule: nabla = delta_Z - z (x) 1 (x) 1.
/// The comodule must live over the forms' coalgebra.
Connection comodule_to_connection(const Comodule& z, FormsPtr forms,
                                  Report* report = nullptr);

/// Coaction of a flat Hermitian connection: delta = nabla + z (x) 1 (x) 1.
/// Bit-exact inverse of comodule_to_connection on the stored data.
/// Error codes: "not-flat", "not-hermitian".
Comodule connection_to_comodule(const Connection& conn,
                                Report* report = nullptr);

/// The Grassmann connection nabla(z) = sum_i x_i (x) d(<x_i|z>) of a frame
/// {x_i} (reconstruction identity sum_i x_i <x_i|z> = z). When no frame is
/// supplied one is built from the Gram data by normalising the coordinate
/// basis with the inverse square root of its frame operator.
/// Error code "not-a-frame".
Connection grassmann_connection(FormsPtr forms, HilbertModule z,
                                std::optional<std::vector<Vec>> frame = {},
                                Report* report = nullptr);

/// Descent through the kernel: X = ker(nabla) as a Hilbert module over A,
/// verified against the cotensor reconstruction, with the unitary witness
/// X (x)_A B = Z.
struct ConnectionDescent {
  Subspace kernel;          // inside Z coordinates
  HilbertModule module;     // over A
  InteriorTensor induced;   // X (x)_A B
  Mat witness;              // X (x)_A B -> Z
  double witness_residual = 0.0;
};

ConnectionDescent descend_via_connection(const Connection& conn,
                                         Report* report = nullptr);

}  // namespace cstar
