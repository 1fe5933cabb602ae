#include "cstar/descent.hpp"

#include <cmath>

namespace cstar {

namespace {

// act_of over an arbitrary matrix list.
Mat combo(const std::vector<Mat>& mats, const Vec& coeffs) {
  Mat m = Mat::Zero(mats.front().rows(), mats.front().cols());
  for (Index k = 0; k < coeffs.size(); ++k)
    if (coeffs(k) != Cplx(0, 0)) m += coeffs(k) * mats[k];
  return m;
}

double matrix_scale(const Mat& m) { return std::max(1.0, m.norm()); }

// Shared construction once the raw bimodule data of an adjoint pair is in
// place: tensor quotients, counit, identification of L (x)_B R with K, the
// unit representative, the K-valued structure of R, triangle identities.
void finish_pair(AdjointPair& p, Report* report) {
  const Index mL = p.L.dim;
  const Index mR = static_cast<Index>(p.star_L_to_R.rows());
  const Index dB = p.B->dim();
  const Index dA = p.A->dim();
  const Tolerance& tol = p.tol;

  if (p.K->ambient_dim() != mL)
    throw ValidationError("shape-mismatch", "K must act on L's coordinates");

  p.K_T = balanced_tensor(mL, p.L.action, mR, p.left_b_on_R, p.B, tol);
  p.C_T = balanced_tensor(mR, p.right_a_on_R, mL, p.left_a_on_L, p.A, tol);

  Mat s_inv = Eigen::FullPivLU<Mat>(p.star_L_to_R).inverse();

  // Counit on representatives: eps(r_p (x) l_j) = <s^{-1}(r_p) | l_j>_B.
  p.eps_full = Mat::Zero(dB, mR * mL);
  for (Index pp = 0; pp < mR; ++pp)
    for (Index j = 0; j < mL; ++j) {
      Vec e = Vec::Zero(dB);
      for (Index u = 0; u < mL; ++u)
        e += s_inv(u, pp) * p.L.gram_entry(u, j);
      p.eps_full.col(pp * mL + j) = e;
    }
  require(report, "counit-well-defined",
          "eps vanishes on the balancing relations of C",
          p.C_T.relation_basis.cols()
              ? (p.eps_full * p.C_T.relation_basis).norm()
              : 0.0,
          tol.threshold(matrix_scale(p.eps_full)), "ill-defined-quotient-map");
  p.eps_q = p.eps_full * p.C_T.quotient_basis;

  // eps-act cache: eps_act[p][h] = action on L of eps(r_p (x) l_h).
  std::vector<std::vector<Mat>> eps_act(mR, std::vector<Mat>(mL));
  for (Index pp = 0; pp < mR; ++pp)
    for (Index h = 0; h < mL; ++h)
      eps_act[pp][h] = p.L.act_of(p.eps_full.col(pp * mL + h));

  // Identification of L (x)_B R with K: l (x) r acts on L by h -> l.eps(r (x) h).
  Mat k_ident_full(p.K->dim(), mL * mR);
  for (Index i = 0; i < mL; ++i)
    for (Index pp = 0; pp < mR; ++pp) {
      Mat op(mL, mL);
      for (Index h = 0; h < mL; ++h) op.col(h) = eps_act[pp][h].col(i);
      auto c = p.K->coordinates(op);
      if (!c)
        throw ValidationError("ill-defined-quotient-map",
                              "L (x) R does not act inside K");
      k_ident_full.col(i * mR + pp) = *c;
    }
  require(report, "k-identification-well-defined",
          "the action of L (x) R on L vanishes on relations",
          p.K_T.relation_basis.cols()
              ? (k_ident_full * p.K_T.relation_basis).norm()
              : 0.0,
          tol.threshold(matrix_scale(k_ident_full)),
          "ill-defined-quotient-map");
  if (p.K_T.dim() != p.K->dim())
    throw ValidationError("rank-mismatch",
                          "dim(L (x)_B R) differs from dim K");
  p.k_ident = k_ident_full * p.K_T.quotient_basis;
  Eigen::FullPivLU<Mat> lu(p.k_ident);
  if (!lu.isInvertible())
    throw ValidationError("rank-mismatch", "L (x)_B R -> K is not bijective");
  p.k_ident_inv = lu.inverse();

  p.eta_unit_full =
      p.K_T.quotient_basis * (p.k_ident_inv * (p.eta * p.A->unit()));
  p.faithful = (rank(p.eta, tol) == dA);

  // R as a Hilbert module over K: <r_i|r_j>_K is the operator
  // h -> s^{-1}(r_i).eps(r_j (x) h); the right K-action is
  // r.k = s(k* . s^{-1}(r)).
  Mat gram_r(p.K->dim(), mR * mR);
  for (Index i = 0; i < mR; ++i) {
    Vec si = s_inv.col(i).conjugate();
    for (Index j = 0; j < mR; ++j) {
      Mat op(mL, mL);
      for (Index h = 0; h < mL; ++h) op.col(h) = eps_act[j][h] * si;
      auto c = p.K->coordinates(op);
      if (!c)
        throw ValidationError("ill-defined-quotient-map",
                              "R-valued inner product escapes K");
      gram_r.col(i * mR + j) = *c;
    }
  }
  std::vector<Mat> r_action(p.K->dim());
  for (Index t = 0; t < p.K->dim(); ++t) {
    Mat m = combo(p.K->basis(), p.K->involute(Vec::Unit(p.K->dim(), t)));
    r_action[t] = p.star_L_to_R * m.conjugate() * s_inv;
  }
  p.R_over_K = validate_module(p.K, std::move(r_action), std::move(gram_r), tol);

  // Triangle identities. On R: (eps (x) id_R)(id_R (x) eta) = id_R; on L:
  // (id_L (x) eps)(eta (x) id_L) = id_L, through the unit representative.
  const Vec& w = p.eta_unit_full;
  Mat t1 = Mat::Zero(mR, mR);
  for (Index pp = 0; pp < mR; ++pp)
    for (Index a = 0; a < mL; ++a) {
      Mat lb = combo(p.left_b_on_R, p.eps_full.col(pp * mL + a));
      Vec wa(mR);
      for (Index b = 0; b < mR; ++b) wa(b) = w(a * mR + b);
      t1.col(pp) += lb * wa;
    }
  require(report, "triangle-on-R", "(eps (x) id) o (id (x) eta) = id on R",
          (t1 - Mat::Identity(mR, mR)).norm(), tol.threshold(1.0),
          "triangle-identity-failure");

  Mat t2 = Mat::Zero(mL, mL);
  for (Index j = 0; j < mL; ++j)
    for (Index b = 0; b < mR; ++b) {
      Mat ra = combo(p.L.action, p.eps_full.col(b * mL + j));
      Vec wb(mL);
      for (Index a = 0; a < mL; ++a) wb(a) = w(a * mR + b);
      t2.col(j) += ra * wb;
    }
  require(report, "triangle-on-L", "(id (x) eps) o (eta (x) id) = id on L",
          (t2 - Mat::Identity(mL, mL)).norm(), tol.threshold(1.0),
          "triangle-identity-failure");
}

}  // namespace

AdjointPair AdjointPair::from_correspondence(const Correspondence& f,
                                             Report* report,
                                             const Tolerance& tol) {
  AdjointPair p;
  p.tol = tol;
  p.A = f.left_algebra;
  p.B = f.module.algebra;
  p.K = f.compacts_algebra;
  p.L = f.module;
  p.left_a_on_L = f.left_action;
  AdjointModule adj = adjoint_module(f, tol);
  p.left_b_on_R = adj.left_b_action;
  p.right_a_on_R = adj.right_a_action;
  p.star_L_to_R = adj.star_from_module;
  p.eta = f.eta;
  finish_pair(p, report);
  return p;
}

AdjointPair AdjointPair::from_inclusion(const Inclusion& incl, Report* report,
                                        const Tolerance& tol) {
  AdjointPair p;
  p.tol = tol;
  p.A = incl.sub;
  p.B = incl.amb;
  p.L = standard_module(incl.amb);
  const Index dA = incl.sub->dim();
  const Index dB = incl.amb->dim();
  p.left_a_on_L.resize(dA);
  p.right_a_on_R.resize(dA);
  for (Index k = 0; k < dA; ++k) {
    p.left_a_on_L[k] = incl.amb->lmul_of(incl.embedding.col(k));
    p.right_a_on_R[k] = incl.amb->rmul_of(incl.embedding.col(k));
  }
  p.left_b_on_R.resize(dB);
  for (Index k = 0; k < dB; ++k) p.left_b_on_R[k] = incl.amb->lmul(k);
  p.star_L_to_R = incl.amb->invol_matrix();
  p.K = compacts(p.L, tol);
  p.eta = Mat(p.K->dim(), dA);
  for (Index k = 0; k < dA; ++k) {
    auto c = p.K->coordinates(incl.amb->lmul_of(incl.embedding.col(k)));
    if (!c)
      throw ValidationError("degenerate", "embedding escapes the compacts");
    p.eta.col(k) = *c;
  }
  finish_pair(p, report);
  return p;
}

Mat k_algebra_product(const AdjointPair& pair, Report* report) {
  const Index mL = pair.dim_L(), mR = pair.star_L_to_R.rows();
  const Index k = pair.K_T.dim();
  const Tolerance& tol = pair.tol;

  std::vector<Mat> lifts(k);
  for (Index a = 0; a < k; ++a)
    lifts[a] = as_matrix(pair.K_T.lift(Vec::Unit(k, a)), mL, mR);

  Mat mu(k, k * k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) {
      Mat out = Mat::Zero(mL, mR);
      for (Index pp = 0; pp < mR; ++pp)
        for (Index j = 0; j < mL; ++j) {
          Mat mb = combo(pair.L.action, pair.eps_full.col(pp * mL + j));
          out += (mb * lifts[a].col(pp)) * lifts[b].row(j);
        }
      mu.col(a * k + b) = pair.K_T.project(as_vector(out));
    }

  // Associativity and unit/eta compatibility.
  Mat ik = Mat::Identity(k, k);
  double assoc = (mu * kron(mu, ik) - mu * kron(ik, mu)).norm();
  require(report, "k-product-associative", "mu(mu(u,v),w) = mu(u,mu(v,w))",
          assoc, tol.threshold(matrix_scale(mu) * matrix_scale(mu)),
          "associativity-failure");

  Mat eta_t = pair.k_ident_inv * pair.eta;
  const Index dA = pair.A->dim();
  double eta_mult = 0.0;
  for (Index i = 0; i < dA; ++i)
    for (Index j = 0; j < dA; ++j) {
      Vec lhs = mu * kron(Mat(eta_t.col(i)), Mat(eta_t.col(j))).col(0);
      Vec rhs = eta_t * pair.A->multiply(Vec::Unit(dA, i), Vec::Unit(dA, j));
      eta_mult = std::max(eta_mult, (lhs - rhs).norm());
    }
  require(report, "eta-multiplicative", "eta(x y) = mu(eta(x), eta(y))",
          eta_mult, tol.threshold(matrix_scale(eta_t)),
          "associativity-failure");

  Vec one_t = eta_t * pair.A->unit();
  double unit_res = 0.0;
  for (Index a = 0; a < k; ++a) {
    Vec u = Vec::Unit(k, a);
    unit_res = std::max(
        unit_res, (mu * kron(Mat(one_t), Mat(u)).col(0) - u).norm());
    unit_res = std::max(
        unit_res, (mu * kron(Mat(u), Mat(one_t)).col(0) - u).norm());
  }
  require(report, "eta-unital", "eta(1_A) is a two-sided unit for mu",
          unit_res, tol.threshold(1.0), "associativity-failure");

  // mu agrees with operator composition under the identification with K.
  double agree = 0.0;
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) {
      Vec lhs = pair.k_ident * (mu * kron(Mat(ik.col(a)), Mat(ik.col(b))).col(0));
      Vec rhs = pair.K->multiply(pair.k_ident.col(a), pair.k_ident.col(b));
      agree = std::max(agree, (lhs - rhs).norm());
    }
  require(report, "k-product-agrees-with-compacts",
          "mu corresponds to composition of operators on L", agree,
          tol.threshold(matrix_scale(pair.k_ident) *
                        matrix_scale(pair.k_ident)),
          "associativity-failure");
  return mu;
}

CoalgebraPtr build_coalgebra(AdjointPairPtr pair, Report* report) {
  auto co = std::make_shared<Coalgebra>();
  co->pair = pair;
  const AdjointPair& p = *pair;
  const Index mL = p.dim_L(), mR = p.star_L_to_R.rows();
  const Index c = p.dim_C();
  const Index full_c = mR * mL;
  const Tolerance& tol = p.tol;

  co->left_b.resize(p.B->dim());
  co->right_b.resize(p.B->dim());
  const Mat il = Mat::Identity(mL, mL), ir = Mat::Identity(mR, mR);
  for (Index k = 0; k < p.B->dim(); ++k) {
    co->left_b[k] = push_pair(p.C_T, p.C_T, p.left_b_on_R[k], il, tol,
                              "left B-action on C");
    co->right_b[k] =
        push_pair(p.C_T, p.C_T, ir, p.L.action[k], tol, "right B-action on C");
  }
  co->CC_T = balanced_tensor(c, co->right_b, c, co->left_b, p.B, tol);

  // Coproduct: r (x) l -> r (x) w (x) l with w the unit representative.
  const Vec& w = p.eta_unit_full;
  auto coproduct_of = [&](const Vec& full) {
    Mat v = as_matrix(full, mR, mL);
    Mat m4 = Mat::Zero(full_c, full_c);
    for (Index pp = 0; pp < mR; ++pp)
      for (Index j = 0; j < mL; ++j) {
        if (v(pp, j) == Cplx(0, 0)) continue;
        for (Index a = 0; a < mL; ++a)
          for (Index b = 0; b < mR; ++b)
            m4(pp * mL + a, b * mL + j) += v(pp, j) * w(a * mR + b);
      }
    Mat reduced = p.C_T.quotient_basis.adjoint() * m4 *
                  p.C_T.quotient_basis.conjugate();
    return co->CC_T.project(as_vector(reduced));
  };
  co->coproduct = Mat(co->CC_T.dim(), c);
  for (Index a = 0; a < c; ++a)
    co->coproduct.col(a) = coproduct_of(p.C_T.quotient_basis.col(a));
  double ill = 0.0;
  for (Index r = 0; r < p.C_T.relation_basis.cols(); ++r)
    ill = std::max(ill, coproduct_of(p.C_T.relation_basis.col(r)).norm());
  require(report, "coproduct-well-defined",
          "delta vanishes on the balancing relations", ill,
          tol.threshold(matrix_scale(co->coproduct)),
          "ill-defined-quotient-map");

  // Coassociativity, through the exact membership projector on C^(x)3.
  Mat delta_hat = co->CC_T.lift_cols(co->coproduct);
  Mat ic = Mat::Identity(c, c);
  Mat side1 = kron(delta_hat, ic) * delta_hat;
  Mat side2 = kron(ic, delta_hat) * delta_hat;
  TensorChain chain({c, c, c});
  chain.add_link(0, *p.B, co->right_b, co->left_b);
  chain.add_link(1, *p.B, co->right_b, co->left_b);
  require(report, "coassociativity",
          "(delta (x) id) o delta = (id (x) delta) o delta",
          chain.residual(side1 - side2),
          tol.threshold(matrix_scale(delta_hat)), "coassociativity-failure");

  // Counit laws.
  Mat m_eps_id(c, c * c), m_id_eps(c, c * c);
  for (Index u = 0; u < c; ++u)
    for (Index v = 0; v < c; ++v) {
      Vec col1 = Vec::Zero(c), col2 = Vec::Zero(c);
      for (Index k = 0; k < p.B->dim(); ++k) {
        col1 += p.eps_q(k, u) * co->left_b[k].col(v);
        col2 += p.eps_q(k, v) * co->right_b[k].col(u);
      }
      m_eps_id.col(u * c + v) = col1;
      m_id_eps.col(u * c + v) = col2;
    }
  require(report, "counit-left", "(eps (x) id) o delta = id",
          (m_eps_id * delta_hat - ic).norm(), tol.threshold(1.0),
          "counit-failure");
  require(report, "counit-right", "(id (x) eps) o delta = id",
          (m_id_eps * delta_hat - ic).norm(), tol.threshold(1.0),
          "counit-failure");

  // Bimodule map property of delta and eps.
  double bimod = 0.0;
  for (Index k = 0; k < p.B->dim(); ++k) {
    Mat lcc = push_pair(co->CC_T, co->CC_T, co->left_b[k], ic, tol,
                        "left B-action on C (x) C");
    Mat rcc = push_pair(co->CC_T, co->CC_T, ic, co->right_b[k], tol,
                        "right B-action on C (x) C");
    bimod = std::max(bimod,
                     (co->coproduct * co->left_b[k] - lcc * co->coproduct).norm());
    bimod = std::max(
        bimod, (co->coproduct * co->right_b[k] - rcc * co->coproduct).norm());
    bimod = std::max(bimod,
                     (p.eps_q * co->left_b[k] - p.B->lmul(k) * p.eps_q).norm());
    bimod = std::max(bimod,
                     (p.eps_q * co->right_b[k] - p.B->rmul(k) * p.eps_q).norm());
  }
  require(report, "structure-maps-bimodule",
          "delta and eps are B-bimodule maps", bimod,
          tol.threshold(matrix_scale(co->coproduct)), "coassociativity-failure");

  // Involution (r (x) l)* = l* (x) s^{-1}(r), conjugate-linear.
  Mat s = p.star_L_to_R;
  Mat s_inv = Eigen::FullPivLU<Mat>(s).inverse();
  auto star_full = [&](const Vec& full) {
    Mat v = as_matrix(full, mR, mL);
    return as_vector(Mat(s * v.adjoint() * s_inv.adjoint()));
  };
  co->star_c = Mat(c, c);
  for (Index a = 0; a < c; ++a)
    co->star_c.col(a) = p.C_T.project(star_full(p.C_T.quotient_basis.col(a)));
  double star_ill = 0.0;
  for (Index r = 0; r < p.C_T.relation_basis.cols(); ++r)
    star_ill = std::max(
        star_ill, p.C_T.project(star_full(p.C_T.relation_basis.col(r))).norm());
  require(report, "involution-well-defined",
          "the involution preserves the relation span", star_ill,
          tol.threshold(matrix_scale(co->star_c)), "ill-defined-quotient-map");
  require(report, "involution-involutive", "c** = c",
          (co->star_c * co->star_c.conjugate() - ic).norm(),
          tol.threshold(1.0), "ill-defined-quotient-map");

  double star_bimod = 0.0;
  const Mat& vb = p.B->invol_matrix();
  for (Index k = 0; k < p.B->dim(); ++k) {
    Mat lhs = co->star_c * co->left_b[k].conjugate();
    Mat rhs = Mat::Zero(c, c);
    for (Index l = 0; l < p.B->dim(); ++l)
      rhs += vb(l, k) * co->right_b[l] * co->star_c;
    star_bimod = std::max(star_bimod, (lhs - rhs).norm());
  }
  require(report, "involution-bimodule", "(b.c)* = c*.b*", star_bimod,
          tol.threshold(matrix_scale(co->star_c)), "ill-defined-quotient-map");

  co->star_cc = Mat(co->CC_T.dim(), co->CC_T.dim());
  auto star_cc_full = [&](const Vec& ccvec) {
    Mat u = as_matrix(ccvec, c, c);
    return as_vector(Mat(co->star_c * u.adjoint() * co->star_c.transpose()));
  };
  for (Index a = 0; a < co->CC_T.dim(); ++a)
    co->star_cc.col(a) =
        co->CC_T.project(star_cc_full(co->CC_T.quotient_basis.col(a)));

  require(report, "coproduct-star-compatible", "delta(c*) = delta(c)*",
          (co->coproduct * co->star_c - co->star_cc * co->coproduct.conjugate())
              .norm(),
          tol.threshold(matrix_scale(co->coproduct)),
          "coassociativity-failure");
  require(report, "counit-star-compatible", "eps(c*) = eps(c)*",
          (p.eps_q * co->star_c - vb * p.eps_q.conjugate()).norm(),
          tol.threshold(matrix_scale(p.eps_q)), "counit-failure");

  return co;
}

Comodule validate_comodule(CoalgebraPtr coalgebra, HilbertModule carrier,
                           Mat coaction, Report* report) {
  const Coalgebra& co = *coalgebra;
  const AdjointPair& p = *co.pair;
  const Tolerance& tol = p.tol;
  const Index z = carrier.dim;
  const Index c = co.dim();

  Comodule zc;
  zc.coalgebra = coalgebra;
  zc.carrier = std::move(carrier);
  zc.ZC_T = balanced_tensor(z, zc.carrier.action, c, co.left_b, p.B, tol);
  zc.coaction = std::move(coaction);
  if (zc.coaction.rows() != zc.ZC_T.dim() || zc.coaction.cols() != z)
    throw ValidationError("shape-mismatch",
                          "coaction must map Z to Z (x)_B C coordinates");

  double blin = 0.0;
  for (Index k = 0; k < p.B->dim(); ++k) {
    Mat rzc = push_pair(zc.ZC_T, zc.ZC_T, Mat::Identity(z, z), co.right_b[k],
                        tol, "right B-action on Z (x) C");
    blin = std::max(
        blin, (zc.coaction * zc.carrier.action[k] - rzc * zc.coaction).norm());
  }
  require(report, "coaction-b-linear", "delta_Z(z.b) = delta_Z(z).b", blin,
          tol.threshold(matrix_scale(zc.coaction)), "not-b-linear");

  Mat delta_hat = zc.ZC_T.lift_cols(zc.coaction);

  // The counit law is checked first: a rescaled coaction must surface as a
  // counit failure, not as broken coassociativity.
  Mat m_eps(z, z * c);
  for (Index u = 0; u < z; ++u)
    for (Index v = 0; v < c; ++v) {
      Vec col = Vec::Zero(z);
      for (Index k = 0; k < p.B->dim(); ++k)
        col += p.eps_q(k, v) * zc.carrier.action[k].col(u);
      m_eps.col(u * c + v) = col;
    }
  require(report, "coaction-counit", "eps_Z o delta_Z = id_Z",
          (m_eps * delta_hat - Mat::Identity(z, z)).norm(),
          tol.threshold(1.0), "counit-failure");

  Mat delta_c_hat = co.CC_T.lift_cols(co.coproduct);
  Mat side1 = kron(Mat::Identity(z, z), delta_c_hat) * delta_hat;
  Mat side2 = kron(delta_hat, Mat::Identity(c, c)) * delta_hat;
  TensorChain chain({z, c, c});
  chain.add_link(0, *p.B, zc.carrier.action, co.left_b);
  chain.add_link(1, *p.B, co.right_b, co.left_b);
  require(report, "coaction-coassociative",
          "(id (x) delta) o delta_Z = (delta_Z (x) id) o delta_Z",
          chain.residual(side1 - side2),
          tol.threshold(matrix_scale(delta_hat)), "coassociativity-failure");

  // Hermitian symmetry through the C-valued pairing.
  std::vector<Mat> pair_mats(z * z);
  for (Index i = 0; i < z; ++i)
    for (Index u = 0; u < z; ++u)
      pair_mats[i * z + u] = combo(co.left_b, zc.carrier.gram_entry(i, u));
  double herm = 0.0;
  std::vector<Mat> h(z, Mat::Zero(c, z));
  for (Index j = 0; j < z; ++j) {
    Mat mj = as_matrix(delta_hat.col(j), z, c);
    for (Index i = 0; i < z; ++i) {
      Vec hij = Vec::Zero(c);
      for (Index u = 0; u < z; ++u)
        hij += pair_mats[i * z + u] * mj.row(u).transpose();
      h[i].col(j) = hij;
    }
  }
  for (Index i = 0; i < z; ++i)
    for (Index j = 0; j < z; ++j)
      herm = std::max(
          herm, (h[i].col(j) - co.star_c * h[j].col(i).conjugate()).norm());
  require(report, "coaction-hermitian",
          "<z1|delta(z2)>_C = <z2|delta(z1)>_C^*", herm,
          tol.threshold(matrix_scale(delta_hat)), "not-hermitian");

  zc.hermitian_checked = true;
  return zc;
}

Comodule comparison(const HilbertModule& x, CoalgebraPtr coalgebra,
                    Report* report) {
  const AdjointPair& p = *coalgebra->pair;
  const Tolerance& tol = p.tol;
  if (x.algebra != p.A)
    throw ValidationError("shape-mismatch", "comparison needs a module over A");
  InteriorTensor it = interior_tensor_with(x, p.L, p.left_a_on_L, tol);
  const Index mx = x.dim, mL = p.dim_L(), mR = p.star_L_to_R.rows();
  const Index full_y = mx * mL, full_c = mR * mL;
  const Vec& w = p.eta_unit_full;

  BalancedTensor zct = balanced_tensor(it.module.dim, it.module.action,
                                       coalgebra->dim(), coalgebra->left_b,
                                       p.B, tol);
  auto coact_of = [&](const Vec& yfull) {
    Mat v = as_matrix(yfull, mx, mL);
    Mat m4 = Mat::Zero(full_y, full_c);
    for (Index u = 0; u < mx; ++u)
      for (Index j = 0; j < mL; ++j) {
        if (v(u, j) == Cplx(0, 0)) continue;
        for (Index a = 0; a < mL; ++a)
          for (Index b = 0; b < mR; ++b)
            m4(u * mL + a, b * mL + j) += v(u, j) * w(a * mR + b);
      }
    Mat grouped = it.coords.quotient_basis.adjoint() * m4 *
                  p.C_T.quotient_basis.conjugate();
    return zct.project(as_vector(grouped));
  };

  Mat coaction(zct.dim(), it.module.dim);
  for (Index a = 0; a < it.module.dim; ++a)
    coaction.col(a) = coact_of(it.coords.quotient_basis.col(a));
  double ill = 0.0;
  for (Index r = 0; r < it.coords.relation_basis.cols(); ++r)
    ill = std::max(ill, coact_of(it.coords.relation_basis.col(r)).norm());
  require(report, "comparison-coaction-well-defined",
          "eta_X (x) id_L vanishes on relations", ill,
          tol.threshold(matrix_scale(coaction)), "ill-defined-quotient-map");

  return validate_comodule(coalgebra, it.module, std::move(coaction), report);
}

Subspace unit_image_subspace(const AdjointPair& pair, Report* report) {
  const Tolerance& tol = pair.tol;
  const Index mL = pair.dim_L(), mR = pair.star_L_to_R.rows();
  const Index dK = pair.dim_K();
  const Index c = pair.dim_C();
  const Mat& s = pair.star_L_to_R;
  const Mat& vk = pair.K->invol_matrix();

  // Condition on k: l1* (x) k(l2) = (k*(l1))* (x) l2 in C, for all l1, l2.
  Mat cond(mL * mL * c, dK);
  std::vector<Mat> conj_basis(dK);
  for (Index t = 0; t < dK; ++t) conj_basis[t] = pair.K->basis()[t].conjugate();
  for (Index i = 0; i < mL; ++i)
    for (Index j = 0; j < mL; ++j) {
      Mat block(c, dK);
      for (Index t = 0; t < dK; ++t) {
        Vec lhs = kron(Mat(s.col(i)), Mat(pair.K->basis()[t].col(j))).col(0);
        Vec rhs = Vec::Zero(mR * mL);
        for (Index u = 0; u < dK; ++u)
          if (vk(u, t) != Cplx(0, 0))
            rhs += std::conj(vk(u, t)) *
                   kron(Mat((s * conj_basis[u].col(i)).eval()),
                        Mat(Vec::Unit(mL, j)))
                       .col(0);
        block.col(t) = pair.C_T.project((lhs - rhs).eval());
      }
      cond.middleRows((i * mL + j) * c, c) = block;
    }
  Subspace cut = kernel(cond, tol);
  Subspace image = column_space(pair.eta, tol);
  double residual = (cut.dim() == image.dim())
                        ? op_norm(cut.projector() - image.projector())
                        : 1.0;
  require(report, "unit-image-characterization",
          "{k : l1* (x) k l2 = (k* l1)* (x) l2} = image(eta)", residual,
          tol.threshold(1.0), "characterization-mismatch");
  return cut;
}

Cotensor cotensor(const Comodule& zc, Report* report) {
  const Coalgebra& co = *zc.coalgebra;
  const AdjointPair& p = *co.pair;
  const Tolerance& tol = p.tol;
  if (!p.faithful)
    throw ValidationError("eta-not-faithful",
                          "cotensor requires an injective unit map");
  const Index z = zc.carrier.dim;
  const Index mL = p.dim_L(), mR = p.star_L_to_R.rows();
  const Index c = co.dim();
  const Vec& w = p.eta_unit_full;

  Cotensor ct;
  ct.ZR_T = balanced_tensor(z, zc.carrier.action, mR, p.left_b_on_R, p.B, tol);
  const Index zr = ct.ZR_T.dim();

  // delta_Z with a fully lifted C-factor: Z -> Z (x) C full coordinates.
  Mat delta_full(z * mR * mL, z);
  {
    Mat delta_hat = zc.ZC_T.lift_cols(zc.coaction);
    for (Index u = 0; u < z; ++u) {
      Mat m = as_matrix(delta_hat.col(u), z, c);
      delta_full.col(u) = as_vector(Mat(m * p.C_T.quotient_basis.transpose()));
    }
  }

  // Difference of id_Z (x) eta_R and delta_Z (x) id_R on Z (x) R, valued in
  // the chain (Z, R, L, R).
  const Index chain_dim = z * mR * mL * mR;
  Mat diff(chain_dim, zr);
  for (Index col = 0; col < zr; ++col) {
    Mat v = as_matrix(ct.ZR_T.lift(Vec::Unit(zr, col)), z, mR);
    Vec out = Vec::Zero(chain_dim);
    for (Index u = 0; u < z; ++u)
      for (Index pp = 0; pp < mR; ++pp) {
        if (v(u, pp) == Cplx(0, 0)) continue;
        for (Index a = 0; a < mL; ++a)
          for (Index b = 0; b < mR; ++b)
            out(((u * mR + pp) * mL + a) * mR + b) += v(u, pp) * w(a * mR + b);
      }
    for (Index pp = 0; pp < mR; ++pp) {
      Vec g = delta_full * v.col(pp);
      for (Index gidx = 0; gidx < z * mR * mL; ++gidx)
        out(gidx * mR + pp) -= g(gidx);
    }
    diff.col(col) = out;
  }

  TensorChain chain({z, mR, mL, mR});
  chain.add_link(0, *p.B, zc.carrier.action, p.left_b_on_R);
  chain.add_link(1, *p.A, p.right_a_on_R, p.left_a_on_L);
  chain.add_link(2, *p.B, p.L.action, p.left_b_on_R);
  Mat reduced(chain_dim, zr);
  for (Index col = 0; col < zr; ++col)
    reduced.col(col) = chain.reduce(diff.col(col));
  ct.kernel_subspace = kernel(reduced, tol);
  const Index dim = ct.kernel_subspace.dim();
  const Mat& kappa = ct.kernel_subspace.basis;

  // Right A-module structure on the kernel.
  ct.action.resize(p.A->dim());
  double inv_residual = 0.0;
  for (Index k = 0; k < p.A->dim(); ++k) {
    Mat r = push_pair(ct.ZR_T, ct.ZR_T, Mat::Identity(z, z),
                      p.right_a_on_R[k], tol, "right A-action on Z (x) R");
    Mat moved = r * kappa;
    inv_residual = std::max(
        inv_residual, (moved - kappa * (kappa.adjoint() * moved)).norm());
    ct.action[k] = kappa.adjoint() * moved;
  }
  require(report, "cotensor-submodule",
          "the cotensor kernel is an A-submodule of Z (x) R", inv_residual,
          tol.threshold(1.0), "not-a-submodule");

  // K-valued inner products of kernel elements, pulled back through eta.
  std::vector<Mat> lifts(dim);
  for (Index a = 0; a < dim; ++a)
    lifts[a] = as_matrix(ct.ZR_T.lift(kappa.col(a)), z, mR);
  ct.gram_k = Mat(p.dim_K(), dim * dim);
  for (Index a = 0; a < dim; ++a)
    for (Index b = 0; b < dim; ++b) {
      Vec val = Vec::Zero(p.dim_K());
      for (Index u = 0; u < z; ++u)
        for (Index u2 = 0; u2 < z; ++u2) {
          Vec t = p.B->involute(zc.carrier.gram_entry(u, u2));
          Mat m = combo(p.left_b_on_R, t);
          val += p.R_over_K.inner((m * lifts[a].row(u).transpose()).eval(),
                                  lifts[b].row(u2).transpose().eval());
        }
      ct.gram_k.col(a * dim + b) = val;
    }

  SpanSolver eta_solver(p.eta, tol);
  Mat gram_a(p.A->dim(), dim * dim);
  double escape = 0.0;
  for (Index idx = 0; idx < dim * dim; ++idx) {
    double res = 0.0;
    gram_a.col(idx) = eta_solver.solve(ct.gram_k.col(idx), &res);
    escape = std::max(escape, res);
  }
  require(report, "cotensor-inner-products-in-eta(A)",
          "<xi|zeta>_K lies in eta(A)", escape,
          tol.threshold(matrix_scale(ct.gram_k)),
          "inner-product-escapes-eta(A)");

  ct.module = validate_module(p.A, ct.action, std::move(gram_a), tol);
  return ct;
}

ModuleRoundTrip roundtrip_module(const HilbertModule& x, CoalgebraPtr coalgebra,
                                 Report* report) {
  const AdjointPair& p = *coalgebra->pair;
  const Tolerance& tol = p.tol;

  ModuleRoundTrip rt;
  rt.image_comodule = comparison(x, coalgebra, report);
  rt.reconstruction = cotensor(rt.image_comodule, report);

  const Index mx = x.dim, mL = p.dim_L(), mR = p.star_L_to_R.rows();
  const Vec& w = p.eta_unit_full;

  // eta_X(e_i) = e_i (x) w, grouped as (X (x) L) (x) R; the Y-quotient
  // coordinates come from the comparison's interior tensor.
  InteriorTensor it = interior_tensor_with(x, p.L, p.left_a_on_L, tol);
  Mat unit_map(rt.reconstruction.kernel_subspace.dim(), mx);
  double membership = 0.0;
  for (Index i = 0; i < mx; ++i) {
    Mat m3 = Mat::Zero(mx * mL, mR);
    for (Index a = 0; a < mL; ++a)
      for (Index b = 0; b < mR; ++b) m3(i * mL + a, b) = w(a * mR + b);
    Vec grouped = as_vector(Mat(it.coords.quotient_basis.adjoint() * m3));
    Vec in_zr = rt.reconstruction.ZR_T.project(grouped);
    Vec coeffs = rt.reconstruction.kernel_subspace.basis.adjoint() * in_zr;
    membership = std::max(
        membership,
        (in_zr - rt.reconstruction.kernel_subspace.basis * coeffs).norm());
    unit_map.col(i) = coeffs;
  }
  require(report, "unit-map-lands-in-cotensor",
          "eta_X maps into the reconstructed module", membership,
          tol.threshold(1.0), "not-surjective");
  require(report, "unit-map-bijective",
          "eta_X : X -> reconstruction is bijective",
          (rt.reconstruction.kernel_subspace.dim() == mx &&
           rank(unit_map, tol) == mx)
              ? 0.0
              : 1.0,
          0.5, "not-surjective");

  double gram_res = 0.0;
  for (Index i = 0; i < mx; ++i)
    for (Index j = 0; j < mx; ++j)
      gram_res = std::max(
          gram_res,
          (rt.reconstruction.module.inner(unit_map.col(i), unit_map.col(j)) -
           x.gram_entry(i, j))
              .norm());
  require(report, "unit-map-isometric", "<eta_X(x)|eta_X(y)>_A = <x|y>_A",
          gram_res, tol.threshold(matrix_scale(x.gram)), "not-isometric");
  rt.unit_map = std::move(unit_map);
  rt.gram_residual = gram_res;
  return rt;
}

ComoduleRoundTrip roundtrip_comodule(const Comodule& zc, Report* report) {
  const Coalgebra& co = *zc.coalgebra;
  const AdjointPair& p = *co.pair;
  const Tolerance& tol = p.tol;
  const Index z = zc.carrier.dim;
  const Index mL = p.dim_L(), mR = p.star_L_to_R.rows();
  const Index full_c = mR * mL;

  ComoduleRoundTrip rt;
  rt.reconstruction = cotensor(zc, report);
  const Subspace& kappa = rt.reconstruction.kernel_subspace;
  const Index dim = kappa.dim();

  rt.reconstructed_carrier =
      interior_tensor_with(rt.reconstruction.module, p.L, p.left_a_on_L, tol);

  std::vector<Mat> kappa_lifts(dim);
  for (Index a = 0; a < dim; ++a)
    kappa_lifts[a] =
        as_matrix(rt.reconstruction.ZR_T.lift(kappa.basis.col(a)), z, mR);

  auto embed_of = [&](const Vec& wfull) {
    Mat v = as_matrix(wfull, dim, mL);
    Mat m = Mat::Zero(z, full_c);
    for (Index a = 0; a < dim; ++a)
      for (Index j = 0; j < mL; ++j) {
        if (v(a, j) == Cplx(0, 0)) continue;
        for (Index u = 0; u < z; ++u)
          for (Index pp = 0; pp < mR; ++pp)
            m(u, pp * mL + j) += v(a, j) * kappa_lifts[a](u, pp);
      }
    Mat grouped = m * p.C_T.quotient_basis.conjugate();
    return zc.ZC_T.project(as_vector(grouped));
  };

  const Index wdim = rt.reconstructed_carrier.module.dim;
  rt.embedding = Mat(zc.ZC_T.dim(), wdim);
  for (Index g = 0; g < wdim; ++g)
    rt.embedding.col(g) =
        embed_of(rt.reconstructed_carrier.coords.quotient_basis.col(g));
  double ill = 0.0;
  for (Index r = 0; r < rt.reconstructed_carrier.coords.relation_basis.cols();
       ++r)
    ill = std::max(
        ill,
        embed_of(rt.reconstructed_carrier.coords.relation_basis.col(r)).norm());
  require(report, "reconstruction-embedding-well-defined",
          "(Z [x] R) (x)_A L embeds into Z (x)_B C", ill,
          tol.threshold(matrix_scale(rt.embedding)),
          "ill-defined-quotient-map");

  Subspace image = column_space(zc.coaction, tol);
  Subspace target = column_space(rt.embedding, tol);
  double image_res = (image.dim() == target.dim())
                         ? op_norm(image.projector() - target.projector())
                         : 1.0;
  require(report, "coaction-image",
          "image(delta_Z) = (Z [x] R) (x)_A L inside Z (x)_B C", image_res,
          tol.threshold(1.0), "image-mismatch");

  SpanSolver solver(rt.embedding, tol);
  rt.unitary = Mat(wdim, z);
  double solve_res = 0.0;
  for (Index i = 0; i < z; ++i) {
    double res = 0.0;
    rt.unitary.col(i) = solver.solve(zc.coaction.col(i), &res);
    solve_res = std::max(solve_res, res);
  }
  require(report, "coaction-factors", "delta_Z factors through the embedding",
          solve_res, tol.threshold(matrix_scale(zc.coaction)),
          "image-mismatch");

  double gram_res = 0.0;
  for (Index i = 0; i < z; ++i)
    for (Index j = 0; j < z; ++j)
      gram_res = std::max(
          gram_res, (rt.reconstructed_carrier.module.inner(rt.unitary.col(i),
                                                           rt.unitary.col(j)) -
                     zc.carrier.gram_entry(i, j))
                        .norm());
  require(report, "coaction-unitary",
          "delta_Z is unitary onto the reconstructed module", gram_res,
          tol.threshold(matrix_scale(zc.carrier.gram)), "not-unitary");
  rt.gram_residual = gram_res;
  return rt;
}

Mat descend_morphism(const Comodule& zc, const Comodule& wc, const Mat& t,
                     Report* report) {
  const Coalgebra& co = *zc.coalgebra;
  const AdjointPair& p = *co.pair;
  const Tolerance& tol = p.tol;
  if (zc.coalgebra != wc.coalgebra)
    throw ValidationError("shape-mismatch",
                          "comodules over different coalgebras");

  Mat t_c = push_pair(zc.ZC_T, wc.ZC_T, t, Mat::Identity(co.dim(), co.dim()),
                      tol, "t (x) id_C");
  require(report, "comodule-map-square",
          "(t (x) id_C) o delta_Z = delta_W o t",
          (t_c * zc.coaction - wc.coaction * t).norm(),
          tol.threshold(matrix_scale(t)), "not-a-comodule-map");

  Mat t_star = module_adjoint(zc.carrier, wc.carrier, t, tol);

  Cotensor cz = cotensor(zc, nullptr);
  Cotensor cw = cotensor(wc, nullptr);
  const Index mR = p.star_L_to_R.rows();
  Mat t_r = push_pair(cz.ZR_T, cw.ZR_T, t, Mat::Identity(mR, mR), tol,
                      "t (x) id_R");
  Mat moved = t_r * cz.kernel_subspace.basis;
  require(report, "descended-map-well-defined",
          "t (x) id_R carries the cotensor into the cotensor",
          (moved - cw.kernel_subspace.basis *
                       (cw.kernel_subspace.basis.adjoint() * moved))
              .norm(),
          tol.threshold(matrix_scale(t)), "not-a-comodule-map");
  Mat s = cw.kernel_subspace.basis.adjoint() * moved;

  // Adjoint compatibility: descend(t)* = descend(t*).
  Mat t_star_r = push_pair(cw.ZR_T, cz.ZR_T, t_star, Mat::Identity(mR, mR),
                           tol, "t* (x) id_R");
  Mat s_of_t_star = cz.kernel_subspace.basis.adjoint() *
                    (t_star_r * cw.kernel_subspace.basis);
  Mat s_star = module_adjoint(cz.module, cw.module, s, tol);
  require(report, "descended-map-star-compatible",
          "descend(t)* = descend(t*)", (s_star - s_of_t_star).norm(),
          tol.threshold(matrix_scale(t)), "not-adjointable");

  // Certificate: under the round-trip unitaries, t = s (x) id_L.
  ComoduleRoundTrip rz = roundtrip_comodule(zc, nullptr);
  ComoduleRoundTrip rw = roundtrip_comodule(wc, nullptr);
  Mat s_l = push_pair(rz.reconstructed_carrier.coords,
                      rw.reconstructed_carrier.coords, s,
                      Mat::Identity(p.dim_L(), p.dim_L()), tol, "s (x) id_L");
  require(report, "descent-certificate",
          "t corresponds to s (x) id_L under the round trips",
          (s_l * rz.unitary - rw.unitary * t).norm(),
          tol.threshold(matrix_scale(t)), "not-a-comodule-map");
  return s;
}

Mat module_adjoint(const HilbertModule& z, const HilbertModule& w, const Mat& t,
                   const Tolerance& tol) {
  if (t.rows() != w.dim || t.cols() != z.dim)
    throw ValidationError("shape-mismatch", "map must send Z to W");
  Mat sz = z.scalar_gram(), sw = w.scalar_gram();
  Mat t_star = sz.ldlt().solve(t.adjoint() * sw);
  double res = 0.0;
  for (Index i = 0; i < z.dim; ++i)
    for (Index j = 0; j < w.dim; ++j) {
      Vec lhs = Vec::Zero(z.algebra->dim());
      for (Index l = 0; l < w.dim; ++l)
        lhs += std::conj(t(l, i)) * w.gram_entry(l, j);
      Vec rhs = Vec::Zero(z.algebra->dim());
      for (Index v = 0; v < z.dim; ++v)
        rhs += t_star(v, j) * z.gram_entry(i, v);
      res = std::max(res, (lhs - rhs).norm());
    }
  if (res > tol.threshold(matrix_scale(t) * matrix_scale(z.gram)))
    throw ValidationError("not-adjointable",
                          "<t z|w> != <z|t* w> beyond tolerance");
  return t_star;
}

double module_map_norm(const HilbertModule& z, const HilbertModule& w,
                       const Mat& t, const Tolerance& tol) {
  if (z.dim == 0) return 0.0;
  Mat t_star = module_adjoint(z, w, t, tol);
  Eigen::ComplexEigenSolver<Mat> eig(t_star * t);
  double top = 0.0;
  for (Index i = 0; i < eig.eigenvalues().size(); ++i)
    top = std::max(top, eig.eigenvalues()(i).real());
  return std::sqrt(std::max(0.0, top));
}

AlgebraPtr amplify_algebra(const AlgebraPtr& b, Index n) {
  std::vector<Mat> basis;
  basis.reserve(n * n * b->dim());
  for (Index pq = 0; pq < n * n; ++pq) {
    Mat e = Mat::Zero(n, n);
    e(pq / n, pq % n) = 1.0;
    for (Index k = 0; k < b->dim(); ++k) basis.push_back(kron(e, b->basis()[k]));
  }
  return FiniteCStarAlgebra::validate(std::move(basis), b->tol());
}

HilbertModule amplify_module(const HilbertModule& z, const AlgebraPtr& bn,
                             Index n) {
  const Index m = z.dim;
  const Index d = z.algebra->dim();
  const Index mn = n * n * m;
  std::vector<Mat> action(n * n * d, Mat::Zero(mn, mn));
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      for (Index k = 0; k < d; ++k) {
        Mat& act = action[(a * n + b) * d + k];
        for (Index pp = 0; pp < n; ++pp)
          act.block((pp * n + b) * m, (pp * n + a) * m, m, m) = z.action[k];
      }
  Mat gram = Mat::Zero(n * n * d, mn * mn);
  for (Index pp = 0; pp < n; ++pp)
    for (Index q = 0; q < n; ++q)
      for (Index u = 0; u < m; ++u)
        for (Index q2 = 0; q2 < n; ++q2)
          for (Index v = 0; v < m; ++v) {
            Index row = (pp * n + q) * m + u;
            Index col2 = (pp * n + q2) * m + v;
            Vec g = z.gram_entry(u, v);
            for (Index k = 0; k < d; ++k)
              gram((q * n + q2) * d + k, row * mn + col2) += g(k);
          }
  return validate_module(bn, std::move(action), std::move(gram),
                         z.algebra->tol());
}

std::vector<double> cb_audit(const HilbertModule& z, const HilbertModule& w,
                             const Mat& t, int levels, Report* report,
                             const std::string& label) {
  std::vector<double> norms;
  const Tolerance tol;
  for (int n = 1; n <= levels; ++n) {
    double value = 0.0;
    if (n == 1) {
      value = module_map_norm(z, w, t, tol);
    } else {
      AlgebraPtr bn = amplify_algebra(z.algebra, n);
      HilbertModule zn = amplify_module(z, bn, n);
      HilbertModule wn = amplify_module(w, bn, n);
      Mat tn = kron(Mat::Identity(n * n, n * n), t);
      value = module_map_norm(zn, wn, tn, tol);
    }
    norms.push_back(value);
    if (report)
      report->add(label + "-cb-level-" + std::to_string(n),
                  "operator norm of the level-" + std::to_string(n) +
                      " amplification",
                  value, 1.0 + tol.threshold(1.0));
  }
  return norms;
}

std::vector<Mat> module_endomorphism_basis(const HilbertModule& z,
                                           const Tolerance& tol) {
  const Index m = z.dim;
  const Index d = z.algebra->dim();
  Mat sys(d * m * m, m * m);
  Mat im = Mat::Identity(m, m);
  for (Index k = 0; k < d; ++k)
    sys.middleRows(k * m * m, m * m) =
        kron(im, z.action[k].transpose()) - kron(z.action[k], im);
  Subspace ker = kernel(sys, tol);
  std::vector<Mat> basis(ker.dim());
  for (Index c = 0; c < ker.dim(); ++c)
    basis[c] = as_matrix(ker.basis.col(c), m, m);
  return basis;
}

}  // namespace cstar
