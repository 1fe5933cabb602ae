#include "cstar/connection.hpp"

#include <cmath>

namespace cstar {

namespace {

Mat combo(const std::vector<Mat>& mats, const Vec& coeffs) {
  Mat m = Mat::Zero(mats.front().rows(), mats.front().cols());
  for (Index k = 0; k < coeffs.size(); ++k)
    if (coeffs(k) != Cplx(0, 0)) m += coeffs(k) * mats[k];
  return m;
}

double matrix_scale(const Mat& m) { return std::max(1.0, m.norm()); }

// z (x) 1 (x) 1 in Z (x) C quotient coordinates.
Mat embed_one_matrix(const RelativeForms& forms, const HilbertModule& z,
                     const BalancedTensor& zc_t) {
  const AdjointPair& p = *forms.pair;
  const Index db = p.B->dim();
  Vec cfull = as_vector(Mat(p.B->unit() * p.B->unit().transpose()));
  (void)db;
  Mat out(zc_t.dim(), z.dim);
  for (Index u = 0; u < z.dim; ++u) {
    Mat m = Vec::Unit(z.dim, u) * cfull.transpose();
    Mat grouped = m * p.C_T.quotient_basis.conjugate();
    out.col(u) = zc_t.project(as_vector(grouped));
  }
  return out;
}

// Z (x) Omega -> Z (x) C along the subspace inclusion, and the projection
// Z (x) C -> Z (x) Omega along z (x) (c - eps(c) (x) 1).
struct OmegaMaps {
  Mat into_zc;   // dim(ZC) x dim(ZO)
  Mat onto_zo;   // dim(ZO) x dim(ZC)
};

OmegaMaps omega_maps(const RelativeForms& forms, const HilbertModule& z,
                     const BalancedTensor& zc_t, const BalancedTensor& zo_t) {
  const AdjointPair& p = *forms.pair;
  const Index c = forms.coalgebra->dim();
  const Mat& w_basis = forms.omega.basis;  // c x dim(Omega)

  OmegaMaps maps;
  maps.into_zc = Mat(zc_t.dim(), zo_t.dim());
  for (Index g = 0; g < zo_t.dim(); ++g) {
    Mat v = as_matrix(zo_t.lift(Vec::Unit(zo_t.dim(), g)), z.dim,
                      forms.omega.dim());
    Mat in_c = v * w_basis.transpose();  // z x c
    maps.into_zc.col(g) = zc_t.project(as_vector(in_c));
  }

  Mat pi = Mat::Identity(c, c) - forms.embed_b_one * p.eps_q;
  Mat pi_omega = w_basis.adjoint() * pi;  // c -> omega coordinates
  maps.onto_zo = Mat(zo_t.dim(), zc_t.dim());
  for (Index g = 0; g < zc_t.dim(); ++g) {
    Mat v = as_matrix(zc_t.lift(Vec::Unit(zc_t.dim(), g)), z.dim, c);
    Mat in_o = v * pi_omega.transpose();  // z x omega
    maps.onto_zo.col(g) = zo_t.project(as_vector(in_o));
  }
  return maps;
}

// Shared validation once nabla is present in both coordinate systems.
void finish_connection(Connection& conn, Report* report) {
  const RelativeForms& forms = *conn.forms;
  const AdjointPair& p = *forms.pair;
  const Tolerance& tol = p.tol;
  const HilbertModule& z = conn.module;
  const Index w = forms.dim();

  // Leibniz: nabla(z.b) = nabla(z).b + z (x) d(b).
  double leib = 0.0;
  for (Index k = 0; k < p.B->dim(); ++k) {
    Mat r_zo = push_pair(conn.ZO_T, conn.ZO_T, Mat::Identity(z.dim, z.dim),
                         forms.right_b[k], tol, "right B-action on Z (x) Omega");
    Mat e_k(conn.ZO_T.dim(), z.dim);
    for (Index u = 0; u < z.dim; ++u) {
      Mat m = Vec::Unit(z.dim, u) * forms.d.col(k).transpose();
      e_k.col(u) = conn.ZO_T.project(as_vector(m));
    }
    leib = std::max(leib, (conn.nabla * z.action[k] -
                           (r_zo * conn.nabla + e_k))
                              .norm());
  }
  require(report, "connection-leibniz", "nabla(z.b) = nabla(z).b + z (x) d(b)",
          leib, tol.threshold(matrix_scale(conn.nabla)), "leibniz-failure");

  // Hermitian identity <z1|nabla(z2)> - <z2|nabla(z1)>* = d<z1|z2>.
  Mat nabla_hat = conn.ZO_T.lift_cols(conn.nabla);
  std::vector<Mat> h(z.dim, Mat::Zero(w, z.dim));
  for (Index j = 0; j < z.dim; ++j) {
    Mat mj = as_matrix(nabla_hat.col(j), z.dim, w);
    for (Index i = 0; i < z.dim; ++i) {
      Vec hij = Vec::Zero(w);
      for (Index u = 0; u < z.dim; ++u)
        hij += combo(forms.left_b, z.gram_entry(i, u)) * mj.row(u).transpose();
      h[i].col(j) = hij;
    }
  }
  double herm = 0.0;
  for (Index i = 0; i < z.dim; ++i)
    for (Index j = 0; j < z.dim; ++j)
      herm = std::max(herm, (h[i].col(j) -
                             forms.star_omega * h[j].col(i).conjugate() -
                             forms.d * z.gram_entry(i, j))
                                .norm());
  conn.hermitian = herm <= tol.threshold(matrix_scale(nabla_hat) *
                                         matrix_scale(z.gram));
  if (report)
    report->add("connection-hermitian",
                "<z1|nabla z2> - <z2|nabla z1>* = d<z1|z2>", herm,
                tol.threshold(matrix_scale(nabla_hat) * matrix_scale(z.gram)));

  Curvature curv = curvature(conn);
  conn.curvature_norm = curv.norm;
  conn.flat =
      curv.norm <= tol.threshold(matrix_scale(conn.nabla) *
                                 matrix_scale(conn.nabla));
  if (report)
    report->add("connection-curvature",
                "curvature (id (x) d1 - nabla (x) id) o nabla", curv.norm,
                tol.threshold(matrix_scale(conn.nabla) *
                              matrix_scale(conn.nabla)));
}

}  // namespace

FormsPtr relative_forms(const Inclusion& incl, Report* report,
                        const Tolerance& tol) {
  auto forms = std::make_shared<RelativeForms>();
  forms->inclusion = incl;
  forms->pair = std::make_shared<AdjointPair>(
      AdjointPair::from_inclusion(incl, report, tol));
  forms->coalgebra = build_coalgebra(forms->pair, report);
  const AdjointPair& p = *forms->pair;
  const Coalgebra& co = *forms->coalgebra;
  const Index c = co.dim();
  const Index db = p.B->dim();

  forms->omega = kernel(p.eps_q, tol);
  const Index w = forms->omega.dim();
  const Mat& wb = forms->omega.basis;

  // Omega is a B-sub-bimodule, stable under the involution.
  double inv_res = 0.0;
  forms->left_b.resize(db);
  forms->right_b.resize(db);
  for (Index k = 0; k < db; ++k) {
    Mat moved_l = co.left_b[k] * wb;
    Mat moved_r = co.right_b[k] * wb;
    inv_res = std::max(inv_res,
                       (moved_l - wb * (wb.adjoint() * moved_l)).norm());
    inv_res = std::max(inv_res,
                       (moved_r - wb * (wb.adjoint() * moved_r)).norm());
    forms->left_b[k] = wb.adjoint() * moved_l;
    forms->right_b[k] = wb.adjoint() * moved_r;
  }
  require(report, "omega-bimodule", "Omega is a B-sub-bimodule of C", inv_res,
          tol.threshold(1.0), "leibniz-failure");

  Mat star_moved = co.star_c * wb.conjugate();
  require(report, "omega-star-stable", "Omega is stable under the involution",
          (star_moved - wb * (wb.adjoint() * star_moved)).norm(),
          tol.threshold(1.0), "leibniz-failure");
  forms->star_omega = wb.adjoint() * star_moved;

  // d(b) = 1 (x) b - b (x) 1 and the embedding b -> b (x) 1.
  const Vec& ub = p.B->unit();
  Mat dq(c, db);
  forms->embed_b_one = Mat(c, db);
  for (Index k = 0; k < db; ++k) {
    Vec e = Vec::Unit(db, k);
    Vec dfull = as_vector(Mat(ub * e.transpose())) -
                as_vector(Mat(e * ub.transpose()));
    dq.col(k) = p.C_T.project(dfull);
    forms->embed_b_one.col(k) = p.C_T.project(as_vector(Mat(e * ub.transpose())));
  }
  require(report, "d-lands-in-omega", "eps o d = 0",
          (p.eps_q * dq).norm(), tol.threshold(1.0), "leibniz-failure");
  forms->d = wb.adjoint() * dq;

  // ker(d) = A (embedded), the degree-zero part of the descent dictionary.
  Subspace kd = kernel(forms->d, tol);
  Subspace emb_image = column_space(incl.embedding, tol);
  require(report, "kernel-of-d-is-A", "ker(d) = A inside B",
          (kd.dim() == emb_image.dim())
              ? op_norm(kd.projector() - emb_image.projector())
              : 1.0,
          tol.threshold(1.0), "characterization-mismatch");

  // d-Leibniz and the star rule for d.
  double dleib = 0.0;
  for (Index i = 0; i < db; ++i)
    for (Index j = 0; j < db; ++j) {
      Vec lhs = forms->d * p.B->lmul(i).col(j);
      Vec rhs = forms->right_b[j] * forms->d.col(i) +
                forms->left_b[i] * forms->d.col(j);
      dleib = std::max(dleib, (lhs - rhs).norm());
    }
  require(report, "d-leibniz", "d(b b') = d(b).b' + b.d(b')", dleib,
          tol.threshold(matrix_scale(forms->d)), "leibniz-failure");
  double dstar = 0.0;
  const Mat& vb = p.B->invol_matrix();
  for (Index k = 0; k < db; ++k)
    dstar = std::max(
        dstar, (forms->d * vb.col(k) +
                forms->star_omega * forms->d.col(k).conjugate())
                   .norm());
  require(report, "d-star", "d(b*) = -d(b)*", dstar,
          tol.threshold(matrix_scale(forms->d)), "leibniz-failure");

  // Omega (x)_B Omega and d1 = q o (d (x) d).
  forms->OO_T = balanced_tensor(w, forms->right_b, w, forms->left_b, p.B, tol);
  forms->d1 = Mat(forms->OO_T.dim(), w);
  for (Index s = 0; s < w; ++s) {
    Mat v = as_matrix(p.C_T.quotient_basis * wb.col(s), db, db);
    Vec out = Vec::Zero(w * w);
    for (Index i = 0; i < db; ++i)
      for (Index j = 0; j < db; ++j)
        if (v(i, j) != Cplx(0, 0))
          out += v(i, j) * as_vector(Mat(forms->d.col(i) *
                                         forms->d.col(j).transpose()));
    forms->d1.col(s) = forms->OO_T.project(out);
  }

  require(report, "d1-d-zero", "d1 o d = 0", (forms->d1 * forms->d).norm(),
          tol.threshold(matrix_scale(forms->d1)), "leibniz-failure");

  // d1 Leibniz rules and the star rule.
  auto embed_oo = [&](const Vec& w1, const Vec& w2) {
    return forms->OO_T.project(as_vector(Mat(w1 * w2.transpose())));
  };
  double d1_leib = 0.0;
  for (Index k = 0; k < db; ++k) {
    Mat l_oo = push_pair(forms->OO_T, forms->OO_T, forms->left_b[k],
                         Mat::Identity(w, w), tol, "left action on OO");
    Mat r_oo = push_pair(forms->OO_T, forms->OO_T, Mat::Identity(w, w),
                         forms->right_b[k], tol, "right action on OO");
    for (Index s = 0; s < w; ++s) {
      Vec lhs1 = forms->d1 * (forms->left_b[k] * Vec::Unit(w, s));
      Vec rhs1 = embed_oo(forms->d.col(k), Vec::Unit(w, s)) +
                 l_oo * forms->d1.col(s);
      d1_leib = std::max(d1_leib, (lhs1 - rhs1).norm());
      Vec lhs2 = forms->d1 * (forms->right_b[k] * Vec::Unit(w, s));
      Vec rhs2 = r_oo * forms->d1.col(s) -
                 embed_oo(Vec::Unit(w, s), forms->d.col(k));
      d1_leib = std::max(d1_leib, (lhs2 - rhs2).norm());
    }
  }
  require(report, "d1-leibniz",
          "d1(b.w) = d(b) (x) w + b.d1(w); d1(w.b) = d1(w).b - w (x) d(b)",
          d1_leib, tol.threshold(matrix_scale(forms->d1)), "leibniz-failure");

  Mat star_oo(forms->OO_T.dim(), forms->OO_T.dim());
  for (Index g = 0; g < forms->OO_T.dim(); ++g) {
    Mat u = as_matrix(forms->OO_T.lift(Vec::Unit(forms->OO_T.dim(), g)), w, w);
    star_oo.col(g) = forms->OO_T.project(as_vector(
        Mat(forms->star_omega * u.adjoint() * forms->star_omega.transpose())));
  }
  require(report, "d1-star", "d1(w*) = d1(w)*",
          (forms->d1 * forms->star_omega - star_oo * forms->d1.conjugate())
              .norm(),
          tol.threshold(matrix_scale(forms->d1)), "leibniz-failure");

  return forms;
}

Curvature curvature(const Connection& conn) {
  const RelativeForms& forms = *conn.forms;
  const HilbertModule& z = conn.module;
  const Index w = forms.dim();
  const Index zd = z.dim;

  Mat nabla_hat = conn.ZO_T.lift_cols(conn.nabla);  // (z*w) x z
  Mat d1_hat = forms.OO_T.lift_cols(forms.d1);      // (w*w) x w

  // The extension of nabla to Z (x) Omega is id (x) d1 + nabla (x) id: only
  // this sign combination annihilates the balancing relations
  // (z.b) (x) w - z (x) (b.w), so only it is well-defined on representatives.
  Mat cols(zd * w * w, zd);
  for (Index u = 0; u < zd; ++u) {
    Mat m = as_matrix(nabla_hat.col(u), zd, w);
    // (id (x) d1) nabla
    Vec side_a = as_vector(Mat(m * d1_hat.transpose()));
    // (nabla (x) id) nabla
    Vec side_b = Vec::Zero(zd * w * w);
    for (Index s = 0; s < w; ++s) {
      Vec g = nabla_hat * m.col(s);
      for (Index t = 0; t < zd * w; ++t) side_b(t * w + s) += g(t);
    }
    cols.col(u) = side_a + side_b;
  }

  TensorChain chain({zd, w, w});
  chain.add_link(0, *forms.pair->B, z.action, forms.left_b);
  chain.add_link(1, *forms.pair->B, forms.right_b, forms.left_b);
  Curvature out;
  out.reduced = Mat(zd * w * w, zd);
  for (Index u = 0; u < zd; ++u) out.reduced.col(u) = chain.reduce(cols.col(u));
  out.norm = op_norm(out.reduced);
  return out;
}

Connection validate_connection(FormsPtr forms, HilbertModule z, Mat nabla,
                               Report* report) {
  const AdjointPair& p = *forms->pair;
  const Tolerance& tol = p.tol;
  Connection conn;
  conn.forms = std::move(forms);
  conn.module = std::move(z);
  conn.ZC_T = balanced_tensor(conn.module.dim, conn.module.action,
                              conn.forms->coalgebra->dim(),
                              conn.forms->coalgebra->left_b, p.B, tol);
  conn.ZO_T = balanced_tensor(conn.module.dim, conn.module.action,
                              conn.forms->dim(), conn.forms->left_b, p.B, tol);
  if (nabla.rows() != conn.ZO_T.dim() || nabla.cols() != conn.module.dim)
    throw ValidationError("shape-mismatch",
                          "nabla must map Z to Z (x) Omega coordinates");
  conn.nabla = std::move(nabla);
  OmegaMaps maps = omega_maps(*conn.forms, conn.module, conn.ZC_T, conn.ZO_T);
  conn.nabla_zc = maps.into_zc * conn.nabla;
  conn.embed_one = embed_one_matrix(*conn.forms, conn.module, conn.ZC_T);
  finish_connection(conn, report);
  return conn;
}

Connection comodule_to_connection(const Comodule& z, FormsPtr forms,
                                  Report* report) {
  if (z.coalgebra != forms->coalgebra)
    throw ValidationError("shape-mismatch",
                          "comodule lives over a different coalgebra");
  const AdjointPair& p = *forms->pair;
  const Tolerance& tol = p.tol;
  Connection conn;
  conn.forms = forms;
  conn.module = z.carrier;
  conn.ZC_T = z.ZC_T;
  conn.ZO_T = balanced_tensor(conn.module.dim, conn.module.action, forms->dim(),
                              forms->left_b, p.B, tol);
  conn.embed_one = embed_one_matrix(*forms, conn.module, conn.ZC_T);
  conn.nabla_zc = z.coaction - conn.embed_one;  // exact affine reparametrisation
  OmegaMaps maps = omega_maps(*forms, conn.module, conn.ZC_T, conn.ZO_T);
  conn.nabla = maps.onto_zo * conn.nabla_zc;
  // The difference must already lie in Z (x) Omega.
  require(report, "connection-image-in-omega",
          "delta_Z(z) - z (x) 1 (x) 1 lies in Z (x) Omega",
          (maps.into_zc * conn.nabla - conn.nabla_zc).norm(),
          tol.threshold(std::max(1.0, conn.nabla_zc.norm())),
          "ill-defined-quotient-map");
  finish_connection(conn, report);
  if (!conn.flat)
    throw ValidationError("coassociativity-failure",
                          "comodule produced a non-flat connection");
  if (!conn.hermitian)
    throw ValidationError("not-hermitian",
                          "comodule produced a non-Hermitian connection");
  return conn;
}

Comodule connection_to_comodule(const Connection& conn, Report* report) {
  if (!conn.flat)
    throw ValidationError("not-flat",
                          "only flat connections induce coactions");
  if (!conn.hermitian)
    throw ValidationError("not-hermitian",
                          "only Hermitian connections induce Hermitian coactions");
  Mat coaction = conn.nabla_zc + conn.embed_one;  // exact affine inverse
  return validate_comodule(conn.forms->coalgebra, conn.module,
                           std::move(coaction), report);
}

Connection grassmann_connection(FormsPtr forms, HilbertModule z,
                                std::optional<std::vector<Vec>> frame,
                                Report* report) {
  const AdjointPair& p = *forms->pair;
  const Tolerance& tol = p.tol;
  const Index zd = z.dim;

  std::vector<Vec> xs;
  if (frame) {
    xs = *frame;
  } else {
    // Normalise the coordinate basis by the inverse square root of the frame
    // operator T = sum_u theta_{e_u, e_u}; T is positive and invertible in
    // End_B(Z), and T^{-1/2} e_u is then a normalised tight frame.
    Mat t = Mat::Zero(zd, zd);
    for (Index u = 0; u < zd; ++u)
      t += rank_one_matrix(z, Vec::Unit(zd, u), Vec::Unit(zd, u));
    Mat s = z.scalar_gram();
    Eigen::SelfAdjointEigenSolver<Mat> se(s);
    Mat s_half = se.operatorSqrt();
    Mat s_half_inv = se.operatorInverseSqrt();
    Mat h = s_half * t * s_half_inv;
    Eigen::SelfAdjointEigenSolver<Mat> he((h + h.adjoint()) / 2.0);
    if (he.eigenvalues().minCoeff() <= 0)
      throw ValidationError("not-a-frame", "frame operator is not positive");
    Mat h_inv_sqrt = he.operatorInverseSqrt();
    Mat t_inv_sqrt = s_half_inv * h_inv_sqrt * s_half;
    for (Index u = 0; u < zd; ++u) xs.push_back(t_inv_sqrt.col(u));
  }

  Mat frame_op = Mat::Zero(zd, zd);
  for (const Vec& x : xs) frame_op += rank_one_matrix(z, x, x);
  require(report, "frame-reconstruction", "sum_i theta_{x_i,x_i} = id",
          (frame_op - Mat::Identity(zd, zd)).norm(), tol.threshold(1.0),
          "not-a-frame");

  // nabla(z) = sum_i x_i (x) d(<x_i|z>).
  BalancedTensor zo = balanced_tensor(zd, z.action, forms->dim(),
                                      forms->left_b, p.B, tol);
  Mat nabla = Mat::Zero(zo.dim(), zd);
  for (const Vec& x : xs) {
    Mat g(p.B->dim(), zd);
    for (Index u = 0; u < zd; ++u) {
      Vec val = Vec::Zero(p.B->dim());
      for (Index v = 0; v < zd; ++v)
        val += std::conj(x(v)) * z.gram_entry(v, u);
      g.col(u) = val;
    }
    Mat dg = forms->d * g;  // omega coordinates per basis vector of Z
    for (Index u = 0; u < zd; ++u)
      nabla.col(u) += zo.project(as_vector(Mat(x * dg.col(u).transpose())));
  }

  Connection conn = validate_connection(forms, std::move(z), std::move(nabla),
                                        report);
  if (!conn.hermitian)
    throw ValidationError("not-hermitian",
                          "Grassmann construction failed the Hermitian identity");
  return conn;
}

ConnectionDescent descend_via_connection(const Connection& conn,
                                         Report* report) {
  const RelativeForms& forms = *conn.forms;
  const AdjointPair& p = *forms.pair;
  const Tolerance& tol = p.tol;
  if (!conn.flat) throw ValidationError("not-flat", "descent needs flatness");
  if (!conn.hermitian)
    throw ValidationError("not-hermitian", "descent needs a Hermitian connection");
  const HilbertModule& z = conn.module;
  const Index zd = z.dim;
  const Index da = p.A->dim();

  ConnectionDescent out;
  out.kernel = kernel(conn.nabla, tol);
  const Mat& kappa = out.kernel.basis;
  const Index dim = out.kernel.dim();

  // The kernel agrees with the cotensor reconstruction of the coaction.
  Comodule comod = connection_to_comodule(conn, nullptr);
  Cotensor ct = cotensor(comod, nullptr);
  Mat iota(ct.ZR_T.dim(), zd);
  for (Index u = 0; u < zd; ++u)
    iota.col(u) = ct.ZR_T.project(
        as_vector(Mat(Vec::Unit(zd, u) * p.B->unit().transpose())));
  Subspace mapped = column_space(iota * kappa, tol);
  require(report, "kernel-matches-cotensor",
          "ker(nabla) = Z [x]_C B inside Z (x)_B B",
          (mapped.dim() == ct.kernel_subspace.dim())
              ? op_norm(mapped.projector() - ct.kernel_subspace.projector())
              : 1.0,
          tol.threshold(1.0), "image-mismatch");

  // A-module structure and the inner product pulled back through eta.
  std::vector<Mat> action(da);
  double inv_res = 0.0;
  for (Index k = 0; k < da; ++k) {
    Mat r = z.act_of(forms.inclusion.embedding.col(k));
    Mat moved = r * kappa;
    inv_res =
        std::max(inv_res, (moved - kappa * (kappa.adjoint() * moved)).norm());
    action[k] = kappa.adjoint() * moved;
  }
  require(report, "kernel-A-invariant", "ker(nabla) is an A-submodule",
          inv_res, tol.threshold(1.0), "not-a-submodule");

  SpanSolver emb(forms.inclusion.embedding, tol);
  Mat gram(da, dim * dim);
  double escape = 0.0;
  for (Index a = 0; a < dim; ++a)
    for (Index b = 0; b < dim; ++b) {
      double res = 0.0;
      gram.col(a * dim + b) =
          emb.solve(z.inner(kappa.col(a), kappa.col(b)), &res);
      escape = std::max(escape, res);
    }
  require(report, "kernel-inner-products-in-A",
          "<x1|x2>_B lies in the image of A", escape, tol.threshold(1.0),
          "inner-product-escapes-eta(A)");
  out.module = validate_module(p.A, std::move(action), std::move(gram), tol);

  // Agreement with the cotensor module's inner product.
  double agree = 0.0;
  for (Index a = 0; a < dim; ++a)
    for (Index b = 0; b < dim; ++b) {
      Vec via_ct = ct.module.inner(
          ct.kernel_subspace.basis.adjoint() * (iota * kappa.col(a)),
          ct.kernel_subspace.basis.adjoint() * (iota * kappa.col(b)));
      agree = std::max(
          agree, (via_ct - out.module.inner(Vec::Unit(dim, a).eval(),
                                            Vec::Unit(dim, b).eval()))
                     .norm());
    }
  require(report, "descended-inner-products-agree",
          "connection-kernel and cotensor give the same A-module", agree,
          tol.threshold(matrix_scale(out.module.gram)),
          "inner-product-escapes-eta(A)");

  // Unitary witness X (x)_A B = Z.
  out.induced = interior_tensor_with(out.module, p.L, p.left_a_on_L, tol);
  out.witness = Mat(zd, out.induced.module.dim);
  for (Index g = 0; g < out.induced.module.dim; ++g) {
    Mat v = as_matrix(out.induced.coords.lift(
                          Vec::Unit(out.induced.module.dim, g)),
                      dim, p.B->dim());
    Vec img = Vec::Zero(zd);
    for (Index a = 0; a < dim; ++a)
      for (Index k = 0; k < p.B->dim(); ++k)
        if (v(a, k) != Cplx(0, 0))
          img += v(a, k) * (z.action[k] * kappa.col(a));
    out.witness.col(g) = img;
  }
  double unitary_res = 0.0;
  for (Index g = 0; g < out.induced.module.dim; ++g)
    for (Index h = 0; h < out.induced.module.dim; ++h)
      unitary_res =
          std::max(unitary_res,
                   (z.inner(out.witness.col(g), out.witness.col(h)) -
                    out.induced.module.inner(
                        Vec::Unit(out.induced.module.dim, g).eval(),
                        Vec::Unit(out.induced.module.dim, h).eval()))
                       .norm());
  require(report, "descent-witness-unitary",
          "ker(nabla) (x)_A B -> Z preserves inner products", unitary_res,
          tol.threshold(matrix_scale(z.gram)), "not-unitary");
  require(report, "descent-witness-bijective",
          "ker(nabla) (x)_A B -> Z is bijective",
          (out.induced.module.dim == zd && rank(out.witness, tol) == zd)
              ? 0.0
              : 1.0,
          0.5, "image-mismatch");
  out.witness_residual = unitary_res;
  return out;
}

}  // namespace cstar
