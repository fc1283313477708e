#include "ddlab/preconditioners.hpp"

#include "ddlab/errors.hpp"

namespace ddlab {

using Triplet = Eigen::Triplet<double>;

std::string to_string(QChoice q)
{
  return q == QChoice::dirichlet ? "dirichlet" : "identity";
}

Vector feti1_F_apply(const CouplingOperators& ops, const Vector& lambda)
{
  return ops.B * ops.apply_S_pinv(ops.B.transpose() * lambda);
}

Vector feti1_precond_apply(const CouplingOperators& ops, const Vector& mu)
{
  return ops.B_D * ops.apply_S(ops.B_D.transpose() * mu);
}

Feti1Projector::Feti1Projector(const CouplingOperators& ops, QChoice q) : ops_(ops), q_(q)
{
  const Index n_z = ops.G.cols();
  qg_ = Matrix(ops.dim_lambda(), n_z);
  for (Index k = 0; k < n_z; ++k) qg_.col(k) = apply_Q(ops.G.col(k));
  gtqg_ = ops.G.transpose() * qg_;
  gtqg_ = 0.5 * (gtqg_ + gtqg_.transpose()).eval();
  try {
    coarse_ = SpdFactor(gtqg_, "G^T Q G");
  } catch (const NumericalError& e) {
    throw NumericalError("FETI-1 coarse problem G^T Q G is singular for Q=" + to_string(q) + ": " + e.what());
  }
}

Vector Feti1Projector::apply_Q(const Vector& lambda) const
{
  return q_ == QChoice::dirichlet ? feti1_precond_apply(ops_, lambda) : lambda;
}

Vector Feti1Projector::coarse_solve(const Vector& x) const
{
  return coarse_.solve(x);
}

Vector Feti1Projector::apply_P(const Vector& lambda) const
{
  if (qg_.cols() == 0) return lambda;
  return lambda - qg_ * coarse_solve(ops_.G.transpose() * lambda);
}

Vector Feti1Projector::apply_Pt(const Vector& lambda) const
{
  if (qg_.cols() == 0) return lambda;
  return lambda - ops_.G * coarse_solve(qg_.transpose() * lambda);
}

Vector Feti1Projector::apply_H(const Vector& w) const
{
  if (qg_.cols() == 0) return w;
  return w - ops_.B.transpose() * (qg_ * coarse_solve(ops_.Z.transpose() * w));
}

Vector Feti1Projector::apply_Ht(const Vector& w) const
{
  if (qg_.cols() == 0) return w;
  return w - ops_.Z * coarse_solve(qg_.transpose() * (ops_.B * w));
}

Vector Feti1System::apply_projected_F(const Vector& lambda) const
{
  return projector.apply_Pt(apply_F(projector.apply_P(lambda)));
}

Feti1System feti1_build(const CouplingOperators& ops, QChoice q, const Vector& f)
{
  if (f.size() != ops.dim_w()) throw ConfigError("FETI-1 load has the wrong dimension");
  Feti1System sys{Feti1Projector(ops, q), f, {}, {}, {}};
  const Feti1Projector& proj = sys.projector;
  sys.lambda0 = proj.QG() * proj.coarse_solve(ops.Z.transpose() * f);
  sys.d = ops.B * ops.apply_S_pinv(f);
  sys.rhs = proj.apply_Pt(sys.d - sys.apply_F(sys.lambda0));
  return sys;
}

PrimalRecovery recover_primal(const Feti1System& system, const Vector& lambda)
{
  const CouplingOperators& ops = system.ops();
  const Vector residual = system.f - ops.B.transpose() * lambda;
  const double compat = (ops.Z.transpose() * residual).norm();
  if (compat > 1e-8 * std::max(1.0, system.f.norm()))
    throw NumericalError("coarse compatibility Z^T(f - B^T lambda) = 0 violated: " + std::to_string(compat));
  const Feti1Projector& proj = system.projector;
  PrimalRecovery out;
  out.w = ops.apply_S_pinv(residual);
  if (ops.Z.cols() > 0) {
    const Vector a = proj.coarse_solve(proj.QG().transpose() * (system.apply_F(lambda) - system.d));
    out.w += ops.Z * a;
  }
  out.u = ops.E * out.w;
  return out;
}

Vector pfeti1_apply(const Feti1Projector& projector, const Vector& r)
{
  const CouplingOperators& ops = projector.ops();
  const Vector w = projector.apply_H(ops.E.transpose() * r);
  return ops.E * projector.apply_Ht(ops.apply_S_pinv(w));
}

Bdd::Bdd(const CouplingOperators& ops) : ops_(ops)
{
  Matrix gram = ops.C.transpose() * ops.S_hat * ops.C;
  gram = 0.5 * (gram + gram.transpose()).eval();
  coarse_ = SpdFactor(gram, "BDD coarse matrix C^T S_hat C");
}

Vector Bdd::coarse_correction(const Vector& r) const
{
  if (ops_.C.cols() == 0) return Vector::Zero(r.size());
  return ops_.C * coarse_.solve(Vector(ops_.C.transpose() * r));
}

Vector Bdd::apply(const Vector& r) const
{
  const Vector s_c_r = coarse_correction(r);
  const Vector balanced = r - ops_.S_hat * s_c_r;  // P_C^T r
  const Vector t = ops_.E * ops_.apply_S_pinv(ops_.E.transpose() * balanced);
  return t - coarse_correction(ops_.S_hat * t) + s_c_r;
}

FetiDp::FetiDp(const CouplingOperators& ops, const CoarseSplit& split) : ops_(ops), split_(split)
{
  // W index -> W_r index, -1 at corners
  std::vector<Index> r_index(ops.dim_w(), -1);
  for (Index i = 0; i < ops.num_subs(); ++i) {
    const CornerBlock& blk = split.blocks[i];
    for (std::size_t p = 0; p < blk.r_local.size(); ++p)
      r_index[ops.offsets[i] + blk.r_local[p]] = split.r_offsets[i] + static_cast<Index>(p);
  }
  std::vector<Triplet> b, bd;
  Index row = 0;
  for (std::size_t k = 0; k < ops.rows.size(); ++k) {
    const JumpRow& jr = ops.rows[k];
    if (split.coarse_of_global[jr.dof] >= 0) continue;
    const Index wp = ops.offsets[jr.plus.sub] + jr.plus.local;
    const Index wm = ops.offsets[jr.minus.sub] + jr.minus.local;
    b.emplace_back(row, r_index[wp], 1.0);
    b.emplace_back(row, r_index[wm], -1.0);
    bd.emplace_back(row, r_index[wp], ops.B_D.coeff(static_cast<Index>(k), wp));
    bd.emplace_back(row, r_index[wm], ops.B_D.coeff(static_cast<Index>(k), wm));
    ++row;
  }
  B_r_.resize(row, split.dim_r());
  B_r_.setFromTriplets(b.begin(), b.end());
  B_Dr_.resize(row, split.dim_r());
  B_Dr_.setFromTriplets(bd.begin(), bd.end());
}

Vector FetiDp::apply_Stilde_inv(const Vector& g) const
{
  const Index n_c = split_.num_coarse();
  const Vector g_c = g.head(n_c);
  const Vector g_r = g.tail(split_.dim_r());
  const Vector y = split_.solve_rr(g_r);
  const Vector u_c = split_.S_cc_star_factor.solve(Vector(g_c - split_.apply_rc_transpose(y)));
  Vector out(g.size());
  out.head(n_c) = u_c;
  out.tail(split_.dim_r()) = split_.solve_rr(g_r - split_.apply_rc(u_c));
  return out;
}

Vector FetiDp::apply_Stilde(const Vector& w) const
{
  const Index n_c = split_.num_coarse();
  const Vector u_c = w.head(n_c);
  const Vector u_r = w.tail(split_.dim_r());
  Vector out(w.size());
  out.head(n_c) = split_.S_cc_tilde * u_c + split_.apply_rc_transpose(u_r);
  out.tail(split_.dim_r()) = split_.apply_rc(u_c) + split_.apply_rr(u_r);
  return out;
}

Vector FetiDp::lift(const Vector& lambda, const SparseMatrix& jump) const
{
  Vector out = Vector::Zero(dim_tilde());
  out.tail(split_.dim_r()) = jump.transpose() * lambda;
  return out;
}

Vector FetiDp::apply_F(const Vector& lambda) const
{
  return B_r_ * apply_Stilde_inv(lift(lambda, B_r_)).tail(split_.dim_r());
}

Vector FetiDp::apply_M(const Vector& lambda) const
{
  return B_Dr_ * apply_Stilde(lift(lambda, B_Dr_)).tail(split_.dim_r());
}

namespace {

Vector distribute(const CoarseSplit& split, const Vector& r)
{
  Vector f(split.num_coarse() + split.dim_r());
  f.head(split.num_coarse()) = split.E_c.transpose() * r;
  f.tail(split.dim_r()) = split.E_r.transpose() * r;
  return f;
}

} // namespace

Vector FetiDp::rhs(const Vector& r) const
{
  return B_r_ * apply_Stilde_inv(distribute(split_, r)).tail(split_.dim_r());
}

Vector FetiDp::recover(const Vector& lambda, const Vector& r) const
{
  const Vector w = apply_Stilde_inv(distribute(split_, r) - lift(lambda, B_r_));
  return split_.E_c * w.head(split_.num_coarse()) + split_.E_r * w.tail(split_.dim_r());
}

Bddc::Bddc(const CouplingOperators& ops, const CoarseSplit& split) : ops_(ops), split_(split)
{
  const Index n_c = split.num_coarse();
  psi_ = Matrix::Zero(ops.dim_w(), n_c);
  for (Index i = 0; i < ops.num_subs(); ++i) {
    const CornerBlock& blk = split.blocks[i];
    const Index off = ops.offsets[i];
    for (std::size_t k = 0; k < blk.c_local.size(); ++k) psi_(off + blk.c_local[k], blk.c_coarse[k]) = 1.0;
    if (blk.r_local.empty() || blk.c_local.empty()) continue;
    const Matrix ext = blk.S_rr_factor.solve(blk.S_rc);
    for (std::size_t p = 0; p < blk.r_local.size(); ++p)
      for (std::size_t k = 0; k < blk.c_local.size(); ++k) psi_(off + blk.r_local[p], blk.c_coarse[k]) = -ext(p, k);
  }
  gram_ = Matrix::Zero(n_c, n_c);
  for (Index i = 0; i < ops.num_subs(); ++i) {
    const auto psi_i = psi_.middleRows(ops.offsets[i], ops.block_size(i));
    gram_ += psi_i.transpose() * ops.S[i] * psi_i;
  }
  gram_ = 0.5 * (gram_ + gram_.transpose()).eval();
  coarse_ = SpdFactor(gram_, "BDDC coarse matrix Psi^T S Psi");
}

Vector Bddc::apply(const Vector& r) const
{
  const Vector v = ops_.E.transpose() * r;
  // subdomain correction on the remaining dofs, corners held at zero
  Vector v_r(split_.dim_r());
  for (Index i = 0; i < ops_.num_subs(); ++i) {
    const CornerBlock& blk = split_.blocks[i];
    for (std::size_t p = 0; p < blk.r_local.size(); ++p)
      v_r(split_.r_offsets[i] + static_cast<Index>(p)) = v(ops_.offsets[i] + blk.r_local[p]);
  }
  const Vector y_r = split_.solve_rr(v_r);
  Vector t = Vector::Zero(ops_.dim_w());
  for (Index i = 0; i < ops_.num_subs(); ++i) {
    const CornerBlock& blk = split_.blocks[i];
    for (std::size_t p = 0; p < blk.r_local.size(); ++p)
      t(ops_.offsets[i] + blk.r_local[p]) = y_r(split_.r_offsets[i] + static_cast<Index>(p));
  }
  const Vector coarse = psi_ * coarse_.solve(Vector(psi_.transpose() * v));
  return ops_.E * (t + coarse);
}

double coarse_energy(const CouplingOperators& ops, const Matrix& psi)
{
  double trace = 0.0;
  for (Index i = 0; i < ops.num_subs(); ++i) {
    const auto psi_i = psi.middleRows(ops.offsets[i], ops.block_size(i));
    trace += (psi_i.transpose() * ops.S[i] * psi_i).trace();
  }
  return trace;
}

Vector pfetidp_apply(const CoarseSplit& split, const Vector& r)
{
  const Vector f_r = split.E_r.transpose() * r;
  const Vector f_c = split.E_c.transpose() * r;
  const Vector y = split.solve_rr(f_r);
  const Vector u_c = split.S_cc_star_factor.solve(Vector(f_c - split.apply_rc_transpose(y)));
  const Vector u_r = y - split.solve_rr(split.apply_rc(u_c));
  return split.E_r * u_r + split.E_c * u_c;
}

} // namespace ddlab
