#include "ddlab/operators.hpp"

#include "ddlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ddlab {

using Triplet = Eigen::Triplet<double>;

std::string to_string(Scaling s)
{
  return s == Scaling::stiffness ? "stiffness" : "multiplicity";
}

std::vector<Index> block_offsets(const Problem& problem)
{
  std::vector<Index> offsets{0};
  for (const auto& s : problem.subs) offsets.push_back(offsets.back() + s.size());
  return offsets;
}

EmbeddingAndJump build_embedding_and_jump(const InterfaceMap& iface, const std::vector<Index>& offsets)
{
  EmbeddingAndJump out;
  const Index dim_w = offsets.back();
  std::vector<Triplet> r_entries, b_entries;
  for (int g = 0; g < iface.n_global; ++g) {
    const auto& sharers = iface.sharers[g];
    for (const Sharer& s : sharers) r_entries.emplace_back(offsets[s.sub] + s.local, g, 1.0);
    for (std::size_t a = 0; a < sharers.size(); ++a) {
      for (std::size_t b = a + 1; b < sharers.size(); ++b) {
        const Index row = static_cast<Index>(out.rows.size());
        out.rows.push_back({g, sharers[a], sharers[b]});
        b_entries.emplace_back(row, offsets[sharers[a].sub] + sharers[a].local, 1.0);
        b_entries.emplace_back(row, offsets[sharers[b].sub] + sharers[b].local, -1.0);
      }
    }
  }
  out.R.resize(dim_w, iface.n_global);
  out.R.setFromTriplets(r_entries.begin(), r_entries.end());
  out.B.resize(static_cast<Index>(out.rows.size()), dim_w);
  out.B.setFromTriplets(b_entries.begin(), b_entries.end());
  return out;
}

Scalings build_scalings(const InterfaceMap& iface, const std::vector<Index>& offsets,
                        const std::vector<Matrix>& S_blocks, const std::vector<JumpRow>& rows,
                        Scaling mode)
{
  Scalings out;
  const Index dim_w = offsets.back();
  out.D_P = Vector::Zero(dim_w);
  for (int g = 0; g < iface.n_global; ++g) {
    const auto& sharers = iface.sharers[g];
    if (mode == Scaling::multiplicity) {
      for (const Sharer& s : sharers) out.D_P(offsets[s.sub] + s.local) = 1.0 / double(sharers.size());
      continue;
    }
    double total = 0.0;
    for (const Sharer& s : sharers) total += S_blocks[s.sub](s.local, s.local);
    if (!(total > 0.0))
      throw NumericalError("stiffness scaling: vanishing diagonal sum at interface dof " + std::to_string(g));
    for (const Sharer& s : sharers) out.D_P(offsets[s.sub] + s.local) = S_blocks[s.sub](s.local, s.local) / total;
  }

  std::vector<Triplet> e_entries, bd_entries;
  for (int g = 0; g < iface.n_global; ++g)
    for (const Sharer& s : iface.sharers[g]) {
      const Index w = offsets[s.sub] + s.local;
      e_entries.emplace_back(g, w, out.D_P(w));
    }
  for (std::size_t row = 0; row < rows.size(); ++row) {
    const Index wp = offsets[rows[row].plus.sub] + rows[row].plus.local;
    const Index wm = offsets[rows[row].minus.sub] + rows[row].minus.local;
    // each side is weighted by the other sharer's D_P entry
    bd_entries.emplace_back(static_cast<Index>(row), wp, out.D_P(wm));
    bd_entries.emplace_back(static_cast<Index>(row), wm, -out.D_P(wp));
  }
  out.E.resize(iface.n_global, dim_w);
  out.E.setFromTriplets(e_entries.begin(), e_entries.end());
  out.B_D.resize(static_cast<Index>(rows.size()), dim_w);
  out.B_D.setFromTriplets(bd_entries.begin(), bd_entries.end());
  return out;
}

Matrix assemble_global_schur(const SparseMatrix& R, const std::vector<Matrix>& S_blocks,
                             const std::vector<Index>& offsets)
{
  const Index n = R.cols();
  // global dof of every W entry
  std::vector<Index> global_of(offsets.back(), -1);
  for (Index k = 0; k < R.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(R, k); it; ++it) global_of[it.row()] = it.col();

  Matrix s_hat = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < S_blocks.size(); ++i) {
    const Index off = offsets[i];
    const Matrix& s = S_blocks[i];
    for (Index b = 0; b < s.cols(); ++b)
      for (Index a = 0; a < s.rows(); ++a) s_hat(global_of[off + a], global_of[off + b]) += s(a, b);
  }
  if (!is_spd(s_hat))
    throw NumericalError("global Schur complement is not SPD (insufficient Dirichlet boundary?)");
  return s_hat;
}

NaturalCoarse build_natural_coarse(const SparseMatrix& B, const SparseMatrix& E,
                                   const std::vector<Matrix>& Z_blocks, const std::vector<Index>& offsets)
{
  NaturalCoarse out;
  Index n_z = 0;
  for (const auto& z : Z_blocks) n_z += z.cols();
  out.Z = Matrix::Zero(offsets.back(), n_z);
  Index col = 0;
  for (std::size_t i = 0; i < Z_blocks.size(); ++i) {
    const Matrix& z = Z_blocks[i];
    out.Z.block(offsets[i], col, z.rows(), z.cols()) = z;
    for (Index k = 0; k < z.cols(); ++k) out.column_sub.push_back(static_cast<int>(i));
    col += z.cols();
  }
  out.G = B * out.Z;
  out.C = E * out.Z;
  return out;
}

Vector CouplingOperators::apply_S(const Vector& w) const
{
  Vector out(w.size());
  for_each_index(exec, num_subs(), [&](std::ptrdiff_t i) {
    const Index n = block_size(i);
    out.segment(offsets[i], n) = S[i] * w.segment(offsets[i], n);
  });
  return out;
}

Vector CouplingOperators::apply_S_pinv(const Vector& w) const
{
  Vector out(w.size());
  for_each_index(exec, num_subs(), [&](std::ptrdiff_t i) {
    const Index n = block_size(i);
    out.segment(offsets[i], n) = pseudo_inverse_apply(S_eig[i], w.segment(offsets[i], n));
  });
  return out;
}

Matrix CouplingOperators::dense_S() const
{
  Matrix out = Matrix::Zero(dim_w(), dim_w());
  for (Index i = 0; i < num_subs(); ++i) out.block(offsets[i], offsets[i], block_size(i), block_size(i)) = S[i];
  return out;
}

Matrix CouplingOperators::dense_S_pinv() const
{
  Matrix out = Matrix::Zero(dim_w(), dim_w());
  for (Index i = 0; i < num_subs(); ++i)
    out.block(offsets[i], offsets[i], block_size(i), block_size(i)) = pseudo_inverse(S_eig[i]);
  return out;
}

CouplingOperators build_operators(const Problem& problem, Scaling scaling, Execution exec)
{
  CouplingOperators ops;
  ops.exec = exec;
  ops.scaling = scaling;
  ops.offsets = block_offsets(problem);
  std::vector<Matrix> z_blocks;
  for (const auto& s : problem.subs) {
    ops.S.push_back(s.S);
    z_blocks.push_back(s.Z);
  }
  ops.S_eig.resize(ops.S.size());
  for_each_index(exec, static_cast<std::ptrdiff_t>(ops.S.size()),
                 [&](std::ptrdiff_t i) { ops.S_eig[i] = sym_eig(ops.S[i]); });

  EmbeddingAndJump rb = build_embedding_and_jump(problem.iface, ops.offsets);
  ops.R = std::move(rb.R);
  ops.B = std::move(rb.B);
  ops.rows = std::move(rb.rows);

  Scalings sc = build_scalings(problem.iface, ops.offsets, ops.S, ops.rows, scaling);
  ops.D_P = std::move(sc.D_P);
  ops.E = std::move(sc.E);
  ops.B_D = std::move(sc.B_D);

  NaturalCoarse nc = build_natural_coarse(ops.B, ops.E, z_blocks, ops.offsets);
  ops.Z = std::move(nc.Z);
  ops.G = std::move(nc.G);
  ops.C = std::move(nc.C);
  ops.z_column_sub = std::move(nc.column_sub);

  ops.S_hat = assemble_global_schur(ops.R, ops.S, ops.offsets);
  ops.S_hat_factor = SpdFactor(ops.S_hat, "S_hat");
  return ops;
}

double AlgebraReport::worst() const
{
  return std::max({br, er_minus_identity, jump_plus_average, jump_average_transpose});
}

AlgebraReport verify_algebra(const CouplingOperators& ops)
{
  AlgebraReport report;
  const Matrix R = Matrix(ops.R);
  const Matrix B = Matrix(ops.B);
  const Matrix E = Matrix(ops.E);
  const Matrix B_D = Matrix(ops.B_D);
  report.br = max_abs(B * R);
  report.er_minus_identity = max_abs(E * R - Matrix::Identity(ops.dim_hat(), ops.dim_hat()));
  report.jump_plus_average = max_abs(B_D.transpose() * B + R * E - Matrix::Identity(ops.dim_w(), ops.dim_w()));
  report.jump_average_transpose = max_abs(B.transpose() * B_D * E.transpose());
  return report;
}

Vector CoarseSplit::solve_rr(const Vector& v) const
{
  Vector out(v.size());
  for_each_index(exec, static_cast<std::ptrdiff_t>(blocks.size()), [&](std::ptrdiff_t i) {
    const Index n = r_offsets[i + 1] - r_offsets[i];
    if (n > 0) out.segment(r_offsets[i], n) = blocks[i].S_rr_factor.solve(Vector(v.segment(r_offsets[i], n)));
  });
  return out;
}

Vector CoarseSplit::apply_rr(const Vector& v) const
{
  Vector out(v.size());
  for_each_index(exec, static_cast<std::ptrdiff_t>(blocks.size()), [&](std::ptrdiff_t i) {
    const Index n = r_offsets[i + 1] - r_offsets[i];
    if (n > 0) out.segment(r_offsets[i], n) = blocks[i].S_rr * v.segment(r_offsets[i], n);
  });
  return out;
}

Vector CoarseSplit::apply_rc(const Vector& u_c) const
{
  Vector out = Vector::Zero(dim_r());
  for_each_index(exec, static_cast<std::ptrdiff_t>(blocks.size()), [&](std::ptrdiff_t i) {
    const CornerBlock& blk = blocks[i];
    if (blk.r_local.empty() || blk.c_local.empty()) return;
    Vector local_c(blk.c_local.size());
    for (std::size_t k = 0; k < blk.c_coarse.size(); ++k) local_c(k) = u_c(blk.c_coarse[k]);
    out.segment(r_offsets[i], blk.r_local.size()) = blk.S_rc * local_c;
  });
  return out;
}

Vector CoarseSplit::apply_rc_transpose(const Vector& v_r) const
{
  Vector out = Vector::Zero(num_coarse());
  // scatter into shared coarse entries; kept serial so the sum order is fixed
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const CornerBlock& blk = blocks[i];
    if (blk.r_local.empty() || blk.c_local.empty()) continue;
    const Vector local_c = blk.S_rc.transpose() * v_r.segment(r_offsets[i], blk.r_local.size());
    for (std::size_t k = 0; k < blk.c_coarse.size(); ++k) out(blk.c_coarse[k]) += local_c(k);
  }
  return out;
}

CoarseSplit build_coarse_split(const Problem& problem, const CouplingOperators& ops, CornerRule rule)
{
  (void)rule;  // substructure vertices is the only rule
  CoarseSplit split;
  split.exec = ops.exec;
  const InterfaceMap& iface = problem.iface;
  split.coarse_of_global.assign(iface.n_global, -1);
  for (int g = 0; g < iface.n_global; ++g) {
    if (!iface.is_vertex[g]) continue;
    split.coarse_of_global[g] = static_cast<int>(split.corner_dofs.size());
    split.corner_dofs.push_back(g);
  }

  const Index n_subs = ops.num_subs();
  split.blocks.resize(n_subs);
  split.r_offsets.assign(1, 0);
  for (Index i = 0; i < n_subs; ++i) {
    CornerBlock& blk = split.blocks[i];
    const auto& l2g = problem.subs[i].iface_local_to_global;
    for (std::size_t k = 0; k < l2g.size(); ++k) {
      const int coarse = split.coarse_of_global[l2g[k]];
      if (coarse >= 0) {
        blk.c_local.push_back(static_cast<Index>(k));
        blk.c_coarse.push_back(coarse);
      } else {
        blk.r_local.push_back(static_cast<Index>(k));
      }
    }
    split.r_offsets.push_back(split.r_offsets.back() + static_cast<Index>(blk.r_local.size()));
  }

  for_each_index(ops.exec, n_subs, [&](std::ptrdiff_t i) {
    CornerBlock& blk = split.blocks[i];
    const Matrix& s = ops.S[i];
    blk.S_cc = s(blk.c_local, blk.c_local);
    blk.S_rc = s(blk.r_local, blk.c_local);
    blk.S_rr = s(blk.r_local, blk.r_local);
    blk.S_rr_factor = SpdFactor(blk.S_rr, "S_rr block of substructure " + std::to_string(i) +
                                              " (floating substructure without corners?)");
  });

  const Index n_c = split.num_coarse();
  split.S_cc_tilde = Matrix::Zero(n_c, n_c);
  split.S_cc_star = Matrix::Zero(n_c, n_c);
  for (Index i = 0; i < n_subs; ++i) {
    const CornerBlock& blk = split.blocks[i];
    Matrix local_star = blk.S_cc;
    if (!blk.r_local.empty()) local_star -= blk.S_rc.transpose() * blk.S_rr_factor.solve(blk.S_rc);
    for (std::size_t a = 0; a < blk.c_coarse.size(); ++a)
      for (std::size_t b = 0; b < blk.c_coarse.size(); ++b) {
        split.S_cc_tilde(blk.c_coarse[a], blk.c_coarse[b]) += blk.S_cc(a, b);
        split.S_cc_star(blk.c_coarse[a], blk.c_coarse[b]) += local_star(a, b);
      }
  }
  split.S_cc_star = 0.5 * (split.S_cc_star + split.S_cc_star.transpose()).eval();
  split.S_cc_star_factor = SpdFactor(split.S_cc_star, "coarse matrix S*_cc");

  std::vector<Triplet> er, ec;
  for (Index i = 0; i < n_subs; ++i) {
    const CornerBlock& blk = split.blocks[i];
    const auto& l2g = problem.subs[i].iface_local_to_global;
    for (std::size_t p = 0; p < blk.r_local.size(); ++p) {
      const Index k = blk.r_local[p];
      er.emplace_back(l2g[k], split.r_offsets[i] + static_cast<Index>(p), ops.D_P(ops.offsets[i] + k));
    }
  }
  for (Index c = 0; c < n_c; ++c) ec.emplace_back(split.corner_dofs[c], c, 1.0);
  split.E_r.resize(iface.n_global, split.dim_r());
  split.E_r.setFromTriplets(er.begin(), er.end());
  split.E_c.resize(iface.n_global, n_c);
  split.E_c.setFromTriplets(ec.begin(), ec.end());
  return split;
}

} // namespace ddlab
