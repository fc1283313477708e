#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ddlab/errors.hpp"
#include "ddlab/operators.hpp"
#include "oracle.hpp"

#include <algorithm>

using namespace ddlab;

namespace {

Matrix dense(const SparseMatrix& a)
{
  return Matrix(a);
}

CouplingOperators operators_for(const ProblemConfig& c, Scaling s = Scaling::multiplicity)
{
  return build_operators(build_problem(c, Execution::serial), s, Execution::serial);
}

} // namespace

TEST_CASE("bar4 coupling operators")
{
  const CouplingOperators ops = operators_for(bar4_config());
  Matrix R(2, 1), B(1, 2), E(1, 2), BD(1, 2);
  R << 1, 1;
  B << 1, -1;
  E << 0.5, 0.5;
  BD << 0.5, -0.5;
  CHECK((dense(ops.R) - R).norm() == 0.0);
  CHECK((dense(ops.B) - B).norm() == 0.0);
  CHECK((dense(ops.E) - E).norm() == 0.0);
  CHECK((dense(ops.B_D) - BD).norm() == 0.0);
  CHECK((ops.D_P - Vector::Constant(2, 0.5)).norm() == 0.0);
  CHECK(ops.S_hat.rows() == 1);
  CHECK(ops.S_hat(0, 0) == doctest::Approx(1.0));

  Matrix Z(2, 1);
  Z << 0, 1;
  CHECK((ops.Z - Z).norm() == 0.0);
  REQUIRE(ops.G.size() == 1);
  CHECK(ops.G(0, 0) == -1.0);
  CHECK(ops.C(0, 0) == 0.5);

  const AlgebraReport a = verify_algebra(ops);
  CHECK(a.worst() == 0.0);
}

TEST_CASE("crosspoint of multiplicity four carries six jump rows")
{
  const Problem p = build_problem(oracle::square(2, 2), Execution::serial);
  const CouplingOperators ops = build_operators(p, Scaling::multiplicity, Execution::serial);
  const auto it = std::find(p.iface.multiplicity.begin(), p.iface.multiplicity.end(), 4);
  REQUIRE(it != p.iface.multiplicity.end());
  const int dof = static_cast<int>(it - p.iface.multiplicity.begin());
  CHECK(std::count_if(ops.rows.begin(), ops.rows.end(), [&](const JumpRow& r) { return r.dof == dof; }) == 6);
  for (const JumpRow& r : ops.rows) CHECK(r.plus.sub < r.minus.sub);
}

TEST_CASE("algebraic identities across configurations")
{
  for (int m : {2, 3, 4})
    for (int n : {1, 2, 4})
      for (Scaling s : {Scaling::multiplicity, Scaling::stiffness}) {
        CAPTURE(m);
        CAPTURE(n);
        const CouplingOperators ops = operators_for(oracle::square(m, n), s);
        const AlgebraReport a = verify_algebra(ops);
        CHECK(a.br == 0.0);
        CHECK(a.worst() <= 1e-13);
        CHECK((dense(ops.B) * dense(ops.R)).norm() == 0.0);
      }
  const AlgebraReport jumps = verify_algebra(operators_for(oracle::checkerboard(4, 4), Scaling::stiffness));
  CHECK(jumps.br == 0.0);
  CHECK(jumps.worst() <= 1e-10);
}

TEST_CASE("global Schur complement matches the assembled global stiffness")
{
  std::vector<ProblemConfig> configs{oracle::square(2, 2), oracle::square(3, 2), oracle::checkerboard(3, 3, 1.0, 50.0),
                                     bar4_config()};
  ProblemConfig rect = oracle::square(2, 3);
  rect.subs_x = 3;
  rect.dirichlet = DirichletEdges::left_bottom();
  configs.push_back(rect);
  for (const auto& c : configs) {
    const CouplingOperators ops = operators_for(c);
    CHECK(oracle::rel_diff(ops.S_hat, oracle::global_interface_schur(c)) <= 1e-12);
  }
}

TEST_CASE("stiffness scaling")
{
  SUBCASE("equal coefficients on a symmetric layout reduce to multiplicity weights")
  {
    ProblemConfig c = oracle::square(2, 2);
    c.dirichlet = DirichletEdges::all();
    const CouplingOperators m = operators_for(c, Scaling::multiplicity);
    const CouplingOperators s = operators_for(c, Scaling::stiffness);
    CHECK((m.D_P - s.D_P).lpNorm<Eigen::Infinity>() <= 1e-14);
  }
  SUBCASE("coefficient jumps push the weight to the stiff side")
  {
    ProblemConfig c = oracle::checkerboard(2, 2);
    c.dirichlet = DirichletEdges::all();
    const Problem p = build_problem(c, Execution::serial);
    const CouplingOperators ops = build_operators(p, Scaling::stiffness, Execution::serial);
    const double soft = 1e-6 / (1 + 1e-6), stiff = 1 / (1 + 1e-6);
    int checked = 0;
    for (int dof = 0; dof < p.iface.n_global; ++dof) {
      if (p.iface.multiplicity[dof] != 2) continue;
      for (const Sharer& sh : p.iface.sharers[dof]) {
        const double w = ops.D_P(ops.offsets[sh.sub] + sh.local);
        CHECK(w == doctest::Approx(p.subs[sh.sub].rho == 1.0 ? soft : stiff).epsilon(1e-12));
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("natural coarse space")
{
  const Problem p = build_problem(oracle::square(3, 2), Execution::serial);
  const CouplingOperators ops = build_operators(p, Scaling::multiplicity, Execution::serial);
  CHECK(ops.Z.cols() == p.num_floating());
  CHECK((ops.G - dense(ops.B) * ops.Z).norm() <= 1e-15);
  for (Index k = 0; k < ops.C.cols(); ++k) {
    const int sub = ops.z_column_sub[k];
    Vector expected = Vector::Zero(ops.dim_hat());
    for (Index l = 0; l < ops.block_size(sub); ++l) {
      const Index w = ops.offsets[sub] + l;
      expected(p.subs[sub].iface_local_to_global[l]) += ops.D_P(w) * ops.Z(w, k);
    }
    CHECK((ops.C.col(k) - expected).norm() <= 1e-15);
  }

  ProblemConfig pinned = oracle::square(2, 3);
  pinned.dirichlet = DirichletEdges::all();
  const CouplingOperators none = operators_for(pinned);
  CHECK(none.G.cols() == 0);
  CHECK(none.C.cols() == 0);
}

TEST_CASE("S and its pseudo-inverse act block by block")
{
  const CouplingOperators ops = operators_for(oracle::square(3, 2));
  const Matrix S = ops.dense_S();
  const Matrix Sp = ops.dense_S_pinv();
  CHECK((S * Sp * S - S).norm() <= 1e-10 * S.norm());
  const Vector w = Vector::LinSpaced(ops.dim_w(), -1.0, 2.0);
  CHECK((ops.apply_S(w) - S * w).norm() <= 1e-13 * (S * w).norm());
  CHECK((ops.apply_S_pinv(w) - Sp * w).norm() <= 1e-12 * (Sp * w).norm());
}

TEST_CASE("corner split")
{
  SUBCASE("bar4: the single interface dof is the only corner")
  {
    const Problem p = build_problem(bar4_config(), Execution::serial);
    const CouplingOperators ops = build_operators(p, Scaling::multiplicity, Execution::serial);
    const CoarseSplit split = build_coarse_split(p, ops);
    CHECK(split.num_coarse() == 1);
    CHECK(split.dim_r() == 0);
    CHECK(split.S_cc_tilde(0, 0) == doctest::Approx(1.0));
    CHECK(split.S_cc_star(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("2x2 subs: crosspoint plus interface endpoints on the boundary")
  {
    const Problem p = build_problem(oracle::square(2, 2), Execution::serial);
    const CouplingOperators ops = build_operators(p, Scaling::multiplicity, Execution::serial);
    const CoarseSplit split = build_coarse_split(p, ops);
    std::vector<std::array<double, 2>> corners;
    for (int dof : split.corner_dofs) corners.push_back(p.mesh.coords[p.iface.node[dof]]);
    const std::vector<std::array<double, 2>> expected{{0.5, 0.0}, {0.5, 0.5}, {1.0, 0.5}, {0.5, 1.0}};
    CHECK(corners == expected);
    for (const CornerBlock& b : split.blocks)
      if (!b.r_local.empty()) CHECK(is_spd(b.S_rr));
    CHECK(is_spd(split.S_cc_star));
    CHECK(split.E_c.rows() == ops.dim_hat());
    CHECK(split.E_r.cols() == split.dim_r());
  }
  SUBCASE("S*_cc is the Schur complement of the partially assembled S~")
  {
    const Problem p = build_problem(oracle::checkerboard(3, 2, 1.0, 10.0), Execution::serial);
    const CouplingOperators ops = build_operators(p, Scaling::stiffness, Execution::serial);
    const CoarseSplit split = build_coarse_split(p, ops);
    const Index nc = split.num_coarse(), nr = split.dim_r();
    Matrix tilde = Matrix::Zero(nc + nr, nc + nr);
    for (std::size_t i = 0; i < split.blocks.size(); ++i) {
      const CornerBlock& b = split.blocks[i];
      const Index r0 = nc + split.r_offsets[i];
      for (std::size_t a = 0; a < b.c_local.size(); ++a)
        for (std::size_t c = 0; c < b.c_local.size(); ++c) tilde(b.c_coarse[a], b.c_coarse[c]) += b.S_cc(a, c);
      for (std::size_t a = 0; a < b.r_local.size(); ++a) {
        for (std::size_t c = 0; c < b.c_local.size(); ++c) {
          tilde(r0 + a, b.c_coarse[c]) += b.S_rc(a, c);
          tilde(b.c_coarse[c], r0 + a) += b.S_rc(a, c);
        }
        for (std::size_t c = 0; c < b.r_local.size(); ++c) tilde(r0 + a, r0 + c) = b.S_rr(a, c);
      }
    }
    const Matrix scc = tilde.topLeftCorner(nc, nc);
    const Matrix src = tilde.bottomLeftCorner(nr, nc);
    const Matrix srr = tilde.bottomRightCorner(nr, nr);
    const Matrix star = scc - src.transpose() * srr.llt().solve(src);
    CHECK(oracle::rel_diff(split.S_cc_tilde, scc) <= 1e-14);
    CHECK(oracle::rel_diff(split.S_cc_star, star) <= 1e-12);
  }
}

TEST_CASE("serial and parallel operator builds agree bitwise")
{
  const Problem p = build_problem(oracle::checkerboard(3, 3, 1.0, 1e4), Execution::serial);
  const CouplingOperators s = build_operators(p, Scaling::stiffness, Execution::serial);
  const CouplingOperators q = build_operators(p, Scaling::stiffness, Execution::parallel);
  CHECK((s.S_hat - q.S_hat).norm() == 0.0);
  CHECK((s.D_P - q.D_P).norm() == 0.0);
  const Vector w = Vector::LinSpaced(s.dim_w(), 0.0, 1.0);
  CHECK((s.apply_S_pinv(w) - q.apply_S_pinv(w)).norm() == 0.0);
  const CoarseSplit cs = build_coarse_split(p, s);
  const CoarseSplit cq = build_coarse_split(p, q);
  CHECK((cs.S_cc_star - cq.S_cc_star).norm() == 0.0);
}
