#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ddlab/errors.hpp"
#include "ddlab/krylov.hpp"
#include "ddlab/preconditioners.hpp"
#include "oracle.hpp"

#include <random>

using namespace ddlab;

namespace {

struct Fixture {
  Problem problem;
  CouplingOperators ops;
  CoarseSplit split;

  explicit Fixture(const ProblemConfig& c, Scaling s = Scaling::multiplicity)
      : problem(build_problem(c, Execution::serial)),
        ops(build_operators(problem, s, Execution::serial)),
        split(build_coarse_split(problem, ops))
  {
  }
};

Vector random_vector(Index n, unsigned seed)
{
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = dist(gen);
  return v;
}

Matrix dense_of(Index n, const LinearMap& f)
{
  return assemble_dense(n, n, f, Execution::serial);
}

void check_symmetric_psd(const Matrix& m, double tol)
{
  CHECK((m - m.transpose()).norm() <= tol * m.norm());
  const Vector ev = sym_eigenvalues(0.5 * (m + m.transpose()));
  CHECK(ev(0) >= -tol * ev(ev.size() - 1));
}

} // namespace

TEST_CASE("bar4 FETI-1 scalars")
{
  const Fixture fx(bar4_config());
  const Feti1Projector proj(fx.ops, QChoice::dirichlet);
  const Vector one = Vector::Ones(1);
  CHECK(proj.apply_Q(one)(0) == doctest::Approx(0.25));
  CHECK(proj.GtQG()(0, 0) == doctest::Approx(0.25));
  CHECK(std::abs(proj.apply_P(one)(0)) <= 1e-15);
  CHECK(feti1_precond_apply(fx.ops, one)(0) == doctest::Approx(0.25));
  CHECK(feti1_precond_apply(fx.ops, Vector::Zero(1)).norm() == 0.0);
  CHECK(feti1_F_apply(fx.ops, one)(0) == doctest::Approx(1.0));

  const Feti1System sys = feti1_build(fx.ops, QChoice::dirichlet, fx.ops.E.transpose() * one);
  const SolveReport rep = projected_pcg(sys);
  CHECK(rep.iterations == 0);
  CHECK((rep.solution - sys.lambda0).norm() == 0.0);
  CHECK(recover_primal(sys, rep.solution).u(0) == doctest::Approx(1.0));
  CHECK(pfeti1_apply(proj, one)(0) == doctest::Approx(1.0));
}

TEST_CASE("Dirichlet preconditioner matches its dense product")
{
  const Fixture fx(oracle::checkerboard(3, 2, 1.0, 10.0), Scaling::stiffness);
  const Matrix BD(fx.ops.B_D);
  const Matrix reference = BD * fx.ops.dense_S() * BD.transpose();
  const Vector mu = random_vector(fx.ops.dim_lambda(), 1);
  CHECK((feti1_precond_apply(fx.ops, mu) - reference * mu).norm() <= 1e-12 * (reference * mu).norm());
}

TEST_CASE("FETI-1 projector properties")
{
  const Fixture fx(oracle::square(3, 2));
  for (QChoice q : {QChoice::identity, QChoice::dirichlet}) {
    const Feti1Projector proj(fx.ops, q);
    const Index nl = fx.ops.dim_lambda();
    const Matrix P = dense_of(nl, [&](const Vector& v) { return proj.apply_P(v); });
    const Matrix H = dense_of(fx.ops.dim_w(), [&](const Vector& v) { return proj.apply_H(v); });
    CHECK((P * P - P).norm() <= 1e-12 * P.norm());
    CHECK((fx.ops.G.transpose() * P).norm() <= 1e-12 * fx.ops.G.norm() * P.norm());
    CHECK((H * H - H).norm() <= 1e-12 * H.norm());
    const Vector x = random_vector(nl, 2);
    CHECK((proj.apply_Pt(x) - P.transpose() * x).norm() <= 1e-13 * x.norm());
  }
}

TEST_CASE("FETI-1 solve recovers the direct solution")
{
  for (QChoice q : {QChoice::identity, QChoice::dirichlet}) {
    const Fixture fx(oracle::square(2, 3));
    const Vector r = random_vector(fx.ops.dim_hat(), 3);
    const Feti1System sys = feti1_build(fx.ops, q, fx.ops.E.transpose() * r);
    const SolveReport rep = projected_pcg(sys, {1e-12, 200});
    CHECK(rep.converged);
    const PrimalRecovery rec = recover_primal(sys, rep.solution);
    const Vector direct = fx.ops.S_hat_factor.solve(r);
    CHECK((rec.u - direct).norm() <= 1e-8 * direct.norm());
    CHECK((fx.ops.B * rec.w).norm() <= 1e-8 * rec.w.norm());
  }
  const Fixture fx(oracle::square(2, 2));
  const Feti1System zero = feti1_build(fx.ops, QChoice::dirichlet, Vector::Zero(fx.ops.dim_w()));
  const SolveReport rep = projected_pcg(zero);
  const PrimalRecovery rec = recover_primal(zero, rep.solution);
  CHECK(rep.solution.norm() == 0.0);
  CHECK(rec.w.norm() == 0.0);
  CHECK(rec.u.norm() == 0.0);
}

TEST_CASE("recover_primal flags incompatible multipliers")
{
  const Fixture fx(oracle::square(2, 2));
  const Vector r = random_vector(fx.ops.dim_hat(), 4);
  const Feti1System sys = feti1_build(fx.ops, QChoice::dirichlet, fx.ops.E.transpose() * r);
  Vector bad = sys.lambda0;
  bad += fx.ops.G.col(0);
  CHECK_THROWS_AS(recover_primal(sys, bad), NumericalError);
}

TEST_CASE("P-FETI-1 depends on Q")
{
  const Fixture fx(oracle::square(2, 2));
  const Feti1Projector identity(fx.ops, QChoice::identity);
  const Feti1Projector dirichlet(fx.ops, QChoice::dirichlet);
  const Index n = fx.ops.dim_hat();
  const Matrix a = dense_of(n, [&](const Vector& r) { return pfeti1_apply(identity, r); });
  const Matrix b = dense_of(n, [&](const Vector& r) { return pfeti1_apply(dirichlet, r); });
  CHECK(oracle::rel_diff(a, b) > 1e-3);
  CHECK(pfeti1_apply(dirichlet, Vector::Zero(n)).norm() == 0.0);
}

TEST_CASE("BDD")
{
  SUBCASE("bar4")
  {
    const Fixture fx(bar4_config());
    const Bdd bdd(fx.ops);
    CHECK(bdd.coarse_correction(Vector::Ones(1))(0) == doctest::Approx(1.0));
    CHECK(bdd.apply(Vector::Ones(1))(0) == doctest::Approx(1.0));
  }
  SUBCASE("no floating substructure: plain Neumann-Neumann")
  {
    ProblemConfig c = oracle::square(2, 3);
    c.dirichlet = DirichletEdges::all();
    const Fixture fx(c);
    const Bdd bdd(fx.ops);
    const Vector r = random_vector(fx.ops.dim_hat(), 5);
    const Vector nn = fx.ops.E * fx.ops.apply_S_pinv(fx.ops.E.transpose() * r);
    CHECK((bdd.apply(r) - nn).norm() <= 1e-13 * nn.norm());
  }
  SUBCASE("2x2: symmetric PSD and balanced coarse residual")
  {
    const Fixture fx(oracle::square(2, 2));
    const Bdd bdd(fx.ops);
    check_symmetric_psd(dense_of(fx.ops.dim_hat(), [&](const Vector& r) { return bdd.apply(r); }), 1e-11);
    const Vector r = random_vector(fx.ops.dim_hat(), 6);
    const Vector balanced = r - fx.ops.S_hat * bdd.coarse_correction(r);
    CHECK((fx.ops.C.transpose() * balanced).norm() <= 1e-10 * r.norm());
  }
}

TEST_CASE("FETI-DP")
{
  SUBCASE("bar4 is fully coarse")
  {
    const Fixture fx(bar4_config());
    const FetiDp dp(fx.ops, fx.split);
    CHECK(dp.dim_lambda() == 0);
    CHECK(dp.recover(Vector(0), Vector::Ones(1))(0) == doctest::Approx(1.0));
    CHECK(pfetidp_apply(fx.split, Vector::Ones(1))(0) == doctest::Approx(1.0));
  }
  SUBCASE("S~ inverse and product are consistent")
  {
    const Fixture fx(oracle::checkerboard(3, 2, 1.0, 100.0), Scaling::stiffness);
    const FetiDp dp(fx.ops, fx.split);
    const Vector x = random_vector(dp.dim_tilde(), 7);
    CHECK((dp.apply_Stilde(dp.apply_Stilde_inv(x)) - x).norm() <= 1e-10 * x.norm());
    const Matrix St = dense_of(dp.dim_tilde(), [&](const Vector& v) { return dp.apply_Stilde(v); });
    const Matrix Sti = dense_of(dp.dim_tilde(), [&](const Vector& v) { return dp.apply_Stilde_inv(v); });
    CHECK((St * Sti - Matrix::Identity(St.rows(), St.cols())).norm() <= 1e-10 * St.rows());
    CHECK((St - St.transpose()).norm() <= 1e-12 * St.norm());
  }
  SUBCASE("2x2: preconditioned spectrum bounded below by one")
  {
    const Fixture fx(oracle::square(2, 2));
    const FetiDp dp(fx.ops, fx.split);
    const Matrix F = dense_of(dp.dim_lambda(), [&](const Vector& v) { return dp.apply_F(v); });
    const Matrix M = dense_of(dp.dim_lambda(), [&](const Vector& v) { return dp.apply_M(v); });
    const Matrix L = F.llt().matrixL();
    const Vector ev = sym_eigenvalues(Matrix(L.transpose() * M * L));
    CHECK(ev(0) >= 1 - 1e-10);
  }
  SUBCASE("solve recovers the direct solution")
  {
    const Fixture fx(oracle::square(3, 3));
    const FetiDp dp(fx.ops, fx.split);
    const Vector r = random_vector(fx.ops.dim_hat(), 8);
    const SolveReport rep = pcg([&](const Vector& v) { return dp.apply_F(v); },
                                [&](const Vector& v) { return dp.apply_M(v); }, dp.rhs(r), {1e-12, 200});
    CHECK(rep.converged);
    const Vector direct = fx.ops.S_hat_factor.solve(r);
    CHECK((dp.recover(rep.solution, r) - direct).norm() <= 1e-8 * direct.norm());
  }
}

TEST_CASE("BDDC")
{
  SUBCASE("bar4")
  {
    const Fixture fx(bar4_config());
    const Bddc bddc(fx.ops, fx.split);
    CHECK((bddc.Psi() - Matrix::Ones(2, 1)).norm() == 0.0);
    CHECK(bddc.apply(Vector::Ones(1))(0) == doctest::Approx(1.0));
  }
  SUBCASE("2x2: symmetric PSD, r = 0 maps to 0")
  {
    const Fixture fx(oracle::square(2, 2));
    const Bddc bddc(fx.ops, fx.split);
    check_symmetric_psd(dense_of(fx.ops.dim_hat(), [&](const Vector& r) { return bddc.apply(r); }), 1e-11);
    CHECK(bddc.apply(Vector::Zero(fx.ops.dim_hat())).norm() == 0.0);
    CHECK(pfetidp_apply(fx.split, Vector::Zero(fx.ops.dim_hat())).norm() == 0.0);
  }
  SUBCASE("coarse basis is energy minimal and its Gram matrix is S*_cc")
  {
    const Fixture fx(oracle::checkerboard(3, 3, 1.0, 1e3), Scaling::stiffness);
    const Bddc bddc(fx.ops, fx.split);
    CHECK(oracle::rel_diff(bddc.coarse_gram(), fx.split.S_cc_star) <= 1e-10);
    const double base = coarse_energy(fx.ops, bddc.Psi());
    std::mt19937 gen(9);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 20; ++trial) {
      Matrix perturbed = bddc.Psi();
      const double size = std::pow(10.0, -(trial % 5));
      for (Index i = 0; i < fx.ops.num_subs(); ++i)
        for (Index row : fx.split.blocks[i].r_local)
          for (Index k = 0; k < perturbed.cols(); ++k) perturbed(fx.ops.offsets[i] + row, k) += size * dist(gen);
      CHECK(coarse_energy(fx.ops, perturbed) >= base);
    }
  }
  SUBCASE("P-FETI-DP and BDDC coincide")
  {
    for (Scaling s : {Scaling::multiplicity, Scaling::stiffness}) {
      const Fixture fx(oracle::checkerboard(3, 3, 1.0, 1e4), s);
      const Bddc bddc(fx.ops, fx.split);
      const Index n = fx.ops.dim_hat();
      const Matrix a = dense_of(n, [&](const Vector& r) { return bddc.apply(r); });
      const Matrix b = dense_of(n, [&](const Vector& r) { return pfetidp_apply(fx.split, r); });
      CHECK(oracle::rel_diff(a, b) <= 1e-10);
    }
  }
}

TEST_CASE("P-FETI-1 with the Dirichlet Q equals BDD")
{
  for (Scaling s : {Scaling::multiplicity, Scaling::stiffness})
    for (bool jumps : {false, true}) {
      const Fixture fx(jumps ? oracle::checkerboard(2, 3) : oracle::square(2, 3), s);
      const Feti1Projector proj(fx.ops, QChoice::dirichlet);
      const Bdd bdd(fx.ops);
      const Index n = fx.ops.dim_hat();
      const Matrix a = dense_of(n, [&](const Vector& r) { return pfeti1_apply(proj, r); });
      const Matrix b = dense_of(n, [&](const Vector& r) { return bdd.apply(r); });
      CHECK(oracle::rel_diff(a, b) <= 1e-10);
    }
}

TEST_CASE("singular FETI-1 coarse problem names the Q choice")
{
  const Fixture fx(oracle::square(2, 2));
  CouplingOperators degenerate = fx.ops;
  for (Matrix& s : degenerate.S) s.setZero();
  try {
    const Feti1Projector proj(degenerate, QChoice::dirichlet);
    FAIL("expected a singular coarse problem");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("dirichlet") != std::string::npos);
  }
  CHECK_NOTHROW(Feti1Projector(degenerate, QChoice::identity));
}
