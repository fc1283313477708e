#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ddlab/errors.hpp"
#include "ddlab/experiment.hpp"
#include "oracle.hpp"

using namespace ddlab;

namespace {

Matrix dense_of(Index n, const LinearMap& f)
{
  return assemble_dense(n, n, f, Execution::serial);
}

SpectrumReport report(const char* name, std::vector<double> values, std::vector<double> targets)
{
  return make_spectrum_report(name, Eigen::Map<Vector>(values.data(), values.size()), std::move(targets));
}

} // namespace

TEST_CASE("primal spectra")
{
  Lab bar(bar4_config(), Scaling::multiplicity, QChoice::dirichlet, Execution::serial);
  const Vector bdd = primal_spectrum(bar.dense_preconditioner(Method::bdd), bar.ops().S_hat);
  REQUIRE(bdd.size() == 1);
  CHECK(bdd(0) == doctest::Approx(1.0));

  Lab lab(oracle::square(2, 2), Scaling::multiplicity, QChoice::dirichlet, Execution::serial);
  const Matrix& S_hat = lab.ops().S_hat;
  const Vector exact = primal_spectrum(S_hat.inverse(), S_hat);
  CHECK((exact - Vector::Ones(exact.size())).lpNorm<Eigen::Infinity>() <= 1e-12);

  const Vector bddc = primal_spectrum(lab.dense_preconditioner(Method::bddc), S_hat);
  CHECK(bddc(0) >= 1 - 1e-8);

  Matrix nonsym = S_hat;
  nonsym(0, 1) += 1.0;
  CHECK_THROWS_AS(primal_spectrum(S_hat, nonsym), NumericalError);
}

TEST_CASE("dual spectra")
{
  Lab bar(bar4_config(), Scaling::multiplicity, QChoice::dirichlet, Execution::serial);
  const SpectrumReport s = bar.spectrum(Method::feti1);
  REQUIRE(s.eigenvalues.size() == 1);
  CHECK(std::abs(s.eigenvalues(0)) <= 1e-14);

  Lab lab(oracle::square(2, 2), Scaling::multiplicity, QChoice::dirichlet, Execution::serial);
  const CouplingOperators& ops = lab.ops();
  const Index nl = ops.dim_lambda();
  const Matrix F = dense_of(nl, [&](const Vector& v) { return feti1_F_apply(ops, v); });
  const Matrix P = dense_of(nl, [&](const Vector& v) { return lab.projector().apply_P(v); });
  const Vector with_identity = dual_spectrum(Matrix::Identity(nl, nl), F, P);
  const Vector reference = sym_eigenvalues(Matrix(0.5 * (P.transpose() * F * P + (P.transpose() * F * P).transpose())));
  CHECK((with_identity - reference).lpNorm<Eigen::Infinity>() <= 1e-12 * reference.maxCoeff());

  const SpectrumReport dp = lab.spectrum(Method::fetidp);
  double smallest_nonzero = 1e300;
  for (Index i = 0; i < dp.eigenvalues.size(); ++i)
    if (dp.eigenvalues(i) > 1e-6) smallest_nonzero = std::min(smallest_nonzero, dp.eigenvalues(i));
  CHECK(smallest_nonzero >= 1 - 1e-8);

  CHECK_THROWS_AS(dual_spectrum(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)), NumericalError);
}

TEST_CASE("clusters and spectrum reports")
{
  const auto clusters = cluster_values({1.0, 1.0 + 1e-9, 2.0, 3.0, 3.0});
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[0].count == 2);
  CHECK(clusters[2].count == 2);
  CHECK(cluster_values({}).empty());

  const SpectrumReport r = report("dual", {0.0, 1e-9, 1.0, 1.0 + 1e-8, 2.5, 4.0}, {0.0, 1.0});
  CHECK(r.removed.size() == 4);
  CHECK(r.kept == std::vector<double>{2.5, 4.0});
  CHECK(r.condition_number() == doctest::Approx(4.0));
}

TEST_CASE("spectra_match")
{
  SUBCASE("empty filtered multisets match")
  {
    const MatchVerdict v = spectra_match(report("p", {1.0}, {1.0}), report("d", {0.0}, {0.0, 1.0}));
    CHECK(v.pass);
    CHECK(v.pairs.empty());
  }
  SUBCASE("count mismatch lists the orphans")
  {
    const MatchVerdict v = spectra_match(report("p", {1.0, 2.0, 3.0}, {1.0}), report("d", {0.0, 2.0}, {0.0, 1.0}));
    CHECK_FALSE(v.pass);
    CHECK(v.orphans_primal == std::vector<double>{3.0});
    CHECK(v.message.find("orphaned") != std::string::npos);
  }
  SUBCASE("multiplicities must agree")
  {
    const MatchVerdict v = spectra_match(report("p", {2.0, 2.0, 3.0}, {1.0}), report("d", {2.0, 3.0, 3.0}, {0.0, 1.0}));
    CHECK_FALSE(v.pass);
  }
  SUBCASE("BDD and FETI-1 on 2x2 substructures")
  {
    Lab lab(oracle::square(2, 2), Scaling::multiplicity, QChoice::dirichlet, Execution::serial);
    const MatchVerdict v = spectra_match(lab.spectrum(Method::bdd), lab.spectrum(Method::feti1));
    CHECK(v.pass);
    CHECK(v.max_pair_diff <= 1e-8);
  }
  SUBCASE("a mismatched Q breaks the correspondence")
  {
    Lab lab(oracle::square(2, 2), Scaling::multiplicity, QChoice::identity, Execution::serial);
    CHECK_FALSE(spectra_match(lab.spectrum(Method::bdd), lab.spectrum(Method::feti1)).pass);
  }
}

TEST_CASE("identity suite")
{
  SUBCASE("bar4")
  {
    Lab lab(bar4_config(), Scaling::multiplicity, QChoice::dirichlet, Execution::serial);
    const IdentityTable t = identity_suite(lab.ops(), lab.projector(), lab.bdd());
    CHECK(t.rows.size() == 10);
    CHECK(t.worst() == 0.0);
  }
  SUBCASE("2x2 substructures")
  {
    Lab lab(oracle::square(2, 3), Scaling::multiplicity, QChoice::dirichlet, Execution::serial);
    CHECK(identity_suite(lab.ops(), lab.projector(), lab.bdd()).worst() <= 1e-11);
  }
  SUBCASE("4x4 substructures, stiffness scaling, coefficient jumps")
  {
    Lab lab(oracle::checkerboard(4, 4), Scaling::stiffness, QChoice::dirichlet);
    const IdentityTable t = identity_suite(lab.ops(), lab.projector(), lab.bdd());
    for (const auto& row : t.rows) {
      CAPTURE(row.name);
      CHECK(row.residual <= 1e-9);
    }
  }
  SUBCASE("requires the Dirichlet Q")
  {
    Lab lab(oracle::square(2, 2), Scaling::multiplicity, QChoice::identity, Execution::serial);
    CHECK_THROWS_AS(identity_suite(lab.ops(), lab.projector(), lab.bdd()), ConfigError);
  }
}
