#include "ddlab/krylov.hpp"

#include "ddlab/errors.hpp"

#include <cmath>
#include <limits>

namespace ddlab {

double lanczos_condition(const std::vector<double>& alpha, const std::vector<double>& beta)
{
  const Index m = static_cast<Index>(alpha.size());
  if (m == 0) return 1.0;
  Matrix t = Matrix::Zero(m, m);
  for (Index k = 0; k < m; ++k) {
    t(k, k) = 1.0 / alpha[k];
    if (k > 0) t(k, k) += beta[k - 1] / alpha[k - 1];
    if (k + 1 < m) {
      t(k, k + 1) = std::sqrt(beta[k]) / alpha[k];
      t(k + 1, k) = t(k, k + 1);
    }
  }
  const Vector values = sym_eigenvalues(t);
  const double lo = values(0);
  const double hi = values(m - 1);
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

namespace {

// Shared CG loop. `project` is applied to preconditioned residuals and
// directions; `on_step` sees the iterate after each update.
template <class Project, class OnStep>
SolveReport run_cg(const LinearMap& op, const LinearMap& precond, const Vector& rhs, Vector x,
                   const PcgOptions& options, Project project, OnStep on_step)
{
  SolveReport report;
  Vector r = rhs;
  Vector z = project(precond(r));
  double rz = r.dot(z);
  if (rz < 0.0) throw NumericalError("pcg: preconditioner is not positive semidefinite (r^T M r < 0)");
  const double norm0 = std::sqrt(rz);
  report.residual_history.push_back(norm0);
  std::vector<double> alphas, betas;
  if (norm0 == 0.0) {
    report.converged = true;
    report.solution = std::move(x);
    return report;
  }
  Vector p = z;
  for (int k = 0; k < options.maxit; ++k) {
    p = project(p);
    const Vector q = op(p);
    const double pq = p.dot(q);
    if (pq < -1e-12 * p.norm() * q.norm())
      throw NumericalError("pcg: operator is indefinite (p^T A p = " + std::to_string(pq) + ")");
    if (pq <= 0.0) break;
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    on_step(x);
    z = project(precond(r));
    const double rz_new = r.dot(z);
    if (rz_new < 0.0) throw NumericalError("pcg: preconditioner is not positive semidefinite (r^T M r < 0)");
    const double beta = rz_new / rz;
    alphas.push_back(alpha);
    betas.push_back(beta);
    report.iterations = k + 1;
    report.residual_history.push_back(std::sqrt(rz_new));
    rz = rz_new;
    if (std::sqrt(rz_new) <= options.tol * norm0) {
      report.converged = true;
      break;
    }
    p = z + beta * p;
  }
  if (!betas.empty()) betas.pop_back();  // the last ratio has no following step
  report.kappa_estimate = lanczos_condition(alphas, betas);
  report.solution = std::move(x);
  return report;
}

} // namespace

SolveReport pcg(const LinearMap& op, const LinearMap& precond, const Vector& rhs, const PcgOptions& options)
{
  return run_cg(op, precond, rhs, Vector::Zero(rhs.size()), options, [](const Vector& v) { return v; },
                [](const Vector&) {});
}

SolveReport projected_pcg(const Feti1System& system, const PcgOptions& options)
{
  const Feti1Projector& proj = system.projector;
  const Matrix& G = system.ops().G;
  const Vector target = system.ops().Z.transpose() * system.f;
  const double drift_limit = 1e-6 * (target.norm() + 1.0);
  std::vector<double> constraint;
  auto check = [&](const Vector& lambda) {
    const double c = G.cols() == 0 ? 0.0 : (G.transpose() * lambda - target).norm();
    constraint.push_back(c);
    if (c > drift_limit) throw NumericalError("projected pcg: projection drift " + std::to_string(c));
  };
  check(system.lambda0);

  // iterate on lambda_bar in range(P); lambda = lambda0 + lambda_bar
  const Vector lambda0 = system.lambda0;
  auto op = [&](const Vector& v) { return system.apply_projected_F(v); };
  auto precond = [&](const Vector& v) { return system.apply_M(proj.apply_Pt(v)); };
  auto project = [&](const Vector& v) { return proj.apply_P(v); };
  SolveReport report = run_cg(op, precond, system.rhs, Vector::Zero(lambda0.size()), options, project,
                              [&](const Vector& lambda_bar) { check(lambda0 + lambda_bar); });
  report.solution += lambda0;
  report.constraint_history = std::move(constraint);
  return report;
}

} // namespace ddlab
