#pragma once

#include "ddlab/linalg.hpp"
#include "ddlab/preconditioners.hpp"

#include <vector>

namespace ddlab {

struct PcgOptions {
  double tol = 1e-8;  // on the preconditioned residual norm, relative to the initial one
  int maxit = 500;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // sqrt(r^T z), initial value first
  std::vector<double> constraint_history;  // ||G^T lambda_k - Z^T f||, projected PCG only
  double kappa_estimate = 1.0;
  bool converged = false;
  Vector solution;
};

/// Preconditioned CG from a zero initial guess. Throws NumericalError when
/// p^T A p < 0 or r^T M r < 0.
SolveReport pcg(const LinearMap& op, const LinearMap& precond, const Vector& rhs,
                const PcgOptions& options = {});

/// FETI-1 iteration on P^T F P lambda_bar = P^T (B S^+ f - F lambda0) starting
/// from lambda0. Directions and preconditioned residuals are re-projected by
/// P every step; the returned solution is the full lambda. Throws
/// NumericalError if ||G^T lambda_k - Z^T f|| drifts beyond
/// 1e-6 (||Z^T f|| + 1).
SolveReport projected_pcg(const Feti1System& system, const PcgOptions& options = {});

/// Condition number lambda_max / lambda_min of the Lanczos tridiagonal
/// built from the CG step lengths alpha_k and ratios beta_k.
double lanczos_condition(const std::vector<double>& alpha, const std::vector<double>& beta);

} // namespace ddlab
