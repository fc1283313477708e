#pragma once

// The six substructuring methods as linear-operator applications.
//
//   dual:   FETI-1 (projected, Dirichlet preconditioner), FETI-DP
//   primal: P-FETI-1 = E H^T S^+ H E^T, BDD, P-FETI-DP, BDDC
//
// P-FETI-DP (elimination through S*_cc) and BDDC (explicit coarse basis Psi)
// share no code beyond the S_rr factorizations, so comparing them is a real
// check. Objects keep a reference to the operators they were built from.

#include "ddlab/linalg.hpp"
#include "ddlab/operators.hpp"

#include <string>
#include <vector>

namespace ddlab {

enum class QChoice { identity, dirichlet };

std::string to_string(QChoice q);

/// Q-dependent FETI-1 coarse machinery: Q, the projection
/// P = I - Q G (G^T Q G)^{-1} G^T and H = I - B^T Q G (G^T Q G)^{-1} Z^T.
class Feti1Projector {
public:
  /// Throws NumericalError when G^T Q G is singular.
  Feti1Projector(const CouplingOperators& ops, QChoice q);

  [[nodiscard]] QChoice q() const { return q_; }
  [[nodiscard]] const CouplingOperators& ops() const { return ops_; }
  [[nodiscard]] const Matrix& QG() const { return qg_; }
  [[nodiscard]] const Matrix& GtQG() const { return gtqg_; }

  [[nodiscard]] Vector apply_Q(const Vector& lambda) const;
  [[nodiscard]] Vector apply_P(const Vector& lambda) const;
  [[nodiscard]] Vector apply_Pt(const Vector& lambda) const;
  [[nodiscard]] Vector apply_H(const Vector& w) const;
  [[nodiscard]] Vector apply_Ht(const Vector& w) const;
  /// (G^T Q G)^{-1} x
  [[nodiscard]] Vector coarse_solve(const Vector& x) const;

private:
  const CouplingOperators& ops_;
  QChoice q_;
  Matrix qg_;
  Matrix gtqg_;
  SpdFactor coarse_;
};

/// F lambda = B S^+ B^T lambda.
Vector feti1_F_apply(const CouplingOperators& ops, const Vector& lambda);
/// Dirichlet preconditioner B_D S B_D^T mu.
Vector feti1_precond_apply(const CouplingOperators& ops, const Vector& mu);

/// FETI-1 dual problem for the load f on W. The iteration runs on
/// lambda = lambda0 + lambda_bar with lambda_bar in range(P), so `rhs`
/// is P^T (B S^+ f - F lambda0).
struct Feti1System {
  Feti1Projector projector;
  Vector f;
  Vector lambda0;
  Vector d;    // B S^+ f
  Vector rhs;

  [[nodiscard]] const CouplingOperators& ops() const { return projector.ops(); }
  [[nodiscard]] Vector apply_F(const Vector& lambda) const { return feti1_F_apply(ops(), lambda); }
  [[nodiscard]] Vector apply_M(const Vector& mu) const { return feti1_precond_apply(ops(), mu); }
  /// P^T F P lambda
  [[nodiscard]] Vector apply_projected_F(const Vector& lambda) const;
};

Feti1System feti1_build(const CouplingOperators& ops, QChoice q, const Vector& f);

struct PrimalRecovery {
  Vector w;
  Vector u;
};

/// w = S^+(f - B^T lambda) + Z a, u = E w. Throws NumericalError when
/// Z^T(f - B^T lambda) exceeds 1e-8 max(1, ||f||).
PrimalRecovery recover_primal(const Feti1System& system, const Vector& lambda);

/// u = E H^T S^+ H E^T r.
Vector pfeti1_apply(const Feti1Projector& projector, const Vector& r);

/// Balancing Domain Decomposition with the coarse space C = E Z.
class Bdd {
public:
  /// Throws NumericalError when C^T S_hat C is singular.
  explicit Bdd(const CouplingOperators& ops);

  /// u = P_C E S^+ E^T P_C^T r + S_C r
  [[nodiscard]] Vector apply(const Vector& r) const;
  /// S_C r = C (C^T S_hat C)^{-1} C^T r
  [[nodiscard]] Vector coarse_correction(const Vector& r) const;

private:
  const CouplingOperators& ops_;
  SpdFactor coarse_;
};

/// FETI-DP on the partially assembled space W_tilde = (u_c, u_r). Vectors on
/// W_tilde are stored as [u_c; u_r]. Multipliers are the rows of B at
/// non-corner dofs.
class FetiDp {
public:
  FetiDp(const CouplingOperators& ops, const CoarseSplit& split);

  [[nodiscard]] Index dim_lambda() const { return B_r_.rows(); }
  [[nodiscard]] Index dim_tilde() const { return split_.num_coarse() + split_.dim_r(); }
  [[nodiscard]] const SparseMatrix& B_r() const { return B_r_; }
  [[nodiscard]] const SparseMatrix& B_Dr() const { return B_Dr_; }

  /// S_tilde^{-1} by block elimination (S_rr solves + S*_cc solve).
  [[nodiscard]] Vector apply_Stilde_inv(const Vector& g) const;
  /// S_tilde by block multiplication.
  [[nodiscard]] Vector apply_Stilde(const Vector& w) const;
  /// B S_tilde^{-1} B^T lambda
  [[nodiscard]] Vector apply_F(const Vector& lambda) const;
  /// B_D S_tilde B_D^T lambda
  [[nodiscard]] Vector apply_M(const Vector& lambda) const;
  /// B S_tilde^{-1} f_tilde with f_tilde = (E_c^T r, E_r^T r)
  [[nodiscard]] Vector rhs(const Vector& r) const;
  /// u = E_c u_c + E_r u_r for w_tilde = S_tilde^{-1}(f_tilde - B^T lambda)
  [[nodiscard]] Vector recover(const Vector& lambda, const Vector& r) const;

private:
  [[nodiscard]] Vector lift(const Vector& lambda, const SparseMatrix& jump) const;

  const CouplingOperators& ops_;
  const CoarseSplit& split_;
  SparseMatrix B_r_;
  SparseMatrix B_Dr_;
};

/// BDDC with the energy-minimal coarse basis Psi = (R_c; -S_rr^{-1} S_rc R_c).
class Bddc {
public:
  Bddc(const CouplingOperators& ops, const CoarseSplit& split);

  [[nodiscard]] const Matrix& Psi() const { return psi_; }
  /// Psi^T S Psi, computed as an explicit product.
  [[nodiscard]] const Matrix& coarse_gram() const { return gram_; }
  /// u = E_r S_rr^{-1} E_r^T r + E Psi (Psi^T S Psi)^{-1} Psi^T E^T r
  [[nodiscard]] Vector apply(const Vector& r) const;

private:
  const CouplingOperators& ops_;
  const CoarseSplit& split_;
  Matrix psi_;
  Matrix gram_;
  SpdFactor coarse_;
};

/// trace(Psi^T S Psi)
double coarse_energy(const CouplingOperators& ops, const Matrix& psi);

/// u = E_r S_rr^{-1} E_r^T r
///   + (E_c - E_r S_rr^{-1} S_rc R_c) S*_cc^{-1} (E_c^T - R_c^T S_rc^T S_rr^{-1} E_r^T) r
Vector pfetidp_apply(const CoarseSplit& split, const Vector& r);

} // namespace ddlab
