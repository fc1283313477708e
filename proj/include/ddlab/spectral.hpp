#pragma once

// Spectra of preconditioned operators through symmetric similarity
// transforms, the BDD/FETI-1 spectral comparison, and the residual table of
// the operator identities linking the two methods.

#include "ddlab/linalg.hpp"
#include "ddlab/operators.hpp"
#include "ddlab/preconditioners.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ddlab {

inline constexpr double kIdentificationTolerance = 1e-6;
inline constexpr double kClusterGap = 1e-6;

/// Eigenvalues of M S_hat as those of L^T M L with S_hat = L L^T.
Vector primal_spectrum(const Matrix& M, const Matrix& S_hat);

/// Eigenvalues of M A with A = F, or A = P^T F P when P is given, computed as
/// those of A^{1/2} M A^{1/2}. Zeros from redundancy and projection are kept.
Vector dual_spectrum(const Matrix& M, const Matrix& F, const std::optional<Matrix>& P = std::nullopt);

struct Cluster {
  double value = 0.0;  // mean of the cluster
  int count = 0;
};

/// Groups sorted values; consecutive values closer than `gap` share a cluster.
std::vector<Cluster> cluster_values(const std::vector<double>& sorted, double gap = kClusterGap);

struct SpectrumReport {
  std::string method;
  Vector eigenvalues;                 // ascending, full multiset
  std::vector<double> excluded_targets;  // {1} primal, {0, 1} dual
  double identification_tol = kIdentificationTolerance;
  std::vector<double> kept;           // eigenvalues away from every target
  std::vector<double> removed;
  std::vector<Cluster> multiplicity_table;  // clusters of `kept`

  /// lambda_max / lambda_min over eigenvalues above the identification
  /// tolerance (zeros of dual operators are ignored).
  [[nodiscard]] double condition_number() const;
};

SpectrumReport make_spectrum_report(std::string method, const Vector& eigenvalues,
                                    std::vector<double> excluded_targets,
                                    double identification_tol = kIdentificationTolerance);

struct MatchVerdict {
  bool pass = false;
  double max_pair_diff = 0.0;
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> orphans_primal;
  std::vector<double> orphans_dual;
  bool clusters_match = false;
  std::string message;
};

/// Pairs the filtered multisets in sorted order. Passes iff the counts agree,
/// every pair differs by at most tol * max(1, |lambda|), and the cluster
/// multiplicities coincide.
MatchVerdict spectra_match(const SpectrumReport& primal, const SpectrumReport& dual,
                           double tol = 1e-6);

struct IdentityResidual {
  std::string name;
  double residual = 0.0;  // Frobenius residual over the product of factor norms
};

struct IdentityTable {
  std::vector<IdentityResidual> rows;

  [[nodiscard]] double worst() const;
  [[nodiscard]] bool pass(double tol = 1e-10) const { return worst() <= tol; }
};

/// Dense check of the identities tying FETI-1 (Q = B_D S B_D^T) to BDD:
/// S~+ S R = R, S~+ S S~+ = S~+, B S~+ S R = 0, S~+ B^T B_D S S~+ E^T = 0,
/// the two intertwinings through T_D = E S~+ B^T and
/// T_P = (M_FETI F) B_D S R, and idempotency of H and of B_D S S~+ B^T,
/// where S~+ = H^T S^+ H.
IdentityTable identity_suite(const CouplingOperators& ops, const Feti1Projector& projector, const Bdd& bdd);

} // namespace ddlab
