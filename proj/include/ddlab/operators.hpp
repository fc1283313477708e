#pragma once

// Global substructuring algebra on the broken interface space W (the
// product of the local interface spaces, ordered substructure by
// substructure) and the continuous interface space W_hat (global interface
// dofs):
//
//   R   : W_hat -> W   embedding          B   : W -> Lambda  signed jumps
//   E   : W -> W_hat   averaging R^T D_P  B_D : W -> Lambda  scaled jumps
//   Z   : nullspace stack, G = B Z, C = E Z, S_hat = R^T S R
//
// plus the corner split of W used by FETI-DP and BDDC.

#include "ddlab/linalg.hpp"
#include "ddlab/model_problem.hpp"
#include "ddlab/parallel.hpp"

#include <string>
#include <vector>

namespace ddlab {

enum class Scaling { multiplicity, stiffness };

std::string to_string(Scaling s);

/// One row of B: the shared dof and the pair of sharers. +1 sits on
/// `sub_plus` (lower id), -1 on `sub_minus`.
struct JumpRow {
  int dof = 0;
  Sharer plus;
  Sharer minus;
};

struct EmbeddingAndJump {
  SparseMatrix R;
  SparseMatrix B;
  std::vector<JumpRow> rows;
};

/// Start of each substructure block in W; back() is dim W.
std::vector<Index> block_offsets(const Problem& problem);

EmbeddingAndJump build_embedding_and_jump(const InterfaceMap& iface, const std::vector<Index>& offsets);

struct Scalings {
  Vector D_P;       // diagonal of D_P on W
  SparseMatrix E;   // R^T D_P
  SparseMatrix B_D;
};

/// Throws NumericalError on a vanishing stiffness weight sum.
Scalings build_scalings(const InterfaceMap& iface, const std::vector<Index>& offsets,
                        const std::vector<Matrix>& S_blocks, const std::vector<JumpRow>& rows,
                        Scaling mode);

/// S_hat = R^T S R. Throws NumericalError when S_hat is not SPD.
Matrix assemble_global_schur(const SparseMatrix& R, const std::vector<Matrix>& S_blocks,
                             const std::vector<Index>& offsets);

struct NaturalCoarse {
  Matrix Z;  // dim W x n_Z, block diagonal
  Matrix G;  // B Z
  Matrix C;  // E Z
  std::vector<int> column_sub;
};

NaturalCoarse build_natural_coarse(const SparseMatrix& B, const SparseMatrix& E,
                                   const std::vector<Matrix>& Z_blocks, const std::vector<Index>& offsets);

/// Everything the six methods share. Immutable after build_operators.
struct CouplingOperators {
  Execution exec = Execution::parallel;
  Scaling scaling = Scaling::multiplicity;
  std::vector<Index> offsets;
  std::vector<Matrix> S;
  std::vector<EigDecomp> S_eig;
  SparseMatrix R, B, E, B_D;
  std::vector<JumpRow> rows;
  Vector D_P;
  Matrix Z, G, C;
  std::vector<int> z_column_sub;
  Matrix S_hat;
  SpdFactor S_hat_factor;

  [[nodiscard]] Index dim_w() const { return offsets.back(); }
  [[nodiscard]] Index dim_hat() const { return R.cols(); }
  [[nodiscard]] Index dim_lambda() const { return B.rows(); }
  [[nodiscard]] Index num_subs() const { return static_cast<Index>(S.size()); }
  [[nodiscard]] Index block_size(Index i) const { return offsets[i + 1] - offsets[i]; }

  /// S w, block by block.
  [[nodiscard]] Vector apply_S(const Vector& w) const;
  /// S^+ w via the per-substructure eigendecompositions.
  [[nodiscard]] Vector apply_S_pinv(const Vector& w) const;
  [[nodiscard]] Matrix dense_S() const;
  [[nodiscard]] Matrix dense_S_pinv() const;
};

CouplingOperators build_operators(const Problem& problem, Scaling scaling,
                                  Execution exec = Execution::parallel);

/// Max-norm residuals of B R = 0, E R = I, B_D^T B + R E = I and
/// B^T B_D E^T = 0.
struct AlgebraReport {
  double br = 0.0;
  double er_minus_identity = 0.0;
  double jump_plus_average = 0.0;
  double jump_average_transpose = 0.0;

  [[nodiscard]] double worst() const;
  [[nodiscard]] bool pass(double tol = 1e-12) const { return worst() <= tol; }
};

AlgebraReport verify_algebra(const CouplingOperators& ops);

enum class CornerRule { substructure_vertices };

/// Per-substructure (corner, remaining) partition of the local interface.
struct CornerBlock {
  std::vector<Index> c_local;   // local interface indices that are corners
  std::vector<Index> r_local;   // the rest
  std::vector<int> c_coarse;    // R_c: global coarse index of each c_local entry
  Matrix S_cc, S_rc, S_rr;      // S_rc is |r| x |c|
  SpdFactor S_rr_factor;
};

struct CoarseSplit {
  std::vector<int> corner_dofs;        // global interface dofs, ascending
  std::vector<int> coarse_of_global;   // -1 for remaining dofs
  std::vector<CornerBlock> blocks;
  std::vector<Index> r_offsets;        // back() is dim W_r
  Matrix S_cc_tilde;
  Matrix S_cc_star;
  SpdFactor S_cc_star_factor;
  SparseMatrix E_r;                    // W_hat x W_r
  SparseMatrix E_c;                    // W_hat x n_c
  Execution exec = Execution::parallel;

  [[nodiscard]] Index num_coarse() const { return static_cast<Index>(corner_dofs.size()); }
  [[nodiscard]] Index dim_r() const { return r_offsets.back(); }

  /// S_rr^{-1} v on W_r.
  [[nodiscard]] Vector solve_rr(const Vector& v) const;
  /// S_rc R_c u_c.
  [[nodiscard]] Vector apply_rc(const Vector& u_c) const;
  /// R_c^T S_rc^T v_r.
  [[nodiscard]] Vector apply_rc_transpose(const Vector& v_r) const;
  /// S_rr v on W_r.
  [[nodiscard]] Vector apply_rr(const Vector& v) const;
};

/// Throws NumericalError for a singular S_rr block or singular S*_cc.
CoarseSplit build_coarse_split(const Problem& problem, const CouplingOperators& ops,
                               CornerRule rule = CornerRule::substructure_vertices);

} // namespace ddlab
