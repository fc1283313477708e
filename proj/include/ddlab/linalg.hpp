#pragma once

// Dense kernels shared by every module: SPD factorizations, symmetric
// eigendecompositions, and eigen-based Moore-Penrose pseudoinverses.
// All tolerances are relative to the largest eigenvalue of the matrix.

#include "ddlab/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <string>

namespace ddlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// y = A x for an operator known only through its action.
using LinearMap = std::function<Vector(const Vector&)>;

/// Smallest admissible eigenvalue of an "SPD" matrix after symmetric
/// diagonal scaling, relative to lambda_max.
inline constexpr double kSpdTolerance = 1e-10;
/// Eigenvalues at or below rank_tol * lambda_max are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Cholesky factorization of a matrix that must pass is_spd.
/// Construction throws
/// NumericalError naming `what` otherwise. Empty matrices are allowed.
class SpdFactor {
public:
  SpdFactor() = default;
  explicit SpdFactor(const Matrix& a, std::string what = "matrix");

  [[nodiscard]] Vector solve(const Vector& rhs) const;
  [[nodiscard]] Matrix solve(const Matrix& rhs) const;
  [[nodiscard]] Index size() const { return size_; }
  /// Lower Cholesky factor L with A = L L^T.
  [[nodiscard]] Matrix lower() const;

private:
  Eigen::LLT<Matrix> llt_;
  Index size_ = 0;
};

/// Solves A x = rhs for SPD A (one-shot convenience over SpdFactor).
Vector spd_solve(const Matrix& a, const Vector& rhs);

struct EigDecomp {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
  double rank_tol = kRankTolerance;

  [[nodiscard]] double lambda_max() const;
  /// Number of eigenvalues <= rank_tol * max(lambda_max, 0).
  [[nodiscard]] Index null_count() const;
};

EigDecomp sym_eig(const Matrix& a, double rank_tol = kRankTolerance);

/// Eigenvalues only, ascending.
Vector sym_eigenvalues(const Matrix& a);

Vector pseudo_inverse_apply(const EigDecomp& eig, const Vector& x);
Matrix pseudo_inverse(const EigDecomp& eig);

/// PSD square root V sqrt(max(Lambda, 0)) V^T. Throws NumericalError if an
/// eigenvalue is below -neg_tol * lambda_max.
Matrix psd_sqrt(const Matrix& a, double neg_tol = 1e-9);

/// True iff a is symmetric with a positive diagonal and D^-1/2 a D^-1/2
/// (D = diag(a)) has lambda_min > tol * lambda_max.
bool is_spd(const Matrix& a, double tol = kSpdTolerance);

/// Dense matrix of a linear map, built one column at a time.
Matrix assemble_dense(Index rows, Index cols, const LinearMap& apply,
                      Execution exec = Execution::parallel);

double max_abs(const Matrix& a);
/// ||a - b||_F / max(||a||_F, ||b||_F); zero when both vanish.
double rel_frobenius_diff(const Matrix& a, const Matrix& b);

} // namespace ddlab
