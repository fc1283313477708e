#include "ddlab/linalg.hpp"

#include "ddlab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ddlab {

SpdFactor::SpdFactor(const Matrix& a, std::string what) : size_(a.rows())
{
  if (a.rows() != a.cols())
    throw NumericalError(what + ": matrix is not square");
  if (size_ == 0) return;
  if (!is_spd(a))
    throw NumericalError(what + ": matrix is not SPD (diagonally scaled lambda_min <= 1e-10 lambda_max)");
  llt_.compute(a);
  if (llt_.info() != Eigen::Success)
    throw NumericalError(what + ": non-SPD pivot in Cholesky factorization");
}

Vector SpdFactor::solve(const Vector& rhs) const
{
  if (size_ == 0) return Vector(0);
  return llt_.solve(rhs);
}

Matrix SpdFactor::solve(const Matrix& rhs) const
{
  if (size_ == 0) return Matrix(0, rhs.cols());
  return llt_.solve(rhs);
}

Matrix SpdFactor::lower() const
{
  if (size_ == 0) return Matrix(0, 0);
  return llt_.matrixL();
}

Vector spd_solve(const Matrix& a, const Vector& rhs)
{
  return SpdFactor(a, "spd_solve").solve(rhs);
}

double EigDecomp::lambda_max() const
{
  return values.size() == 0 ? 0.0 : values(values.size() - 1);
}

Index EigDecomp::null_count() const
{
  const double cut = rank_tol * std::max(lambda_max(), 0.0);
  Index count = 0;
  for (Index i = 0; i < values.size(); ++i)
    if (values(i) <= cut) ++count;
  return count;
}

namespace {

Matrix checked_symmetric(const Matrix& a)
{
  if (a.rows() != a.cols()) throw NumericalError("sym_eig: matrix is not square");
  const double scale = std::max(max_abs(a), 1e-300);
  if (max_abs(a - a.transpose()) > 1e-8 * scale)
    throw NumericalError("sym_eig: matrix is not symmetric");
  return 0.5 * (a + a.transpose());
}

} // namespace

EigDecomp sym_eig(const Matrix& a, double rank_tol)
{
  EigDecomp out;
  out.rank_tol = rank_tol;
  if (a.rows() == 0) {
    out.values = Vector(0);
    out.vectors = Matrix(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(checked_symmetric(a));
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  return out;
}

Vector sym_eigenvalues(const Matrix& a)
{
  if (a.rows() == 0) return Vector(0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(checked_symmetric(a), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
  return solver.eigenvalues();
}

namespace {

Vector inverted_spectrum(const EigDecomp& eig)
{
  const double cut = eig.rank_tol * std::max(eig.lambda_max(), 0.0);
  Vector inv(eig.values.size());
  for (Index i = 0; i < inv.size(); ++i)
    inv(i) = eig.values(i) <= cut ? 0.0 : 1.0 / eig.values(i);
  return inv;
}

} // namespace

Vector pseudo_inverse_apply(const EigDecomp& eig, const Vector& x)
{
  if (x.size() == 0) return Vector(0);
  const Vector coeffs = eig.vectors.transpose() * x;
  return eig.vectors * inverted_spectrum(eig).cwiseProduct(coeffs);
}

Matrix pseudo_inverse(const EigDecomp& eig)
{
  const Index n = eig.values.size();
  if (n == 0) return Matrix(0, 0);
  return eig.vectors * inverted_spectrum(eig).asDiagonal() * eig.vectors.transpose();
}

Matrix psd_sqrt(const Matrix& a, double neg_tol)
{
  const EigDecomp eig = sym_eig(a);
  const double lmax = std::max(eig.lambda_max(), 0.0);
  Vector roots(eig.values.size());
  for (Index i = 0; i < roots.size(); ++i) {
    if (eig.values(i) < -neg_tol * lmax)
      throw NumericalError("psd_sqrt: matrix has a negative eigenvalue " + std::to_string(eig.values(i)));
    roots(i) = std::sqrt(std::max(eig.values(i), 0.0));
  }
  return eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
}

bool is_spd(const Matrix& a, double tol)
{
  if (a.rows() != a.cols()) return false;
  if (a.rows() == 0) return true;
  const double scale = std::max(max_abs(a), 1e-300);
  if (max_abs(a - a.transpose()) > 1e-10 * scale) return false;
  const Vector d = a.diagonal();
  if ((d.array() <= 0.0).any()) return false;
  const Vector inv_sqrt = d.array().rsqrt();
  const Vector values = sym_eigenvalues(inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
  const double lmax = values(values.size() - 1);
  return lmax > 0.0 && values(0) > tol * lmax;
}

Matrix assemble_dense(Index rows, Index cols, const LinearMap& apply, Execution exec)
{
  Matrix out = Matrix::Zero(rows, cols);
  for_each_index(exec, cols, [&](std::ptrdiff_t j) {
    Vector unit = Vector::Zero(cols);
    unit(j) = 1.0;
    out.col(j) = apply(unit);
  });
  return out;
}

double max_abs(const Matrix& a)
{
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double rel_frobenius_diff(const Matrix& a, const Matrix& b)
{
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

} // namespace ddlab
