#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgmf
{
  /// Raised for violated preconditions on user-supplied parameters.
  class ParameterError : public std::invalid_argument
  {
  public:
    using std::invalid_argument::invalid_argument;
  };

  /// Raised when a numerical procedure breaks down (non-SPD input, zero pivot).
  class NumericalError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /**
   * Small row-major dense matrix. Used for the 1D reference-element matrices,
   * the dense verification oracles, and the tiny eigenproblems of setup code.
   */
  class DenseMatrix
  {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double value = 0.);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const { return n_rows; }
    std::size_t cols() const { return n_cols; }

    double &operator()(std::size_t i, std::size_t j) { return data[i * n_cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * n_cols + j]; }

    std::span<const double> values() const { return data; }
    std::span<double> values() { return data; }

    DenseMatrix transpose() const;
    DenseMatrix operator*(const DenseMatrix &other) const;
    std::vector<double> operator*(std::span<const double> x) const;

    /// Frobenius norm.
    double norm() const;
    /// Maximum absolute row sum.
    double linfty_norm() const;

  private:
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> data;
  };

  DenseMatrix operator-(const DenseMatrix &a, const DenseMatrix &b);

  struct SymmetricEigenpairs
  {
    /// Ascending eigenvalues.
    std::vector<double> values;
    /// Eigenvectors stored as columns, orthonormal.
    DenseMatrix vectors;
  };

  /**
   * Cyclic Jacobi rotations for a symmetric matrix. Sweeps until the
   * off-diagonal Frobenius norm drops below @p rel_tol times the norm of the
   * matrix.
   */
  SymmetricEigenpairs symmetric_eigen(const DenseMatrix &a, double rel_tol = 1e-13);

  /// Lower triangular Cholesky factor L with A = L L^T. Throws NumericalError
  /// if A is not positive definite.
  DenseMatrix cholesky(const DenseMatrix &a);

  /// Solves A x = b for square A by LU with partial pivoting.
  std::vector<double> solve(DenseMatrix a, std::vector<double> b);

  /// Inverse of a square matrix via LU with partial pivoting.
  DenseMatrix inverse(const DenseMatrix &a);

  /**
   * Generalized symmetric-definite eigenproblem A z = lambda B z, reduced to a
   * standard problem through the Cholesky factor of B. The returned vectors
   * are B-orthonormal: Z^T B Z = I, Z^T A Z = diag(lambda).
   */
  SymmetricEigenpairs generalized_symmetric_eigen(const DenseMatrix &a,
                                                  const DenseMatrix &b);

  /// Determinant of a 3x3 matrix.
  double determinant3(const DenseMatrix &a);
} // namespace dgmf
