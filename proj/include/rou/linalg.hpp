/*
  Dense real square-matrix kernels.

  Everything downstream (flows, propagators, the SDE engine, the stability
  certificates) works with small dense r x r matrices, r <= 64. Storage is a
  row-major std::vector<double>. Symmetric eigenproblems are solved by cyclic
  Jacobi so results are bit-stable across runs and platforms with IEEE doubles.
*/
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rou {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}
  Matrix(std::size_t dim, std::vector<double> row_major);

  static Matrix identity(std::size_t dim);
  static Matrix diagonal(const Vector& diag);
  // Throws InvalidArgument on ragged or non-square input or non-finite entries.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return dim_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  Matrix transpose() const;
  double trace() const;
  double frobenius_norm() const;
  double max_abs() const;
  bool is_finite() const;
  void set_zero();
  void set_identity();

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

// out = a * b. `out` must not alias a or b; it is resized if needed.
void multiply_into(Matrix& out, const Matrix& a, const Matrix& b);
// out = a * x, no aliasing.
void multiply_into(Vector& out, const Matrix& a, std::span<const double> x);
// y += alpha * x (same dimension).
void axpy(Matrix& y, double alpha, const Matrix& x);

double norm2(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

// Positive semi-definite symmetric matrix. Construction validates symmetry
// and the spectrum to tol_sym = 1e-12 * (1 + ||B||).
class PsdMatrix {
 public:
  PsdMatrix() = default;
  explicit PsdMatrix(Matrix m);

  // For values that are PSD by construction (B B^T, squares of symmetric
  // matrices, nonnegative combinations); skips the eigen check.
  static PsdMatrix trusted(Matrix m);

  const Matrix& matrix() const noexcept { return m_; }
  std::size_t dim() const noexcept { return m_.dim(); }
  double trace() const { return m_.trace(); }

 private:
  Matrix m_;
};

double symmetry_tolerance(const Matrix& a);

// (A + A^T) / 2, entrywise average so the result is exactly symmetric.
Matrix sym_part(const Matrix& a);

struct SymEigen {
  Vector values;    // descending
  Matrix vectors;   // column k is the eigenvector of values[k]
};

// Cyclic Jacobi on the symmetric matrix `s` (only the symmetric part is used).
SymEigen sym_eigen(const Matrix& s);
double max_sym_eigenvalue(const Matrix& s);

// ||A||_2 = sqrt(lambda_max(A A^T)).
double spectral_norm(const Matrix& a);
// mu(A) = lambda_max(sym_part(A)).
double log_norm(const Matrix& a);

// Principal symmetric square root; throws NotPsd if min eigenvalue < -tol_sym.
PsdMatrix principal_sqrt(const PsdMatrix& b);
PsdMatrix principal_sqrt(const Matrix& b);

// exp(A t) by scaling and squaring with a Taylor kernel.
Matrix matrix_exp(const Matrix& a, double t = 1.0);

// LU with partial pivoting; throws InvalidArgument if singular.
Matrix inverse(const Matrix& a);

// P with A P + P A^T + B = 0 (Cayley transform + Smith doubling).
// Throws NotHurwitz if A has spectrum on or right of the imaginary axis.
PsdMatrix solve_lyapunov(const Matrix& a, const PsdMatrix& b);

}  // namespace rou
