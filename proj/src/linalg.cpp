#include "rou/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rou/error.hpp"

namespace rou {

Matrix::Matrix(std::size_t dim, std::vector<double> row_major) : dim_(dim), data_(std::move(row_major)) {
  if (data_.size() != dim_ * dim_)
    throw Error(ErrorCode::InvalidArgument, "matrix data has " + std::to_string(data_.size()) +
                                                " entries, expected " + std::to_string(dim_ * dim_));
}

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim);
  m.set_identity();
  return m;
}

Matrix Matrix::diagonal(const Vector& diag) {
  Matrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.emplace_back(r);
  return from_rows(v);
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  require(n >= 1, ErrorCode::InvalidArgument, "matrix must have at least one row");
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(rows[i].size() == n, ErrorCode::InvalidArgument, "matrix must be square");
    for (std::size_t j = 0; j < n; ++j) {
      require(std::isfinite(rows[i][j]), ErrorCode::InvalidArgument, "matrix entries must be finite");
      m(i, j) = rows[i][j];
    }
  }
  return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix Matrix::transpose() const {
  Matrix t(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::trace() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += (*this)(i, i);
  return s;
}

double Matrix::frobenius_norm() const { return norm2(data_); }

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void Matrix::set_identity() {
  set_zero();
  for (std::size_t i = 0; i < dim_; ++i) (*this)(i, i) = 1.0;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix out(a.dim());
  multiply_into(out, a, b);
  return out;
}

Vector operator*(const Matrix& a, const Vector& x) {
  Vector out(a.dim());
  multiply_into(out, a, x);
  return out;
}

void multiply_into(Matrix& out, const Matrix& a, const Matrix& b) {
  const std::size_t n = a.dim();
  if (out.dim() != n) out = Matrix(n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  std::fill(po, po + n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = pa[i * n + k];
      const double* brow = pb + k * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
}

void multiply_into(Vector& out, const Matrix& a, std::span<const double> x) {
  const std::size_t n = a.dim();
  out.resize(n);
  const double* pa = a.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += pa[i * n + j] * x[j];
    out[i] = s;
  }
}

void axpy(Matrix& y, double alpha, const Matrix& x) {
  auto yd = y.data();
  auto xd = x.data();
  for (std::size_t k = 0; k < yd.size(); ++k) yd[k] += alpha * xd[k];
}

double norm2(std::span<const double> x) {
  // Scaled accumulation so long vectors of huge/tiny entries do not overflow.
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : x) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double symmetry_tolerance(const Matrix& a) { return 1e-12 * (1.0 + a.frobenius_norm()); }

PsdMatrix::PsdMatrix(Matrix m) : m_(std::move(m)) {
  require(m_.dim() >= 1 && m_.is_finite(), ErrorCode::InvalidArgument, "PSD matrix must be finite, dim >= 1");
  const double tol = symmetry_tolerance(m_);
  for (std::size_t i = 0; i < m_.dim(); ++i)
    for (std::size_t j = i + 1; j < m_.dim(); ++j)
      require(std::abs(m_(i, j) - m_(j, i)) <= tol, ErrorCode::NotPsd, "matrix is not symmetric");
  const SymEigen eig = sym_eigen(m_);
  require(eig.values.back() >= -tol, ErrorCode::NotPsd,
          "matrix has negative eigenvalue " + std::to_string(eig.values.back()));
}

PsdMatrix PsdMatrix::trusted(Matrix m) {
  PsdMatrix p;
  p.m_ = std::move(m);
  return p;
}

Matrix sym_part(const Matrix& a) {
  const std::size_t n = a.dim();
  Matrix s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = a(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

SymEigen sym_eigen(const Matrix& input) {
  const std::size_t n = input.dim();
  Matrix a = sym_part(input);
  Matrix v = Matrix::identity(n);

  const double scale = a.frobenius_norm();
  if (scale > 0.0) {
    for (int sweep = 0; sweep < 100; ++sweep) {
      double off = 0.0;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
      if (std::sqrt(off) <= 1e-17 * scale) break;

      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          // Rutishauser's stable rotation.
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          const double tau = s / (1.0 + c);

          a(p, p) -= t * apq;
          a(q, q) += t * apq;
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (std::size_t k = 0; k < n; ++k) {
            if (k == p || k == q) continue;
            const double akp = a(k, p);
            const double akq = a(k, q);
            const double nkp = akp - s * (akq + tau * akp);
            const double nkq = akq + s * (akp - tau * akq);
            a(k, p) = nkp;
            a(p, k) = nkp;
            a(k, q) = nkq;
            a(q, k) = nkq;
          }
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = vkp - s * (vkq + tau * vkp);
            v(k, q) = vkq + s * (vkp - tau * vkq);
          }
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEigen out{Vector(n), Matrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double max_sym_eigenvalue(const Matrix& s) {
  const std::size_t n = s.dim();
  if (n == 1) return s(0, 0);
  if (n == 2) {
    const double a = s(0, 0);
    const double d = s(1, 1);
    const double b = 0.5 * (s(0, 1) + s(1, 0));
    const double mid = 0.5 * (a + d);
    const double half = 0.5 * (a - d);
    return mid + std::hypot(half, b);
  }
  return sym_eigen(s).values.front();
}

double spectral_norm(const Matrix& a) {
  const std::size_t n = a.dim();
  if (n == 1) return std::abs(a(0, 0));
  const double scale = a.max_abs();
  if (scale == 0.0) return 0.0;
  // Scale first so A A^T cannot overflow for propagators with large entries.
  Matrix b = a * (1.0 / scale);
  Matrix g(n);
  multiply_into(g, b, b.transpose());
  return scale * std::sqrt(std::max(0.0, max_sym_eigenvalue(g)));
}

double log_norm(const Matrix& a) { return max_sym_eigenvalue(sym_part(a)); }

PsdMatrix principal_sqrt(const Matrix& b) {
  const std::size_t n = b.dim();
  const double tol = symmetry_tolerance(b);
  const SymEigen eig = sym_eigen(b);
  require(eig.values.back() >= -tol, ErrorCode::NotPsd,
          "principal_sqrt: min eigenvalue " + std::to_string(eig.values.back()) + " < -tol");
  Matrix s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double root = std::sqrt(std::max(0.0, eig.values[k]));
    if (root == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = eig.vectors(i, k) * root;
      for (std::size_t j = 0; j < n; ++j) s(i, j) += vi * eig.vectors(j, k);
    }
  }
  return PsdMatrix::trusted(sym_part(s));
}

PsdMatrix principal_sqrt(const PsdMatrix& b) { return principal_sqrt(b.matrix()); }

Matrix matrix_exp(const Matrix& a, double t) {
  const std::size_t n = a.dim();
  Matrix x = a * t;
  const double nrm = x.frobenius_norm();
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  x *= std::ldexp(1.0, -squarings);

  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  Matrix tmp(n);
  for (int k = 1; k <= 40; ++k) {
    multiply_into(tmp, term, x);
    tmp *= 1.0 / k;
    std::swap(term, tmp);
    result += term;
    if (term.max_abs() <= 1e-18 * result.max_abs()) break;
  }
  for (int i = 0; i < squarings; ++i) {
    multiply_into(tmp, result, result);
    std::swap(result, tmp);
  }
  return result;
}

Matrix inverse(const Matrix& a) {
  const std::size_t n = a.dim();
  Matrix lu = a;
  Matrix inv = Matrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(lu(i, col)) > std::abs(lu(piv, col))) piv = i;
    require(lu(piv, col) != 0.0, ErrorCode::InvalidArgument, "inverse: matrix is singular");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(lu(col, j), lu(piv, j));
        std::swap(inv(col, j), inv(piv, j));
      }
    }
    const double d = lu(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      lu(col, j) /= d;
      inv(col, j) /= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = lu(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        lu(i, j) -= f * lu(col, j);
        inv(i, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

PsdMatrix solve_lyapunov(const Matrix& a, const PsdMatrix& b) {
  const std::size_t n = a.dim();
  require(b.dim() == n, ErrorCode::InvalidArgument, "solve_lyapunov: dimension mismatch");
  const double q = spectral_norm(a);
  require(q > 0.0, ErrorCode::NotHurwitz, "solve_lyapunov: A is zero");

  Matrix shifted_minus = a;
  Matrix shifted_plus = a;
  for (std::size_t i = 0; i < n; ++i) {
    shifted_minus(i, i) -= q;
    shifted_plus(i, i) += q;
  }
  const Matrix m_inv = inverse(shifted_minus);
  Matrix ak = m_inv * shifted_plus;
  Matrix p = (2.0 * q) * (m_inv * b.matrix() * m_inv.transpose());

  // Smith doubling: P <- P + Ak P Ak^T, Ak <- Ak^2 sums the Stein series
  // sum_k Ad^k Bd (Ad^T)^k in log2 steps.
  bool converged = false;
  Matrix tmp(n);
  for (int it = 0; it < 200; ++it) {
    const Matrix inc = ak * p * ak.transpose();
    p += inc;
    multiply_into(tmp, ak, ak);
    std::swap(ak, tmp);
    if (!p.is_finite() || !ak.is_finite()) break;
    if (ak.max_abs() < 1e-30 && inc.max_abs() <= 1e-18 * p.max_abs()) {
      converged = true;
      break;
    }
  }
  require(converged, ErrorCode::NotHurwitz, "solve_lyapunov: A is not Hurwitz");
  return PsdMatrix::trusted(sym_part(p));
}

}  // namespace rou
