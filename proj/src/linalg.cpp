#include "spectral/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace spectral {

double dot(const Vector& a, const Vector& b) {
  check_dim(a.size() == b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

void axpy(double alpha, const Vector& x, Vector& y) {
  check_dim(x.size() == y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector scaled(const Vector& v, double alpha) {
  Vector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = alpha * v[i];
  return r;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::mul(const Vector& x) const {
  check_dim(x.size() == cols_, "Matrix::mul");
  Vector y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    const double* row = &data_[i * cols_];
    for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Matrix Matrix::mul(const Matrix& other) const {
  check_dim(cols_ == other.rows_, "Matrix::mul(Matrix)");
  Matrix c(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < other.cols_; ++j) c(i, j) += aik * other(k, j);
    }
  return c;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

SymMatrix::SymMatrix(const Matrix& m) {
  check_dim(m.rows() == m.cols(), "SymMatrix from non-square");
  if (m.rows() == 0) throw std::invalid_argument("SymMatrix: dimension must be >= 1");
  n_ = m.rows();
  entries_.assign(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = (m(i, j) + m(j, i)) / 2.0;
      entries_[i * n_ + j] = v;
      entries_[j * n_ + i] = v;
    }
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) a.set(i, i, 1.0);
  return a;
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  SymMatrix a(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) a.set(i, i, d[i]);
  return a;
}

Vector SymMatrix::mul(const Vector& x) const {
  check_dim(x.size() == n_, "SymMatrix::mul");
  Vector y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    const double* row = &entries_[i * n_];
    for (std::size_t j = 0; j < n_; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

double SymMatrix::quad(const Vector& x) const { return dot(x, mul(x)); }

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : entries_) s += v * v;
  return std::sqrt(s);
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::fabs(v));
  return m;
}

Matrix SymMatrix::as_matrix() const {
  Matrix m(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double SymMatrix::gershgorin_upper() const {
  double u = -1e308;
  for (std::size_t i = 0; i < n_; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i) r += std::fabs((*this)(i, j));
    u = std::max(u, (*this)(i, i) + r);
  }
  return u;
}

double SymMatrix::gershgorin_lower() const {
  double l = 1e308;
  for (std::size_t i = 0; i < n_; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i) r += std::fabs((*this)(i, j));
    l = std::min(l, (*this)(i, i) - r);
  }
  return l;
}

SpdMatrix::SpdMatrix(SymMatrix base) : base_(std::move(base)), chol_(base_.n(), base_.n()) {
  const std::size_t n = base_.n();
  for (std::size_t j = 0; j < n; ++j) {
    double d = base_(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= chol_(j, k) * chol_(j, k);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotSpdError("matrix is not positive definite (Cholesky pivot " +
                        std::to_string(j) + " is " + std::to_string(d) + ")");
    double ljj = std::sqrt(d);
    chol_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = base_(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= chol_(i, k) * chol_(j, k);
      chol_(i, j) = s / ljj;
    }
  }
}

double SpdMatrix::b_norm(const Vector& x) const {
  check_dim(x.size() == n(), "SpdMatrix::b_norm");
  const std::size_t nn = n();
  double s = 0.0;
  // z = L^T x, accumulate ||z||^2 on the fly
  for (std::size_t i = 0; i < nn; ++i) {
    double zi = 0.0;
    for (std::size_t j = i; j < nn; ++j) zi += chol_(j, i) * x[j];
    s += zi * zi;
  }
  return std::sqrt(s);
}

Vector SpdMatrix::solve(const Vector& rhs) const {
  check_dim(rhs.size() == n(), "SpdMatrix::solve");
  const std::size_t nn = n();
  Vector y(rhs);
  for (std::size_t i = 0; i < nn; ++i) {
    double s = y[i];
    for (std::size_t j = 0; j < i; ++j) s -= chol_(i, j) * y[j];
    y[i] = s / chol_(i, i);
  }
  for (std::size_t ii = nn; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < nn; ++j) s -= chol_(j, ii) * y[j];
    y[ii] = s / chol_(ii, ii);
  }
  return y;
}

double SpdMatrix::inverse_norm_bound() const {
  const std::size_t nn = n();
  double frob = 0.0;
  Vector rowsum(nn, 0.0);
  Vector e(nn, 0.0);
  for (std::size_t j = 0; j < nn; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    Vector col = solve(e);
    for (std::size_t i = 0; i < nn; ++i) {
      frob += col[i] * col[i];
      rowsum[i] += std::fabs(col[i]);
    }
  }
  double inf = 0.0;
  for (double v : rowsum) inf = std::max(inf, v);
  return std::min(std::sqrt(frob), inf);
}

LuFactors lu_factor(const Matrix& a, double pivot_rel_tol) {
  check_dim(a.rows() == a.cols(), "lu_factor");
  const std::size_t n = a.rows();
  LuFactors f;
  f.lu = a;
  f.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;

  double maxp = 0.0, minp = 1e308;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::fabs(f.lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      double v = std::fabs(f.lu(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    double pk = std::fabs(f.lu(k, k));
    maxp = std::max(maxp, pk);
    minp = std::min(minp, pk);
    if (pk == 0.0) continue;  // leave zero column; flagged below
    for (std::size_t i = k + 1; i < n; ++i) {
      double m = f.lu(i, k) / f.lu(k, k);
      f.lu(i, k) = m;
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
    }
  }
  f.max_pivot = maxp;
  f.min_pivot = minp;
  f.singular = !(minp > pivot_rel_tol * maxp) || maxp == 0.0 || !std::isfinite(maxp);
  return f;
}

Vector LuFactors::solve(const Vector& rhs) const {
  if (singular)
    throw SingularSystemError("linear system is singular (min pivot " +
                              std::to_string(min_pivot) + ", max pivot " +
                              std::to_string(max_pivot) + ")");
  const std::size_t n = lu.rows();
  check_dim(rhs.size() == n, "LuFactors::solve");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * y[j];
    y[i] = s;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= lu(ii, j) * y[j];
    y[ii] = s / lu(ii, ii);
  }
  return y;
}

}  // namespace spectral
