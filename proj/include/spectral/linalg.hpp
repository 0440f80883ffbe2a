#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectral {

using Vector = std::vector<double>;

// Errors that map to CLI exit codes. Contract violations (wrong dimension,
// zero vector where differentiability fails, bad flags) use
// std::invalid_argument.
struct NotSpdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
void axpy(double alpha, const Vector& x, Vector& y);  // y += alpha*x
Vector scaled(const Vector& v, double alpha);

// ---------------------------------------------------------------------------
// Dense matrices (row-major). Sizes here are small (oracle path is n <~ 200),
// so plain O(n^3) kernels are fine.
// ---------------------------------------------------------------------------

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Vector mul(const Vector& x) const;
  Matrix mul(const Matrix& other) const;
  Matrix transposed() const;
  double frobenius_norm() const;
  double max_abs() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Real symmetric matrix. Construction symmetrizes via (M + M^T)/2 so that
// entries(i,j) == entries(j,i) exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n), entries_(n * n, 0.0) {
    if (n == 0) throw std::invalid_argument("SymMatrix: dimension must be >= 1");
  }
  // Symmetrizes arbitrary square data.
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(const Vector& d);

  std::size_t n() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  // Symmetric write: sets (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double v) {
    entries_[i * n_ + j] = v;
    entries_[j * n_ + i] = v;
  }

  Vector mul(const Vector& x) const;
  double quad(const Vector& x) const;  // x^T A x
  double frobenius_norm() const;
  double max_abs() const;
  Matrix as_matrix() const;

  // Certified spectral interval from row sums (Gershgorin discs).
  double gershgorin_upper() const;
  double gershgorin_lower() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

// Symmetric positive definite matrix; the Cholesky factor is computed at
// construction (the factorization succeeding *is* the SPD test) so shared
// concurrent reads never mutate state.
class SpdMatrix {
 public:
  explicit SpdMatrix(SymMatrix base);

  std::size_t n() const { return base_.n(); }
  const SymMatrix& sym() const { return base_; }
  const Matrix& cholesky_lower() const { return chol_; }

  Vector mul(const Vector& x) const { return base_.mul(x); }
  // ||x||_B = ||L^T x||, avoiding sqrt(B).
  double b_norm(const Vector& x) const;
  // Solves B y = rhs via the cached factor.
  Vector solve(const Vector& rhs) const;
  // Certified bound on ||B^{-1}||_2, namely min(||B^{-1}||_F, ||B^{-1}||_inf);
  // its reciprocal is a certified lower bound on mu_min(B).
  double inverse_norm_bound() const;

 private:
  SymMatrix base_;
  Matrix chol_;
};

// ---------------------------------------------------------------------------
// LU with partial pivoting. Singularity is an expected outcome for the
// Newton step systems at special iterate norms, so the factorization records it
// instead of throwing: a pivot below 1e-14 of the largest pivot marks the
// factor singular.
// ---------------------------------------------------------------------------

struct LuFactors {
  Matrix lu;
  std::vector<std::size_t> perm;
  bool singular = false;
  double max_pivot = 0.0;
  double min_pivot = 0.0;

  // Throws SingularSystemError if the factor is singular.
  Vector solve(const Vector& rhs) const;
};

LuFactors lu_factor(const Matrix& a, double pivot_rel_tol = 1e-14);

inline void check_dim(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("dimension mismatch: " + what);
}

}  // namespace spectral
