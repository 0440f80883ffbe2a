#include "spectral/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spectral/rng.hpp"

namespace spectral::oracle {

namespace {

double offdiag_frobenius(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SpectralDecomposition jacobi_eigh(const SymMatrix& sym) {
  const std::size_t n = sym.n();
  Matrix a = sym.as_matrix();
  Matrix q = Matrix::identity(n);
  const double target = 1e-12 * sym.frobenius_norm();

  int sweep = 0;
  for (; sweep < 100; ++sweep) {
    if (offdiag_frobenius(a) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t r = p + 1; r < n; ++r) {
        double apr = a(p, r);
        if (apr == 0.0) continue;
        double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        // A <- J^T A J on rows/cols p, r
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akr = a(k, r);
          a(k, p) = c * akp - s * akr;
          a(k, r) = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), ark = a(r, k);
          a(p, k) = c * apk - s * ark;
          a(r, k) = s * apk + c * ark;
        }
        a(p, r) = 0.0;
        a(r, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          double qkp = q(k, p), qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
  }
  if (sweep == 100 && offdiag_frobenius(a) > target)
    throw std::runtime_error("jacobi_eigh: no convergence after 100 sweeps (diagnostic)");

  // Stable ascending sort; ties keep Jacobi output order.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SpectralDecomposition d;
  d.eigenvalues.resize(n);
  d.eigenvectors = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    d.eigenvalues[col] = a(idx[col], idx[col]);
    for (std::size_t k = 0; k < n; ++k) d.eigenvectors(k, col) = q(k, idx[col]);
  }
  return d;
}

SymMatrix spd_sqrt(const SymMatrix& b) {
  SpectralDecomposition d = jacobi_eigh(b);
  const std::size_t n = b.n();
  for (double ev : d.eigenvalues)
    if (!(ev > 0.0)) throw NotSpdError("spd_sqrt: eigenvalue " + std::to_string(ev) + " <= 0");
  Matrix root(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += d.eigenvectors(i, k) * std::sqrt(d.eigenvalues[k]) * d.eigenvectors(j, k);
      root(i, j) = s;
    }
  return SymMatrix(root);
}

namespace {

// sqrt(B)^{-1} via the same diagonalization (kept local to the oracle).
Matrix spd_inv_sqrt(const SymMatrix& b) {
  SpectralDecomposition d = jacobi_eigh(b);
  const std::size_t n = b.n();
  for (double ev : d.eigenvalues)
    if (!(ev > 0.0))
      throw NotSpdError("reduce_to_standard: eigenvalue " + std::to_string(ev) + " <= 0");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += d.eigenvectors(i, k) / std::sqrt(d.eigenvalues[k]) * d.eigenvectors(j, k);
      m(i, j) = s;
    }
  return m;
}

}  // namespace

SymMatrix reduce_to_standard(const SymMatrix& a, const SymMatrix& b) {
  check_dim(a.n() == b.n(), "reduce_to_standard");
  Matrix bis = spd_inv_sqrt(b);
  return SymMatrix(bis.mul(a.as_matrix()).mul(bis));
}

SpectralDecomposition generalized_eigh(const SymMatrix& a, const SymMatrix& b) {
  check_dim(a.n() == b.n(), "generalized_eigh");
  Matrix bis = spd_inv_sqrt(b);
  SymMatrix c(bis.mul(a.as_matrix()).mul(bis));
  SpectralDecomposition d = jacobi_eigh(c);
  d.eigenvectors = bis.mul(d.eigenvectors);  // x_i = sqrt(B)^-1 r_i
  return d;
}

Matrix qr_orthogonal_factor(const Matrix& a) {
  const std::size_t n = a.rows();
  check_dim(a.cols() == n, "qr_orthogonal_factor");
  Matrix r = a;
  Matrix q = Matrix::identity(n);
  Vector v(n);
  for (std::size_t k = 0; k < n; ++k) {
    double normx = 0.0;
    for (std::size_t i = k; i < n; ++i) normx += r(i, k) * r(i, k);
    normx = std::sqrt(normx);
    if (normx == 0.0) continue;
    double alpha = r(k, k) > 0.0 ? -normx : normx;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i] = r(i, k) - (i == k ? alpha : 0.0);
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i] * r(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < n; ++i) r(i, j) -= s * v[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i] * q(j, i);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < n; ++i) q(j, i) -= s * v[i];
    }
  }
  // Fix signs so diag(R) >= 0; keeps the factor deterministic.
  for (std::size_t k = 0; k < n; ++k)
    if (r(k, k) < 0.0)
      for (std::size_t i = 0; i < n; ++i) q(i, k) = -q(i, k);
  return q;
}

namespace {

SymMatrix from_spectrum(std::size_t n, Rng& rng, std::pair<double, double> range) {
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = rng.gaussian();
  Matrix q = qr_orthogonal_factor(g);
  Vector lam(n);
  for (std::size_t i = 0; i < n; ++i) lam[i] = rng.uniform(range.first, range.second);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += q(i, k) * lam[k] * q(j, k);
      m(i, j) = s;
    }
  return SymMatrix(m);
}

}  // namespace

SymMatrix random_spd(const RandomProblemSpec& spec) {
  if (spec.n == 0) throw std::invalid_argument("random_spd: n must be >= 1");
  if (spec.eig_range_a.first > spec.eig_range_a.second)
    throw std::invalid_argument("random_spd: eig_range_a misordered");
  if (spec.spd_a && !(spec.eig_range_a.first > 0.0))
    throw std::invalid_argument("random_spd: SPD range must have lo > 0");
  Rng rng(StreamSeed{spec.seed}.sub("a"));
  return from_spectrum(spec.n, rng, spec.eig_range_a);
}

SymMatrix random_symmetric(std::size_t n, std::uint64_t seed,
                           std::pair<double, double> eig_range) {
  if (eig_range.first > eig_range.second)
    throw std::invalid_argument("random_symmetric: range misordered");
  Rng rng(StreamSeed{seed}.sub("a"));
  return from_spectrum(n, rng, eig_range);
}

std::pair<SymMatrix, SymMatrix> random_pair(const RandomProblemSpec& spec) {
  if (!(spec.eig_range_b.first > 0.0))
    throw std::invalid_argument("random_pair: eig_range_b.lo must be > 0");
  SymMatrix a = spec.spd_a ? random_spd(spec)
                           : random_symmetric(spec.n, spec.seed, spec.eig_range_a);
  Rng rng(StreamSeed{spec.seed}.sub("b"));
  SymMatrix b = from_spectrum(spec.n, rng, spec.eig_range_b);
  return {std::move(a), std::move(b)};
}

double max_principal_angle(const Matrix& span_a, const Matrix& span_b) {
  check_dim(span_a.rows() == span_b.rows() && span_a.cols() == span_b.cols(),
            "max_principal_angle");
  const std::size_t n = span_a.rows(), m = span_a.cols();
  // Orthonormalize both spans (modified Gram-Schmidt), then the singular
  // values of Qa^T Qb are the cosines of the principal angles.
  auto orthonormalize = [&](Matrix q) {
    for (std::size_t j = 0; j < m; ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < j; ++k) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += q(i, k) * q(i, j);
          for (std::size_t i = 0; i < n; ++i) q(i, j) -= s * q(i, k);
        }
      double nrm = 0.0;
      for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) throw std::invalid_argument("max_principal_angle: rank-deficient span");
      for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
    }
    return q;
  };
  Matrix qa = orthonormalize(span_a);
  Matrix qb = orthonormalize(span_b);
  Matrix w = qa.transposed().mul(qb);  // m x m
  // cos^2 of the angles are the eigenvalues of W^T W.
  SpectralDecomposition d = jacobi_eigh(SymMatrix(w.transposed().mul(w)));
  double c2 = std::clamp(d.eigenvalues.front(), 0.0, 1.0);
  return std::acos(std::sqrt(c2));
}

}  // namespace spectral::oracle
