#pragma once

#include <cstdint>
#include <utility>

#include "spectral/linalg.hpp"

namespace spectral::oracle {

// Independent brute-force verification path. Everything here is checked
// arithmetic of its own: a cyclic Jacobi eigensolver (unconditionally
// convergent for symmetric input), an SPD square root built on it, the
// standard-form reduction C = sqrt(B)^-1 A sqrt(B)^-1, and seeded random
// problem generators. None of it calls solver code.

struct SpectralDecomposition {
  Vector eigenvalues;     // ascending
  Matrix eigenvectors;    // column i pairs with eigenvalues[i]
};

struct RandomProblemSpec {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::pair<double, double> eig_range_a{0.0, 1.0};
  std::pair<double, double> eig_range_b{1.0, 2.0};  // lo must stay > 0
  bool spd_a = true;
};

// Cyclic Jacobi rotations until off-diagonal Frobenius norm < 1e-12 ||A||_F;
// at most 100 sweeps (non-convergence is a diagnostic error that should not
// occur for symmetric input). Eigenvalues sorted ascending by a stable sort.
SpectralDecomposition jacobi_eigh(const SymMatrix& a);

// Q sqrt(Lambda) Q^T from jacobi_eigh(b). Errors if any eigenvalue <= 0.
SymMatrix spd_sqrt(const SymMatrix& b);

// C = sqrt(B)^-1 A sqrt(B)^-1, sharing eigenvalues with the pencil (A, B).
SymMatrix reduce_to_standard(const SymMatrix& a, const SymMatrix& b);

// Eigenvalues of C with back-transformed B-orthonormal eigenvectors
// x_i = sqrt(B)^-1 r_i.
SpectralDecomposition generalized_eigh(const SymMatrix& a, const SymMatrix& b);

// Q Lambda Q^T with Lambda uniform in eig_range_a and Q from the QR
// factorization of a seeded Gaussian matrix. Deterministic in the seed.
SymMatrix random_spd(const RandomProblemSpec& spec);

// Random symmetric matrix with spectrum uniform in the given range
// (negative values allowed).
SymMatrix random_symmetric(std::size_t n, std::uint64_t seed,
                           std::pair<double, double> eig_range);

// Convenience: the (A, B) pair of a RandomProblemSpec; B uses eig_range_b
// (substream "b" of the seed).
std::pair<SymMatrix, SymMatrix> random_pair(const RandomProblemSpec& spec);

// Householder QR; returns Q with the sign convention diag(R) >= 0 so the
// result is deterministic. Used for random orthogonal matrices.
Matrix qr_orthogonal_factor(const Matrix& a);

// Largest principal angle (radians) between the column spans of two n x m
// matrices; the right way to compare degenerate eigenspaces.
double max_principal_angle(const Matrix& span_a, const Matrix& span_b);

}  // namespace spectral::oracle
