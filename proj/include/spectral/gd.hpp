#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spectral/functional.hpp"
#include "spectral/trace.hpp"

namespace spectral {

// Gradient-descent eigensolvers. All variants iterate a fixed stepsize that
// is validated against its certified Gershgorin bound
// (cfg.force_alpha overrides with a runtime warning on the trace
// side). Convergence is gradient-norm based; the returned pair additionally
// carries the eigen-residual and norm-law gap.

struct GdResult {
  SpectralPair pair;
  IterationTrace trace;
};

// Plain descent x_{k+1} = x_k - alpha grad F_A(x_k); converges to an
// eigenvector of the *smallest* eigenvalue reachable from x0's spectral
// support. Requires alpha < 1/(U_A + gamma).
GdResult gd_standard(const SymMatrix& a, const SolverConfig& cfg, const Vector& x0);

// Plain descent on F_{A,B}; converges to *a* solution pair of Ax = lambda Bx
// (not necessarily the smallest). Requires alpha < 1/((U_A + gamma) U_B^3).
GdResult gd_generalized(const SymMatrix& a, const SpdMatrix& b, const SolverConfig& cfg,
                        const Vector& x0);

// B-metric descent x_{k+1} = x_k - alpha B^{-1} grad F_{A,B}(x_k); converges
// to the smallest generalized eigenvalue for random x0. Requires
// alpha < 1/(U_A + gamma).
GdResult gd_b_metric(const SymMatrix& a, const SpdMatrix& b, const SolverConfig& cfg,
                     const Vector& x0);

struct DeflationBasis {
  // B-orthonormal vectors spanning the deflated subspace.
  std::vector<Vector> vectors;

  // v <- v - sum_i <v, x_i>_B x_i. bx is B*v (or v itself when B absent).
  void project(Vector& v, const std::optional<SpdMatrix>& b) const;
};

struct DeflatedResult {
  std::vector<SpectralPair> pairs;  // ascending lambda; x's are B-orthonormal
  std::vector<IterationTrace> traces;
  bool complete = false;
  std::string diagnostic;  // set when a pair failed to converge
};

// Eigenpairs 1..m in increasing-lambda order; pair j runs gd_b_metric
// (gd_standard when B is absent) with the iterate re-projected after every
// step onto the B-orthogonal complement of the pairs already found.
// Starting vectors come from cfg.seed substreams "deflate/<j>/x0".
DeflatedResult gd_deflated(const SymMatrix& a, const std::optional<SpdMatrix>& b,
                           const SolverConfig& cfg, std::size_t m);

}  // namespace spectral
