#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "spectral/functional.hpp"
#include "spectral/trace.hpp"

namespace spectral {

// Which per-iteration eigenvalue estimate feeds the shifted rank-one system:
// the norm law gamma(1/||x||_B - 1) or the Rayleigh quotient x^TAx / x^TBx.
enum class UpdateRule { norm_based, rayleigh };

const char* to_string(UpdateRule r);

struct NewtonResult {
  SpectralPair pair;
  IterationTrace trace;
};

// Per-iteration view for tests and trace consumers: the shift that built the
// step system, the B-unit direction y_k, the new iterate, and the cheap
// stopping value |gamma (1 - (1 + lambda_k/gamma) <y_k, x_{k+1}>_B)|.
struct NewtonStepInfo {
  std::uint64_t k;
  double lambda_k;
  const Vector& y_k;
  const Vector& x_next;
  double stop_value;
};
using NewtonObserver = std::function<void(const NewtonStepInfo&)>;

// Newton iteration for the functional: per iteration solve
//   [A - lambda_k B + (gamma+lambda_k)(By_k)(By_k)^T] x_{k+1} = gamma B y_k
// by dense LU with partial pivoting, y_k = x_k/||x_k||_B. For B = I with the
// norm_based rule this is exactly x_{k+1} = x_k - (grad^2 F)^{-1} grad F.
// Stops when the true normalized residual of (rule-lambda(x_{k+1}), x_{k+1})
// drops to cfg.tol_residual; a pivot below 1e-14 of the largest ends the run
// with terminal_reason = singular_system (iterates landing exactly on a
// norm-law sphere can make the step system singular, so detection beats
// crashing).
NewtonResult newton_solve(const SymMatrix& a, const std::optional<SpdMatrix>& b,
                          const SolverConfig& cfg, const Vector& x0, UpdateRule rule,
                          const NewtonObserver& observer = nullptr);

// Cheap stopping value; equals ||A x_next - lambda_k x_next|| when
// x_next solves the Newton step system exactly with B = I and ||y_k|| = 1.
double residual_stop(double gamma, double lambda_k, const Vector& y_k, const Vector& x_next);

// One-step eigenvector estimate: solve
// (A - lambda~ I + (gamma+lambda~) x0 x0^T) x = gamma x0 with x0 uniform on
// the sphere. Unique nonzero solution with probability 1 when lambda~ has
// multiplicity 1.
Vector eigvec_from_eigval(const SymMatrix& a, double lambda_tilde, double gamma,
                          std::uint64_t seed);

// Block variant for a known multiplicity m: the returned columns span the
// eigenspace (full rank enforced: smallest singular value of the normalized
// column matrix must exceed 1e-6).
std::vector<Vector> eigspace_from_eigval(const SymMatrix& a, double lambda_tilde, std::size_t m,
                                         double gamma, std::uint64_t seed);

// Error-vs-offset probe of the perturbed one-step system at lambda~ + delta
// (the error scales linearly in the offset). Takes a general square matrix
// since diagonalizable nonsymmetric input works too. The delta -> 0
// reference is Richardson-extrapolated from the two smallest offsets.
std::vector<std::pair<double, double>> perturbed_eigvec_error(const Matrix& a,
                                                              double lambda_tilde,
                                                              const std::vector<double>& offsets,
                                                              double gamma, std::uint64_t seed);

struct ComparisonStats {
  struct PerRule {
    std::uint64_t hits_on_min = 0;
    std::uint64_t failures = 0;
    double max_lambda = 0.0;
    double mean_lambda = 0.0;
    // per-trial outcome: lambda when converged, NaN when failed
    std::vector<double> lambdas;
  };
  std::uint64_t trials = 0;
  double lambda_min = 0.0;  // oracle reference the hits are counted against
  PerRule norm_based;
  PerRule rayleigh;

  // CSV `rule,hits,max_lambda,mean_lambda,failures`
  std::string summary_csv() const;
  // CSV `trial,lambda_norm_based,lambda_rayleigh` (empty field on failure)
  std::string trials_csv() const;
};

// Head-to-head experiment: both update rules from the same seeded random starts
// (substreams "trial/<t>/x0" of cfg.seed). A hit is |lambda - lambda_min| <
// 1e-13 max(1, |lambda_min|) against the oracle smallest eigenvalue. Trials
// may run on `threads` workers; per-trial streams keep the result
// independent of scheduling.
ComparisonStats compare_update_rules(const SymMatrix& a, const SpdMatrix& b,
                                     std::uint64_t trials, const SolverConfig& cfg,
                                     unsigned threads = 1);

}  // namespace spectral
