#pragma once

#include <cstdint>
#include <optional>

#include "spectral/linalg.hpp"

namespace spectral {

// The unconstrained eigenvalue functional
//
//   F_{A,B}(x) = 1/2 <x,Ax> + gamma/2 <x,Bx> - gamma sqrt(<x,Bx>),
//
// whose nonzero critical points are the solutions of A x = lambda B x with
// ||x||_B = gamma/(gamma + lambda). B absent means B = I. The functional is
// defined everywhere (F(0) = 0) but differentiable only away from 0; gamma
// must exceed max(0, -lambda_1(C)) with C = sqrt(B)^-1 A sqrt(B)^-1, which is
// enforced at construction either by a certified bound or by a caller-supplied
// lambda_1 (e.g. from the oracle).
class Functional {
 public:
  // Validates gamma against a self-contained certified lower bound on
  // lambda_1(C): Gershgorin for B = I, else -||A||_F * ||B^{-1}||_F.
  static Functional make_certified(SymMatrix a, std::optional<SpdMatrix> b, double gamma);
  // Validates gamma against a caller-certified lambda_1(C).
  static Functional make_with_lambda1(SymMatrix a, std::optional<SpdMatrix> b, double gamma,
                                      double lambda1);
  // Only checks gamma > 0; the caller certifies the spectral condition
  // (Newton fixes gamma per config; the CLI --exact-gamma path checks it
  // against the oracle before constructing).
  static Functional make_unchecked(SymMatrix a, std::optional<SpdMatrix> b, double gamma);

  std::size_t n() const { return a_.n(); }
  const SymMatrix& a() const { return a_; }
  const std::optional<SpdMatrix>& b() const { return b_; }
  double gamma() const { return gamma_; }

  double b_norm(const Vector& x) const;
  Vector b_mul(const Vector& x) const;  // Bx (x itself when B = I)

  // Certified lower bound L <= lambda_1(C) used by make_certified.
  static double certified_lambda1_lower_bound(const SymMatrix& a,
                                              const std::optional<SpdMatrix>& b);

 private:
  Functional(SymMatrix a, std::optional<SpdMatrix> b, double gamma);

  SymMatrix a_;
  std::optional<SpdMatrix> b_;
  double gamma_;
};

// F(x); defined at x = 0 with value 0.
double evaluate(const Functional& f, const Vector& x);

// grad F(x) = Ax + gamma (1 - 1/||x||_B) Bx. Errors on x = 0 (F is not
// differentiable there).
Vector gradient(const Functional& f, const Vector& x);

// Hessian A + gamma B - (gamma/||x||_B) (B - (Bx)(Bx)^T / ||x||_B^2),
// which for B = I is (A + gamma I) - (gamma/||x||)(I - xx^T/||x||^2).
// Exactly symmetric by construction.
SymMatrix hessian(const Functional& f, const Vector& x);

// The norm law read-out: lambda = gamma (1/||x||_B - 1).
double eigenvalue_from_norm(double gamma, const Vector& x, const std::optional<SpdMatrix>& b);

// gamma = max(0, -L) + margin with L a certified lower bound on lambda_1 of
// the standard-form matrix (Gershgorin for B = I; conservative
// -||A||_F ||B^{-1}||_F otherwise).
double choose_gamma(const SymMatrix& a, const std::optional<SpdMatrix>& b, double margin);

// Descent-safe stepsize from certified Gershgorin bounds:
// safety/(U_A + gamma) for B = I, else safety/((U_A + gamma) U_B^3).
double choose_stepsize(const SymMatrix& a, const std::optional<SpdMatrix>& b, double gamma,
                       double safety);

struct SolverConfig {
  double gamma = 1.0;
  double alpha = 0.0;                // stepsize; each solver validates its own bound
  double tol_grad = 1e-12;           // gradient-norm stop for the descent solvers
  double tol_residual = 1e-13;       // normalized-residual stop for Newton
  std::uint64_t max_iter = 10000000; // 1e7
  std::uint64_t seed = 0;
  bool force_alpha = false;          // permit a stepsize above the certified bound
};

// One solver output. residual and norm_law_gap are the two certificates the
// paper attaches to a converged pair.
struct SpectralPair {
  double lambda = 0.0;
  Vector x;
  double residual = 0.0;      // ||Ax - lambda Bx|| / (1 + ||A||_F)
  double norm_law_gap = 0.0;  // | ||x||_B - gamma/(gamma+lambda) |

  static SpectralPair make(const Functional& f, double lambda, Vector x);
};

}  // namespace spectral
