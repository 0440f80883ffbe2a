#include "spectral/functional.hpp"

#include <cmath>
#include <string>

namespace spectral {

Functional::Functional(SymMatrix a, std::optional<SpdMatrix> b, double gamma)
    : a_(std::move(a)), b_(std::move(b)), gamma_(gamma) {
  if (b_) check_dim(b_->n() == a_.n(), "Functional: A and B sizes differ");
  if (!(gamma > 0.0)) throw std::invalid_argument("Functional: gamma must be positive");
}

double Functional::certified_lambda1_lower_bound(const SymMatrix& a,
                                                 const std::optional<SpdMatrix>& b) {
  if (!b) return a.gershgorin_lower();
  // Two certified routes for lambda_1(C), C = sqrt(B)^-1 A sqrt(B)^-1:
  //   lambda_1(C) >= -||A||_F * bnd(B^{-1}), and
  //   lambda_1(C) >= min(0, gersh_lower(A)) * bnd(B^{-1})
  // (the second since <Ax,x> >= gersh_lower(A) ||x||^2 and
  //  ||x||^2 <= ||B^{-1}||_2 ||y||^2 for y = sqrt(B) x). Take the tighter.
  double binv = b->inverse_norm_bound();
  double via_frob = -a.frobenius_norm() * binv;
  double gl = a.gershgorin_lower();
  double via_gersh = gl >= 0.0 ? 0.0 : gl * binv;
  return std::max(via_frob, via_gersh);
}

Functional Functional::make_certified(SymMatrix a, std::optional<SpdMatrix> b, double gamma) {
  double lo = certified_lambda1_lower_bound(a, b);
  if (!(gamma > std::max(0.0, -lo)))
    throw std::invalid_argument(
        "Functional: gamma = " + std::to_string(gamma) +
        " does not exceed the certified bound max(0, " + std::to_string(-lo) + ")");
  return Functional(std::move(a), std::move(b), gamma);
}

Functional Functional::make_with_lambda1(SymMatrix a, std::optional<SpdMatrix> b, double gamma,
                                         double lambda1) {
  if (!(gamma > std::max(0.0, -lambda1)))
    throw std::invalid_argument("Functional: gamma = " + std::to_string(gamma) +
                                " does not exceed max(0, -lambda_1) with lambda_1 = " +
                                std::to_string(lambda1));
  return Functional(std::move(a), std::move(b), gamma);
}

Functional Functional::make_unchecked(SymMatrix a, std::optional<SpdMatrix> b, double gamma) {
  return Functional(std::move(a), std::move(b), gamma);
}

double Functional::b_norm(const Vector& x) const {
  if (b_) return b_->b_norm(x);
  return norm2(x);
}

Vector Functional::b_mul(const Vector& x) const {
  if (b_) return b_->mul(x);
  return x;
}

double evaluate(const Functional& f, const Vector& x) {
  check_dim(x.size() == f.n(), "evaluate");
  double nb = f.b_norm(x);
  if (nb == 0.0) return 0.0;  // all three terms vanish at x = 0
  double quad_a = f.a().quad(x);
  double g = f.gamma();
  return 0.5 * quad_a + 0.5 * g * nb * nb - g * nb;
}

static void require_nonzero(double nb, const char* where) {
  if (!(nb > 0.0))
    throw std::invalid_argument(std::string(where) +
                                ": x = 0 is a nondifferentiable point of the functional");
}

Vector gradient(const Functional& f, const Vector& x) {
  check_dim(x.size() == f.n(), "gradient");
  double nb = f.b_norm(x);
  require_nonzero(nb, "gradient");
  Vector g = f.a().mul(x);
  Vector bx = f.b_mul(x);
  double coef = f.gamma() * (1.0 - 1.0 / nb);
  axpy(coef, bx, g);
  return g;
}

SymMatrix hessian(const Functional& f, const Vector& x) {
  check_dim(x.size() == f.n(), "hessian");
  double nb = f.b_norm(x);
  require_nonzero(nb, "hessian");
  const std::size_t n = f.n();
  Vector bx = f.b_mul(x);
  double g = f.gamma();
  double c = g / nb;
  double nb2 = nb * nb;
  SymMatrix h(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double bij = f.b() ? f.b()->sym()(i, j) : (i == j ? 1.0 : 0.0);
      double v = f.a()(i, j) + g * bij - c * (bij - bx[i] * bx[j] / nb2);
      h.set(i, j, v);
    }
  return h;
}

double eigenvalue_from_norm(double gamma, const Vector& x, const std::optional<SpdMatrix>& b) {
  double nb = b ? b->b_norm(x) : norm2(x);
  require_nonzero(nb, "eigenvalue_from_norm");
  return gamma * (1.0 / nb - 1.0);
}

double choose_gamma(const SymMatrix& a, const std::optional<SpdMatrix>& b, double margin) {
  if (!(margin > 0.0)) throw std::invalid_argument("choose_gamma: margin must be positive");
  double lo = Functional::certified_lambda1_lower_bound(a, b);
  return std::max(0.0, -lo) + margin;
}

double choose_stepsize(const SymMatrix& a, const std::optional<SpdMatrix>& b, double gamma,
                       double safety) {
  if (!(safety > 0.0 && safety < 1.0))
    throw std::invalid_argument("choose_stepsize: safety must lie in (0,1)");
  double ua = a.gershgorin_upper();
  if (!b) return safety / (ua + gamma);
  double ub = b->sym().gershgorin_upper();
  return safety / ((ua + gamma) * ub * ub * ub);
}

SpectralPair SpectralPair::make(const Functional& f, double lambda, Vector x) {
  SpectralPair p;
  p.lambda = lambda;
  Vector ax = f.a().mul(x);
  Vector bx = f.b_mul(x);
  axpy(-lambda, bx, ax);
  p.residual = norm2(ax) / (1.0 + f.a().frobenius_norm());
  double nb = f.b_norm(x);
  p.norm_law_gap = std::fabs(nb - f.gamma() / (f.gamma() + lambda));
  p.x = std::move(x);
  return p;
}

}  // namespace spectral
