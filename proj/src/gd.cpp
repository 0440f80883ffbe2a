#include "spectral/gd.hpp"

#include <cmath>
#include <limits>

#include "spectral/rng.hpp"

namespace spectral {

namespace {

constexpr double kDivergenceGuard = 10.0 / std::numeric_limits<double>::epsilon();

enum class Metric { euclidean, b_inverse };

void validate_alpha(double alpha, double bound, bool force) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gd: stepsize must be positive");
  if (alpha >= bound && !force)
    throw std::invalid_argument("gd: stepsize " + std::to_string(alpha) +
                                " is not below the certified bound " + std::to_string(bound) +
                                " (set force_alpha to override)");
}

// Shared descent loop. `deflate` (may be null) is applied to the iterate
// after every step; convergence is tested on the gradient with the same
// projection, which is the quantity the constrained descent drives to zero.
GdResult run_descent(const Functional& f, const SolverConfig& cfg, Vector x, Metric metric,
                     const DeflationBasis* deflate) {
  if (norm2(x) == 0.0) throw std::invalid_argument("gd: x0 must be nonzero");
  check_dim(x.size() == f.n(), "gd x0");

  GdResult out;
  const double gamma = f.gamma();
  TerminalReason reason = TerminalReason::max_iter;
  if (deflate) deflate->project(x, f.b());

  std::uint64_t k = 0;
  for (;; ++k) {
    double nb = f.b_norm(x);
    if (!std::isfinite(nb) || nb > kDivergenceGuard) {
      reason = TerminalReason::diverged;
      break;
    }
    if (nb == 0.0) {
      // Can only happen if deflation removed everything; report divergence.
      reason = TerminalReason::diverged;
      break;
    }
    Vector g = gradient(f, x);
    if (deflate) deflate->project(g, f.b());
    double gn = norm2(g);
    out.trace.push({k, evaluate(f, x), gn, nb, gamma * (1.0 / nb - 1.0)});
    if (gn <= cfg.tol_grad) {
      reason = TerminalReason::converged;
      break;
    }
    if (k >= cfg.max_iter) break;

    if (metric == Metric::b_inverse) g = f.b()->solve(g);
    axpy(-cfg.alpha, g, x);
    if (deflate) deflate->project(x, f.b());
  }

  out.trace.terminal_reason = reason;
  double lambda = eigenvalue_from_norm(gamma, x, f.b());
  out.pair = SpectralPair::make(f, lambda, std::move(x));
  return out;
}

}  // namespace

GdResult gd_standard(const SymMatrix& a, const SolverConfig& cfg, const Vector& x0) {
  validate_alpha(cfg.alpha, 1.0 / (a.gershgorin_upper() + cfg.gamma), cfg.force_alpha);
  Functional f = Functional::make_certified(a, std::nullopt, cfg.gamma);
  return run_descent(f, cfg, x0, Metric::euclidean, nullptr);
}

GdResult gd_generalized(const SymMatrix& a, const SpdMatrix& b, const SolverConfig& cfg,
                        const Vector& x0) {
  double ub = b.sym().gershgorin_upper();
  validate_alpha(cfg.alpha, 1.0 / ((a.gershgorin_upper() + cfg.gamma) * ub * ub * ub),
                 cfg.force_alpha);
  Functional f = Functional::make_certified(a, b, cfg.gamma);
  return run_descent(f, cfg, x0, Metric::euclidean, nullptr);
}

GdResult gd_b_metric(const SymMatrix& a, const SpdMatrix& b, const SolverConfig& cfg,
                     const Vector& x0) {
  validate_alpha(cfg.alpha, 1.0 / (a.gershgorin_upper() + cfg.gamma), cfg.force_alpha);
  Functional f = Functional::make_certified(a, b, cfg.gamma);
  return run_descent(f, cfg, x0, Metric::b_inverse, nullptr);
}

void DeflationBasis::project(Vector& v, const std::optional<SpdMatrix>& b) const {
  if (vectors.empty()) return;
  Vector bv = b ? b->mul(v) : v;
  for (const auto& u : vectors) {
    double c = dot(u, bv);
    axpy(-c, u, v);
  }
}

DeflatedResult gd_deflated(const SymMatrix& a, const std::optional<SpdMatrix>& b,
                           const SolverConfig& cfg, std::size_t m) {
  if (m > a.n()) throw std::invalid_argument("gd_deflated: m exceeds the dimension");
  // both the B-metric and the standard descent use the same bound
  validate_alpha(cfg.alpha, 1.0 / (a.gershgorin_upper() + cfg.gamma), cfg.force_alpha);
  Functional f = Functional::make_certified(a, b, cfg.gamma);

  DeflatedResult out;
  DeflationBasis basis;
  StreamSeed root{cfg.seed};
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng(root.sub("deflate/" + std::to_string(j) + "/x0"));
    Vector x0 = rng.sphere(a.n());
    GdResult r = run_descent(f, cfg, std::move(x0), b ? Metric::b_inverse : Metric::euclidean,
                             &basis);
    out.traces.push_back(std::move(r.trace));
    if (out.traces.back().terminal_reason != TerminalReason::converged) {
      out.diagnostic = "pair " + std::to_string(j + 1) + " did not converge (" +
                       std::string(to_string(out.traces.back().terminal_reason)) + ")";
      return out;
    }
    // Keep the basis B-orthonormal: re-project against accumulated vectors,
    // then scale to unit B-norm. The raw converged norm goes into the pair's
    // norm-law certificate before normalization.
    Vector v = r.pair.x;
    basis.project(v, b);
    double nb = b ? b->b_norm(v) : norm2(v);
    if (nb == 0.0) {
      out.diagnostic = "pair " + std::to_string(j + 1) + " collapsed under deflation";
      return out;
    }
    Vector unit = scaled(v, 1.0 / nb);
    SpectralPair pair = SpectralPair::make(f, r.pair.lambda, unit);
    pair.norm_law_gap = r.pair.norm_law_gap;  // certificate of the raw iterate
    out.pairs.push_back(std::move(pair));
    basis.vectors.push_back(std::move(unit));
  }
  out.complete = true;
  return out;
}

}  // namespace spectral
