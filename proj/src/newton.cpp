#include "spectral/newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spectral/io.hpp"
#include "spectral/oracle.hpp"
#include "spectral/parallel.hpp"
#include "spectral/rng.hpp"

namespace spectral {

const char* to_string(UpdateRule r) {
  return r == UpdateRule::norm_based ? "norm_based" : "rayleigh";
}

double residual_stop(double gamma, double lambda_k, const Vector& y_k, const Vector& x_next) {
  return std::fabs(gamma * (1.0 - (1.0 + lambda_k / gamma) * dot(y_k, x_next)));
}

namespace {

double rule_lambda(const Functional& f, UpdateRule rule, const Vector& x, double nb) {
  if (rule == UpdateRule::norm_based) return f.gamma() * (1.0 / nb - 1.0);
  double num = f.a().quad(x);
  double den = nb * nb;
  return num / den;
}

// M = A - lambda B + w (By)(By)^T as a dense general matrix.
Matrix step_matrix(const Functional& f, double lambda, double w, const Vector& by) {
  const std::size_t n = f.n();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double bij = f.b() ? f.b()->sym()(i, j) : (i == j ? 1.0 : 0.0);
      m(i, j) = f.a()(i, j) - lambda * bij + w * by[i] * by[j];
    }
  return m;
}

}  // namespace

NewtonResult newton_solve(const SymMatrix& a, const std::optional<SpdMatrix>& b,
                          const SolverConfig& cfg, const Vector& x0, UpdateRule rule,
                          const NewtonObserver& observer) {
  if (norm2(x0) == 0.0) throw std::invalid_argument("newton_solve: x0 must be nonzero");
  // gamma is fixed per cfg; its spectral validity is the caller's concern.
  Functional f = Functional::make_unchecked(a, b, cfg.gamma);
  const double gamma = cfg.gamma;
  const double a_scale = 1.0 + a.frobenius_norm();

  NewtonResult out;
  Vector x = x0;
  TerminalReason reason = TerminalReason::max_iter;

  double nb = f.b_norm(x);
  double lam = rule_lambda(f, rule, x, nb);
  out.trace.push({0, evaluate(f, x), norm2(gradient(f, x)), nb, lam});

  std::uint64_t max_newton = cfg.max_iter > 200 ? 200 : cfg.max_iter;
  for (std::uint64_t k = 0; k < max_newton; ++k) {
    if (!std::isfinite(nb) || nb == 0.0) {
      reason = TerminalReason::diverged;
      break;
    }
    Vector y = scaled(x, 1.0 / nb);          // B-unit direction
    Vector by = f.b_mul(y);
    Matrix m = step_matrix(f, lam, gamma + lam, by);
    LuFactors lu = lu_factor(m);
    if (lu.singular) {
      reason = TerminalReason::singular_system;
      break;
    }
    Vector x_next = lu.solve(scaled(by, gamma));
    double stop_val = std::fabs(gamma * (1.0 - (1.0 + lam / gamma) *
                                                   dot(y, f.b_mul(x_next))));
    if (observer) observer(NewtonStepInfo{k, lam, y, x_next, stop_val});

    x = std::move(x_next);
    nb = f.b_norm(x);
    if (!std::isfinite(nb) || nb == 0.0) {
      reason = TerminalReason::diverged;
      break;
    }
    lam = rule_lambda(f, rule, x, nb);
    Vector res = f.a().mul(x);
    axpy(-lam, f.b_mul(x), res);
    double true_residual = norm2(res) / a_scale;
    out.trace.push({k + 1, evaluate(f, x), norm2(gradient(f, x)), nb,
                    gamma * (1.0 / nb - 1.0)});
    if (true_residual <= cfg.tol_residual) {
      reason = TerminalReason::converged;
      break;
    }
  }

  out.trace.terminal_reason = reason;
  out.pair = SpectralPair::make(f, lam, std::move(x));
  return out;
}

Vector eigvec_from_eigval(const SymMatrix& a, double lambda_tilde, double gamma,
                          std::uint64_t seed) {
  if (!(gamma > 0.0) || gamma == -lambda_tilde)
    throw std::invalid_argument("eigvec_from_eigval: need gamma > 0 and gamma != -lambda");
  const std::size_t n = a.n();
  Rng rng(StreamSeed{seed}.sub("x0"));
  Vector x0 = rng.sphere(n);
  Matrix m(n, n);
  double w = gamma + lambda_tilde;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = a(i, j) - (i == j ? lambda_tilde : 0.0) + w * x0[i] * x0[j];
  LuFactors lu = lu_factor(m);
  if (lu.singular)
    throw SingularSystemError(
        "eigvec_from_eigval: step system is singular; if the eigenvalue has multiplicity "
        "m > 1 use eigspace_from_eigval");
  Vector x = lu.solve(scaled(x0, gamma));
  Vector res = a.mul(x);
  axpy(-lambda_tilde, x, res);
  if (norm2(res) > 1e-8 * (1.0 + a.frobenius_norm()))
    throw std::runtime_error("eigvec_from_eigval: residual " + io::format_double(norm2(res)) +
                             " too large; lambda may not be an eigenvalue of multiplicity 1");
  return x;
}

std::vector<Vector> eigspace_from_eigval(const SymMatrix& a, double lambda_tilde, std::size_t m,
                                         double gamma, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("eigspace_from_eigval: m must be >= 1");
  if (!(gamma > 0.0) || gamma == -lambda_tilde)
    throw std::invalid_argument("eigspace_from_eigval: need gamma > 0 and gamma != -lambda");
  const std::size_t n = a.n();
  StreamSeed root{seed};
  std::vector<Vector> x0(m);
  for (std::size_t c = 0; c < m; ++c) {
    Rng rng(root.sub("x0/" + std::to_string(c)));
    x0[c] = rng.sphere(n);
  }
  Matrix mat(n, n);
  double w = gamma + lambda_tilde;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double rank = 0.0;
      for (std::size_t c = 0; c < m; ++c) rank += x0[c][i] * x0[c][j];
      mat(i, j) = a(i, j) - (i == j ? lambda_tilde : 0.0) + w * rank;
    }
  LuFactors lu = lu_factor(mat);
  if (lu.singular)
    throw SingularSystemError("eigspace_from_eigval: step system is singular (is the "
                              "multiplicity really " + std::to_string(m) + "?)");
  std::vector<Vector> cols(m);
  double scale = 1.0 + a.frobenius_norm();
  for (std::size_t c = 0; c < m; ++c) {
    cols[c] = lu.solve(scaled(x0[c], gamma));
    Vector res = a.mul(cols[c]);
    axpy(-lambda_tilde, cols[c], res);
    if (norm2(res) > 1e-8 * scale)
      throw std::runtime_error("eigspace_from_eigval: column " + std::to_string(c) +
                               " residual too large");
  }
  // Rank check on the normalized columns: smallest singular value of the
  // n x m matrix via its m x m Gram.
  SymMatrix gram(m);
  std::vector<Vector> unit(m);
  for (std::size_t c = 0; c < m; ++c) unit[c] = scaled(cols[c], 1.0 / norm2(cols[c]));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) gram.set(i, j, dot(unit[i], unit[j]));
  double lam_min = oracle::jacobi_eigh(gram).eigenvalues.front();
  if (!(lam_min > 1e-12))
    throw std::runtime_error("eigspace_from_eigval: returned columns are rank deficient");
  if (std::sqrt(std::max(lam_min, 0.0)) <= 1e-6)
    throw std::runtime_error("eigspace_from_eigval: smallest singular value " +
                             io::format_double(std::sqrt(lam_min)) + " below 1e-6");
  return cols;
}

std::vector<std::pair<double, double>> perturbed_eigvec_error(const Matrix& a,
                                                              double lambda_tilde,
                                                              const std::vector<double>& offsets,
                                                              double gamma, std::uint64_t seed) {
  check_dim(a.rows() == a.cols(), "perturbed_eigvec_error");
  if (offsets.empty()) throw std::invalid_argument("perturbed_eigvec_error: no offsets");
  for (double d : offsets)
    if (d == 0.0)
      throw std::invalid_argument("perturbed_eigvec_error: offsets must be nonzero");
  if (!(gamma > 0.0) || gamma == -lambda_tilde)
    throw std::invalid_argument("perturbed_eigvec_error: need gamma > 0 and gamma != -lambda");

  const std::size_t n = a.rows();
  Rng rng(StreamSeed{seed}.sub("x0"));
  Vector x0 = rng.sphere(n);

  auto solve_at = [&](double lambda) {
    Matrix m(n, n);
    double w = gamma + lambda;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        m(i, j) = a(i, j) - (i == j ? lambda : 0.0) + w * x0[i] * x0[j];
    LuFactors lu = lu_factor(m);
    if (lu.singular)
      throw SingularSystemError("perturbed_eigvec_error: singular system at lambda = " +
                                io::format_double(lambda));
    return lu.solve(scaled(x0, gamma));
  };

  double dref = offsets[0];
  for (double d : offsets)
    if (std::fabs(d) < std::fabs(dref)) dref = d;
  // Linear error model: x(delta) = x~ + delta d + O(delta^2), so
  // x~ ~= 2 x(delta/2) - x(delta) at the smallest requested offset.
  Vector xa = solve_at(lambda_tilde + dref / 2.0);
  Vector xb = solve_at(lambda_tilde + dref);
  Vector xref = scaled(xa, 2.0);
  axpy(-1.0, xb, xref);

  std::vector<std::pair<double, double>> out;
  out.reserve(offsets.size());
  for (double d : offsets) {
    Vector x = solve_at(lambda_tilde + d);
    axpy(-1.0, xref, x);
    out.emplace_back(d, norm2(x));
  }
  return out;
}

std::string ComparisonStats::summary_csv() const {
  std::string s = "rule,hits,max_lambda,mean_lambda,failures\n";
  auto row = [&](const char* name, const PerRule& r) {
    s += name;
    s += ',' + std::to_string(r.hits_on_min);
    s += ',' + io::format_double(r.max_lambda);
    s += ',' + io::format_double(r.mean_lambda);
    s += ',' + std::to_string(r.failures);
    s += '\n';
  };
  row("norm_based", norm_based);
  row("rayleigh", rayleigh);
  return s;
}

std::string ComparisonStats::trials_csv() const {
  std::string s = "trial,lambda_norm_based,lambda_rayleigh\n";
  for (std::uint64_t t = 0; t < trials; ++t) {
    s += std::to_string(t);
    for (const PerRule* r : {&norm_based, &rayleigh}) {
      s += ',';
      double v = r->lambdas[t];
      if (std::isfinite(v)) s += io::format_double(v);
    }
    s += '\n';
  }
  return s;
}

ComparisonStats compare_update_rules(const SymMatrix& a, const SpdMatrix& b,
                                     std::uint64_t trials, const SolverConfig& cfg,
                                     unsigned threads) {
  if (trials < 1) throw std::invalid_argument("compare_update_rules: trials must be >= 1");
  ComparisonStats stats;
  stats.trials = trials;
  stats.lambda_min = oracle::generalized_eigh(a, b.sym()).eigenvalues.front();
  stats.norm_based.lambdas.assign(trials, std::numeric_limits<double>::quiet_NaN());
  stats.rayleigh.lambdas.assign(trials, std::numeric_limits<double>::quiet_NaN());

  StreamSeed root{cfg.seed};
  parallel_for(trials, threads, [&](std::size_t t) {
    Rng rng(root.sub("trial/" + std::to_string(t) + "/x0"));
    Vector x0 = rng.sphere(a.n());
    for (UpdateRule rule : {UpdateRule::norm_based, UpdateRule::rayleigh}) {
      auto& lam = rule == UpdateRule::norm_based ? stats.norm_based.lambdas
                                                 : stats.rayleigh.lambdas;
      try {
        NewtonResult r = newton_solve(a, b, cfg, x0, rule);
        if (r.trace.terminal_reason == TerminalReason::converged) lam[t] = r.pair.lambda;
      } catch (const std::exception&) {
        // counted as a failure below
      }
    }
  });

  for (auto* r : {&stats.norm_based, &stats.rayleigh}) {
    double sum = 0.0;
    std::uint64_t count = 0;
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : r->lambdas) {
      if (!std::isfinite(v)) {
        ++r->failures;
        continue;
      }
      ++count;
      sum += v;
      mx = std::max(mx, v);
      if (std::fabs(v - stats.lambda_min) < 1e-13 * std::max(1.0, std::fabs(stats.lambda_min)))
        ++r->hits_on_min;
    }
    r->mean_lambda = count ? sum / static_cast<double>(count) : 0.0;
    r->max_lambda = count ? mx : 0.0;
  }
  return stats;
}

}  // namespace spectral
