#include "spectral/experiments.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "spectral/io.hpp"
#include "spectral/parallel.hpp"
#include "spectral/rng.hpp"

namespace spectral::experiments {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void accumulate(ComparisonStats::PerRule& r, double lambda_min, double hit_tol) {
  double sum = 0.0;
  std::uint64_t count = 0;
  double mx = -std::numeric_limits<double>::infinity();
  r.hits_on_min = 0;
  r.failures = 0;
  for (double v : r.lambdas) {
    if (!std::isfinite(v)) {
      ++r.failures;
      continue;
    }
    ++count;
    sum += v;
    mx = std::max(mx, v);
    if (std::fabs(v - lambda_min) < hit_tol) ++r.hits_on_min;
  }
  r.mean_lambda = count ? sum / static_cast<double>(count) : 0.0;
  r.max_lambda = count ? mx : 0.0;
}

std::string per_rule_summary(const ComparisonStats::PerRule& nb,
                             const ComparisonStats::PerRule& rq) {
  std::string s = "rule,hits,max_lambda,mean_lambda,failures\n";
  auto row = [&](const char* name, const ComparisonStats::PerRule& r) {
    s += name;
    s += ',' + std::to_string(r.hits_on_min);
    s += ',' + io::format_double(r.max_lambda);
    s += ',' + io::format_double(r.mean_lambda);
    s += ',' + std::to_string(r.failures);
    s += '\n';
  };
  row("norm_based", nb);
  row("rayleigh", rq);
  return s;
}

std::string per_trial_csv(std::uint64_t trials, const ComparisonStats::PerRule& nb,
                          const ComparisonStats::PerRule& rq) {
  std::string s = "trial,lambda_norm_based,lambda_rayleigh\n";
  for (std::uint64_t t = 0; t < trials; ++t) {
    s += std::to_string(t);
    for (const ComparisonStats::PerRule* r : {&nb, &rq}) {
      s += ',';
      if (std::isfinite(r->lambdas[t])) s += io::format_double(r->lambdas[t]);
    }
    s += '\n';
  }
  return s;
}

}  // namespace

std::string GridComparison::summary_csv() const { return per_rule_summary(norm_based, rayleigh); }
std::string GridComparison::trials_csv() const {
  return per_trial_csv(trials, norm_based, rayleigh);
}

GridComparison compare_update_rules_grid(const grid::GridDomain& domain, std::uint64_t trials,
                                         const grid::FlowConfig& cfg, unsigned threads) {
  if (trials < 1)
    throw std::invalid_argument("compare_update_rules_grid: trials must be >= 1");
  GridComparison out;
  out.trials = trials;

  // Independent reference for the hit count: the deflated gradient flow.
  grid::FlowConfig ref = cfg;
  ref.tol = std::min(cfg.tol, 1e-12);
  ref.seed = StreamSeed{cfg.seed}.sub("reference").value;
  grid::GridEigResult first = grid::solve_eigenfunctions(domain, 1, ref);
  if (!first.complete)
    throw std::runtime_error("compare_update_rules_grid: reference flow failed: " +
                             first.diagnostic);
  out.lambda_min = first.pairs[0].lambda;
  const double hit_tol = 1e-8 * std::max(1.0, std::fabs(out.lambda_min));

  out.norm_based.lambdas.assign(trials, std::numeric_limits<double>::quiet_NaN());
  out.rayleigh.lambdas.assign(trials, std::numeric_limits<double>::quiet_NaN());
  StreamSeed root{cfg.seed};
  parallel_for(trials, threads, [&](std::size_t t) {
    grid::GridField u0 =
        grid::random_field(domain, root.sub("trial/" + std::to_string(t) + "/u0").value);
    for (auto rule : {grid::GridUpdateRule::norm_based, grid::GridUpdateRule::rayleigh}) {
      auto& lam = rule == grid::GridUpdateRule::norm_based ? out.norm_based.lambdas
                                                           : out.rayleigh.lambdas;
      try {
        grid::NewtonGridResult r = grid::newton_grid(domain, u0, cfg, rule);
        if (r.trace.terminal_reason == TerminalReason::converged) lam[t] = r.lambda;
      } catch (const std::exception&) {
        // counted as a failure
      }
    }
  });
  accumulate(out.norm_based, out.lambda_min, hit_tol);
  accumulate(out.rayleigh, out.lambda_min, hit_tol);
  return out;
}

std::string BenchResult::csv() const {
  std::string s = "k,t_flow,t_newton,t_rqi,lambda_flow,lambda_newton,lambda_rqi\n";
  for (const auto& r : rows) {
    s += std::to_string(r.k);
    s += ',' + io::format_double(r.t_flow);
    s += ',' + io::format_double(r.t_newton);
    s += ',' + io::format_double(r.t_rqi);
    s += ',' + io::format_double(r.lambda_flow);
    s += ',' + io::format_double(r.lambda_newton);
    s += ',' + io::format_double(r.lambda_rqi);
    s += '\n';
  }
  return s;
}

BenchResult bench_methods(const grid::GridDomain& domain, std::size_t count, double epsilon,
                          const grid::FlowConfig& cfg) {
  if (count < 1) throw std::invalid_argument("bench_methods: count must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("bench_methods: epsilon must be positive");

  BenchResult out;
  std::vector<grid::GridField> phis;
  StreamSeed root{cfg.seed};

  for (std::size_t k = 0; k < count; ++k) {
    // Warm start: random field driven into the deflated complement until the
    // projected residual is below epsilon; the eigenvalue estimate is then
    // near the (k+1)-st one and all three timed methods share this start.
    grid::GridField seed_field =
        grid::random_field(domain, root.sub("bench/" + std::to_string(k) + "/u0").value);
    grid::FlowRunResult warm = grid::run_flow(domain, seed_field, cfg, phis, epsilon);
    if (!warm.converged)
      throw std::runtime_error("bench_methods: warm start " + std::to_string(k + 1) +
                               " did not reach epsilon");
    grid::GridField u0 = warm.u_raw;

    BenchRow row;
    row.k = k + 1;

    auto t0 = std::chrono::steady_clock::now();
    grid::FlowRunResult flow = grid::run_flow(domain, u0, cfg, phis, cfg.tol);
    row.t_flow = seconds_since(t0);
    if (!flow.converged)
      throw std::runtime_error("bench_methods: flow " + std::to_string(k + 1) +
                               " did not converge");
    row.lambda_flow = flow.lambda;

    // Newton and RQI are cheap; take the better of two runs to damp clock
    // jitter on loaded machines.
    double best_newton = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 2; ++rep) {
      t0 = std::chrono::steady_clock::now();
      grid::NewtonGridResult nres =
          grid::newton_grid(domain, u0, cfg, grid::GridUpdateRule::norm_based);
      best_newton = std::min(best_newton, seconds_since(t0));
      row.lambda_newton = nres.lambda;
    }
    row.t_newton = best_newton;

    double best_rqi = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 2; ++rep) {
      t0 = std::chrono::steady_clock::now();
      grid::NewtonGridResult rres =
          grid::newton_grid(domain, u0, cfg, grid::GridUpdateRule::rayleigh);
      best_rqi = std::min(best_rqi, seconds_since(t0));
      row.lambda_rqi = rres.lambda;
    }
    row.t_rqi = best_rqi;

    double nrm = grid::l2_norm(flow.u_raw);
    for (auto& v : flow.u_raw.values) v /= nrm;
    phis.push_back(std::move(flow.u_raw));
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace spectral::experiments
