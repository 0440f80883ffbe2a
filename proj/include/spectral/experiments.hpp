#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spectral/grid.hpp"
#include "spectral/newton.hpp"

namespace spectral::experiments {

// Grid head-to-head: Newton under both update rules from the same seeded
// random fields; hits are counted against the smallest eigenvalue computed
// independently by the gradient flow.
struct GridComparison {
  std::uint64_t trials = 0;
  double lambda_min = 0.0;
  ComparisonStats::PerRule norm_based;
  ComparisonStats::PerRule rayleigh;

  std::string summary_csv() const;
  std::string trials_csv() const;
};

GridComparison compare_update_rules_grid(const grid::GridDomain& domain, std::uint64_t trials,
                                         const grid::FlowConfig& cfg, unsigned threads = 1);

// Timing harness: for eigenfunctions 1..K, produce a warm start u0 in the
// deflated complement with flow residual < epsilon, then time (a) the
// deflated gradient flow, (b) matrix-free Newton (norm rule), (c) the
// Rayleigh-quotient rule, each continuing from the same u0 to cfg.tol.
struct BenchRow {
  std::size_t k = 0;
  double t_flow = 0.0;
  double t_newton = 0.0;
  double t_rqi = 0.0;
  double lambda_flow = 0.0;
  double lambda_newton = 0.0;
  double lambda_rqi = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::string csv() const;  // k,t_flow,t_newton,t_rqi,lambda_flow,lambda_newton,lambda_rqi
};

BenchResult bench_methods(const grid::GridDomain& domain, std::size_t count, double epsilon,
                          const grid::FlowConfig& cfg);

}  // namespace spectral::experiments
