#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spectral {

enum class TerminalReason { converged, max_iter, diverged, singular_system };

const char* to_string(TerminalReason r);

// Per-iterate record of a solver run, used by the monotonicity and
// convergence tests and exportable as CSV for plotting.
struct IterationTrace {
  struct Record {
    std::uint64_t k = 0;
    double f_value = 0.0;
    double grad_norm = 0.0;
    double x_norm_b = 0.0;
    double lambda_est = 0.0;
  };

  std::vector<Record> records;
  TerminalReason terminal_reason = TerminalReason::max_iter;

  // Long runs (max_iter defaults to 1e7) are thinned by doubling the stride
  // once `cap` records accumulate; a subsequence of a monotone sequence is
  // still monotone, so the descent assertions survive thinning. The final
  // iterate is always present.
  void push(Record r, std::size_t cap = 1 << 20);

  // CSV with header `k,f,grad_norm,norm_b,lambda`.
  std::string to_csv() const;

 private:
  std::uint64_t stride_ = 1;
};

}  // namespace spectral
