#include "spectral/trace.hpp"

#include "spectral/io.hpp"

namespace spectral {

const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::converged: return "converged";
    case TerminalReason::max_iter: return "max_iter";
    case TerminalReason::diverged: return "diverged";
    case TerminalReason::singular_system: return "singular_system";
  }
  return "unknown";
}

void IterationTrace::push(Record r, std::size_t cap) {
  if (r.k % stride_ != 0) {
    // Still keep the most recent iterate so the final record is exact.
    if (!records.empty() && records.back().k % stride_ != 0)
      records.back() = r;
    else
      records.push_back(r);
    return;
  }
  if (!records.empty() && records.back().k % stride_ != 0) records.pop_back();
  records.push_back(r);
  if (records.size() > cap) {
    std::vector<Record> kept;
    kept.reserve(records.size() / 2 + 1);
    stride_ *= 2;
    for (const auto& rec : records)
      if (rec.k % stride_ == 0) kept.push_back(rec);
    records.swap(kept);
  }
}

std::string IterationTrace::to_csv() const {
  std::string out = "k,f,grad_norm,norm_b,lambda\n";
  for (const auto& r : records) {
    out += std::to_string(r.k);
    out += ',';
    out += io::format_double(r.f_value);
    out += ',';
    out += io::format_double(r.grad_norm);
    out += ',';
    out += io::format_double(r.x_norm_b);
    out += ',';
    out += io::format_double(r.lambda_est);
    out += '\n';
  }
  return out;
}

}  // namespace spectral
