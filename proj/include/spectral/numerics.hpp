#pragma once

#include <cmath>
#include <cstddef>

namespace spectral {

// Error-free transform: s + e == a + b exactly, s = fl(a + b).
struct TwoSum {
  double s, e;
};
inline TwoSum two_sum(double a, double b) {
  double s = a + b;
  double bp = s - a;
  double e = (a - (s - bp)) + (b - bp);
  return {s, e};
}

// Neumaier-compensated running sum. Fixed evaluation order keeps reductions
// deterministic regardless of internal parallelism.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace spectral
