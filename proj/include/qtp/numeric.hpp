#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace qtp {

using cplx = std::complex<double>;

/// Collects non-fatal warnings; in strict mode a warning is raised as an Error.
struct Diagnostics {
  bool strict = false;
  std::vector<std::string> warnings;

  void warn(const std::string& code, const std::string& message);
};

namespace numeric {

/// Neumaier compensated accumulator. Summation order is the call order.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    if constexpr (std::is_same_v<T, cplx>) {
      re_.add(x.real());
      im_.add(x.imag());
    } else {
      const T t = sum_ + x;
      if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
      } else {
        comp_ += (x - t) + sum_;
      }
      sum_ = t;
    }
  }
  T value() const {
    if constexpr (std::is_same_v<T, cplx>) {
      return {re_.value(), im_.value()};
    } else {
      return sum_ + comp_;
    }
  }

 private:
  struct Empty {};
  T sum_{};
  T comp_{};
  std::conditional_t<std::is_same_v<T, cplx>, CompensatedSum<double>, Empty> re_{};
  std::conditional_t<std::is_same_v<T, cplx>, CompensatedSum<double>, Empty> im_{};
};

double compensated_sum(const std::vector<double>& values);
cplx compensated_sum(const std::vector<cplx>& values);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(int n);

/// Composite trapezoid weights for n uniformly spaced nodes with spacing h.
std::vector<double> trapezoid_weights(int n, double h);

/// Trapezoid integral of uniformly sampled values.
double trapezoid(const std::vector<double>& values, double h);

/// Resolves a requested worker count; 0 means hardware concurrency.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) over a static contiguous partition.
/// Each index is processed by exactly one worker, so per-index results
/// do not depend on the worker count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace numeric
}  // namespace qtp
