#include "qtp/numeric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "qtp/errors.hpp"

namespace qtp {

void Diagnostics::warn(const std::string& code, const std::string& message) {
  if (strict) {
    throw Error(code, message + " (promoted by strict mode)");
  }
  warnings.push_back(code + ": " + message);
}

namespace numeric {

double compensated_sum(const std::vector<double>& values) {
  CompensatedSum<double> acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

cplx compensated_sum(const std::vector<cplx>& values) {
  CompensatedSum<cplx> acc;
  for (const cplx& v : values) acc.add(v);
  return acc.value();
}

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights come
// from the first eigenvector components.
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag(i);
    jacobi(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

// Newton polish on the three-term recurrence; Golub-Welsch alone loses a few
// digits in the smallest weights.
void polish_legendre(QuadratureRule& rule) {
  const int n = static_cast<int>(rule.nodes.size());
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    double dp = 0.0;
    for (int it = 0; it < 4; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      x -= p1 / dp;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  if (!(b > a)) throw std::invalid_argument("gauss_legendre: need b > a");
  QuadratureRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {2.0};
  } else {
    Eigen::VectorXd off(n - 1);
    for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    rule = golub_welsch(off, 2.0);
    polish_legendre(rule);
  }
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  if (n == 1) return {{0.0}, {std::sqrt(M_PI)}};
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(0.5 * k);
  QuadratureRule rule = golub_welsch(off, std::sqrt(M_PI));
  // Newton polish with the normalized Hermite recurrence.
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    double pd = 0.0;
    for (int it = 0; it < 4; ++it) {
      double p0 = std::pow(M_PI, -0.25);
      double p1 = std::sqrt(2.0) * x * p0;
      for (int k = 2; k <= n; ++k) {
        const double p2 = std::sqrt(2.0 / k) * x * p1 - std::sqrt((k - 1.0) / k) * p0;
        p0 = p1;
        p1 = p2;
      }
      pd = std::sqrt(2.0 * n) * p0;
      x -= p1 / pd;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / (pd * pd);
  }
  return rule;
}

std::vector<double> trapezoid_weights(int n, double h) {
  if (n < 2) throw std::invalid_argument("trapezoid_weights: need n >= 2");
  std::vector<double> w(n, h);
  w.front() = 0.5 * h;
  w.back() = 0.5 * h;
  return w;
}

double trapezoid(const std::vector<double>& values, double h) {
  const auto w = trapezoid_weights(static_cast<int>(values.size()), h);
  CompensatedSum<double> acc;
  for (std::size_t i = 0; i < values.size(); ++i) acc.add(w[i] * values[i]);
  return acc.value();
}

int resolve_threads(int requested) {
  if (requested < 0) throw std::invalid_argument("threads must be >= 0");
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace numeric
}  // namespace qtp
