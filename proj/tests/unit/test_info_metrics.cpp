#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "qtp/errors.hpp"
#include "qtp/info_metrics.hpp"
#include "qtp/multi_event.hpp"

using namespace qtp;

namespace {

// Two-step Markov process: P2(z1, z2) = P1(z1) T(z2 | z1), second marginal exact.
Hierarchy classical_hierarchy(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Hierarchy h;
  h.weights = Eigen::VectorXd::Constant(n, 0.25);
  h.p1.resize(n);
  for (int i = 0; i < n; ++i) h.p1[i] = u(rng);
  h.p1 /= h.p1.dot(h.weights);
  h.p2.resize(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row(n);
    for (int j = 0; j < n; ++j) row[j] = u(rng);
    row /= row.dot(h.weights);
    h.p2.row(i) = h.p1[i] * row.transpose();
  }
  h.p1_second = h.p2.transpose() * h.weights;
  h.weights_second = h.weights;
  return h;
}

Hierarchy permuted(const Hierarchy& h, const std::vector<int>& perm) {
  Hierarchy out = h;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.p1[i] = h.p1[perm[i]];
    out.p1_second[i] = h.p1_second[perm[i]];
    out.weights[i] = h.weights[perm[i]];
    out.weights_second[i] = h.weights_second[perm[i]];
    for (std::size_t j = 0; j < perm.size(); ++j) out.p2(i, j) = h.p2(perm[i], perm[j]);
  }
  return out;
}

}  // namespace

TEST_CASE("classical hierarchies satisfy Kolmogorov additivity") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const Hierarchy h = classical_hierarchy(12, seed);
    CHECK(kolmogorov_defect(h) <= 1e-10);
    // Gibbs inequality in the classical regime.
    CHECK(correlation_entropy(h).value >= -1e-12);
  }
  // Product of a normalized density with itself.
  Hierarchy prod;
  prod.weights = Eigen::VectorXd::Constant(5, 0.2);
  prod.p1 = Eigen::VectorXd::LinSpaced(5, 1.0, 3.0);
  prod.p1 /= prod.p1.dot(prod.weights);
  prod.p2 = prod.p1 * prod.p1.transpose();
  CHECK(kolmogorov_defect(prod) <= 1e-10);
  CHECK(std::abs(correlation_entropy(prod).value) <= 1e-10);
}

TEST_CASE("correlation entropy of two perfectly correlated cells") {
  Hierarchy h;
  h.weights = Eigen::VectorXd::Ones(2);
  h.p1 = Eigen::VectorXd::Constant(2, 0.5);
  h.p2 = Eigen::MatrixXd::Zero(2, 2);
  h.p2(0, 0) = h.p2(1, 1) = 0.5;
  CHECK(std::abs(correlation_entropy(h).value - std::log(2.0)) <= 1e-10);
  CHECK(kolmogorov_defect(h) <= 1e-15);

  h.p1[1] = 0.0;
  h.p1[0] = 1.0;
  CHECK_THROWS_AS(correlation_entropy(h), SupportMismatch);
  const CorrelationEntropy loose = correlation_entropy(h, false);
  CHECK(loose.excluded_first == std::vector<std::size_t>{1});
  CHECK(loose.excluded_second == std::vector<std::size_t>{1});
}

TEST_CASE("metrics are invariant under relabeling cells") {
  const Hierarchy h = classical_hierarchy(10, 11);
  Hierarchy q = h;
  q.p2(2, 7) *= 1.5;  // leave the classical regime
  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(5));
  const Hierarchy qp = permuted(q, perm);
  CHECK(std::abs(kolmogorov_defect(qp) - kolmogorov_defect(q)) <= 1e-12);
  CHECK(std::abs(correlation_entropy(qp).value - correlation_entropy(q).value) <= 1e-12);
  std::vector<double> p(q.p1.data(), q.p1.data() + 10), pp(10), vol(10, 0.25);
  for (int i = 0; i < 10; ++i) pp[i] = p[perm[i]];
  CHECK(std::abs(boltzmann_entropy(pp, vol) - boltzmann_entropy(p, vol)) <= 1e-12);
  CHECK_THROWS_AS(kolmogorov_defect(Hierarchy{}), std::invalid_argument);
  Hierarchy bad = h;
  bad.p2(0, 0) = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("Boltzmann entropy") {
  CHECK(boltzmann_entropy({0.5, 0.5}, {1.0, 1.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(boltzmann_entropy({1.0, 0.0, 0.0}, {1.0, 1.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(boltzmann_entropy({0.5}, {1.0, 1.0}), std::invalid_argument);

  // Product gaussian in (x, k) on 256 cells per axis.
  const int n = 256;
  const double sx = 1.3, sk = 0.4;
  const double hx = 16.0 * sx / n, hk = 16.0 * sk / n;
  std::vector<double> p, vol;
  for (int i = 0; i < n; ++i) {
    const double x = -8.0 * sx + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      const double k = -8.0 * sk + (j + 0.5) * hk;
      p.push_back(std::exp(-0.5 * x * x / (sx * sx) - 0.5 * k * k / (sk * sk)) / (2.0 * M_PI * sx * sk));
      vol.push_back(hx * hk);
    }
  }
  const double expect = 0.5 * std::log(2.0 * M_PI * M_E * sx * sx) + 0.5 * std::log(2.0 * M_PI * M_E * sk * sk);
  CHECK(std::abs(boltzmann_entropy(p, vol) - expect) < 1e-2 * std::abs(expect));
}

TEST_CASE("Kolmogorov defect of a two-detector vacuum hierarchy") {
  FieldSpec s;
  s.dim = Dimension::D1p1;
  s.mass = 1.0;
  s.epsilon = 0.1;
  s.modes.dim = Dimension::D1p1;
  for (int j = 0; j < 10; ++j) {
    s.modes.k.emplace_back(-2.7 + 0.6 * j, 0.0, 0.0);
    s.modes.weight.push_back(0.6);
  }
  const auto k = DetectorKernel::gaussian_energy(1.5, 0.5);
  const std::vector<SpacetimePoint> z{{0.0, {-0.5}}, {0.0, {0.5}}, {0.8, {-0.5}}, {0.8, {0.5}}};
  const JointEvaluator one(Vacuum{}, s, {k});
  const JointEvaluator two(Vacuum{}, s, {k, k});
  Hierarchy h;
  h.weights = Eigen::VectorXd::Constant(4, 0.5);
  h.p1.resize(4);
  h.p2.resize(4, 4);
  for (int i = 0; i < 4; ++i) {
    h.p1[i] = one.density({z[i]});
    for (int j = 0; j < 4; ++j) h.p2(i, j) = two.density({z[i], z[j]});
  }
  // Frozen from the truncated Fock-space evaluation of the same cells.
  CHECK(kolmogorov_defect(h) == doctest::Approx(0.13136185681310622).epsilon(1e-8));
  CHECK(kolmogorov_defect(normalized(h)) <= 1e-12);
}
