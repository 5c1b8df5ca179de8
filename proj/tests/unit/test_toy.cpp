#include <cmath>
#include <random>

#include "doctest.h"
#include "qtp/errors.hpp"
#include "qtp/toy.hpp"

using namespace qtp;

namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

double min_eigenvalue(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Excitation probability of level λ after RK4 evolution under
// H0 + exp(-(t - t0)²/(2δt²)) H_I, divided by υ = sqrt(π) δt. The initial
// vector is the state at t = 0, freely evolved back to the start of the run.
double switched_excitation(const ToyModel& toy, int lambda, double t0, double dt) {
  const double lo = t0 - 9.0 * dt, hi = t0 + 9.0 * dt;
  const int steps = 4000;
  const double h = (hi - lo) / steps;
  auto rhs = [&](double t, const Vec& psi) -> Vec {
    const double f = std::exp(-0.5 * (t - t0) * (t - t0) / (dt * dt));
    return cplx(0.0, -1.0) * (toy.h0 * psi + f * (toy.hi * psi));
  };
  Vec psi = toy.initial;
  for (int a = 0; a < psi.size(); ++a) psi[a] *= std::polar(1.0, -toy.h0(a, a).real() * lo);
  for (int i = 0; i < steps; ++i) {
    const double t = lo + i * h;
    const Vec k1 = rhs(t, psi);
    const Vec k2 = rhs(t + 0.5 * h, psi + 0.5 * h * k1);
    const Vec k3 = rhs(t + 0.5 * h, psi + 0.5 * h * k2);
    const Vec k4 = rhs(t + h, psi + h * k3);
    psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return psi.dot(toy.pi[lambda] * psi).real() / (std::sqrt(M_PI) * dt);
}

}  // namespace

TEST_CASE("standard toy structure") {
  const ToyModel toy = ToyModel::standard();
  CHECK(toy.dim() == 9 * 3);
  const ToyInvariants inv = check_toy(toy);
  CHECK(inv.projector_sum < 1e-12);
  CHECK(inv.projector_idempotent < 1e-12);
  CHECK(inv.pi_completeness < 1e-12);
  CHECK(inv.hermiticity < 1e-12);
  CHECK(inv.commutator_h0_p < 1e-12);
  CHECK(std::abs(toy.initial.norm() - 1.0) < 1e-14);
  const Mat u = unitary_evolution(toy.h, 0.7);
  CHECK((u.adjoint() * u - Mat::Identity(toy.dim(), toy.dim())).norm() < 1e-12);

  ToyConfig bad;
  bad.max_occupation = 0;
  CHECK_THROWS_AS(ToyModel::build(bad), std::invalid_argument);
}

TEST_CASE("restricted propagator") {
  const ToyModel toy = ToyModel::standard();
  const int n = toy.dim();
  CHECK((restricted_propagator(toy, 0.0, 17) - toy.q).norm() < 1e-12);
  ToyModel open = toy;
  open.q = Mat::Identity(n, n);
  CHECK((restricted_propagator(open, 1.3, 64) - unitary_evolution(toy.h, 1.3)).norm() < 1e-12);
  CHECK((restricted_propagator(toy, 0.25, 2048) - restricted_propagator(toy, 0.25, 1024)).norm() < 1e-6);
  CHECK_THROWS_AS(restricted_propagator(toy, 1.0, 0), std::invalid_argument);
}

TEST_CASE("history operators") {
  const ToyModel toy = ToyModel::standard();
  const HistoryOptions lo{HistoryMode::LeadingOrder};
  const int n = toy.dim();

  CHECK(history_operator(toy.with_coupling(0.0), 1, 0.8, lo).norm() == 0.0);

  // Covariance under the free evolution.
  const double t = 0.6, s = 1.1;
  const Mat shifted = unitary_evolution(toy.h0, -s) * history_operator(toy, 2, t, lo) * unitary_evolution(toy.h0, s);
  CHECK((history_operator(toy, 2, t + s, lo) - shifted).norm() < 1e-12);

  // Exact minus leading order on the undetected sector is second order in H_I.
  auto gap = [&](const ToyModel& m) { return ((history_operator(m, 1, 1.0) - history_operator(m, 1, 1.0, lo)) * m.q).norm(); };
  CHECK(gap(toy) / gap(toy.with_coupling(0.025)) >= 1.9);

  ToyModel tilted = toy;
  Mat r = Mat::Identity(n, n);
  r(0, 1) = r(1, 0) = 0.5;
  tilted.p = r * toy.p * r.inverse();
  CHECK_THROWS_AS(history_operator(tilted, 1, 0.5, lo), CommutatorViolation);
}

TEST_CASE("perturbative density against the switched evolution") {
  const ToyModel toy = ToyModel::standard();
  for (int lambda : {1, 2}) {
    const double w = toy_perturbative_density(toy, lambda, 3.0, 1.0);
    const double dyson = toy_dyson_density(toy, lambda, 3.0, 1.0);
    CHECK(std::abs(w - dyson) < 1e-8 * dyson);
    // Richardson in g removes the fourth-order term of the exact evolution.
    const double g = 0.02;
    const double a = switched_excitation(toy.with_coupling(g), lambda, 3.0, 1.0) / (g * g);
    const double b = switched_excitation(toy.with_coupling(0.5 * g), lambda, 3.0, 1.0) / (0.25 * g * g);
    const double second_order = (4.0 * b - a) / 3.0;
    CHECK(std::abs(dyson / (0.05 * 0.05) - second_order) < 1e-5 * second_order);
  }
}

TEST_CASE("detection POVM") {
  const ToyModel toy = ToyModel::standard();
  const int n = toy.dim();
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss;
  for (int lambda : {1, 2}) {
    for (double t : {0.0, 2.0, 5.0}) {
      const Mat pi = povm_density(toy, lambda, t, 1.0);
      CHECK((pi - pi.adjoint()).norm() < 1e-14);
      CHECK(min_eigenvalue(pi) >= -1e-10);
      for (int draw = 0; draw < 50; ++draw) {
        Mat a(n, n);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) a(i, j) = cplx(gauss(rng), gauss(rng));
        }
        const Mat rho = a * a.adjoint() / (a * a.adjoint()).trace();
        CHECK((rho * pi).trace().real() >= -1e-14);
      }
    }
  }
  PovmOptions plo;
  plo.history.mode = HistoryMode::LeadingOrder;
  const Mat pil = povm_density(toy, 1, 3.0, 1.0, plo);
  const double w = toy_perturbative_density(toy, 1, 3.0, 1.0);
  CHECK(std::abs(toy.initial.dot(pil * toy.initial).real() - w) < 1e-6 * w);
}

TEST_CASE("no-detection operator") {
  const ToyModel toy = ToyModel::standard();
  const int n = toy.dim();
  std::vector<double> grid;
  for (int i = 0; i <= 24; ++i) grid.push_back(-6.0 + 0.5 * i);

  const NoDetectionResult free = no_detection_operator(toy.with_coupling(0.0), {1, 2}, grid, 1.0);
  CHECK((free.operator_n - Mat::Identity(n, n)).norm() < 1e-14);

  const NoDetectionResult nd = no_detection_operator(toy, {1, 2}, grid, 1.0);
  CHECK(nd.completeness_residual < 1e-8);
  CHECK(nd.min_eigenvalue >= -1e-6);
  CHECK(nd.max_eigenvalue <= 1.0 + 1e-6);
  const NoDetectionResult half = no_detection_operator(toy.with_coupling(0.025), {1, 2}, grid, 1.0);
  CHECK(std::abs(nd.detection_mass / half.detection_mass / 4.0 - 1.0) < 0.05);
}

TEST_CASE("decoherence functional") {
  const ToyModel toy = ToyModel::standard();
  const DecoherenceResult d = decoherence_function(toy, 0.0, 2.0, 4.0, 1);
  CHECK(std::abs(d.prob_13 - d.prob_12 - d.prob_23 - d.d) < 1e-12);
  CHECK(d.prob_13 > 0.0);

  // Quadratic once the fourth-order correction is small.
  const DecoherenceResult w1 = decoherence_function(toy.with_coupling(0.0125), 0.0, 2.0, 4.0, 1);
  const DecoherenceResult w2 = decoherence_function(toy.with_coupling(0.00625), 0.0, 2.0, 4.0, 1);
  CHECK(std::abs(w1.d / w2.d / 4.0 - 1.0) < 0.05);
  const DecoherenceResult zero = decoherence_function(toy.with_coupling(0.0), 0.0, 2.0, 4.0, 1);
  CHECK(zero.d == 0.0);
  CHECK_THROWS_AS(decoherence_function(toy, 2.0, 1.0, 4.0, 1), std::invalid_argument);

  const double sigma = measure_coarse_graining_scale(toy, 1, 0.0, 50.0);
  CHECK(sigma > 0.0);
  CHECK(std::isfinite(sigma));
}
