#include <cmath>
#include <random>

#include "doctest.h"
#include "qtp/detector.hpp"

using namespace qtp;

TEST_CASE("kernel support is the closed forward cone") {
  const auto g = DetectorKernel::gaussian_energy(1.0, 0.5, 2.0);
  const auto m = DetectorKernel::maximal();
  for (const auto& k : {g, m}) {
    CHECK(kernel_fourier(k, Eigen::Vector4d(0.5, 1.0, 0.0, 0.0), Dimension::D1p1) == 0.0);
    CHECK(kernel_fourier(k, Eigen::Vector4d(-1.0, 0.0, 0.0, 0.0), Dimension::D1p1) == 0.0);
    CHECK(kernel_fourier(k, Eigen::Vector4d(-1.0, 0.0, 0.0, 0.0), Dimension::D3p1) == 0.0);
    CHECK(kernel_fourier(k, Eigen::Vector4d(1.0, 0.6, 0.6, 0.6), Dimension::D3p1) == 0.0);
  }
  CHECK(in_forward_cone(Eigen::Vector4d(1.0, 1.0, 0.0, 0.0), Dimension::D1p1));
  CHECK_FALSE(in_forward_cone(Eigen::Vector4d(-1.0, 0.5, 0.0, 0.0), Dimension::D1p1));
}

TEST_CASE("gaussian-energy kernel on shell") {
  const auto k = DetectorKernel::gaussian_energy(1.5, 0.7, 2.0);
  for (double p : {-2.0, 0.0, 0.4, 3.0}) {
    const double e = std::sqrt(p * p + 1.0);
    const double expect = 2.0 * std::exp(-(e - 1.5) * (e - 1.5) * 0.49);
    CHECK(kernel_on_shell(k, p, 1.0) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(kernel_fourier(k, Eigen::Vector4d(e, p, 0, 0), Dimension::D1p1) == doctest::Approx(expect).epsilon(1e-14));
  }
  CHECK_THROWS_AS(DetectorKernel::gaussian_energy(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(DetectorKernel::tabulated({0.0, 1.0}, {1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("localization matrix") {
  const auto g = DetectorKernel::gaussian_energy(2.0, 0.8);
  for (double p : {0.3, 1.0, 4.0}) CHECK(localization_matrix(g, p, p, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (double p : {0.3, 1.0}) {
    for (double q : {-2.0, 0.5, 6.0}) CHECK(localization_matrix(DetectorKernel::maximal(), p, q, 1.0) == 1.0);
  }
  // Two arithmetic paths for (p, p') = (1, 2), m = 1: direct quotient and the log-space exponent.
  const double e1 = std::sqrt(2.0), e2 = std::sqrt(5.0), eb = 0.5 * (e1 + e2), pb = 1.5;
  REQUIRE(eb > std::abs(pb));
  auto r = [](double e) { return std::exp(-(e - 2.0) * (e - 2.0) * 0.64); };
  const double direct = r(eb) / std::sqrt(r(e1) * r(e2));
  const double logspace =
      std::exp(-0.64 * ((eb - 2.0) * (eb - 2.0) - 0.5 * (e1 - 2.0) * (e1 - 2.0) - 0.5 * (e2 - 2.0) * (e2 - 2.0)));
  CHECK(std::abs(localization_matrix(g, 1.0, 2.0, 1.0) - direct) < 1e-12);
  CHECK(std::abs(direct - logspace) < 1e-12);
}

TEST_CASE("positivity of the localization operator") {
  const MomentumGrid grid{1.0, 9.0, 64};
  const auto maximal = is_positive_localization(DetectorKernel::maximal(), grid, 1.0);
  CHECK(maximal.positive);
  CHECK(maximal.log_convex);
  CHECK(maximal.max_entry == doctest::Approx(1.0));

  // A log-concave tabulated profile breaks the bound and the eigenvalue test.
  std::vector<double> p, v;
  for (int i = 0; i < 20; ++i) {
    p.push_back(0.1 + 0.5 * i);
    v.push_back(std::exp(-0.5 * (p.back() - 4.0) * (p.back() - 4.0)));
  }
  const auto concave = is_positive_localization(DetectorKernel::tabulated(p, v), grid, 1.0);
  CHECK_FALSE(concave.log_convex);
  CHECK_FALSE(concave.positive);
  CHECK(concave.min_eigenvalue < 0.0);
  CHECK(concave.max_entry > 1.0);

  // Gaussian in energy is log-concave in ξ⁰: entries are >= 1 and grow with τ.
  const auto narrow = is_positive_localization(DetectorKernel::gaussian_energy(2.0, 0.01), grid, 1.0);
  const auto wide = is_positive_localization(DetectorKernel::gaussian_energy(2.0, 0.1), grid, 1.0);
  CHECK(narrow.max_entry >= 1.0);
  CHECK(narrow.max_entry < 1.01);
  CHECK(wide.max_entry > narrow.max_entry);
  CHECK_FALSE(narrow.log_convex);
}

TEST_CASE("sampling volume and the gaussian identity") {
  CHECK(spacetime_volume({1.0, 1.0}) == doctest::Approx(M_PI * M_PI));
  CHECK(spacetime_volume({2.0, 1.0}) == doctest::Approx(2.0 * M_PI * M_PI));
  CHECK(spacetime_volume({1.0, 2.0}) == doctest::Approx(8.0 * M_PI * M_PI));
  CHECK(spacetime_volume({1.0, 1.0}, Dimension::D1p1) == doctest::Approx(M_PI));
  CHECK_THROWS_AS(SamplingFunctions({0.0, 1.0}).validate(), std::invalid_argument);

  const SamplingFunctions s{1.3, 0.7};
  const SpacetimePoint x{0.2, {0.1, -0.3, 0.5}};
  CHECK(gaussian_identity_check(s, x, x) == 0.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const SpacetimePoint a{u(rng) * s.dt, {u(rng) * s.dx, u(rng) * s.dx, u(rng) * s.dx}};
    const SpacetimePoint b{u(rng) * s.dt, {u(rng) * s.dx, u(rng) * s.dx, u(rng) * s.dx}};
    CHECK(gaussian_identity_check(s, a, b) <= 1e-12);
  }
  const SpacetimePoint far{10.0 * s.dt, {10.0 * s.dx, 0.0, 0.0}};
  CHECK(gaussian_identity_check(s, x, far) <= 1e-12);
}

TEST_CASE("sampling scale warning") {
  Diagnostics d;
  check_sampling_scales({1.0, 1.0}, DetectorKernel::gaussian_energy(1.0, 0.5), d);
  CHECK(d.warnings.size() == 1);
  Diagnostics ok;
  check_sampling_scales({10.0, 1.0}, DetectorKernel::gaussian_energy(1.0, 0.5), ok);
  CHECK(ok.warnings.empty());
  Diagnostics strict;
  strict.strict = true;
  CHECK_THROWS(check_sampling_scales({1.0, 1.0}, DetectorKernel::gaussian_energy(1.0, 0.5), strict));
}
