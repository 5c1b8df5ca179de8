#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "qtp/correlator.hpp"
#include "qtp/errors.hpp"
#include "qtp/limits.hpp"

using namespace qtp;

TEST_CASE("inertial vacuum detector stays unexcited") {
  const auto rest = Trajectory::inertial();
  CHECK(std::abs(udw_response(rest, {0.0}, 1.0)) < 1e-6);
  CHECK(udw_response(rest, {0.0}, -1.0) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
  // Lorentz invariance of the vacuum.
  CHECK(udw_response(Trajectory::inertial(0.6), {0.0}, -1.0) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-10));
  CHECK(std::abs(udw_response(Trajectory::inertial(0.6), {0.0}, 1.0)) < 1e-6);
}

TEST_CASE("thermal response against the shifted-contour quadrature") {
  const auto rest = Trajectory::inertial();
  for (double temperature : {0.5, 1.0}) {
    for (double e : {-2.0, -0.5, 0.5, 1.0, 2.0}) {
      const double c = 0.5 / temperature;
      const double lib = udw_response(rest, {temperature}, e);
      CHECK(lib == doctest::Approx(oracle::static_response_shifted(e, temperature, INFINITY, c, 60.0, 24001)).epsilon(1e-8));
      CHECK(lib == doctest::Approx(oracle::planck_response(e, temperature)).epsilon(1e-10));
      const double dt = 20.0 / std::abs(e);
      const double win = udw_response(rest, {temperature}, e, {dt});
      CHECK(win == doctest::Approx(oracle::static_response_shifted(e, temperature, dt, c, 60.0 + 8.0 * dt, 48001))
                       .epsilon(1e-8));
    }
  }
  // Windowed vacuum: the c = 1 line avoids the regulator pole.
  for (double e : {-1.0, 1.0}) {
    const double lib = udw_response(rest, {0.0}, e, {10.0});
    const double ref = oracle::static_response_shifted(e, 0.0, 10.0, 1.0, 120.0, 96001);
    CHECK(std::abs(lib - ref) < 1e-10);
  }
}

TEST_CASE("detailed balance and window convergence") {
  const auto rest = Trajectory::inertial();
  for (double temperature : {0.5, 1.0, 2.0}) {
    for (double f : {0.5, 1.0, 2.0}) {
      const double e = f * temperature;
      const double ratio = udw_response(rest, {temperature}, e) / udw_response(rest, {temperature}, -e);
      CHECK(std::abs(ratio - std::exp(-e / temperature)) < 1e-3 * std::exp(-e / temperature));
      const double inf = udw_response(rest, {temperature}, e);
      const double fin = udw_response(rest, {temperature}, e, {20.0 / e});
      CHECK(std::abs(fin - inf) < 1e-2 * inf);
    }
  }
}

TEST_CASE("accelerated vacuum detector is thermal at a/2π") {
  const double a = 2.0, temperature = a / (2.0 * M_PI);
  const auto acc = Trajectory::accelerated(a);
  for (double e : {-1.0, 0.3, 1.0}) {
    CHECK(udw_response(acc, {0.0}, e) == doctest::Approx(udw_response(Trajectory::inertial(), {temperature}, e)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(udw_response(acc, {0.5}, 1.0), NonStationaryConfiguration);
  CHECK_THROWS_AS(Trajectory::inertial(1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(Trajectory::accelerated(0.0), std::invalid_argument);

  // The pulled-back vacuum two-point function along the hyperbola is thermal.
  for (double s : {-1.5, 0.4, 2.0}) {
    const cplx g = udw_pullback(acc, {0.0}, 0.7, s, 1e-6);
    const cplx ref = thermal_pullback_3p1(cplx(s, 1e-6), temperature);
    CHECK(std::abs(g - ref) < 2e-5 * std::abs(ref));
    // The regulator sits on coordinate time: the interval is s² + 2iγεs - ε².
    const double eps = 1e-3, gamma = 1.25;
    const cplx interval(s * s - eps * eps, 2.0 * gamma * eps * s);
    const cplx moving = udw_pullback(Trajectory::inertial(0.6), {0.0}, 0.0, s, eps);
    CHECK(std::abs(moving + 1.0 / (4.0 * M_PI * M_PI * interval)) < 1e-10 * std::abs(moving));
  }
  CHECK_THROWS_AS(udw_pullback(Trajectory::inertial(0.3), {1.0}, 0.0, 1.0, 1e-3), std::invalid_argument);
}

namespace {

// Direct contraction of the coherent amplitude against the kernel over every
// pair of creation/annihilation legs: the state-dependent part P1 + P2.
double coherent_state_part(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x,
                           const GlauberOptions& opt) {
  const FieldSpec spec = glauber_field(pulse, opt);
  const Coherent st = pulse_state(pulse, spec);
  const auto m = spec.size();
  std::vector<cplx> pos(m);
  std::vector<Eigen::Vector4d> q(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::Vector3d& k = spec.modes.k[j];
    const double w = k.norm();
    const double phase = k[0] * x.x[0] + k[1] * x.x[1] + k[2] * x.x[2] - w * x.t;
    pos[j] = spec.modes.weight[j] * st.z[static_cast<Eigen::Index>(j)] *
             std::polar(1.0 / std::sqrt(std::pow(2.0 * M_PI, 3) * 2.0 * w), phase);
    q[j] = Eigen::Vector4d(w, k[0], k[1], k[2]);
  }
  cplx total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      // a†_i a_j with ξ = (q_i + q_j)/2, and a_i a_j with ξ = (q_i - q_j)/2 (plus its conjugate).
      total += std::conj(pos[i]) * pos[j] * kernel_fourier(kernel, 0.5 * (q[i] + q[j]), Dimension::D3p1);
      const double r = kernel_fourier(kernel, 0.5 * (q[i] - q[j]), Dimension::D3p1);
      if (r != 0.0) total += 2.0 * std::real(pos[i] * pos[j]) * r;
    }
  }
  return total.real();
}

}  // namespace

TEST_CASE("glauber terms against a direct coherent contraction") {
  const CoherentPulse pulse;
  const auto kernel = DetectorKernel::gaussian_energy(1.0, 1.0);
  const SpacetimePoint x{2.0, {0.3, -0.2, 2.1}};
  const GlauberTerms g = glauber_terms(pulse, kernel, x);
  const double ref = coherent_state_part(pulse, kernel, x, {});
  CHECK(std::abs(g.p1 + g.p2 - ref) < 1e-10 * ref);
}

TEST_CASE("glauber decomposition identities") {
  const auto kernel = DetectorKernel::gaussian_energy(1.0, 1.0);
  GlauberOptions sv;
  sv.mode = GlauberMode::SlowlyVarying;
  const SpacetimePoint x{3.0, {0.0, 0.1, 3.0}};

  CoherentPulse empty;
  empty.z0 = 0.0;
  const GlauberTerms e = glauber_terms(empty, kernel, x, sv);
  CHECK(e.p1 == 0.0);
  CHECK(e.p2 == 0.0);
  CHECK(e.total() == e.p0);
  CHECK(e.p0 == doctest::Approx(glauber_vacuum_term(kernel).value));

  CoherentPulse pulse;
  const GlauberTerms g = glauber_terms(pulse, kernel, x, sv);
  const double rwa = rwa_density(pulse, kernel, x, sv);
  CHECK(std::abs(rwa - (g.p0 + g.p1)) < 1e-8);
  CHECK(std::abs(g.total() - rwa - g.p2) < 1e-10);

  CoherentPulse doubled = pulse;
  doubled.z0 = 2.0 * pulse.z0;
  const GlauberTerms d = glauber_terms(doubled, kernel, x, sv);
  CHECK(d.p1 == doctest::Approx(4.0 * g.p1).epsilon(1e-12));
  CHECK(d.p2 == doctest::Approx(4.0 * g.p2).epsilon(1e-12));
  CHECK(rwa_density(doubled, kernel, x, sv) - d.p0 == doctest::Approx(4.0 * (rwa - g.p0)).epsilon(1e-12));
}

TEST_CASE("saddle point on the classical ray") {
  const CoherentPulse pulse;
  const auto kernel = DetectorKernel::gaussian_energy(1.0, 1.0);
  GlauberOptions sv;
  sv.mode = GlauberMode::SlowlyVarying;
  for (double t : {0.0, 5.0, 10.0}) {
    const SpacetimePoint x{t, {0.0, 0.0, t}};
    const double saddle = glauber_saddle_p1(pulse, kernel, x);
    CHECK(std::abs(glauber_terms(pulse, kernel, x, sv).p1 - saddle) < 0.05 * saddle);
  }
  // Off the ray the saddle falls as a gaussian in the transverse offset.
  const double on = glauber_saddle_p1(pulse, kernel, {0.0, {0.0, 0.0, 0.0}});
  const double off = glauber_saddle_p1(pulse, kernel, {0.0, {10.0, 0.0, 0.0}});
  CHECK(off == doctest::Approx(on * std::exp(-1.0)).epsilon(1e-12));

  Diagnostics d;
  CoherentPulse wide;
  wide.delta = 0.5;
  wide.validate(&d);
  CHECK(d.warnings.size() == 1);
  CoherentPulse bad;
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("counter-rotating term is suppressed by sampling") {
  const CoherentPulse pulse;
  const auto kernel = DetectorKernel::gaussian_energy(1.0, 1.0);
  GlauberOptions sv;
  sv.mode = GlauberMode::SlowlyVarying;
  double previous = INFINITY;
  for (double dt : {1.0, 2.0, 3.0}) {
    const GlauberTerms g = glauber_terms_averaged(pulse, kernel, {0.0, {0.0, 0.0, 0.0}}, {dt, 0.5}, sv);
    const double ratio = g.p2_magnitude / g.p1;
    CHECK(ratio < previous);
    previous = ratio;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("rotating-wave error grows in the deep infrared") {
  const auto kernel = DetectorKernel::gaussian_energy(1.0, 1.0);
  const SamplingFunctions s{3.0, 0.5};
  // Error relative to the state-dependent part; |k0| = 1 throughout.
  auto rwa_error = [&](double delta) {
    CoherentPulse p;
    p.delta = delta;
    const GlauberTerms g = glauber_terms_averaged(p, kernel, {0.0, {0.0, 0.0, 0.0}}, s);
    return std::abs(g.p2) / g.p1;
  };
  CHECK(rwa_error(1.0) > 10.0 * rwa_error(0.1));
}

TEST_CASE("point-detector limit") {
  const CoherentPulse pulse;
  const SpacetimePoint x{0.0, {0.0, 0.0, 0.0}};
  const auto narrow = DetectorKernel::gaussian_energy(1.0, 0.01);
  const GlauberPoint pt = glauber_point_limit(pulse, x);
  const double state = rwa_density(pulse, narrow, x) - glauber_vacuum_term(narrow).value;
  CHECK(std::abs(state - pt.state_part) < 1e-2 * pt.state_part);
  CHECK(pt.vacuum_part == doctest::Approx(pt.cutoff * pt.cutoff / (8.0 * M_PI * M_PI)));

  CoherentPulse empty;
  empty.z0 = 0.0;
  const GlauberPoint vac = glauber_point_limit(empty, x);
  CHECK(vac.state_part == 0.0);
  CHECK(vac.cutoff > 0.0);
  CHECK_THROWS_AS(glauber_vacuum_term(DetectorKernel::maximal()), QuadratureDivergence);
}
