#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>

#include "qtp/detector.hpp"
#include "qtp/field.hpp"
#include "qtp/numeric.hpp"

namespace qtp {

// ---------------------------------------------------------------------------
// Pointlike (Unruh-DeWitt) detectors, 3+1 massless field.

struct Trajectory {
  enum class Kind { Inertial, UniformAcceleration };
  Kind kind = Kind::Inertial;
  double velocity = 0.0;      ///< along x, |v| < 1
  double acceleration = 0.0;  ///< proper acceleration, > 0

  static Trajectory inertial(double v = 0.0);
  static Trajectory accelerated(double a);
  void validate() const;
  /// x0(τ) as (t, x, y, z).
  Eigen::Vector4d position(double tau) const;
  /// dx0/dτ.
  Eigen::Vector4d four_velocity(double tau) const;
};

/// Switching window e^{-s²/(2δt²)}, normalized to 1 at s = 0 so that
/// δt → ∞ recovers the unwindowed response.
struct UdwWindow {
  double dt = std::numeric_limits<double>::infinity();
  bool infinite() const { return std::isinf(dt); }
};

struct UdwOptions {
  int angular_nodes = 64;
  int panel_nodes = 16;
  double window_widths = 12.0;  ///< frequency half-range in units of 1/δt
};

/// Normalized response ∫ds w(s) e^{iεs} G[x0(τ - s/2), x0(τ + s/2)] with the
/// matrix element set to 1. Evaluated in frequency space: inertial
/// detectors use the Doppler-shifted spectrum of the bath, the accelerated
/// vacuum uses the rest-frame thermal spectrum at T = a/2π.
/// Throws NonStationaryConfiguration for a heated bath seen by an
/// accelerated detector.
double udw_response(const Trajectory& traj, const ThermalBath& bath, double energy, const UdwWindow& window = {},
                    const UdwOptions& opt = {});

/// G[x0(τ - s/2), x0(τ + s/2)] with regulator ε (s → s + iε). Vacuum works
/// for every trajectory; a heated bath only for a detector at rest.
cplx udw_pullback(const Trajectory& traj, const ThermalBath& bath, double tau, double s, double epsilon);

// ---------------------------------------------------------------------------
// Glauber regime: coherent pulses of a massless 3+1 field.

/// Gaussian pulse z(k) = (2π)³ z0 (2πΔ²)^{-3/2} exp(-(k - k0)²/(2Δ²)).
struct CoherentPulse {
  cplx z0 = 1.0;
  Eigen::Vector3d k0 = Eigen::Vector3d(0.0, 0.0, 1.0);
  double delta = 0.1;

  /// Throws on Δ <= 0; warns (SaddleValidity) when |k0| < 3Δ.
  void validate(Diagnostics* diag = nullptr) const;
};

enum class GlauberMode {
  Exact,         ///< kernel evaluated at every momentum pair
  SlowlyVarying  ///< kernel frozen at the on-shell pulse momentum k0
};

struct GlauberOptions {
  int points_per_axis = 16;
  double span = 6.0;  ///< box half-width in units of Δ
  GlauberMode mode = GlauberMode::Exact;
  int threads = 1;
  int hermite_nodes = 96;
};

/// Massless 3+1 field on a box of momenta around k0.
FieldSpec glauber_field(const CoherentPulse& pulse, const GlauberOptions& opt = {});

/// Coherent amplitudes in the mode-function normalization of field_legs.
Coherent pulse_state(const CoherentPulse& pulse, const FieldSpec& spec);

struct VacuumTerm {
  double value = 0.0;
  double cutoff = 0.0;  ///< momentum cutoff at which the radial integral settled
};

/// State-independent floor ∫d³k R̃(k)/((2π)³ 2ω), radial quadrature with
/// cutoff doubling. Throws QuadratureDivergence if it never settles.
VacuumTerm glauber_vacuum_term(const DetectorKernel& kernel);

struct GlauberTerms {
  double p0 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  /// |Σ| before taking 2 Re in the counter-rotating term.
  double p2_magnitude = 0.0;
  double p0_cutoff = 0.0;
  double total() const { return p0 + p1 + p2; }
};

/// Co-rotating (P1) and counter-rotating (P2) double momentum sums plus the
/// vacuum floor P0.
GlauberTerms glauber_terms(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x,
                           const GlauberOptions& opt = {});

/// Same terms after Gaussian sampling with widths (δt, δx); each pair picks up
/// exp(-δt² Δω²/4 - δx² |Δk|²/4) with Δ the difference (P1) or sum (P2).
GlauberTerms glauber_terms_averaged(const CoherentPulse& pulse, const DetectorKernel& kernel,
                                    const SpacetimePoint& x, const SamplingFunctions& s,
                                    const GlauberOptions& opt = {});

/// Saddle-point prediction |z0|² R̃(k0) exp(-Δ²(x - v t)²)/(2ω0) for P1.
double glauber_saddle_p1(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x);

/// Detection density from the normally ordered positive/negative frequency
/// correlator plus the vacuum floor. Gaussian-energy kernels are separated
/// with a Gauss-Hermite transform; other families fall back to the pair sum.
double rwa_density(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x,
                   const GlauberOptions& opt = {});

struct GlauberPoint {
  double state_part = 0.0;  ///< |φ⁺(x)|² of the coherent amplitude
  double vacuum_part = 0.0; ///< K²/(8π²) for the box's largest |k|
  double cutoff = 0.0;
};

/// Kernel replaced by a delta function: G[x, x] of the positive/negative
/// frequency correlator.
GlauberPoint glauber_point_limit(const CoherentPulse& pulse, const SpacetimePoint& x, const GlauberOptions& opt = {});

}  // namespace qtp
