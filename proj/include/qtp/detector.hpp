#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qtp/field.hpp"

namespace qtp {

enum class KernelFamily { GaussianEnergy, MaximalLocalization, TabulatedOnShell };

/// Scalar detector kernel, described by its Fourier transform
/// R̃(ξ) = ∫d^Dy R(y) e^{iξ·y}. Every family is clipped to zero outside the
/// closed forward light cone.
struct DetectorKernel {
  KernelFamily family = KernelFamily::MaximalLocalization;
  double e0 = 0.0;
  double tau = 1.0;
  double amplitude = 1.0;
  /// Tabulated family: strictly positive values at increasing spatial
  /// momenta (signed in 1+1, |ξ| in 3+1); log-linear interpolation.
  std::vector<double> table_p;
  std::vector<double> table_values;
  SpacetimePoint reference;

  static DetectorKernel gaussian_energy(double e0, double tau, double amplitude = 1.0);
  static DetectorKernel maximal(double amplitude = 1.0);
  static DetectorKernel tabulated(std::vector<double> p, std::vector<double> values);

  void validate() const;
  std::string describe() const;
};

/// True if ξ lies in the closed forward light cone (relative tolerance for null vectors).
bool in_forward_cone(const Eigen::Vector4d& xi, Dimension dim);

/// R̃(ξ) with ξ = (ξ⁰, ξ¹, ξ², ξ³); only ξ¹ is read in 1+1.
double kernel_fourier(const DetectorKernel& kernel, const Eigen::Vector4d& xi, Dimension dim);

/// R̃ at the on-shell point (ε_p, p) in 1+1.
double kernel_on_shell(const DetectorKernel& kernel, double p, double mass);

/// S(p,p') = R̃((p+p')/2, (ε_p+ε_p')/2) / sqrt(R̃(p, ε_p) R̃(p', ε_p')).
double localization_matrix(const DetectorKernel& kernel, double p, double pp, double mass);

struct PositivityReport {
  bool log_convex = false;
  double min_second_difference = 0.0;
  double min_eigenvalue = 0.0;
  double max_entry = 0.0;
  bool positive = false;  ///< eigenvalue test, the authoritative criterion
  std::string note;
};

PositivityReport is_positive_localization(const DetectorKernel& kernel, const MomentumGrid& grid, double mass);

struct SamplingFunctions {
  double dt = 1.0;
  double dx = 1.0;

  void validate() const;
};

/// Effective spacetime volume ∫f²: π² δt δx³ (3+1), π δt δx (1+1).
double spacetime_volume(const SamplingFunctions& s, Dimension dim = Dimension::D3p1);

/// Gaussian switching function f(y) = exp(-t²/(2δt²) - |y|²/(2δx²)).
double switching_function(const SamplingFunctions& s, const SpacetimePoint& y);

/// |f(x) f(x') - f²((x+x')/2) sqrt(f(x-x'))|.
double gaussian_identity_check(const SamplingFunctions& s, const SpacetimePoint& x, const SpacetimePoint& xp);

/// Warns when δt < 10 τ for a GaussianEnergy kernel.
void check_sampling_scales(const SamplingFunctions& s, const DetectorKernel& kernel, Diagnostics& diag);

}  // namespace qtp
