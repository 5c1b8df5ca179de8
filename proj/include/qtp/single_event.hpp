#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qtp/correlator.hpp"
#include "qtp/detector.hpp"

namespace qtp {

enum class Normalization { Raw, Conditioned };

/// Sampled density on a rectilinear grid; values are row-major with the
/// last axis fastest.
struct ProbabilityGrid {
  std::vector<std::string> axis_names;
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  Normalization normalization = Normalization::Raw;
  double p_det = 0.0;
  std::size_t clamped_points = 0;
  double clamp_mass = 0.0;

  std::size_t size() const { return values.size(); }
  /// Product trapezoid weights.
  std::vector<double> weights() const;
  double integral() const;
  void validate() const;
};

/// Kernel matrix K[a,d] = R̃((s_a k_a - s_d k_d)/2) in leg space, s = +1 for
/// annihilation legs and -1 for creation legs.
Eigen::MatrixXd kernel_leg_matrix(const FieldSpec& spec, const DetectorKernel& kernel);

/// c_x[a,d] = v_a(x) v_d(x) K[a,d].
Eigen::MatrixXcd detector_leg_matrix(const FieldSpec& spec, const Eigen::MatrixXd& kernel_legs,
                                     const SpacetimePoint& x);

/// Single-detector density P(x) = ∫d^Dy R(y) <C(x+y/2) C(x-y/2)> for a
/// fixed state and kernel; precomputes the x-independent part.
class DetectionEvaluator {
 public:
  DetectionEvaluator(const FieldState& state, const FieldSpec& spec, const DetectorKernel& kernel);

  /// Complex value before the reality check.
  cplx raw(const SpacetimePoint& x) const;
  /// Real density; throws NegativeDensity below -1e-8.
  double density(const SpacetimePoint& x) const;
  /// State-independent part (the vacuum floor).
  double vacuum_floor() const { return floor_; }

  const FieldSpec& spec() const { return spec_; }

 private:
  FieldSpec spec_;
  Eigen::MatrixXcd weighted_;
  double floor_ = 0.0;
};

double detection_density(const FieldState& state, const FieldSpec& spec, const DetectorKernel& kernel,
                         const SpacetimePoint& x, Coupling coupling = Coupling::Linear);

/// Density on a (t, x) grid in 1+1 (or t only when x_grid has one point).
ProbabilityGrid detection_density_grid(const FieldState& state, const FieldSpec& spec, const DetectorKernel& kernel,
                                       const std::vector<double>& t_grid, const std::vector<double>& x_grid,
                                       int threads = 1);

/// Smooths each axis with the normalized Gaussian σ = f²/υ (variance δ²/2).
/// δ = 0 on an axis leaves it untouched; 0 < δ < 4 × spacing throws GridTooCoarse.
/// Axis widths: "t" uses s.dt, every other axis s.dx.
ProbabilityGrid convolve_sampling(const ProbabilityGrid& p, const SamplingFunctions& s);

struct ToaOptions {
  int threads = 1;
  bool check_coverage = true;
  double coverage_widths = 6.0;
};

/// Moments of a single-particle packet used for grid checks.
struct PacketSummary {
  double mean_p = 0.0;
  double sigma_p = 0.0;
  double mean_x = 0.0;
  double arrival_time = 0.0;
  double arrival_spread = 0.0;
};

PacketSummary summarize_packet(const SingleParticle& state, const FieldSpec& spec, double distance);

/// Time-of-arrival density P(t, L) = (1/2π) Σ w w' ρ(p,p') sqrt(|v_p v_p'|) S(p,p')
/// e^{i(p-p')L - i(ε_p - ε_p')t} on t_grid (Raw).
ProbabilityGrid toa_density(const SingleParticle& state, const FieldSpec& spec, const DetectorKernel& kernel,
                            double distance, const std::vector<double>& t_grid, Diagnostics& diag,
                            const ToaOptions& opt = {});

/// Mixed-state variant; rho is hermitian with unit trace under the grid weights.
ProbabilityGrid toa_density(const Eigen::MatrixXcd& rho, const FieldSpec& spec, const DetectorKernel& kernel,
                            double distance, const std::vector<double>& t_grid, Diagnostics& diag,
                            const ToaOptions& opt = {});

/// Divides by P_det after clamping small negative excursions.
ProbabilityGrid normalize_conditioned(const ProbabilityGrid& p, Diagnostics& diag);

/// Mean and variance of a 1-d density under trapezoid weights.
std::pair<double, double> grid_mean_variance(const ProbabilityGrid& p);

}  // namespace qtp
