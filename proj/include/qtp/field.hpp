#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "qtp/numeric.hpp"

namespace qtp {

enum class Dimension { D1p1, D3p1 };

int spatial_dims(Dimension d);

struct Momentum {
  std::vector<double> components;
  double mass = 0.0;
};

/// On-shell energy sqrt(|p|^2 + m^2).
double dispersion(const Momentum& p);
double dispersion(double p, double mass);

struct SpacetimePoint {
  double t = 0.0;
  std::vector<double> x;
};

/// Throws std::invalid_argument if x does not match the spatial dimension.
void check_point(const SpacetimePoint& p, Dimension d);

/// Uniform trapezoid grid on [p_min, p_max].
struct MomentumGrid {
  double p_min = -1.0;
  double p_max = 1.0;
  int n_points = 16;

  void validate() const;
  double spacing() const;
  std::vector<double> nodes() const;
  std::vector<double> weights() const;
};

/// Discrete set of spatial momenta with quadrature weights. Modes are
/// stored as 3-vectors; in 1+1 only the first component is used.
struct ModeBasis {
  Dimension dim = Dimension::D1p1;
  std::vector<Eigen::Vector3d> k;
  std::vector<double> weight;

  std::size_t size() const { return k.size(); }

  static ModeBasis line(const MomentumGrid& grid);
  /// Tensor-product box; modes with |k| < k_min are dropped.
  static ModeBasis box(const MomentumGrid& gx, const MomentumGrid& gy, const MomentumGrid& gz,
                       double k_min = 0.0);
};

/// Free scalar field discretized on a mode basis. The iε regulator shifts
/// t -> t - iε in the Wightman function.
struct FieldSpec {
  Dimension dim = Dimension::D1p1;
  double mass = 1.0;
  ModeBasis modes;
  double epsilon = 0.0;

  void validate() const;
  std::size_t size() const { return modes.size(); }
  double energy(std::size_t j) const;
  Eigen::VectorXd energies() const;
  /// Four-vector (omega, k) of mode j in mostly-plus conventions.
  Eigen::Vector4d four_momentum(std::size_t j) const;
};

// State amplitudes are continuum values sampled at the mode nodes:
// psi(k), z(k), A(k1, k2) with |psi> = (1/sqrt 2) ∫∫ A a†a†|0>.
struct Vacuum {};
struct SingleParticle {
  Eigen::VectorXcd psi;
};
struct FixedN {
  int n = 0;
  /// n = 1: column of psi(k); n = 2: symmetric matrix A(k1, k2).
  Eigen::MatrixXcd amplitude;
};
struct Coherent {
  Eigen::VectorXcd z;
};
struct TwoParticle {
  Eigen::MatrixXcd a;
};

using FieldState = std::variant<Vacuum, SingleParticle, FixedN, Coherent, TwoParticle>;

/// Checks sizes, normalization (1e-10) and symmetry (1e-12).
void validate_state(const FieldState& state, const FieldSpec& spec);

/// Gaussian packet exp(-(k-k0)^2/(4 dp^2) - i k.x0), normalized on the grid.
SingleParticle gaussian_packet(const FieldSpec& spec, const Eigen::Vector3d& k0, double dp,
                               const Eigen::Vector3d& x0 = Eigen::Vector3d::Zero());

/// Symmetrized normalized product a(k1) b(k2) + a(k2) b(k1).
TwoParticle product_two_particle(const FieldSpec& spec, const SingleParticle& a,
                                 const SingleParticle& b);

/// Vacuum Wightman function <0|phi(x) phi(x')|0> with t - t' -> t - t' - iε.
/// 3+1 massless uses the closed form -1/(4π²((Δt - iε)² - r²)); note the
/// coincident value is +1/(4π² ε²). 1+1 massive uses a rapidity-space
/// mode integral.
cplx wightman_vacuum(const SpacetimePoint& x, const SpacetimePoint& xp, double mass, Dimension dim,
                     double epsilon);

struct ThermalBath {
  double temperature = 0.0;
};

/// Analytic continuation of the rest-frame thermal 3+1 massless pullback,
/// -T²/(4 sinh²(πTz)). Reduces to -1/(4π² z²) at T = 0.
cplx thermal_pullback_3p1(cplx z, double temperature);

/// Pullback G(s) = W[x0(τ - s/2), x0(τ + s/2)] along a detector at rest.
/// temperature = 0 is the vacuum.
cplx wightman_pullback_inertial(double s, double temperature, double mass, Dimension dim,
                                double epsilon);

}  // namespace qtp
