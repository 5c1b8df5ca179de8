#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qtp/numeric.hpp"

namespace qtp {

/// Parameters of a finite toy: truncated field modes coupled to a few-level detector.
struct ToyConfig {
  std::vector<double> mode_frequencies{0.8, 1.3};
  int max_occupation = 2;
  std::vector<double> detector_energies{0.0, 1.0, 1.6};
  double coupling = 0.05;
  /// Initial field state in the occupation basis; empty selects the default.
  Eigen::VectorXcd field_state;
};

/// Dense toy model on (truncated Fock) ⊗ (detector). Index = field * L + level.
/// H_I = g X ⊗ μ with X = Σ (a + a†)/sqrt(2ω) and μ = Σ_λ≥1 (|λ><0| + h.c.).
/// P projects on excited detector levels; Π(λ) = 1 ⊗ |λ><λ|.
struct ToyModel {
  int n_modes = 0;
  int max_occupation = 0;
  int detector_levels = 0;
  double coupling = 0.0;
  std::vector<double> omegas;
  std::vector<double> energies;

  Eigen::MatrixXcd field_h;  ///< free field Hamiltonian (diagonal)
  Eigen::MatrixXcd field_x;  ///< field quadrature X
  Eigen::MatrixXcd mu;       ///< detector coupling operator
  Eigen::MatrixXcd h0, hi, h, p, q;
  std::vector<Eigen::MatrixXcd> pi;  ///< pi[λ], λ = 0 .. L-1 (pi[0] is the ground projector)
  Eigen::VectorXcd field_state;
  Eigen::VectorXcd initial;  ///< field_state ⊗ |0>

  int field_dim() const { return static_cast<int>(field_h.rows()); }
  int dim() const { return static_cast<int>(h.rows()); }

  static ToyModel build(const ToyConfig& config);
  static ToyModel standard();
  ToyModel with_coupling(double g) const;
};

struct ToyInvariants {
  double projector_sum = 0.0;      ///< ‖P + Q - 1‖
  double projector_idempotent = 0.0;
  double pi_completeness = 0.0;    ///< ‖Σ_λ≥1 Π(λ) - P‖
  double hermiticity = 0.0;        ///< max of H0, HI anti-hermitian parts
  double commutator_h0_p = 0.0;
};

ToyInvariants check_toy(const ToyModel& toy);

/// e^{-iHt} for a hermitian H via its eigen-decomposition.
Eigen::MatrixXcd unitary_evolution(const Eigen::MatrixXcd& h, double t);

/// (Q e^{-iHt/N} Q)^N.
Eigen::MatrixXcd restricted_propagator(const ToyModel& toy, double t, long long n);

enum class HistoryMode { Exact, LeadingOrder };

struct HistoryOptions {
  HistoryMode mode = HistoryMode::Exact;
  long long propagator_steps = 1LL << 16;
};

/// Exact: e^{iHt} sqrt(Π(λ)) H S_t. LeadingOrder: e^{iH0 t} sqrt(Π(λ)) H_I e^{-iH0 t}.
Eigen::MatrixXcd history_operator(const ToyModel& toy, int lambda, double t, const HistoryOptions& opt = {});

struct PovmOptions {
  HistoryOptions history;
  int nodes = 64;
  double half_width = 8.0;  ///< quadrature window in units of δt
};

/// Smeared amplitude operator A(λ,t) = ∫ds sqrt(f(s-t)) C(λ,s) with
/// f(s) = exp(-s²/δt²)/(sqrt(π) δt); Π(λ,t) = A†A.
Eigen::MatrixXcd povm_amplitude(const ToyModel& toy, int lambda, double t, double dt, const PovmOptions& opt = {});

/// Π(λ,t), hermitian PSD. Throws NegativeEigenvalue if min eig < -1e-10.
Eigen::MatrixXcd povm_density(const ToyModel& toy, int lambda, double t, double dt, const PovmOptions& opt = {});

struct NoDetectionResult {
  Eigen::MatrixXcd operator_n;
  double completeness_residual = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double detection_mass = 0.0;  ///< Σ w Tr[ρ0 Π]
};

/// N = 1 - Σ_λ Σ_t w_t Π(λ,t) with trapezoid weights on t_grid.
NoDetectionResult no_detection_operator(const ToyModel& toy, const std::vector<int>& lambdas,
                                        const std::vector<double>& t_grid, double dt,
                                        const PovmOptions& opt = {});

struct DecoherenceResult {
  double d = 0.0;
  double prob_13 = 0.0;
  double prob_12 = 0.0;
  double prob_23 = 0.0;
};

/// Prob(λ,[a,b]) = ∫∫ Tr[C(s) ρ0 C†(s')] and the interference term
/// D = 2 Re ∫_{t1}^{t2}∫_{t2}^{t3}. Gauss-Legendre with `nodes` per interval.
DecoherenceResult decoherence_function(const ToyModel& toy, double t1, double t2, double t3, int lambda,
                                       const HistoryOptions& opt = {}, int nodes = 48);

/// First u > 0 where |Tr[C(s0+u) ρ0 C†(s0)]| drops below e^{-1} of its u = 0
/// value; returns +inf if it never does within u_max.
double measure_coarse_graining_scale(const ToyModel& toy, int lambda, double s0, double u_max,
                                     const HistoryOptions& opt = {}, int samples = 2000);

/// Leading-order detection density W(t0) on the toy, built from field-only
/// correlators G(t1,t2) = <ψ|X(t1)X(t2)|ψ>, the detector kernel
/// e^{iE_λ y}, and Gaussian sampling of width δt (Gauss-Hermite in both
/// the relative and centre variables).
double toy_perturbative_density(const ToyModel& toy, int lambda, double t0, double dt, int nodes = 96);

/// Second-order S-matrix evaluation <S1† (1⊗Π) S1>/υ on the full space,
/// with switching exp(-(t-t0)²/(2δt²)) and υ = sqrt(π) δt.
double toy_dyson_density(const ToyModel& toy, int lambda, double t0, double dt);

}  // namespace qtp
