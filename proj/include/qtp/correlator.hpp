#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qtp/field.hpp"

namespace qtp {

enum class Coupling { Linear, Quadratic };
enum class CorrelatorPath { Auto, Wick, NormalOrdered };

// Leg space: the field is expanded as phi(x) = sum_a v_a(x) O_a over the
// 2M operators O = (a_1 .. a_M, a_1^† .. a_M^†). Block A holds the
// annihilation legs and block C the creation legs.

/// Leg vector of phi(x): v^A_j = sqrt(w_j) u_j(x), v^C_j = conj of the same,
/// both damped by exp(-ε ω_j / 2).
Eigen::VectorXcd field_legs(const FieldSpec& spec, const SpacetimePoint& x);

/// Normal-ordered moments of a state in the discrete mode basis.
struct StateMoments {
  std::size_t modes = 0;
  bool gaussian = true;
  int particle_number = 0;    ///< for non-Gaussian states
  Eigen::VectorXcd m1;        ///< <O_a>, empty unless coherent
  Eigen::MatrixXcd m2;        ///< <:O_a O_b:>, 2M x 2M
  Eigen::MatrixXcd two_body;  ///< discrete A_ij = sqrt(w_i w_j) A(k_i, k_j) for N = 2
};

StateMoments state_moments(const FieldState& state, const FieldSpec& spec);

/// <T*[C(x'_1)..C(x'_n)] T[C(x_n)..C(x_1)]> for n <= 3. Equal times are
/// ordered by argument index.
cplx balanced_correlator(const std::vector<SpacetimePoint>& points_T,
                         const std::vector<SpacetimePoint>& points_Tstar, const FieldState& state,
                         const FieldSpec& spec, Coupling coupling = Coupling::Linear,
                         CorrelatorPath path = CorrelatorPath::Auto);

/// Expectation of an ordered product of field operators. Each operator is a
/// group of legs; Quadratic groups (:phi²:) have no intra-group contractions.
cplx ordered_product_expectation(const std::vector<std::vector<Eigen::VectorXcd>>& groups,
                                 const StateMoments& moments);

/// sum c[a,d] <O_a O_d> for a leg matrix c.
cplx leg_pair_expectation(const Eigen::MatrixXcd& c, const StateMoments& moments);

/// sum c1[a,d] c2[b,g] <O_a O_b O_g O_d>: detector 1 is the outer pair.
cplx leg_quad_expectation(const Eigen::MatrixXcd& c1, const Eigen::MatrixXcd& c2,
                          const StateMoments& moments);

}  // namespace qtp
