#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "qtp/correlator.hpp"

namespace qtp {

/// Bosonic Fock space over M modes truncated at a total particle number.
/// Operators act on vectors directly; no operator matrices are stored.
class FockSpace {
 public:
  static constexpr int kMaxDimension = 4096;

  FockSpace(int modes, int max_total);

  int dim() const { return static_cast<int>(basis_.size()); }
  int modes() const { return modes_; }
  int max_total() const { return max_total_; }
  const std::vector<int>& occupation(int index) const { return basis_[index]; }

  Eigen::VectorXcd vacuum() const;
  /// a_j applied to v.
  Eigen::VectorXcd annihilate(int j, const Eigen::VectorXcd& v) const;
  /// a_j^† applied to v; components pushed above the cap are dropped.
  Eigen::VectorXcd create(int j, const Eigen::VectorXcd& v) const;
  /// Leg operator O_a (a < M: annihilation, else creation) applied to v.
  Eigen::VectorXcd apply_leg(int a, const Eigen::VectorXcd& v) const;
  /// sum_a legs[a] O_a applied to v (or its normal-ordered square).
  Eigen::VectorXcd apply_field(const Eigen::VectorXcd& legs, Coupling coupling,
                               const Eigen::VectorXcd& v) const;
  /// Dense matrix of a_j, for small spaces.
  Eigen::MatrixXcd annihilator_matrix(int j) const;

  /// State vector in the discrete basis (coherent states are truncated).
  Eigen::VectorXcd state_vector(const FieldState& state, const FieldSpec& spec) const;

 private:
  int modes_;
  int max_total_;
  std::vector<std::vector<int>> basis_;
  std::map<std::vector<int>, int> index_;
};

/// Minimal cap that keeps every intermediate state of a product of
/// `field_factors` linear fields exact for an N-particle state.
int exact_fock_cap(int particle_number, int field_factors);

/// Brute-force evaluation of the balanced correlator by applying field
/// operators to the state vector in the exact operator order. max_total < 0
/// picks exact_fock_cap (coherent states need an explicit cap).
cplx fock_oracle_correlator(const std::vector<SpacetimePoint>& points_T,
                            const std::vector<SpacetimePoint>& points_Tstar, const FieldState& state,
                            const FieldSpec& spec, Coupling coupling = Coupling::Linear, int max_total = -1);

}  // namespace qtp
