#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qtp {

/// One- and two-event densities on a cell grid. For distinct detectors the
/// second marginal may differ from the first; it defaults to p1.
struct Hierarchy {
  Eigen::VectorXd p1;
  Eigen::VectorXd p1_second;  ///< empty means identical detectors
  Eigen::MatrixXd p2;         ///< p2(z1, z2)
  Eigen::VectorXd weights;    ///< quadrature weight per cell (z1 and z2 axes)
  Eigen::VectorXd weights_second;

  const Eigen::VectorXd& second() const { return p1_second.size() ? p1_second : p1; }
  const Eigen::VectorXd& second_weights() const { return weights_second.size() ? weights_second : weights; }
  void validate() const;
};

/// Each density divided by its own integral.
Hierarchy normalized(const Hierarchy& h);

/// S_Q = ∫dz2 |∫dz1 P2(z1, z2) - P1(z2)|.
double kolmogorov_defect(const Hierarchy& h);

struct CorrelationEntropy {
  double value = 0.0;
  std::vector<std::size_t> excluded_first;   ///< z1 cells with P1 = 0 but P2 mass
  std::vector<std::size_t> excluded_second;
};

/// S_C = ∫dz1 dz2 P2 ln(P2/(P1 P1')), 0 ln 0 = 0. With strict set, cells
/// where P1 vanishes under a P2 marginal > 1e-12 raise SupportMismatch;
/// otherwise they are skipped and listed.
CorrelationEntropy correlation_entropy(const Hierarchy& h, bool strict = true);

/// S_B = -Σ P ln P · volume with 0 ln 0 = 0.
double boltzmann_entropy(const std::vector<double>& p, const std::vector<double>& volumes);

}  // namespace qtp
