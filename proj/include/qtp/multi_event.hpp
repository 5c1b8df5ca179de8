#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qtp/correlator.hpp"
#include "qtp/detector.hpp"

namespace qtp {

struct Cell {
  SpacetimePoint center;
  double volume = 1.0;
};

/// Detection cells of a discretized outcome space. The no-detection outcome
/// is tracked by the flag only; generating functionals sum over cells.
struct OutcomeSet {
  std::vector<Cell> cells;
  bool include_none = true;

  std::size_t size() const { return cells.size(); }
  /// Volumes > 0 and no two cells share a center.
  void validate(Dimension dim) const;
};

/// Joint density of n <= 2 detection events. Kernels and moments are
/// prepared once; each call builds the per-detector leg matrices.
class JointEvaluator {
 public:
  JointEvaluator(const FieldState& state, const FieldSpec& spec, std::vector<DetectorKernel> kernels);

  /// P_n at the given points; xs.size() must match the kernel count.
  /// The earlier event forms the outer operator pair; equal times keep the
  /// detector order. Throws NegativeDensity below -1e-8.
  double density(const std::vector<SpacetimePoint>& xs) const;
  cplx raw(const std::vector<SpacetimePoint>& xs) const;

  std::size_t order() const { return kernel_legs_.size(); }
  const FieldSpec& spec() const { return spec_; }
  const StateMoments& moments() const { return moments_; }

 private:
  FieldSpec spec_;
  StateMoments moments_;
  std::vector<Eigen::MatrixXd> kernel_legs_;
};

/// One-shot joint density. Throws UnsupportedOrder for n > 2.
double joint_density(const FieldState& state, const FieldSpec& spec, const std::vector<DetectorKernel>& kernels,
                     const std::vector<SpacetimePoint>& xs, Coupling coupling = Coupling::Linear);

/// P2 on all ordered cell pairs, row-major (z1 major). Parallel over rows.
Eigen::MatrixXd joint_density_matrix(const JointEvaluator& eval, const OutcomeSet& cells, int threads = 1);

struct GeneratingTerms {
  double order0 = 0.0;
  double order1 = 0.0;
  double order2 = 0.0;
  double total() const { return order0 + order1 + order2; }
};

/// Σ_n (1/n!) Σ_{z1..zn} P_n(z1..zn) j(z1)..j(zn) vol(z1)..vol(zn), n <= max_order.
GeneratingTerms qtp_generating_functional(const std::vector<double>& j, const OutcomeSet& cells,
                                          const FieldState& state, const FieldSpec& spec,
                                          const DetectorKernel& kernel, int max_order = 2, int threads = 1);

/// Source L = Σ_t weight_t R_t with R_t the kernel of detector t at its centre.
struct CtpSource {
  struct Term {
    SpacetimePoint center;
    double weight = 0.0;
    DetectorKernel kernel;
  };
  std::vector<Term> terms;
};

/// L = R·j: weight j(z) vol(z) on each cell.
CtpSource rank_one_source(const OutcomeSet& cells, const std::vector<double>& j, const DetectorKernel& kernel);

/// Σ_n (1/n!) G^{α1..αn}_{β1..βn} L..L from balanced correlators. Each
/// kernel is split into singular-value legs and the ordered operator products
/// are expanded by partial matchings.
GeneratingTerms ctp_diagonal_generating(const CtpSource& source, const FieldState& state, const FieldSpec& spec,
                                        int max_order = 2);

}  // namespace qtp
