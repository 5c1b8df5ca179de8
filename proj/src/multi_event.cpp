#include "qtp/multi_event.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qtp/errors.hpp"
#include "qtp/single_event.hpp"

namespace qtp {

void OutcomeSet::validate(Dimension dim) const {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    check_point(cells[i].center, dim);
    if (!(cells[i].volume > 0.0)) throw std::invalid_argument("outcome cell " + std::to_string(i) + " has volume <= 0");
    for (std::size_t j = 0; j < i; ++j) {
      if (cells[i].center.t == cells[j].center.t && cells[i].center.x == cells[j].center.x) {
        throw std::invalid_argument("outcome cells " + std::to_string(j) + " and " + std::to_string(i) +
                                    " share a center");
      }
    }
  }
}

JointEvaluator::JointEvaluator(const FieldState& state, const FieldSpec& spec, std::vector<DetectorKernel> kernels)
    : spec_(spec) {
  spec_.validate();
  if (kernels.empty()) throw std::invalid_argument("joint density needs at least one kernel");
  if (kernels.size() > 2) throw UnsupportedOrder("joint densities are limited to n <= 2");
  moments_ = state_moments(state, spec_);
  for (const auto& k : kernels) kernel_legs_.push_back(kernel_leg_matrix(spec_, k));
}

cplx JointEvaluator::raw(const std::vector<SpacetimePoint>& xs) const {
  if (xs.size() != kernel_legs_.size()) throw std::invalid_argument("joint density: point count != kernel count");
  if (xs.size() == 1) return leg_pair_expectation(detector_leg_matrix(spec_, kernel_legs_[0], xs[0]), moments_);
  const std::size_t outer = xs[1].t < xs[0].t ? 1 : 0;
  const std::size_t inner = 1 - outer;
  return leg_quad_expectation(detector_leg_matrix(spec_, kernel_legs_[outer], xs[outer]),
                              detector_leg_matrix(spec_, kernel_legs_[inner], xs[inner]), moments_);
}

double JointEvaluator::density(const std::vector<SpacetimePoint>& xs) const {
  const cplx v = raw(xs);
  if (std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v.real()))) {
    throw std::runtime_error("joint density has imaginary residue " + std::to_string(v.imag()));
  }
  if (v.real() < -1e-8) throw NegativeDensity("joint density " + std::to_string(v.real()));
  return v.real();
}

double joint_density(const FieldState& state, const FieldSpec& spec, const std::vector<DetectorKernel>& kernels,
                     const std::vector<SpacetimePoint>& xs, Coupling coupling) {
  if (kernels.size() > 2 || xs.size() > 2) throw UnsupportedOrder("joint densities are limited to n <= 2");
  if (coupling != Coupling::Linear) {
    throw std::invalid_argument("joint_density: kernel contraction supports linear coupling only");
  }
  return JointEvaluator(state, spec, kernels).density(xs);
}

Eigen::MatrixXd joint_density_matrix(const JointEvaluator& eval, const OutcomeSet& cells, int threads) {
  if (eval.order() != 2) throw std::invalid_argument("joint_density_matrix needs a two-detector evaluator");
  cells.validate(eval.spec().dim);
  const std::size_t n = cells.size();
  Eigen::MatrixXd out(n, n);
  numeric::parallel_for(n * n, threads, [&](std::size_t k) {
    out(k / n, k % n) = eval.density({cells.cells[k / n].center, cells.cells[k % n].center});
  });
  return out;
}

GeneratingTerms qtp_generating_functional(const std::vector<double>& j, const OutcomeSet& cells,
                                          const FieldState& state, const FieldSpec& spec,
                                          const DetectorKernel& kernel, int max_order, int threads) {
  if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");
  if (max_order > 2) throw UnsupportedOrder("generating functional truncated at order <= 2");
  if (j.size() != cells.size()) throw std::invalid_argument("source size != cell count");
  cells.validate(spec.dim);
  GeneratingTerms out;
  out.order0 = 1.0;
  const std::size_t n = cells.size();
  std::vector<double> src(n);
  for (std::size_t i = 0; i < n; ++i) src[i] = j[i] * cells.cells[i].volume;
  if (max_order >= 1) {
    const JointEvaluator one(state, spec, {kernel});
    numeric::CompensatedSum<double> acc;
    for (std::size_t i = 0; i < n; ++i) {
      if (src[i] != 0.0) acc.add(src[i] * one.density({cells.cells[i].center}));
    }
    out.order1 = acc.value();
  }
  if (max_order >= 2) {
    const JointEvaluator two(state, spec, {kernel, kernel});
    const Eigen::MatrixXd p2 = joint_density_matrix(two, cells, threads);
    numeric::CompensatedSum<double> acc;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) acc.add(src[a] * src[b] * p2(a, b));
    }
    out.order2 = 0.5 * acc.value();
  }
  return out;
}

CtpSource rank_one_source(const OutcomeSet& cells, const std::vector<double>& j, const DetectorKernel& kernel) {
  if (j.size() != cells.size()) throw std::invalid_argument("source size != cell count");
  CtpSource s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    s.terms.push_back({cells.cells[i].center, j[i] * cells.cells[i].volume, kernel});
  }
  return s;
}

namespace {

// Singular-value legs of one source term: c = Σ_r σ_r l_r r_rᵀ, l on the
// left of the operator pair and r on the right.
struct SplitTerm {
  double time = 0.0;
  double weight = 0.0;
  std::vector<double> sigma;
  std::vector<Eigen::VectorXcd> left, right;
};

SplitTerm split(const CtpSource::Term& term, const FieldSpec& spec) {
  SplitTerm s;
  s.time = term.center.t;
  s.weight = term.weight;
  const Eigen::MatrixXd k = kernel_leg_matrix(spec, term.kernel);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXcd v = field_legs(spec, term.center);
  const double scale = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  for (Eigen::Index r = 0; r < svd.singularValues().size(); ++r) {
    const double sv = svd.singularValues()[r];
    if (sv <= 1e-15 * scale) break;
    s.sigma.push_back(sv);
    s.left.push_back(v.cwiseProduct(svd.matrixU().col(r).cast<cplx>()));
    s.right.push_back(v.cwiseProduct(svd.matrixV().col(r).cast<cplx>()));
  }
  return s;
}

// One single-leg group per operator, left to right.
std::vector<std::vector<Eigen::VectorXcd>> groups(std::initializer_list<const Eigen::VectorXcd*> ops) {
  std::vector<std::vector<Eigen::VectorXcd>> g;
  for (const auto* op : ops) g.push_back({*op});
  return g;
}

}  // namespace

GeneratingTerms ctp_diagonal_generating(const CtpSource& source, const FieldState& state, const FieldSpec& spec,
                                        int max_order) {
  if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");
  if (max_order > 2) throw UnsupportedOrder("generating functional truncated at order <= 2");
  spec.validate();
  const StateMoments mom = state_moments(state, spec);
  std::vector<SplitTerm> terms;
  for (const auto& t : source.terms) {
    if (t.weight != 0.0) terms.push_back(split(t, spec));
  }

  GeneratingTerms out;
  out.order0 = 1.0;
  if (max_order >= 1) {
    numeric::CompensatedSum<cplx> acc;
    for (const auto& t : terms) {
      for (std::size_t r = 0; r < t.sigma.size(); ++r) {
        acc.add(t.weight * t.sigma[r] * ordered_product_expectation(groups({&t.left[r], &t.right[r]}), mom));
      }
    }
    out.order1 = acc.value().real();
  }
  if (max_order >= 2) {
    numeric::CompensatedSum<cplx> acc;
    for (std::size_t a = 0; a < terms.size(); ++a) {
      for (std::size_t b = 0; b < terms.size(); ++b) {
        // The earlier term sits on the outside; ties keep the source order.
        const bool swap = terms[b].time < terms[a].time;
        const SplitTerm& outer = swap ? terms[b] : terms[a];
        const SplitTerm& inner = swap ? terms[a] : terms[b];
        for (std::size_t r = 0; r < outer.sigma.size(); ++r) {
          for (std::size_t q = 0; q < inner.sigma.size(); ++q) {
            const cplx g = ordered_product_expectation(
                groups({&outer.left[r], &inner.left[q], &inner.right[q], &outer.right[r]}), mom);
            acc.add(outer.weight * inner.weight * outer.sigma[r] * inner.sigma[q] * g);
          }
        }
      }
    }
    out.order2 = 0.5 * acc.value().real();
  }
  return out;
}

}  // namespace qtp
