#include "qtp/info_metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qtp/errors.hpp"
#include "qtp/numeric.hpp"

namespace qtp {

void Hierarchy::validate() const {
  const Eigen::Index n1 = p1.size();
  const Eigen::Index n2 = second().size();
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("hierarchy: no cells");
  if (p2.rows() != n1 || p2.cols() != n2) throw std::invalid_argument("hierarchy: P2 shape does not match P1");
  if (weights.size() != n1 || second_weights().size() != n2) {
    throw std::invalid_argument("hierarchy: weight count does not match cells");
  }
  if (!p1.allFinite() || !second().allFinite() || !p2.allFinite()) {
    throw std::invalid_argument("hierarchy: densities must be finite");
  }
  if (p1.minCoeff() < 0.0 || second().minCoeff() < 0.0 || p2.minCoeff() < 0.0) {
    throw std::invalid_argument("hierarchy: densities must be >= 0 after clamping");
  }
  if (weights.minCoeff() <= 0.0 || second_weights().minCoeff() <= 0.0) {
    throw std::invalid_argument("hierarchy: weights must be > 0");
  }
}

Hierarchy normalized(const Hierarchy& h) {
  h.validate();
  Hierarchy out = h;
  const double z1 = h.p1.dot(h.weights);
  const double z2 = (h.weights.asDiagonal() * h.p2 * h.second_weights()).sum();
  if (!(z1 > 0.0) || !(z2 > 0.0)) throw std::invalid_argument("hierarchy: zero total mass");
  out.p1 /= z1;
  out.p2 /= z2;
  if (h.p1_second.size()) out.p1_second /= h.p1_second.dot(h.second_weights());
  return out;
}

double kolmogorov_defect(const Hierarchy& h) {
  h.validate();
  numeric::CompensatedSum<double> total;
  for (Eigen::Index b = 0; b < h.p2.cols(); ++b) {
    numeric::CompensatedSum<double> marginal;
    for (Eigen::Index a = 0; a < h.p2.rows(); ++a) marginal.add(h.weights[a] * h.p2(a, b));
    total.add(h.second_weights()[b] * std::abs(marginal.value() - h.second()[b]));
  }
  return total.value();
}

CorrelationEntropy correlation_entropy(const Hierarchy& h, bool strict) {
  h.validate();
  CorrelationEntropy out;
  const Eigen::VectorXd& q1 = h.p1;
  const Eigen::VectorXd& q2 = h.second();
  const Eigen::VectorXd row = h.p2 * h.second_weights();
  const Eigen::VectorXd col = h.p2.transpose() * h.weights;
  for (Eigen::Index a = 0; a < q1.size(); ++a) {
    if (q1[a] == 0.0 && row[a] > 1e-12) out.excluded_first.push_back(static_cast<std::size_t>(a));
  }
  for (Eigen::Index b = 0; b < q2.size(); ++b) {
    if (q2[b] == 0.0 && col[b] > 1e-12) out.excluded_second.push_back(static_cast<std::size_t>(b));
  }
  if (strict && (!out.excluded_first.empty() || !out.excluded_second.empty())) {
    std::string msg = "P1 vanishes under P2 mass at cells";
    for (auto a : out.excluded_first) msg += " z1=" + std::to_string(a);
    for (auto b : out.excluded_second) msg += " z2=" + std::to_string(b);
    throw SupportMismatch(msg);
  }
  numeric::CompensatedSum<double> acc;
  for (Eigen::Index a = 0; a < h.p2.rows(); ++a) {
    for (Eigen::Index b = 0; b < h.p2.cols(); ++b) {
      const double p = h.p2(a, b);
      if (p == 0.0 || q1[a] == 0.0 || q2[b] == 0.0) continue;
      acc.add(h.weights[a] * h.second_weights()[b] * p * std::log(p / (q1[a] * q2[b])));
    }
  }
  out.value = acc.value();
  return out;
}

double boltzmann_entropy(const std::vector<double>& p, const std::vector<double>& volumes) {
  if (p.size() != volumes.size()) throw std::invalid_argument("boltzmann_entropy: size mismatch");
  numeric::CompensatedSum<double> acc;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || !(volumes[i] > 0.0)) throw std::invalid_argument("boltzmann_entropy: invalid cell");
    if (p[i] > 0.0) acc.add(-p[i] * std::log(p[i]) * volumes[i]);
  }
  return acc.value();
}

}  // namespace qtp
