#include "qtp/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qtp/errors.hpp"

namespace qtp {

DetectorKernel DetectorKernel::gaussian_energy(double e0, double tau, double amplitude) {
  DetectorKernel k;
  k.family = KernelFamily::GaussianEnergy;
  k.e0 = e0;
  k.tau = tau;
  k.amplitude = amplitude;
  k.validate();
  return k;
}

DetectorKernel DetectorKernel::maximal(double amplitude) {
  DetectorKernel k;
  k.family = KernelFamily::MaximalLocalization;
  k.amplitude = amplitude;
  k.validate();
  return k;
}

DetectorKernel DetectorKernel::tabulated(std::vector<double> p, std::vector<double> values) {
  DetectorKernel k;
  k.family = KernelFamily::TabulatedOnShell;
  k.table_p = std::move(p);
  k.table_values = std::move(values);
  k.validate();
  return k;
}

void DetectorKernel::validate() const {
  if (!(amplitude > 0.0)) throw std::invalid_argument("kernel: amplitude must be > 0");
  if (family == KernelFamily::GaussianEnergy && !(tau > 0.0)) {
    throw std::invalid_argument("kernel: tau must be > 0");
  }
  if (family == KernelFamily::TabulatedOnShell) {
    if (table_p.size() < 2 || table_p.size() != table_values.size()) {
      throw std::invalid_argument("kernel: tabulated family needs matching p/value arrays of length >= 2");
    }
    for (std::size_t i = 0; i < table_p.size(); ++i) {
      if (!(table_values[i] > 0.0)) throw std::invalid_argument("kernel: tabulated values must be > 0");
      if (i > 0 && !(table_p[i] > table_p[i - 1])) {
        throw std::invalid_argument("kernel: tabulated momenta must be increasing");
      }
    }
  }
}

std::string DetectorKernel::describe() const {
  std::ostringstream os;
  switch (family) {
    case KernelFamily::GaussianEnergy:
      os << "gaussian-energy(E0=" << e0 << ", tau=" << tau << ", A=" << amplitude << ")";
      break;
    case KernelFamily::MaximalLocalization:
      os << "maximal(A=" << amplitude << ")";
      break;
    case KernelFamily::TabulatedOnShell:
      os << "tabulated(" << table_p.size() << " points)";
      break;
  }
  return os.str();
}

bool in_forward_cone(const Eigen::Vector4d& xi, Dimension dim) {
  const double s2 = dim == Dimension::D1p1 ? xi[1] * xi[1] : xi.tail<3>().squaredNorm();
  if (xi[0] < 0.0) return false;
  const double t2 = xi[0] * xi[0];
  return t2 - s2 >= -1e-12 * (t2 + s2);
}

double kernel_fourier(const DetectorKernel& kernel, const Eigen::Vector4d& xi, Dimension dim) {
  if (!in_forward_cone(xi, dim)) return 0.0;
  switch (kernel.family) {
    case KernelFamily::GaussianEnergy: {
      const double d = (xi[0] - kernel.e0) * kernel.tau;
      return kernel.amplitude * std::exp(-d * d);
    }
    case KernelFamily::MaximalLocalization:
      return kernel.amplitude;
    case KernelFamily::TabulatedOnShell: {
      const double p = dim == Dimension::D1p1 ? xi[1] : xi.tail<3>().norm();
      const auto& tp = kernel.table_p;
      if (p < tp.front() || p > tp.back()) return 0.0;
      auto it = std::upper_bound(tp.begin(), tp.end(), p);
      std::size_t hi = std::min<std::size_t>(it - tp.begin(), tp.size() - 1);
      const std::size_t lo = hi - 1;
      const double f = (p - tp[lo]) / (tp[hi] - tp[lo]);
      const double lv = (1.0 - f) * std::log(kernel.table_values[lo]) + f * std::log(kernel.table_values[hi]);
      return kernel.amplitude * std::exp(lv);
    }
  }
  return 0.0;
}

double kernel_on_shell(const DetectorKernel& kernel, double p, double mass) {
  return kernel_fourier(kernel, Eigen::Vector4d(dispersion(p, mass), p, 0.0, 0.0), Dimension::D1p1);
}

double localization_matrix(const DetectorKernel& kernel, double p, double pp, double mass) {
  const double r1 = kernel_on_shell(kernel, p, mass);
  const double r2 = kernel_on_shell(kernel, pp, mass);
  if (r1 <= 0.0 || r2 <= 0.0) {
    throw ZeroDenominator("on-shell kernel vanishes at p = " + std::to_string(r1 <= 0.0 ? p : pp));
  }
  const Eigen::Vector4d mid(0.5 * (dispersion(p, mass) + dispersion(pp, mass)), 0.5 * (p + pp), 0.0, 0.0);
  return kernel_fourier(kernel, mid, Dimension::D1p1) / std::sqrt(r1 * r2);
}

PositivityReport is_positive_localization(const DetectorKernel& kernel, const MomentumGrid& grid, double mass) {
  grid.validate();
  PositivityReport rep;
  const auto p = grid.nodes();
  const int n = grid.n_points;
  std::vector<double> lr(n);
  for (int i = 0; i < n; ++i) {
    const double r = kernel_on_shell(kernel, p[i], mass);
    if (r <= 0.0) {
      rep.note = "kernel vanishes on shell inside the grid";
      return rep;
    }
    lr[i] = std::log(r);
  }
  rep.min_second_difference = std::numeric_limits<double>::infinity();
  for (int i = 1; i + 1 < n; ++i) {
    rep.min_second_difference = std::min(rep.min_second_difference, lr[i + 1] - 2.0 * lr[i] + lr[i - 1]);
  }
  rep.log_convex = rep.min_second_difference >= -1e-10;

  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      s(i, j) = s(j, i) = localization_matrix(kernel, p[i], p[j], mass);
    }
  }
  rep.max_entry = s.maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = solver.eigenvalues().minCoeff();
  rep.positive = rep.min_eigenvalue >= -1e-10;
  return rep;
}

void SamplingFunctions::validate() const {
  if (!(dt > 0.0) || !(dx > 0.0)) throw std::invalid_argument("sampling: dt and dx must be > 0");
}

double spacetime_volume(const SamplingFunctions& s, Dimension dim) {
  s.validate();
  if (dim == Dimension::D1p1) return M_PI * s.dt * s.dx;
  return M_PI * M_PI * s.dt * s.dx * s.dx * s.dx;
}

namespace {

double switching_exponent(const SamplingFunctions& s, const SpacetimePoint& y) {
  double r2 = 0.0;
  for (double c : y.x) r2 += c * c;
  return -0.5 * y.t * y.t / (s.dt * s.dt) - 0.5 * r2 / (s.dx * s.dx);
}

}  // namespace

double switching_function(const SamplingFunctions& s, const SpacetimePoint& y) {
  return std::exp(switching_exponent(s, y));
}

double gaussian_identity_check(const SamplingFunctions& s, const SpacetimePoint& x, const SpacetimePoint& xp) {
  s.validate();
  if (x.x.size() != xp.x.size()) throw std::invalid_argument("gaussian_identity_check: dimension mismatch");
  SpacetimePoint mid{0.5 * (x.t + xp.t), x.x};
  SpacetimePoint diff{x.t - xp.t, x.x};
  for (std::size_t a = 0; a < x.x.size(); ++a) {
    mid.x[a] = 0.5 * (x.x[a] + xp.x[a]);
    diff.x[a] = x.x[a] - xp.x[a];
  }
  const double lhs = std::exp(switching_exponent(s, x) + switching_exponent(s, xp));
  const double rhs = std::exp(2.0 * switching_exponent(s, mid) + 0.5 * switching_exponent(s, diff));
  return std::abs(lhs - rhs);
}

void check_sampling_scales(const SamplingFunctions& s, const DetectorKernel& kernel, Diagnostics& diag) {
  s.validate();
  if (kernel.family == KernelFamily::GaussianEnergy && s.dt < 10.0 * kernel.tau) {
    diag.warn("SamplingScale", "dt/tau = " + std::to_string(s.dt / kernel.tau) +
                                   " is below 10; the sampling-independent density may be inaccurate");
  }
}

}  // namespace qtp
