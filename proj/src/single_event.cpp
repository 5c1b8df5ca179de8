#include "qtp/single_event.hpp"

#include <cmath>
#include <stdexcept>

#include "qtp/errors.hpp"

namespace qtp {

namespace {

double uniform_spacing(const std::vector<double>& axis, const std::string& name) {
  if (axis.size() < 2) throw std::invalid_argument("axis '" + name + "' needs at least two points");
  const double h = axis[1] - axis[0];
  if (!(h > 0.0)) throw std::invalid_argument("axis '" + name + "' must be increasing");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (std::abs(axis[i] - axis[i - 1] - h) > 1e-9 * h * axis.size()) {
      throw std::invalid_argument("axis '" + name + "' must be uniformly spaced");
    }
  }
  return h;
}

std::vector<double> axis_weights(const std::vector<double>& axis) {
  if (axis.size() == 1) return {1.0};
  return numeric::trapezoid_weights(static_cast<int>(axis.size()), uniform_spacing(axis, "grid"));
}

}  // namespace

std::vector<double> ProbabilityGrid::weights() const {
  std::vector<double> w{1.0};
  for (const auto& axis : axes) {
    const auto wa = axis_weights(axis);
    std::vector<double> next;
    next.reserve(w.size() * wa.size());
    for (double a : w) {
      for (double b : wa) next.push_back(a * b);
    }
    w = std::move(next);
  }
  return w;
}

double ProbabilityGrid::integral() const {
  const auto w = weights();
  numeric::CompensatedSum<double> acc;
  for (std::size_t i = 0; i < values.size(); ++i) acc.add(w[i] * values[i]);
  return acc.value();
}

void ProbabilityGrid::validate() const {
  if (axes.size() != axis_names.size()) throw std::invalid_argument("grid: axis names and axes differ in count");
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  if (n != values.size()) throw std::invalid_argument("grid: value count does not match axes");
}

Eigen::MatrixXd kernel_leg_matrix(const FieldSpec& spec, const DetectorKernel& kernel) {
  kernel.validate();
  const auto m = static_cast<Eigen::Index>(spec.size());
  std::vector<Eigen::Vector4d> k(m);
  for (Eigen::Index j = 0; j < m; ++j) k[j] = spec.four_momentum(j);
  Eigen::MatrixXd out(2 * m, 2 * m);
  for (Eigen::Index a = 0; a < 2 * m; ++a) {
    const double sa = a < m ? 1.0 : -1.0;
    const Eigen::Vector4d& ka = k[a % m];
    for (Eigen::Index d = 0; d < 2 * m; ++d) {
      const double sd = d < m ? 1.0 : -1.0;
      out(a, d) = kernel_fourier(kernel, 0.5 * (sa * ka - sd * k[d % m]), spec.dim);
    }
  }
  return out;
}

Eigen::MatrixXcd detector_leg_matrix(const FieldSpec& spec, const Eigen::MatrixXd& kernel_legs,
                                     const SpacetimePoint& x) {
  const Eigen::VectorXcd v = field_legs(spec, x);
  return v.asDiagonal() * kernel_legs.cast<cplx>() * v.asDiagonal();
}

DetectionEvaluator::DetectionEvaluator(const FieldState& state, const FieldSpec& spec, const DetectorKernel& kernel)
    : spec_(spec) {
  spec_.validate();
  const StateMoments mom = state_moments(state, spec_);
  const Eigen::MatrixXd k = kernel_leg_matrix(spec_, kernel);
  const auto m = static_cast<Eigen::Index>(spec_.size());
  weighted_ = k.cast<cplx>().cwiseProduct(mom.m2);
  const int d = spatial_dims(spec_.dim);
  numeric::CompensatedSum<double> acc;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = spec_.energy(j);
    acc.add(k(j, m + j) * spec_.modes.weight[j] * std::exp(-spec_.epsilon * w) / (std::pow(2.0 * M_PI, d) * 2.0 * w));
  }
  floor_ = acc.value();
}

cplx DetectionEvaluator::raw(const SpacetimePoint& x) const {
  const Eigen::VectorXcd v = field_legs(spec_, x);
  return floor_ + (v.transpose() * weighted_ * v)(0);
}

double DetectionEvaluator::density(const SpacetimePoint& x) const {
  const cplx value = raw(x);
  if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value.real()))) {
    throw std::runtime_error("detection density has imaginary residue " + std::to_string(value.imag()));
  }
  if (value.real() < -1e-8) throw NegativeDensity("detection density " + std::to_string(value.real()));
  return value.real();
}

double detection_density(const FieldState& state, const FieldSpec& spec, const DetectorKernel& kernel,
                         const SpacetimePoint& x, Coupling coupling) {
  if (coupling != Coupling::Linear) {
    throw std::invalid_argument("detection_density: kernel contraction supports linear coupling only");
  }
  return DetectionEvaluator(state, spec, kernel).density(x);
}

ProbabilityGrid detection_density_grid(const FieldState& state, const FieldSpec& spec, const DetectorKernel& kernel,
                                       const std::vector<double>& t_grid, const std::vector<double>& x_grid,
                                       int threads) {
  if (spec.dim != Dimension::D1p1) throw std::invalid_argument("detection_density_grid: 1+1 only");
  const DetectionEvaluator eval(state, spec, kernel);
  ProbabilityGrid g;
  g.axis_names = {"t", "x"};
  g.axes = {t_grid, x_grid};
  g.values.assign(t_grid.size() * x_grid.size(), 0.0);
  numeric::parallel_for(g.values.size(), threads, [&](std::size_t i) {
    const SpacetimePoint p{t_grid[i / x_grid.size()], {x_grid[i % x_grid.size()]}};
    g.values[i] = eval.density(p);
  });
  return g;
}

ProbabilityGrid convolve_sampling(const ProbabilityGrid& p, const SamplingFunctions& s) {
  p.validate();
  if (p.normalization != Normalization::Raw) throw std::invalid_argument("convolve_sampling: input must be Raw");
  if (s.dt < 0.0 || s.dx < 0.0) throw std::invalid_argument("convolve_sampling: widths must be >= 0");
  ProbabilityGrid out = p;
  std::size_t stride = p.values.size();
  for (std::size_t ax = 0; ax < p.axes.size(); ++ax) {
    const auto& axis = p.axes[ax];
    stride /= axis.size();
    const double width = p.axis_names[ax] == "t" ? s.dt : s.dx;
    if (width == 0.0 || axis.size() == 1) continue;
    const double h = uniform_spacing(axis, p.axis_names[ax]);
    if (width < 4.0 * h) {
      throw GridTooCoarse("axis '" + p.axis_names[ax] + "' spacing " + std::to_string(h) +
                          " exceeds a quarter of the sampling width " + std::to_string(width));
    }
    const auto w = axis_weights(axis);
    const std::size_t n = axis.size();
    // Column-normalized kernel: Σ_i w_i K_ij = w_j preserves the trapezoid integral.
    Eigen::MatrixXd k(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double u = (axis[i] - axis[j]) / width;
        k(i, j) = std::exp(-u * u) / (std::sqrt(M_PI) * width);
        z += w[i] * k(i, j);
      }
      for (std::size_t i = 0; i < n; ++i) k(i, j) *= w[j] / z;
    }
    std::vector<double> next(out.values.size(), 0.0);
    const std::size_t outer = out.values.size() / (n * stride);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < stride; ++in) {
        for (std::size_t i = 0; i < n; ++i) {
          numeric::CompensatedSum<double> acc;
          for (std::size_t j = 0; j < n; ++j) acc.add(k(i, j) * out.values[(o * n + j) * stride + in]);
          next[(o * n + i) * stride + in] = acc.value();
        }
      }
    }
    out.values = std::move(next);
  }
  return out;
}

PacketSummary summarize_packet(const SingleParticle& state, const FieldSpec& spec, double distance) {
  if (spec.dim != Dimension::D1p1) throw std::invalid_argument("summarize_packet: 1+1 only");
  const auto m = static_cast<Eigen::Index>(spec.size());
  PacketSummary s;
  double norm = 0.0, p1 = 0.0, p2 = 0.0, x1 = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = spec.modes.weight[j];
    const double p = spec.modes.k[j][0];
    const double r = std::norm(state.psi[j]);
    norm += w * r;
    p1 += w * r * p;
    p2 += w * r * p * p;
    if (j > 0 && j + 1 < m) {
      const double h = spec.modes.k[j + 1][0] - spec.modes.k[j - 1][0];
      const cplx dpsi = (state.psi[j + 1] - state.psi[j - 1]) / h;
      x1 += w * (std::conj(state.psi[j]) * cplx(0.0, 1.0) * dpsi).real();
    }
  }
  s.mean_p = p1 / norm;
  s.sigma_p = std::sqrt(std::max(0.0, p2 / norm - s.mean_p * s.mean_p));
  s.mean_x = x1 / norm;
  const double e0 = dispersion(s.mean_p, spec.mass);
  const double v0 = s.mean_p / e0;
  s.arrival_time = (distance - s.mean_x) / v0;
  const double sx = s.sigma_p > 0.0 ? 1.0 / (2.0 * s.sigma_p) : 0.0;
  const double sv = s.sigma_p * spec.mass * spec.mass / (e0 * e0 * e0);
  s.arrival_spread = std::hypot(sx, sv * s.arrival_time) / std::abs(v0);
  return s;
}

namespace {

ProbabilityGrid toa_core(const Eigen::MatrixXcd& rho, const FieldSpec& spec, const DetectorKernel& kernel,
                         double distance, const std::vector<double>& t_grid, Diagnostics& diag,
                         const ToaOptions& opt, double mean_p) {
  const auto m = static_cast<Eigen::Index>(spec.size());
  if (!(distance > 0.0)) throw std::invalid_argument("toa_density: L must be > 0");
  uniform_spacing(t_grid, "t");
  if (mean_p <= 0.0) diag.warn("NonForwardState", "mean momentum is not positive");

  Eigen::VectorXd p(m), e(m), amp(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    p[j] = spec.modes.k[j][0];
    e[j] = spec.energy(j);
    amp[j] = spec.modes.weight[j] * std::sqrt(std::abs(p[j] / e[j]));
  }
  // Positivity precheck on the localization operator restricted to the grid.
  Eigen::MatrixXd s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) s(i, j) = s(j, i) = localization_matrix(kernel, p[i], p[j], spec.mass);
  }
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff())) {
      diag.warn("KernelNotPositive", "localization operator has eigenvalue " + std::to_string(min_eig));
    }
  }
  const Eigen::MatrixXcd b = rho.cwiseProduct(s.cast<cplx>());

  ProbabilityGrid g;
  g.axis_names = {"t"};
  g.axes = {t_grid};
  g.values.assign(t_grid.size(), 0.0);
  std::vector<double> imag(t_grid.size(), 0.0);
  numeric::parallel_for(t_grid.size(), opt.threads, [&](std::size_t i) {
    Eigen::VectorXcd phi(m);
    for (Eigen::Index j = 0; j < m; ++j) phi[j] = std::polar(amp[j], p[j] * distance - e[j] * t_grid[i]);
    const cplx v = (phi.transpose() * b * phi.conjugate())(0) / (2.0 * M_PI);
    g.values[i] = v.real();
    imag[i] = v.imag();
  });
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (std::abs(imag[i]) > 1e-10 * std::max(1.0, std::abs(g.values[i]))) {
      throw std::runtime_error("toa_density: imaginary residue " + std::to_string(imag[i]));
    }
    if (g.values[i] < -1e-8) throw NegativeDensity("toa density " + std::to_string(g.values[i]) + " at t = " + std::to_string(t_grid[i]));
  }
  return g;
}

void check_line_basis(const FieldSpec& spec) {
  spec.validate();
  if (spec.dim != Dimension::D1p1) throw std::invalid_argument("toa_density: requires a 1+1 field");
}

}  // namespace

ProbabilityGrid toa_density(const SingleParticle& state, const FieldSpec& spec, const DetectorKernel& kernel,
                            double distance, const std::vector<double>& t_grid, Diagnostics& diag,
                            const ToaOptions& opt) {
  check_line_basis(spec);
  validate_state(state, spec);
  const PacketSummary sum = summarize_packet(state, spec, distance);
  if (opt.check_coverage && sum.mean_p > 0.0) {
    const double lo = sum.arrival_time - opt.coverage_widths * sum.arrival_spread;
    const double hi = sum.arrival_time + opt.coverage_widths * sum.arrival_spread;
    if (t_grid.front() > lo || t_grid.back() < hi) {
      throw std::invalid_argument("toa_density: t grid must cover [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                  "] (6 arrival widths around the classical arrival time)");
    }
  }
  return toa_core(state.psi * state.psi.adjoint(), spec, kernel, distance, t_grid, diag, opt, sum.mean_p);
}

ProbabilityGrid toa_density(const Eigen::MatrixXcd& rho, const FieldSpec& spec, const DetectorKernel& kernel,
                            double distance, const std::vector<double>& t_grid, Diagnostics& diag,
                            const ToaOptions& opt) {
  check_line_basis(spec);
  const auto m = static_cast<Eigen::Index>(spec.size());
  if (rho.rows() != m || rho.cols() != m) throw std::invalid_argument("toa_density: rho must be M x M");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, rho.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("toa_density: rho is not hermitian");
  }
  double tr = 0.0, p1 = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    tr += spec.modes.weight[j] * rho(j, j).real();
    p1 += spec.modes.weight[j] * rho(j, j).real() * spec.modes.k[j][0];
  }
  if (std::abs(tr - 1.0) > 1e-10) throw std::invalid_argument("toa_density: rho trace is not 1");
  return toa_core(rho, spec, kernel, distance, t_grid, diag, opt, p1);
}

ProbabilityGrid normalize_conditioned(const ProbabilityGrid& p, Diagnostics& diag) {
  p.validate();
  if (p.normalization != Normalization::Raw) throw std::invalid_argument("normalize_conditioned: input must be Raw");
  ProbabilityGrid out = p;
  const auto w = p.weights();
  double clamp = 0.0, total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double v = out.values[i];
    if (v < -1e-8) throw NegativeDensity("density value " + std::to_string(v) + " below -1e-8");
    if (v < 0.0) {
      clamp += w[i] * (-v);
      ++count;
      out.values[i] = 0.0;
    }
    total += w[i] * std::abs(v);
  }
  if (clamp > 1e-6 * total) {
    throw NegativeDensity("clamped mass " + std::to_string(clamp) + " exceeds 1e-6 of the total");
  }
  out.clamped_points = count;
  out.clamp_mass = clamp;
  const double pdet = out.integral();
  if (pdet < 1e-14) throw ZeroDetection("detection probability " + std::to_string(pdet) + " below 1e-14");
  if (pdet > 0.1) {
    diag.warn("PerturbativityWarning", "P_det = " + std::to_string(pdet) + " exceeds 0.1");
  }
  for (double& v : out.values) v /= pdet;
  out.p_det = pdet;
  out.normalization = Normalization::Conditioned;
  return out;
}

std::pair<double, double> grid_mean_variance(const ProbabilityGrid& p) {
  if (p.axes.size() != 1) throw std::invalid_argument("grid_mean_variance: 1-d grids only");
  const auto w = p.weights();
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double x = p.axes[0][i];
    m0 += w[i] * p.values[i];
    m1 += w[i] * p.values[i] * x;
    m2 += w[i] * p.values[i] * x * x;
  }
  const double mean = m1 / m0;
  return {mean, m2 / m0 - mean * mean};
}

}  // namespace qtp
