#include "qtp/toy.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "qtp/errors.hpp"

namespace qtp {

namespace {

using Mat = Eigen::MatrixXcd;

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

Mat sqrt_psd(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

Mat matrix_power(Mat base, long long n) {
  Mat result = Mat::Identity(base.rows(), base.cols());
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

// Trace-free expectation <initial| m |initial>.
cplx expect(const ToyModel& toy, const Mat& m) { return toy.initial.dot(m * toy.initial); }

}  // namespace

ToyModel ToyModel::build(const ToyConfig& c) {
  const int modes = static_cast<int>(c.mode_frequencies.size());
  const int levels = static_cast<int>(c.detector_energies.size());
  if (modes < 1 || modes > 4) throw std::invalid_argument("toy: n_modes must be in [1, 4]");
  if (c.max_occupation < 1 || c.max_occupation > 2) throw std::invalid_argument("toy: max_occupation must be 1 or 2");
  if (levels < 2 || levels > 4) throw std::invalid_argument("toy: detector_levels must be in [2, 4]");
  for (double w : c.mode_frequencies) {
    if (!(w > 0.0)) throw std::invalid_argument("toy: mode frequencies must be > 0");
  }

  ToyModel t;
  t.n_modes = modes;
  t.max_occupation = c.max_occupation;
  t.detector_levels = levels;
  t.coupling = c.coupling;
  t.omegas = c.mode_frequencies;
  t.energies = c.detector_energies;

  const int d1 = c.max_occupation + 1;
  Mat a1 = Mat::Zero(d1, d1);
  for (int n = 1; n < d1; ++n) a1(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Mat id1 = Mat::Identity(d1, d1);

  int fdim = 1;
  for (int j = 0; j < modes; ++j) fdim *= d1;
  t.field_h = Mat::Zero(fdim, fdim);
  t.field_x = Mat::Zero(fdim, fdim);
  for (int j = 0; j < modes; ++j) {
    Mat aj = Mat::Identity(1, 1);
    for (int l = 0; l < modes; ++l) aj = kron(aj, l == j ? a1 : id1);
    t.field_h += c.mode_frequencies[j] * aj.adjoint() * aj;
    t.field_x += (aj + aj.adjoint()) / std::sqrt(2.0 * c.mode_frequencies[j]);
  }

  Mat hdet = Mat::Zero(levels, levels);
  t.mu = Mat::Zero(levels, levels);
  for (int l = 0; l < levels; ++l) hdet(l, l) = c.detector_energies[l];
  for (int l = 1; l < levels; ++l) t.mu(l, 0) = t.mu(0, l) = 1.0;

  const Mat idf = Mat::Identity(fdim, fdim);
  const Mat idd = Mat::Identity(levels, levels);
  t.h0 = kron(t.field_h, idd) + kron(idf, hdet);
  t.hi = c.coupling * kron(t.field_x, t.mu);
  t.h = t.h0 + t.hi;
  Mat ground = Mat::Zero(levels, levels);
  ground(0, 0) = 1.0;
  t.p = kron(idf, idd - ground);
  t.q = Mat::Identity(t.p.rows(), t.p.cols()) - t.p;
  for (int l = 0; l < levels; ++l) {
    Mat e = Mat::Zero(levels, levels);
    e(l, l) = 1.0;
    t.pi.push_back(kron(idf, e));
  }

  if (c.field_state.size() == 0) {
    // Default: a fixed superposition of low occupations with distinct phases.
    t.field_state.resize(fdim);
    for (int i = 0; i < fdim; ++i) {
      int rest = i;
      double decay = 0.0, phase = 0.0;
      for (int j = modes - 1; j >= 0; --j) {
        const int n = rest % d1;
        rest /= d1;
        decay += (0.6 + 0.3 * j) * n;
        phase += (0.7 - 1.1 * j) * n;
      }
      t.field_state[i] = std::polar(std::exp(-decay), phase);
    }
  } else {
    if (c.field_state.size() != fdim) throw std::invalid_argument("toy: field_state has wrong dimension");
    t.field_state = c.field_state;
  }
  t.field_state.normalize();
  Eigen::VectorXcd omega = Eigen::VectorXcd::Zero(levels);
  omega[0] = 1.0;
  t.initial = kron(t.field_state, omega);
  return t;
}

ToyModel ToyModel::standard() { return build(ToyConfig{}); }

ToyModel ToyModel::with_coupling(double g) const {
  ToyModel t = *this;
  t.hi = (coupling != 0.0) ? Mat(hi * (g / coupling)) : Mat(g * kron(field_x, mu));
  t.coupling = g;
  t.h = t.h0 + t.hi;
  return t;
}

ToyInvariants check_toy(const ToyModel& t) {
  ToyInvariants r;
  const Mat id = Mat::Identity(t.dim(), t.dim());
  r.projector_sum = (t.p + t.q - id).cwiseAbs().maxCoeff();
  r.projector_idempotent = std::max((t.p * t.p - t.p).cwiseAbs().maxCoeff(), (t.q * t.q - t.q).cwiseAbs().maxCoeff());
  Mat sum = Mat::Zero(t.dim(), t.dim());
  for (int l = 1; l < t.detector_levels; ++l) sum += t.pi[l];
  r.pi_completeness = (sum - t.p).cwiseAbs().maxCoeff();
  r.hermiticity = std::max((t.h0 - t.h0.adjoint()).cwiseAbs().maxCoeff(), (t.hi - t.hi.adjoint()).cwiseAbs().maxCoeff());
  r.commutator_h0_p = (t.h0 * t.p - t.p * t.h0).cwiseAbs().maxCoeff();
  return r;
}

Mat unitary_evolution(const Mat& h, double t) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Eigen::VectorXcd phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) phases[i] = std::polar(1.0, -es.eigenvalues()[i] * t);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Mat restricted_propagator(const ToyModel& toy, double t, long long n) {
  if (n < 1) throw std::invalid_argument("restricted_propagator: N must be >= 1");
  const Mat step = toy.q * unitary_evolution(toy.h, t / static_cast<double>(n)) * toy.q;
  return matrix_power(step, n);
}

Mat history_operator(const ToyModel& toy, int lambda, double t, const HistoryOptions& opt) {
  if (lambda < 1 || lambda >= toy.detector_levels) throw std::invalid_argument("history_operator: lambda out of range");
  const Mat sqrt_pi = sqrt_psd(toy.pi[lambda]);
  if (opt.mode == HistoryMode::LeadingOrder) {
    const double comm = (toy.h0 * toy.p - toy.p * toy.h0).cwiseAbs().maxCoeff();
    if (comm >= 1e-12) throw CommutatorViolation("[H0, P] = " + std::to_string(comm) + " exceeds 1e-12");
    return unitary_evolution(toy.h0, -t) * sqrt_pi * toy.hi * unitary_evolution(toy.h0, t);
  }
  return unitary_evolution(toy.h, -t) * sqrt_pi * toy.h * restricted_propagator(toy, t, opt.propagator_steps);
}

Mat povm_amplitude(const ToyModel& toy, int lambda, double t, double dt, const PovmOptions& opt) {
  if (!(dt > 0.0)) throw std::invalid_argument("povm: smearing width must be > 0");
  const auto rule = numeric::gauss_legendre(opt.nodes, t - opt.half_width * dt, t + opt.half_width * dt);
  Mat a = Mat::Zero(toy.dim(), toy.dim());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = rule.nodes[i] - t;
    const double sqrt_f = std::exp(-0.5 * u * u / (dt * dt)) / std::sqrt(std::sqrt(M_PI) * dt);
    a += rule.weights[i] * sqrt_f * history_operator(toy, lambda, rule.nodes[i], opt.history);
  }
  return a;
}

Mat povm_density(const ToyModel& toy, int lambda, double t, double dt, const PovmOptions& opt) {
  const Mat a = povm_amplitude(toy, lambda, t, dt, opt);
  Mat pi = a.adjoint() * a;
  pi = 0.5 * (pi + pi.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(pi, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw NegativeEigenvalue("POVM element has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
  }
  return pi;
}

NoDetectionResult no_detection_operator(const ToyModel& toy, const std::vector<int>& lambdas,
                                        const std::vector<double>& t_grid, double dt, const PovmOptions& opt) {
  if (t_grid.size() < 2) throw std::invalid_argument("no_detection_operator: need at least two times");
  const double h = t_grid[1] - t_grid[0];
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (std::abs(t_grid[i] - t_grid[i - 1] - h) > 1e-9 * std::abs(h)) {
      throw std::invalid_argument("no_detection_operator: t grid must be uniform");
    }
  }
  const auto w = numeric::trapezoid_weights(static_cast<int>(t_grid.size()), h);
  const Mat id = Mat::Identity(toy.dim(), toy.dim());
  Mat sum = Mat::Zero(toy.dim(), toy.dim());
  for (int l : lambdas) {
    for (std::size_t i = 0; i < t_grid.size(); ++i) sum += w[i] * povm_density(toy, l, t_grid[i], dt, opt);
  }
  NoDetectionResult r;
  r.operator_n = id - sum;
  r.completeness_residual = (r.operator_n + sum - id).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (r.operator_n + r.operator_n.adjoint()), Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.max_eigenvalue = es.eigenvalues().maxCoeff();
  r.detection_mass = expect(toy, sum).real();
  if (r.completeness_residual > 1e-8 || r.min_eigenvalue < -1e-6 || r.max_eigenvalue > 1.0 + 1e-6) {
    throw CompletenessViolation("no-detection operator out of bounds: eigenvalues in [" +
                                std::to_string(r.min_eigenvalue) + ", " + std::to_string(r.max_eigenvalue) + "]");
  }
  return r;
}

DecoherenceResult decoherence_function(const ToyModel& toy, double t1, double t2, double t3, int lambda,
                                       const HistoryOptions& opt, int nodes) {
  if (!(t1 < t2 && t2 < t3)) throw std::invalid_argument("decoherence_function: need t1 < t2 < t3");
  const auto r12 = numeric::gauss_legendre(nodes, t1, t2);
  const auto r23 = numeric::gauss_legendre(nodes, t2, t3);
  // Amplitude vectors ∫ C(s)|ψ0> over each interval.
  auto amplitude = [&](const numeric::QuadratureRule& r) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(toy.dim());
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      v += r.weights[i] * (history_operator(toy, lambda, r.nodes[i], opt) * toy.initial);
    }
    return v;
  };
  const Eigen::VectorXcd a12 = amplitude(r12);
  const Eigen::VectorXcd a23 = amplitude(r23);
  DecoherenceResult d;
  d.prob_12 = a12.squaredNorm();
  d.prob_23 = a23.squaredNorm();
  d.d = 2.0 * a23.dot(a12).real();
  d.prob_13 = (a12 + a23).squaredNorm();
  return d;
}

double measure_coarse_graining_scale(const ToyModel& toy, int lambda, double s0, double u_max,
                                     const HistoryOptions& opt, int samples) {
  const Eigen::VectorXcd ref = history_operator(toy, lambda, s0, opt) * toy.initial;
  const double k0 = ref.squaredNorm();
  if (k0 <= 0.0) return 0.0;
  for (int i = 1; i <= samples; ++i) {
    const double u = u_max * i / samples;
    const Eigen::VectorXcd v = history_operator(toy, lambda, s0 + u, opt) * toy.initial;
    if (std::abs(ref.dot(v)) <= std::exp(-1.0) * k0) return u;
  }
  return std::numeric_limits<double>::infinity();
}

double toy_perturbative_density(const ToyModel& toy, int lambda, double t0, double dt, int nodes) {
  if (lambda < 1 || lambda >= toy.detector_levels) throw std::invalid_argument("lambda out of range");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  // Field-only two-point function in the (diagonal) free-field energy basis.
  const int fd = toy.field_dim();
  Eigen::VectorXd ef(fd);
  for (int i = 0; i < fd; ++i) ef[i] = toy.field_h(i, i).real();
  auto g_field = [&](double ta, double tb) {
    // <ψ| e^{iHf ta} X e^{-iHf (ta - tb)} X e^{-iHf tb} |ψ>
    Eigen::VectorXcd right(fd), left(fd);
    for (int i = 0; i < fd; ++i) {
      right[i] = std::polar(1.0, -ef[i] * tb) * toy.field_state[i];
      left[i] = std::polar(1.0, -ef[i] * ta) * toy.field_state[i];
    }
    Eigen::VectorXcd xr = toy.field_x * right;
    for (int i = 0; i < fd; ++i) xr[i] *= std::polar(1.0, -ef[i] * (ta - tb));
    return left.dot(toy.field_x * xr);
  };
  const double e_lambda = toy.energies[lambda] - toy.energies[0];
  const double mu2 = std::norm(toy.mu(lambda, 0));
  const double g2 = toy.coupling * toy.coupling;
  const auto gh = numeric::gauss_hermite(nodes);

  // P(c) = ∫dy sqrt(f(y)) R(y) G(c - y/2, c + y/2), sqrt f = exp(-y²/(4δt²)).
  auto density = [&](double c) {
    numeric::CompensatedSum<cplx> acc;
    for (int i = 0; i < nodes; ++i) {
      const double y = 2.0 * dt * gh.nodes[i];
      acc.add(gh.weights[i] * std::polar(1.0, e_lambda * y) * g_field(c - 0.5 * y, c + 0.5 * y));
    }
    return 2.0 * dt * g2 * mu2 * acc.value();
  };
  // W(t0) = ∫dc σ(t0 - c) P(c), σ(c) = exp(-c²/δt²)/(sqrt(π) δt).
  numeric::CompensatedSum<cplx> w;
  for (int i = 0; i < nodes; ++i) w.add(gh.weights[i] * density(t0 + dt * gh.nodes[i]));
  return (w.value() / std::sqrt(M_PI)).real();
}

double toy_dyson_density(const ToyModel& toy, int lambda, double t0, double dt) {
  if (lambda < 1 || lambda >= toy.detector_levels) throw std::invalid_argument("lambda out of range");
  const int n = toy.dim();
  if ((Mat(toy.h0.diagonal().asDiagonal()) - toy.h0).cwiseAbs().maxCoeff() > 0.0) {
    throw std::invalid_argument("toy_dyson_density: H0 must be diagonal in the product basis");
  }
  // H0 is diagonal in the product basis, so the first-order amplitude has a closed form.
  Mat s1(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double de = toy.h0(a, a).real() - toy.h0(b, b).real();
      const cplx ft = std::sqrt(2.0 * M_PI) * dt * std::exp(-0.5 * dt * dt * de * de) * std::polar(1.0, de * t0);
      s1(a, b) = cplx(0.0, -1.0) * toy.hi(a, b) * ft;
    }
  }
  const Eigen::VectorXcd amp = s1 * toy.initial;
  const double prob = amp.dot(toy.pi[lambda] * amp).real();
  return prob / (std::sqrt(M_PI) * dt);
}

}  // namespace qtp
