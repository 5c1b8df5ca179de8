#include "qtp/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qtp/errors.hpp"

namespace qtp {

namespace {

constexpr double kRegulatorFloor = 1e-12;

// Trapezoid over rapidity u in [-U, U] with step halving until converged.
// The integrand is analytic and decays double-exponentially, so the
// trapezoid rule converges geometrically.
template <class F>
cplx rapidity_integral(F&& f, double u_max) {
  int n = 256;
  double h = 2.0 * u_max / n;
  numeric::CompensatedSum<cplx> acc;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc.add(w * f(-u_max + i * h));
  }
  cplx sum = acc.value();
  cplx prev = sum * h;
  for (int level = 0; level < 14; ++level) {
    numeric::CompensatedSum<cplx> mid;
    for (int i = 0; i < n; ++i) mid.add(f(-u_max + (i + 0.5) * h));
    sum += mid.value();
    n *= 2;
    h *= 0.5;
    const cplx cur = sum * h;
    if (std::abs(cur - prev) <= 1e-14 * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw QuadratureDivergence("rapidity integral did not converge; increase epsilon");
}

double rapidity_cutoff(double mass, double decay) {
  const double r = 60.0 / (mass * decay);
  return r > 2.0 ? std::acosh(r) : std::acosh(2.0);
}

}  // namespace

int spatial_dims(Dimension d) { return d == Dimension::D1p1 ? 1 : 3; }

double dispersion(const Momentum& p) {
  if (p.mass < 0.0) throw std::invalid_argument("dispersion: mass must be >= 0");
  double s = p.mass * p.mass;
  for (double c : p.components) s += c * c;
  return std::sqrt(s);
}

double dispersion(double p, double mass) { return std::hypot(p, mass); }

void check_point(const SpacetimePoint& p, Dimension d) {
  if (static_cast<int>(p.x.size()) != spatial_dims(d)) {
    throw std::invalid_argument("spacetime point has " + std::to_string(p.x.size()) +
                                " spatial components, expected " + std::to_string(spatial_dims(d)));
  }
}

void MomentumGrid::validate() const {
  if (!(p_min < p_max)) throw std::invalid_argument("momentum grid: p_min must be < p_max");
  if (n_points < 16) throw std::invalid_argument("momentum grid: n_points must be >= 16");
}

double MomentumGrid::spacing() const { return (p_max - p_min) / (n_points - 1); }

std::vector<double> MomentumGrid::nodes() const {
  validate();
  std::vector<double> out(n_points);
  const double h = spacing();
  for (int i = 0; i < n_points; ++i) out[i] = p_min + i * h;
  return out;
}

std::vector<double> MomentumGrid::weights() const {
  validate();
  return numeric::trapezoid_weights(n_points, spacing());
}

ModeBasis ModeBasis::line(const MomentumGrid& grid) {
  ModeBasis b;
  b.dim = Dimension::D1p1;
  const auto p = grid.nodes();
  const auto w = grid.weights();
  for (int i = 0; i < grid.n_points; ++i) {
    b.k.emplace_back(p[i], 0.0, 0.0);
    b.weight.push_back(w[i]);
  }
  return b;
}

ModeBasis ModeBasis::box(const MomentumGrid& gx, const MomentumGrid& gy, const MomentumGrid& gz,
                         double k_min) {
  ModeBasis b;
  b.dim = Dimension::D3p1;
  const auto px = gx.nodes(), py = gy.nodes(), pz = gz.nodes();
  const auto wx = gx.weights(), wy = gy.weights(), wz = gz.weights();
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (std::size_t j = 0; j < py.size(); ++j) {
      for (std::size_t l = 0; l < pz.size(); ++l) {
        const Eigen::Vector3d k(px[i], py[j], pz[l]);
        if (k.norm() < k_min) continue;
        b.k.push_back(k);
        b.weight.push_back(wx[i] * wy[j] * wz[l]);
      }
    }
  }
  return b;
}

void FieldSpec::validate() const {
  if (mass < 0.0) throw std::invalid_argument("field: mass must be >= 0");
  if (epsilon < 0.0) throw std::invalid_argument("field: epsilon must be >= 0");
  if (modes.size() == 0) throw std::invalid_argument("field: empty mode basis");
  if (modes.dim != dim) throw std::invalid_argument("field: mode basis dimension mismatch");
  if (modes.weight.size() != modes.k.size()) throw std::invalid_argument("field: weight/mode size mismatch");
  for (std::size_t j = 0; j < modes.size(); ++j) {
    if (!(modes.weight[j] > 0.0)) throw std::invalid_argument("field: mode weights must be positive");
    if (energy(j) <= 0.0) {
      throw std::invalid_argument("field: massless basis contains the zero mode; exclude |k| < k_min");
    }
  }
}

double FieldSpec::energy(std::size_t j) const {
  const Eigen::Vector3d& k = modes.k[j];
  const double k2 = dim == Dimension::D1p1 ? k[0] * k[0] : k.squaredNorm();
  return std::sqrt(k2 + mass * mass);
}

Eigen::VectorXd FieldSpec::energies() const {
  Eigen::VectorXd e(size());
  for (std::size_t j = 0; j < size(); ++j) e[j] = energy(j);
  return e;
}

Eigen::Vector4d FieldSpec::four_momentum(std::size_t j) const {
  const Eigen::Vector3d& k = modes.k[j];
  if (dim == Dimension::D1p1) return {energy(j), k[0], 0.0, 0.0};
  return {energy(j), k[0], k[1], k[2]};
}

void validate_state(const FieldState& state, const FieldSpec& spec) {
  const auto m = static_cast<Eigen::Index>(spec.size());
  Eigen::VectorXd w(m);
  for (Eigen::Index j = 0; j < m; ++j) w[j] = spec.modes.weight[j];

  auto check_vector_norm = [&](const Eigen::VectorXcd& v, const char* what) {
    if (v.size() != m) throw std::invalid_argument(std::string(what) + ": amplitude size does not match mode basis");
    const double norm = (w.array() * v.array().abs2()).sum();
    if (std::abs(norm - 1.0) > 1e-10) {
      throw std::invalid_argument(std::string(what) + ": amplitude not normalized (norm " + std::to_string(norm) + ")");
    }
  };
  auto check_matrix = [&](const Eigen::MatrixXcd& a, const char* what) {
    if (a.rows() != m || a.cols() != m) throw std::invalid_argument(std::string(what) + ": amplitude must be M x M");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument(std::string(what) + ": amplitude is not symmetric");
    }
    const double norm = (w * w.transpose()).cwiseProduct(a.cwiseAbs2()).sum();
    if (std::abs(norm - 1.0) > 1e-10) {
      throw std::invalid_argument(std::string(what) + ": amplitude not normalized (norm " + std::to_string(norm) + ")");
    }
  };

  if (const auto* s = std::get_if<SingleParticle>(&state)) {
    check_vector_norm(s->psi, "single-particle state");
  } else if (const auto* c = std::get_if<Coherent>(&state)) {
    if (c->z.size() != m) throw std::invalid_argument("coherent state: amplitude size does not match mode basis");
    if (!std::isfinite((w.array() * c->z.array().abs2()).sum())) {
      throw std::invalid_argument("coherent state: amplitude is not square integrable");
    }
  } else if (const auto* t = std::get_if<TwoParticle>(&state)) {
    check_matrix(t->a, "two-particle state");
  } else if (const auto* f = std::get_if<FixedN>(&state)) {
    if (f->n == 1) {
      if (f->amplitude.cols() != 1) throw std::invalid_argument("fixed-N state: n = 1 needs a single column");
      check_vector_norm(f->amplitude.col(0), "fixed-N state");
    } else if (f->n == 2) {
      check_matrix(f->amplitude, "fixed-N state");
    } else if (f->n != 0) {
      throw UnsupportedState("fixed-N states support N <= 2");
    }
  }
}

SingleParticle gaussian_packet(const FieldSpec& spec, const Eigen::Vector3d& k0, double dp,
                               const Eigen::Vector3d& x0) {
  if (!(dp > 0.0)) throw std::invalid_argument("gaussian_packet: dp must be > 0");
  const auto m = static_cast<Eigen::Index>(spec.size());
  SingleParticle s;
  s.psi.resize(m);
  const int d = spatial_dims(spec.dim);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Vector3d dk = spec.modes.k[j] - k0;
    double q2 = 0.0, phase = 0.0;
    for (int a = 0; a < d; ++a) {
      q2 += dk[a] * dk[a];
      phase += spec.modes.k[j][a] * x0[a];
    }
    s.psi[j] = std::exp(-q2 / (4.0 * dp * dp)) * std::polar(1.0, -phase);
  }
  double norm = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) norm += spec.modes.weight[j] * std::norm(s.psi[j]);
  s.psi /= std::sqrt(norm);
  return s;
}

TwoParticle product_two_particle(const FieldSpec& spec, const SingleParticle& a, const SingleParticle& b) {
  const auto m = static_cast<Eigen::Index>(spec.size());
  if (a.psi.size() != m || b.psi.size() != m) throw std::invalid_argument("product_two_particle: size mismatch");
  TwoParticle t;
  t.a = a.psi * b.psi.transpose() + b.psi * a.psi.transpose();
  double norm = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      norm += spec.modes.weight[i] * spec.modes.weight[j] * std::norm(t.a(i, j));
    }
  }
  t.a /= std::sqrt(norm);
  return t;
}

cplx wightman_vacuum(const SpacetimePoint& x, const SpacetimePoint& xp, double mass, Dimension dim,
                     double epsilon) {
  check_point(x, dim);
  check_point(xp, dim);
  if (!(epsilon > 0.0)) throw std::invalid_argument("wightman_vacuum: epsilon must be > 0");
  const double dt = x.t - xp.t;
  double r2 = 0.0;
  for (std::size_t a = 0; a < x.x.size(); ++a) r2 += (x.x[a] - xp.x[a]) * (x.x[a] - xp.x[a]);

  if (dim == Dimension::D3p1) {
    if (mass != 0.0) throw std::invalid_argument("wightman_vacuum: 3+1 supports the massless field only");
    if (epsilon < kRegulatorFloor && std::abs(dt * dt - r2) < kRegulatorFloor) {
      throw NullSeparationSingularity("points are null separated and epsilon is below the regulator floor");
    }
    const cplx tau(dt, -epsilon);
    return -1.0 / (4.0 * M_PI * M_PI * (tau * tau - r2));
  }

  if (!(mass > 0.0)) throw std::invalid_argument("wightman_vacuum: 1+1 requires mass > 0 (infrared divergence)");
  const double dx = x.x[0] - xp.x[0];
  // k = m sinh u, dk / omega = du.
  auto integrand = [&](double u) {
    const double w = mass * std::cosh(u);
    const double k = mass * std::sinh(u);
    return std::exp(-w * epsilon) * std::polar(1.0, -w * dt + k * dx) / (4.0 * M_PI);
  };
  return rapidity_integral(integrand, rapidity_cutoff(mass, epsilon));
}

cplx thermal_pullback_3p1(cplx z, double temperature) {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (temperature == 0.0) return -1.0 / (4.0 * M_PI * M_PI * z * z);
  const cplx s = std::sinh(M_PI * temperature * z);
  return -temperature * temperature / (4.0 * s * s);
}

cplx wightman_pullback_inertial(double s, double temperature, double mass, Dimension dim, double epsilon) {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("pullback: epsilon must be > 0");
  if (dim == Dimension::D3p1) {
    if (mass != 0.0) throw std::invalid_argument("pullback: 3+1 supports the massless field only");
    return thermal_pullback_3p1(cplx(s, epsilon), temperature);
  }
  if (!(mass > 0.0)) throw std::invalid_argument("pullback: 1+1 requires mass > 0");
  if (temperature > 0.0 && epsilon * temperature >= 1.0) {
    throw std::invalid_argument("pullback: epsilon must be below 1/T");
  }
  // W(Δt - iε) at Δx = 0 with Δt = -s.
  auto integrand = [&](double u) {
    const double w = mass * std::cosh(u);
    const double n = temperature > 0.0 ? 1.0 / std::expm1(w / temperature) : 0.0;
    const cplx pos = (1.0 + n) * std::exp(-w * epsilon) * std::polar(1.0, w * s);
    const cplx neg = n * std::exp(w * epsilon) * std::polar(1.0, -w * s);
    return (pos + neg) / (4.0 * M_PI);
  };
  double decay = epsilon;
  if (temperature > 0.0) decay = std::min(epsilon, 1.0 / temperature - epsilon);
  return rapidity_integral(integrand, rapidity_cutoff(mass, decay));
}

}  // namespace qtp
