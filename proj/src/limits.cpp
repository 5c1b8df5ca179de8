#include "qtp/limits.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "qtp/correlator.hpp"
#include "qtp/errors.hpp"

namespace qtp {

Trajectory Trajectory::inertial(double v) {
  Trajectory t;
  t.velocity = v;
  t.validate();
  return t;
}

Trajectory Trajectory::accelerated(double a) {
  Trajectory t;
  t.kind = Kind::UniformAcceleration;
  t.acceleration = a;
  t.validate();
  return t;
}

void Trajectory::validate() const {
  if (kind == Kind::Inertial) {
    if (!(std::abs(velocity) < 1.0)) throw std::invalid_argument("trajectory: |v| must be < 1");
  } else if (!(acceleration > 0.0)) {
    throw std::invalid_argument("trajectory: acceleration must be > 0");
  }
}

Eigen::Vector4d Trajectory::position(double tau) const {
  if (kind == Kind::Inertial) {
    const double g = 1.0 / std::sqrt(1.0 - velocity * velocity);
    return {g * tau, g * velocity * tau, 0.0, 0.0};
  }
  const double a = acceleration;
  return {std::sinh(a * tau) / a, std::cosh(a * tau) / a, 0.0, 0.0};
}

Eigen::Vector4d Trajectory::four_velocity(double tau) const {
  if (kind == Kind::Inertial) {
    const double g = 1.0 / std::sqrt(1.0 - velocity * velocity);
    return {g, g * velocity, 0.0, 0.0};
  }
  return {std::cosh(acceleration * tau), std::sinh(acceleration * tau), 0.0, 0.0};
}

namespace {

// ω n(ω) for a Bose occupation at temperature T, finite at ω = 0.
double omega_occupation(double w, double temperature) {
  if (temperature <= 0.0) return 0.0;
  if (w == 0.0) return temperature;
  return w / std::expm1(w / temperature);
}

SpacetimePoint to_point(const Eigen::Vector4d& x) { return {x[0], {x[1], x[2], x[3]}}; }

}  // namespace

cplx udw_pullback(const Trajectory& traj, const ThermalBath& bath, double tau, double s, double epsilon) {
  traj.validate();
  if (bath.temperature > 0.0) {
    if (traj.kind != Trajectory::Kind::Inertial) {
      throw NonStationaryConfiguration("heated bath with an accelerated detector");
    }
    if (traj.velocity != 0.0) throw std::invalid_argument("udw_pullback: heated bath requires a detector at rest");
    return thermal_pullback_3p1(cplx(s, epsilon), bath.temperature);
  }
  return wightman_vacuum(to_point(traj.position(tau - 0.5 * s)), to_point(traj.position(tau + 0.5 * s)), 0.0,
                         Dimension::D3p1, epsilon);
}

double udw_response(const Trajectory& traj, const ThermalBath& bath, double energy, const UdwWindow& window,
                    const UdwOptions& opt) {
  traj.validate();
  if (!std::isfinite(energy)) throw std::invalid_argument("udw_response: energy must be finite");
  if (bath.temperature < 0.0) throw std::invalid_argument("udw_response: temperature must be >= 0");
  if (!(window.dt > 0.0)) throw std::invalid_argument("udw_response: window width must be > 0");

  double temperature = bath.temperature;
  double v = 0.0;
  if (traj.kind == Trajectory::Kind::UniformAcceleration) {
    if (bath.temperature > 0.0) throw NonStationaryConfiguration("heated bath with an accelerated detector");
    temperature = traj.acceleration / (2.0 * M_PI);
  } else {
    v = traj.velocity;
  }
  const double gamma = 1.0 / std::sqrt(1.0 - v * v);

  // Response at fixed Doppler factor D = γ(1 - v cos θ); the full answer is
  // (1/2)∫dcosθ of this.
  std::function<double(double)> at_doppler;
  if (window.infinite()) {
    at_doppler = [&](double d) {
      const double w = std::abs(energy) / d;
      const double spectral = energy > 0.0 ? omega_occupation(w, temperature) : w + omega_occupation(w, temperature);
      return spectral / (2.0 * M_PI * d);
    };
  } else {
    const double dt = window.dt;
    const double lo = std::max(0.0, std::abs(energy) - opt.window_widths / dt);
    const double hi = std::abs(energy) + opt.window_widths / dt;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) * dt * 2.0)));
    numeric::QuadratureRule rule;
    for (int p = 0; p < panels; ++p) {
      const auto r = numeric::gauss_legendre(opt.panel_nodes, lo + (hi - lo) * p / panels,
                                             lo + (hi - lo) * (p + 1) / panels);
      rule.nodes.insert(rule.nodes.end(), r.nodes.begin(), r.nodes.end());
      rule.weights.insert(rule.weights.end(), r.weights.begin(), r.weights.end());
    }
    const auto window_ft = [dt](double nu) { return std::sqrt(2.0 * M_PI) * dt * std::exp(-0.5 * nu * nu * dt * dt); };
    at_doppler = [&, rule, window_ft](double d) {
      numeric::CompensatedSum<double> acc;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = rule.nodes[i];
        const double dn = d * omega_occupation(u / d, temperature);
        acc.add(rule.weights[i] * ((u + dn) * window_ft(energy + u) + dn * window_ft(energy - u)));
      }
      return acc.value() / (4.0 * M_PI * M_PI * d * d);
    };
  }

  if (v == 0.0) return at_doppler(1.0);
  const auto rule = numeric::gauss_legendre(opt.angular_nodes, -1.0, 1.0);
  numeric::CompensatedSum<double> acc;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc.add(rule.weights[i] * at_doppler(gamma * (1.0 - v * rule.nodes[i])));
  }
  return 0.5 * acc.value();
}

// ---------------------------------------------------------------------------

void CoherentPulse::validate(Diagnostics* diag) const {
  if (!(delta > 0.0)) throw std::invalid_argument("pulse: spectral width must be > 0");
  if (!k0.allFinite()) throw std::invalid_argument("pulse: k0 must be finite");
  if (diag && k0.norm() < 3.0 * delta) {
    diag->warn("SaddleValidity", "|k0| < 3 Δ; the saddle-point form is unreliable");
  }
}

FieldSpec glauber_field(const CoherentPulse& pulse, const GlauberOptions& opt) {
  pulse.validate();
  if (opt.points_per_axis < 16) throw std::invalid_argument("glauber: points_per_axis must be >= 16");
  if (!(opt.span > 0.0)) throw std::invalid_argument("glauber: span must be > 0");
  const double half = opt.span * pulse.delta;
  const MomentumGrid gx{pulse.k0[0] - half, pulse.k0[0] + half, opt.points_per_axis};
  const MomentumGrid gy{pulse.k0[1] - half, pulse.k0[1] + half, opt.points_per_axis};
  const MomentumGrid gz{pulse.k0[2] - half, pulse.k0[2] + half, opt.points_per_axis};
  FieldSpec spec;
  spec.dim = Dimension::D3p1;
  spec.mass = 0.0;
  spec.modes = ModeBasis::box(gx, gy, gz, 1e-9 * std::max(1.0, pulse.k0.norm()));
  return spec;
}

Coherent pulse_state(const CoherentPulse& pulse, const FieldSpec& spec) {
  pulse.validate();
  const double d2 = pulse.delta * pulse.delta;
  const cplx amp = pulse.z0 * std::pow(2.0 * M_PI, 1.5) * std::pow(2.0 * M_PI * d2, -1.5);
  Coherent c;
  c.z.resize(static_cast<Eigen::Index>(spec.size()));
  for (std::size_t j = 0; j < spec.size(); ++j) {
    c.z[j] = amp * std::exp(-(spec.modes.k[j] - pulse.k0).squaredNorm() / (2.0 * d2));
  }
  return c;
}

VacuumTerm glauber_vacuum_term(const DetectorKernel& kernel) {
  kernel.validate();
  const auto radial = [&](double w) {
    return w * kernel_fourier(kernel, Eigen::Vector4d(w, 0.0, 0.0, w), Dimension::D3p1) / (4.0 * M_PI * M_PI);
  };
  const auto integrate = [&](const std::vector<double>& edges) {
    numeric::CompensatedSum<double> acc;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const auto r = numeric::gauss_legendre(16, edges[i], edges[i + 1]);
      for (std::size_t j = 0; j < r.nodes.size(); ++j) acc.add(r.weights[j] * radial(r.nodes[j]));
    }
    return acc.value();
  };

  VacuumTerm out;
  switch (kernel.family) {
    case KernelFamily::MaximalLocalization:
      throw QuadratureDivergence("vacuum floor diverges for a maximal localization kernel");
    case KernelFamily::TabulatedOnShell:
      out.value = integrate(kernel.table_p);
      out.cutoff = kernel.table_p.back();
      return out;
    case KernelFamily::GaussianEnergy: {
      const double width = 1.0 / kernel.tau;
      auto edges_to = [&](double cutoff) {
        const int panels = static_cast<int>(std::ceil(cutoff / (0.25 * width)));
        std::vector<double> e(panels + 1);
        for (int i = 0; i <= panels; ++i) e[i] = cutoff * i / panels;
        return e;
      };
      double cutoff = std::max(kernel.e0, 0.0) + 8.0 * width;
      double value = integrate(edges_to(cutoff));
      for (int iter = 0; iter < 20; ++iter) {
        const double next = integrate(edges_to(2.0 * cutoff));
        if (std::abs(next - value) <= 1e-12 * std::abs(next)) {
          out.value = next;
          out.cutoff = cutoff;
          return out;
        }
        value = next;
        cutoff *= 2.0;
      }
      throw QuadratureDivergence("vacuum floor did not settle up to cutoff " + std::to_string(cutoff));
    }
  }
  return out;
}

namespace {

struct PulseAmplitudes {
  Eigen::VectorXcd a;  ///< sqrt(w_j) z_j v_j(x)
  std::vector<Eigen::Vector4d> k;
};

PulseAmplitudes pulse_amplitudes(const CoherentPulse& pulse, const FieldSpec& spec, const SpacetimePoint& x) {
  const Coherent c = pulse_state(pulse, spec);
  const Eigen::VectorXcd v = field_legs(spec, x);
  const auto m = static_cast<Eigen::Index>(spec.size());
  PulseAmplitudes out;
  out.a.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) out.a[j] = std::sqrt(spec.modes.weight[j]) * c.z[j] * v[j];
  out.k.resize(spec.size());
  for (std::size_t j = 0; j < spec.size(); ++j) out.k[j] = spec.four_momentum(j);
  return out;
}

double frozen_kernel(const CoherentPulse& pulse, const DetectorKernel& kernel) {
  const Eigen::Vector4d k0(pulse.k0.norm(), pulse.k0[0], pulse.k0[1], pulse.k0[2]);
  return kernel_fourier(kernel, k0, Dimension::D3p1);
}

// Row-parallel pair sums with a fixed reduction order.
GlauberTerms pair_sums(const PulseAmplitudes& pa, const CoherentPulse& pulse, const DetectorKernel& kernel,
                       const SamplingFunctions* s, const GlauberOptions& opt) {
  const std::size_t m = pa.k.size();
  const bool frozen = opt.mode == GlauberMode::SlowlyVarying;
  const double r0 = frozen ? frozen_kernel(pulse, kernel) : 0.0;
  std::vector<cplx> row1(m), row2(m);
  numeric::parallel_for(m, opt.threads, [&](std::size_t j) {
    numeric::CompensatedSum<cplx> acc1, acc2;
    for (std::size_t l = 0; l < m; ++l) {
      const Eigen::Vector4d diff = pa.k[j] - pa.k[l];
      const Eigen::Vector4d sum = pa.k[j] + pa.k[l];
      double r1 = frozen ? r0 : kernel_fourier(kernel, 0.5 * sum, Dimension::D3p1);
      double r2 = frozen ? r0 : kernel_fourier(kernel, -0.5 * diff, Dimension::D3p1);
      if (s) {
        r1 *= std::exp(-0.25 * (s->dt * s->dt * diff[0] * diff[0] + s->dx * s->dx * diff.tail<3>().squaredNorm()));
        r2 *= std::exp(-0.25 * (s->dt * s->dt * sum[0] * sum[0] + s->dx * s->dx * sum.tail<3>().squaredNorm()));
      }
      if (r1 != 0.0) acc1.add(r1 * pa.a[j] * std::conj(pa.a[l]));
      if (r2 != 0.0) acc2.add(r2 * pa.a[j] * pa.a[l]);
    }
    row1[j] = acc1.value();
    row2[j] = acc2.value();
  });
  GlauberTerms t;
  const cplx p1 = numeric::compensated_sum(row1);
  const cplx p2 = numeric::compensated_sum(row2);
  t.p1 = p1.real();
  t.p2 = 2.0 * p2.real();
  t.p2_magnitude = 2.0 * std::abs(p2);
  return t;
}

GlauberTerms glauber_impl(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x,
                          const SamplingFunctions* s, const GlauberOptions& opt) {
  kernel.validate();
  check_point(x, Dimension::D3p1);
  const FieldSpec spec = glauber_field(pulse, opt);
  GlauberTerms t = pair_sums(pulse_amplitudes(pulse, spec, x), pulse, kernel, s, opt);
  const VacuumTerm vac = glauber_vacuum_term(kernel);
  t.p0 = vac.value;
  t.p0_cutoff = vac.cutoff;
  return t;
}

}  // namespace

GlauberTerms glauber_terms(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x,
                           const GlauberOptions& opt) {
  return glauber_impl(pulse, kernel, x, nullptr, opt);
}

GlauberTerms glauber_terms_averaged(const CoherentPulse& pulse, const DetectorKernel& kernel,
                                    const SpacetimePoint& x, const SamplingFunctions& s, const GlauberOptions& opt) {
  if (s.dt < 0.0 || s.dx < 0.0) throw std::invalid_argument("sampling widths must be >= 0");
  return glauber_impl(pulse, kernel, x, &s, opt);
}

double glauber_saddle_p1(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x) {
  pulse.validate();
  check_point(x, Dimension::D3p1);
  const double w0 = pulse.k0.norm();
  if (!(w0 > 0.0)) throw std::invalid_argument("saddle: k0 must be nonzero");
  const Eigen::Vector3d pos(x.x[0], x.x[1], x.x[2]);
  const Eigen::Vector3d offset = pos - pulse.k0 / w0 * x.t;
  return std::norm(pulse.z0) * frozen_kernel(pulse, kernel) *
         std::exp(-pulse.delta * pulse.delta * offset.squaredNorm()) / (2.0 * w0);
}

double rwa_density(const CoherentPulse& pulse, const DetectorKernel& kernel, const SpacetimePoint& x,
                   const GlauberOptions& opt) {
  kernel.validate();
  check_point(x, Dimension::D3p1);
  const FieldSpec spec = glauber_field(pulse, opt);
  const PulseAmplitudes pa = pulse_amplitudes(pulse, spec, x);
  const double p0 = glauber_vacuum_term(kernel).value;
  const cplx total_amp = pa.a.sum();

  if (opt.mode == GlauberMode::SlowlyVarying) return p0 + frozen_kernel(pulse, kernel) * std::norm(total_amp);
  switch (kernel.family) {
    case KernelFamily::MaximalLocalization:
      return p0 + kernel.amplitude * std::norm(total_amp);
    case KernelFamily::GaussianEnergy: {
      // exp(-τ²X²) = π^{-1/2} ∫dη e^{-η²} e^{2iητX} with X = (ω + ω')/2 - e0
      // splits the pair sum into products of single sums.
      const auto gh = numeric::gauss_hermite(opt.hermite_nodes);
      const Eigen::VectorXd w = spec.energies();
      numeric::CompensatedSum<double> acc;
      for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        const double b = gh.nodes[i] * kernel.tau;
        cplx plus = 0.0, minus = 0.0;
        for (Eigen::Index j = 0; j < pa.a.size(); ++j) {
          plus += pa.a[j] * std::polar(1.0, b * w[j]);
          minus += std::conj(pa.a[j]) * std::polar(1.0, b * w[j]);
        }
        acc.add(gh.weights[i] * (std::polar(1.0, -2.0 * b * kernel.e0) * plus * minus).real());
      }
      return p0 + kernel.amplitude * acc.value() / std::sqrt(M_PI);
    }
    case KernelFamily::TabulatedOnShell:
      break;
  }
  return p0 + pair_sums(pa, pulse, kernel, nullptr, opt).p1;
}

GlauberPoint glauber_point_limit(const CoherentPulse& pulse, const SpacetimePoint& x, const GlauberOptions& opt) {
  check_point(x, Dimension::D3p1);
  const FieldSpec spec = glauber_field(pulse, opt);
  const PulseAmplitudes pa = pulse_amplitudes(pulse, spec, x);
  GlauberPoint out;
  out.state_part = std::norm(pa.a.sum());
  for (const auto& k : spec.modes.k) out.cutoff = std::max(out.cutoff, k.norm());
  out.vacuum_part = out.cutoff * out.cutoff / (8.0 * M_PI * M_PI);
  return out;
}

}  // namespace qtp
