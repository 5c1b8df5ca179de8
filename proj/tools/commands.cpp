#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "json.hpp"
#include "qtp/errors.hpp"
#include "qtp/info_metrics.hpp"
#include "qtp/limits.hpp"
#include "qtp/multi_event.hpp"
#include "qtp/single_event.hpp"
#include "qtp/toy.hpp"

namespace qtp::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(const std::vector<double>& row) {
    if (row.size() != header_.size()) throw std::logic_error("csv row width mismatch");
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "," : "") + format_number(row[i]);
    lines_.push_back(std::move(line));
  }
  void add_raw(std::string line) { lines_.push_back(std::move(line)); }
  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << '\n';
    for (const auto& l : lines_) out << l << '\n';
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> lines_;
};

struct Context {
  Config cfg;
  RunOptions opt;
  Diagnostics diag;
  std::string name;
  json meta = json::object();
};

void write_outputs(Context& ctx, const std::string& command, const Table& table) {
  fs::create_directories(ctx.opt.out_dir);
  table.write(ctx.opt.out_dir / (ctx.name + ".csv"));
  ctx.meta["command"] = command;
  ctx.meta["config"] = ctx.cfg.to_json();
  ctx.meta["warnings"] = ctx.diag.warnings;
  std::ofstream out(ctx.opt.out_dir / (ctx.name + ".meta.json"), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metadata for " + ctx.name);
  out << ctx.meta.dump(2) << '\n';
}

Eigen::Vector3d vector3(Config& c, const std::string& path, const Eigen::Vector3d& fallback) {
  if (!c.has(path)) return fallback;
  const auto v = c.numbers(path);
  if (v.size() != 3) throw ConfigError("'" + path + "' must have three components");
  return {v[0], v[1], v[2]};
}

std::vector<double> trapezoid(const std::vector<double>& axis) {
  if (axis.size() < 2) return std::vector<double>(axis.size(), 1.0);
  const double h = axis[1] - axis[0];
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1]) || std::abs(axis[i] - axis[i - 1] - h) > 1e-9 * std::abs(h)) {
      throw ConfigError("grid axes must be uniform and increasing");
    }
  }
  return numeric::trapezoid_weights(static_cast<int>(axis.size()), h);
}

FieldSpec read_line_field(Config& c) {
  FieldSpec spec = read_field(c, "field");
  if (spec.dim != Dimension::D1p1) throw ConfigError("'field.dimension' must be \"1+1\" for this command");
  if (spec.size() == 0) throw ConfigError("missing required key 'field.grid'");
  return spec;
}

SingleParticle read_packet(Config& c, const std::string& prefix, const FieldSpec& spec) {
  const double dp = c.number(prefix + ".dp");
  if (!(dp > 0.0)) throw ConfigError("'" + prefix + ".dp' must be > 0");
  return gaussian_packet(spec, Eigen::Vector3d(c.number(prefix + ".p0"), 0.0, 0.0), dp,
                         Eigen::Vector3d(c.number_or(prefix + ".x0", 0.0), 0.0, 0.0));
}

FieldState read_state(Config& c, const FieldSpec& spec) {
  const std::string kind = c.string("state.kind");
  if (kind == "vacuum") return Vacuum{};
  if (kind == "gaussian-packet") return read_packet(c, "state", spec);
  if (kind == "two-packets") {
    return product_two_particle(spec, read_packet(c, "state.a", spec), read_packet(c, "state.b", spec));
  }
  throw ConfigError("'state.kind' must be vacuum, gaussian-packet or two-packets");
}

// ---------------------------------------------------------------------------

struct ToaRun {
  ProbabilityGrid conditioned;
  ProbabilityGrid raw;
  PacketSummary summary;
};

ToaRun toa_once(const FieldSpec& spec, double p0, double dp, double x0, const DetectorKernel& kernel,
                double distance, const std::vector<double>& t, double sampling_dt, const ToaOptions& topt,
                Diagnostics& diag) {
  const SingleParticle psi = gaussian_packet(spec, Eigen::Vector3d(p0, 0, 0), dp, Eigen::Vector3d(x0, 0, 0));
  ToaRun r;
  r.summary = summarize_packet(psi, spec, distance);
  r.raw = toa_density(psi, spec, kernel, distance, t, diag, topt);
  if (sampling_dt > 0.0) r.raw = convolve_sampling(r.raw, SamplingFunctions{sampling_dt, 1.0});
  r.conditioned = normalize_conditioned(r.raw, diag);
  return r;
}

int run_toa(Context& ctx) {
  Config& c = ctx.cfg;
  const FieldSpec spec = read_line_field(c);
  if (c.string("state.kind") != "gaussian-packet") throw ConfigError("'state.kind' must be gaussian-packet for toa");
  const double p0 = c.number("state.p0"), dp = c.number("state.dp"), x0 = c.number_or("state.x0", 0.0);
  if (!(dp > 0.0)) throw ConfigError("'state.dp' must be > 0");
  const DetectorKernel kernel = read_kernel(c);
  const double distance = c.number("toa.distance");
  const std::vector<double> t = c.axis("toa.t");
  const double sampling_dt = c.number_or("toa.sampling_dt", 0.0);
  if (sampling_dt < 0.0) throw ConfigError("'toa.sampling_dt' must be >= 0");
  ToaOptions topt;
  topt.threads = ctx.opt.threads;
  topt.check_coverage = c.boolean_or("toa.check_coverage", true);
  const bool convergence = c.boolean_or("toa.convergence_check", true);
  c.finish();

  const ToaRun run = toa_once(spec, p0, dp, x0, kernel, distance, t, sampling_dt, topt, ctx.diag);
  Table table({"t", "density"});
  std::size_t peak = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    table.add({t[i], run.conditioned.values[i]});
    if (run.conditioned.values[i] > run.conditioned.values[peak]) peak = i;
  }
  const auto [mean, var] = grid_mean_variance(run.conditioned);

  json conv = json::object();
  const auto& mb = spec.modes;
  if (convergence && mb.size() >= 32) {
    const MomentumGrid g{mb.k.front()[0], mb.k.back()[0], static_cast<int>(mb.size() / 2)};
    FieldSpec coarse = spec;
    coarse.modes = ModeBasis::line(g);
    Diagnostics quiet;
    const ToaRun other = toa_once(coarse, p0, dp, x0, kernel, distance, t, sampling_dt, topt, quiet);
    const auto w = trapezoid(t);
    double l1 = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = std::abs(other.conditioned.values[i] - run.conditioned.values[i]);
      l1 += w[i] * d;
      max_abs = std::max(max_abs, d);
    }
    conv = {{"reference_points", g.n_points}, {"l1_delta", l1}, {"max_abs_delta", max_abs},
            {"p_det_delta", other.raw.integral() - run.raw.integral()}};
  }
  ctx.meta["convergence"] = conv;
  ctx.meta["clamp"] = {{"clamped_points", run.conditioned.clamped_points}, {"clamp_mass", run.conditioned.clamp_mass}};
  ctx.meta["results"] = {{"p_det", run.conditioned.p_det},
                         {"conditioned_integral", run.conditioned.integral()},
                         {"peak_time", t[peak]},
                         {"classical_arrival", run.summary.arrival_time},
                         {"arrival_spread", run.summary.arrival_spread},
                         {"mean_time", mean},
                         {"variance_time", var}};
  ctx.meta["kernel"] = kernel_json(kernel);
  write_outputs(ctx, "toa", table);
  return 0;
}

// ---------------------------------------------------------------------------

Trajectory read_trajectory(Config& c) {
  const std::string kind = c.string_or("trajectory.kind", "inertial");
  try {
    if (kind == "inertial") return Trajectory::inertial(c.number_or("trajectory.velocity", 0.0));
    if (kind == "accelerated") return Trajectory::accelerated(c.number("trajectory.acceleration"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("'trajectory': ") + e.what());
  }
  throw ConfigError("'trajectory.kind' must be inertial or accelerated");
}

int run_udw(Context& ctx) {
  Config& c = ctx.cfg;
  const Trajectory traj = read_trajectory(c);
  const ThermalBath bath{c.number_or("bath.temperature", 0.0)};
  if (bath.temperature < 0.0) throw ConfigError("'bath.temperature' must be >= 0");
  const std::vector<double> energies = c.axis("udw.energies");
  UdwWindow window;
  if (c.has("udw.window_dt")) {
    window.dt = c.number("udw.window_dt");
    if (!(window.dt > 0.0)) throw ConfigError("'udw.window_dt' must be > 0");
  }
  UdwOptions uopt;
  uopt.angular_nodes = static_cast<int>(c.integer_or("udw.angular_nodes", uopt.angular_nodes));
  uopt.panel_nodes = static_cast<int>(c.integer_or("udw.panel_nodes", uopt.panel_nodes));
  if (uopt.angular_nodes < 2 || uopt.panel_nodes < 2) throw ConfigError("udw node counts must be >= 2");
  c.finish();

  UdwOptions fine = uopt;
  fine.angular_nodes *= 2;
  fine.panel_nodes *= 2;
  const std::size_t n = energies.size();
  std::vector<double> response(n), check(n);
  numeric::parallel_for(2 * n, ctx.opt.threads, [&](std::size_t k) {
    if (k < n) {
      response[k] = udw_response(traj, bath, energies[k], window, uopt);
    } else {
      check[k - n] = udw_response(traj, bath, energies[k - n], window, fine);
    }
  });

  Table table({"energy", "response"});
  double delta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    table.add({energies[i], response[i]});
    delta = std::max(delta, std::abs(check[i] - response[i]));
  }
  // Detailed balance against the effective temperature where ±E pairs exist.
  const double temperature = traj.kind == Trajectory::Kind::UniformAcceleration
                                 ? traj.acceleration / (2.0 * M_PI)
                                 : (traj.velocity == 0.0 ? bath.temperature : 0.0);
  json kms = json::array();
  if (temperature > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(energies[i] > 0.0)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (energies[j] == -energies[i] && response[j] > 0.0) {
          const double ratio = response[i] / response[j];
          kms.push_back({{"energy", energies[i]}, {"ratio", ratio}, {"boltzmann", std::exp(-energies[i] / temperature)}});
        }
      }
    }
  }
  ctx.meta["convergence"] = {{"doubled_nodes_max_abs_delta", delta}};
  ctx.meta["clamp"] = {{"clamped_points", 0}, {"clamp_mass", 0.0}};
  ctx.meta["results"] = {{"effective_temperature", temperature}, {"detailed_balance", kms},
                         {"window_dt", window.infinite() ? json(nullptr) : json(window.dt)}};
  write_outputs(ctx, "udw", table);
  return 0;
}

// ---------------------------------------------------------------------------

int run_glauber(Context& ctx) {
  Config& c = ctx.cfg;
  CoherentPulse pulse;
  if (c.has("pulse.z0")) {
    const auto z = c.numbers("pulse.z0");
    if (z.size() != 2) throw ConfigError("'pulse.z0' must be [re, im]");
    pulse.z0 = cplx(z[0], z[1]);
  }
  pulse.k0 = vector3(c, "pulse.k0", pulse.k0);
  pulse.delta = c.number_or("pulse.delta", pulse.delta);
  if (!(pulse.delta > 0.0)) throw ConfigError("'pulse.delta' must be > 0");
  if (!(pulse.k0.norm() > 0.0)) throw ConfigError("'pulse.k0' must be nonzero");
  const DetectorKernel kernel = read_kernel(c);
  GlauberOptions gopt;
  const std::string mode = c.string_or("glauber.mode", "exact");
  if (mode == "exact") {
    gopt.mode = GlauberMode::Exact;
  } else if (mode == "slowly-varying") {
    gopt.mode = GlauberMode::SlowlyVarying;
  } else {
    throw ConfigError("'glauber.mode' must be exact or slowly-varying");
  }
  gopt.points_per_axis = static_cast<int>(c.integer_or("glauber.points_per_axis", gopt.points_per_axis));
  gopt.span = c.number_or("glauber.span", gopt.span);
  if (gopt.points_per_axis < 4 || !(gopt.span > 0.0)) throw ConfigError("'glauber' grid must have >= 4 points and span > 0");
  gopt.threads = ctx.opt.threads;
  const std::vector<double> times = c.axis("glauber.t");
  const Eigen::Vector3d offset = vector3(c, "glauber.offset", Eigen::Vector3d::Zero());
  const bool sampled = c.has("glauber.sampling");
  SamplingFunctions s;
  if (sampled) {
    s.dt = c.number("glauber.sampling.dt");
    s.dx = c.number("glauber.sampling.dx");
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("'glauber.sampling': ") + e.what());
    }
  }
  const bool convergence = c.boolean_or("glauber.convergence_check", true);
  c.finish();
  pulse.validate(&ctx.diag);
  if (sampled) check_sampling_scales(s, kernel, ctx.diag);

  const Eigen::Vector3d dir = pulse.k0.normalized();
  auto point_at = [&](double t) {
    const Eigen::Vector3d x = offset + dir * t;
    return SpacetimePoint{t, {x[0], x[1], x[2]}};
  };

  std::vector<std::string> header{"t", "x", "y", "z", "p0", "p1", "p2", "total", "rwa", "saddle_p1"};
  if (sampled) header.insert(header.end(), {"p1_sampled", "p2_sampled"});
  Table table(header);
  double p0_cutoff = 0.0;
  for (double t : times) {
    const SpacetimePoint x = point_at(t);
    const GlauberTerms g = glauber_terms(pulse, kernel, x, gopt);
    p0_cutoff = g.p0_cutoff;
    std::vector<double> row{t, x.x[0], x.x[1], x.x[2], g.p0, g.p1, g.p2, g.total(),
                            rwa_density(pulse, kernel, x, gopt), glauber_saddle_p1(pulse, kernel, x)};
    if (sampled) {
      const GlauberTerms a = glauber_terms_averaged(pulse, kernel, x, s, gopt);
      row.push_back(a.p1);
      row.push_back(a.p2);
    }
    table.add(row);
  }

  json conv = json::object();
  if (convergence && !times.empty()) {
    GlauberOptions finer = gopt;
    finer.points_per_axis += 4;
    const SpacetimePoint x = point_at(times.front());
    const double coarse = glauber_terms(pulse, kernel, x, gopt).p1;
    const double fine = glauber_terms(pulse, kernel, x, finer).p1;
    conv = {{"reference_points_per_axis", finer.points_per_axis},
            {"p1_relative_delta", std::abs(fine - coarse) / std::max(std::abs(fine), 1e-300)}};
  }
  ctx.meta["convergence"] = conv;
  ctx.meta["clamp"] = {{"clamped_points", 0}, {"clamp_mass", 0.0}};
  ctx.meta["results"] = {{"p0_cutoff", p0_cutoff}, {"kernel", kernel_json(kernel)}};
  write_outputs(ctx, "glauber", table);
  return 0;
}

// ---------------------------------------------------------------------------

int run_joint(Context& ctx) {
  Config& c = ctx.cfg;
  const FieldSpec spec = read_line_field(c);
  const FieldState state = read_state(c, spec);
  const DetectorKernel kernel = read_kernel(c);
  const double t1 = c.number_or("joint.t1", 0.0), t2 = c.number_or("joint.t2", 0.0);
  const std::vector<double> x1 = c.axis("joint.x1"), x2 = c.axis("joint.x2");
  const bool strict_support = c.boolean_or("joint.strict_support", true);
  c.finish();

  const JointEvaluator one(state, spec, {kernel});
  const JointEvaluator two(state, spec, {kernel, kernel});
  const std::size_t n1 = x1.size(), n2 = x2.size();
  Hierarchy h;
  h.p1.resize(n1);
  h.p1_second.resize(n2);
  h.p2.resize(n1, n2);
  numeric::parallel_for(n1 + n2, ctx.opt.threads, [&](std::size_t k) {
    if (k < n1) {
      h.p1[k] = one.density({SpacetimePoint{t1, {x1[k]}}});
    } else {
      h.p1_second[k - n1] = one.density({SpacetimePoint{t2, {x2[k - n1]}}});
    }
  });
  numeric::parallel_for(n1 * n2, ctx.opt.threads, [&](std::size_t k) {
    h.p2(k / n2, k % n2) = two.density({SpacetimePoint{t1, {x1[k / n2]}}, SpacetimePoint{t2, {x2[k % n2]}}});
  });
  const auto w1 = trapezoid(x1), w2 = trapezoid(x2);
  h.weights = Eigen::Map<const Eigen::VectorXd>(w1.data(), n1);
  h.weights_second = Eigen::Map<const Eigen::VectorXd>(w2.data(), n2);

  Table table({"x1", "x2", "p2", "p1_first", "p1_second"});
  double defect = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      table.add({x1[i], x2[j], h.p2(i, j), h.p1[i], h.p1_second[j]});
      defect = std::max(defect, std::abs(h.p2(i, j) - h.p1[i] * h.p1_second[j]));
      peak = std::max(peak, h.p2(i, j));
    }
  }
  const CorrelationEntropy sc = correlation_entropy(normalized(h), strict_support);
  ctx.meta["convergence"] = json::object();
  ctx.meta["clamp"] = {{"clamped_points", 0}, {"clamp_mass", 0.0}};
  ctx.meta["results"] = {{"factorization_defect", peak > 0.0 ? defect / peak : 0.0},
                         {"correlation_entropy", sc.value},
                         {"excluded_first", sc.excluded_first},
                         {"excluded_second", sc.excluded_second},
                         {"kolmogorov_defect", kolmogorov_defect(h)},
                         {"t1", t1},
                         {"t2", t2}};
  write_outputs(ctx, "joint", table);
  return 0;
}

// ---------------------------------------------------------------------------

int run_entropy(Context& ctx) {
  Config& c = ctx.cfg;
  const FieldSpec spec = read_line_field(c);
  const FieldState state = read_state(c, spec);
  const double t = c.number_or("entropy.t", 0.0);
  const std::vector<double> xs = c.axis("entropy.x");
  const std::vector<double> energies = c.axis("entropy.energies");
  const double tau = c.number("entropy.tau");
  if (!(tau > 0.0)) throw ConfigError("'entropy.tau' must be > 0");
  c.finish();

  const std::size_t nx = xs.size(), ne = energies.size();
  std::vector<DetectionEvaluator> evals;
  for (double e : energies) evals.emplace_back(state, spec, DetectorKernel::gaussian_energy(e, tau));
  std::vector<double> p(nx * ne);
  numeric::parallel_for(nx * ne, ctx.opt.threads,
                        [&](std::size_t k) { p[k] = evals[k % ne].density(SpacetimePoint{t, {xs[k / ne]}}); });
  const auto wx = trapezoid(xs), we = trapezoid(energies);
  std::vector<double> vol(nx * ne);
  numeric::CompensatedSum<double> total;
  for (std::size_t k = 0; k < p.size(); ++k) {
    vol[k] = wx[k / ne] * we[k % ne];
    total.add(vol[k] * p[k]);
  }
  if (!(total.value() > 0.0)) throw ZeroDetection("entropy grid carries no detection mass");
  Table table({"x", "energy", "density", "conditioned"});
  std::vector<double> cond(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    cond[k] = p[k] / total.value();
    table.add({xs[k / ne], energies[k % ne], p[k], cond[k]});
  }

  // Marginals and their Gaussian reference entropies.
  auto marginal = [&](bool along_x) {
    const std::size_t n = along_x ? nx : ne;
    std::vector<double> m(n, 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[along_x ? k / ne : k % ne] += cond[k] * (along_x ? we[k % ne] : wx[k / ne]);
    }
    return m;
  };
  auto axis_summary = [&](const std::vector<double>& m, const std::vector<double>& axis, const std::vector<double>& w) {
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      mean += w[i] * m[i] * axis[i];
      second += w[i] * m[i] * axis[i] * axis[i];
    }
    const double var = second - mean * mean;
    return json{{"entropy", boltzmann_entropy(m, w)},
                {"variance", var},
                {"gaussian_entropy", var > 0.0 ? json(0.5 * std::log(2.0 * M_PI * M_E * var)) : json(nullptr)}};
  };
  ctx.meta["convergence"] = json::object();
  ctx.meta["clamp"] = {{"clamped_points", 0}, {"clamp_mass", 0.0}};
  ctx.meta["results"] = {{"detection_mass", total.value()},
                         {"boltzmann_entropy", boltzmann_entropy(cond, vol)},
                         {"x", axis_summary(marginal(true), xs, wx)},
                         {"energy", axis_summary(marginal(false), energies, we)}};
  write_outputs(ctx, "entropy", table);
  return 0;
}

// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double value;
  double threshold;
  bool pass;
  bool gated = true;
};

int run_verify(Context& ctx) {
  Config& c = ctx.cfg;
  ToyConfig tc;
  tc.coupling = c.number_or("toy.coupling", tc.coupling);
  if (c.has("toy.mode_frequencies")) tc.mode_frequencies = c.numbers("toy.mode_frequencies");
  if (c.has("toy.detector_energies")) tc.detector_energies = c.numbers("toy.detector_energies");
  tc.max_occupation = static_cast<int>(c.integer_or("toy.max_occupation", tc.max_occupation));
  const double t0 = c.number_or("verify.t0", 3.0);
  const double dt = c.number_or("verify.dt", 1.0);
  if (!(dt > 0.0)) throw ConfigError("'verify.dt' must be > 0");
  c.finish();

  ToyModel toy;
  try {
    toy = ToyModel::build(tc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("'toy': ") + e.what());
  }
  const int levels = toy.detector_levels;
  std::vector<Check> checks;
  auto below = [&](const std::string& name, double v, double tol, bool gated = true) {
    checks.push_back({name, v, tol, v < tol, gated});
  };

  const ToyInvariants inv = check_toy(toy);
  below("toy_hermiticity", inv.hermiticity, 1e-12);
  below("projector_completeness", std::max(inv.projector_sum, inv.pi_completeness), 1e-12);
  below("projector_idempotence", inv.projector_idempotent, 1e-12);
  below("free_commutator", inv.commutator_h0_p, 1e-12);

  double oracle = 0.0;
  for (int l = 1; l < levels; ++l) {
    for (double w : {0.5 * dt, dt, 2.0 * dt}) {
      const double a = toy_perturbative_density(toy, l, t0, w);
      const double b = toy_dyson_density(toy, l, t0, w);
      oracle = std::max(oracle, std::abs(a - b) / std::abs(b));
    }
  }
  below("perturbative_vs_dyson", oracle, 1e-8);

  const double tp = 0.25;
  below("propagator_convergence",
        (restricted_propagator(toy, tp, 2048) - restricted_propagator(toy, tp, 1024)).norm(), 1e-6);

  HistoryOptions lo{HistoryMode::LeadingOrder};
  auto history_gap = [&](const ToyModel& m) {
    return ((history_operator(m, 1, 1.0) - history_operator(m, 1, 1.0, lo)) * m.q).norm();
  };
  const ToyModel half = toy.with_coupling(0.5 * tc.coupling);
  const double reduction = history_gap(toy) / history_gap(half);
  checks.push_back({"history_coupling_reduction", reduction, 1.9, reduction >= 1.9});

  double min_eig = 0.0;
  for (int l = 1; l < levels; ++l) {
    for (double t : {t0 - 2.0 * dt, t0, t0 + 2.0 * dt}) {
      const Eigen::MatrixXcd pi = povm_density(toy, l, t, dt);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pi, Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
  }
  checks.push_back({"povm_min_eigenvalue", min_eig, -1e-10, min_eig >= -1e-10});

  PovmOptions plo;
  plo.history.mode = HistoryMode::LeadingOrder;
  const Eigen::MatrixXcd pil = povm_density(toy, 1, t0, dt, plo);
  const double povm_lo = toy.initial.dot(pil * toy.initial).real();
  const double w_lo = toy_perturbative_density(toy, 1, t0, dt);
  below("povm_vs_perturbative", std::abs(povm_lo - w_lo) / w_lo, 1e-6);

  std::vector<int> lambdas;
  for (int l = 1; l < levels; ++l) lambdas.push_back(l);
  std::vector<double> grid;
  for (int i = 0; i <= 24; ++i) grid.push_back(-6.0 * dt + 0.5 * dt * i);
  const NoDetectionResult nd = no_detection_operator(toy, lambdas, grid, dt);
  below("no_detection_completeness", nd.completeness_residual, 1e-8);
  checks.push_back({"no_detection_min_eigenvalue", nd.min_eigenvalue, -1e-6, nd.min_eigenvalue >= -1e-6});
  below("no_detection_max_eigenvalue", nd.max_eigenvalue, 1.0 + 1e-6);
  const NoDetectionResult ndh = no_detection_operator(half, lambdas, grid, dt);
  const double mass_ratio = nd.detection_mass / ndh.detection_mass;
  below("detection_mass_quadratic", std::abs(mass_ratio / 4.0 - 1.0), 0.05);

  const double sigma = measure_coarse_graining_scale(toy, 1, 0.0, 50.0);
  const DecoherenceResult d = decoherence_function(toy, 0.0, 10.0 * sigma, 20.0 * sigma, 1);
  below("decoherence_additivity", std::abs(d.prob_13 - d.prob_12 - d.prob_23 - d.d), 1e-12);
  below("decoherence_ratio", std::abs(d.d) / d.prob_13, 0.05, false);

  Table table({"check", "value", "threshold", "pass", "gated"});
  json report = json::array();
  bool ok = true;
  for (const auto& ch : checks) {
    table.add_raw(ch.name + "," + format_number(ch.value) + "," + format_number(ch.threshold) + "," +
                  (ch.pass ? "1" : "0") + "," + (ch.gated ? "1" : "0"));
    report.push_back({{"check", ch.name}, {"value", ch.value}, {"threshold", ch.threshold},
                      {"pass", ch.pass}, {"gated", ch.gated}});
    if (ch.gated && !ch.pass) ok = false;
  }
  ctx.meta["convergence"] = json::object();
  ctx.meta["results"] = {{"checks", report}, {"coarse_graining_scale", sigma}, {"all_gated_pass", ok}};
  write_outputs(ctx, "verify", table);
  return ok ? 0 : 3;
}

}  // namespace

int run_command(const std::string& command, const RunOptions& opt) {
  Config cfg(toml::table{});
  if (opt.config) {
    cfg = Config::load(*opt.config);
  } else if (command != "verify") {
    throw ConfigError("--config is required for '" + command + "'");
  }
  Context ctx{std::move(cfg), opt, Diagnostics{}, command};
  ctx.diag.strict = opt.strict;
  ctx.name = ctx.cfg.string_or("output.name", command);
  if (ctx.name.empty() || ctx.name.find('/') != std::string::npos) {
    throw ConfigError("'output.name' must be a plain file stem");
  }
  if (command == "toa") return run_toa(ctx);
  if (command == "udw") return run_udw(ctx);
  if (command == "glauber") return run_glauber(ctx);
  if (command == "joint") return run_joint(ctx);
  if (command == "entropy") return run_entropy(ctx);
  if (command == "verify") return run_verify(ctx);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace qtp::cli
