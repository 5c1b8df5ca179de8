#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qtp/info_metrics.hpp"
#include "qtp/limits.hpp"
#include "qtp/multi_event.hpp"
#include "qtp/single_event.hpp"
#include "qtp/toy.hpp"

using namespace qtp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> uniform(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

FieldSpec line_field(double p_min, double p_max, int n) {
  FieldSpec s;
  s.dim = Dimension::D1p1;
  s.mass = 1.0;
  s.modes = ModeBasis::line(MomentumGrid{p_min, p_max, n});
  return s;
}

Outcome oracle_equivalence() {
  const ToyModel toy = ToyModel::standard();
  double worst = 0.0;
  for (int lambda = 1; lambda < toy.detector_levels; ++lambda) {
    for (double dt : {0.5, 1.0, 2.0}) {
      const double w = toy_perturbative_density(toy, lambda, 3.0, dt);
      const double s = toy_dyson_density(toy, lambda, 3.0, dt);
      worst = std::max(worst, std::abs(w - s) / std::abs(s));
    }
  }
  return {worst < 1e-8, "max relative difference " + fmt("%.2e", worst)};
}

Outcome povm_suite() {
  const ToyModel toy = ToyModel::standard();
  double min_eig = 0.0;
  for (int lambda = 1; lambda < toy.detector_levels; ++lambda) {
    for (double t : {0.0, 1.0, 3.0, 5.0}) {
      const Eigen::MatrixXcd pi = povm_density(toy, lambda, t, 1.0);
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(pi, Eigen::EigenvaluesOnly)
                                      .eigenvalues()
                                      .minCoeff());
    }
  }
  const NoDetectionResult nd = no_detection_operator(toy, {1, 2}, uniform(-6.0, 6.0, 25), 1.0);
  const double sigma = measure_coarse_graining_scale(toy, 1, 0.0, 50.0);
  const DecoherenceResult d = decoherence_function(toy, 0.0, 10.0 * sigma, 20.0 * sigma, 1);
  const double ratio = std::abs(d.d) / d.prob_13;
  const bool pass = min_eig >= -1e-10 && nd.completeness_residual <= 1e-8 && ratio < 0.05;
  return {pass, "min eig " + fmt("%.2e", min_eig) + ", completeness " + fmt("%.2e", nd.completeness_residual) +
                    ", sigma " + fmt("%.3f", sigma) + ", |D|/Prob " + fmt("%.3f", ratio)};
}

Outcome time_of_arrival() {
  const FieldSpec s = line_field(1.0, 9.0, 512);
  const SingleParticle psi = gaussian_packet(s, Eigen::Vector3d(5, 0, 0), 0.5);
  const double distance = 50.0;
  const auto t = uniform(40.0, 62.0, 881);
  Diagnostics d;
  const ProbabilityGrid raw = toa_density(psi, s, DetectorKernel::maximal(), distance, t, d);
  const auto ref = oracle::toa_operator_path(psi, s, distance, t);
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    diff += std::abs(raw.values[i] - ref[i]);
    norm += std::abs(ref[i]);
  }
  const ProbabilityGrid c = normalize_conditioned(raw, d);
  const double classical = distance * std::sqrt(26.0) / 5.0;
  const auto peak = std::max_element(c.values.begin(), c.values.end()) - c.values.begin();
  const double shift = std::abs(t[peak] - classical) / classical;
  const double sum = c.integral();
  const bool pass = diff / norm < 1e-6 && std::abs(sum - 1.0) < 1e-6 && shift < 0.02;
  return {pass, "L1 " + fmt("%.2e", diff / norm) + ", integral-1 " + fmt("%.1e", sum - 1.0) + ", peak offset " +
                    fmt("%.4f", shift)};
}

Outcome unruh_dewitt() {
  const auto rest = Trajectory::inertial();
  const double vacuum = std::abs(udw_response(rest, {0.0}, 1.0));
  double balance = 0.0, window = 0.0;
  for (double e : {0.5, 1.0, 2.0}) {
    const double up = udw_response(rest, {1.0}, e), down = udw_response(rest, {1.0}, -e);
    balance = std::max(balance, std::abs(up / down - std::exp(-e)) / std::exp(-e));
    window = std::max(window, std::abs(udw_response(rest, {1.0}, e, {20.0 / e}) - up) / up);
  }
  const bool pass = vacuum < 1e-6 && balance < 1e-3 && window < 1e-2;
  return {pass, "vacuum " + fmt("%.1e", vacuum) + ", KMS " + fmt("%.1e", balance) + ", window " + fmt("%.1e", window)};
}

Outcome glauber_regime() {
  const CoherentPulse pulse;
  const auto kernel = DetectorKernel::gaussian_energy(1.0, 1.0);
  double saddle = 0.0, rwa = 0.0;
  for (double t : {0.0, 5.0, 10.0}) {
    const SpacetimePoint x{t, {0.0, 0.0, t}};
    const GlauberTerms g = glauber_terms(pulse, kernel, x);
    const double sp = glauber_saddle_p1(pulse, kernel, x);
    saddle = std::max(saddle, std::abs(g.p1 - sp) / sp);
    rwa = std::max(rwa, std::abs(rwa_density(pulse, kernel, x) - g.p0 - g.p1));
  }
  bool monotone = true;
  double previous = INFINITY, last = 0.0;
  for (double dt : {1.0, 2.0, 3.0}) {
    const GlauberTerms g = glauber_terms_averaged(pulse, kernel, {0.0, {0.0, 0.0, 0.0}}, {dt, 0.5});
    last = g.p2_magnitude / g.p1;
    monotone = monotone && last < previous;
    previous = last;
  }
  const SpacetimePoint origin{0.0, {0.0, 0.0, 0.0}};
  const auto narrow = DetectorKernel::gaussian_energy(1.0, 0.01);
  const GlauberPoint pt = glauber_point_limit(pulse, origin);
  const double point =
      std::abs(rwa_density(pulse, narrow, origin) - glauber_vacuum_term(narrow).value - pt.state_part) / pt.state_part;
  const bool pass = saddle < 0.05 && monotone && rwa < 1e-8 && point < 0.01;
  return {pass, "saddle " + fmt("%.3f", saddle) + ", P2 monotone " + (monotone ? "yes" : "no") + " (last " +
                    fmt("%.1e", last) + "), rwa " + fmt("%.1e", rwa) + ", point " + fmt("%.1e", point)};
}

Outcome generating_identity() {
  const FieldSpec s = line_field(-4.0, 4.0, 32);
  const auto k = DetectorKernel::gaussian_energy(1.4, 0.6);
  OutcomeSet cells;
  cells.cells = {{{0.0, {-0.8}}, 0.4}, {{0.6, {0.3}}, 0.5}, {{1.1, {1.2}}, 0.3}};
  const std::vector<double> j{0.7, -0.4, 1.1};
  const SingleParticle a = gaussian_packet(s, Eigen::Vector3d(0.5, 0, 0), 0.6);
  const SingleParticle b = gaussian_packet(s, Eigen::Vector3d(-0.5, 0, 0), 0.6, Eigen::Vector3d(1.0, 0, 0));
  double worst = 0.0;
  for (const FieldState& st : std::vector<FieldState>{Vacuum{}, a, product_two_particle(s, a, b)}) {
    const double q = qtp_generating_functional(j, cells, st, s, k).total();
    const double c = ctp_diagonal_generating(rank_one_source(cells, j, k), st, s).total();
    worst = std::max(worst, std::abs(q - c) / std::abs(q));
  }
  return {worst < 1e-8, "max relative difference " + fmt("%.2e", worst)};
}

Outcome cluster_factorization() {
  const FieldSpec s = line_field(-6.0, 6.0, 128);
  const auto k = DetectorKernel::gaussian_energy(1.5, 0.5);
  std::vector<double> defects;
  double sc = 0.0;
  for (double sep : {5.0, 7.0, 9.0}) {
    const SingleParticle a = gaussian_packet(s, Eigen::Vector3d::Zero(), 0.5, Eigen::Vector3d(-0.5 * sep, 0, 0));
    const SingleParticle b = gaussian_packet(s, Eigen::Vector3d::Zero(), 0.5, Eigen::Vector3d(0.5 * sep, 0, 0));
    const FieldState st = product_two_particle(s, a, b);
    const JointEvaluator two(st, s, {k, k});
    const DetectionEvaluator one(st, s, k);
    const SpacetimePoint x1{0.0, {-0.5 * sep}}, x2{0.0, {0.5 * sep}};
    const double p2 = two.density({x1, x2});
    defects.push_back(std::abs(p2 - one.density(x1) * one.density(x2)) / p2);
    if (sep == 5.0) {
      Hierarchy h;
      h.weights = Eigen::VectorXd::Constant(9, 0.5);
      h.weights_second = h.weights;
      h.p1.resize(9);
      h.p1_second.resize(9);
      h.p2.resize(9, 9);
      for (int i = 0; i < 9; ++i) {
        const SpacetimePoint u{0.0, {-4.5 + 0.5 * i}}, v{0.0, {0.5 + 0.5 * i}};
        h.p1[i] = one.density(u);
        h.p1_second[i] = one.density(v);
        for (int jj = 0; jj < 9; ++jj) h.p2(i, jj) = two.density({u, {0.0, {0.5 + 0.5 * jj}}});
      }
      sc = correlation_entropy(normalized(h)).value;
    }
  }
  const bool monotone = defects[1] < defects[0] && defects[2] < defects[1];
  const bool pass = defects[0] < 1e-3 && monotone && std::abs(sc) < 1e-3;
  return {pass, "defects " + fmt("%.1e", defects[0]) + " " + fmt("%.1e", defects[1]) + " " + fmt("%.1e", defects[2]) +
                    ", S_C " + fmt("%.1e", sc)};
}

Outcome info_metrics() {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const int n = 16;
  Hierarchy h;
  h.weights = Eigen::VectorXd::Constant(n, 0.25);
  h.p1.resize(n);
  for (int i = 0; i < n; ++i) h.p1[i] = u(rng);
  h.p1 /= h.p1.dot(h.weights);
  h.p2.resize(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row(n);
    for (int jj = 0; jj < n; ++jj) row[jj] = u(rng);
    h.p2.row(i) = h.p1[i] * row.transpose() / row.dot(h.weights);
  }
  h.p1_second = h.p2.transpose() * h.weights;
  h.weights_second = h.weights;
  const double sq = kolmogorov_defect(h);

  Hierarchy two;
  two.weights = Eigen::VectorXd::Ones(2);
  two.p1 = Eigen::VectorXd::Constant(2, 0.5);
  two.p2 = Eigen::MatrixXd::Zero(2, 2);
  two.p2(0, 0) = two.p2(1, 1) = 0.5;
  const double sc = std::abs(correlation_entropy(two).value - std::log(2.0));

  double sb = 0.0;
  for (double sigma : {0.7, 1.3, 2.0}) {
    const int cells = 256;
    const double w = 16.0 * sigma / cells;
    std::vector<double> p(cells), vol(cells, w);
    for (int i = 0; i < cells; ++i) {
      const double x = -8.0 * sigma + (i + 0.5) * w;
      p[i] = std::exp(-0.5 * x * x / (sigma * sigma)) / (std::sqrt(2.0 * M_PI) * sigma);
    }
    const double expect = 0.5 * std::log(2.0 * M_PI * M_E * sigma * sigma);
    sb = std::max(sb, std::abs(boltzmann_entropy(p, vol) - expect) / std::abs(expect));
  }
  const bool pass = sq <= 1e-10 && sc <= 1e-10 && sb < 0.01;
  return {pass, "S_Q " + fmt("%.1e", sq) + ", S_C-ln2 " + fmt("%.1e", sc) + ", S_B " + fmt("%.1e", sb)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("qtp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::string detail;
  bool pass = true;
  for (const std::string cmd : {"toa", "udw", "glauber"}) {
    std::vector<std::string> bytes;
    for (int threads : {1, 8}) {
      const fs::path out = root / (cmd + std::to_string(threads));
      fs::create_directories(out);
      const std::string line = std::string(QTP_CLI_PATH) + " " + cmd + " --config " + QTP_CONFIG_DIR + "/" + cmd +
                               ".toml --threads " + std::to_string(threads) + " --out " + out.string() +
                               " > /dev/null 2>&1";
      const int status = std::system(line.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        pass = false;
        detail += cmd + " exited abnormally; ";
      }
      bytes.push_back(read_file(out / (cmd + ".csv")));
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    pass = pass && same;
    detail += cmd + (same ? " identical" : " DIFFERS") + (cmd == "glauber" ? "" : ", ");
  }
  fs::remove_all(root);
  return {pass, detail};
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"oracle equivalence", 10.0, oracle_equivalence},
      {"POVM suite", 30.0, povm_suite},
      {"time of arrival", 60.0, time_of_arrival},
      {"Unruh-DeWitt", 60.0, unruh_dewitt},
      {"Glauber regime", 120.0, glauber_regime},
      {"generating functional", 60.0, generating_identity},
      {"cluster factorization", 120.0, cluster_factorization},
      {"info metrics", 10.0, info_metrics},
      {"determinism", 120.0, determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < criteria[i].budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s  %zu %-22s %7.2fs/%4.0fs  %s%s\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name, secs,
                criteria[i].budget_s, o.detail.c_str(), in_time ? "" : " [over budget]");
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
