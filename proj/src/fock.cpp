#include "qtp/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "qtp/errors.hpp"

namespace qtp {

namespace {

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > 1LL << 40) return r;
  }
  return r;
}

int particle_number_of(const FieldState& state) {
  if (std::holds_alternative<SingleParticle>(state)) return 1;
  if (std::holds_alternative<TwoParticle>(state)) return 2;
  if (const auto* f = std::get_if<FixedN>(&state)) return f->n;
  return 0;
}

}  // namespace

FockSpace::FockSpace(int modes, int max_total) : modes_(modes), max_total_(max_total) {
  if (modes < 1) throw std::invalid_argument("FockSpace: need at least one mode");
  if (max_total < 0) throw std::invalid_argument("FockSpace: negative particle cap");
  if (binomial(modes + max_total, max_total) > kMaxDimension) {
    throw DimensionOverflow("truncated Fock space exceeds " + std::to_string(kMaxDimension) + " states");
  }
  std::vector<int> occ(modes, 0);
  std::function<void(int, int)> fill = [&](int j, int left) {
    if (j == modes) {
      index_[occ] = static_cast<int>(basis_.size());
      basis_.push_back(occ);
      return;
    }
    for (int n = 0; n <= left; ++n) {
      occ[j] = n;
      fill(j + 1, left - n);
    }
    occ[j] = 0;
  };
  fill(0, max_total);
}

Eigen::VectorXcd FockSpace::vacuum() const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim());
  v[index_.at(std::vector<int>(modes_, 0))] = 1.0;
  return v;
}

Eigen::VectorXcd FockSpace::annihilate(int j, const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim());
  for (int i = 0; i < dim(); ++i) {
    if (v[i] == cplx(0.0) || basis_[i][j] == 0) continue;
    std::vector<int> occ = basis_[i];
    const double amp = std::sqrt(static_cast<double>(occ[j]));
    occ[j] -= 1;
    out[index_.at(occ)] += amp * v[i];
  }
  return out;
}

Eigen::VectorXcd FockSpace::create(int j, const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim());
  for (int i = 0; i < dim(); ++i) {
    if (v[i] == cplx(0.0)) continue;
    std::vector<int> occ = basis_[i];
    const int total = std::accumulate(occ.begin(), occ.end(), 0);
    if (total >= max_total_) continue;
    occ[j] += 1;
    out[index_.at(occ)] += std::sqrt(static_cast<double>(occ[j])) * v[i];
  }
  return out;
}

Eigen::VectorXcd FockSpace::apply_leg(int a, const Eigen::VectorXcd& v) const {
  return a < modes_ ? annihilate(a, v) : create(a - modes_, v);
}

Eigen::VectorXcd FockSpace::apply_field(const Eigen::VectorXcd& legs, Coupling coupling,
                                        const Eigen::VectorXcd& v) const {
  const int m = modes_;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim());
  if (coupling == Coupling::Linear) {
    for (int a = 0; a < 2 * m; ++a) {
      if (legs[a] != cplx(0.0)) out += legs[a] * apply_leg(a, v);
    }
    return out;
  }
  // :phi²: = sum v^A_i v^A_j a_i a_j + 2 v^C_i v^A_j a_i^† a_j + v^C_i v^C_j a_i^† a_j^†.
  std::vector<Eigen::VectorXcd> ann(m);
  for (int j = 0; j < m; ++j) ann[j] = annihilate(j, v);
  Eigen::VectorXcd lowered = Eigen::VectorXcd::Zero(dim());
  for (int j = 0; j < m; ++j) lowered += legs[j] * ann[j];
  for (int i = 0; i < m; ++i) {
    out += legs[i] * annihilate(i, lowered);
    out += 2.0 * legs[m + i] * create(i, lowered);
  }
  Eigen::VectorXcd raised = Eigen::VectorXcd::Zero(dim());
  for (int j = 0; j < m; ++j) raised += legs[m + j] * create(j, v);
  for (int i = 0; i < m; ++i) out += legs[m + i] * create(i, raised);
  return out;
}

Eigen::MatrixXcd FockSpace::annihilator_matrix(int j) const {
  Eigen::MatrixXcd a(dim(), dim());
  for (int i = 0; i < dim(); ++i) a.col(i) = annihilate(j, Eigen::VectorXcd::Unit(dim(), i));
  return a;
}

Eigen::VectorXcd FockSpace::state_vector(const FieldState& state, const FieldSpec& spec) const {
  if (static_cast<int>(spec.size()) != modes_) throw std::invalid_argument("FockSpace: mode count mismatch");
  validate_state(state, spec);
  Eigen::VectorXd sw(modes_);
  for (int j = 0; j < modes_; ++j) sw[j] = std::sqrt(spec.modes.weight[j]);
  const Eigen::VectorXcd vac = vacuum();

  auto one = [&](const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim());
    for (int j = 0; j < modes_; ++j) out += sw[j] * psi[j] * create(j, vac);
    return out;
  };
  auto two = [&](const Eigen::MatrixXcd& a) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim());
    for (int j = 0; j < modes_; ++j) {
      const Eigen::VectorXcd cj = create(j, vac);
      for (int i = 0; i < modes_; ++i) out += sw[i] * sw[j] * a(i, j) * create(i, cj);
    }
    return Eigen::VectorXcd(out / std::sqrt(2.0));
  };

  if (const auto* s = std::get_if<SingleParticle>(&state)) return one(s->psi);
  if (const auto* t = std::get_if<TwoParticle>(&state)) return two(t->a);
  if (const auto* f = std::get_if<FixedN>(&state)) {
    if (f->n == 1) return one(f->amplitude.col(0));
    if (f->n == 2) return two(f->amplitude);
    return vac;
  }
  if (const auto* c = std::get_if<Coherent>(&state)) {
    const Eigen::VectorXcd zd = sw.cwiseProduct(c->z);
    Eigen::VectorXcd out(dim());
    for (int i = 0; i < dim(); ++i) {
      cplx amp = std::exp(-0.5 * zd.squaredNorm());
      for (int j = 0; j < modes_; ++j) {
        const int n = basis_[i][j];
        amp *= std::pow(zd[j], n) / std::sqrt(std::tgamma(n + 1.0));
      }
      out[i] = amp;
    }
    return out;
  }
  return vac;
}

int exact_fock_cap(int particle_number, int field_factors) { return particle_number + field_factors / 2; }

cplx fock_oracle_correlator(const std::vector<SpacetimePoint>& points_T,
                            const std::vector<SpacetimePoint>& points_Tstar, const FieldState& state,
                            const FieldSpec& spec, Coupling coupling, int max_total) {
  if (points_T.size() != points_Tstar.size()) {
    throw std::invalid_argument("fock_oracle_correlator: argument lists differ in length");
  }
  spec.validate();
  const int copies = coupling == Coupling::Linear ? 1 : 2;
  const int factors = static_cast<int>(2 * points_T.size()) * copies;
  if (max_total < 0) {
    if (std::holds_alternative<Coherent>(state)) {
      throw std::invalid_argument("fock_oracle_correlator: coherent states need an explicit particle cap");
    }
    max_total = exact_fock_cap(particle_number_of(state), factors);
  }
  const FockSpace space(static_cast<int>(spec.size()), max_total);
  const Eigen::VectorXcd psi = space.state_vector(state, spec);

  const std::size_t n = points_T.size();
  std::vector<std::size_t> order_T(n), order_Ts(n);
  std::iota(order_T.begin(), order_T.end(), 0);
  std::iota(order_Ts.begin(), order_Ts.end(), 0);
  std::stable_sort(order_T.begin(), order_T.end(), [&](std::size_t a, std::size_t b) {
    if (points_T[a].t != points_T[b].t) return points_T[a].t > points_T[b].t;
    return a > b;
  });
  std::stable_sort(order_Ts.begin(), order_Ts.end(), [&](std::size_t a, std::size_t b) {
    if (points_Tstar[a].t != points_Tstar[b].t) return points_Tstar[a].t < points_Tstar[b].t;
    return a < b;
  });
  // Operator string, leftmost first.
  std::vector<Eigen::VectorXcd> ops;
  for (std::size_t i : order_Ts) ops.push_back(field_legs(spec, points_Tstar[i]));
  for (std::size_t i : order_T) ops.push_back(field_legs(spec, points_T[i]));

  Eigen::VectorXcd v = psi;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) v = space.apply_field(*it, coupling, v);
  return psi.dot(v);
}

}  // namespace qtp
