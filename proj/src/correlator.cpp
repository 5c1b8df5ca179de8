#include "qtp/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "qtp/errors.hpp"

namespace qtp {

namespace {

cplx frob(const Eigen::Ref<const Eigen::MatrixXcd>& a, const Eigen::Ref<const Eigen::MatrixXcd>& b) {
  return a.cwiseProduct(b).sum();
}

Eigen::VectorXd sqrt_weights(const FieldSpec& spec) {
  Eigen::VectorXd w(spec.size());
  for (std::size_t j = 0; j < spec.size(); ++j) w[j] = std::sqrt(spec.modes.weight[j]);
  return w;
}

}  // namespace

Eigen::VectorXcd field_legs(const FieldSpec& spec, const SpacetimePoint& x) {
  check_point(x, spec.dim);
  const auto m = static_cast<Eigen::Index>(spec.size());
  const int d = spatial_dims(spec.dim);
  const double norm = std::pow(2.0 * M_PI, d);
  Eigen::VectorXcd v(2 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = spec.energy(j);
    double phase = -w * x.t;
    for (int a = 0; a < d; ++a) phase += spec.modes.k[j][a] * x.x[a];
    const double amp = std::sqrt(spec.modes.weight[j] / (norm * 2.0 * w)) * std::exp(-0.5 * spec.epsilon * w);
    v[j] = std::polar(amp, phase);
    v[m + j] = std::conj(v[j]);
  }
  return v;
}

StateMoments state_moments(const FieldState& state, const FieldSpec& spec) {
  const auto m = static_cast<Eigen::Index>(spec.size());
  StateMoments out;
  out.modes = spec.size();
  out.m2 = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
  const Eigen::VectorXd sw = sqrt_weights(spec);

  auto set_one_body = [&](const Eigen::MatrixXcd& rho) {
    // rho[p, r] = <a_p^† a_r>; symmetric placement in the CA and AC blocks.
    out.m2.block(m, 0, m, m) = rho;
    out.m2.block(0, m, m, m) = rho.transpose();
  };
  auto single = [&](const Eigen::VectorXcd& psi) {
    out.gaussian = false;
    out.particle_number = 1;
    const Eigen::VectorXcd pd = sw.cwiseProduct(psi);
    set_one_body(pd.conjugate() * pd.transpose());
  };
  auto pair = [&](const Eigen::MatrixXcd& a) {
    out.gaussian = false;
    out.particle_number = 2;
    out.two_body = sw.asDiagonal() * a * sw.asDiagonal();
    set_one_body(2.0 * out.two_body.conjugate() * out.two_body.transpose());
  };

  validate_state(state, spec);
  if (const auto* s = std::get_if<SingleParticle>(&state)) {
    single(s->psi);
  } else if (const auto* c = std::get_if<Coherent>(&state)) {
    const Eigen::VectorXcd zd = sw.cwiseProduct(c->z);
    out.m1.resize(2 * m);
    out.m1 << zd, zd.conjugate();
    out.m2 = out.m1 * out.m1.transpose();
  } else if (const auto* t = std::get_if<TwoParticle>(&state)) {
    pair(t->a);
  } else if (const auto* f = std::get_if<FixedN>(&state)) {
    if (f->n == 1) single(f->amplitude.col(0));
    if (f->n == 2) pair(f->amplitude);
  }
  return out;
}

cplx ordered_product_expectation(const std::vector<std::vector<Eigen::VectorXcd>>& groups,
                                 const StateMoments& mom) {
  const auto m = static_cast<Eigen::Index>(mom.modes);
  std::vector<Eigen::VectorXcd> legs;
  std::vector<int> group_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& v : groups[g]) {
      if (v.size() != 2 * m) throw std::invalid_argument("leg vector size does not match state");
      legs.push_back(v);
      group_of.push_back(static_cast<int>(g));
    }
  }
  const int n = static_cast<int>(legs.size());

  // Vacuum contraction <O_i O_j> for i before j: only a_k a_k^† survives.
  Eigen::MatrixXcd contraction = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) contraction(i, j) = legs[i].head(m).cwiseProduct(legs[j].tail(m)).sum();
  }

  Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(n);
  Eigen::MatrixXcd pair2 = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd cc, aa;
  if (mom.gaussian && mom.m1.size() > 0) {
    for (int i = 0; i < n; ++i) mean[i] = (legs[i].transpose() * mom.m1)(0);
  }
  if (!mom.gaussian) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) pair2(i, j) = (legs[i].transpose() * mom.m2 * legs[j])(0);
    }
    if (mom.particle_number == 2) {
      const Eigen::MatrixXcd abar = mom.two_body.conjugate();
      cc.resize(n, n);
      aa.resize(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          cc(i, j) = (legs[i].tail(m).transpose() * abar * legs[j].tail(m))(0);
          aa(i, j) = (legs[i].head(m).transpose() * mom.two_body * legs[j].head(m))(0);
        }
      }
    }
  }
  const bool has_mean = mom.gaussian && mom.m1.size() > 0;
  const int max_unmatched = mom.gaussian ? (has_mean ? n : 0) : 2 * mom.particle_number;

  auto moment = [&](const std::vector<int>& s) -> cplx {
    if (s.empty()) return 1.0;
    if (mom.gaussian) {
      cplx p = 1.0;
      for (int i : s) p *= mean[i];
      return p;
    }
    if (s.size() == 2) return pair2(s[0], s[1]);
    if (s.size() == 4 && mom.particle_number == 2) {
      // Choose which two legs carry creation operators.
      static const int choices[6][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2},
                                        {1, 2, 0, 3}, {1, 3, 0, 2}, {2, 3, 0, 1}};
      cplx sum = 0.0;
      for (const auto& c : choices) sum += cc(s[c[0]], s[c[1]]) * aa(s[c[2]], s[c[3]]);
      return 2.0 * sum;
    }
    return 0.0;
  };

  std::vector<char> used(n, 0);
  std::vector<int> unmatched;
  numeric::CompensatedSum<cplx> total;
  std::function<void(int, cplx)> recurse = [&](int i, cplx weight) {
    while (i < n && used[i]) ++i;
    if (i == n) {
      total.add(weight * moment(unmatched));
      return;
    }
    used[i] = 1;
    if (static_cast<int>(unmatched.size()) < max_unmatched) {
      unmatched.push_back(i);
      recurse(i + 1, weight);
      unmatched.pop_back();
    }
    for (int j = i + 1; j < n; ++j) {
      if (used[j] || group_of[j] == group_of[i]) continue;
      used[j] = 1;
      recurse(i + 1, weight * contraction(i, j));
      used[j] = 0;
    }
    used[i] = 0;
  };
  recurse(0, 1.0);
  return total.value();
}

cplx balanced_correlator(const std::vector<SpacetimePoint>& points_T,
                         const std::vector<SpacetimePoint>& points_Tstar, const FieldState& state,
                         const FieldSpec& spec, Coupling coupling, CorrelatorPath path) {
  if (points_T.size() != points_Tstar.size()) {
    throw std::invalid_argument("balanced_correlator: T and T* argument lists differ in length");
  }
  if (points_T.size() > 3) throw UnsupportedOrder("balanced_correlator supports n <= 3");
  spec.validate();
  const StateMoments mom = state_moments(state, spec);
  if (path == CorrelatorPath::Wick && !mom.gaussian) {
    throw NonGaussianState("Wick pairing requested for a fixed particle number state");
  }
  const std::size_t n = points_T.size();
  std::vector<std::size_t> order_T(n), order_Ts(n);
  std::iota(order_T.begin(), order_T.end(), 0);
  std::iota(order_Ts.begin(), order_Ts.end(), 0);
  // T: latest leftmost. T*: earliest leftmost.
  std::stable_sort(order_T.begin(), order_T.end(), [&](std::size_t a, std::size_t b) {
    if (points_T[a].t != points_T[b].t) return points_T[a].t > points_T[b].t;
    return a > b;
  });
  std::stable_sort(order_Ts.begin(), order_Ts.end(), [&](std::size_t a, std::size_t b) {
    if (points_Tstar[a].t != points_Tstar[b].t) return points_Tstar[a].t < points_Tstar[b].t;
    return a < b;
  });
  const int copies = coupling == Coupling::Linear ? 1 : 2;
  std::vector<std::vector<Eigen::VectorXcd>> groups;
  for (std::size_t i : order_Ts) groups.emplace_back(copies, field_legs(spec, points_Tstar[i]));
  for (std::size_t i : order_T) groups.emplace_back(copies, field_legs(spec, points_T[i]));
  return ordered_product_expectation(groups, mom);
}

cplx leg_pair_expectation(const Eigen::MatrixXcd& c, const StateMoments& mom) {
  const auto m = static_cast<Eigen::Index>(mom.modes);
  return c.block(0, m, m, m).trace() + frob(c, mom.m2);
}

cplx leg_quad_expectation(const Eigen::MatrixXcd& c1, const Eigen::MatrixXcd& c2, const StateMoments& mom) {
  const auto m = static_cast<Eigen::Index>(mom.modes);
  const auto AC = [m](const Eigen::MatrixXcd& x) { return x.block(0, m, m, m); };
  const auto CA = [m](const Eigen::MatrixXcd& x) { return x.block(m, 0, m, m); };
  const auto AA = [m](const Eigen::MatrixXcd& x) { return x.block(0, 0, m, m); };
  const auto CC = [m](const Eigen::MatrixXcd& x) { return x.block(m, m, m, m); };

  const cplx g1 = AC(c1).trace();
  const cplx g2 = AC(c2).trace();
  cplx total = frob(AC(c1), CA(c2)) + frob(AC(c1), AC(c2).transpose()) + g1 * g2;

  const bool has_m2 = mom.m2.size() > 0 && mom.m2.cwiseAbs().maxCoeff() > 0.0;
  if (has_m2) {
    const Eigen::MatrixXcd& m2 = mom.m2;
    total += frob(c1.topRows(m), c2.bottomRows(m) * m2);
    total += frob(c1.topRows(m), c2.rightCols(m).transpose() * m2);
    total += g1 * frob(c2, m2) + g2 * frob(c1, m2);
    total += frob(c1.rightCols(m), m2 * c2.topRows(m).transpose());
    total += frob(c1.rightCols(m), m2 * c2.leftCols(m));
  }

  if (mom.gaussian && mom.m1.size() > 0) {
    total += (mom.m1.transpose() * c1 * mom.m1)(0) * (mom.m1.transpose() * c2 * mom.m1)(0);
  } else if (!mom.gaussian && mom.particle_number == 2) {
    const Eigen::MatrixXcd& a = mom.two_body;
    const Eigen::MatrixXcd abar = a.conjugate();
    cplx m4 = frob(CA(c1), abar * CA(c2) * a);
    m4 += frob(CA(c1), abar * AC(c2).transpose() * a);
    m4 += frob(CC(c1), abar) * frob(AA(c2), a);
    m4 += frob(AA(c1), a) * frob(CC(c2), abar);
    m4 += frob(AC(c1), a * CA(c2).transpose() * abar);
    m4 += frob(AC(c1), a * AC(c2) * abar);
    total += 2.0 * m4;
  }
  return total;
}

}  // namespace qtp
