// SPDX-License-Identifier: MIT
#include "riskeig/model.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace riskeig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void note(ValidationReport& r, int i, int a, const std::string& what, double margin) {
  r.violations.push_back({i, a, what, margin});
  r.passed = false;
}

void track_margin(ValidationReport& r, double margin) {
  r.worst_margin = std::min(r.worst_margin, margin);
}

template <class Model>
void check_structure_common(const Model& m) {
  const int n = m.space.truncation;
  if (n <= 0) throw MalformedModel("truncation must be positive");
  if (m.space.reference_state < 0 || m.space.reference_state >= n)
    throw MalformedModel("reference state outside the truncation");
  if (static_cast<int>(m.kernel.size()) != n || static_cast<int>(m.cost.size()) != n ||
      static_cast<int>(m.action_labels.size()) != n)
    throw DimensionMismatch("kernel/cost/label tables must have one row per state");
  for (int i = 0; i < n; ++i) {
    const auto na = m.kernel[i].size();
    if (na == 0) throw MalformedModel("state " + std::to_string(i) + " has no actions");
    if (m.cost[i].size() != na || m.action_labels[i].size() != na)
      throw DimensionMismatch("cost/label arity mismatch at state " + std::to_string(i));
    for (const auto& row : m.kernel[i])
      for (const auto& e : row)
        if (e.j < 0 || e.j >= n)
          throw MalformedModel("transition target outside the truncation at state " +
                               std::to_string(i));
  }
}

}  // namespace

void check_structure(const DtModel& m) { check_structure_common(m); }
void check_structure(const CtModel& m) { check_structure_common(m); }

void check_policy(const DtModel& m, const Policy& v) {
  if (static_cast<int>(v.action_index.size()) != m.num_states())
    throw InvalidPolicy("policy length does not match the truncation");
  for (int i = 0; i < m.num_states(); ++i)
    if (v.action_index[i] < 0 || v.action_index[i] >= m.num_actions(i))
      throw InvalidPolicy("action index out of range at state " + std::to_string(i));
}

void check_policy(const CtModel& m, const Policy& v) {
  if (static_cast<int>(v.action_index.size()) != m.num_states())
    throw InvalidPolicy("policy length does not match the truncation");
  for (int i = 0; i < m.num_states(); ++i)
    if (v.action_index[i] < 0 || v.action_index[i] >= m.num_actions(i))
      throw InvalidPolicy("action index out of range at state " + std::to_string(i));
}

ValidationReport validate_model(const DtModel& m) {
  check_structure(m);
  ValidationReport r;
  r.worst_margin = kInf;
  for (int i = 0; i < m.num_states(); ++i) {
    for (int a = 0; a < m.num_actions(i); ++a) {
      for (const auto& e : m.row(i, a))
        if (!(e.w > 0)) note(r, i, a, "nonpositive_probability", e.w);
      const double s = m.row_sum(i, a);
      track_margin(r, 1.0 + kMassTol - s);
      if (s > 1.0 + kMassTol) note(r, i, a, "row_mass_exceeds_one", 1.0 + kMassTol - s);
      if (m.space.closed) {
        const double dev = std::abs(s - 1.0);
        track_margin(r, kMassTol - dev);
        if (dev > kMassTol) note(r, i, a, "row_not_stochastic", kMassTol - dev);
      }
      if (!(m.cost[i][a] >= 0)) note(r, i, a, "negative_cost", m.cost[i][a]);
    }
  }
  return r;
}

ValidationReport validate_model(const CtModel& m) {
  check_structure(m);
  ValidationReport r;
  r.worst_margin = kInf;
  for (int i = 0; i < m.num_states(); ++i) {
    for (int a = 0; a < m.num_actions(i); ++a) {
      bool saw_diag = false;
      for (const auto& e : m.row(i, a)) {
        if (e.j == i) {
          saw_diag = true;
          if (e.w > 0) note(r, i, a, "positive_diagonal_rate", -e.w);
        } else if (!(e.w > 0)) {
          note(r, i, a, "nonpositive_offdiagonal_rate", e.w);
        }
      }
      (void)saw_diag;  // a missing diagonal entry simply means rate zero
      const double s = m.row_sum(i, a);
      // Positive row sum would create mass; negative is killing, allowed only
      // for open models.
      track_margin(r, kMassTol - s);
      if (s > kMassTol) note(r, i, a, "row_creates_mass", kMassTol - s);
      if (m.space.closed) {
        const double dev = std::abs(s);
        track_margin(r, kMassTol - dev);
        if (dev > kMassTol) note(r, i, a, "row_not_conservative", kMassTol - dev);
      }
      if (!(m.cost[i][a] >= 0)) note(r, i, a, "negative_cost", m.cost[i][a]);
    }
  }
  return r;
}

namespace {

// sup_a sum_j V(j) w(j|i,a); killed mass contributes zero, which only helps
// the drift inequality.
template <class Model>
double worst_drift(const Model& m, const Eigen::VectorXd& V, int i) {
  double worst = -kInf;
  for (int a = 0; a < m.num_actions(i); ++a) {
    double s = 0;
    for (const auto& e : m.row(i, a)) s += V[e.j] * e.w;
    worst = std::max(worst, s);
  }
  return worst;
}

template <class Model>
double max_cost(const Model& m, int i) {
  double c = -kInf;
  for (int a = 0; a < m.num_actions(i); ++a) c = std::max(c, m.cost[i][a]);
  return c;
}

template <class Model, class Cert>
void check_cert_shape(const Model& m, const Cert& cert) {
  if (cert.V.size() != m.num_states()) throw DimensionMismatch("certificate V length mismatch");
  if (cert.mode == LyapunovMode::NormLike && cert.ell.size() != m.num_states())
    throw DimensionMismatch("certificate ell length mismatch");
  for (int k : cert.K)
    if (k < 0 || k >= m.num_states()) throw MalformedModel("exception set outside the truncation");
}

template <class Model, class Cert>
void check_norm_like_proxy(const Model& m, const Cert& cert, ValidationReport& r) {
  // Norm-like proxy on a finite window: ell - max_a c nondecreasing past the
  // declared tail index.
  double prev = -kInf;
  for (int i = std::max(0, cert.tail_index); i < m.num_states(); ++i) {
    const double g = cert.ell[i] - max_cost(m, i);
    if (g < prev - 1e-12) {
      note(r, i, -1, "norm_like_proxy_not_increasing", g - prev);
      return;
    }
    prev = g;
  }
}

}  // namespace

ValidationReport check_lyapunov(const DtModel& m, const LyapunovCertDt& cert) {
  check_structure(m);
  check_cert_shape(m, cert);
  ValidationReport r;
  r.worst_margin = kInf;
  std::vector<char> inK(m.num_states(), 0);
  for (int k : cert.K) inK[k] = 1;

  for (int i = 0; i < m.num_states(); ++i)
    if (!(cert.V[i] >= 1.0)) note(r, i, -1, "V_below_one", cert.V[i] - 1.0);

  if (cert.mode == LyapunovMode::DriftRate) {
    if (!(cert.beta > 0 && cert.beta < 1)) {
      note(r, -1, -1, "beta_out_of_range", 0);
      return r;
    }
    // Multiplicative ergodicity needs the cost dominated by the drift rate.
    const double gamma = -std::log1p(-cert.beta);
    for (int i = 0; i < m.num_states(); ++i) {
      const double mc = max_cost(m, i);
      track_margin(r, gamma - mc);
      if (!(mc < gamma)) note(r, i, -1, "cost_exceeds_drift_rate", gamma - mc);
    }
    for (int i = 0; i < m.num_states(); ++i) {
      const double lhs = worst_drift(m, cert.V, i);
      const double rhs = (1.0 - cert.beta) * cert.V[i] + (inK[i] ? cert.C_hat : 0.0);
      const double margin = rhs - lhs;
      track_margin(r, margin);
      if (margin < -1e-12) note(r, i, -1, "drift_bound", margin);
    }
  } else {
    for (int i = 0; i < m.num_states(); ++i)
      if (!(cert.ell[i] >= 0)) note(r, i, -1, "ell_negative", cert.ell[i]);
    for (int i = 0; i < m.num_states(); ++i) {
      const double lhs = worst_drift(m, cert.V, i);
      const double rhs = std::exp(-cert.ell[i]) * cert.V[i] + (inK[i] ? cert.C_hat : 0.0);
      const double margin = rhs - lhs;
      track_margin(r, margin);
      if (margin < -1e-12) note(r, i, -1, "drift_bound", margin);
    }
    check_norm_like_proxy(m, cert, r);
  }
  return r;
}

ValidationReport check_lyapunov(const CtModel& m, const LyapunovCertCt& cert) {
  check_structure(m);
  check_cert_shape(m, cert);
  ValidationReport r;
  r.worst_margin = kInf;
  std::vector<char> inK(m.num_states(), 0);
  for (int k : cert.K) inK[k] = 1;

  for (int i = 0; i < m.num_states(); ++i)
    if (!(cert.V[i] >= 1.0)) note(r, i, -1, "V_below_one", cert.V[i] - 1.0);

  if (cert.mode == LyapunovMode::DriftRate) {
    if (!(cert.gamma > 0)) {
      note(r, -1, -1, "gamma_not_positive", cert.gamma);
      return r;
    }
    for (int i = 0; i < m.num_states(); ++i) {
      const double mc = max_cost(m, i);
      track_margin(r, cert.gamma - mc);
      if (!(mc < cert.gamma)) note(r, i, -1, "cost_exceeds_drift_rate", cert.gamma - mc);
    }
    for (int i = 0; i < m.num_states(); ++i) {
      const double lhs = worst_drift(m, cert.V, i);
      const double rhs = -cert.gamma * cert.V[i] + (inK[i] ? cert.C_hat : 0.0);
      const double margin = rhs - lhs;
      track_margin(r, margin);
      if (margin < -1e-12) note(r, i, -1, "drift_bound", margin);
    }
  } else {
    for (int i = 0; i < m.num_states(); ++i)
      if (!(cert.ell[i] >= 0)) note(r, i, -1, "ell_negative", cert.ell[i]);
    for (int i = 0; i < m.num_states(); ++i) {
      const double lhs = worst_drift(m, cert.V, i);
      const double rhs = -cert.ell[i] * cert.V[i] + (inK[i] ? cert.C_hat : 0.0);
      const double margin = rhs - lhs;
      track_margin(r, margin);
      if (margin < -1e-12) note(r, i, -1, "drift_bound", margin);
    }
    check_norm_like_proxy(m, cert, r);
  }

  if (cert.explosion) {
    const auto& ex = *cert.explosion;
    if (ex.V_tilde.size() != m.num_states())
      throw DimensionMismatch("explosion certificate length mismatch");
    for (int i = 0; i < m.num_states(); ++i) {
      const double lhs = worst_drift(m, ex.V_tilde, i);
      const double margin = ex.C0 * ex.V_tilde[i] + ex.C2 - lhs;
      track_margin(r, margin);
      if (margin < -1e-12) note(r, i, -1, "explosion_drift_bound", margin);
      const double rate_margin = ex.C1 * ex.V_tilde[i] - m.total_rate(i);
      track_margin(r, rate_margin);
      if (rate_margin < -1e-12) note(r, i, -1, "explosion_rate_bound", rate_margin);
    }
  }
  return r;
}

namespace {

// Edge i -> j present under every action (with j != i for rate matrices).
template <class Model>
std::vector<std::vector<int>> all_action_edges(const Model& m, bool skip_diagonal) {
  const int n = m.num_states();
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> hits(n, 0);
    for (int a = 0; a < m.num_actions(i); ++a)
      for (const auto& e : m.row(i, a))
        if (e.w > 0 && !(skip_diagonal && e.j == i)) ++hits[e.j];
    for (int j = 0; j < n; ++j)
      if (hits[j] == m.num_actions(i)) adj[i].push_back(j);
  }
  return adj;
}

template <class Model>
ValidationReport reachability_impl(const Model& m, Reachability variant, int small_set_state,
                                   bool skip_diagonal) {
  check_structure(m);
  ValidationReport r;
  r.worst_margin = kInf;
  const int n = m.num_states();
  const int i0 = m.space.reference_state;

  switch (variant) {
    case Reachability::FullSupportFromReference: {
      for (int a = 0; a < m.num_actions(i0); ++a) {
        std::vector<double> mass(n, 0);
        for (const auto& e : m.row(i0, a)) mass[e.j] += e.w;
        for (int j = 0; j < n; ++j) {
          if (j == i0) continue;
          track_margin(r, mass[j]);
          if (!(mass[j] > 0)) note(r, j, a, "not_charged_from_reference", 0);
        }
      }
      break;
    }
    case Reachability::PathCondition: {
      auto adj = all_action_edges(m, skip_diagonal);
      std::vector<char> seen(n, 0);
      std::deque<int> q{i0};
      seen[i0] = 1;
      while (!q.empty()) {
        const int i = q.front();
        q.pop_front();
        for (int j : adj[i])
          if (!seen[j]) {
            seen[j] = 1;
            q.push_back(j);
          }
      }
      for (int j = 0; j < n; ++j)
        if (!seen[j]) note(r, j, -1, "unreachable_under_some_policy", 0);
      break;
    }
    case Reachability::PiaSmallSet: {
      const int z = small_set_state < 0 ? i0 : small_set_state;
      if (z < 0 || z >= n) throw MalformedModel("small-set state outside the truncation");
      for (int i = 0; i < n; ++i) {
        if (i == z && skip_diagonal) continue;
        double inf_mass = kInf;
        for (int a = 0; a < m.num_actions(i); ++a) {
          double mass = 0;
          for (const auto& e : m.row(i, a))
            if (e.j == z) mass += e.w;
          inf_mass = std::min(inf_mass, mass);
        }
        track_margin(r, inf_mass);
        if (!(inf_mass > 0)) note(r, i, -1, "small_set_not_hit", 0);
      }
      break;
    }
  }
  return r;
}

}  // namespace

ValidationReport check_reachability(const DtModel& m, Reachability variant, int small_set_state) {
  return reachability_impl(m, variant, small_set_state, /*skip_diagonal=*/false);
}

ValidationReport check_reachability(const CtModel& m, Reachability variant, int small_set_state) {
  return reachability_impl(m, variant, small_set_state, /*skip_diagonal=*/true);
}

}  // namespace riskeig
