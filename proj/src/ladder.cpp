// SPDX-License-Identifier: MIT
#include "riskeig/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "riskeig/pia.hpp"
#include "riskeig/rng.hpp"
#include "riskeig/verify.hpp"

namespace riskeig {

std::vector<int> default_watch_set(int num_states) {
  std::vector<int> w(std::min(32, num_states));
  for (int i = 0; i < static_cast<int>(w.size()); ++i) w[i] = i;
  return w;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<int> rung_schedule(int truncation, const std::vector<int>& requested) {
  if (!requested.empty()) {
    int prev = 0;
    for (int n : requested) {
      if (n <= prev) throw MalformedModel("rung sizes must be strictly increasing");
      if (n > truncation) throw MalformedModel("rung size exceeds the truncation");
      prev = n;
    }
    return requested;
  }
  std::vector<int> rungs;
  for (int n = 16; n < truncation; n *= 2) rungs.push_back(n);
  rungs.push_back(truncation);
  return rungs;
}

template <class Model>
EigenPair solve_rung(const Model& m, const DirichletDomain& d, const DirichletOptions& o) {
  if constexpr (std::is_same_v<Model, DtModel>)
    return dt_dirichlet_eigenpair(m, d, o);
  else
    return ct_dirichlet_eigenpair(m, d, o);
}

template <class Model>
double policy_value(const Model& m, int i, int a, const Eigen::VectorXd& psi) {
  double s = 0;
  for (const auto& e : m.row(i, a)) s += psi[e.j] * e.w;
  if constexpr (std::is_same_v<Model, DtModel>)
    return std::exp(m.cost[i][a]) * s;
  else
    return s + m.cost[i][a] * psi[i];
}

// Sampled stand-in for the optimal value: minimum policy eigenvalue over 64
// seeded random policies plus the greedy selector at a constant eigenfunction.
// It can only overestimate the optimum, which keeps the tail-cost check
// conservative.
template <class Model>
double sampled_lambda_proxy(const Model& m, const DirichletDomain& d) {
  const int n = m.num_states();
  std::vector<Policy> pool;
  CounterRng rng(0x51ADDE5ULL, 0);
  for (int k = 0; k < 64; ++k) {
    Policy v;
    v.action_index.resize(n);
    for (int i = 0; i < n; ++i)
      v.action_index[i] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m.num_actions(i)));
    pool.push_back(std::move(v));
  }
  {
    Policy greedy;
    greedy.action_index.resize(n);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < m.num_actions(i); ++a) {
        const double val = policy_value(m, i, a, ones);
        if (val < best) {
          best = val;
          best_a = a;
        }
      }
      greedy.action_index[i] = best_a;
    }
    pool.push_back(std::move(greedy));
  }
  double proxy = std::numeric_limits<double>::infinity();
  DirichletOptions o;
  o.tol = 1e-9;
  for (const auto& v : pool) {
    try {
      proxy = std::min(proxy, policy_eigenpair(m, v, d, o).rho);
    } catch (const Error&) {
      // Degenerate sampled policies contribute nothing to the proxy.
    }
  }
  return proxy;
}

template <class Model>
SolveReport ladder_impl(const Model& m, const LadderConfig& cfg) {
  check_structure(m);
  const int n = m.num_states();
  const int i0 = m.space.reference_state;
  const auto watch = cfg.watch_set.empty() ? default_watch_set(n) : cfg.watch_set;
  const auto rungs = rung_schedule(n, cfg.rungs);

  SolveReport rep;
  Eigen::VectorXd prev_psi;
  double prev_rho = 0;
  bool have_prev = false;
  bool stabilized = false;
  bool ref_ever = false;
  EigenPair pair;
  int final_size = 0;

  for (int size : rungs) {
    DirichletDomain d = DirichletDomain::prefix(size, i0);
    DirichletOptions o = cfg.dirichlet;
    if (have_prev) o.warm_start = prev_psi;
    pair = solve_rung(m, d, o);
    final_size = size;
    rep.rungs.push_back({size, pair.rho, pair.iterations, pair.cw_gap});
    if (pair.normalized_at_reference)
      ref_ever = true;
    else
      rep.warnings.push_back("rung " + std::to_string(size) +
                             " normalized by max norm; eigenfunction vanishes at the reference state");
    if (have_prev) {
      double dpsi = 0;
      for (int i : watch)
        if (i < n) dpsi = std::max(dpsi, std::abs(pair.psi[i] - prev_psi[i]));
      if (std::abs(pair.rho - prev_rho) < cfg.tol_rho && dpsi < cfg.tol_rho) {
        stabilized = true;
        break;
      }
    }
    prev_psi = pair.psi;
    prev_rho = pair.rho;
    have_prev = true;
  }

  if (!ref_ever) throw ReferenceUnreachable("eigenfunction vanished at the reference state on every rung");
  if (cfg.near_monotone && !pair.normalized_at_reference)
    throw ReferenceUnreachable("near-monotone mode requires reference normalization on the final rung");

  rep.lambda = pair.rho;
  rep.psi = pair.psi;
  // Stabilization across rungs; a closed model solved on its full window is
  // exact by construction, and a single rung has nothing to compare against.
  rep.converged = stabilized || rungs.size() == 1 || (final_size == n && m.space.closed);

  const auto eval = interior_eval_states(m, final_size, watch);
  if (eval.empty()) {
    rep.residual = kNan;
    rep.warnings.push_back("no interior watch states; residual not evaluated");
  } else {
    rep.residual = eigen_residual(m, rep.lambda, rep.psi, eval);
  }

  if (cfg.near_monotone) {
    const double proxy =
        cfg.lambda_m_hint ? *cfg.lambda_m_hint
                          : sampled_lambda_proxy(m, DirichletDomain::prefix(final_size, i0));
    rep.lambda_m_proxy = proxy;
    // The ladder is only trustworthy where the cost eventually dominates the
    // optimal value; check the visible tail.
    const int tail_start = std::max(1, (3 * final_size) / 4);
    double tail_inf = std::numeric_limits<double>::infinity();
    for (int i = tail_start; i < final_size; ++i) {
      double mc = std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.num_actions(i); ++a) mc = std::min(mc, m.cost[i][a]);
      tail_inf = std::min(tail_inf, mc);
    }
    if (!(tail_inf > proxy))
      rep.warnings.push_back("tail cost does not exceed the sampled value proxy; "
                             "near-monotone margin not visible at this truncation");
    if (!eval.empty()) rep.supersolution_residual = supersolution_excess(m, rep.lambda, rep.psi, eval);
  }
  return rep;
}

template <class Model>
Policy extract_policy_impl(const Model& m, const Eigen::VectorXd& psi) {
  check_structure(m);
  if (psi.size() != m.num_states()) throw DimensionMismatch("eigenfunction length mismatch");
  if (!(psi.maxCoeff() > 0)) throw ZeroPsi("eigenfunction carries no mass");
  Policy v;
  v.action_index.resize(m.num_states());
  for (int i = 0; i < m.num_states(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < m.num_actions(i); ++a) {
      const double val = policy_value(m, i, a, psi);
      if (val < best) {
        best = val;
        best_a = a;
      }
    }
    v.action_index[i] = best_a;
  }
  return v;
}

}  // namespace

SolveReport solve_ladder(const DtModel& m, const LadderConfig& cfg) { return ladder_impl(m, cfg); }
SolveReport solve_ladder(const CtModel& m, const LadderConfig& cfg) { return ladder_impl(m, cfg); }

Policy extract_policy(const DtModel& m, const Eigen::VectorXd& psi) {
  return extract_policy_impl(m, psi);
}
Policy extract_policy(const CtModel& m, const Eigen::VectorXd& psi) {
  return extract_policy_impl(m, psi);
}

SolveReport solve_near_monotone(const DtModel& m, LadderConfig cfg) {
  cfg.near_monotone = true;
  return ladder_impl(m, cfg);
}
SolveReport solve_near_monotone(const CtModel& m, LadderConfig cfg) {
  cfg.near_monotone = true;
  return ladder_impl(m, cfg);
}

}  // namespace riskeig
