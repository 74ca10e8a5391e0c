// SPDX-License-Identifier: MIT
#include "riskeig/pia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "riskeig/detail/cw_iterate.hpp"
#include "riskeig/ladder.hpp"

namespace riskeig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DirichletDomain resolve_domain(const DirichletDomain& d, int n, int reference) {
  if (d.members.empty()) return DirichletDomain::prefix(n, reference);
  return DirichletDomain::of(d.members, d.reference_state >= 0 ? d.reference_state : reference);
}

template <class Model>
double action_value(const Model& m, int i, int a, const Eigen::VectorXd& V) {
  double s = 0;
  for (const auto& e : m.row(i, a)) s += V[e.j] * e.w;
  if constexpr (std::is_same_v<Model, DtModel>)
    return std::exp(m.cost[i][a]) * s;
  else
    return s + m.cost[i][a] * V[i];
}

template <class Model>
EigenPair policy_eigenpair_impl(const Model& m, const Policy& v, const DirichletDomain& dom,
                                const DirichletOptions& opts) {
  check_policy(m, v);
  const auto d = resolve_domain(dom, m.num_states(), m.space.reference_state);

  double h = 1.0;
  std::vector<std::vector<double>> ec;
  if constexpr (std::is_same_v<Model, DtModel>) {
    ec.resize(m.num_states());
    for (int i : d.members) {
      ec[i].resize(m.num_actions(i));
      for (int a = 0; a < m.num_actions(i); ++a) ec[i][a] = std::exp(m.cost[i][a]);
    }
  } else {
    h = ct_power_step(m, d);
  }

  detail::CwIterator::Apply apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.setZero();
    for (int i : d.members) {
      const int a = v.action_index[i];
      double s = 0;
      for (const auto& e : m.row(i, a)) s += x[e.j] * e.w;
      if constexpr (std::is_same_v<Model, DtModel>)
        y[i] = ec[i][a] * s;
      else
        y[i] = x[i] + h * (s + m.cost[i][a] * x[i]);
    }
  };
  detail::CwIterator::GapScale gap_scale;
  if constexpr (std::is_same_v<Model, DtModel>)
    gap_scale = [](double lo, double hi) { return (hi - lo) / std::max(1.0, lo); };
  else
    gap_scale = [h](double lo, double hi) { return (hi - lo) / h; };

  detail::CwIterator iter(d.members, d.contains_reference ? d.reference_state : -1, false,
                          opts.support_eps, apply, gap_scale);
  detail::CwState s;
  if (opts.warm_start.size() != 0) {
    if (opts.warm_start.size() != m.num_states())
      throw DimensionMismatch("warm start length mismatch");
    s.psi = opts.warm_start.cwiseMax(0.0);
  }
  if (s.psi.size() == 0 || !(s.psi.maxCoeff() > 0)) {
    s.psi = Eigen::VectorXd::Zero(m.num_states());
    for (int i : d.members) s.psi[i] = 1.0;
  }
  iter.run(s, opts.tol, opts.max_iter);
  if (!s.converged) throw NoConvergence("policy eigenpair iteration exhausted its budget");

  EigenPair out;
  const double mid = 0.5 * (s.ratio_lo + s.ratio_hi);
  if constexpr (std::is_same_v<Model, DtModel>) {
    if (!(mid > 0)) throw DegenerateEigenvector("policy spectral radius vanished on the domain");
    out.rho = std::log(mid);
  } else {
    out.rho = (mid - 1.0) / h;
  }
  out.psi = s.psi;
  out.iterations = s.iterations;
  out.cw_gap = s.gap;
  out.normalized_at_reference = s.normalized_at_reference;
  return out;
}

template <class Model>
Policy improve_impl(const Model& m, const Eigen::VectorXd& V, const Policy& incumbent,
                    const DirichletDomain& dom) {
  check_policy(m, incumbent);
  if (V.size() != m.num_states()) throw DimensionMismatch("eigenfunction length mismatch");
  const auto d = resolve_domain(dom, m.num_states(), m.space.reference_state);
  Policy v = incumbent;
  for (int i : d.members) {
    double best = kInf;
    int best_a = 0;
    for (int a = 0; a < m.num_actions(i); ++a) {
      const double val = action_value(m, i, a, V);
      if (val < best) {
        best = val;
        best_a = a;
      }
    }
    // Anti-cycling: keep the incumbent whenever it already attains the
    // minimum within relative rounding slack.
    const double inc = action_value(m, i, incumbent.action_index[i], V);
    if (inc - best <= 1e-14 * std::max(1.0, std::abs(best)))
      v.action_index[i] = incumbent.action_index[i];
    else
      v.action_index[i] = best_a;
  }
  return v;
}

template <class Model>
Eigen::VectorXd theta_impl(const Model& m, const EigenPair& pair, const Policy& next,
                           const DirichletDomain& dom) {
  check_policy(m, next);
  const auto d = resolve_domain(dom, m.num_states(), m.space.reference_state);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m.num_states());
  for (int i : d.members) {
    const double Vi = pair.psi[i];
    if (!(Vi > 1e-300)) continue;  // no information where the eigenfunction vanishes
    const int a = next.action_index[i];
    double s = 0;
    for (const auto& e : m.row(i, a)) s += pair.psi[e.j] * e.w;
    if constexpr (std::is_same_v<Model, DtModel>) {
      // 1 - exp(c - lambda) (sum V P) / V at the improved action.
      theta[i] = 1.0 - std::exp(m.cost[i][a] - pair.rho) * s / Vi;
    } else {
      theta[i] = pair.rho - m.cost[i][a] - s / Vi;
    }
  }
  return theta;
}

template <class Model>
PiaTrace run_pia_impl(const Model& m, const Policy& init, const PiaConfig& cfg) {
  check_structure(m);
  check_policy(m, init);
  const auto d = resolve_domain(cfg.domain, m.num_states(), m.space.reference_state);
  const auto watch = cfg.watch_set.empty() ? default_watch_set(m.num_states()) : cfg.watch_set;
  std::vector<char> in_domain(m.num_states(), 0);
  for (int i : d.members) in_domain[i] = 1;

  PiaTrace trace;
  Policy v = init;
  EigenPair pair;
  double prev_lambda = kInf;
  std::string reason = "max_iters";

  for (int k = 0; k < cfg.max_iters; ++k) {
    DirichletOptions o = cfg.eig;
    if (k > 0) o.warm_start = pair.psi;
    pair = policy_eigenpair_impl(m, v, d, o);

    Policy next = improve_impl(m, pair.psi, v, d);
    Eigen::VectorXd theta = theta_impl(m, pair, next, d);
    double max_theta = 0;
    for (int i : watch)
      if (i < m.num_states() && in_domain[i]) max_theta = std::max(max_theta, theta[i]);
    int changes = 0;
    for (int i : d.members)
      if (next.action_index[i] != v.action_index[i]) ++changes;

    trace.iterates.push_back({k, pair.rho, max_theta, changes});
    trace.V = pair.psi;
    trace.policy = v;
    trace.theta_final = theta;
    trace.lambda_final = pair.rho;

    if (changes == 0) {
      // Fixed point: the incumbent already minimizes everywhere.
      reason = prev_lambda - pair.rho < cfg.tol_lambda && max_theta < cfg.tol_theta
                   ? "theta_small"
                   : "lambda_stall";
      break;
    }
    if (k > 0 && prev_lambda - pair.rho < cfg.tol_lambda && max_theta < cfg.tol_theta) {
      reason = "theta_small";
      break;
    }
    prev_lambda = pair.rho;
    v = next;
  }
  trace.converged_by = reason;
  return trace;
}

template <class Model>
Model twisted_impl(const Model& m, const Policy& v, const Eigen::VectorXd& V,
                   const DirichletDomain& dom) {
  check_policy(m, v);
  if (V.size() != m.num_states()) throw DimensionMismatch("eigenfunction length mismatch");
  const auto d = resolve_domain(dom, m.num_states(), m.space.reference_state);
  const int nd = d.size();
  std::vector<int> local(m.num_states(), -1);
  for (int k = 0; k < nd; ++k) local[d.members[k]] = k;

  Model out;
  out.space.truncation = nd;
  out.space.closed = true;
  out.space.reference_state = d.contains_reference ? local[d.reference_state] : 0;
  out.action_labels.resize(nd);
  out.kernel.resize(nd);
  out.cost.resize(nd);

  for (int k = 0; k < nd; ++k) {
    const int i = d.members[k];
    const int a = v.action_index[i];
    out.action_labels[k] = {m.action_labels[i][a]};
    out.cost[k] = {m.cost[i][a]};
    KernelRow row;
    if constexpr (std::is_same_v<Model, DtModel>) {
      double denom = 0;
      for (const auto& e : m.row(i, a))
        if (local[e.j] >= 0) denom += V[e.j] * e.w;
      if (!(denom > 0))
        throw ZeroPsi("twisted row has no mass; eigenfunction vanishes on the successors of state " +
                      std::to_string(i));
      for (const auto& e : m.row(i, a))
        if (local[e.j] >= 0 && V[e.j] * e.w > 0) row.push_back({local[e.j], V[e.j] * e.w / denom});
    } else {
      if (!(V[i] > 0)) throw ZeroPsi("eigenfunction vanishes at state " + std::to_string(i));
      double off_sum = 0;
      for (const auto& e : m.row(i, a)) {
        if (e.j == i || local[e.j] < 0) continue;
        const double rate = V[e.j] / V[i] * e.w;
        if (rate > 0) {
          row.push_back({local[e.j], rate});
          off_sum += rate;
        }
      }
      row.push_back({k, -off_sum});
    }
    out.kernel[k] = {std::move(row)};
  }
  return out;
}

}  // namespace

EigenPair policy_eigenpair(const DtModel& m, const Policy& v, const DirichletDomain& d,
                           const DirichletOptions& opts) {
  return policy_eigenpair_impl(m, v, d, opts);
}
EigenPair policy_eigenpair(const CtModel& m, const Policy& v, const DirichletDomain& d,
                           const DirichletOptions& opts) {
  return policy_eigenpair_impl(m, v, d, opts);
}

Policy improve_policy(const DtModel& m, const Eigen::VectorXd& V, const Policy& incumbent,
                      const DirichletDomain& d) {
  return improve_impl(m, V, incumbent, d);
}
Policy improve_policy(const CtModel& m, const Eigen::VectorXd& V, const Policy& incumbent,
                      const DirichletDomain& d) {
  return improve_impl(m, V, incumbent, d);
}

Eigen::VectorXd compute_theta(const DtModel& m, const EigenPair& pair, const Policy& next,
                              const DirichletDomain& d) {
  return theta_impl(m, pair, next, d);
}
Eigen::VectorXd compute_theta(const CtModel& m, const EigenPair& pair, const Policy& next,
                              const DirichletDomain& d) {
  return theta_impl(m, pair, next, d);
}

PiaTrace run_pia(const DtModel& m, const Policy& init, const PiaConfig& cfg) {
  return run_pia_impl(m, init, cfg);
}
PiaTrace run_pia(const CtModel& m, const Policy& init, const PiaConfig& cfg) {
  return run_pia_impl(m, init, cfg);
}

DtModel twisted_kernel(const DtModel& m, const Policy& v, const Eigen::VectorXd& V,
                       const DirichletDomain& d) {
  return twisted_impl(m, v, V, d);
}
CtModel twisted_kernel(const CtModel& m, const Policy& v, const Eigen::VectorXd& V,
                       const DirichletDomain& d) {
  return twisted_impl(m, v, V, d);
}

}  // namespace riskeig
