// SPDX-License-Identifier: MIT
#include "riskeig/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskeig/detail/cw_iterate.hpp"

namespace riskeig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative stopping gap for the multiplicative (DT) ratios.
double dt_gap(double lo, double hi) { return (hi - lo) / std::max(1.0, lo); }

Eigen::VectorXd ones_on(const std::vector<int>& members, int n) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (int i : members) v[i] = 1.0;
  return v;
}

Eigen::VectorXd start_vector(const DirichletOptions& opts, const std::vector<int>& members,
                             int n) {
  if (opts.warm_start.size() == 0) return ones_on(members, n);
  if (opts.warm_start.size() != n) throw DimensionMismatch("warm start length mismatch");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  double mx = 0;
  for (int i : members) {
    v[i] = std::max(0.0, opts.warm_start[i]);
    mx = std::max(mx, v[i]);
  }
  if (!(mx > 0)) return ones_on(members, n);
  // A strictly zero warm section never regrows under a purely multiplicative
  // map; seed it at a negligible level instead.
  for (int i : members)
    if (v[i] == 0) v[i] = 1e-8 * mx;
  return v;
}

// Precomputed exp(cost) table for the DT operator.
std::vector<std::vector<double>> exp_cost(const DtModel& m) {
  std::vector<std::vector<double>> ec(m.num_states());
  for (int i = 0; i < m.num_states(); ++i) {
    ec[i].resize(m.num_actions(i));
    for (int a = 0; a < m.num_actions(i); ++a) ec[i][a] = std::exp(m.cost[i][a]);
  }
  return ec;
}

struct DtOp {
  const DtModel& m;
  const std::vector<int>& members;
  std::vector<std::vector<double>> ec;
  const Policy* frozen = nullptr;  // non-null: linear operator of that policy

  void operator()(const Eigen::VectorXd& psi, Eigen::VectorXd& w) const {
    w.setZero();
    for (int i : members) {
      if (frozen) {
        const int a = frozen->action_index[i];
        double s = 0;
        for (const auto& e : m.row(i, a)) s += psi[e.j] * e.w;
        w[i] = ec[i][a] * s;
        continue;
      }
      double best = kInf;
      for (int a = 0; a < m.num_actions(i); ++a) {
        double s = 0;
        for (const auto& e : m.row(i, a)) s += psi[e.j] * e.w;
        best = std::min(best, ec[i][a] * s);
      }
      w[i] = best;
    }
  }
};

struct CtOp {
  const CtModel& m;
  const std::vector<int>& members;
  double h;
  const Policy* frozen = nullptr;

  // One step of the damped rates map: min_a [(I + h (Q_a + diag(c_a))) psi].
  void operator()(const Eigen::VectorXd& psi, Eigen::VectorXd& w) const {
    w.setZero();
    for (int i : members) {
      if (frozen) {
        const int a = frozen->action_index[i];
        double s = 0;
        for (const auto& e : m.row(i, a)) s += psi[e.j] * e.w;
        w[i] = psi[i] + h * (s + m.cost[i][a] * psi[i]);
        continue;
      }
      double best = kInf;
      for (int a = 0; a < m.num_actions(i); ++a) {
        double s = 0;
        for (const auto& e : m.row(i, a)) s += psi[e.j] * e.w;
        best = std::min(best, psi[i] + h * (s + m.cost[i][a] * psi[i]));
      }
      w[i] = best;
    }
  }
};

// Greedy selector at psi over the domain; off-domain states keep action 0.
template <class Model, class Value>
Policy greedy_policy(const Model& m, const std::vector<int>& members, const Eigen::VectorXd& psi,
                     Value value) {
  Policy v;
  v.action_index.assign(m.num_states(), 0);
  for (int i : members) {
    double best = kInf;
    int best_a = 0;
    for (int a = 0; a < m.num_actions(i); ++a) {
      const double val = value(i, a, psi);
      if (val < best) {
        best = val;
        best_a = a;
      }
    }
    v.action_index[i] = best_a;
  }
  return v;
}

void validate_domain(const DirichletDomain& d, int n) {
  if (d.members.empty()) throw MalformedModel("empty domain");
  int prev = -1;
  for (int i : d.members) {
    if (i < 0 || i >= n) throw MalformedModel("domain member outside the truncation");
    if (i <= prev) throw MalformedModel("domain members must be strictly increasing");
    prev = i;
  }
}

}  // namespace

DirichletDomain DirichletDomain::prefix(int n, int reference) {
  DirichletDomain d;
  d.members.resize(n);
  for (int i = 0; i < n; ++i) d.members[i] = i;
  d.reference_state = reference;
  d.contains_reference = reference >= 0 && reference < n;
  return d;
}

DirichletDomain DirichletDomain::of(std::vector<int> members, int reference) {
  DirichletDomain d;
  d.members = std::move(members);
  d.reference_state = reference;
  d.contains_reference =
      std::binary_search(d.members.begin(), d.members.end(), reference);
  return d;
}

Eigen::VectorXd dt_dirichlet_poisson(const DtModel& m, const DirichletDomain& d,
                                     const Eigen::VectorXd& f, double shift,
                                     const DirichletOptions& opts) {
  check_structure(m);
  validate_domain(d, m.num_states());
  if (f.size() != m.num_states()) throw DimensionMismatch("forcing term length mismatch");

  double worst = -kInf;
  for (int i : d.members)
    for (int a = 0; a < m.num_actions(i); ++a) worst = std::max(worst, m.cost[i][a] + shift);
  if (!(worst < 0))
    throw ShiftInsufficient("shifted cost must be strictly negative on the domain");
  const double contraction = std::exp(worst);

  std::vector<std::vector<double>> ec(m.num_states());
  for (int i : d.members) {
    ec[i].resize(m.num_actions(i));
    for (int a = 0; a < m.num_actions(i); ++a) ec[i][a] = std::exp(m.cost[i][a] + shift);
  }

  Eigen::VectorXd g = Eigen::VectorXd::Zero(m.num_states());
  Eigen::VectorXd next = g;
  // Banach iteration; stop when the step is small enough that the remaining
  // distance to the fixed point is below tol.
  const double stop = opts.tol * (1.0 - contraction) / std::max(contraction, 1e-300);
  for (long k = 0; k < opts.max_iter; ++k) {
    double delta = 0;
    for (int i : d.members) {
      double best = kInf;
      for (int a = 0; a < m.num_actions(i); ++a) {
        double s = 0;
        for (const auto& e : m.row(i, a)) s += g[e.j] * e.w;
        best = std::min(best, ec[i][a] * s + f[i]);
      }
      next[i] = best;
      delta = std::max(delta, std::abs(next[i] - g[i]));
    }
    g = next;
    if (delta <= stop) return g;
  }
  throw NoConvergence("Poisson iteration exhausted its budget");
}

namespace {

// Full solver for the minimizing operator, shared between DT and CT through
// the operator factory.  gap_scale must turn the raw ratio bracket into the
// caller's eigenvalue scale so tol means the same thing for both kinds.
template <class OpFactory>
EigenPair run_min_solver(int n, const DirichletDomain& d, const DirichletOptions& opts,
                         OpFactory make_op, detail::CwIterator::GapScale gap_scale,
                         std::function<double(double lo, double hi)> to_rho) {
  auto min_op = make_op(static_cast<const Policy*>(nullptr));
  detail::CwIterator::Apply apply_min = [&min_op](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    min_op(x, y);
  };
  detail::CwIterator iter(d.members, d.contains_reference ? d.reference_state : -1,
                          /*force_reference=*/false, opts.support_eps, apply_min, gap_scale);

  detail::CwState s;
  s.psi = start_vector(opts, d.members, n);

  EigenPair out;
  const long stall_window = 1000;
  double window_gap = kInf;
  long remaining = opts.max_iter;

  while (remaining > 0) {
    const long chunk = std::min(stall_window, remaining);
    iter.run(s, opts.tol, chunk);
    remaining -= chunk;
    if (s.converged) break;
    // Stalled progress: relative gap improvement under 1e-3 across the window.
    if (s.gap > window_gap * (1.0 - 1e-3)) {
      out.used_policy_fallback = true;
      Policy incumbent;
      for (int round = 0; round < 500 && remaining > 0; ++round) {
        Policy v = min_op.greedy(s.psi);
        if (round > 0 && v.action_index == incumbent.action_index) break;
        incumbent = v;
        auto frozen_op = make_op(&incumbent);
        detail::CwIterator::Apply apply_frozen = [&frozen_op](const Eigen::VectorXd& x,
                                                              Eigen::VectorXd& y) {
          frozen_op(x, y);
        };
        detail::CwIterator linear(d.members, d.contains_reference ? d.reference_state : -1,
                                  false, opts.support_eps, apply_frozen, gap_scale);
        detail::CwState ls;
        ls.psi = s.psi;
        linear.run(ls, 0.01 * opts.tol, remaining);
        remaining -= ls.iterations;
        s.psi = ls.psi;
        s.iterations += ls.iterations;
        // Re-measure the nonlinear gap at the policy's eigenfunction.
        detail::CwState probe;
        probe.psi = s.psi;
        iter.run(probe, opts.tol, 1);
        remaining -= 1;
        s.ratio_lo = probe.ratio_lo;
        s.ratio_hi = probe.ratio_hi;
        s.gap = probe.gap;
        s.iterations += 1;
        s.normalized_at_reference = probe.normalized_at_reference;
        s.psi = probe.psi;
        if (s.gap < opts.tol) {
          s.converged = true;
          break;
        }
      }
      if (s.converged) break;
      window_gap = s.gap;
      continue;
    }
    window_gap = s.gap;
  }
  if (!s.converged) throw NoConvergence("eigenpair iteration exhausted its budget");

  out.rho = to_rho(s.ratio_lo, s.ratio_hi);
  out.psi = s.psi;
  out.iterations = s.iterations;
  out.cw_gap = s.gap;
  out.normalized_at_reference = s.normalized_at_reference;
  return out;
}

struct DtOpFull : DtOp {
  DtOpFull(const DtModel& model, const std::vector<int>& mem) : DtOp{model, mem, exp_cost(model)} {}
  DtOpFull(const DtOpFull& base, const Policy* v) : DtOp{base.m, base.members, base.ec, v} {}

  Policy greedy(const Eigen::VectorXd& psi) const {
    return greedy_policy(m, members, psi, [this](int i, int a, const Eigen::VectorXd& p) {
      double s = 0;
      for (const auto& e : m.row(i, a)) s += p[e.j] * e.w;
      return ec[i][a] * s;
    });
  }
};

struct CtOpFull : CtOp {
  CtOpFull(const CtModel& model, const std::vector<int>& mem, double step)
      : CtOp{model, mem, step} {}
  CtOpFull(const CtOpFull& base, const Policy* v) : CtOp{base.m, base.members, base.h, v} {}

  Policy greedy(const Eigen::VectorXd& psi) const {
    return greedy_policy(m, members, psi, [this](int i, int a, const Eigen::VectorXd& p) {
      double s = 0;
      for (const auto& e : m.row(i, a)) s += p[e.j] * e.w;
      return s + m.cost[i][a] * psi_at(p, i);
    });
  }
  static double psi_at(const Eigen::VectorXd& p, int i) { return p[i]; }
};

}  // namespace

EigenPair dt_dirichlet_eigenpair(const DtModel& m, const DirichletDomain& d,
                                 const DirichletOptions& opts) {
  check_structure(m);
  validate_domain(d, m.num_states());
  DtOpFull base(m, d.members);
  auto factory = [&base](const Policy* v) { return DtOpFull(base, v); };
  auto pair = run_min_solver(
      m.num_states(), d, opts, factory,
      [](double lo, double hi) { return dt_gap(lo, hi); },
      [](double lo, double hi) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > 0)) throw DegenerateEigenvector("spectral radius vanished on the domain");
        return std::log(mid);
      });
  return pair;
}

double ct_power_step(const CtModel& m, const DirichletDomain& d) {
  double worst = 0;
  for (int i : d.members) {
    const double q = m.total_rate(i);
    for (int a = 0; a < m.num_actions(i); ++a) worst = std::max(worst, q + m.cost[i][a]);
  }
  return 0.95 / (1.0 + worst);
}

EigenPair ct_dirichlet_eigenpair_with_step(const CtModel& m, const DirichletDomain& d, double h,
                                           const DirichletOptions& opts) {
  check_structure(m);
  validate_domain(d, m.num_states());
  if (!(h > 0)) throw MalformedModel("step must be positive");
  CtOpFull base(m, d.members, h);
  auto factory = [&base](const Policy* v) { return CtOpFull(base, v); };
  auto pair = run_min_solver(
      m.num_states(), d, opts, factory,
      [h](double lo, double hi) { return (hi - lo) / h; },
      [h](double lo, double hi) { return (0.5 * (lo + hi) - 1.0) / h; });
  return pair;
}

EigenPair ct_dirichlet_eigenpair(const CtModel& m, const DirichletDomain& d,
                                 const DirichletOptions& opts) {
  return ct_dirichlet_eigenpair_with_step(m, d, ct_power_step(m, d), opts);
}

}  // namespace riskeig
