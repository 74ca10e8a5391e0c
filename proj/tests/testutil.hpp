// SPDX-License-Identifier: MIT
//
// Shared fixtures for the test suites: small closed-form models, random
// instance generators, and dense-eigensolver oracles independent of the
// library's own iterative solvers.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "riskeig/model.hpp"
#include "riskeig/oracle.hpp"
#include "riskeig/rng.hpp"

namespace testutil {

using riskeig::CtModel;
using riskeig::DtModel;
using riskeig::Policy;

// Deterministic swap chain: 0 -> 1 -> 0, one action, costs (c0, c1).
inline DtModel make_swap_dt(double c0, double c1) {
  DtModel m;
  m.space.truncation = 2;
  m.space.reference_state = 0;
  m.space.closed = true;
  m.action_labels = {{"go"}, {"go"}};
  m.kernel = {{{{1, 1.0}}}, {{{0, 1.0}}}};
  m.cost = {{c0}, {c1}};
  return m;
}

// Single state, one or more actions, killed with probability 1-p per step.
inline DtModel make_single_dt(double p, std::vector<double> costs) {
  DtModel m;
  m.space.truncation = 1;
  m.space.reference_state = 0;
  m.space.closed = false;
  m.action_labels.push_back({});
  m.kernel.push_back({});
  m.cost.push_back(costs);
  for (std::size_t a = 0; a < costs.size(); ++a) {
    m.action_labels[0].push_back("a" + std::to_string(a));
    m.kernel[0].push_back({{0, p}});
  }
  return m;
}

// Random closed irreducible DT instance: 3-6 states, 1-3 actions per state,
// strictly positive kernels, costs in (0, 1].
inline DtModel random_dt(riskeig::CounterRng& rng) {
  DtModel m;
  const int n = 3 + static_cast<int>(rng.next_u64() % 4);
  m.space.truncation = n;
  m.space.reference_state = 0;
  m.space.closed = true;
  m.action_labels.resize(n);
  m.kernel.resize(n);
  m.cost.resize(n);
  for (int i = 0; i < n; ++i) {
    const int arity = 1 + static_cast<int>(rng.next_u64() % 3);
    for (int a = 0; a < arity; ++a) {
      m.action_labels[i].push_back("a" + std::to_string(a));
      std::vector<double> w(n);
      double total = 0;
      for (int j = 0; j < n; ++j) total += (w[j] = 0.05 + rng.next_unit());
      riskeig::KernelRow row;
      for (int j = 0; j < n; ++j) row.push_back({j, w[j] / total});
      m.kernel[i].push_back(std::move(row));
      m.cost[i].push_back(rng.next_unit());
    }
  }
  return m;
}

// Random conservative irreducible CT instance: strictly positive off-diagonal
// rates in (0, 1], diagonal filled to make each row sum exactly zero.
inline CtModel random_ct(riskeig::CounterRng& rng) {
  CtModel m;
  const int n = 3 + static_cast<int>(rng.next_u64() % 4);
  m.space.truncation = n;
  m.space.reference_state = 0;
  m.space.closed = true;
  m.action_labels.resize(n);
  m.kernel.resize(n);
  m.cost.resize(n);
  for (int i = 0; i < n; ++i) {
    const int arity = 1 + static_cast<int>(rng.next_u64() % 3);
    for (int a = 0; a < arity; ++a) {
      m.action_labels[i].push_back("a" + std::to_string(a));
      riskeig::KernelRow row;
      double off = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double q = rng.next_unit();
        off += q;
        row.push_back({j, q});
      }
      row.push_back({i, -off});
      m.kernel[i].push_back(std::move(row));
      m.cost[i].push_back(rng.next_unit());
    }
  }
  return m;
}

inline Policy uniform_policy(int n) {
  Policy v;
  v.action_index.assign(n, 0);
  return v;
}

inline Policy last_action_policy(const std::vector<int>& arity) {
  Policy v;
  for (int k : arity) v.action_index.push_back(k - 1);
  return v;
}

// ---------------------------------------------------------------------------
// dense oracles (Eigen::EigenSolver; no shared code with the library solvers)
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd dense_dt_policy_matrix(const DtModel& m, const Policy& v) {
  const int n = m.num_states();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (const auto& e : m.row(i, v.action_index[i]))
      M(i, e.j) += std::exp(m.cost[i][v.action_index[i]]) * e.w;
  return M;
}

inline Eigen::MatrixXd dense_ct_policy_matrix(const CtModel& m, const Policy& v) {
  const int n = m.num_states();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& e : m.row(i, v.action_index[i])) M(i, e.j) += e.w;
    M(i, i) += m.cost[i][v.action_index[i]];
  }
  return M;
}

inline double dense_log_radius(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return std::log(es.eigenvalues().cwiseAbs().maxCoeff());
}

inline double dense_max_real(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().real().maxCoeff();
}

inline double dense_dt_policy_lambda(const DtModel& m, const Policy& v) {
  return dense_log_radius(dense_dt_policy_matrix(m, v));
}

inline double dense_ct_policy_lambda(const CtModel& m, const Policy& v) {
  return dense_max_real(dense_ct_policy_matrix(m, v));
}

template <class Model, class PerPolicy>
double dense_sweep_min(const Model& m, PerPolicy&& value) {
  riskeig::PolicyEnumerator en(riskeig::action_arity(m));
  Policy v;
  double best = std::numeric_limits<double>::infinity();
  while (en.next(v)) best = std::min(best, value(m, v));
  return best;
}

inline double dense_lambda_star_dt(const DtModel& m) {
  return dense_sweep_min(m, [](const DtModel& mm, const Policy& v) {
    return dense_dt_policy_lambda(mm, v);
  });
}

inline double dense_lambda_star_ct(const CtModel& m) {
  return dense_sweep_min(m, [](const CtModel& mm, const Policy& v) {
    return dense_ct_policy_lambda(mm, v);
  });
}

}  // namespace testutil
