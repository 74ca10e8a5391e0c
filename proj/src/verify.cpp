// SPDX-License-Identifier: MIT
#include "riskeig/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "riskeig/pia.hpp"

namespace riskeig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Operator value of one action and the left-hand side of the eigen-relation.
template <class Model>
double action_value(const Model& m, int i, int a, const Eigen::VectorXd& psi) {
  double s = 0;
  for (const auto& e : m.row(i, a)) s += psi[e.j] * e.w;
  if constexpr (std::is_same_v<Model, DtModel>)
    return std::exp(m.cost[i][a]) * s;
  else
    return s + m.cost[i][a] * psi[i];
}

template <class Model>
double min_value(const Model& m, int i, const Eigen::VectorXd& psi) {
  double best = kInf;
  for (int a = 0; a < m.num_actions(i); ++a) best = std::min(best, action_value(m, i, a, psi));
  return best;
}

template <class Model>
double rhs_value(const Model&, double rho, const Eigen::VectorXd& psi, int i) {
  if constexpr (std::is_same_v<Model, DtModel>)
    return std::exp(rho) * psi[i];
  else
    return rho * psi[i];
}

template <class Model>
double residual_impl(const Model& m, double rho, const Eigen::VectorXd& psi,
                     const std::vector<int>& eval_states) {
  double worst = 0;
  for (int i : eval_states) {
    const double rhs = rhs_value(m, rho, psi, i);
    const double lhs = min_value(m, i, psi);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return worst;
}

template <class Model>
double excess_impl(const Model& m, double rho, const Eigen::VectorXd& psi,
                   const std::vector<int>& eval_states) {
  double worst = -kInf;
  for (int i : eval_states) {
    const double rhs = rhs_value(m, rho, psi, i);
    const double lhs = min_value(m, i, psi);
    worst = std::max(worst, (lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return worst;
}

template <class Model>
std::vector<int> interior_impl(const Model& m, int domain_size, const std::vector<int>& candidates) {
  std::vector<int> out;
  for (int i : candidates) {
    if (i < 0 || i >= domain_size) continue;
    bool interior = true;
    for (int a = 0; a < m.num_actions(i) && interior; ++a)
      for (const auto& e : m.row(i, a))
        if (e.j >= domain_size) {
          interior = false;
          break;
        }
    if (interior) out.push_back(i);
  }
  return out;
}

template <class Model>
VerificationResult verify_impl(const Model& m, const Policy& v, double rho,
                               const Eigen::VectorXd& psi, std::vector<int> eval_states,
                               double tol) {
  check_policy(m, v);
  if (psi.size() != m.num_states()) throw DimensionMismatch("eigenfunction length mismatch");
  if (eval_states.empty())
    eval_states = interior_impl(m, m.num_states(), [&] {
      std::vector<int> all(m.num_states());
      for (int i = 0; i < m.num_states(); ++i) all[i] = i;
      return all;
    }());

  VerificationResult r;
  r.max_residual = residual_impl(m, rho, psi, eval_states);
  for (int i : eval_states) {
    const double best = min_value(m, i, psi);
    const double mine = action_value(m, i, v.action_index[i], psi);
    if (mine - best > tol * std::max(1.0, std::abs(best))) r.failing_states.push_back(i);
  }
  if (r.failing_states.empty()) {
    r.optimal = true;
    r.gap = 0;
    return r;
  }
  // Refuted: measure how far the policy's own growth rate sits above the
  // claimed optimum.
  const auto d = DirichletDomain::prefix(m.num_states(), m.space.reference_state);
  const double rho_v = policy_eigenpair(m, v, d).rho;
  r.optimal = false;
  r.gap = rho_v - rho;
  r.inconclusive = r.gap <= tol;
  return r;
}

}  // namespace

double eigen_residual(const DtModel& m, double rho, const Eigen::VectorXd& psi,
                      const std::vector<int>& eval_states) {
  return residual_impl(m, rho, psi, eval_states);
}
double eigen_residual(const CtModel& m, double rho, const Eigen::VectorXd& psi,
                      const std::vector<int>& eval_states) {
  return residual_impl(m, rho, psi, eval_states);
}

double supersolution_excess(const DtModel& m, double rho, const Eigen::VectorXd& psi,
                            const std::vector<int>& eval_states) {
  return excess_impl(m, rho, psi, eval_states);
}
double supersolution_excess(const CtModel& m, double rho, const Eigen::VectorXd& psi,
                            const std::vector<int>& eval_states) {
  return excess_impl(m, rho, psi, eval_states);
}

std::vector<int> interior_eval_states(const DtModel& m, int domain_size,
                                      const std::vector<int>& candidates) {
  return interior_impl(m, domain_size, candidates);
}
std::vector<int> interior_eval_states(const CtModel& m, int domain_size,
                                      const std::vector<int>& candidates) {
  return interior_impl(m, domain_size, candidates);
}

VerificationResult verify_optimal_policy(const DtModel& m, const Policy& v, double rho,
                                         const Eigen::VectorXd& psi,
                                         const std::vector<int>& eval_states, double tol) {
  return verify_impl(m, v, rho, psi, eval_states, tol);
}
VerificationResult verify_optimal_policy(const CtModel& m, const Policy& v, double rho,
                                         const Eigen::VectorXd& psi,
                                         const std::vector<int>& eval_states, double tol) {
  return verify_impl(m, v, rho, psi, eval_states, tol);
}

}  // namespace riskeig
