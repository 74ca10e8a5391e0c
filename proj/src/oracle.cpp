// SPDX-License-Identifier: MIT
#include "riskeig/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskeig/detail/cw_iterate.hpp"
#include "riskeig/errors.hpp"

namespace riskeig {

namespace {
// Sentinel gap while the lower Collatz-Wielandt ratio is still zero.
constexpr double kBigGap = std::numeric_limits<double>::infinity();
}  // namespace

PerronResult perron_root(const Eigen::SparseMatrix<double, Eigen::RowMajor>& M, double tol,
                         long max_iter) {
  if (M.rows() != M.cols()) throw DimensionMismatch("matrix must be square");
  const int n = static_cast<int>(M.rows());
  if (n == 0) throw ZeroMatrix("empty matrix");
  bool any = false;
  for (int k = 0; k < M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(M, k); it; ++it) {
      if (it.value() < 0) throw MalformedModel("matrix must be nonnegative");
      if (it.value() > 0) any = true;
    }
  if (!any) throw ZeroMatrix("matrix has no positive entry");

  std::vector<int> members(n);
  for (int i = 0; i < n; ++i) members[i] = i;

  detail::CwIterator::Apply apply = [&M](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.noalias() = M * x;
  };
  // Relative gap so the stopping rule is scale-equivariant.
  detail::CwIterator iter(members, /*reference=*/-1, false, 1e-14, apply,
                          [](double lo, double hi) { return lo > 0 ? hi / lo - 1.0 : kBigGap; });

  detail::CwState s;
  s.psi = Eigen::VectorXd::Ones(n);
  iter.run(s, tol, max_iter);
  if (!s.converged) throw NoConvergence("power iteration exhausted its budget");

  PerronResult r;
  const double mid = 0.5 * (s.ratio_lo + s.ratio_hi);
  if (!(mid > 0)) throw ZeroMatrix("spectral radius is zero");
  r.log_root = std::log(mid);
  r.cw_lower = std::log(s.ratio_lo);
  r.cw_upper = std::log(s.ratio_hi);
  r.vec = s.psi / s.psi.maxCoeff();
  r.iterations = s.iterations;
  const double floor = 1e-12 * r.vec.maxCoeff();
  for (int i = 0; i < n; ++i)
    if (r.vec[i] <= floor) {
      r.reducible_warning = true;
      break;
    }
  return r;
}

PolicyEnumerator::PolicyEnumerator(std::vector<int> arity) : arity_(std::move(arity)) {
  for (int k : arity_)
    if (k <= 0) throw MalformedModel("every state needs at least one action");
  current_.assign(arity_.size(), 0);
}

bool PolicyEnumerator::next(Policy& v) {
  if (done_) return false;
  if (!started_) {
    started_ = true;
    v.action_index = current_;
    return true;
  }
  // Odometer step, last state fastest.
  for (int i = static_cast<int>(arity_.size()) - 1; i >= 0; --i) {
    if (++current_[i] < arity_[i]) {
      v.action_index = current_;
      return true;
    }
    current_[i] = 0;
  }
  done_ = true;
  return false;
}

double PolicyEnumerator::count(const std::vector<int>& arity) {
  double c = 1;
  for (int k : arity) c *= static_cast<double>(k);
  return c;
}

std::vector<int> action_arity(const DtModel& m) {
  std::vector<int> a(m.num_states());
  for (int i = 0; i < m.num_states(); ++i) a[i] = m.num_actions(i);
  return a;
}

std::vector<int> action_arity(const CtModel& m) {
  std::vector<int> a(m.num_states());
  for (int i = 0; i < m.num_states(); ++i) a[i] = m.num_actions(i);
  return a;
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Multiplicative policy matrix exp(c(i,v(i))) P(j|i,v(i)).
SpMat policy_matrix(const DtModel& m, const Policy& v) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < m.num_states(); ++i) {
    const int a = v.action_index[i];
    const double ec = std::exp(m.cost[i][a]);
    for (const auto& e : m.row(i, a)) trips.emplace_back(i, e.j, ec * e.w);
  }
  SpMat M(m.num_states(), m.num_states());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

// Q_v + diag(c_v) shifted into the nonnegative cone; the shift is returned so
// the dominant eigenvalue can be recovered.
SpMat shifted_policy_matrix(const CtModel& m, const Policy& v, double& shift) {
  shift = 0;
  for (int i = 0; i < m.num_states(); ++i) {
    const int a = v.action_index[i];
    shift = std::max(shift, -(m.diagonal(i, a) + m.cost[i][a]));
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < m.num_states(); ++i) {
    const int a = v.action_index[i];
    double diag = m.cost[i][a] + shift;
    for (const auto& e : m.row(i, a)) {
      if (e.j == i)
        diag += e.w;
      else
        trips.emplace_back(i, e.j, e.w);
    }
    // The state that set the shift lands on zero only up to rounding; a few
    // negative ulps here are debris, not signal, and must not leave the cone.
    if (diag < 0) diag = 0;
    if (diag != 0) trips.emplace_back(i, i, diag);
  }
  SpMat M(m.num_states(), m.num_states());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

template <class Model, class Eval>
OracleResult sweep(const Model& m, std::uint64_t cap, Eval eval) {
  check_structure(m);
  const auto arity = action_arity(m);
  const double count = PolicyEnumerator::count(arity);
  if (count > static_cast<double>(cap))
    throw TooManyPolicies("policy count exceeds the cap", count);

  OracleResult r;
  r.lambda_star = std::numeric_limits<double>::infinity();
  PolicyEnumerator en(arity);
  Policy v;
  while (en.next(v)) {
    PolicyValue pv;
    pv.policy = v;
    pv.lambda = eval(v, pv.reducible);
    if (pv.lambda < r.lambda_star) {
      r.lambda_star = pv.lambda;
      r.argmin = v;
    }
    r.table.push_back(std::move(pv));
  }
  return r;
}

}  // namespace

OracleResult brute_force_lambda_star(const DtModel& m, std::uint64_t cap) {
  return sweep(m, cap, [&m](const Policy& v, bool& reducible) {
    auto pr = perron_root(policy_matrix(m, v));
    reducible = pr.reducible_warning;
    return pr.log_root;
  });
}

OracleResult brute_force_lambda_star(const CtModel& m, std::uint64_t cap) {
  return sweep(m, cap, [&m](const Policy& v, bool& reducible) {
    double shift = 0;
    auto M = shifted_policy_matrix(m, v, shift);
    auto pr = perron_root(M);
    reducible = pr.reducible_warning;
    return std::exp(pr.log_root) - shift;
  });
}

}  // namespace riskeig
