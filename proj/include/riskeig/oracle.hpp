// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

#include "riskeig/model.hpp"

namespace riskeig {

struct PerronResult {
  double log_root = 0;
  Eigen::VectorXd vec;  // max-normalized, nonnegative
  double cw_lower = 0;  // log-scale Collatz-Wielandt bracket at termination
  double cw_upper = 0;
  int iterations = 0;
  bool reducible_warning = false;
};

// Dominant eigenvalue (log scale) of a nonnegative matrix by damped power
// iteration with Collatz-Wielandt ratio bounds.  Irreducibility is not
// required: reducible inputs converge to the dominant root with a possibly
// non-strictly-positive vector and a warning flag.
PerronResult perron_root(const Eigen::SparseMatrix<double, Eigen::RowMajor>& M, double tol = 1e-12,
                         long max_iter = 1'000'000);

// Odometer over per-state action counts, lexicographic by state index with the
// last state varying fastest.
class PolicyEnumerator {
 public:
  explicit PolicyEnumerator(std::vector<int> arity);
  // First call yields the all-zeros policy; returns false when exhausted.
  bool next(Policy& v);
  static double count(const std::vector<int>& arity);

 private:
  std::vector<int> arity_;
  std::vector<int> current_;
  bool started_ = false;
  bool done_ = false;
};

std::vector<int> action_arity(const DtModel& m);
std::vector<int> action_arity(const CtModel& m);

struct PolicyValue {
  Policy policy;
  double lambda = 0;
  bool reducible = false;
};

struct OracleResult {
  double lambda_star = 0;
  Policy argmin;
  std::vector<PolicyValue> table;  // enumeration order
};

// Exhaustive minimum over deterministic stationary policies.  DT: log spectral
// radius of [exp(c(i,v(i))) P(j|i,v(i))].  CT: dominant eigenvalue of
// Q_v + diag(c_v), computed from the shifted nonnegative matrix.  Throws
// TooManyPolicies when the policy count exceeds cap.
OracleResult brute_force_lambda_star(const DtModel& m, std::uint64_t cap = 1'000'000);
OracleResult brute_force_lambda_star(const CtModel& m, std::uint64_t cap = 1'000'000);

}  // namespace riskeig
