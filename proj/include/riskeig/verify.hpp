// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <vector>

#include "riskeig/model.hpp"

namespace riskeig {

struct VerificationResult {
  double max_residual = 0;
  std::vector<int> failing_states;
  bool optimal = false;
  // When the candidate policy is refuted, its own growth rate minus the
  // claimed optimum; zero otherwise.
  double gap = 0;
  // Selector mismatch within tolerance of a tie: neither confirmed nor
  // refuted.
  bool inconclusive = false;
};

// Relative residual of the eigen-equation at the given states:
// DT  |min_a exp(c) sum_j psi(j) P - exp(rho) psi(i)| / max(1, exp(rho) psi(i))
// CT  |min_a [sum_j psi(j) q + c psi(i)] - rho psi(i)| / max(1, |rho psi(i)|).
double eigen_residual(const DtModel& m, double rho, const Eigen::VectorXd& psi,
                      const std::vector<int>& eval_states);
double eigen_residual(const CtModel& m, double rho, const Eigen::VectorXd& psi,
                      const std::vector<int>& eval_states);

// Signed version of the residual: max over eval states of
// (min-operator(psi)(i) - growth(rho) psi(i)) / max(1, |growth(rho) psi(i)|).
// Nonpositive (up to tolerance) certifies a supersolution.
double supersolution_excess(const DtModel& m, double rho, const Eigen::VectorXd& psi,
                            const std::vector<int>& eval_states);
double supersolution_excess(const CtModel& m, double rho, const Eigen::VectorXd& psi,
                            const std::vector<int>& eval_states);

// States from `candidates` whose rows (every action) stay inside
// {0, ..., domain_size-1}, so killing introduces no bias there.
std::vector<int> interior_eval_states(const DtModel& m, int domain_size,
                                      const std::vector<int>& candidates);
std::vector<int> interior_eval_states(const CtModel& m, int domain_size,
                                      const std::vector<int>& candidates);

// Checks that the policy attains the minimum in the eigen-operator at every
// eval state.  On refutation the policy's own eigenvalue is solved on the full
// truncation to report the gap.  Near-ties are flagged inconclusive.
VerificationResult verify_optimal_policy(const DtModel& m, const Policy& v, double rho,
                                         const Eigen::VectorXd& psi,
                                         const std::vector<int>& eval_states, double tol = 1e-9);
VerificationResult verify_optimal_policy(const CtModel& m, const Policy& v, double rho,
                                         const Eigen::VectorXd& psi,
                                         const std::vector<int>& eval_states, double tol = 1e-9);

}  // namespace riskeig
