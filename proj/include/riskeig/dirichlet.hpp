// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <vector>

#include "riskeig/model.hpp"

namespace riskeig {

// Finite window the eigenproblem is solved on; everything outside is killed
// (eigenfunction pinned to zero there).
struct DirichletDomain {
  std::vector<int> members;  // strictly increasing state indices
  int reference_state = 0;
  bool contains_reference = false;

  // Domain {0, ..., n-1}.
  static DirichletDomain prefix(int n, int reference);
  static DirichletDomain of(std::vector<int> members, int reference);
  int size() const { return static_cast<int>(members.size()); }
};

struct EigenPair {
  double rho = 0;       // principal eigenvalue, log scale for DT models
  Eigen::VectorXd psi;  // full-length, zero off the domain
  int iterations = 0;
  double cw_gap = 0;  // Collatz-Wielandt gap at termination (stopping scale)
  bool used_policy_fallback = false;
  bool normalized_at_reference = true;
};

struct DirichletOptions {
  double tol = 1e-10;           // stopping tolerance on the Collatz-Wielandt gap
  long max_iter = 1'000'000;    // iteration budget before NoConvergence
  double support_eps = 1e-14;   // relative threshold defining the iterate support
  Eigen::VectorXd warm_start;   // empty = all-ones on the domain
};

// Minimizing Poisson operator with killing outside the domain: the fixed point
// of g <- min_a [ exp(c(i,a)+shift) sum_j g(j) P(j|i,a) + f(i) ] on the domain,
// zero elsewhere.  Requires the shifted cost to be strictly negative on the
// domain (throws ShiftInsufficient otherwise); solved by contraction iteration.
Eigen::VectorXd dt_dirichlet_poisson(const DtModel& m, const DirichletDomain& d,
                                     const Eigen::VectorXd& f, double shift,
                                     const DirichletOptions& opts = {});

// Principal eigenpair of the minimizing multiplicative operator on the domain:
// exp(rho) psi(i) = min_a [ exp(c(i,a)) sum_j psi(j) P(j|i,a) ], psi = 0 off
// the domain.  Nonlinear power iteration with Collatz-Wielandt ratio bounds;
// falls back to policy iteration over frozen selectors when the gap stalls.
EigenPair dt_dirichlet_eigenpair(const DtModel& m, const DirichletDomain& d,
                                 const DirichletOptions& opts = {});

// CT analogue: rho psi(i) = min_a [ sum_j psi(j) q(j|i,a) + c(i,a) psi(i) ].
// Solved through the damped map psi + h * (rates operator) whose eigenvalue is
// 1 + h rho; any step below the stability bound gives the same pair.
EigenPair ct_dirichlet_eigenpair(const CtModel& m, const DirichletDomain& d,
                                 const DirichletOptions& opts = {});

// Step used by ct_dirichlet_eigenpair: 0.95 / (1 + max_{i,a} (q(i) + c(i,a))).
double ct_power_step(const CtModel& m, const DirichletDomain& d);

EigenPair ct_dirichlet_eigenpair_with_step(const CtModel& m, const DirichletDomain& d, double h,
                                           const DirichletOptions& opts = {});

}  // namespace riskeig
