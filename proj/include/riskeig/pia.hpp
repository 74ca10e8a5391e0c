// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "riskeig/dirichlet.hpp"
#include "riskeig/model.hpp"

namespace riskeig {

struct PiaConfig {
  // Value-determination window; empty members = full truncation.
  DirichletDomain domain;
  double tol_lambda = 1e-12;
  double tol_theta = 1e-9;
  int max_iters = 500;
  std::vector<int> watch_set;  // empty = first min(32, N)
  DirichletOptions eig;        // inner eigensolves; tol tightened to 1e-12 by default

  PiaConfig() { eig.tol = 1e-12; }
};

struct PiaIterate {
  int k = 0;
  double lambda = 0;
  double max_theta = 0;  // improvement error after this round, watch set
  int policy_changes = 0;
};

struct PiaTrace {
  std::vector<PiaIterate> iterates;
  double lambda_final = 0;
  Eigen::VectorXd V;  // final value-determination eigenfunction
  Policy policy;
  Eigen::VectorXd theta_final;
  std::string converged_by;  // "theta_small" | "lambda_stall" | "max_iters"
};

inline DirichletOptions tight_options() {
  DirichletOptions o;
  o.tol = 1e-12;
  return o;
}

// Principal eigenpair of the frozen-policy kernel on the domain (killed
// outside), normalized at the reference state.
EigenPair policy_eigenpair(const DtModel& m, const Policy& v, const DirichletDomain& d,
                           const DirichletOptions& opts = tight_options());
EigenPair policy_eigenpair(const CtModel& m, const Policy& v, const DirichletDomain& d,
                           const DirichletOptions& opts = tight_options());

// Greedy improvement against V on the domain; the incumbent action is retained
// whenever it attains the minimum within relative 1e-14, other ties go to the
// lowest index.
Policy improve_policy(const DtModel& m, const Eigen::VectorXd& V, const Policy& incumbent,
                      const DirichletDomain& d);
Policy improve_policy(const CtModel& m, const Eigen::VectorXd& V, const Policy& incumbent,
                      const DirichletDomain& d);

// Improvement error of the next policy against the current eigenpair.  DT
// values lie in [0, 1] up to solver residual; CT values are nonnegative and
// bounded by lambda_0 + total_rate(i).
Eigen::VectorXd compute_theta(const DtModel& m, const EigenPair& pair, const Policy& next,
                              const DirichletDomain& d);
Eigen::VectorXd compute_theta(const CtModel& m, const EigenPair& pair, const Policy& next,
                              const DirichletDomain& d);

PiaTrace run_pia(const DtModel& m, const Policy& init, const PiaConfig& cfg = {});
PiaTrace run_pia(const CtModel& m, const Policy& init, const PiaConfig& cfg = {});

// Diagnostic change of measure: DT rows V(j) P(j|i,v(i)) renormalized to a
// stochastic kernel on the domain; CT off-diagonal rates (V(j)/V(i)) q(j|i,v(i))
// with a conservative diagonal.  States are reindexed along the domain.
DtModel twisted_kernel(const DtModel& m, const Policy& v, const Eigen::VectorXd& V,
                       const DirichletDomain& d);
CtModel twisted_kernel(const CtModel& m, const Policy& v, const Eigen::VectorXd& V,
                       const DirichletDomain& d);

}  // namespace riskeig
