// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "riskeig/dirichlet.hpp"
#include "riskeig/model.hpp"

namespace riskeig {

struct LadderConfig {
  // Strictly increasing rung sizes; empty means 16, 32, 64, ... capped at the
  // model truncation (with the truncation itself as the final rung).
  std::vector<int> rungs;
  double tol_rho = 1e-10;
  // States whose eigenfunction values gate stabilization; empty = first
  // min(32, N) states.
  std::vector<int> watch_set;
  bool near_monotone = false;
  // User-supplied lower proxy for the optimal value; when absent the
  // near-monotone diagnostic samples policies instead.
  std::optional<double> lambda_m_hint;
  DirichletOptions dirichlet;
};

struct RungRecord {
  int n = 0;
  double rho = 0;
  int iterations = 0;
  double cw_gap = 0;
};

struct SolveReport {
  double lambda = 0;
  Eigen::VectorXd psi;  // final rung eigenfunction, full length
  std::vector<RungRecord> rungs;
  bool converged = false;
  // Relative residual of the full-model eigen-equation on interior watch
  // states; NaN when no interior state is available.
  double residual = 0;
  // Near-monotone mode: signed max of min-operator(psi) - growth * psi on the
  // interior watch states (nonpositive up to tolerance for a supersolution).
  std::optional<double> supersolution_residual;
  std::optional<double> lambda_m_proxy;
  std::vector<std::string> warnings;
};

// Increasing-domain ladder over killed eigenproblems: solves each rung with a
// warm start from the previous one and stops when the eigenvalue and the
// watch-set eigenfunction both stabilize.
SolveReport solve_ladder(const DtModel& m, const LadderConfig& cfg = {});
SolveReport solve_ladder(const CtModel& m, const LadderConfig& cfg = {});

// Greedy selector from an eigenfunction; ties resolved to the lowest action
// index.  Throws ZeroPsi when psi carries no mass at all.
Policy extract_policy(const DtModel& m, const Eigen::VectorXd& psi);
Policy extract_policy(const CtModel& m, const Eigen::VectorXd& psi);

// Near-monotone entry point: strict reference normalization, sampled lower
// proxy for the optimal value, tail-cost diagnostic, supersolution residual.
SolveReport solve_near_monotone(const DtModel& m, LadderConfig cfg = {});
SolveReport solve_near_monotone(const CtModel& m, LadderConfig cfg = {});

// Watch-set default: first min(32, N) states.
std::vector<int> default_watch_set(int num_states);

}  // namespace riskeig
