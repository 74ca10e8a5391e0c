// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "riskeig/errors.hpp"

namespace riskeig {

// Absolute tolerance for mass-conservation equality checks.
inline constexpr double kMassTol = 1e-12;

// One transition entry: target state j with probability (DT) or rate (CT).
struct KernelEntry {
  int j;
  double w;
};
using KernelRow = std::vector<KernelEntry>;

// Finite window {0, ..., truncation-1} of a countable state space.  The
// reference state pins eigenfunction normalization.  closed means every row
// conserves mass exactly; open models treat missing mass as killed.
struct StateSpace {
  int truncation = 0;
  int reference_state = 0;
  bool closed = true;
};

struct Policy {
  std::vector<int> action_index;

  bool operator==(const Policy&) const = default;
};

// Controlled discrete-time kernel with per-state finite action sets.
// kernel[i][a] lists (j, p) with p > 0; cost[i][a] >= 0.
struct DtModel {
  StateSpace space;
  std::vector<std::vector<std::string>> action_labels;
  std::vector<std::vector<KernelRow>> kernel;
  std::vector<std::vector<double>> cost;

  int num_states() const { return space.truncation; }
  int num_actions(int i) const { return static_cast<int>(kernel[i].size()); }
  const KernelRow& row(int i, int a) const { return kernel[i][a]; }

  double row_sum(int i, int a) const {
    double s = 0;
    for (const auto& e : kernel[i][a]) s += e.w;
    return s;
  }
  // Implicit killed mass of a row.
  double leakage(int i, int a) const { return 1.0 - row_sum(i, a); }
};

// Controlled transition-rate matrices.  kernel[i][a] holds off-diagonal rates
// q(j|i,a) >= 0 plus the diagonal entry q(i|i,a) <= 0.  Conservative rows sum
// to zero; a strictly negative sum is killing.
struct CtModel {
  StateSpace space;
  std::vector<std::vector<std::string>> action_labels;
  std::vector<std::vector<KernelRow>> kernel;
  std::vector<std::vector<double>> cost;

  int num_states() const { return space.truncation; }
  int num_actions(int i) const { return static_cast<int>(kernel[i].size()); }
  const KernelRow& row(int i, int a) const { return kernel[i][a]; }

  double row_sum(int i, int a) const {
    double s = 0;
    for (const auto& e : kernel[i][a]) s += e.w;
    return s;
  }
  double diagonal(int i, int a) const {
    for (const auto& e : kernel[i][a])
      if (e.j == i) return e.w;
    return 0.0;
  }
  // Total exit rate sup_a -q(i|i,a).
  double total_rate(int i) const {
    double r = 0;
    for (int a = 0; a < num_actions(i); ++a) r = std::max(r, -diagonal(i, a));
    return r;
  }
};

// Drift certificate toward a multiplicative ergodic bound.  DriftRate is the
// uniform-contraction form (drift factor 1-beta outside K, requires
// ||c||_inf < log(1/(1-beta))).  NormLike uses a state-dependent rate
// beta_i = 1 - exp(-ell(i)) with ell growing faster than the cost.
enum class LyapunovMode { DriftRate, NormLike };

struct LyapunovCertDt {
  Eigen::VectorXd V;  // >= 1 on the truncation
  std::vector<int> K;
  double C_hat = 0;
  LyapunovMode mode = LyapunovMode::DriftRate;
  double beta = 0;      // DriftRate
  Eigen::VectorXd ell;  // NormLike
  int tail_index = 0;   // NormLike: ell - max_a c must be nondecreasing from here on
};

struct LyapunovCertCt {
  Eigen::VectorXd V;
  std::vector<int> K;
  double C_hat = 0;
  LyapunovMode mode = LyapunovMode::DriftRate;
  double gamma = 0;     // DriftRate: drift bounded by C_hat 1_K - gamma V
  Eigen::VectorXd ell;  // NormLike
  int tail_index = 0;

  // Non-explosion certificate: sup_a sum_j Vt(j) q(j|i,a) <= C0 Vt(i) + C2
  // and total_rate(i) <= C1 Vt(i).
  struct Explosion {
    Eigen::VectorXd V_tilde;
    double C0 = 0, C1 = 0, C2 = 0;
  };
  std::optional<Explosion> explosion;
};

struct Violation {
  int state = -1;
  int action = -1;
  std::string quantity;
  double margin = 0;  // negative means the bound failed by that amount
};

struct ValidationReport {
  bool passed = true;
  std::vector<Violation> violations;
  double worst_margin = 0;  // min slack across all checked inequalities
};

ValidationReport validate_model(const DtModel& m);
ValidationReport validate_model(const CtModel& m);

ValidationReport check_lyapunov(const DtModel& m, const LyapunovCertDt& cert);
ValidationReport check_lyapunov(const CtModel& m, const LyapunovCertCt& cert);

// FullSupportFromReference: one transition from the reference state charges
// every other state under every action.  PathCondition: BFS over edges
// present under all actions reaches the whole truncation.  PiaSmallSet: some
// state is hit in one step with positive mass from everywhere, uniformly in
// the action.
enum class Reachability { FullSupportFromReference, PathCondition, PiaSmallSet };

ValidationReport check_reachability(const DtModel& m, Reachability variant, int small_set_state = -1);
ValidationReport check_reachability(const CtModel& m, Reachability variant, int small_set_state = -1);

// Throws MalformedModel / DimensionMismatch on structural defects; quantitative
// checks are left to validate_model.
void check_structure(const DtModel& m);
void check_structure(const CtModel& m);
void check_policy(const DtModel& m, const Policy& v);
void check_policy(const CtModel& m, const Policy& v);

}  // namespace riskeig
