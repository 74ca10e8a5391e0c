// SPDX-License-Identifier: MIT
#pragma once

#include <string>
#include <vector>

#include "riskeig/model.hpp"

namespace riskeig {

// Controlled queue with reneging: next length is [(1-theta) Q - u + A]+ where
// u is the withdrawal action and A the arrival.  The fractional drift
// (1-theta) Q is realized by mean-preserving randomized rounding between the
// neighbouring integers.  Arrival mass falling beyond the truncation is
// dropped (killed), so rows are sub-stochastic near the boundary.
struct QueueingParams {
  int truncation = 256;
  double theta = 0.5;  // reneging fraction per step, in (0, 1)
  std::vector<int> controls = {0, 1};
  // Arrival law: geometric(p) on {0, 1, ...} truncated at tail mass below
  // 1e-16, or an explicit finite pmf starting at 0.
  double arrival_p = 0.5;
  std::vector<double> arrival_pmf;  // non-empty overrides the geometric law

  // Cost presets (this artifact's choices):
  //   bounded: c(i,u) = scale * min(i, M)/M + kappa * u
  //   linear:  c(i,u) = a * i + kappa * u
  // Defaults keep the sup-norm below log(1/(1-beta)) for the default beta so
  // the shipped drift certificate is admissible.
  std::string cost = "bounded";
  double cost_M = 10;
  double cost_scale = 0.2;
  double cost_kappa = 0.01;
  double cost_a = 0.05;
};

struct QueueingBuilt {
  DtModel model;
  LyapunovCertDt cert;  // V(i) = i + 1 drift-rate certificate
};

// Builder also derives the certificate: beta defaults to theta/2 and the
// exception set plus constant are computed on the truncation so the drift
// inequality holds as checked, not assumed.
QueueingBuilt build_queueing_dt(const QueueingParams& p, double beta = -1);

// Exponential-moment variant: V(i) = exp(gamma i) with state-dependent rate
// ell(i) = [gamma theta i - log E exp(gamma A) - gamma]+ (the trailing gamma
// covers rounding up).  Requires exp(gamma) < 1/(1 - arrival_p).
LyapunovCertDt queueing_exponential_cert(const QueueingParams& p, double gamma);

// Birth-death chain with state-dependent jump probabilities: from i >= 1 move
// down with mu(i), up k steps with lam(i) p_table(i,k); state 0 moves to 1
// surely.  The transient preset uses lam(i) = (i+1)^2 / (i^2 + (i+1)^2) and
// mu(i) = (i^2/(i+1)^2) lam(i) with single-step up moves.
struct BirthDeathDtParams {
  int truncation = 128;
  std::string preset = "transient";  // "transient" | "custom"
  // Custom tables, indexed [i][a]; ignored for the transient preset.
  std::vector<std::vector<double>> lam, mu;
  std::vector<std::string> action_labels;         // per-action labels for custom tables
  std::vector<std::vector<double>> p_table;       // [i][k-1] upward jump law; empty = one step
  std::string cost = "log1p";                     // "log1p": c(i) = log(1+i); "bounded"
  double cost_M = 10;
};

DtModel build_birth_death_dt(const BirthDeathDtParams& p);

// Controlled birth-death rate matrix: interior state s (1-based site s+1) has
// up rate lam*(s+1) + u and down rate mu*(s+1) + u; the bottom state jumps
// everywhere with exponentially decaying rates R 2^{-j}; the top state
// reflects (no up rate) so rows stay conservative.
struct BirthDeathCtParams {
  int truncation = 64;
  double lam = 1.0;
  double mu = 2.0;  // must exceed lam
  std::vector<double> controls = {0.0, 0.5};
  double theta = -1;          // exponent of V; < 0 picks min(0.1, 0.5 log(mu/lam))
  double boundary_rate = -1;  // total exit rate at the bottom state; < 0 = lam + mu
  std::string cost = "constant";  // "constant": c = kappa; "bounded": min(i,M)/M + 0.05 u
  double kappa = 1.0;
  double cost_M = 10;
};

struct BirthDeathCtBuilt {
  CtModel model;
  LyapunovCertCt cert;  // V(s) = exp(theta (s+1)), ell(s) = alpha (s+1)
  double alpha = 0;
};

BirthDeathCtBuilt build_birth_death_ct(const BirthDeathCtParams& p);

// Families reachable from parametric model files.
std::vector<std::string> registered_families();

}  // namespace riskeig
