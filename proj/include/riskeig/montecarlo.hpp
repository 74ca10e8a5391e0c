// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>

#include "riskeig/model.hpp"

namespace riskeig {

struct SimConfig {
  double horizon = 200;  // DT: number of steps (integer part); CT: time length
  long paths = 10'000;
  std::uint64_t seed = 0;
  int start_state = -1;  // -1 = reference state
  int batches = 32;      // batch count for the confidence interval
  int threads = 1;       // path generation only; the estimate is thread-invariant
};

struct SimEstimate {
  double point = 0;  // (1/T) log of the mean exponentiated path cost
  double ci_low = 0;
  double ci_high = 0;
  long paths = 0;
  double horizon = 0;
  std::uint64_t seed = 0;
  // Set when a single path carries more than half the total weight; the
  // interval is then unreliable.
  bool degenerate = false;
};

// Estimates the risk-sensitive growth rate of a fixed policy by exact path
// simulation and a deterministic pairwise log-sum-exp reduction.  Path p draws
// from the stream (seed, p), so the result does not depend on the thread
// count.  The 95% interval comes from batch means on the log scale and is
// widened, if necessary, to contain the pooled point estimate.
SimEstimate simulate_dt(const DtModel& m, const Policy& v, const SimConfig& cfg = {});

// CT version: exponential sojourns at rate -q(i|i,v(i)) and jump probabilities
// proportional to the off-diagonal rates.
SimEstimate simulate_ct(const CtModel& m, const Policy& v, const SimConfig& cfg = {});

}  // namespace riskeig
