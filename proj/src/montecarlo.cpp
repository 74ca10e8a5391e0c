// SPDX-License-Identifier: MIT
#include "riskeig/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "riskeig/rng.hpp"

namespace riskeig {

namespace {

constexpr double kLeakTol = 1e-9;

double lse2(double a, double b) {
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Deterministic pairwise reduction; the result does not depend on how paths
// were scheduled across threads.
double lse_tree(const std::vector<double>& s, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return s[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return lse2(lse_tree(s, lo, mid), lse_tree(s, mid, hi));
}

// Two-sided 95% Student quantile via the Cornish-Fisher expansion; plenty for
// batch counts in the tens.
double t_quantile_975(int df) {
  const double z = 1.959963984540054;
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
  const double d = df;
  return z + (z3 + z) / (4 * d) + (5 * z5 + 16 * z3 + 3 * z) / (96 * d * d) +
         (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / (384 * d * d * d);
}

struct DtRow {
  double cost = 0;
  std::vector<double> cum;  // cumulative masses
  std::vector<int> target;
  double total = 0;
};

struct CtRow {
  double cost = 0;
  double exit_rate = 0;     // -q(i|i)
  std::vector<double> cum;  // cumulative off-diagonal rates
  std::vector<int> target;
  double off_total = 0;
};

int sample_index(const std::vector<double>& cum, double total, double u) {
  const double x = u * total;
  // Rows are short; a linear walk beats binary search at this scale.
  for (std::size_t k = 0; k < cum.size(); ++k)
    if (x <= cum[k]) return static_cast<int>(k);
  return static_cast<int>(cum.size()) - 1;
}

SimEstimate reduce(std::vector<double>& S, double T, const SimConfig& cfg) {
  const long N = static_cast<long>(S.size());
  const double lse_all = lse_tree(S, 0, S.size());
  SimEstimate est;
  est.point = (lse_all - std::log(static_cast<double>(N))) / T;
  est.paths = N;
  est.horizon = cfg.horizon;
  est.seed = cfg.seed;

  const double s_max = *std::max_element(S.begin(), S.end());
  est.degenerate = s_max > lse_all - std::log(2.0);

  // Never hand an empty range to the reduction: at most one batch per path.
  const int B = std::max(2, static_cast<int>(std::min<long>(cfg.batches, N)));
  std::vector<double> bm(B);
  const long q = N / B, r = N % B;
  std::size_t pos = 0;
  for (int b = 0; b < B; ++b) {
    const long nb = q + (b < r ? 1 : 0);
    bm[b] = (lse_tree(S, pos, pos + nb) - std::log(static_cast<double>(nb))) / T;
    pos += nb;
  }
  double mean = 0;
  for (double x : bm) mean += x;
  mean /= B;
  double var = 0;
  for (double x : bm) var += (x - mean) * (x - mean);
  var /= (B - 1);
  const double half = t_quantile_975(B - 1) * std::sqrt(var / B);
  // The pooled log-mean-exp sits above the section mean by a Jensen gap, and
  // each side carries its own bias direction: sections understate the growth
  // rate, the pooled point can still miss rare heavy paths.  Span both
  // centers, widened by the section spread, so the interval covers the
  // plausible range instead of clamping at the pooled value.
  est.ci_low = std::min(mean, est.point) - half;
  est.ci_high = std::max(mean, est.point) + half;
  return est;
}

template <class Body>
void run_paths(long paths, int threads, Body body) {
  if (threads <= 1) {
    for (long p = 0; p < paths; ++p) body(p);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (paths + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long lo = t * chunk, hi = std::min(paths, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([=] {
      for (long p = lo; p < hi; ++p) body(p);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

SimEstimate simulate_dt(const DtModel& m, const Policy& v, const SimConfig& cfg) {
  check_structure(m);
  check_policy(m, v);
  if (!(cfg.horizon >= 1)) throw InvalidParams("horizon must be at least one step");
  if (cfg.paths < 2) throw InvalidParams("need at least two paths");
  const long T = static_cast<long>(cfg.horizon);
  const int start = cfg.start_state < 0 ? m.space.reference_state : cfg.start_state;
  if (start < 0 || start >= m.num_states()) throw InvalidParams("start state outside the truncation");

  std::vector<DtRow> rows(m.num_states());
  for (int i = 0; i < m.num_states(); ++i) {
    const int a = v.action_index[i];
    if (std::abs(m.leakage(i, a)) > kLeakTol)
      throw LeakyKernel("row at state " + std::to_string(i) + " is not stochastic under the policy");
    auto& r = rows[i];
    r.cost = m.cost[i][a];
    double cum = 0;
    for (const auto& e : m.row(i, a)) {
      cum += e.w;
      r.cum.push_back(cum);
      r.target.push_back(e.j);
    }
    r.total = cum;
  }

  std::vector<double> S(cfg.paths);
  run_paths(cfg.paths, cfg.threads, [&](long p) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(p));
    int x = start;
    double acc = 0;
    for (long t = 0; t < T; ++t) {
      const auto& r = rows[x];
      acc += r.cost;
      x = r.target[sample_index(r.cum, r.total, rng.next_unit())];
    }
    S[p] = acc;
  });
  return reduce(S, static_cast<double>(T), cfg);
}

SimEstimate simulate_ct(const CtModel& m, const Policy& v, const SimConfig& cfg) {
  check_structure(m);
  check_policy(m, v);
  if (!(cfg.horizon > 0)) throw InvalidParams("horizon must be positive");
  if (cfg.paths < 2) throw InvalidParams("need at least two paths");
  const double T = cfg.horizon;
  const int start = cfg.start_state < 0 ? m.space.reference_state : cfg.start_state;
  if (start < 0 || start >= m.num_states()) throw InvalidParams("start state outside the truncation");

  std::vector<CtRow> rows(m.num_states());
  for (int i = 0; i < m.num_states(); ++i) {
    const int a = v.action_index[i];
    if (std::abs(m.row_sum(i, a)) > kLeakTol)
      throw LeakyKernel("row at state " + std::to_string(i) + " is not conservative under the policy");
    auto& r = rows[i];
    r.cost = m.cost[i][a];
    double cum = 0;
    for (const auto& e : m.row(i, a)) {
      if (e.j == i) {
        r.exit_rate = -e.w;
        continue;
      }
      cum += e.w;
      r.cum.push_back(cum);
      r.target.push_back(e.j);
    }
    r.off_total = cum;
  }

  std::vector<double> S(cfg.paths);
  run_paths(cfg.paths, cfg.threads, [&](long p) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(p));
    int x = start;
    double t = 0, acc = 0;
    while (true) {
      const auto& r = rows[x];
      if (r.exit_rate <= 1e-14 || r.off_total <= 0) {
        acc += r.cost * (T - t);  // absorbing: sit out the remaining time
        break;
      }
      const double sojourn = rng.next_exponential(r.exit_rate);
      if (t + sojourn >= T) {
        acc += r.cost * (T - t);
        break;
      }
      acc += r.cost * sojourn;
      t += sojourn;
      x = r.target[sample_index(r.cum, r.off_total, rng.next_unit())];
    }
    S[p] = acc;
  });
  return reduce(S, T, cfg);
}

}  // namespace riskeig
