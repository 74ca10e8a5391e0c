// SPDX-License-Identifier: MIT
#include "riskeig/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace riskeig {

namespace {

std::string label_of(double x) {
  // Integer-valued labels print without a decimal point.
  if (x == std::floor(x) && std::abs(x) < 1e15) return std::to_string(static_cast<long long>(x));
  return std::to_string(x);
}

std::vector<double> arrival_law(const QueueingParams& p) {
  if (!p.arrival_pmf.empty()) {
    double sum = 0;
    for (double w : p.arrival_pmf) {
      if (w < 0) throw InvalidParams("arrival pmf entries must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidParams("arrival pmf must sum to one");
    return p.arrival_pmf;
  }
  if (!(p.arrival_p > 0 && p.arrival_p < 1)) throw InvalidParams("arrival_p must lie in (0,1)");
  // Geometric on {0,1,...}; cut where the remaining tail drops below 1e-16.
  // The cut mass is left out deliberately: it leaks past any finite window.
  std::vector<double> pmf;
  double tail = 1.0;
  for (int k = 0; tail > 1e-16; ++k) {
    const double w = p.arrival_p * std::pow(1.0 - p.arrival_p, k);
    pmf.push_back(w);
    tail -= w;
  }
  return pmf;
}

double queueing_cost(const QueueingParams& p, int i, int u) {
  if (p.cost == "bounded")
    return p.cost_scale * std::min<double>(i, p.cost_M) / p.cost_M + p.cost_kappa * u;
  if (p.cost == "linear") return p.cost_a * i + p.cost_kappa * u;
  throw InvalidParams("unknown queueing cost preset: " + p.cost);
}

void validate_queueing(const QueueingParams& p) {
  if (p.truncation < 4) throw InvalidParams("queueing truncation too small");
  if (!(p.theta > 0 && p.theta < 1)) throw InvalidParams("theta must lie in (0,1)");
  if (p.controls.empty()) throw InvalidParams("need at least one control");
  for (int u : p.controls)
    if (u < 0) throw InvalidParams("controls must be nonnegative");
  if (!(p.cost_M > 0)) throw InvalidParams("cost_M must be positive");
}

DtModel queueing_model(const QueueingParams& p) {
  validate_queueing(p);
  const int n = p.truncation;
  const auto pmf = arrival_law(p);

  DtModel m;
  m.space.truncation = n;
  m.space.reference_state = 0;
  m.space.closed = false;  // arrival mass beyond the window is killed
  m.action_labels.resize(n);
  m.kernel.resize(n);
  m.cost.resize(n);

  for (int i = 0; i < n; ++i) {
    const double drift = (1.0 - p.theta) * i;
    const double fl = std::floor(drift);
    const double frac = drift - fl;
    for (std::size_t a = 0; a < p.controls.size(); ++a) {
      const int u = p.controls[a];
      std::map<int, double> mass;
      auto deposit = [&](int base, double wb) {
        if (wb <= 0) return;
        for (std::size_t k = 0; k < pmf.size(); ++k) {
          const int j = std::max(0, base - u + static_cast<int>(k));
          if (j < n) mass[j] += wb * pmf[k];
        }
      };
      // Mean-preserving rounding of the post-reneging length.
      deposit(static_cast<int>(fl), 1.0 - frac);
      deposit(static_cast<int>(fl) + 1, frac);
      KernelRow row;
      for (const auto& [j, w] : mass) row.push_back({j, w});
      m.kernel[i].push_back(std::move(row));
      m.cost[i].push_back(queueing_cost(p, i, u));
      m.action_labels[i].push_back(label_of(u));
    }
  }
  return m;
}

// Fits the exception set and constant so the certificate holds as checked on
// the window: everything with negative slack goes into K and C_hat covers the
// worst excess.
template <class Rhs>
void fit_exception_set(const DtModel& m, const Eigen::VectorXd& V, Rhs rhs_without_K,
                       std::vector<int>& K, double& C_hat) {
  K.clear();
  C_hat = 0;
  for (int i = 0; i < m.num_states(); ++i) {
    double lhs = 0;
    for (int a = 0; a < m.num_actions(i); ++a) {
      double s = 0;
      for (const auto& e : m.row(i, a)) s += V[e.j] * e.w;
      lhs = std::max(lhs, s);
    }
    const double slack = rhs_without_K(i) - lhs;
    if (slack < 0) {
      K.push_back(i);
      C_hat = std::max(C_hat, -slack);
    }
  }
}

}  // namespace

QueueingBuilt build_queueing_dt(const QueueingParams& p, double beta) {
  QueueingBuilt out;
  out.model = queueing_model(p);
  if (beta < 0) beta = p.theta / 2;
  if (!(beta > 0 && beta < 1)) throw InvalidParams("beta must lie in (0,1)");

  LyapunovCertDt cert;
  cert.mode = LyapunovMode::DriftRate;
  cert.beta = beta;
  cert.V.resize(p.truncation);
  for (int i = 0; i < p.truncation; ++i) cert.V[i] = i + 1;
  fit_exception_set(out.model, cert.V,
                    [&](int i) { return (1.0 - beta) * cert.V[i]; }, cert.K, cert.C_hat);
  out.cert = std::move(cert);
  return out;
}

LyapunovCertDt queueing_exponential_cert(const QueueingParams& p, double gamma) {
  validate_queueing(p);
  if (!(gamma > 0)) throw InvalidParams("gamma must be positive");
  // A geometric arrival law only has the exponential moment below its decay.
  if (p.arrival_pmf.empty() && !(std::exp(gamma) < 1.0 / (1.0 - p.arrival_p)))
    throw InvalidParams("gamma too large for a finite arrival exponential moment");
  const auto pmf = arrival_law(p);
  double mgf = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k) mgf += pmf[k] * std::exp(gamma * k);
  const double a1 = std::log(mgf);

  const DtModel m = queueing_model(p);
  LyapunovCertDt cert;
  cert.mode = LyapunovMode::NormLike;
  cert.V.resize(p.truncation);
  cert.ell.resize(p.truncation);
  for (int i = 0; i < p.truncation; ++i) {
    cert.V[i] = std::exp(gamma * i);
    // The trailing gamma covers rounding the drift up to the next integer.
    cert.ell[i] = std::max(0.0, gamma * p.theta * i - a1 - gamma);
  }
  fit_exception_set(m, cert.V, [&](int i) { return std::exp(-cert.ell[i]) * cert.V[i]; }, cert.K,
                    cert.C_hat);
  cert.tail_index = cert.K.empty() ? 0 : cert.K.back() + 1;
  // The tail scan needs ell - max cost nondecreasing; ell has a flat head
  // where the bounded cost still climbs, so start the tail after the last
  // decreasing step.
  const auto proxy = [&](int i) {
    double c = 0;
    for (int u : p.controls) c = std::max(c, queueing_cost(p, i, u));
    return cert.ell[i] - c;
  };
  for (int i = 1; i < p.truncation; ++i)
    if (proxy(i) < proxy(i - 1) - 1e-12) cert.tail_index = std::max(cert.tail_index, i);
  cert.tail_index = std::min(cert.tail_index, p.truncation - 1);
  return cert;
}

DtModel build_birth_death_dt(const BirthDeathDtParams& p) {
  const int n = p.truncation;
  if (n < 3) throw InvalidParams("birth-death truncation too small");

  std::vector<std::vector<double>> lam = p.lam, mu = p.mu;
  std::vector<std::string> labels = p.action_labels;
  if (p.preset == "transient") {
    labels = {"0"};
    lam.assign(n, {0.0});
    mu.assign(n, {0.0});
    for (int i = 0; i < n; ++i) {
      const double up = static_cast<double>(i + 1) * (i + 1);
      const double down = static_cast<double>(i) * i;
      lam[i][0] = up / (down + up);
      mu[i][0] = down / (down + up);
    }
  } else if (p.preset == "custom") {
    if (static_cast<int>(lam.size()) != n || static_cast<int>(mu.size()) != n)
      throw InvalidParams("custom tables must cover the truncation");
    if (labels.empty()) throw InvalidParams("custom tables need action labels");
    for (int i = 0; i < n; ++i) {
      if (lam[i].size() != labels.size() || mu[i].size() != labels.size())
        throw InvalidParams("ragged custom tables");
      for (std::size_t a = 0; a < labels.size(); ++a) {
        if (std::abs(lam[i][a] + mu[i][a] - 1.0) > 1e-12)
          throw InvalidParams("lam + mu must equal one");
        if (i >= 1 && !(mu[i][a] > 0)) throw InvalidParams("mu must be positive off the origin");
      }
    }
  } else {
    throw InvalidParams("unknown birth-death preset: " + p.preset);
  }
  const int na = static_cast<int>(labels.size());

  DtModel m;
  m.space.truncation = n;
  m.space.reference_state = 0;
  m.space.closed = false;  // upward jumps leak past the window
  m.action_labels.assign(n, labels);
  m.kernel.resize(n);
  m.cost.resize(n);

  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < na; ++a) {
      KernelRow row;
      if (i == 0) {
        row.push_back({1, 1.0});
      } else {
        if (mu[i][a] > 0) row.push_back({i - 1, mu[i][a]});
        if (p.p_table.empty()) {
          if (i + 1 < n && lam[i][a] > 0) row.push_back({i + 1, lam[i][a]});
        } else {
          if (i >= static_cast<int>(p.p_table.size()))
            throw InvalidParams("p_table must cover every interior state");
          const auto& pk = p.p_table[i];
          for (std::size_t k = 0; k < pk.size(); ++k) {
            const int j = i + 1 + static_cast<int>(k);
            if (j < n && lam[i][a] * pk[k] > 0) row.push_back({j, lam[i][a] * pk[k]});
          }
        }
      }
      m.kernel[i].push_back(std::move(row));
      double c = 0;
      if (p.cost == "log1p")
        c = std::log1p(static_cast<double>(i));
      else if (p.cost == "bounded")
        c = 0.2 * std::min<double>(i, p.cost_M) / p.cost_M;
      else
        throw InvalidParams("unknown birth-death cost preset: " + p.cost);
      m.cost[i].push_back(c);
    }
  }
  return m;
}

BirthDeathCtBuilt build_birth_death_ct(const BirthDeathCtParams& p) {
  const int n = p.truncation;
  if (n < 4) throw InvalidParams("birth-death truncation too small");
  if (!(p.lam > 0 && p.mu > p.lam)) throw InvalidParams("need 0 < lam < mu");
  if (p.controls.empty()) throw InvalidParams("need at least one control");
  for (double u : p.controls)
    if (u < 0) throw InvalidParams("controls must be nonnegative");

  const double theta = p.theta > 0 ? p.theta : std::min(0.1, 0.5 * std::log(p.mu / p.lam));
  const double alpha = -(p.mu * (std::exp(-theta) - 1.0) + p.lam * (std::exp(theta) - 1.0)) / 2.0;
  if (!(alpha > 0)) throw InvalidParams("theta too large: drift exponent not positive");
  const double R = p.boundary_rate > 0 ? p.boundary_rate : p.lam + p.mu;

  CtModel m;
  m.space.truncation = n;
  m.space.reference_state = 0;
  m.space.closed = true;
  m.action_labels.resize(n);
  m.kernel.resize(n);
  m.cost.resize(n);

  // Bottom state jumps everywhere with exponentially decaying rates.
  double Z = 0;
  for (int j = 1; j < n; ++j) Z += std::pow(2.0, -j);

  for (int s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < p.controls.size(); ++a) {
      const double u = p.controls[a];
      KernelRow row;
      if (s == 0) {
        for (int j = 1; j < n; ++j) row.push_back({j, R * std::pow(2.0, -j) / Z});
        row.push_back({0, -R});
      } else {
        const double site = s + 1;  // 1-based site index of the classical chain
        const double up = p.lam * site + u;
        const double down = p.mu * site + u;
        double diag = 0;
        row.push_back({s - 1, down});
        diag -= down;
        if (s + 1 < n) {  // top state reflects: no upward rate
          row.push_back({s + 1, up});
          diag -= up;
        }
        row.push_back({s, diag});
      }
      m.kernel[s].push_back(std::move(row));
      double c = 0;
      if (p.cost == "constant")
        c = p.kappa;
      else if (p.cost == "bounded")
        c = 0.2 * std::min<double>(s, p.cost_M) / p.cost_M + 0.05 * u;
      else
        throw InvalidParams("unknown birth-death cost preset: " + p.cost);
      m.cost[s].push_back(c);
      m.action_labels[s].push_back(label_of(u));
    }
  }

  BirthDeathCtBuilt out;
  out.model = std::move(m);
  out.alpha = alpha;

  LyapunovCertCt cert;
  cert.mode = LyapunovMode::NormLike;
  cert.V.resize(n);
  cert.ell.resize(n);
  for (int s = 0; s < n; ++s) {
    cert.V[s] = std::exp(theta * (s + 1));
    cert.ell[s] = alpha * (s + 1);
  }
  // Fit K and C_hat on the window so the rate drift holds as checked.
  cert.K.clear();
  cert.C_hat = 0;
  for (int s = 0; s < n; ++s) {
    double lhs = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < out.model.num_actions(s); ++a) {
      double acc = 0;
      for (const auto& e : out.model.row(s, a)) acc += cert.V[e.j] * e.w;
      lhs = std::max(lhs, acc);
    }
    const double slack = -cert.ell[s] * cert.V[s] - lhs;
    if (slack < 0) {
      cert.K.push_back(s);
      cert.C_hat = std::max(cert.C_hat, -slack);
    }
  }
  cert.tail_index = cert.K.empty() ? 0 : cert.K.back() + 1;

  LyapunovCertCt::Explosion ex;
  ex.V_tilde.resize(n);
  for (int s = 0; s < n; ++s) ex.V_tilde[s] = s + 2;
  ex.C0 = 0;
  ex.C1 = 0;
  ex.C2 = 0;
  for (int s = 0; s < n; ++s) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < out.model.num_actions(s); ++a) {
      double acc = 0;
      for (const auto& e : out.model.row(s, a)) acc += ex.V_tilde[e.j] * e.w;
      worst = std::max(worst, acc);
    }
    ex.C2 = std::max(ex.C2, worst);
    ex.C1 = std::max(ex.C1, out.model.total_rate(s) / ex.V_tilde[s]);
  }
  cert.explosion = std::move(ex);
  out.cert = std::move(cert);
  return out;
}

std::vector<std::string> registered_families() {
  return {"queueing_dt", "birth_death_dt", "birth_death_ct"};
}

}  // namespace riskeig
