// SPDX-License-Identifier: MIT
#pragma once

// Internal damped power iteration shared by the eigenpair solvers.  Not part
// of the public interface.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "riskeig/errors.hpp"

namespace riskeig::detail {

struct CwState {
  Eigen::VectorXd psi;      // current iterate, normalized
  double ratio_lo = 0;      // min_i Op(psi)(i)/psi(i) over the support
  double ratio_hi = 0;      // max_i ...
  double gap = 0;           // caller-scale gap at the last step
  int iterations = 0;
  bool converged = false;
  bool normalized_at_reference = true;
};

// apply: w = Op(psi), full-length, zero off the domain.  gap_scale maps the
// raw ratio bracket to the caller's stopping scale.  Damping adds the previous
// iterate scaled to the current eigenvalue estimate, which suppresses
// period-two oscillation without moving the fixed point.
class CwIterator {
 public:
  using Apply = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
  using GapScale = std::function<double(double lo, double hi)>;

  CwIterator(const std::vector<int>& members, int reference, bool force_reference,
             double support_eps, Apply apply, GapScale gap_scale)
      : members_(members),
        reference_(reference),
        force_reference_(force_reference),
        support_eps_(support_eps),
        apply_(std::move(apply)),
        gap_scale_(std::move(gap_scale)) {}

  // Runs up to budget steps from state s (psi must be set).  Returns when the
  // gap drops below tol or the budget is exhausted.
  void run(CwState& s, double tol, long budget) const {
    Eigen::VectorXd w(s.psi.size());
    for (long step = 0; step < budget; ++step) {
      apply_(s.psi, w);
      const double psi_max = s.psi.maxCoeff();
      if (!(psi_max > 0)) throw DegenerateEigenvector("iterate support collapsed");
      const double cut = support_eps_ * psi_max;
      double lo = std::numeric_limits<double>::infinity();
      double hi = 0;
      bool any = false;
      for (int i : members_) {
        if (s.psi[i] > cut) {
          const double r = w[i] / s.psi[i];
          lo = std::min(lo, r);
          hi = std::max(hi, r);
          any = true;
        }
      }
      if (!any) throw DegenerateEigenvector("iterate support collapsed");
      s.ratio_lo = lo;
      s.ratio_hi = hi;
      s.gap = gap_scale_(lo, hi);
      ++s.iterations;
      if (s.gap < tol) {
        s.converged = true;
        finalize(s, w, cut, lo, tol);
        return;
      }
      const double mid = 0.5 * (lo + hi);
      if (mid > 1e-300) {
        s.psi += w / mid;
      } else {
        // Operator output is numerically zero on the support: nothing grows.
        throw DegenerateEigenvector("principal eigenvalue vanished on the domain");
      }
      interim_normalize(s);
    }
  }

 private:
  // The final scaling has to tell a genuinely small eigenfunction value at the
  // reference (steep but charged) apart from transient mass that only decays
  // there.  Magnitude cannot make that call; the reference's own ratio
  // w(ref)/psi(ref) can: at a fixed point it sits inside the bracket, while a
  // starved reference settles at the growth rate of whatever it can still
  // reach, strictly below.  The comparison runs in the caller's gap scale so
  // the slack means the same thing for both chain kinds.
  void finalize(CwState& s, const Eigen::VectorXd& w, double cut, double lo, double tol) const {
    double ref_val = 0;
    bool charged = false;
    if (reference_ >= 0 && reference_ < s.psi.size()) {
      ref_val = s.psi[reference_];
      if (ref_val > cut) {
        charged = true;
      } else if (ref_val > 0 && w[reference_] > 0) {
        const double r = w[reference_] / ref_val;
        charged = r >= lo || gap_scale_(r, lo) <= std::max(1e-6, 10.0 * tol);
      }
    }
    if (charged) {
      s.psi /= ref_val;
      s.normalized_at_reference = true;
    } else if (force_reference_) {
      throw ReferenceUnreachable("eigenfunction vanishes at the reference state");
    } else {
      const double m = s.psi.maxCoeff();
      if (!(m > 0)) throw DegenerateEigenvector("iterate support collapsed");
      s.psi /= m;
      s.normalized_at_reference = false;
    }
  }

  // Scale choice mid-run never moves the iteration; prefer the reference while
  // it carries support-level mass, otherwise the maximum (dividing by a dying
  // reference would blow the scale up long before convergence).
  void interim_normalize(CwState& s) const {
    const double psi_max = s.psi.maxCoeff();
    if (!(psi_max > 0)) throw DegenerateEigenvector("iterate support collapsed");
    double ref_val = 0;
    if (reference_ >= 0 && reference_ < s.psi.size()) ref_val = s.psi[reference_];
    if (ref_val > support_eps_ * psi_max) {
      s.psi /= ref_val;
      s.normalized_at_reference = true;
    } else {
      s.psi /= psi_max;
      s.normalized_at_reference = false;
    }
  }

  const std::vector<int>& members_;
  int reference_;
  bool force_reference_;
  double support_eps_;
  Apply apply_;
  GapScale gap_scale_;
};

}  // namespace riskeig::detail
