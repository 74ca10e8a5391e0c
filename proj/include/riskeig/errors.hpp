// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace riskeig {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Structural problems in a model definition (bad indices, empty action sets,
// ragged tables).  Quantitative violations go through ValidationReport instead.
struct MalformedModel : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Shifted cost is not strictly negative on the requested domain, so the
// Poisson operator is not a contraction.
struct ShiftInsufficient : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

// Iterate support collapsed to the empty set (killed mass absorbed everything).
struct DegenerateEigenvector : Error {
  using Error::Error;
};

// Eigenfunction vanishes where a selection or normalization is required.
struct ZeroPsi : Error {
  using Error::Error;
};

struct ReferenceUnreachable : Error {
  using Error::Error;
};

struct TooManyPolicies : Error {
  TooManyPolicies(const std::string& what, double count) : Error(what), policy_count(count) {}
  double policy_count;
};

struct ZeroMatrix : Error {
  using Error::Error;
};

// Simulation requires mass-conserving rows under the chosen policy.
struct LeakyKernel : Error {
  using Error::Error;
};

struct InvalidPolicy : Error {
  using Error::Error;
};

struct InvalidParams : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace riskeig
