// SPDX-License-Identifier: MIT
#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <variant>

#include "riskeig/ladder.hpp"
#include "riskeig/model.hpp"
#include "riskeig/montecarlo.hpp"
#include "riskeig/oracle.hpp"
#include "riskeig/pia.hpp"
#include "riskeig/verify.hpp"

namespace riskeig {

// Insertion-ordered JSON keeps serialized reports byte-stable across runs.
using Json = nlohmann::ordered_json;

// A loaded model plus any certificates a parametric family ships with.
struct LoadedModel {
  std::variant<DtModel, CtModel> model;
  std::optional<LyapunovCertDt> dt_cert;
  std::optional<LyapunovCertCt> ct_cert;
  std::string family;  // empty for explicit models

  bool is_dt() const { return std::holds_alternative<DtModel>(model); }
  const DtModel& dt() const { return std::get<DtModel>(model); }
  const CtModel& ct() const { return std::get<CtModel>(model); }
};

// Explicit format: {"kind": "dt"|"ct", "states": N, "reference_state": i0,
// "closed": bool, "actions": [[labels], ...], "kernel": [[i, a, j, value], ...],
// "cost": [[i, a, value], ...]}.
// Parametric: {"parametric": {"name": ..., "params": {...}, "truncation": N}}.
LoadedModel load_model(const std::string& path);
LoadedModel parse_model(const Json& j);

// Policy file: {"action_index": [...]}, length = truncation.
Policy load_policy(const std::string& path);
Json policy_to_json(const Policy& v);

Json model_summary(const LoadedModel& lm);

Json to_json(const ValidationReport& r);
Json to_json(const SolveReport& r);
Json to_json(const PiaTrace& t);
Json to_json(const OracleResult& r, std::size_t table_limit = 4096);
Json to_json(const SimEstimate& e);
Json to_json(const VerificationResult& r);

// 17-significant-digit float formatting used by the CSV emitters.
std::string format_double(double x);

std::string rungs_csv(const SolveReport& r);
std::string iters_csv(const PiaTrace& t);
std::string policy_table_csv(const OracleResult& r);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace riskeig
