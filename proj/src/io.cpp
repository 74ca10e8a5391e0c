// SPDX-License-Identifier: MIT
#include "riskeig/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "riskeig/presets.hpp"

namespace riskeig {

namespace {

std::string label_from_json(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

template <class Model>
void fill_explicit(Model& m, const Json& j) {
  m.space.truncation = j.at("states").get<int>();
  m.space.reference_state = j.value("reference_state", 0);
  m.space.closed = j.value("closed", true);
  const int n = m.space.truncation;
  if (n <= 0) throw MalformedModel("states must be positive");

  const auto& actions = j.at("actions");
  if (!actions.is_array() || static_cast<int>(actions.size()) != n)
    throw MalformedModel("actions must list one label array per state");
  m.action_labels.resize(n);
  m.kernel.resize(n);
  m.cost.resize(n);
  for (int i = 0; i < n; ++i) {
    for (const auto& lab : actions[i]) m.action_labels[i].push_back(label_from_json(lab));
    if (m.action_labels[i].empty())
      throw MalformedModel("state " + std::to_string(i) + " has no actions");
    m.kernel[i].resize(m.action_labels[i].size());
    m.cost[i].assign(m.action_labels[i].size(), 0.0);
  }

  // Accumulate triplet entries into per-(state, action) rows, canonically
  // ordered by target state.
  std::vector<std::vector<std::map<int, double>>> acc(n);
  for (int i = 0; i < n; ++i) acc[i].resize(m.action_labels[i].size());
  for (const auto& e : j.at("kernel")) {
    if (!e.is_array() || e.size() != 4) throw MalformedModel("kernel entries must be [i,a,j,value]");
    const int i = e[0].get<int>(), a = e[1].get<int>(), jj = e[2].get<int>();
    const double w = e[3].get<double>();
    if (i < 0 || i >= n || jj < 0 || jj >= n) throw MalformedModel("kernel index outside the truncation");
    if (a < 0 || a >= static_cast<int>(m.action_labels[i].size()))
      throw MalformedModel("kernel action index out of range");
    acc[i][a][jj] += w;
  }
  for (int i = 0; i < n; ++i)
    for (std::size_t a = 0; a < acc[i].size(); ++a)
      for (const auto& [jj, w] : acc[i][a]) m.kernel[i][a].push_back({jj, w});

  for (const auto& e : j.at("cost")) {
    if (!e.is_array() || e.size() != 3) throw MalformedModel("cost entries must be [i,a,value]");
    const int i = e[0].get<int>(), a = e[1].get<int>();
    if (i < 0 || i >= n) throw MalformedModel("cost index outside the truncation");
    if (a < 0 || a >= static_cast<int>(m.cost[i].size()))
      throw MalformedModel("cost action index out of range");
    m.cost[i][a] = e[2].get<double>();
  }
}

LoadedModel build_parametric(const Json& spec) {
  const std::string name = spec.at("name").get<std::string>();
  const Json params = spec.value("params", Json::object());
  LoadedModel lm;
  lm.family = name;

  if (name == "queueing_dt") {
    QueueingParams p;
    if (spec.contains("truncation")) p.truncation = spec.at("truncation").get<int>();
    p.truncation = params.value("truncation", p.truncation);
    p.theta = params.value("theta", p.theta);
    if (params.contains("controls")) p.controls = params.at("controls").get<std::vector<int>>();
    p.arrival_p = params.value("arrival_p", p.arrival_p);
    if (params.contains("arrival_pmf"))
      p.arrival_pmf = params.at("arrival_pmf").get<std::vector<double>>();
    p.cost = params.value("cost", p.cost);
    p.cost_M = params.value("cost_M", p.cost_M);
    p.cost_scale = params.value("cost_scale", p.cost_scale);
    p.cost_kappa = params.value("cost_kappa", p.cost_kappa);
    p.cost_a = params.value("cost_a", p.cost_a);
    auto built = build_queueing_dt(p, params.value("beta", -1.0));
    lm.model = std::move(built.model);
    lm.dt_cert = std::move(built.cert);
    return lm;
  }
  if (name == "birth_death_dt") {
    BirthDeathDtParams p;
    if (spec.contains("truncation")) p.truncation = spec.at("truncation").get<int>();
    p.truncation = params.value("truncation", p.truncation);
    p.preset = params.value("preset", p.preset);
    p.cost = params.value("cost", p.cost);
    p.cost_M = params.value("cost_M", p.cost_M);
    if (params.contains("lam")) p.lam = params.at("lam").get<std::vector<std::vector<double>>>();
    if (params.contains("mu")) p.mu = params.at("mu").get<std::vector<std::vector<double>>>();
    if (params.contains("p_table"))
      p.p_table = params.at("p_table").get<std::vector<std::vector<double>>>();
    if (params.contains("action_labels"))
      p.action_labels = params.at("action_labels").get<std::vector<std::string>>();
    lm.model = build_birth_death_dt(p);
    return lm;
  }
  if (name == "birth_death_ct") {
    BirthDeathCtParams p;
    if (spec.contains("truncation")) p.truncation = spec.at("truncation").get<int>();
    p.truncation = params.value("truncation", p.truncation);
    p.lam = params.value("lam", p.lam);
    p.mu = params.value("mu", p.mu);
    if (params.contains("controls")) p.controls = params.at("controls").get<std::vector<double>>();
    p.theta = params.value("theta", p.theta);
    p.boundary_rate = params.value("boundary_rate", p.boundary_rate);
    p.cost = params.value("cost", p.cost);
    p.kappa = params.value("kappa", p.kappa);
    p.cost_M = params.value("cost_M", p.cost_M);
    auto built = build_birth_death_ct(p);
    lm.model = std::move(built.model);
    lm.ct_cert = std::move(built.cert);
    return lm;
  }
  throw InvalidParams("unknown parametric family: " + name);
}

Json double_array(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json int_array(const std::vector<int>& v) {
  Json a = Json::array();
  for (int x : v) a.push_back(x);
  return a;
}

std::string policy_key(const Policy& v) {
  std::string s;
  for (std::size_t i = 0; i < v.action_index.size(); ++i) {
    if (i) s.push_back('-');
    s += std::to_string(v.action_index[i]);
  }
  return s;
}

}  // namespace

LoadedModel parse_model(const Json& j) {
  if (j.contains("parametric")) return build_parametric(j.at("parametric"));
  const std::string kind = j.at("kind").get<std::string>();
  LoadedModel lm;
  if (kind == "dt") {
    DtModel m;
    fill_explicit(m, j);
    check_structure(m);
    lm.model = std::move(m);
  } else if (kind == "ct") {
    CtModel m;
    fill_explicit(m, j);
    check_structure(m);
    lm.model = std::move(m);
  } else {
    throw MalformedModel("kind must be \"dt\" or \"ct\"");
  }
  return lm;
}

LoadedModel load_model(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw MalformedModel(std::string("cannot parse model file: ") + e.what());
  }
  return parse_model(j);
}

Policy load_policy(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidPolicy(std::string("cannot parse policy file: ") + e.what());
  }
  Policy v;
  try {
    v.action_index = j.at("action_index").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidPolicy(std::string("policy file needs an action_index array: ") + e.what());
  }
  return v;
}

Json policy_to_json(const Policy& v) {
  Json j;
  j["action_index"] = int_array(v.action_index);
  return j;
}

Json model_summary(const LoadedModel& lm) {
  Json j;
  const auto& space = lm.is_dt() ? lm.dt().space : lm.ct().space;
  j["kind"] = lm.is_dt() ? "dt" : "ct";
  j["states"] = space.truncation;
  j["reference_state"] = space.reference_state;
  j["closed"] = space.closed;
  if (!lm.family.empty()) j["family"] = lm.family;
  return j;
}

Json to_json(const ValidationReport& r) {
  Json j;
  j["passed"] = r.passed;
  j["worst_margin"] = r.worst_margin;
  Json vio = Json::array();
  for (const auto& v : r.violations) {
    Json e;
    e["state"] = v.state;
    e["action"] = v.action;
    e["quantity"] = v.quantity;
    e["margin"] = v.margin;
    vio.push_back(std::move(e));
  }
  j["violations"] = std::move(vio);
  return j;
}

Json to_json(const SolveReport& r) {
  Json j;
  j["lambda"] = r.lambda;
  j["converged"] = r.converged;
  j["residual"] = r.residual;
  Json rungs = Json::array();
  for (const auto& rr : r.rungs) {
    Json e;
    e["n"] = rr.n;
    e["rho"] = rr.rho;
    e["iterations"] = rr.iterations;
    e["cw_gap"] = rr.cw_gap;
    rungs.push_back(std::move(e));
  }
  j["rungs"] = std::move(rungs);
  j["psi"] = double_array(r.psi);
  if (r.supersolution_residual) j["supersolution_residual"] = *r.supersolution_residual;
  if (r.lambda_m_proxy) j["lambda_m_proxy"] = *r.lambda_m_proxy;
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const PiaTrace& t) {
  Json j;
  j["lambda"] = t.lambda_final;
  j["converged_by"] = t.converged_by;
  Json iter = Json::array();
  for (const auto& it : t.iterates) {
    Json e;
    e["k"] = it.k;
    e["lambda"] = it.lambda;
    e["max_theta"] = it.max_theta;
    e["policy_changes"] = it.policy_changes;
    iter.push_back(std::move(e));
  }
  j["iterates"] = std::move(iter);
  j["policy"] = int_array(t.policy.action_index);
  j["V"] = double_array(t.V);
  j["theta"] = double_array(t.theta_final);
  return j;
}

Json to_json(const OracleResult& r, std::size_t table_limit) {
  Json j;
  j["lambda_star"] = r.lambda_star;
  j["argmin"] = int_array(r.argmin.action_index);
  j["policies"] = r.table.size();
  Json table = Json::array();
  for (std::size_t k = 0; k < r.table.size() && k < table_limit; ++k) {
    Json e;
    e["policy"] = policy_key(r.table[k].policy);
    e["lambda"] = r.table[k].lambda;
    e["reducible"] = r.table[k].reducible;
    table.push_back(std::move(e));
  }
  j["table"] = std::move(table);
  j["table_truncated"] = r.table.size() > table_limit;
  return j;
}

Json to_json(const SimEstimate& e) {
  Json j;
  j["point"] = e.point;
  j["ci_low"] = e.ci_low;
  j["ci_high"] = e.ci_high;
  j["paths"] = e.paths;
  j["horizon"] = e.horizon;
  j["seed"] = e.seed;
  j["degenerate"] = e.degenerate;
  return j;
}

Json to_json(const VerificationResult& r) {
  Json j;
  j["optimal"] = r.optimal;
  j["inconclusive"] = r.inconclusive;
  j["gap"] = r.gap;
  j["max_residual"] = r.max_residual;
  j["failing_states"] = int_array(r.failing_states);
  return j;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string rungs_csv(const SolveReport& r) {
  std::string out = "n,rho_n,iterations,cw_gap\n";
  for (const auto& rr : r.rungs) {
    out += std::to_string(rr.n) + "," + format_double(rr.rho) + "," +
           std::to_string(rr.iterations) + "," + format_double(rr.cw_gap) + "\n";
  }
  return out;
}

std::string iters_csv(const PiaTrace& t) {
  std::string out = "k,lambda_k,max_theta,policy_changes\n";
  for (const auto& it : t.iterates) {
    out += std::to_string(it.k) + "," + format_double(it.lambda) + "," +
           format_double(it.max_theta) + "," + std::to_string(it.policy_changes) + "\n";
  }
  return out;
}

std::string policy_table_csv(const OracleResult& r) {
  std::string out = "policy,lambda,reducible\n";
  for (const auto& pv : r.table)
    out += policy_key(pv.policy) + "," + format_double(pv.lambda) + "," +
           (pv.reducible ? "1" : "0") + "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace riskeig
