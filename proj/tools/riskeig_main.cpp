// SPDX-License-Identifier: MIT
//
// riskeig: eigenpair solvers for risk-sensitive control of countable-state
// Markov chains.  Subcommands cover validation, the truncation-ladder solver,
// policy iteration, the brute-force oracle, Monte Carlo simulation, and a
// cross-method comparison harness.
//
// Exit codes: 0 success, 1 validation failure, 2 solver non-convergence,
// 3 usage or I/O error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "riskeig/io.hpp"
#include "riskeig/ladder.hpp"
#include "riskeig/model.hpp"
#include "riskeig/montecarlo.hpp"
#include "riskeig/oracle.hpp"
#include "riskeig/pia.hpp"
#include "riskeig/verify.hpp"

namespace {

using namespace riskeig;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Usage-level problems (bad flag values, refused overwrites); exit code 3.
struct UsageError {
  std::string msg;
};

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("RISKEIG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size() || v <= 0) throw UsageError{"bad rung list entry: '" + tok + "'"};
    out.push_back(v);
  }
  if (out.empty()) throw UsageError{"empty rung list"};
  return out;
}

// Collects produced files so the manifest can list every one of them; the
// manifest itself is written last (timestamp lives only there, keeping the
// other outputs byte-stable across reruns).
class OutDir {
 public:
  explicit OutDir(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    write_text_file((dir_ / name).string(), content);
    files_.push_back(name);
  }

  void write_manifest(const std::string& command, const std::string& source, Json config) {
    Json m;
    m["command"] = command;
    m["model_source"] = source;
    m["config"] = std::move(config);
    m["timestamp"] = timestamp_utc();
    m["version"] = kVersion;
    files_.push_back("manifest.json");
    m["outputs"] = files_;
    write_text_file((dir_ / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

int model_states(const LoadedModel& lm) {
  return lm.is_dt() ? lm.dt().num_states() : lm.ct().num_states();
}

int model_reference(const LoadedModel& lm) {
  return lm.is_dt() ? lm.dt().space.reference_state : lm.ct().space.reference_state;
}

Policy uniform_policy(int n) {
  Policy v;
  v.action_index.assign(n, 0);
  return v;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  LoadedModel lm = load_model(path);
  Json out;
  out["model"] = model_summary(lm);
  ValidationReport vr = lm.is_dt() ? validate_model(lm.dt()) : validate_model(lm.ct());
  out["validation"] = to_json(vr);
  bool passed = vr.passed;
  if (lm.dt_cert) {
    ValidationReport cr = check_lyapunov(lm.dt(), *lm.dt_cert);
    out["lyapunov"] = to_json(cr);
    passed = passed && cr.passed;
  } else if (lm.ct_cert) {
    ValidationReport cr = check_lyapunov(lm.ct(), *lm.ct_cert);
    out["lyapunov"] = to_json(cr);
    passed = passed && cr.passed;
  }
  // Informational: a state unreachable from the reference starves the ladder,
  // but sparse reachability is not by itself a defect.
  ValidationReport rr = lm.is_dt() ? check_reachability(lm.dt(), Reachability::PathCondition)
                                   : check_reachability(lm.ct(), Reachability::PathCondition);
  out["reachability"] = to_json(rr);
  out["passed"] = passed;
  std::cout << out.dump(2) << "\n";
  return passed ? 0 : 1;
}

int cmd_solve(const std::string& path, const std::string& rungs, double tol,
              const std::string& mode, const std::string& out_dir) {
  LoadedModel lm = load_model(path);
  LadderConfig cfg;
  cfg.tol_rho = tol;
  if (!rungs.empty()) cfg.rungs = parse_int_list(rungs);
  SolveReport rep;
  if (mode == "near-monotone")
    rep = lm.is_dt() ? solve_near_monotone(lm.dt(), cfg) : solve_near_monotone(lm.ct(), cfg);
  else
    rep = lm.is_dt() ? solve_ladder(lm.dt(), cfg) : solve_ladder(lm.ct(), cfg);

  const Json rj = to_json(rep);
  OutDir out(out_dir);
  out.write("report.json", rj.dump(2) + "\n");
  out.write("rungs.csv", rungs_csv(rep));
  Json config;
  config["rungs"] = rungs.empty() ? "auto" : rungs;
  config["tol"] = tol;
  config["mode"] = mode;
  out.write_manifest("solve", path, std::move(config));
  std::cout << rj.dump(2) << "\n";
  return rep.converged ? 0 : 2;
}

int cmd_pia(const std::string& path, const std::string& init, int truncation, double tol_lambda,
            double tol_theta, int max_iters, const std::string& out_dir) {
  LoadedModel lm = load_model(path);
  const int n = model_states(lm);
  PiaConfig cfg;
  cfg.tol_lambda = tol_lambda;
  cfg.tol_theta = tol_theta;
  cfg.max_iters = max_iters;
  if (truncation > 0) {
    if (truncation > n) throw UsageError{"--truncation exceeds the model size"};
    if (model_reference(lm) >= truncation) throw UsageError{"--truncation excludes the reference state"};
    cfg.domain = DirichletDomain::prefix(truncation, model_reference(lm));
  }
  const Policy v0 = init == "uniform" ? uniform_policy(n) : load_policy(init);
  PiaTrace tr = lm.is_dt() ? run_pia(lm.dt(), v0, cfg) : run_pia(lm.ct(), v0, cfg);

  const Json rj = to_json(tr);
  OutDir out(out_dir);
  out.write("report.json", rj.dump(2) + "\n");
  out.write("iters.csv", iters_csv(tr));
  Json config;
  config["init"] = init;
  config["truncation"] = truncation;
  config["tol_lambda"] = tol_lambda;
  config["tol_theta"] = tol_theta;
  config["max_iters"] = max_iters;
  out.write_manifest("pia", path, std::move(config));
  std::cout << rj.dump(2) << "\n";
  return tr.converged_by == "max_iters" ? 2 : 0;
}

int cmd_oracle(const std::string& path, std::uint64_t cap, const std::string& out_dir) {
  LoadedModel lm = load_model(path);
  OracleResult res =
      lm.is_dt() ? brute_force_lambda_star(lm.dt(), cap) : brute_force_lambda_star(lm.ct(), cap);
  const Json rj = to_json(res);
  OutDir out(out_dir);
  out.write("report.json", rj.dump(2) + "\n");
  out.write("policies.csv", policy_table_csv(res));
  Json config;
  config["cap"] = cap;
  out.write_manifest("oracle", path, std::move(config));
  std::cout << rj.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const std::string& path, const std::string& policy_path, double horizon,
                 long paths, std::uint64_t seed, int start, int threads,
                 const std::string& out_dir) {
  LoadedModel lm = load_model(path);
  Policy v = load_policy(policy_path);
  if (lm.is_dt())
    check_policy(lm.dt(), v);
  else
    check_policy(lm.ct(), v);
  SimConfig cfg;
  cfg.horizon = horizon;
  cfg.paths = paths;
  cfg.seed = seed;
  cfg.start_state = start;
  cfg.threads = threads;
  SimEstimate est = lm.is_dt() ? simulate_dt(lm.dt(), v, cfg) : simulate_ct(lm.ct(), v, cfg);

  const Json rj = to_json(est);
  OutDir out(out_dir);
  out.write("report.json", rj.dump(2) + "\n");
  Json config;
  config["policy"] = policy_path;
  config["horizon"] = horizon;
  config["paths"] = paths;
  config["seed"] = seed;
  config["start"] = start;
  config["threads"] = threads;
  out.write_manifest("simulate", path, std::move(config));
  std::cout << rj.dump(2) << "\n";
  return 0;
}

int cmd_compare(const std::string& path, double tol, std::uint64_t cap, double horizon, long paths,
                std::uint64_t seed, int threads, const std::string& out_dir, bool force) {
  if (fs::exists(out_dir) && !force)
    throw UsageError{"output directory exists, pass --force to overwrite: " + out_dir};
  LoadedModel lm = load_model(path);
  ValidationReport vr = lm.is_dt() ? validate_model(lm.dt()) : validate_model(lm.ct());
  if (!vr.passed) {
    std::cerr << "model failed validation:\n" << to_json(vr).dump(2) << "\n";
    return 1;
  }

  LadderConfig lcfg;
  lcfg.tol_rho = tol;
  SolveReport ladder = lm.is_dt() ? solve_ladder(lm.dt(), lcfg) : solve_ladder(lm.ct(), lcfg);
  Policy pol = lm.is_dt() ? extract_policy(lm.dt(), ladder.psi) : extract_policy(lm.ct(), ladder.psi);

  PiaConfig pcfg;
  const Policy v0 = uniform_policy(model_states(lm));
  PiaTrace pia = lm.is_dt() ? run_pia(lm.dt(), v0, pcfg) : run_pia(lm.ct(), v0, pcfg);

  // The oracle and the simulator both have feasibility limits (policy count,
  // kernel leakage); skip rather than fail the whole comparison.
  bool have_oracle = false;
  OracleResult orc;
  std::string oracle_note;
  try {
    orc = lm.is_dt() ? brute_force_lambda_star(lm.dt(), cap) : brute_force_lambda_star(lm.ct(), cap);
    have_oracle = true;
  } catch (const TooManyPolicies& e) {
    oracle_note = e.what();
  }

  bool have_sim = false;
  SimEstimate est;
  std::string sim_note;
  try {
    SimConfig scfg;
    scfg.horizon = horizon;
    scfg.paths = paths;
    scfg.seed = seed;
    scfg.threads = threads;
    est = lm.is_dt() ? simulate_dt(lm.dt(), pol, scfg) : simulate_ct(lm.ct(), pol, scfg);
    have_sim = true;
  } catch (const LeakyKernel& e) {
    sim_note = e.what();
  }

  Json rj;
  rj["model"] = model_summary(lm);
  rj["ladder"] = to_json(ladder);
  rj["pia"] = to_json(pia);
  rj["oracle"] = have_oracle ? to_json(orc) : Json(nullptr);
  if (!oracle_note.empty()) rj["oracle_skipped"] = oracle_note;
  rj["simulate"] = have_sim ? to_json(est) : Json(nullptr);
  if (!sim_note.empty()) rj["simulate_skipped"] = sim_note;

  Json d;
  d["ladder_vs_pia"] = std::abs(ladder.lambda - pia.lambda_final);
  if (have_oracle) {
    d["ladder_vs_oracle"] = std::abs(ladder.lambda - orc.lambda_star);
    d["pia_vs_oracle"] = std::abs(pia.lambda_final - orc.lambda_star);
  }
  if (have_sim) {
    d["mc_vs_ladder"] = std::abs(est.point - ladder.lambda);
    d["mc_ci_contains_ladder"] = est.ci_low <= ladder.lambda && ladder.lambda <= est.ci_high;
  }
  rj["discrepancy"] = d;

  std::string csv = "method,lambda,delta_vs_oracle\n";
  auto line = [&](const char* name, double lam) {
    csv += std::string(name) + "," + format_double(lam) + ",";
    if (have_oracle) csv += format_double(std::abs(lam - orc.lambda_star));
    csv += "\n";
  };
  line("ladder", ladder.lambda);
  line("pia", pia.lambda_final);
  if (have_oracle) line("oracle", orc.lambda_star);
  if (have_sim) line("mc_point", est.point);

  OutDir out(out_dir);
  out.write("report.json", rj.dump(2) + "\n");
  out.write("rungs.csv", rungs_csv(ladder));
  out.write("iters.csv", iters_csv(pia));
  if (have_oracle) out.write("policies.csv", policy_table_csv(orc));
  out.write("discrepancy.csv", csv);
  Json config;
  config["tol"] = tol;
  config["cap"] = cap;
  config["horizon"] = horizon;
  config["paths"] = paths;
  config["seed"] = seed;
  config["threads"] = threads;
  out.write_manifest("compare", path, std::move(config));
  std::cout << rj.dump(2) << "\n";
  return ladder.converged && pia.converged_by != "max_iters" ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-sensitive eigenpair solvers for controlled Markov chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  int threads_flag = 0;
  app.add_option("--threads", threads_flag,
                 "worker threads for simulation paths (default 1; env RISKEIG_THREADS)");

  auto* validate = app.add_subcommand("validate", "check model structure and shipped certificates");
  std::string validate_model_path;
  validate->add_option("model", validate_model_path, "model JSON file")->required();

  auto* solve = app.add_subcommand("solve", "truncation-ladder eigenpair solver");
  std::string solve_model, solve_rungs, solve_mode = "stable", solve_out = "solve_out";
  double solve_tol = 1e-10;
  bool solve_auto = false;
  solve->add_option("model", solve_model, "model JSON file")->required();
  auto* rungs_opt =
      solve->add_option("--rungs", solve_rungs, "comma-separated rung sizes, e.g. 16,32,64");
  solve->add_flag("--auto", solve_auto, "default doubling schedule (16, 32, ... up to the truncation)")
      ->excludes(rungs_opt);
  solve->add_option("--tol", solve_tol, "eigenvalue stabilization tolerance");
  solve->add_option("--mode", solve_mode, "stable | near-monotone")
      ->check(CLI::IsMember({"stable", "near-monotone"}));
  solve->add_option("--out", solve_out, "output directory (report.json, rungs.csv, manifest.json)");

  auto* pia = app.add_subcommand("pia", "policy iteration on a finite window");
  std::string pia_model, pia_init = "uniform", pia_out = "pia_out";
  int pia_truncation = 0, pia_max_iters = 500;
  double pia_tol_lambda = 1e-12, pia_tol_theta = 1e-9;
  pia->add_option("model", pia_model, "model JSON file")->required();
  pia->add_option("--init", pia_init, "'uniform' (first action everywhere) or a policy JSON file");
  pia->add_option("--truncation", pia_truncation, "window size (default: full model)");
  pia->add_option("--tol-lambda", pia_tol_lambda, "eigenvalue decrease tolerance");
  pia->add_option("--tol-theta", pia_tol_theta, "improvement-error tolerance");
  pia->add_option("--max-iters", pia_max_iters, "iteration cap");
  pia->add_option("--out", pia_out, "output directory (report.json, iters.csv, manifest.json)");

  auto* oracle = app.add_subcommand("oracle", "brute-force policy enumeration");
  std::string oracle_model, oracle_out = "oracle_out";
  std::uint64_t oracle_cap = 1'000'000;
  oracle->add_option("model", oracle_model, "model JSON file")->required();
  oracle->add_option("--cap", oracle_cap, "refuse beyond this many policies");
  oracle->add_option("--out", oracle_out, "output directory (report.json, policies.csv, manifest.json)");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate under a fixed policy");
  std::string sim_model, sim_policy, sim_out = "simulate_out";
  double sim_horizon = 200;
  long sim_paths = 10'000;
  std::uint64_t sim_seed = 0;
  int sim_start = -1;
  simulate->add_option("model", sim_model, "model JSON file")->required();
  simulate->add_option("--policy", sim_policy, "policy JSON file")->required();
  simulate->add_option("--horizon", sim_horizon, "time horizon");
  simulate->add_option("--paths", sim_paths, "number of sample paths");
  simulate->add_option("--seed", sim_seed, "base seed (each path gets its own stream)");
  simulate->add_option("--start", sim_start, "start state (-1 = reference)");
  simulate->add_option("--out", sim_out, "output directory (report.json, manifest.json)");

  auto* compare = app.add_subcommand("compare", "ladder vs pia vs oracle vs Monte Carlo");
  std::string cmp_model, cmp_out = "compare_out";
  double cmp_tol = 1e-10, cmp_horizon = 200;
  std::uint64_t cmp_cap = 1'000'000, cmp_seed = 0;
  long cmp_paths = 10'000;
  bool cmp_force = false;
  compare->add_option("model", cmp_model, "model JSON file")->required();
  compare->add_option("--tol", cmp_tol, "ladder tolerance");
  compare->add_option("--cap", cmp_cap, "oracle policy cap");
  compare->add_option("--horizon", cmp_horizon, "simulation horizon");
  compare->add_option("--paths", cmp_paths, "simulation paths");
  compare->add_option("--seed", cmp_seed, "simulation seed");
  compare->add_option("--out", cmp_out, "output directory");
  compare->add_flag("--force", cmp_force, "overwrite an existing output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  const int threads = resolve_threads(threads_flag);
  try {
    if (validate->parsed()) return cmd_validate(validate_model_path);
    if (solve->parsed())
      return cmd_solve(solve_model, solve_rungs, solve_tol, solve_mode, solve_out);
    if (pia->parsed())
      return cmd_pia(pia_model, pia_init, pia_truncation, pia_tol_lambda, pia_tol_theta,
                     pia_max_iters, pia_out);
    if (oracle->parsed()) return cmd_oracle(oracle_model, oracle_cap, oracle_out);
    if (simulate->parsed())
      return cmd_simulate(sim_model, sim_policy, sim_horizon, sim_paths, sim_seed, sim_start,
                          threads, sim_out);
    if (compare->parsed())
      return cmd_compare(cmp_model, cmp_tol, cmp_cap, cmp_horizon, cmp_paths, cmp_seed, threads,
                         cmp_out, cmp_force);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.msg << "\n";
    return 3;
  } catch (const NoConvergence& e) {
    std::cerr << "solver did not converge: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateEigenvector& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
