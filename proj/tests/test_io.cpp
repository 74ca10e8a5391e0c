// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "riskeig/io.hpp"
#include "riskeig/ladder.hpp"

using namespace riskeig;
namespace fs = std::filesystem;

namespace {

Json swap_model_json() {
  Json j;
  j["kind"] = "dt";
  j["states"] = 2;
  j["reference_state"] = 0;
  j["closed"] = true;
  j["actions"] = Json::array({Json::array({"go"}), Json::array({"go"})});
  j["kernel"] = Json::array({Json::array({0, 0, 1, 1.0}), Json::array({1, 0, 0, 1.0})});
  j["cost"] = Json::array({Json::array({0, 0, 0.2}), Json::array({1, 0, 1.0})});
  return j;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("riskeig_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("explicit models merge duplicate triplets into sorted rows") {
  Json j = swap_model_json();
  // Duplicated and out-of-order entries for state 0: the row must come back
  // canonically ordered with summed mass.
  j["kernel"] = Json::array({
      Json::array({0, 0, 1, 0.3}),
      Json::array({1, 0, 0, 1.0}),
      Json::array({0, 0, 0, 0.5}),
      Json::array({0, 0, 1, 0.2}),
  });
  auto lm = parse_model(j);
  REQUIRE(lm.is_dt());
  const auto& row = lm.dt().row(0, 0);
  REQUIRE(row.size() == 2);
  CHECK(row[0].j == 0);
  CHECK(row[0].w == 0.5);
  CHECK(row[1].j == 1);
  CHECK(row[1].w == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(validate_model(lm.dt()).passed);
  CHECK(lm.family.empty());
  CHECK_FALSE(lm.dt_cert.has_value());
}

TEST_CASE("defaults and non-string action labels") {
  Json j = swap_model_json();
  j.erase("reference_state");
  j.erase("closed");
  j["actions"][1] = Json::array({3});  // numeric label gets stringified
  auto lm = parse_model(j);
  CHECK(lm.dt().space.reference_state == 0);
  CHECK(lm.dt().space.closed);
  CHECK(lm.dt().action_labels[1][0] == "3");
}

TEST_CASE("explicit continuous models parse too") {
  Json j;
  j["kind"] = "ct";
  j["states"] = 2;
  j["actions"] = Json::array({Json::array({"a"}), Json::array({"a"})});
  j["kernel"] = Json::array({
      Json::array({0, 0, 0, -1.0}),
      Json::array({0, 0, 1, 1.0}),
      Json::array({1, 0, 0, 2.0}),
      Json::array({1, 0, 1, -2.0}),
  });
  j["cost"] = Json::array({Json::array({0, 0, 0.1}), Json::array({1, 0, 0.9})});
  auto lm = parse_model(j);
  REQUIRE_FALSE(lm.is_dt());
  CHECK(validate_model(lm.ct()).passed);
  CHECK(lm.ct().row_sum(0, 0) == 0.0);
}

TEST_CASE("malformed explicit models are rejected") {
  auto expect_malformed = [](Json j) {
    CHECK_THROWS_AS(parse_model(j), MalformedModel);
  };
  {
    Json j = swap_model_json();
    j["kind"] = "dtmc";
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["states"] = 0;
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["actions"] = Json::array({Json::array({"go"})});  // one row short
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["actions"][0] = Json::array();
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["kernel"].push_back(Json::array({0, 0, 1}));  // arity 3
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["kernel"].push_back(Json::array({0, 0, 7, 0.1}));  // target outside
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["kernel"].push_back(Json::array({0, 4, 1, 0.1}));  // no such action
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["cost"].push_back(Json::array({0, 0}));
    expect_malformed(j);
  }
  {
    Json j = swap_model_json();
    j["cost"].push_back(Json::array({0, 4, 0.1}));
    expect_malformed(j);
  }
}

TEST_CASE("file loading errors") {
  TempDir tmp;
  CHECK_THROWS_AS(load_model(tmp.file("absent.json")), IoError);
  write_text_file(tmp.file("garbage.json"), "not json at all {");
  CHECK_THROWS_AS(load_model(tmp.file("garbage.json")), MalformedModel);

  // Round trip through the filesystem.
  write_text_file(tmp.file("swap.json"), swap_model_json().dump());
  auto lm = load_model(tmp.file("swap.json"));
  CHECK(lm.dt().space.truncation == 2);
}

TEST_CASE("parametric loading covers every family") {
  {
    Json j;
    j["parametric"]["name"] = "queueing_dt";
    j["parametric"]["truncation"] = 32;
    j["parametric"]["params"]["truncation"] = 16;  // params win over the outer key
    auto lm = parse_model(j);
    REQUIRE(lm.is_dt());
    CHECK(lm.dt().space.truncation == 16);
    CHECK(lm.family == "queueing_dt");
    REQUIRE(lm.dt_cert.has_value());
    CHECK(check_lyapunov(lm.dt(), *lm.dt_cert).passed);
  }
  {
    Json j;
    j["parametric"]["name"] = "birth_death_dt";
    j["parametric"]["truncation"] = 8;
    auto lm = parse_model(j);
    REQUIRE(lm.is_dt());
    CHECK(lm.dt().space.truncation == 8);
    CHECK_FALSE(lm.dt_cert.has_value());
  }
  {
    Json j;
    j["parametric"]["name"] = "birth_death_ct";
    j["parametric"]["params"]["truncation"] = 8;
    j["parametric"]["params"]["theta"] = 0.2;
    auto lm = parse_model(j);
    REQUIRE_FALSE(lm.is_dt());
    REQUIRE(lm.ct_cert.has_value());
    CHECK(check_lyapunov(lm.ct(), *lm.ct_cert).passed);
  }
  {
    Json j;
    j["parametric"]["name"] = "riskless_wonder";
    CHECK_THROWS_AS(parse_model(j), InvalidParams);
  }
}

TEST_CASE("policy files round trip") {
  TempDir tmp;
  Policy v;
  v.action_index = {0, 1, 0, 2};
  write_text_file(tmp.file("v.json"), policy_to_json(v).dump());
  Policy back = load_policy(tmp.file("v.json"));
  CHECK(back.action_index == v.action_index);

  write_text_file(tmp.file("bad.json"), "[[");
  CHECK_THROWS_AS(load_policy(tmp.file("bad.json")), InvalidPolicy);
  write_text_file(tmp.file("empty.json"), "{}");
  CHECK_THROWS_AS(load_policy(tmp.file("empty.json")), InvalidPolicy);
}

TEST_CASE("seventeen-digit floats survive the text round trip") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.25) == "-0.25");

  const double awkward[] = {0.1,   1.0 / 3.0, 3.141592653589793, 1e300,
                            5e-324, -0.0,      123456.789012345};
  for (double x : awkward) {
    const std::string s = format_double(x);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == x);
    CHECK(std::signbit(back) == std::signbit(x));
  }
}

TEST_CASE("csv emitters produce exact text") {
  SolveReport rep;
  rep.rungs.push_back({16, 0.1, 7, 0.0009765625});
  rep.rungs.push_back({32, 1.0, 3, 0.5});
  CHECK(rungs_csv(rep) ==
        "n,rho_n,iterations,cw_gap\n"
        "16,0.10000000000000001,7,0.0009765625\n"
        "32,1,3,0.5\n");

  PiaTrace t;
  t.iterates.push_back({0, 0.1, 0.5, 2});
  t.iterates.push_back({1, 1.0, 0.0009765625, 0});
  CHECK(iters_csv(t) ==
        "k,lambda_k,max_theta,policy_changes\n"
        "0,0.10000000000000001,0.5,2\n"
        "1,1,0.0009765625,0\n");

  OracleResult orc;
  orc.table.push_back({Policy{{0, 1, 0}}, 0.5, false});
  orc.table.push_back({Policy{{2}}, -0.25, true});
  CHECK(policy_table_csv(orc) ==
        "policy,lambda,reducible\n"
        "0-1-0,0.5,0\n"
        "2,-0.25,1\n");
}

TEST_CASE("report serialization keeps insertion order and hides absent fields") {
  Json j = swap_model_json();
  auto lm = parse_model(j);
  CHECK(model_summary(lm).dump() ==
        R"({"kind":"dt","states":2,"reference_state":0,"closed":true})");

  SolveReport rep;
  rep.lambda = 0.5;
  rep.converged = true;
  rep.residual = std::nan("");
  rep.psi = Eigen::VectorXd::Ones(2);
  Json out = to_json(rep);
  CHECK_FALSE(out.contains("supersolution_residual"));
  CHECK_FALSE(out.contains("lambda_m_proxy"));
  CHECK(out.dump().find("\"residual\":null") != std::string::npos);

  rep.supersolution_residual = -1e-9;
  rep.lambda_m_proxy = 0.75;
  out = to_json(rep);
  CHECK(out.at("supersolution_residual").get<double>() == -1e-9);
  CHECK(out.at("lambda_m_proxy").get<double>() == 0.75);
}

TEST_CASE("oracle tables can be truncated for reports") {
  OracleResult orc;
  orc.lambda_star = 0.25;
  orc.argmin.action_index = {1, 0};
  orc.table.push_back({Policy{{0, 0}}, 0.9, false});
  orc.table.push_back({Policy{{0, 1}}, 0.7, false});
  orc.table.push_back({Policy{{1, 0}}, 0.25, false});
  Json j = to_json(orc, 2);
  CHECK(j.at("policies").get<std::size_t>() == 3);
  CHECK(j.at("table").size() == 2);
  CHECK(j.at("table_truncated").get<bool>());
  CHECK(j.at("table")[0].at("policy").get<std::string>() == "0-0");

  Json full = to_json(orc);
  CHECK_FALSE(full.at("table_truncated").get<bool>());
}

TEST_CASE("estimate and verification serializers expose every field") {
  SimEstimate e;
  e.point = 0.5;
  e.ci_low = 0.4;
  e.ci_high = 0.6;
  e.paths = 100;
  e.horizon = 20.0;
  e.seed = 7;
  e.degenerate = true;
  Json je = to_json(e);
  for (const char* k : {"point", "ci_low", "ci_high", "paths", "horizon", "seed", "degenerate"})
    CHECK(je.contains(k));
  CHECK(je.at("degenerate").get<bool>());

  VerificationResult vr;
  vr.optimal = false;
  vr.gap = 0.125;
  vr.failing_states = {1, 3};
  Json jv = to_json(vr);
  CHECK(jv.at("failing_states").size() == 2);
  CHECK(jv.at("gap").get<double>() == 0.125);
}

TEST_CASE("serialized solve reports are byte-stable across runs") {
  auto lm = parse_model(swap_model_json());
  auto a = solve_ladder(lm.dt());
  auto b = solve_ladder(lm.dt());
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(rungs_csv(a) == rungs_csv(b));
}
