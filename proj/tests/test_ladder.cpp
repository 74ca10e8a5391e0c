// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riskeig/ladder.hpp"
#include "riskeig/oracle.hpp"
#include "riskeig/presets.hpp"
#include "testutil.hpp"

using namespace riskeig;

TEST_CASE("constant cost on a closed chain solves exactly") {
  CounterRng rng(201, 0);
  DtModel m = testutil::random_dt(rng);
  for (auto& row : m.cost)
    for (auto& c : row) c = 0.7;
  auto rep = solve_ladder(m);
  CHECK(rep.converged);
  CHECK(rep.lambda == doctest::Approx(0.7).epsilon(1e-10));
  for (int i = 0; i < m.num_states(); ++i) CHECK(rep.psi[i] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.residual < 1e-10);
}

TEST_CASE("full-window solve matches the dense policy sweep") {
  CounterRng rng(203, 0);
  for (int rep_i = 0; rep_i < 5; ++rep_i) {
    DtModel m = testutil::random_dt(rng);
    auto rep = solve_ladder(m);
    const double star = testutil::dense_lambda_star_dt(m);
    CHECK(rep.converged);
    CHECK(rep.lambda == doctest::Approx(star).epsilon(1e-8));
    CHECK(rep.psi[0] == 1.0);  // reference normalization

    // The greedy selector recovers a policy whose own growth rate is optimal
    // (ties allowed).
    Policy v = extract_policy(m, rep.psi);
    CHECK(testutil::dense_dt_policy_lambda(m, v) == doctest::Approx(star).epsilon(1e-8));
  }
}

TEST_CASE("continuous-time solve matches the dense policy sweep") {
  CounterRng rng(205, 0);
  for (int rep_i = 0; rep_i < 5; ++rep_i) {
    CtModel m = testutil::random_ct(rng);
    auto rep = solve_ladder(m);
    const double star = testutil::dense_lambda_star_ct(m);
    CHECK(rep.converged);
    CHECK(rep.lambda == doctest::Approx(star).epsilon(1e-8));
    Policy v = extract_policy(m, rep.psi);
    CHECK(testutil::dense_ct_policy_lambda(m, v) == doctest::Approx(star).epsilon(1e-8));
  }
}

TEST_CASE("every rung eigenvalue sits below the closed-model optimum") {
  CounterRng rng(207, 0);
  DtModel m = testutil::random_dt(rng);
  const int n = m.num_states();
  LadderConfig cfg;
  for (int k = 1; k <= n; ++k) cfg.rungs.push_back(k);
  auto rep = solve_ladder(m, cfg);
  const double star = testutil::dense_lambda_star_dt(m);
  REQUIRE(rep.rungs.size() >= 2);
  for (const auto& r : rep.rungs) CHECK(r.rho <= star + 1e-8);
  // Killing only shrinks as the window grows, so the rung values increase.
  for (std::size_t k = 1; k < rep.rungs.size(); ++k)
    CHECK(rep.rungs[k].rho >= rep.rungs[k - 1].rho - 1e-9);
}

TEST_CASE("adding a constant to the cost shifts lambda and fixes psi") {
  CounterRng rng(209, 0);
  DtModel m = testutil::random_dt(rng);
  DtModel shifted = m;
  for (auto& row : shifted.cost)
    for (auto& c : row) c += 1.0;
  auto a = solve_ladder(m);
  auto b = solve_ladder(shifted);
  CHECK(b.lambda - a.lambda == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((a.psi - b.psi).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("different schedules land on the same pair") {
  CounterRng rng(211, 0);
  DtModel m = testutil::random_dt(rng);
  const int n = m.num_states();
  LadderConfig one;
  one.rungs = {n};
  LadderConfig many;
  for (int k = 2; k <= n; ++k) many.rungs.push_back(k);
  auto a = solve_ladder(m, one);
  auto b = solve_ladder(m, many);
  CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-7));
  CHECK((a.psi - b.psi).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("schedules must increase strictly and stay inside the window") {
  DtModel m = testutil::make_swap_dt(0.3, 0.7);
  LadderConfig cfg;
  cfg.rungs = {2, 2};
  CHECK_THROWS_AS(solve_ladder(m, cfg), MalformedModel);
  cfg.rungs = {5};
  CHECK_THROWS_AS(solve_ladder(m, cfg), MalformedModel);
  cfg.rungs = {0};
  CHECK_THROWS_AS(solve_ladder(m, cfg), MalformedModel);
}

TEST_CASE("open queueing model stabilizes before the window is exhausted") {
  QueueingParams p;
  p.truncation = 128;
  auto built = build_queueing_dt(p);
  auto rep = solve_ladder(built.model);
  CHECK(rep.converged);
  REQUIRE(rep.rungs.size() >= 2);
  const auto& last = rep.rungs.back();
  const auto& prev = rep.rungs[rep.rungs.size() - 2];
  CHECK(std::abs(last.rho - prev.rho) < 1e-8);
  CHECK(rep.lambda >= -1e-10);  // nonnegative costs
}

TEST_CASE("reference state starved of mass raises an error") {
  DtModel m;
  m.space.truncation = 2;
  m.space.reference_state = 0;
  m.space.closed = false;
  m.action_labels = {{"a"}, {"a"}};
  m.kernel = {{{}}, {{{1, 1.0}}}};
  m.cost = {{0.0}, {0.4}};
  LadderConfig cfg;
  cfg.rungs = {2};
  CHECK_THROWS_AS(solve_ladder(m, cfg), ReferenceUnreachable);
}

TEST_CASE("near-monotone mode reports a supersolution and a proxy") {
  // Linear holding cost grows without bound while reneging keeps the optimal
  // value finite, so the cost dominates the value on the visible tail.
  QueueingParams p;
  p.truncation = 128;
  p.cost = "linear";
  DtModel m = build_queueing_dt(p).model;
  auto rep = solve_near_monotone(m);
  CHECK(rep.converged);
  REQUIRE(rep.supersolution_residual.has_value());
  CHECK(*rep.supersolution_residual <= 1e-8);
  REQUIRE(rep.lambda_m_proxy.has_value());
  // The proxy samples a subset of policies, so it can only overestimate the
  // optimal value.
  CHECK(rep.lambda <= *rep.lambda_m_proxy + 1e-8);
}

TEST_CASE("near-monotone diagnostic flags a flat tail cost") {
  CounterRng rng(213, 0);
  DtModel m = testutil::random_dt(rng);
  for (auto& row : m.cost)
    for (auto& c : row) c = 0.9;
  auto rep = solve_near_monotone(m);
  CHECK(rep.lambda == doctest::Approx(0.9).epsilon(1e-9));
  bool warned = false;
  for (const auto& w : rep.warnings)
    if (w.find("tail") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("near-monotone solve agrees with the sweep when costs grow") {
  // Five states, increasing costs, two actions; near-monotone structure holds
  // on the finite window.
  CounterRng rng(215, 0);
  DtModel m = testutil::random_dt(rng);
  for (int i = 0; i < m.num_states(); ++i)
    for (auto& c : m.cost[i]) c = 0.1 * (i + 1) + 0.05 * c;
  auto rep = solve_near_monotone(m);
  CHECK(rep.converged);
  CHECK(rep.lambda == doctest::Approx(testutil::dense_lambda_star_dt(m)).epsilon(1e-8));
}

TEST_CASE("greedy extraction and its edge cases") {
  SUBCASE("identical actions collapse to the lowest index") {
    DtModel m = testutil::make_swap_dt(0.3, 0.7);
    for (int i = 0; i < 2; ++i) {
      m.action_labels[i].push_back("copy");
      m.kernel[i].push_back(m.kernel[i][0]);
      m.cost[i].push_back(m.cost[i][0]);
    }
    auto rep = solve_ladder(m);
    Policy v = extract_policy(m, rep.psi);
    CHECK(v.action_index == std::vector<int>{0, 0});
  }
  SUBCASE("a strictly better action is selected") {
    DtModel m = testutil::make_swap_dt(0.5, 0.5);
    // Second action at state 0: same kernel, cheaper cost.
    m.action_labels[0].push_back("cheap");
    m.kernel[0].push_back(m.kernel[0][0]);
    m.cost[0].push_back(0.1);
    auto rep = solve_ladder(m);
    Policy v = extract_policy(m, rep.psi);
    CHECK(v.action_index[0] == 1);
  }
  SUBCASE("zero psi cannot select anything") {
    DtModel m = testutil::make_swap_dt(0.3, 0.7);
    CHECK_THROWS_AS(extract_policy(m, Eigen::VectorXd::Zero(2)), ZeroPsi);
  }
}

TEST_CASE("default watch set") {
  CHECK(default_watch_set(5) == std::vector<int>{0, 1, 2, 3, 4});
  auto w = default_watch_set(100);
  REQUIRE(w.size() == 32);
  CHECK(w.front() == 0);
  CHECK(w.back() == 31);
}
