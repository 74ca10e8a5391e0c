// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riskeig/ladder.hpp"
#include "riskeig/model.hpp"
#include "riskeig/presets.hpp"

using namespace riskeig;

TEST_CASE("queueing builder produces an open validated model with its certificate") {
  for (int trunc : {4, 8, 16, 64, 256}) {
    QueueingParams p;
    p.truncation = trunc;
    auto built = build_queueing_dt(p);
    CHECK_FALSE(built.model.space.closed);
    CHECK(validate_model(built.model).passed);
    CHECK(check_lyapunov(built.model, built.cert).passed);
  }
}

TEST_CASE("queueing rows leak only near the boundary") {
  QueueingParams p;
  p.truncation = 64;
  auto built = build_queueing_dt(p);
  // Reneging halves the queue, so even the top state lands near the middle of
  // the window and only the arrival tail can escape.  Low states keep the
  // whole tail inside; the top state loses a tiny but strictly positive mass.
  CHECK(built.model.leakage(4, 0) < 1e-12);
  CHECK(built.model.leakage(63, 0) > 0.0);
  CHECK(built.model.leakage(63, 0) < 1e-6);
}

TEST_CASE("queueing cost presets") {
  QueueingParams p;
  p.truncation = 32;
  auto built = build_queueing_dt(p);
  CHECK(built.model.cost[0][0] == 0.0);
  CHECK(built.model.cost[0][1] == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(built.model.cost[5][0] == doctest::Approx(0.2 * 0.5).epsilon(1e-15));
  CHECK(built.model.cost[20][0] == doctest::Approx(0.2).epsilon(1e-15));  // capped at M

  p.cost = "linear";
  auto lin = build_queueing_dt(p);
  CHECK(lin.model.cost[8][1] == doctest::Approx(0.05 * 8 + 0.01).epsilon(1e-15));
}

TEST_CASE("randomized rounding preserves the mean drift") {
  QueueingParams p;
  p.truncation = 64;
  auto built = build_queueing_dt(p);
  const int i = 10;
  for (int a = 0; a < 2; ++a) {
    const int u = p.controls[a];
    double mean = 0;
    for (const auto& e : built.model.row(i, a)) mean += e.j * e.w;
    // E[next] = (1-theta) i - u + E[arrivals], with E[A] = (1-p)/p = 1.
    CHECK(mean == doctest::Approx((1.0 - p.theta) * i - u + 1.0).epsilon(1e-10));
  }
}

TEST_CASE("explicit arrival laws replace the geometric one") {
  QueueingParams p;
  p.truncation = 16;
  p.arrival_pmf = {0.5, 0.5};
  auto built = build_queueing_dt(p);
  // From an empty queue with one withdrawal the next state is surely zero.
  const auto& row = built.model.row(0, 1);
  REQUIRE(row.size() == 1);
  CHECK(row[0].j == 0);
  CHECK(row[0].w == doctest::Approx(1.0).epsilon(1e-15));

  p.arrival_pmf = {0.5, 0.4};
  CHECK_THROWS_AS(build_queueing_dt(p), InvalidParams);
  p.arrival_pmf = {1.2, -0.2};
  CHECK_THROWS_AS(build_queueing_dt(p), InvalidParams);
}

TEST_CASE("queueing parameter guards") {
  QueueingParams p;
  p.theta = 0.0;
  CHECK_THROWS_AS(build_queueing_dt(p), InvalidParams);
  p.theta = 1.0;
  CHECK_THROWS_AS(build_queueing_dt(p), InvalidParams);
  p.theta = 0.5;
  p.truncation = 2;
  CHECK_THROWS_AS(build_queueing_dt(p), InvalidParams);
  p.truncation = 64;
  p.cost = "quadratic";
  CHECK_THROWS_AS(build_queueing_dt(p), InvalidParams);
}

TEST_CASE("queueing optimum lies between zero and the cost bound") {
  QueueingParams p;
  // 128 states give the rung ladder room to stabilize under its default
  // tolerance; at 64 the final doubling still moves the eigenvalue.
  p.truncation = 128;
  auto built = build_queueing_dt(p);
  auto rep = solve_ladder(built.model);
  CHECK(rep.converged);
  CHECK(rep.lambda >= 0.0);
  CHECK(rep.lambda <= 0.21 + 1e-9);
}

TEST_CASE("transient birth-death preset matches its closed forms") {
  BirthDeathDtParams p;
  p.truncation = 12;
  DtModel m = build_birth_death_dt(p);
  CHECK_FALSE(m.space.closed);

  // State 0 climbs surely; the top state only descends and leaks upward.
  REQUIRE(m.row(0, 0).size() == 1);
  CHECK(m.row(0, 0)[0].j == 1);
  CHECK(m.row(0, 0)[0].w == 1.0);
  CHECK(m.row(11, 0).size() == 1);
  CHECK(m.leakage(11, 0) > 0);

  // Downward-over-upward products telescope to 1/(n+1)^2, and their partial
  // sums stay below pi^2/6 - 1.
  double product = 1.0, partial = 0.0;
  for (int n = 1; n <= 10; ++n) {
    double lam = 0, mu = 0;
    for (const auto& e : m.row(n, 0)) {
      if (e.j == n - 1) mu = e.w;
      if (e.j == n + 1) lam = e.w;
    }
    product *= mu / lam;
    const double expect = 1.0 / ((n + 1.0) * (n + 1.0));
    CHECK(product == doctest::Approx(expect).epsilon(1e-12));
    partial += product;
  }
  CHECK(partial < 0.6449340668482264);

  // log1p cost preset.
  CHECK(m.cost[3][0] == doctest::Approx(std::log(4.0)).epsilon(1e-15));
}

TEST_CASE("custom birth-death tables are checked") {
  BirthDeathDtParams p;
  p.truncation = 6;
  p.preset = "custom";
  p.action_labels = {"half"};
  p.lam.assign(6, {0.5});
  p.mu.assign(6, {0.5});
  DtModel m = build_birth_death_dt(p);
  CHECK(validate_model(m).passed);

  p.lam.assign(6, {0.6});
  CHECK_THROWS_AS(build_birth_death_dt(p), InvalidParams);
  p.lam.assign(6, {0.5});
  p.preset = "typo";
  CHECK_THROWS_AS(build_birth_death_dt(p), InvalidParams);
}

TEST_CASE("continuous birth-death preset: drift exponent and boundary row") {
  BirthDeathCtParams p;
  p.truncation = 32;
  auto built = build_birth_death_ct(p);
  CHECK(validate_model(built.model).passed);
  CHECK(built.model.space.closed);

  // alpha = -(mu (e^-theta - 1) + lam (e^theta - 1)) / 2 at theta = 0.1.
  const double expect =
      -(p.mu * (std::exp(-0.1) - 1.0) + p.lam * (std::exp(0.1) - 1.0)) / 2.0;
  CHECK(built.alpha == expect);
  CHECK(std::abs(built.alpha - 0.042578) < 1e-5);

  // The bottom row decays dyadically and keeps the row conservative.
  const auto& row = built.model.row(0, 0);
  REQUIRE(row.size() == 32);  // 31 targets plus the diagonal
  for (int k = 0; k + 2 < static_cast<int>(row.size()) - 1; ++k)
    CHECK(row[k + 1].w / row[k].w == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(built.model.row_sum(0, 0)) <= 1e-12);

  SUBCASE("explicit theta changes the exponent") {
    BirthDeathCtParams q = p;
    q.theta = 0.2;
    auto other = build_birth_death_ct(q);
    CHECK(other.alpha ==
          -(q.mu * (std::exp(-0.2) - 1.0) + q.lam * (std::exp(0.2) - 1.0)) / 2.0);
    CHECK(other.alpha > built.alpha);
  }
  SUBCASE("the drift condition needs mu above lam") {
    BirthDeathCtParams q = p;
    q.mu = 0.9;
    CHECK_THROWS_AS(build_birth_death_ct(q), InvalidParams);
  }
  SUBCASE("bounded cost variant") {
    BirthDeathCtParams q = p;
    q.cost = "bounded";
    auto other = build_birth_death_ct(q);
    CHECK(other.model.cost[5][1] == doctest::Approx(0.1 + 0.05 * 0.5).epsilon(1e-15));
  }
}

TEST_CASE("constant-cost birth-death solves to its constant") {
  BirthDeathCtParams p;
  p.truncation = 32;
  p.kappa = 1.0;
  auto built = build_birth_death_ct(p);
  auto rep = solve_ladder(built.model);
  CHECK(rep.converged);
  CHECK(rep.lambda == doctest::Approx(1.0).epsilon(1e-9));
  for (int i = 0; i < 32; ++i) CHECK(rep.psi[i] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("the parametric registry lists all three families") {
  auto fams = registered_families();
  REQUIRE(fams.size() == 3);
  CHECK(fams[0] == "queueing_dt");
  CHECK(fams[1] == "birth_death_dt");
  CHECK(fams[2] == "birth_death_ct");
}
