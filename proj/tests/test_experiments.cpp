#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mpexp/experiments.hpp"
#include "mpexp/matrix_market.hpp"

using namespace mpexp;
namespace fs = std::filesystem;

TEST_CASE("log steps") {
  CHECK(log_steps(10, 10000) == std::vector<int>{10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000});
  CHECK(log_steps(10, 1000) == std::vector<int>{10, 20, 50, 100, 200, 500, 1000});
  CHECK(log_steps(3, 30) == std::vector<int>{5, 10, 20});
  CHECK_THROWS_AS(log_steps(0, 10), std::invalid_argument);
}

TEST_CASE("loglog slope") {
  const std::vector<int> s = {10, 20, 50, 100};
  std::vector<double> e;
  for (int n : s) e.push_back(3.0 / (static_cast<double>(n) * n));
  CHECK(loglog_slope(s, e) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::isnan(loglog_slope({10}, {1.0})));
  CHECK_THROWS_AS(loglog_slope({10, 20}, {1.0}), std::invalid_argument);
}

TEST_CASE("metric names") {
  CHECK(metric_by_name("l2") == ErrorMetric::abs_l2);
  CHECK(std::string(to_string(ErrorMetric::rel_linf)) == "linf");
  CHECK_THROWS_AS(metric_by_name("l1"), std::invalid_argument);
}

TEST_CASE("default start vectors") {
  CHECK(default_b0("poisson", 9) == poisson_rhs(3));
  const Vector b = default_b0("bcspwr10", 5);
  CHECK(b == (Vector(5) << 1, 0, 0, 0, 1).finished());
  CHECK(default_b0("orani678", 4) == Vector::Ones(4));
}

TEST_CASE("matrix resolution") {
  const fs::path dir = fs::temp_directory_path() / ("mpexp_exp_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  CHECK(resolve_matrix("poisson:4", dir).n_rows == 16);
  CHECK(resolve_matrix("poisson:4", dir).values[0] == -4.0 * 2500.0);
  CHECK(resolve_matrix("poisson", dir, {}, 1, 1.0).n_rows == 99 * 99);
  {
    std::ofstream out(dir / "m.mtx");
    write_matrix_market(out, poisson2d(2));
  }
  CHECK(resolve_matrix((dir / "m.mtx").string(), dir).to_dense() == poisson2d(2).to_dense());
  CHECK_THROWS(resolve_matrix("unknown_matrix", dir));
  fs::remove_all(dir);
}

TEST_CASE("experiment setup") {
  auto e = make_phi_experiment("poisson:5", poisson2d(5), 2, 1.0, 1e-8);
  CHECK(e.b.size() == 5);
  CHECK(make_phi_experiment("poisson:5", poisson2d(5), 1, 1.0, 1e-8).b.size() == 1);
  CHECK_THROWS_AS(make_phi_experiment("x", poisson2d(2), 3, 1.0, 1e-8), std::invalid_argument);
}

TEST_CASE("run_phi captures failures") {
  const auto e = make_phi_experiment("poisson:10", poisson2d(10, 2500.0, -1), 1, 1.0, 1e-10);
  const Vector ref = phi_reference(e);
  const PhiRun ok = run_phi(e, ref, PrecisionSchedule::working(), {}, "double");
  CHECK(ok.ok());
  CHECK(ok.err < 1e-9);
  CHECK(ok.arm == "double");

  const auto big = make_phi_experiment("poisson:10", poisson2d(10, 1e6, -1), 1, 1.0, 1e-10);
  const PhiRun over = run_phi(big, Vector::Ones(100), PrecisionSchedule::uniform(formats::fp16()), {});
  CHECK(over.status == "overflow");
  CHECK(std::isinf(over.err));
  CHECK(over.message.find("half") != std::string::npos);

  KrylovOptions tight;
  tight.max_substeps = 1;
  tight.m_init = tight.m_max = 2;
  const PhiRun nc = run_phi(e, ref, PrecisionSchedule::working(), tight);
  CHECK(nc.status == "no-convergence");
}

TEST_CASE("sweep finds thresholds on a small problem") {
  const auto e = make_phi_experiment("poisson:20", poisson2d(20, 2500.0, -1), 1, 0.05, 1e-10);
  const Vector ref = phi_reference(e);
  SweepOptions so;
  so.mode = ChopMode::io_level;
  so.fmt2 = {formats::fp16()};
  const auto r = sweep_chop(e, ref, so);
  CHECK(r.target == std::max(r.err_double, 1e-10));
  CHECK(r.trials.front().phase == "double");
  REQUIRE(r.choices.size() == 1);
  const auto& c = r.choices[0];
  REQUIRE(c.found);
  CHECK(c.mchop1 <= c.mchop2);
  CHECK(c.err <= r.target);
  CHECK(c.frac_below_double >= c.frac_below_single);
  // Minimality: the schedule one step earlier for mchop2 fails.
  if (c.mchop2 > c.mchop1) {
    const auto earlier = run_phi(e, ref, PrecisionSchedule::mixed(c.mchop1, c.mchop2 - 1, formats::fp16(), formats::fp32(),
                                                                   ChopMode::io_level));
    CHECK((!earlier.ok() || earlier.err > r.target));
  }
  for (const auto& t : r.trials)
    if (t.meets) CHECK(t.run.err <= r.target);
}

TEST_CASE("fractions") {
  KrylovResult r;
  r.counters.add(formats::fp64(), 2);
  r.counters.add(formats::fp32(), 3);
  r.counters.add(formats::bf16(), 5);
  r.products_below_working = 8;
  CHECK(fraction_below_double(r) == 0.8);
  CHECK(fraction_below_single(r) == 0.5);
  CHECK(fraction_below_double(KrylovResult{}) == 0.0);
}

TEST_CASE("study arm") {
  StudyOptions s;
  s.problem.nx = 7;
  s.tf = 0.1;
  ReferenceOptions ro;
  ro.steps = 400;
  const Vector ref = reference_solution(s.problem, s.t0, s.tf, ro);
  ArmSpec arm;
  arm.name = "ere_dbl";
  const auto r = run_arm(s, ref, arm, 20);
  CHECK(r.status == "ok");
  CHECK(r.err < 1e-3);
  CHECK(r.mv_effective == static_cast<double>(r.counters.count("double")));

  ArmSpec half = arm;
  half.method = Method::rere;
  half.schedule = PrecisionSchedule::mixed(3, 6, formats::fp16());
  const auto h = run_arm(s, ref, half, 20);
  CHECK(h.status == "ok");
  CHECK(h.counters.count("half") > 0);
  CHECK(h.mv_effective < static_cast<double>(h.counters.total()));
}
