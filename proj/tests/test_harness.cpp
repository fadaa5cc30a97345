#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "echosim/config.hpp"
#include "echosim/errors.hpp"
#include "echosim/harness.hpp"

using namespace echosim;

namespace {

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.n_list = {0.54, 1.65, 3.0, 6.0, 12.5};
  cfg.energy_budget = 2e4;
  cfg.seeds = 4;
  cfg.master_seed = 7;
  return cfg;
}

} // namespace

TEST_CASE("config parsing") {
  std::istringstream text(R"(# constant-energy sweep
n_list = 0.54, 1.65, 3, 6, 12.5
energy_budget = 5.4e5
tau = 175e-9
model = two
decay = in_field
seeds = 20
master_seed = 18446744073709551615
laser_linewidth_fwhm = 1e5
max_pairs = 1e6
)");
  const SweepConfig cfg = parse_config(text);
  CHECK(cfg.n_list.size() == 5);
  CHECK(cfg.n_list[4] == 12.5);
  CHECK(cfg.energy_budget == 5.4e5);
  CHECK(cfg.model == StatisticsModel::TwoPhotonMin);
  REQUIRE(cfg.decay.has_value());
  CHECK(cfg.decay->t2 == 3000.0);
  CHECK(cfg.seeds == 20);
  CHECK(cfg.master_seed == 18446744073709551615ull);
  CHECK(cfg.laser.linewidth_fwhm == 1e5);
  CHECK(cfg.max_pairs == 1'000'000);

  CHECK(parse_decay("none") == std::nullopt);
  CHECK(parse_decay("0.7,50,0.3,900")->t1 == 50.0);
  CHECK_THROWS_AS(parse_decay("0.7,50,0.3"), ValidationError);
  CHECK_THROWS_AS(parse_number_list("1, x"), ValidationError);

  std::istringstream unknown("n_list = 1\nenergy_budget = 10\nbogus = 3\n");
  CHECK_THROWS_WITH_AS(parse_config(unknown), doctest::Contains("bogus"), ValidationError);
  std::istringstream bad_value("n_list = 1\nenergy_budget = ten\n");
  CHECK_THROWS_AS(parse_config(bad_value), ValidationError);
  std::istringstream negative("n_list = 1, -2\nenergy_budget = 10\n");
  CHECK_THROWS_AS(parse_config(negative), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/sweep.cfg"), ValidationError);
}

TEST_CASE("sweep records, ordering and accumulation time") {
  const SweepResult r = run_sweep(small_sweep(), 1);
  REQUIRE(r.records.size() == 20);
  REQUIRE(r.summary.size() == 5);
  CHECK(r.budget_scale == 1.0);
  CHECK(r.pair_period == 470e-9);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    CHECK(r.records[i].n_photons == small_sweep().n_list[i / 4]);
    CHECK(r.records[i].seed == i % 4);
    CHECK(r.records[i].echo_area > 0.0);
    CHECK(!r.records[i].echo_area_compensated.has_value());
  }
  for (std::size_t i = 1; i < r.summary.size(); ++i) CHECK(r.summary[i].t_acc < r.summary[i - 1].t_acc);
  CHECK(r.summary[0].pairs == 37037);
  CHECK(r.summary.back().normalized == 1.0);
  CHECK(r.summary.back().normalized_se == 0.0);
}

TEST_CASE("sweep output does not depend on the worker count") {
  const SweepResult one = run_sweep(small_sweep(), 1);
  const SweepResult three = run_sweep(small_sweep(), 3);
  std::ostringstream a, b;
  write_sweep_csv(a, one.records);
  write_sweep_csv(b, three.records);
  CHECK(a.str() == b.str());
}

TEST_CASE("normalised sweep is invariant under a write-gain rescale") {
  SweepConfig cfg = small_sweep();
  const SweepResult base = run_sweep(cfg, 1);
  cfg.write_gain = 2.5e-9;
  const SweepResult scaled = run_sweep(cfg, 1);
  for (std::size_t i = 0; i < base.summary.size(); ++i)
    CHECK(scaled.summary[i].normalized == doctest::Approx(base.summary[i].normalized).epsilon(1e-9));
}

TEST_CASE("linear-regime guard names the offending N") {
  SweepConfig cfg = small_sweep();
  cfg.write_gain = 1e-4;
  CHECK_THROWS_WITH_AS(run_sweep(cfg, 1), doctest::Contains("N = 12.5"), ValidationError);
}

TEST_CASE("budget scaling stretches the pair period") {
  SweepConfig cfg = small_sweep();
  cfg.energy_budget = 5.4e5;
  cfg.max_pairs = 10'000;
  cfg.seeds = 1;
  const SweepResult r = run_sweep(cfg, 1);
  CHECK(r.budget_scale == doctest::Approx(1e4 / 1e6));
  CHECK(r.summary[0].pairs == 10'000);
  CHECK(r.pair_period == doctest::Approx(470e-9 * 100.0));
  // T_acc keeps the duration the full budget would have taken.
  CHECK(r.summary[0].t_acc == doctest::Approx(1e6 * 470e-9));
}

TEST_CASE("sweep with decay reports compensation") {
  SweepConfig cfg = small_sweep();
  cfg.decay = BiExpDecay::in_field();
  cfg.sigma = 0.05;  // seconds between pairs, so the accumulation spans hundreds of seconds
  const SweepResult r = run_sweep(cfg, 1);
  for (const auto& rec : r.records) {
    REQUIRE(rec.echo_area_compensated.has_value());
    CHECK(*rec.echo_area_compensated >= rec.echo_area);
    CHECK(rec.survival_mean < 1.0);
  }
  std::ostringstream csv;
  write_summary_csv(csv, r);
  CHECK(csv.str().find("normalized_comp") != std::string::npos);
}

TEST_CASE("sweep CSV columns") {
  SweepConfig cfg = small_sweep();
  cfg.seeds = 1;
  std::ostringstream os;
  write_sweep_csv(os, run_sweep(cfg, 1).records);
  std::istringstream lines(os.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "n_photons,m_pairs,t_acc_s,echo_area,echo_area_comp,survival_mean,seed");
  CHECK(first.find(",,") != std::string::npos);  // no compensation without decay
}

TEST_CASE("consistency check") {
  const ConsistencyReport report = consistency_check();
  CHECK(report.all_pass());
  REQUIRE(report.lines.size() == 3);
  CHECK(report.lines[0].computed == doctest::Approx(3337.0));

  ConsistencyAnchors off;
  off.sigma = 500e-9;
  const ConsistencyReport bad = consistency_check(off);
  CHECK(!bad.all_pass());
  CHECK(!bad.lines[1].pass);

  std::ostringstream os;
  write_report(os, report);
  CHECK(os.str().find("PASS accumulation_duration") != std::string::npos);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  CHECK(resolve_workers(0) >= 1);
}
