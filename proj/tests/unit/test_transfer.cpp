#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "hoturbo/error.hpp"
#include "hoturbo/optimize.hpp"
#include "hoturbo/transfer.hpp"
#include "support.hpp"

using namespace hoturbo;

namespace {

// Rows are tagged through y: source rows hold 1000 + index, target rows 2000 + index.
Dataset tagged(std::size_t n, std::size_t d, double base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset out(d);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(d), [&] { return u(rng); });
    out.append(x, base + static_cast<double>(i));
  }
  return out;
}

TransferSpec spec_for(double fraction, std::size_t n_init, std::size_t rows = 80) {
  return TransferSpec{tagged(rows, 3, 1000.0, 1), tagged(rows, 3, 2000.0, 2), fraction, n_init};
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++n;
  return n;
}

}  // namespace

TEST_CASE("target row counts round half up") {
  CHECK(target_row_count(1.0, 60) == 60);
  CHECK(target_row_count(0.5, 60) == 30);
  CHECK(target_row_count(0.0, 60) == 0);
  CHECK(target_row_count(0.5, 1) == 1);
  CHECK(target_row_count(0.25, 2) == 1);
  CHECK(target_row_count(0.3, 5) == 2);
}

TEST_CASE("mixed datasets of the documented shapes") {
  for (auto [f, want_target] : {std::pair{1.0, 60}, std::pair{0.5, 30}, std::pair{0.0, 0}}) {
    MixedDataset m = build_mixed_dataset(spec_for(f, 60), 7);
    REQUIRE(m.data.size() == 60);
    std::size_t target = static_cast<std::size_t>(std::count(m.from_target.begin(), m.from_target.end(), true));
    CHECK(target == static_cast<std::size_t>(want_target));
    for (std::size_t i = 0; i < 60; ++i) CHECK((m.data.y(static_cast<Eigen::Index>(i)) >= 2000.0) == m.from_target[i]);
  }
  MixedDataset edge = build_mixed_dataset(spec_for(0.5, 1), 7);
  CHECK(edge.data.size() == 1);
  CHECK(edge.from_target[0]);
}

TEST_CASE("row counts and uniqueness for every mix") {
  std::mt19937_64 rng(31);
  for (std::size_t n_init = 1; n_init <= 40; ++n_init) {
    for (double f : {0.0, 0.1, 0.25, 0.5, 0.7, 1.0}) {
      TransferSpec spec = spec_for(f, n_init, 40);
      MixedDataset m = build_mixed_dataset(spec, rng());
      REQUIRE(m.data.size() == n_init);
      std::size_t target = 0;
      std::set<std::size_t> src_rows, tgt_rows;
      for (std::size_t i = 0; i < n_init; ++i) {
        const Dataset& origin = m.from_target[i] ? spec.target_dataset : spec.source_dataset;
        const auto row = static_cast<Eigen::Index>(m.origin_row[i]);
        CHECK(m.data.x.row(static_cast<Eigen::Index>(i)) == origin.x.row(row));
        CHECK(m.data.y(static_cast<Eigen::Index>(i)) == origin.y(row));
        if (m.from_target[i]) {
          ++target;
          CHECK(tgt_rows.insert(m.origin_row[i]).second);
        } else {
          CHECK(src_rows.insert(m.origin_row[i]).second);
        }
      }
      CHECK(target == static_cast<std::size_t>(std::floor(f * static_cast<double>(n_init) + 0.5)));
    }
  }
}

TEST_CASE("mixing is seeded") {
  TransferSpec spec = spec_for(0.5, 20);
  CHECK(build_initial_dataset(spec, 3).y == build_initial_dataset(spec, 3).y);
  CHECK(build_initial_dataset(spec, 3).y != build_initial_dataset(spec, 4).y);
}

TEST_CASE("transfer spec errors") {
  CHECK_THROWS_AS(build_initial_dataset(spec_for(1.0, 60, 50), 0), ValidationError);
  CHECK_THROWS_AS(build_initial_dataset(spec_for(0.0, 60, 50), 0), ValidationError);
  CHECK_THROWS_AS(build_initial_dataset(spec_for(1.5, 10), 0), ValidationError);
  TransferSpec mismatch{tagged(20, 3, 1000.0, 1), tagged(20, 4, 2000.0, 2), 0.5, 10};
  CHECK_THROWS_AS(build_initial_dataset(mismatch, 0), ValidationError);
}

TEST_CASE("normalized KPI") {
  CHECK(normalize_kpi(2.0, 2.0, 1.0).normalized == 0.0);
  CHECK(normalize_kpi(1.0, 2.0, 1.0).normalized == 1.0);
  CHECK(normalize_kpi(1.25, 2.0, 1.0).normalized == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(normalize_kpi(0.5, 2.0, 1.0).normalized == doctest::Approx(1.5));
  CHECK_THROWS_AS(normalize_kpi(1.0, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(normalize_kpi(NAN, 2.0, 1.0), ValidationError);
}

TEST_CASE("normalized KPI is affine and order-reversing") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double base = u(rng), upper = u(rng);
    if (base == upper) continue;
    const double a = u(rng), b = u(rng), t = 0.5 * (u(rng) + 5.0) / 5.0;
    const double na = normalize_kpi(a, base, upper).normalized;
    const double nb = normalize_kpi(b, base, upper).normalized;
    const double nmix = normalize_kpi(t * a + (1.0 - t) * b, base, upper).normalized;
    CHECK(nmix == doctest::Approx(t * na + (1.0 - t) * nb).epsilon(1e-9));
    if (base > upper && a < b) CHECK(na > nb);
  }
}

TEST_CASE("HO parameter files") {
  std::vector<double> a3(30), ttt(30);
  for (std::size_t i = 0; i < 30; ++i) {
    a3[i] = -1.0 + 0.1 * static_cast<double>(i);
    ttt[i] = 40.0 + 13.7 * static_cast<double>(i);
  }
  HoConfig cfg = HoConfig::per_cell(a3, ttt);
  auto p = testing::temp_path("best_config.toml");
  save_ho_config(p, cfg, "hoturbo test");
  HoConfig back = load_ho_config(p, 30);
  CHECK(back.mode == HoMode::per_cell);
  CHECK(back.a3_offset_db == cfg.a3_offset_db);
  CHECK(back.ttt_ms == cfg.ttt_ms);
  CHECK_THROWS_AS(load_ho_config(p, 29), ValidationError);

  HoConfig s = HoConfig::shared(30, 1.5, 256.0);
  save_ho_config(p, s);
  HoConfig sb = load_ho_config(p, 30);
  CHECK(sb.mode == HoMode::shared);
  CHECK(sb.a3_offset_db == s.a3_offset_db);
  CHECK(ho_dimension(HoMode::shared, 30) == 2);
  CHECK(ho_dimension(HoMode::per_cell, 30) == 60);

  std::ofstream(p) << "mode = \"shared\"\na3_offset_db = [9.0]\nttt_ms = [100.0]\n";
  CHECK_THROWS_AS(load_ho_config(p, 30), ValidationError);
  std::ofstream(p) << "mode = \"shared\"\na3_offset_db = [\n";
  CHECK_THROWS_AS(load_ho_config(p, 30), ParseError);
}

TEST_CASE("random search trace layout") {
  TurboConfig cfg;
  cfg.d = 3;
  cfg.budget = 27;
  cfg.n_init = 12;
  cfg.q = 5;
  std::size_t calls = 0;
  RunResult r = random_search(cfg, [&](const Eigen::VectorXd& x) { ++calls; return x.sum(); }, 4);
  CHECK(calls == 27);
  REQUIRE(r.trace.history.size() == 27);
  CHECK(r.trace.history[11].iteration == 0);
  CHECK(r.trace.history[12].iteration == 1);
  CHECK(r.trace.history[26].iteration == 3);
  CHECK(r.trace.best_per_iteration().size() == 4);
}

TEST_CASE("transfer experiment on the fixture") {
  DeploymentScenario s = load_scenario(testing::fixture("grid10.toml"));
  TransferSettings t;
  t.mode = HoMode::shared;
  t.fractions = {1.0, 0.0};
  t.seeds = {0, 1};
  t.episode_seeds = {11, 12};
  t.turbo.n_init = 10;
  t.turbo.budget = 30;
  t.turbo.q = 5;
  t.turbo.fit.restarts = 2;
  TransferReport rep = run_transfer_experiment(s, t);

  REQUIRE(rep.curves.size() == 4);
  CHECK(rep.source_dataset.size() == 10);
  CHECK(rep.target_dataset.size() == 10);
  for (const auto& c : rep.curves) {
    CHECK(c.best_objective.size() == 4);
    CHECK(c.normalized.size() == 4);
    for (std::size_t i = 1; i < c.best_objective.size(); ++i) CHECK(c.best_objective[i] <= c.best_objective[i - 1]);
  }
  CHECK(rep.curves[0].fraction == 1.0);
  CHECK(rep.curves[3].fraction == 0.0);
  double best_target = std::min(rep.curves[0].best_objective.back(), rep.curves[1].best_objective.back());
  CHECK(rep.upper == best_target);
  MobilityEvaluator target(s, {1, 2, 3, 4, 5}, {t.target_speed_mps}, t.episode_seeds, {});
  CHECK(rep.baseline == std::min(target.evaluate(kSet1.config(30)).objective, target.evaluate(kSet5.config(30)).objective));

  // With only target data the curve is a plain run seeded with D_tg.
  TurboConfig cfg = t.turbo;
  RunOptions opt;
  opt.initial_data = build_initial_dataset(TransferSpec{rep.source_dataset, rep.target_dataset, 1.0, 10}, 1);
  HoOptimization plain = optimize_ho(target, HoMode::shared, cfg, 1, opt);
  std::vector<double> per_iter = plain.run.trace.best_per_iteration();
  CHECK(std::vector<double>(per_iter.begin() + 1, per_iter.end()) == rep.curves[1].best_objective);

  auto conv = testing::temp_path("convergence.csv");
  auto summary = testing::temp_path("summary.csv");
  save_convergence_csv(conv, rep, "hoturbo test");
  save_transfer_summary_csv(summary, rep);
  CHECK(count_lines(conv) == 1 + 4 * 4);
  CHECK(count_lines(summary) == 1 + 2);

  // Supplying the sampled datasets reproduces the report.
  t.source_dataset = rep.source_dataset;
  t.target_dataset = rep.target_dataset;
  t.fractions = {0.0};
  t.seeds = {1};
  TransferReport again = run_transfer_experiment(s, t);
  CHECK(again.curves[0].best_objective == rep.curves[3].best_objective);
}
