#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ascetic/model.hpp"
#include "ascetic/simctl.hpp"

using namespace ascetic;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_nodes = 8;
  cfg.n_requests = 6;
  cfg.horizon = 10;
  cfg.topo.paths_per_pair = 2;
  cfg.scenario.n_services = 3;
  cfg.scenario.instances_per_service = 2;
  cfg.orch = OrchKind::Wise;
  cfg.predictor = PredictorKind::Frequency;
  return cfg;
}

bool series_equal(const MetricsSeries& a, const MetricsSeries& b) {
  if (a.slots.size() != b.slots.size()) return false;
  for (size_t i = 0; i < a.slots.size(); ++i) {
    const SlotMetrics &x = a.slots[i], &y = b.slots[i];
    if (x.slot != y.slot || x.cost != y.cost || x.mean_delay_ms != y.mean_delay_ms ||
        x.supported != y.supported || x.unsupported != y.unsupported)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("a run emits one metrics row per slot and a feasible allocation") {
  ExperimentConfig cfg = small_config();
  RunArtifacts art = run_simulation(cfg, 7);
  REQUIRE(art.metrics.slots.size() == 10);
  for (Slot t = 1; t <= 10; ++t) CHECK(art.metrics.slots[t - 1].slot == t);
  CHECK(art.report.feasible);
  CHECK(art.metrics.wall_seconds > 0.0);
  CHECK(art.curve.empty());  // frequency predictor trains nothing
}

TEST_CASE("metrics reproduce the stored allocation, not a parallel bookkeeping") {
  ExperimentConfig cfg = small_config();
  RunArtifacts art = run_simulation(cfg, 21);
  // the documented derivation: topo and scenario come from fixed sub-streams
  // of the master seed, so the instance is reconstructible from (config, seed)
  Rng master(21);
  Topology topo = build_topology(cfg.n_nodes, cfg.tiers, master.sub(11).next_u64(), cfg.topo);
  Scenario scn =
      generate_scenario(topo, cfg.scenario, cfg.n_requests, cfg.horizon, master.sub(22).next_u64());
  CHECK(art.metrics.total_cost() ==
        doctest::Approx(objective_cost(art.allocation, scn, topo)).epsilon(1e-9));
  int unsupported = 0;
  for (Slot t = 1; t <= cfg.horizon; ++t)
    for (RequestId r : scn.active_at(t))
      if (!art.allocation.at(t).supported(r)) ++unsupported;
  CHECK(art.metrics.total_unsupported() == unsupported);
}

TEST_CASE("zero requests runs to an all-zero series") {
  ExperimentConfig cfg = small_config();
  cfg.n_requests = 0;
  RunArtifacts art = run_simulation(cfg, 3);
  REQUIRE(art.metrics.slots.size() == 10);
  for (const SlotMetrics& m : art.metrics.slots) {
    CHECK(m.cost == 0.0);
    CHECK(m.mean_delay_ms == 0.0);
    CHECK(m.supported == 0);
    CHECK(m.unsupported == 0);
  }
  CHECK(art.metrics.total_cost() == 0.0);
}

TEST_CASE("same config and seed replays to the identical series") {
  ExperimentConfig cfg = small_config();
  for (OrchKind k : {OrchKind::Wise, OrchKind::Random, OrchKind::Ccam}) {
    cfg.orch = k;
    RunArtifacts a = run_simulation(cfg, 11);
    RunArtifacts b = run_simulation(cfg, 11);
    CHECK(series_equal(a.metrics, b.metrics));
    CHECK(a.allocation == b.allocation);
  }
  cfg.orch = OrchKind::Wise;
  RunArtifacts a = run_simulation(cfg, 11);
  RunArtifacts c = run_simulation(cfg, 12);
  CHECK_FALSE(series_equal(a.metrics, c.metrics));  // seeds must matter
}

TEST_CASE("the ddql predictor leaves a training curve behind") {
  ExperimentConfig cfg = small_config();
  cfg.horizon = 12;
  cfg.predictor = PredictorKind::Ddql;
  cfg.agent.hidden = 8;
  cfg.agent.window = 4;
  cfg.agent.batch = 4;
  RunArtifacts art = run_simulation(cfg, 5);
  CHECK_FALSE(art.curve.empty());
  for (size_t i = 1; i < art.curve.size(); ++i) {
    CHECK(art.curve[i].slot > art.curve[i - 1].slot);
    CHECK(art.curve[i].epsilon <= art.curve[i - 1].epsilon);
  }
}

TEST_CASE("sweep lays out the full axis x orchestrator x repetition grid") {
  ExperimentConfig cfg = small_config();
  cfg.sweep_axis = "nodes";
  cfg.axis_values = {6, 8, 10};
  cfg.repetitions = 2;
  cfg.sweep_orchs = {OrchKind::Wise, OrchKind::Random};
  std::vector<SweepRow> rows = sweep(cfg);
  REQUIRE(rows.size() == 3 * 2 * 2);

  // paired seeds: both orchestrators see the same seed list per axis value
  std::map<int, std::map<OrchKind, std::vector<std::uint64_t>>> seeds;
  for (const SweepRow& r : rows) seeds[r.axis_value][r.orch].push_back(r.seed);
  for (auto& [axis, per_orch] : seeds) {
    REQUIRE(per_orch.size() == 2);
    CHECK(per_orch.at(OrchKind::Wise) == per_orch.at(OrchKind::Random));
  }
}

TEST_CASE("the requests axis actually varies the workload size") {
  ExperimentConfig cfg = small_config();
  cfg.sweep_axis = "requests";
  cfg.axis_values = {0, 12};
  cfg.repetitions = 1;
  cfg.sweep_orchs = {OrchKind::Wise};
  std::vector<SweepRow> rows = sweep(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].metrics.total_cost() == 0.0);
  CHECK(rows[1].metrics.total_cost() > 0.0);
}

TEST_CASE("csv artifacts carry the advertised headers and shapes") {
  ExperimentConfig cfg = small_config();
  cfg.axis_values = {4};
  cfg.repetitions = 2;
  cfg.sweep_orchs = {OrchKind::Wise, OrchKind::Ccam};
  std::vector<SweepRow> rows = sweep(cfg);

  std::string metrics = metrics_csv(rows);
  std::istringstream ms(metrics);
  std::string line;
  std::getline(ms, line);
  CHECK(line == "axis,orch,seed,slot,cost,mean_delay_ms,unsupported");
  int data_lines = 0;
  while (std::getline(ms, line))
    if (!line.empty()) ++data_lines;
  CHECK(data_lines == static_cast<int>(rows.size()) * cfg.horizon);

  std::string summary = summary_csv(rows);
  std::istringstream ss(summary);
  std::getline(ss, line);
  CHECK(line == "axis,orch,seed,total_cost,mean_delay_ms,max_delay_ms,unsupported_total");
  data_lines = 0;
  while (std::getline(ss, line))
    if (!line.empty()) ++data_lines;
  CHECK(data_lines == static_cast<int>(rows.size()));

  std::string plot = plot_csv(rows);
  std::istringstream ps(plot);
  std::getline(ps, line);
  CHECK(line.rfind("axis,orch,", 0) == 0);
  data_lines = 0;
  while (std::getline(ps, line))
    if (!line.empty()) ++data_lines;
  CHECK(data_lines == 2);  // one mean row per (axis, orch)
}

TEST_CASE("plot rows are the seed means of the summary rows") {
  ExperimentConfig cfg = small_config();
  cfg.axis_values = {6};
  cfg.repetitions = 3;
  cfg.sweep_orchs = {OrchKind::Random};
  std::vector<SweepRow> rows = sweep(cfg);
  REQUIRE(rows.size() == 3);
  double mean_cost = 0.0;
  for (const SweepRow& r : rows) mean_cost += r.metrics.total_cost();
  mean_cost /= 3.0;

  std::istringstream ps(plot_csv(rows));
  std::string header, data;
  std::getline(ps, header);
  std::getline(ps, data);
  // axis,orch,mean_total_cost,...
  std::istringstream fields(data);
  std::string axis, orch, cost;
  std::getline(fields, axis, ',');
  std::getline(fields, orch, ',');
  std::getline(fields, cost, ',');
  CHECK(axis == "6");
  CHECK(orch == "random");
  CHECK(std::stod(cost) == doctest::Approx(mean_cost).epsilon(1e-6));  // %.9g column
}

TEST_CASE("config text round-trips and rejects junk") {
  ExperimentConfig cfg = small_config();
  cfg.seed = 99;
  cfg.axis_values = {5, 10};
  cfg.scenario.delay_hi = 33.5;
  std::string text = cfg.serialize();
  ExperimentConfig back = ExperimentConfig::parse(text);
  CHECK(back.serialize() == text);
  CHECK(back.n_nodes == 8);
  CHECK(back.seed == 99);
  CHECK(back.axis_values == std::vector<int>{5, 10});
  CHECK(back.scenario.delay_hi == 33.5);
  CHECK(to_string(back.orch) == "wise");

  CHECK_THROWS_AS(ExperimentConfig::parse("ascetic-cfg v1\nbogus_key 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::parse("nodes 5\n"), std::invalid_argument);  // header gone
  CHECK_THROWS_AS(ExperimentConfig::parse("ascetic-cfg v1\nnodes five\n"), std::invalid_argument);
}

TEST_CASE("orchestrator and predictor names round-trip") {
  for (OrchKind k : {OrchKind::Wise, OrchKind::Random, OrchKind::Ccam, OrchKind::Exact})
    CHECK(orch_from_string(to_string(k)) == k);
  for (PredictorKind k : {PredictorKind::Ddql, PredictorKind::Frequency, PredictorKind::Oracle,
                          PredictorKind::Random})
    CHECK(predictor_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(orch_from_string("magic"), std::invalid_argument);
  CHECK_THROWS_AS(predictor_from_string(""), std::invalid_argument);
}

TEST_CASE("ASCETIC_SEED overrides the configured seed") {
  ExperimentConfig cfg = small_config();
  cfg.seed = 4;
  setenv("ASCETIC_SEED", "1234", 1);
  cfg.apply_env();
  unsetenv("ASCETIC_SEED");
  CHECK(cfg.seed == 1234);

  setenv("ASCETIC_SEED", "not a number", 1);
  ExperimentConfig bad = small_config();
  CHECK_THROWS_AS(bad.apply_env(), std::invalid_argument);
  unsetenv("ASCETIC_SEED");
}

TEST_CASE("the exact orchestrator honours its size limits inside a run") {
  ExperimentConfig cfg = small_config();
  cfg.orch = OrchKind::Exact;
  CHECK_THROWS_AS(run_simulation(cfg, 1), std::invalid_argument);  // 8 nodes > 6

  cfg.n_nodes = 4;
  cfg.n_requests = 3;
  cfg.horizon = 2;
  cfg.scenario.n_services = 2;
  cfg.exact_limits.max_slots = 2;
  RunArtifacts art = run_simulation(cfg, 1);
  CHECK(art.report.feasible);
  REQUIRE(art.metrics.slots.size() == 2);

  // the optimum never does worse than the heuristic on the same instance
  cfg.orch = OrchKind::Wise;
  RunArtifacts wise = run_simulation(cfg, 1);
  double exact_pen = art.metrics.total_cost() + 1e6 * art.metrics.total_unsupported();
  double wise_pen = wise.metrics.total_cost() + 1e6 * wise.metrics.total_unsupported();
  CHECK(exact_pen <= wise_pen + 1e-9);
}
