#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ascetic/orchestrator.hpp"

namespace ascetic {

enum class OrchKind { Wise, Random, Ccam, Exact };
enum class PredictorKind { Ddql, Frequency, Oracle, Random };

std::string to_string(OrchKind k);
std::string to_string(PredictorKind k);
OrchKind orch_from_string(const std::string& s);            // throws on unknown
PredictorKind predictor_from_string(const std::string& s);  // throws on unknown

struct ExperimentConfig {
  int n_nodes = 20;
  int tiers = 3;
  TopologyParams topo;
  ScenarioParams scenario;
  int n_requests = 20;
  int horizon = 10;
  OrchKind orch = OrchKind::Wise;
  PredictorKind predictor = PredictorKind::Frequency;
  AgentConfig agent;  // n_services/top_z kept in sync with the scenario knobs
  OrchestratorConfig orchestrator;
  ExactLimits exact_limits;
  std::uint64_t seed = 1;
  std::string sweep_axis = "requests";  // "requests" | "nodes"
  std::vector<int> axis_values;
  int repetitions = 10;
  std::vector<OrchKind> sweep_orchs = {OrchKind::Wise, OrchKind::Random, OrchKind::Ccam};

  std::string serialize() const;
  static ExperimentConfig parse(const std::string& text);  // strict, unknown key = error
  void apply_env();  // ASCETIC_SEED override
};

struct SlotMetrics {
  Slot slot = 0;
  double cost = 0.0;
  double mean_delay_ms = 0.0;  // over supported requests; 0 when none
  int supported = 0;
  int unsupported = 0;
};

struct MetricsSeries {
  std::vector<SlotMetrics> slots;
  double wall_seconds = 0.0;

  double total_cost() const;
  double mean_delay_ms() const;  // per-request mean over the whole run
  double max_delay_ms() const;   // max per-slot mean
  int total_unsupported() const;
};

struct TrainPoint {
  Slot slot = 0;
  double loss = 0.0;
  double epsilon = 0.0;
  double reward = 0.0;
};

struct RunArtifacts {
  MetricsSeries metrics;
  Allocation allocation;
  ConstraintReport report;
  std::vector<TrainPoint> curve;  // DDQL training trace, empty otherwise
};

// One simulated run: generate topology+scenario from the seed, drive the
// chosen orchestrator slot by slot (predictions from slot t feed slot t+1),
// verify every constraint on the result, and fail hard on violations.
RunArtifacts run_simulation(const ExperimentConfig& cfg, std::uint64_t seed);

struct SweepRow {
  int axis_value = 0;
  OrchKind orch = OrchKind::Wise;
  std::uint64_t seed = 0;
  MetricsSeries metrics;
};

// axis x orchestrator x repetition grid; repetitions share seeds across
// orchestrators so comparisons are paired
std::vector<SweepRow> sweep(const ExperimentConfig& cfg);

// slot-level rows: axis,orch,seed,slot,cost,mean_delay_ms,unsupported
std::string metrics_csv(const std::vector<SweepRow>& rows);
// per-run aggregates
std::string summary_csv(const std::vector<SweepRow>& rows);
// per-(axis,orch) means across seeds, ready for plotting
std::string plot_csv(const std::vector<SweepRow>& rows);

}  // namespace ascetic
