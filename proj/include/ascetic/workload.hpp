#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ascetic/topology.hpp"

namespace ascetic {

using ServiceId = int;
using RequestId = int;
using Slot = int;  // 1-based simulation slot

struct InstanceSpec {
  ServiceId service = 0;
  int index = 0;  // within the service
  double capacity = 0.0;  // max requests served in parallel
  double cost = 0.0;      // per-slot assignment cost
};

struct ServiceCatalog {
  int n_services = 0;
  int instances_per_service = 0;
  std::vector<InstanceSpec> instances;  // flat, service-major

  int total() const { return n_services * instances_per_service; }
  int flat(ServiceId s, int i) const { return s * instances_per_service + i; }
  const InstanceSpec& at(ServiceId s, int i) const { return instances[flat(s, i)]; }
};

struct Request {
  RequestId id = 0;
  Slot arrival = 1;
  ServiceId service = 0;
  std::vector<NodeId> poa_trace;  // attachment per slot arrival..horizon
  double min_instance_capacity = 1.0;  // capacity units consumed when assigned
  double min_bandwidth = 1.0;          // bandwidth units per traversed link
  double max_e2e_delay_ms = 0.0;       // per-slot delay cap
  double burstiness = 1.0;
  double max_packet_size = 1.0;
  double sla_budget_ms = 0.0;  // cumulative delay budget over the lifetime
};

struct MobilityModel {
  enum Kind { Static, Markov, Cyclic };
  Kind kind = Markov;
  double self_loop = 0.8;  // Markov: stay put chance, rest uniform over other PoAs
  int period = 0;          // Cyclic: hop every `period` slots along the PoA list
};

struct ScenarioParams {
  int n_services = 20;
  int instances_per_service = 5;
  double inst_cap_base = 20.0;   // capacity ~ round(base * U(1,2))
  double inst_cost_base = 20.0;  // cost ~ base^U(1,2)
  int qos_cap_lo = 1, qos_cap_hi = 4;    // min instance capacity
  int qos_bw_lo = 1, qos_bw_hi = 5;      // min bandwidth
  int burst_lo = 1, burst_hi = 3;
  int pkt_lo = 1, pkt_hi = 2;
  double delay_lo = 5.0, delay_hi = 50.0;  // per-slot cap, ms
  double sla_factor = 0.9;  // budget = factor * horizon * own delay cap; 0 disables
  int arrival_lo = 1, arrival_hi = 0;  // 0 -> horizon
  MobilityModel mobility;
};

struct Scenario {
  int horizon = 0;
  ServiceCatalog catalog;
  std::vector<Request> requests;

  int n_requests() const { return static_cast<int>(requests.size()); }
  bool active(RequestId r, Slot t) const;
  NodeId poa_at(RequestId r, Slot t) const;  // throws when r inactive at t
  std::vector<RequestId> active_at(Slot t) const;
  // requests attached to `poa` at t, ascending id
  std::vector<RequestId> arrivals_at(NodeId poa, Slot t) const;

  std::string serialize() const;
  static Scenario deserialize(const std::string& text);  // throws std::runtime_error
  std::string to_csv() const;
};

// Deterministic workload draw over the given topology's PoA set.
Scenario generate_scenario(const Topology& topo, const ScenarioParams& params, int n_requests,
                           int horizon, std::uint64_t seed);

}  // namespace ascetic
