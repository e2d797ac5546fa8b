#pragma once

#include <array>
#include <string>
#include <vector>

#include "ascetic/topology.hpp"
#include "ascetic/workload.hpp"

namespace ascetic {

struct InstanceRef {
  ServiceId service = 0;
  int index = 0;
  bool operator==(const InstanceRef&) const = default;
};

struct AssignmentEntry {
  InstanceRef inst;
  PathId inquiry = -1;   // PoA -> host
  PathId response = -1;  // host -> PoA
  bool operator==(const AssignmentEntry&) const = default;
};

// One slot's placement/assignment/routing decision.
struct AllocationSlice {
  // per request: assigned instances (well-formed allocations have 0 or 1)
  std::vector<std::vector<AssignmentEntry>> assign;
  // per flat instance index: host nodes (well-formed allocations have 0 or 1)
  std::vector<std::vector<NodeId>> place;

  void init(int n_requests, int n_instances) {
    assign.assign(n_requests, {});
    place.assign(n_instances, {});
  }
  bool supported(RequestId r) const { return !assign[r].empty(); }
  bool operator==(const AllocationSlice&) const = default;
};

struct Allocation {
  std::vector<AllocationSlice> slices;  // slot t lives at slices[t-1]

  AllocationSlice& at(Slot t) { return slices[t - 1]; }
  const AllocationSlice& at(Slot t) const { return slices[t - 1]; }
  int horizon() const { return static_cast<int>(slices.size()); }
  bool operator==(const Allocation&) const = default;

  static Allocation empty(const Scenario& s) {
    Allocation a;
    a.slices.resize(s.horizon);
    for (auto& sl : a.slices) sl.init(s.n_requests(), s.catalog.total());
    return a;
  }
};

enum class DelayModel {
  Restricted,  // congestion per link from requests actually routed through it
  Literal      // congestion from every supported request, link-independent
};

struct ModelConfig {
  DelayModel delay_model = DelayModel::Restricted;
};

// Per-slot aggregated link state used by the delay kernels.
struct LinkLoads {
  std::vector<double> burst;   // sum of (burstiness + packet) per link, membership-counted
  double burst_all = 0.0;      // same sum over all supported requests
  std::vector<double> bw_used; // bandwidth units consumed per link (multiplicity-counted)
};
LinkLoads compute_link_loads(const AllocationSlice& slice, const Scenario& s, const Topology& topo);

// Queueing delay of request r on link l at slot t, ms.
double link_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r,
                  LinkId l, Slot t, const ModelConfig& cfg = {});

// End-to-end delay: inquiry-path links + response-path links + compute term.
double e2e_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t,
                 const ModelConfig& cfg = {});

// Link cost of both chosen paths for r at t.
double path_cost(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t);

// Placement + assignment + path cost summed over a slot / the horizon.
double objective_slice(const AllocationSlice& slice, const Scenario& s, const Topology& topo);
double objective_cost(const Allocation& a, const Scenario& s, const Topology& topo);

// All supported requests' e2e delays for one slot (parallel kernel);
// entry is NaN for unsupported/inactive requests.
std::vector<double> slot_delays(const AllocationSlice& slice, const Scenario& s,
                                const Topology& topo, Slot t, const ModelConfig& cfg = {});

struct DelayBreakdownRow {
  RequestId request = 0;
  Slot slot = 0;
  LinkId link = -1;  // -1 = compute term
  double delay_ms = 0.0;
};
// per-request, per-link additive delay decomposition, CSV
std::string delay_breakdown_csv(const Allocation& a, const Scenario& s, const Topology& topo,
                                const ModelConfig& cfg = {});

struct ConstraintWitness {
  int entity = -1;  // request/instance/node/link id depending on the constraint
  Slot slot = 0;
};
struct ConstraintResult {
  bool pass = true;
  std::vector<ConstraintWitness> witnesses;
};
struct ConstraintReport {
  std::array<ConstraintResult, 12> results;  // index i = constraint i+1
  bool feasible = true;
  std::string to_json() const;
};

// Checks the 12 feasibility conditions; indices 1..12:
//  1 each supported request uses exactly one instance
//  2 assigned instances are placed somewhere
//  3 instance capacity
//  4 node compute capacity
//  5 inquiry path endpoints (PoA -> a host of the assigned instance)
//  6 response path endpoints (same host -> PoA)
//  7 link bandwidth
//  8 path cost accounting matches the stored paths
//  9 link delay accounting matches the congestion model
// 10 e2e delay accounting matches link + compute terms
// 11 per-slot delay cap
// 12 cumulative SLA budget
ConstraintReport check_constraints(const Allocation& a, const Scenario& s, const Topology& topo,
                                   const ModelConfig& cfg = {});

}  // namespace ascetic
