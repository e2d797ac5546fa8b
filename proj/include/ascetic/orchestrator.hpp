#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ascetic/model.hpp"
#include "ascetic/predictor.hpp"
#include "ascetic/rng.hpp"

namespace ascetic {

// Per-slot prediction view: which services each PoA expects next slot, plus
// the transpose (which PoAs expect a given service).
class PredictionTable {
 public:
  void set(NodeId poa, const ServiceSet& services);
  const std::vector<NodeId>& poas_expecting(ServiceId s) const;  // sorted
  bool predicted(NodeId poa, ServiceId s) const;
  std::vector<ServiceId> services() const;  // union over PoAs, sorted
  const std::map<NodeId, ServiceSet>& by_poa() const { return by_poa_; }
  bool empty() const { return by_poa_.empty(); }

 private:
  std::map<NodeId, ServiceSet> by_poa_;
  std::map<ServiceId, std::vector<NodeId>> by_service_;
  static const std::vector<NodeId> kNone;
};

struct OrchestratorConfig {
  double w_delay = 1.0;  // weight of the congestion terms in node scoring
  DelayModel delay_model = DelayModel::Restricted;
  double unsupported_penalty = 1e6;  // per request-slot in the exact objective
  int random_retries = 64;
  bool speculative_placement = true;  // pre-place for predicted-but-absent services
};

// Rolling resource headroom. Everything except sla_consumed is per-slot and
// reset by begin_slot; sla_consumed accumulates across the whole run.
struct ResidualState {
  std::vector<double> node_residual;
  std::vector<double> instance_residual;  // per flat instance
  std::vector<int> instance_host;         // -1 while unplaced this slot
  std::vector<double> link_bw_residual;
  std::vector<double> link_burst;  // committed congestion numerator per link
  std::vector<double> sla_consumed;  // per request, ms

  static ResidualState make(const Topology& topo, const Scenario& s);
  void begin_slot(const Topology& topo, const Scenario& s);
};

struct PoaPathPair {
  NodeId poa = -1;
  PathId inquiry = -1;
  PathId response = -1;
};

struct HostChoice {
  NodeId node = -1;
  double score = 0.0;
  std::vector<PoaPathPair> poa_paths;  // one per scored PoA, ascending PoA id
};

// congestion delay of a path under the committed burst state, ms
double path_congestion_ms(PathId p, const Topology& topo, const ResidualState& res);

// lowest-congestion inquiry/response pair between poa and node; ties keep the
// (hops, cost, id) order of the path lists; nullopt when a direction has no path
std::optional<PoaPathPair> best_path_pair(NodeId poa, NodeId node, const Topology& topo,
                                          const ResidualState& res);

// Scores every non-excluded node that could admit the smallest pending demand
// of service s against the PoA set eta (congestion + path cost + node cost per
// PoA) and returns the argmin; nullopt when no node qualifies.
std::optional<HostChoice> select_host_node(ServiceId s, const std::vector<RequestId>& pending,
                                           const std::vector<NodeId>& eta, const Topology& topo,
                                           const Scenario& scn, const ResidualState& res,
                                           const std::vector<char>& excluded,
                                           const OrchestratorConfig& cfg, Slot t);

// Pours pending requests (tightest deadline first) of service s into the host
// node: fills residual capacity of instances already placed there, then keeps
// placing the cheapest unplaced instance that fits the smallest pending
// demand. Admission = instance/node/bandwidth headroom plus a congestion
// estimate against the per-slot cap and the remaining SLA budget. Assigned
// ids are removed from `pending`.
std::vector<RequestId> water_fill(NodeId host, ServiceId s, std::vector<RequestId>& pending,
                                  AllocationSlice& slice, ResidualState& res, const Topology& topo,
                                  const Scenario& scn, const OrchestratorConfig& cfg, Slot t);

// Prediction-guided placement: predicted service groups first (eta = PoAs
// expecting the service), then a fallback pass over everything still pending
// (eta = the requests' actual PoAs), tightest-deadline groups first; finishes
// with speculative placement and the delay-feasibility sweep.
AllocationSlice wise_place(const PredictionTable& table, const Topology& topo, const Scenario& scn,
                           Slot t, ResidualState& res, const OrchestratorConfig& cfg = {});

// Baseline: per request, up to random_retries uniform draws of (instance,
// node, path pair); first admissible draw wins.
AllocationSlice random_place(const Topology& topo, const Scenario& scn, Slot t, ResidualState& res,
                             Rng& rng, const OrchestratorConfig& cfg = {});

// Baseline: each service gets one sticky node (chosen on first demand by the
// same scoring routine against all PoAs) and never moves.
AllocationSlice ccam_place(const Topology& topo, const Scenario& scn, Slot t, ResidualState& res,
                           std::map<ServiceId, NodeId>& sticky, const OrchestratorConfig& cfg = {});

// Shared per-slot epilogue: recompute true congestion delays, evict the
// largest per-slot-cap/SLA-budget violator until the slot is feasible (lowest
// id on ties), drop placements nothing references (keep_placed exempts
// speculative ones), then charge the consumed SLA budget. Returns evictions.
std::vector<RequestId> finalize_slot(AllocationSlice& slice, ResidualState& res,
                                     const Topology& topo, const Scenario& scn, Slot t,
                                     const OrchestratorConfig& cfg = {},
                                     const std::vector<int>& keep_placed = {});

struct ExactLimits {
  int max_requests = 5;
  int max_slots = 3;
  int max_nodes = 6;
  int max_services = 3;
  int max_paths_per_pair = 2;
};

struct ExactResult {
  Allocation allocation;
  double objective = 0.0;  // cost of the returned allocation
  double penalized = 0.0;  // + unsupported_penalty per unsupported request-slot
  long long leaves = 0;    // feasible leaves visited (search statistics)
};

// Exhaustive branch-and-bound over every joint placement/assignment/routing
// choice; globally optimal under the penalized objective, deterministic
// lexicographic tie-break. Throws std::invalid_argument beyond ExactLimits.
ExactResult exact_solve(const Scenario& scn, const Topology& topo, const ExactLimits& limits = {},
                        const OrchestratorConfig& cfg = {});

}  // namespace ascetic
