#include "ascetic/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace ascetic {

namespace {
constexpr double kTol = 1e-9;

std::vector<int> instances_of(const ServiceCatalog& cat, ServiceId s) {
  std::vector<int> out;
  for (int i = 0; i < cat.instances_per_service; ++i) out.push_back(cat.flat(s, i));
  return out;
}

double min_pending_demand(const Scenario& scn, const std::vector<RequestId>& pending) {
  double m = std::numeric_limits<double>::infinity();
  for (RequestId r : pending) m = std::min(m, scn.requests[r].min_instance_capacity);
  return m;
}

// deadline-tightest first: (per-slot cap, arrival, id)
void sort_by_deadline(std::vector<RequestId>& v, const Scenario& scn) {
  std::sort(v.begin(), v.end(), [&](RequestId a, RequestId b) {
    const Request &qa = scn.requests[a], &qb = scn.requests[b];
    if (qa.max_e2e_delay_ms != qb.max_e2e_delay_ms)
      return qa.max_e2e_delay_ms < qb.max_e2e_delay_ms;
    if (qa.arrival != qb.arrival) return qa.arrival < qb.arrival;
    return a < b;
  });
}

double remaining_budget(const Request& q, const ResidualState& res) {
  return std::min(q.max_e2e_delay_ms, q.sla_budget_ms - res.sla_consumed[q.id]);
}

// admission with explicit paths; commits on success
bool try_admit(RequestId r, int flat, NodeId host, PathId inquiry, PathId response,
               AllocationSlice& slice, ResidualState& res, const Topology& topo,
               const Scenario& scn) {
  const Request& q = scn.requests[r];
  if (res.instance_residual[flat] < q.min_instance_capacity - kTol) return false;
  if (res.node_residual[host] < q.min_instance_capacity - kTol) return false;

  // bandwidth needs, counting links shared by both paths twice
  std::vector<std::pair<LinkId, int>> mult;
  auto count_link = [&](LinkId l) {
    for (auto& m : mult)
      if (m.first == l) {
        ++m.second;
        return;
      }
    mult.push_back({l, 1});
  };
  for (LinkId l : topo.paths[inquiry].links) count_link(l);
  for (LinkId l : topo.paths[response].links) count_link(l);
  for (const auto& [l, k] : mult)
    if (res.link_bw_residual[l] < k * q.min_bandwidth - kTol) return false;

  // congestion estimate against the committed state (own share excluded)
  double est = q.max_packet_size / q.min_instance_capacity;
  for (LinkId l : topo.paths[inquiry].links)
    est += res.link_burst[l] / topo.links[l].bandwidth_capacity;
  for (LinkId l : topo.paths[response].links)
    est += res.link_burst[l] / topo.links[l].bandwidth_capacity;
  if (est > remaining_budget(q, res) + kTol) return false;

  // commit
  res.instance_residual[flat] -= q.min_instance_capacity;
  res.node_residual[host] -= q.min_instance_capacity;
  for (const auto& [l, k] : mult) res.link_bw_residual[l] -= k * q.min_bandwidth;
  for (const auto& [l, k] : mult) {
    (void)k;
    res.link_burst[l] += q.burstiness + q.max_packet_size;
  }
  const InstanceSpec& inst = scn.catalog.instances[flat];
  slice.assign[r].push_back({{inst.service, inst.index}, inquiry, response});
  return true;
}

// assign as many pending requests as admissible to instance `flat` at `host`
bool fill_instance(int flat, NodeId host, std::vector<RequestId>& pending, AllocationSlice& slice,
                   ResidualState& res, const Topology& topo, const Scenario& scn, Slot t) {
  bool any = false;
  for (std::size_t i = 0; i < pending.size();) {
    RequestId r = pending[i];
    auto bp = best_path_pair(scn.poa_at(r, t), host, topo, res);
    if (bp && try_admit(r, flat, host, bp->inquiry, bp->response, slice, res, topo, scn)) {
      pending.erase(pending.begin() + i);
      any = true;
    } else {
      ++i;
    }
  }
  return any;
}

}  // namespace

const std::vector<NodeId> PredictionTable::kNone;

void PredictionTable::set(NodeId poa, const ServiceSet& services) {
  ServiceSet clean = services;
  std::sort(clean.begin(), clean.end());
  clean.erase(std::unique(clean.begin(), clean.end()), clean.end());
  by_poa_[poa] = std::move(clean);
  by_service_.clear();
  for (const auto& [p, svs] : by_poa_)
    for (ServiceId s : svs) by_service_[s].push_back(p);
}

const std::vector<NodeId>& PredictionTable::poas_expecting(ServiceId s) const {
  auto it = by_service_.find(s);
  return it == by_service_.end() ? kNone : it->second;
}

bool PredictionTable::predicted(NodeId poa, ServiceId s) const {
  auto it = by_poa_.find(poa);
  if (it == by_poa_.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), s);
}

std::vector<ServiceId> PredictionTable::services() const {
  std::vector<ServiceId> out;
  for (const auto& [s, poas] : by_service_) {
    (void)poas;
    out.push_back(s);
  }
  return out;
}

ResidualState ResidualState::make(const Topology& topo, const Scenario& s) {
  ResidualState res;
  res.sla_consumed.assign(s.n_requests(), 0.0);
  res.begin_slot(topo, s);
  return res;
}

void ResidualState::begin_slot(const Topology& topo, const Scenario& s) {
  node_residual.resize(topo.n_nodes());
  for (int n = 0; n < topo.n_nodes(); ++n) node_residual[n] = topo.nodes[n].compute_capacity;
  instance_residual.resize(s.catalog.total());
  for (int i = 0; i < s.catalog.total(); ++i)
    instance_residual[i] = s.catalog.instances[i].capacity;
  instance_host.assign(s.catalog.total(), -1);
  link_bw_residual.resize(topo.n_links());
  for (int l = 0; l < topo.n_links(); ++l)
    link_bw_residual[l] = topo.links[l].bandwidth_capacity;
  link_burst.assign(topo.n_links(), 0.0);
}

double path_congestion_ms(PathId p, const Topology& topo, const ResidualState& res) {
  double d = 0.0;
  for (LinkId l : topo.paths[p].links) d += res.link_burst[l] / topo.links[l].bandwidth_capacity;
  return d;
}

std::optional<PoaPathPair> best_path_pair(NodeId poa, NodeId node, const Topology& topo,
                                          const ResidualState& res) {
  const auto& inq = topo.paths_between(poa, node);
  const auto& rsp = topo.paths_between(node, poa);
  if (inq.empty() || rsp.empty()) return std::nullopt;
  auto pick = [&](const std::vector<PathId>& list) {
    PathId best = list.front();
    double bestd = path_congestion_ms(best, topo, res);
    for (std::size_t i = 1; i < list.size(); ++i) {
      double d = path_congestion_ms(list[i], topo, res);
      if (d < bestd - kTol) {
        best = list[i];
        bestd = d;
      }
    }
    return best;
  };
  return PoaPathPair{poa, pick(inq), pick(rsp)};
}

std::optional<HostChoice> select_host_node(ServiceId s, const std::vector<RequestId>& pending,
                                           const std::vector<NodeId>& eta, const Topology& topo,
                                           const Scenario& scn, const ResidualState& res,
                                           const std::vector<char>& excluded,
                                           const OrchestratorConfig& cfg, Slot t) {
  (void)t;
  std::vector<NodeId> poas = eta;
  std::sort(poas.begin(), poas.end());
  poas.erase(std::unique(poas.begin(), poas.end()), poas.end());
  if (poas.empty()) return std::nullopt;
  double min_need = pending.empty() ? 1.0 : min_pending_demand(scn, pending);

  int n_nodes = topo.n_nodes();
  std::vector<double> score(n_nodes, std::numeric_limits<double>::infinity());
  std::vector<std::vector<PoaPathPair>> pairs(n_nodes);
#pragma omp parallel for schedule(static) if (n_nodes >= 16)
  for (NodeId n = 0; n < n_nodes; ++n) {
    if (!excluded.empty() && excluded[n]) continue;
    if (res.node_residual[n] < min_need - kTol) continue;
    bool can_host = false;
    for (int i : instances_of(scn.catalog, s)) {
      if (res.instance_host[i] == n && res.instance_residual[i] >= min_need - kTol) can_host = true;
      if (res.instance_host[i] < 0 && scn.catalog.instances[i].capacity >= min_need - kTol)
        can_host = true;
    }
    if (!can_host) continue;
    double sc = 0.0;
    std::vector<PoaPathPair> pp;
    bool ok = true;
    for (NodeId poa : poas) {
      auto bp = best_path_pair(poa, n, topo, res);
      if (!bp) {
        ok = false;
        break;
      }
      sc += cfg.w_delay * (path_congestion_ms(bp->inquiry, topo, res) +
                           path_congestion_ms(bp->response, topo, res));
      sc += topo.path_link_cost(bp->inquiry) + topo.path_link_cost(bp->response);
      sc += topo.nodes[n].compute_cost;
      pp.push_back(*bp);
    }
    if (!ok) continue;
    score[n] = sc;
    pairs[n] = std::move(pp);
  }
  NodeId best = -1;
  for (NodeId n = 0; n < n_nodes; ++n)
    if (std::isfinite(score[n]) && (best < 0 || score[n] < score[best])) best = n;
  if (best < 0) return std::nullopt;
  HostChoice hc;
  hc.node = best;
  hc.score = score[best];
  hc.poa_paths = std::move(pairs[best]);
  return hc;
}

std::vector<RequestId> water_fill(NodeId host, ServiceId s, std::vector<RequestId>& pending,
                                  AllocationSlice& slice, ResidualState& res, const Topology& topo,
                                  const Scenario& scn, const OrchestratorConfig& cfg, Slot t) {
  (void)cfg;
  std::vector<RequestId> before = pending;
  while (!pending.empty()) {
    bool progressed = false;
    // top up instances already running on this node
    for (int i : instances_of(scn.catalog, s))
      if (res.instance_host[i] == host && res.instance_residual[i] > kTol)
        progressed |= fill_instance(i, host, pending, slice, res, topo, scn, t);
    if (pending.empty()) break;
    // spin up the cheapest instance that fits the smallest remaining demand
    double need = min_pending_demand(scn, pending);
    if (res.node_residual[host] < need - kTol) break;
    int next = -1;
    for (int i : instances_of(scn.catalog, s)) {
      if (res.instance_host[i] >= 0) continue;
      if (scn.catalog.instances[i].capacity < need - kTol) continue;
      if (next < 0 || scn.catalog.instances[i].cost < scn.catalog.instances[next].cost) next = i;
    }
    if (next < 0) {
      if (!progressed) break;
      continue;
    }
    res.instance_host[next] = host;
    slice.place[next] = {host};
    if (!fill_instance(next, host, pending, slice, res, topo, scn, t)) {
      // nobody fit: roll the placement back and stop trying this node
      res.instance_host[next] = -1;
      slice.place[next].clear();
      break;
    }
  }
  std::vector<RequestId> assigned;
  for (RequestId r : before)
    if (std::find(pending.begin(), pending.end(), r) == pending.end()) assigned.push_back(r);
  return assigned;
}

std::vector<RequestId> finalize_slot(AllocationSlice& slice, ResidualState& res,
                                     const Topology& topo, const Scenario& scn, Slot t,
                                     const OrchestratorConfig& cfg,
                                     const std::vector<int>& keep_placed) {
  ModelConfig mc{cfg.delay_model};
  std::vector<RequestId> evicted;
  for (;;) {
    std::vector<double> delays = slot_delays(slice, scn, topo, t, mc);
    RequestId worst = -1;
    double worst_excess = kTol;
    for (RequestId r = 0; r < scn.n_requests(); ++r) {
      if (!slice.supported(r)) continue;
      double excess = delays[r] - remaining_budget(scn.requests[r], res);
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = r;
      }
    }
    if (worst < 0) break;
    slice.assign[worst].clear();
    evicted.push_back(worst);
  }
  // drop placements nothing references, except deliberate speculative ones
  std::vector<char> referenced(scn.catalog.total(), 0);
  for (RequestId r = 0; r < scn.n_requests(); ++r)
    for (const AssignmentEntry& e : slice.assign[r])
      referenced[scn.catalog.flat(e.inst.service, e.inst.index)] = 1;
  for (int i : keep_placed) referenced[i] = 1;
  for (int i = 0; i < scn.catalog.total(); ++i)
    if (!referenced[i] && !slice.place[i].empty()) {
      slice.place[i].clear();
      res.instance_host[i] = -1;
    }
  // charge the budget actually consumed this slot
  std::vector<double> delays = slot_delays(slice, scn, topo, t, mc);
  for (RequestId r = 0; r < scn.n_requests(); ++r)
    if (slice.supported(r)) res.sla_consumed[r] += delays[r];
  return evicted;
}

namespace {

// service groups in tightest-deadline-first order
std::vector<std::pair<ServiceId, std::vector<RequestId>>> grouped(
    const Scenario& scn, const std::vector<RequestId>& reqs) {
  std::map<ServiceId, std::vector<RequestId>> by_service;
  for (RequestId r : reqs) by_service[scn.requests[r].service].push_back(r);
  std::vector<std::pair<ServiceId, std::vector<RequestId>>> out(by_service.begin(),
                                                                by_service.end());
  auto tightest = [&](const std::vector<RequestId>& v) {
    double m = std::numeric_limits<double>::infinity();
    for (RequestId r : v) m = std::min(m, scn.requests[r].max_e2e_delay_ms);
    return m;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    double ta = tightest(a.second), tb = tightest(b.second);
    if (ta != tb) return ta < tb;
    return a.first < b.first;
  });
  for (auto& [s, v] : out) {
    (void)s;
    sort_by_deadline(v, scn);
  }
  return out;
}

// pour one group into nodes picked by select_host_node until nothing fits
void serve_group(ServiceId s, std::vector<RequestId>& group, const std::vector<NodeId>& eta,
                 AllocationSlice& slice, ResidualState& res, const Topology& topo,
                 const Scenario& scn, const OrchestratorConfig& cfg, Slot t) {
  // requests may still fit instances placed earlier (other groups/passes)
  for (int i : instances_of(scn.catalog, s))
    if (res.instance_host[i] >= 0 && res.instance_residual[i] > kTol && !group.empty())
      fill_instance(i, res.instance_host[i], group, slice, res, topo, scn, t);
  std::vector<char> excluded(topo.n_nodes(), 0);
  while (!group.empty()) {
    auto choice = select_host_node(s, group, eta, topo, scn, res, excluded, cfg, t);
    if (!choice) break;
    std::size_t before = group.size();
    water_fill(choice->node, s, group, slice, res, topo, scn, cfg, t);
    if (group.size() == before) excluded[choice->node] = 1;
  }
}

}  // namespace

AllocationSlice wise_place(const PredictionTable& table, const Topology& topo, const Scenario& scn,
                           Slot t, ResidualState& res, const OrchestratorConfig& cfg) {
  res.begin_slot(topo, scn);
  AllocationSlice slice;
  slice.init(scn.n_requests(), scn.catalog.total());

  std::vector<RequestId> active = scn.active_at(t);
  std::vector<RequestId> hinted, rest;
  for (RequestId r : active) {
    if (table.predicted(scn.poa_at(r, t), scn.requests[r].service))
      hinted.push_back(r);
    else
      rest.push_back(r);
  }

  // pass 1: requests the predictions anticipated, guided by the predicted PoAs
  for (auto& [s, group] : grouped(scn, hinted)) {
    std::vector<NodeId> eta = table.poas_expecting(s);
    serve_group(s, group, eta, slice, res, topo, scn, cfg, t);
    for (RequestId r : group) rest.push_back(r);  // leftovers retry in pass 2
  }
  // pass 2: everything else, guided by where the requests actually are
  std::sort(rest.begin(), rest.end());
  for (auto& [s, group] : grouped(scn, rest)) {
    std::vector<NodeId> eta;
    for (RequestId r : group) eta.push_back(scn.poa_at(r, t));
    serve_group(s, group, eta, slice, res, topo, scn, cfg, t);
  }

  // speculative placement: predicted services with no live demand still get
  // one cheapest instance at their best node, so next slot starts warm
  std::vector<int> speculative;
  if (cfg.speculative_placement) {
    std::set<ServiceId> live, ever;
    for (RequestId r : active) live.insert(scn.requests[r].service);
    for (const Request& q : scn.requests) ever.insert(q.service);
    for (ServiceId s : table.services()) {
      // predictors may nominate services nobody in this workload ever asks
      // for (tie-breaks at zero evidence); placing those is pure waste
      if (live.count(s) || !ever.count(s)) continue;
      auto choice = select_host_node(s, {}, table.poas_expecting(s), topo, scn, res,
                                     std::vector<char>(topo.n_nodes(), 0), cfg, t);
      if (!choice) continue;
      int pick = -1;
      for (int i : instances_of(scn.catalog, s))
        if (res.instance_host[i] < 0 &&
            (pick < 0 || scn.catalog.instances[i].cost < scn.catalog.instances[pick].cost))
          pick = i;
      if (pick < 0) continue;
      res.instance_host[pick] = choice->node;
      slice.place[pick] = {choice->node};
      speculative.push_back(pick);
    }
  }

  finalize_slot(slice, res, topo, scn, t, cfg, speculative);
  return slice;
}

AllocationSlice random_place(const Topology& topo, const Scenario& scn, Slot t, ResidualState& res,
                             Rng& rng, const OrchestratorConfig& cfg) {
  res.begin_slot(topo, scn);
  AllocationSlice slice;
  slice.init(scn.n_requests(), scn.catalog.total());
  for (RequestId r : scn.active_at(t)) {
    const Request& q = scn.requests[r];
    NodeId poa = scn.poa_at(r, t);
    for (int attempt = 0; attempt < cfg.random_retries; ++attempt) {
      int flat = scn.catalog.flat(q.service, rng.uniform_int(0, scn.catalog.instances_per_service - 1));
      NodeId node = rng.uniform_int(0, topo.n_nodes() - 1);
      if (res.instance_host[flat] >= 0 && res.instance_host[flat] != node) continue;
      const auto& inq = topo.paths_between(poa, node);
      const auto& rsp = topo.paths_between(node, poa);
      if (inq.empty() || rsp.empty()) continue;
      PathId p1 = inq[rng.bounded(inq.size())];
      PathId p2 = rsp[rng.bounded(rsp.size())];
      bool fresh = res.instance_host[flat] < 0;
      if (fresh) {
        res.instance_host[flat] = node;
        slice.place[flat] = {node};
      }
      if (try_admit(r, flat, node, p1, p2, slice, res, topo, scn)) break;
      if (fresh) {
        res.instance_host[flat] = -1;
        slice.place[flat].clear();
      }
    }
  }
  finalize_slot(slice, res, topo, scn, t, cfg);
  return slice;
}

AllocationSlice ccam_place(const Topology& topo, const Scenario& scn, Slot t, ResidualState& res,
                           std::map<ServiceId, NodeId>& sticky, const OrchestratorConfig& cfg) {
  res.begin_slot(topo, scn);
  AllocationSlice slice;
  slice.init(scn.n_requests(), scn.catalog.total());
  for (auto& [s, group] : grouped(scn, scn.active_at(t))) {
    auto it = sticky.find(s);
    if (it == sticky.end()) {
      auto choice = select_host_node(s, group, topo.poa_nodes, topo, scn, res,
                                     std::vector<char>(topo.n_nodes(), 0), cfg, t);
      if (!choice) continue;  // nothing feasible anywhere; retry next slot
      it = sticky.emplace(s, choice->node).first;
    }
    water_fill(it->second, s, group, slice, res, topo, scn, cfg, t);
  }
  finalize_slot(slice, res, topo, scn, t, cfg);
  return slice;
}

}  // namespace ascetic
