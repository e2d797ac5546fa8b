#include "ascetic/reference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ascetic::reference {

namespace {

// does request r2's slot-t routing traverse link l?
bool traverses(const AllocationSlice& slice, const Topology& topo, RequestId r2, LinkId l) {
  for (const AssignmentEntry& e : slice.assign[r2]) {
    for (LinkId x : topo.paths[e.inquiry].links)
      if (x == l) return true;
    for (LinkId x : topo.paths[e.response].links)
      if (x == l) return true;
  }
  return false;
}

}  // namespace

double link_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r,
                  LinkId l, Slot t, const ModelConfig& cfg) {
  const AllocationSlice& slice = a.at(t);
  double sum = 0.0;
  for (RequestId r2 = 0; r2 < s.n_requests(); ++r2) {
    if (r2 == r) continue;
    if (slice.assign[r2].empty()) continue;
    bool counts = cfg.delay_model == DelayModel::Literal || traverses(slice, topo, r2, l);
    if (counts) sum += s.requests[r2].burstiness + s.requests[r2].max_packet_size;
  }
  return sum / topo.links[l].bandwidth_capacity;
}

double e2e_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t,
                 const ModelConfig& cfg) {
  const AllocationSlice& slice = a.at(t);
  if (slice.assign[r].empty())
    throw std::invalid_argument("reference::e2e_delay: no allocation for request");
  const AssignmentEntry& e = slice.assign[r].front();
  double d = 0.0;
  for (LinkId l : topo.paths[e.inquiry].links) d += reference::link_delay(a, s, topo, r, l, t, cfg);
  for (LinkId l : topo.paths[e.response].links) d += reference::link_delay(a, s, topo, r, l, t, cfg);
  d += s.requests[r].max_packet_size / s.requests[r].min_instance_capacity;
  return d;
}

double path_cost(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t) {
  (void)s;
  const AllocationSlice& slice = a.at(t);
  double c = 0.0;
  for (const AssignmentEntry& e : slice.assign[r]) {
    for (LinkId l : topo.paths[e.inquiry].links) c += topo.links[l].link_cost;
    for (LinkId l : topo.paths[e.response].links) c += topo.links[l].link_cost;
  }
  return c;
}

double objective_cost(const Allocation& a, const Scenario& s, const Topology& topo) {
  double total = 0.0;
  for (Slot t = 1; t <= a.horizon(); ++t) {
    const AllocationSlice& slice = a.at(t);
    for (int i = 0; i < s.catalog.total(); ++i) {
      // each distinct host of a placed instance pays the node's cost
      for (std::size_t h = 0; h < slice.place[i].size(); ++h) {
        bool dup = false;
        for (std::size_t h2 = 0; h2 < h; ++h2)
          if (slice.place[i][h2] == slice.place[i][h]) dup = true;
        if (!dup) total += topo.nodes[slice.place[i][h]].compute_cost;
      }
    }
    for (RequestId r = 0; r < s.n_requests(); ++r)
      for (const AssignmentEntry& e : slice.assign[r]) {
        total += s.catalog.at(e.inst.service, e.inst.index).cost;
        for (LinkId l : topo.paths[e.inquiry].links) total += topo.links[l].link_cost;
        for (LinkId l : topo.paths[e.response].links) total += topo.links[l].link_cost;
      }
  }
  return total;
}

}  // namespace ascetic::reference
