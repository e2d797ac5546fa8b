#include "ascetic/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ascetic {

namespace {

constexpr double kTol = 1e-9;

double tol_for(double expect) { return kTol * std::max(1.0, std::fabs(expect)); }

void check_dims(const AllocationSlice& slice, const Scenario& s) {
  if (static_cast<int>(slice.assign.size()) != s.n_requests() ||
      static_cast<int>(slice.place.size()) != s.catalog.total())
    throw std::invalid_argument("allocation slice dimensions do not match scenario");
}

// every link the request's chosen paths touch, deduplicated
std::vector<LinkId> touched_links(const AllocationSlice& slice, const Topology& topo, RequestId r) {
  std::vector<LinkId> ls;
  for (const AssignmentEntry& e : slice.assign[r]) {
    for (LinkId l : topo.paths[e.inquiry].links) ls.push_back(l);
    for (LinkId l : topo.paths[e.response].links) ls.push_back(l);
  }
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  return ls;
}

double e2e_from_loads(const AllocationSlice& slice, const LinkLoads& loads, const Scenario& s,
                      const Topology& topo, RequestId r, const ModelConfig& cfg) {
  if (!slice.supported(r)) return std::numeric_limits<double>::quiet_NaN();
  const Request& q = s.requests[r];
  const AssignmentEntry& e = slice.assign[r].front();
  double own = q.burstiness + q.max_packet_size;
  double d = 0.0;
  auto add_path = [&](PathId p) {
    for (LinkId l : topo.paths[p].links) {
      double others;
      if (cfg.delay_model == DelayModel::Literal) {
        others = loads.burst_all - own;
      } else {
        others = loads.burst[l] - own;  // r traverses l, so subtract its own share
      }
      d += others / topo.links[l].bandwidth_capacity;
    }
  };
  add_path(e.inquiry);
  add_path(e.response);
  d += q.max_packet_size / q.min_instance_capacity;
  return d;
}

}  // namespace

LinkLoads compute_link_loads(const AllocationSlice& slice, const Scenario& s, const Topology& topo) {
  check_dims(slice, s);
  LinkLoads loads;
  loads.burst.assign(topo.n_links(), 0.0);
  loads.bw_used.assign(topo.n_links(), 0.0);
  for (RequestId r = 0; r < s.n_requests(); ++r) {
    if (!slice.supported(r)) continue;
    const Request& q = s.requests[r];
    double contrib = q.burstiness + q.max_packet_size;
    loads.burst_all += contrib;
    for (LinkId l : touched_links(slice, topo, r)) loads.burst[l] += contrib;
    for (const AssignmentEntry& e : slice.assign[r]) {
      for (LinkId l : topo.paths[e.inquiry].links) loads.bw_used[l] += q.min_bandwidth;
      for (LinkId l : topo.paths[e.response].links) loads.bw_used[l] += q.min_bandwidth;
    }
  }
  return loads;
}

double link_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r,
                  LinkId l, Slot t, const ModelConfig& cfg) {
  const AllocationSlice& slice = a.at(t);
  check_dims(slice, s);
  if (l < 0 || l >= topo.n_links()) throw std::out_of_range("link_delay: bad link id");
  if (!slice.supported(r)) throw std::invalid_argument("link_delay: no allocation for request");
  LinkLoads loads = compute_link_loads(slice, s, topo);
  double own = 0.0;
  if (slice.supported(r)) {
    const Request& q = s.requests[r];
    if (cfg.delay_model == DelayModel::Literal) {
      own = q.burstiness + q.max_packet_size;
    } else {
      std::vector<LinkId> mine = touched_links(slice, topo, r);
      if (std::binary_search(mine.begin(), mine.end(), l)) own = q.burstiness + q.max_packet_size;
    }
  }
  double others = (cfg.delay_model == DelayModel::Literal ? loads.burst_all : loads.burst[l]) - own;
  return others / topo.links[l].bandwidth_capacity;
}

double e2e_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t,
                 const ModelConfig& cfg) {
  const AllocationSlice& slice = a.at(t);
  check_dims(slice, s);
  if (!slice.supported(r)) throw std::invalid_argument("e2e_delay: no allocation for request");
  LinkLoads loads = compute_link_loads(slice, s, topo);
  return e2e_from_loads(slice, loads, s, topo, r, cfg);
}

double path_cost(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t) {
  const AllocationSlice& slice = a.at(t);
  check_dims(slice, s);
  if (!slice.supported(r)) throw std::invalid_argument("path_cost: no allocation for request");
  double c = 0.0;
  for (const AssignmentEntry& e : slice.assign[r])
    c += topo.path_link_cost(e.inquiry) + topo.path_link_cost(e.response);
  return c;
}

double objective_slice(const AllocationSlice& slice, const Scenario& s, const Topology& topo) {
  check_dims(slice, s);
  double total = 0.0;
  for (int i = 0; i < s.catalog.total(); ++i) {
    std::vector<NodeId> hosts = slice.place[i];
    std::sort(hosts.begin(), hosts.end());
    hosts.erase(std::unique(hosts.begin(), hosts.end()), hosts.end());
    for (NodeId n : hosts) total += topo.nodes[n].compute_cost;
  }
  for (RequestId r = 0; r < s.n_requests(); ++r) {
    for (const AssignmentEntry& e : slice.assign[r]) {
      total += s.catalog.at(e.inst.service, e.inst.index).cost;
      total += topo.path_link_cost(e.inquiry) + topo.path_link_cost(e.response);
    }
  }
  return total;
}

double objective_cost(const Allocation& a, const Scenario& s, const Topology& topo) {
  double total = 0.0;
  for (const AllocationSlice& slice : a.slices) total += objective_slice(slice, s, topo);
  return total;
}

std::vector<double> slot_delays(const AllocationSlice& slice, const Scenario& s,
                                const Topology& topo, Slot t, const ModelConfig& cfg) {
  (void)t;
  check_dims(slice, s);
  LinkLoads loads = compute_link_loads(slice, s, topo);
  int n = s.n_requests();
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
#pragma omp parallel for schedule(static) if (n >= 64)
  for (RequestId r = 0; r < n; ++r) out[r] = e2e_from_loads(slice, loads, s, topo, r, cfg);
  return out;
}

std::string delay_breakdown_csv(const Allocation& a, const Scenario& s, const Topology& topo,
                                const ModelConfig& cfg) {
  std::ostringstream os;
  os << "request,slot,link,delay_ms\n";
  char buf[64];
  for (Slot t = 1; t <= a.horizon(); ++t) {
    const AllocationSlice& slice = a.at(t);
    check_dims(slice, s);
    LinkLoads loads = compute_link_loads(slice, s, topo);
    for (RequestId r = 0; r < s.n_requests(); ++r) {
      if (!slice.supported(r)) continue;
      const Request& q = s.requests[r];
      double own = q.burstiness + q.max_packet_size;
      const AssignmentEntry& e = slice.assign[r].front();
      auto emit = [&](LinkId l, double d) {
        std::snprintf(buf, sizeof(buf), "%.9g", d);
        os << r << ',' << t << ',' << l << ',' << buf << '\n';
      };
      for (PathId p : {e.inquiry, e.response})
        for (LinkId l : topo.paths[p].links) {
          double others =
              (cfg.delay_model == DelayModel::Literal ? loads.burst_all : loads.burst[l]) - own;
          emit(l, others / topo.links[l].bandwidth_capacity);
        }
      emit(-1, q.max_packet_size / q.min_instance_capacity);
    }
  }
  return os.str();
}

ConstraintReport check_constraints(const Allocation& a, const Scenario& s, const Topology& topo,
                                   const ModelConfig& cfg) {
  ConstraintReport rep;
  auto flag = [&](int c, int entity, Slot t) {
    rep.results[c - 1].pass = false;
    rep.results[c - 1].witnesses.push_back({entity, t});
  };
  if (a.horizon() != s.horizon)
    throw std::invalid_argument("check_constraints: allocation horizon mismatch");

  std::vector<double> sla_used(s.n_requests(), 0.0);
  std::vector<Slot> last_active(s.n_requests(), 0);

  for (Slot t = 1; t <= s.horizon; ++t) {
    const AllocationSlice& slice = a.at(t);
    check_dims(slice, s);
    LinkLoads loads = compute_link_loads(slice, s, topo);

    // C1: exactly one instance of the right service, only while active
    for (RequestId r = 0; r < s.n_requests(); ++r) {
      const auto& entries = slice.assign[r];
      if (entries.empty()) continue;
      bool ok = s.active(r, t) && entries.size() == 1;
      for (const AssignmentEntry& e : entries) {
        if (e.inst.service != s.requests[r].service || e.inst.index < 0 ||
            e.inst.index >= s.catalog.instances_per_service)
          ok = false;
        if (e.inquiry < 0 || e.inquiry >= topo.n_paths() || e.response < 0 ||
            e.response >= topo.n_paths())
          throw std::out_of_range("check_constraints: assignment references unknown path");
      }
      if (!ok) flag(1, r, t);
    }

    // C2: assigned instances are placed
    for (RequestId r = 0; r < s.n_requests(); ++r)
      for (const AssignmentEntry& e : slice.assign[r]) {
        int fi = s.catalog.flat(e.inst.service, e.inst.index);
        if (slice.place[fi].empty()) flag(2, fi, t);
      }

    // C3: instance capacity
    {
      std::vector<double> used(s.catalog.total(), 0.0);
      for (RequestId r = 0; r < s.n_requests(); ++r)
        for (const AssignmentEntry& e : slice.assign[r])
          used[s.catalog.flat(e.inst.service, e.inst.index)] += s.requests[r].min_instance_capacity;
      for (int i = 0; i < s.catalog.total(); ++i)
        if (used[i] > s.catalog.instances[i].capacity + kTol) flag(3, i, t);
    }

    // C4: node compute capacity (hosted assigned demand per node)
    {
      std::vector<double> inst_demand(s.catalog.total(), 0.0);
      for (RequestId r = 0; r < s.n_requests(); ++r)
        for (const AssignmentEntry& e : slice.assign[r])
          inst_demand[s.catalog.flat(e.inst.service, e.inst.index)] +=
              s.requests[r].min_instance_capacity;
      std::vector<double> node_used(topo.n_nodes(), 0.0);
      for (int i = 0; i < s.catalog.total(); ++i) {
        std::vector<NodeId> hosts = slice.place[i];
        std::sort(hosts.begin(), hosts.end());
        hosts.erase(std::unique(hosts.begin(), hosts.end()), hosts.end());
        for (NodeId n : hosts) {
          if (n < 0 || n >= topo.n_nodes())
            throw std::out_of_range("check_constraints: placement references unknown node");
          node_used[n] += inst_demand[i];
        }
      }
      for (NodeId n = 0; n < topo.n_nodes(); ++n)
        if (node_used[n] > topo.nodes[n].compute_capacity + kTol) flag(4, n, t);
    }

    // C5/C6: path endpoints tie PoA, host and orientation together
    for (RequestId r = 0; r < s.n_requests(); ++r) {
      if (slice.assign[r].empty() || !s.active(r, t)) continue;
      NodeId poa = s.poa_at(r, t);
      for (const AssignmentEntry& e : slice.assign[r]) {
        const Path& inq = topo.paths[e.inquiry];
        const Path& rsp = topo.paths[e.response];
        int fi = s.catalog.flat(e.inst.service, e.inst.index);
        const auto& hosts = slice.place[fi];
        bool host_ok = std::find(hosts.begin(), hosts.end(), inq.tail) != hosts.end();
        if (inq.head != poa || !host_ok) flag(5, r, t);
        if (rsp.head != inq.tail || rsp.tail != poa) flag(6, r, t);
      }
    }

    // C7: link bandwidth
    for (LinkId l = 0; l < topo.n_links(); ++l)
      if (loads.bw_used[l] > topo.links[l].bandwidth_capacity + kTol) flag(7, l, t);

    // C8: stored path cost equals the incidence-based recomputation
    {
      Allocation view;  // single-slot view for the public accessors
      view.slices.push_back(slice);
      for (RequestId r = 0; r < s.n_requests(); ++r) {
        if (slice.assign[r].empty()) continue;
        double direct = path_cost(view, s, topo, r, 1);
        double via_incidence = 0.0;
        for (const AssignmentEntry& e : slice.assign[r])
          for (LinkId l = 0; l < topo.n_links(); ++l)
            via_incidence += (topo.incidence(e.inquiry, l) + topo.incidence(e.response, l)) *
                             topo.links[l].link_cost;
        if (std::fabs(direct - via_incidence) > tol_for(via_incidence)) flag(8, r, t);
      }
    }

    // C9/C10: delay accounting identities, then C11/C12 bounds
    {
      Allocation view;
      view.slices.push_back(slice);
      std::vector<double> delays = slot_delays(slice, s, topo, t, cfg);
      for (RequestId r = 0; r < s.n_requests(); ++r) {
        if (slice.assign[r].empty()) continue;
        const Request& q = s.requests[r];
        const AssignmentEntry& e = slice.assign[r].front();
        double net = 0.0;
        bool c9_ok = true;
        for (PathId p : {e.inquiry, e.response})
          for (LinkId l : topo.paths[p].links) {
            // independent recomputation of the congestion sum
            double others = 0.0;
            for (RequestId r2 = 0; r2 < s.n_requests(); ++r2) {
              if (r2 == r || !slice.supported(r2)) continue;
              bool member = true;
              if (cfg.delay_model == DelayModel::Restricted) {
                std::vector<LinkId> ls2 = touched_links(slice, topo, r2);
                member = std::binary_search(ls2.begin(), ls2.end(), l);
              }
              if (member) others += s.requests[r2].burstiness + s.requests[r2].max_packet_size;
            }
            double expect = others / topo.links[l].bandwidth_capacity;
            double got = link_delay(view, s, topo, r, l, 1, cfg);
            if (std::fabs(got - expect) > tol_for(expect)) c9_ok = false;
            net += expect;
          }
        if (!c9_ok) flag(9, r, t);
        double expect_e2e = net + q.max_packet_size / q.min_instance_capacity;
        if (std::fabs(delays[r] - expect_e2e) > tol_for(expect_e2e)) flag(10, r, t);
        if (delays[r] > q.max_e2e_delay_ms + kTol) flag(11, r, t);
        sla_used[r] += delays[r];
        last_active[r] = t;
      }
    }
  }

  for (RequestId r = 0; r < s.n_requests(); ++r)
    if (sla_used[r] > s.requests[r].sla_budget_ms + kTol) flag(12, r, last_active[r]);

  rep.feasible = true;
  for (const ConstraintResult& cr : rep.results) rep.feasible = rep.feasible && cr.pass;
  return rep;
}

std::string ConstraintReport::to_json() const {
  nlohmann::json j;
  j["feasible"] = feasible;
  j["constraints"] = nlohmann::json::array();
  for (int c = 0; c < 12; ++c) {
    nlohmann::json jc;
    jc["name"] = "C" + std::to_string(c + 1);
    jc["pass"] = results[c].pass;
    jc["witnesses"] = nlohmann::json::array();
    for (const ConstraintWitness& w : results[c].witnesses)
      jc["witnesses"].push_back({{"entity", w.entity}, {"slot", w.slot}});
    j["constraints"].push_back(std::move(jc));
  }
  return j.dump(2);
}

}  // namespace ascetic
