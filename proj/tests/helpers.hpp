#pragma once

// Shared fixtures for the unit and acceptance suites: random-but-valid
// allocation draws (structurally well-formed; may oversubscribe capacity,
// which the delay/cost arithmetic must tolerate).

#include <cstdint>
#include <vector>

#include "ascetic/model.hpp"
#include "ascetic/rng.hpp"
#include "ascetic/topology.hpp"
#include "ascetic/workload.hpp"

namespace ascetic::testing {

// Each active request is independently either left unsupported or assigned a
// uniform (instance-of-its-service, host, inquiry, response) tuple; hosts are
// recorded in `place`.
inline Allocation random_allocation(const Topology& topo, const Scenario& scn, Rng& rng,
                                    double support_prob = 0.8) {
  Allocation a = Allocation::empty(scn);
  for (Slot t = 1; t <= scn.horizon; ++t) {
    AllocationSlice& slice = a.at(t);
    for (RequestId r : scn.active_at(t)) {
      if (!rng.bernoulli(support_prob)) continue;
      const Request& q = scn.requests[r];
      NodeId poa = scn.poa_at(r, t);
      NodeId host = rng.uniform_int(0, topo.n_nodes() - 1);
      const auto& inq = topo.paths_between(poa, host);
      const auto& rsp = topo.paths_between(host, poa);
      if (inq.empty() || rsp.empty()) continue;
      int inst = rng.uniform_int(0, scn.catalog.instances_per_service - 1);
      AssignmentEntry e;
      e.inst = {q.service, inst};
      e.inquiry = inq[rng.uniform_int(0, static_cast<int>(inq.size()) - 1)];
      e.response = rsp[rng.uniform_int(0, static_cast<int>(rsp.size()) - 1)];
      slice.assign[r].push_back(e);
      int flat = scn.catalog.flat(q.service, inst);
      bool hosted = false;
      for (NodeId n : slice.place[flat]) hosted |= n == host;
      if (!hosted) slice.place[flat].push_back(host);
    }
  }
  return a;
}

}  // namespace ascetic::testing
