#pragma once

#include "ascetic/model.hpp"

// Naive serial re-implementation of the cost/delay calculus, written straight
// from the definitions with no shared state or caching. Kept only as a test
// oracle and benchmark baseline for the optimized kernels.
namespace ascetic::reference {

double link_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r,
                  LinkId l, Slot t, const ModelConfig& cfg = {});
double e2e_delay(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t,
                 const ModelConfig& cfg = {});
double path_cost(const Allocation& a, const Scenario& s, const Topology& topo, RequestId r, Slot t);
double objective_cost(const Allocation& a, const Scenario& s, const Topology& topo);

}  // namespace ascetic::reference
